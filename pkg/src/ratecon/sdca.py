"""Stochastic dual coordinate ascent for the per-example weighted SVM.

Minimizing the mashed-together subproblem over w for fixed bias and
multipliers is equivalent to maximizing a box-constrained dual: one
variable xi per example with -a_minus <= xi <= a_plus, and the primal
mirror w = -(1/(lambda n)) sum xi x.  Coordinates are sampled uniformly
with replacement from an injected generator; the duality gap is checked
once per epoch (n updates).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import sdca_epoch
from .errors import SolverError
from .subproblem import ConvexSubproblem, per_example_loss


@dataclass
class DualState:
    """Dual variables, their primal mirror, and the last certified values.

    Values are in "svm units": average loss + (lambda/2)||w||^2 - <v, gamma_tilde>
    for the primal, and the corresponding conjugate expression for the dual.
    Weak duality gives primal_value >= dual_value.
    """

    xi: np.ndarray
    w: np.ndarray
    primal_value: float = np.inf
    dual_value: float = -np.inf
    epochs: int = 0

    @property
    def gap(self) -> float:
        return self.primal_value - self.dual_value


def fresh_state(sub: ConvexSubproblem) -> DualState:
    return DualState(xi=np.zeros(sub.n), w=np.zeros(sub.problem.dim))


def clamp_state(state: DualState, a_plus: np.ndarray, a_minus: np.ndarray,
                sub: ConvexSubproblem) -> DualState:
    """Re-box the dual variables after the coefficient box moved (new v)."""
    xi = np.clip(state.xi, -a_minus, a_plus)
    return DualState(xi=xi, w=mirror_w(sub, xi))


def mirror_w(sub: ConvexSubproblem, xi: np.ndarray) -> np.ndarray:
    """Recompute the primal mirror from scratch: -(1/(lambda n)) sum xi x."""
    return -sub.matrix.T.dot(xi) / (sub.problem.lam * sub.n)


def conjugate_loss(xi, a_plus, a_minus):
    """Fenchel conjugate of the two-sided hinge loss, on its box domain."""
    return 0.5 * np.abs(xi - a_plus + a_minus) - 0.5 * (a_plus + a_minus)


def primal_dual_values(sub: ConvexSubproblem, a_plus, a_minus,
                       state: DualState, b: float, v_dot_gamma: float,
                       ) -> tuple[float, float]:
    lam = sub.problem.lam
    n = sub.n
    z = sub.matrix.dot(state.w) - b
    reg = 0.5 * lam * float(state.w @ state.w)
    primal = float(np.sum(per_example_loss(z, a_plus, a_minus))) / n + reg - v_dot_gamma
    dual = (-float(np.sum(conjugate_loss(state.xi, a_plus, a_minus))) / n
            - reg - b * float(np.sum(state.xi)) / n - v_dot_gamma)
    return primal, dual


def sdca_optimize(sub: ConvexSubproblem,
                  a_plus: np.ndarray,
                  a_minus: np.ndarray,
                  b: float,
                  eps_gap: float,
                  rng: np.random.Generator,
                  state: DualState | None = None,
                  v_dot_gamma: float = 0.0,
                  max_epochs: int = 20000,
                  gap_callback=None) -> DualState:
    """Run epochs until the certified duality gap drops to eps_gap.

    ``state`` warm-starts the dual variables (callers clamp them whenever
    the box moved).  Raises SolverError carrying the best state when the
    epoch cap is exceeded.  Weak duality (gap >= 0) is asserted at every
    check, up to accumulation noise.
    """
    if state is None:
        state = fresh_state(sub)
    lam = sub.problem.lam
    n = sub.n
    inv_lambda_n = 1.0 / (lam * n)
    sq_over = sub.row_sq_norms * inv_lambda_n
    mat = sub.matrix

    primal, dual = primal_dual_values(sub, a_plus, a_minus, state, b, v_dot_gamma)
    state.primal_value, state.dual_value = primal, dual
    if gap_callback is not None:
        gap_callback(state, eps_gap)
    if state.gap <= eps_gap:
        return state

    indptr = mat.indptr.astype(np.int64, copy=False)
    indices = mat.indices.astype(np.int32, copy=False)
    values = mat.data
    for _ in range(max_epochs):
        order = rng.integers(0, n, size=n)
        sdca_epoch(indptr, indices, values, sq_over, a_plus, a_minus,
                   order, state.xi, state.w, float(b), inv_lambda_n)
        state.epochs += 1
        primal, dual = primal_dual_values(sub, a_plus, a_minus, state, b, v_dot_gamma)
        if dual > primal + 1e-9 * (1.0 + abs(primal)):
            raise SolverError(
                f"weak duality violated: dual {dual!r} > primal {primal!r}",
                best=state)
        state.primal_value, state.dual_value = primal, dual
        if gap_callback is not None:
            gap_callback(state, eps_gap)
        if state.gap <= eps_gap:
            return state
    raise SolverError(
        f"SDCA epoch cap {max_epochs} exceeded (gap {state.gap:.3g} > "
        f"target {eps_gap:.3g})", best=state)
