"""Convex subproblem anchored at a candidate classifier.

The anchor decides, example by example, whether each ramp term is bounded
by the hinge max(0, 1/2 + z) or by the constant 1.  With that choice made,
all datasets are mashed into one example pool with per-example hinge
coefficients, the constant branches are folded into shifted constraint
bounds and a scalar objective offset, and evaluating the Lagrangian for
fixed multipliers reduces to a per-example weighted SVM.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, InfeasibleError
from .problem import NEGATIVE, POSITIVE, ConstrainedProblem
from .rates import LinearClassifier, evaluate_combination


def per_example_loss(z, a_plus, a_minus):
    """a_plus * max(0, 1/2 + z) + a_minus * max(0, 1/2 - z), elementwise."""
    z = np.asarray(z, dtype=np.float64)
    return (a_plus * np.maximum(0.0, 0.5 + z)
            + a_minus * np.maximum(0.0, 0.5 - z))


@dataclass(frozen=True, eq=False)
class ConvexSubproblem:
    """A constrained problem plus the anchor that fixes the convex bounds."""

    problem: ConstrainedProblem
    anchor: LinearClassifier

    def __post_init__(self):
        if self.anchor.dim != self.problem.dim:
            raise ConfigError("anchor dimension does not match problem")

    # -- mashed example pool ------------------------------------------------

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return self.problem.active_ids

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.array([self.problem.datasets[i].size for i in self.ids])

    @cached_property
    def n(self) -> int:
        return int(self.sizes.sum())

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        return sp.vstack(
            [self.problem.datasets[i].matrix for i in self.ids], format="csr")

    @cached_property
    def row_sq_norms(self) -> np.ndarray:
        return np.concatenate(
            [self.problem.datasets[i].row_sq_norms for i in self.ids])

    @cached_property
    def anchor_margins(self) -> np.ndarray:
        return self.matrix.dot(self.anchor.w) - self.anchor.b

    @cached_property
    def active_pos(self) -> np.ndarray:
        """True where the positive-side bound keeps the hinge (anchor margin <= 1/2)."""
        return self.anchor_margins <= 0.5

    @cached_property
    def active_neg(self) -> np.ndarray:
        return self.anchor_margins >= -0.5

    def _dataset_slices(self):
        stops = np.cumsum(self.sizes)
        starts = np.concatenate(([0], stops[:-1]))
        return {name: slice(int(a), int(b))
                for name, a, b in zip(self.ids, starts, stops)}

    @cached_property
    def slices(self) -> dict:
        return self._dataset_slices()

    # -- per-example coefficients (scaled by n / |D_i|) ----------------------

    def _spread(self, combo) -> tuple[np.ndarray, np.ndarray]:
        """Per-example scaled (positive, negative) coefficient arrays.

        Hinge-inactive examples get zero; their constant-1 mass is handled
        separately (gamma_tilde / offset).
        """
        plus = np.zeros(self.n)
        minus = np.zeros(self.n)
        for name in self.ids:
            sl = self.slices[name]
            scale = self.n / self.problem.datasets[name].size
            cp = combo.coefficient(name, POSITIVE)
            cn = combo.coefficient(name, NEGATIVE)
            if cp:
                plus[sl] = scale * cp
            if cn:
                minus[sl] = scale * cn
        plus *= self.active_pos
        minus *= self.active_neg
        return plus, minus

    def _constant_mass(self, combo) -> float:
        """Sum over datasets of the constant-1 branch contributions."""
        total = 0.0
        for name in self.ids:
            sl = self.slices[name]
            size = self.problem.datasets[name].size
            cp = combo.coefficient(name, POSITIVE)
            cn = combo.coefficient(name, NEGATIVE)
            if cp:
                total += cp * float(np.count_nonzero(~self.active_pos[sl])) / size
            if cn:
                total += cn * float(np.count_nonzero(~self.active_neg[sl])) / size
        return total

    @cached_property
    def base_plus(self) -> np.ndarray:
        return self._spread(self.problem.objective)[0]

    @cached_property
    def base_minus(self) -> np.ndarray:
        return self._spread(self.problem.objective)[1]

    @cached_property
    def con_plus(self) -> np.ndarray:
        m = self.problem.num_constraints
        out = np.zeros((m, self.n))
        for j, c in enumerate(self.problem.constraints):
            out[j] = self._spread(c.lhs)[0]
        return out

    @cached_property
    def con_minus(self) -> np.ndarray:
        m = self.problem.num_constraints
        out = np.zeros((m, self.n))
        for j, c in enumerate(self.problem.constraints):
            out[j] = self._spread(c.lhs)[1]
        return out

    @cached_property
    def gamma(self) -> np.ndarray:
        return self.problem.bounds

    @cached_property
    def gamma_tilde(self) -> np.ndarray:
        """Constraint bounds with the constant-1 branch mass subtracted."""
        return self.gamma - np.array(
            [self._constant_mass(c.lhs) for c in self.problem.constraints])

    @cached_property
    def offset(self) -> float:
        """Objective constant mass (plus the combination's own constant)."""
        return self._constant_mass(self.problem.objective) + self.problem.objective.constant

    def combined_coefficients(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-example hinge weights for multipliers v: box bounds of the dual."""
        v = np.asarray(v, dtype=np.float64)
        a_plus = self.base_plus.copy()
        a_minus = self.base_minus.copy()
        if v.size:
            a_plus += v @ self.con_plus
            a_minus += v @ self.con_minus
        return a_plus, a_minus

    def lipschitz_constant(self, v: np.ndarray) -> float:
        """Worst-case per-example loss slope max_i (n/|D_i|) * (coefficient sums)."""
        v = np.asarray(v, dtype=np.float64)
        worst = 0.0
        for j_name in self.ids:
            size = self.problem.datasets[j_name].size
            total = (self.problem.objective.coefficient(j_name, POSITIVE)
                     + self.problem.objective.coefficient(j_name, NEGATIVE))
            for j, c in enumerate(self.problem.constraints):
                total += v[j] * (c.lhs.coefficient(j_name, POSITIVE)
                                 + c.lhs.coefficient(j_name, NEGATIVE))
            worst = max(worst, (self.n / size) * total)
        return worst

    def coefficient_sum(self, v: np.ndarray) -> float:
        """Sum_i (alpha_i + beta_i + sum_j v_j (alpha_i^j + beta_i^j))."""
        v = np.asarray(v, dtype=np.float64)
        total = 0.0
        for name in self.ids:
            total += (self.problem.objective.coefficient(name, POSITIVE)
                      + self.problem.objective.coefficient(name, NEGATIVE))
            for j, c in enumerate(self.problem.constraints):
                total += v[j] * (c.lhs.coefficient(name, POSITIVE)
                                 + c.lhs.coefficient(name, NEGATIVE))
        return total

    # -- evaluation ----------------------------------------------------------

    def margins(self, w: np.ndarray, b: float) -> np.ndarray:
        return self.matrix.dot(w) - b

    def objective_bound_value(self, w: np.ndarray, b: float,
                              margins: np.ndarray | None = None) -> float:
        """Convex-bound objective (rates part plus constants, no regularizer)."""
        z = self.margins(w, b) if margins is None else margins
        loss = per_example_loss(z, self.base_plus, self.base_minus)
        return float(np.sum(loss)) / self.n + self.offset

    def constraint_bound_values(self, w: np.ndarray, b: float,
                                margins: np.ndarray | None = None) -> np.ndarray:
        """Convex-bound constraint left-hand sides (length m)."""
        m = self.problem.num_constraints
        if m == 0:
            return np.zeros(0)
        z = self.margins(w, b) if margins is None else margins
        hp = np.maximum(0.0, 0.5 + z)
        hn = np.maximum(0.0, 0.5 - z)
        vals = (self.con_plus @ hp + self.con_minus @ hn) / self.n
        return vals + (self.gamma - self.gamma_tilde)

    def psi(self, w: np.ndarray, b: float, v: np.ndarray) -> float:
        """Lagrangian value: bound objective + regularizer + v . (constraints - bounds)."""
        z = self.margins(w, b)
        a_plus, a_minus = self.combined_coefficients(v)
        loss = float(np.sum(per_example_loss(z, a_plus, a_minus))) / self.n
        reg = 0.5 * self.problem.lam * float(w @ w)
        v = np.asarray(v, dtype=np.float64)
        return loss + reg - float(v @ self.gamma_tilde) + self.offset

    def psi_gradient_v(self, w: np.ndarray, b: float) -> np.ndarray:
        """d psi / d v: constraint bound values minus bounds (exact, affine in v)."""
        return self.constraint_bound_values(w, b) - self.gamma

    def check_anchor_feasible(self, feas_tol: float) -> None:
        viol = self.anchor_ramp_violation()
        if viol > feas_tol:
            j = int(np.argmax(self.anchor_ramp_violations()))
            raise InfeasibleError(
                f"anchor violates ramp constraint {j} by {viol:.3g} "
                f"(tolerance {feas_tol:.3g})",
                constraint_index=j, violation=viol)

    def anchor_ramp_violations(self) -> np.ndarray:
        vals = np.array([
            evaluate_combination(c.lhs, self.problem.datasets, self.anchor, "ramp")
            for c in self.problem.constraints])
        return vals - self.gamma if vals.size else np.zeros(0)

    def anchor_ramp_violation(self) -> float:
        v = self.anchor_ramp_violations()
        return float(v.max()) if v.size else 0.0


def feasible_bias_interval(sub: ConvexSubproblem, w: np.ndarray,
                           ) -> tuple[float, float] | None:
    """Bias range on which every convex-bound constraint holds, or None.

    Each constraint value is convex piecewise-linear in b (hinge terms are
    monotone in b on each side), so the feasible set is an interval; its
    endpoints are found exactly on the piecewise-linear flanks.
    """
    m = sub.problem.num_constraints
    if m == 0:
        return (-np.inf, np.inf)
    wx = sub.matrix.dot(w)
    lo, hi = -np.inf, np.inf
    for j in range(m):
        interval = _constraint_bias_interval(
            wx, sub.con_plus[j], sub.con_minus[j], sub.n,
            float(sub.gamma_tilde[j]))
        if interval is None:
            return None
        lo = max(lo, interval[0])
        hi = min(hi, interval[1])
        if lo > hi:
            return None
    return (lo, hi)


def _constraint_bias_interval(wx, cp, cm, n, gamma_tilde):
    """{b : (1/n)(sum cp*max(0,.5+wx-b) + cm*max(0,.5-wx+b)) <= gamma_tilde}.

    The value is convex piecewise-linear in b, so the set is an interval.
    Its minimum over b is attained at a hinge breakpoint (or persists to
    +-infinity when one side has no terms), and the endpoints are linear
    interpolations on the two monotone flanks.
    """
    pos_idx = np.flatnonzero(cp)
    neg_idx = np.flatnonzero(cm)
    order_p = np.argsort(wx[pos_idx], kind="stable")
    order_n = np.argsort(wx[neg_idx], kind="stable")
    t_pos = (wx[pos_idx] + 0.5)[order_p]   # term active while b < t
    t_neg = (wx[neg_idx] - 0.5)[order_n]   # term active while b > t
    cp_sorted = cp[pos_idx][order_p]
    cm_sorted = cm[neg_idx][order_n]
    breaks = np.unique(np.concatenate((t_pos, t_neg)))
    if breaks.size == 0:
        return (-np.inf, np.inf) if 0.0 <= gamma_tilde else None

    # Suffix sums over positive hinges, prefix sums over negative ones.
    pos_csum = np.concatenate(([0.0], np.cumsum(cp_sorted)))
    pos_tsum = np.concatenate(([0.0], np.cumsum(cp_sorted * t_pos)))
    neg_csum = np.concatenate(([0.0], np.cumsum(cm_sorted)))
    neg_tsum = np.concatenate(([0.0], np.cumsum(cm_sorted * t_neg)))

    def values(bs):
        bs = np.asarray(bs, dtype=np.float64)
        kp = np.searchsorted(t_pos, bs, side="right")  # t_pos <= b inactive
        kn = np.searchsorted(t_neg, bs, side="left")   # t_neg >= b inactive
        pos_part = (pos_tsum[-1] - pos_tsum[kp]) - bs * (pos_csum[-1] - pos_csum[kp])
        neg_part = bs * neg_csum[kn] - neg_tsum[kn]
        return (pos_part + neg_part) / n

    vals = values(breaks)
    if float(vals.min()) > gamma_tilde:
        return None

    total_cp = float(pos_csum[-1])
    total_cm = float(neg_csum[-1])

    if vals[0] <= gamma_tilde:
        # Slope left of the first breakpoint is -total_cp / n.
        if total_cp == 0.0:
            left = -np.inf
        else:
            left = float(breaks[0] - (gamma_tilde - vals[0]) * n / total_cp)
    else:
        idx = int(np.argmax(vals <= gamma_tilde))
        b0, v0 = float(breaks[idx - 1]), float(vals[idx - 1])
        b1, v1 = float(breaks[idx]), float(vals[idx])
        left = b0 + (v0 - gamma_tilde) * (b1 - b0) / (v0 - v1)

    if vals[-1] <= gamma_tilde:
        if total_cm == 0.0:
            right = np.inf
        else:
            right = float(breaks[-1] + (gamma_tilde - vals[-1]) * n / total_cm)
    else:
        idx = int(np.flatnonzero(vals <= gamma_tilde)[-1])
        b0, v0 = float(breaks[idx]), float(vals[idx])
        b1, v1 = float(breaks[idx + 1]), float(vals[idx + 1])
        right = b0 + (gamma_tilde - v0) * (b1 - b0) / (v1 - v0)
    return (left, right)
