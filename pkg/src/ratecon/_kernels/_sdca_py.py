"""Pure-Python (numpy) fallback for the coordinate-ascent epoch kernel."""

from __future__ import annotations


def sdca_epoch(indptr, indices, values, sq_over, a_plus, a_minus,
               order, xi, w, b, inv_lambda_n):
    """One epoch of exact coordinate maximization of the SVM dual.

    For each example index i in ``order`` (sampled by the caller), replaces
    xi[i] with the exact maximizer of the dual restricted to that
    coordinate: a concave piecewise-quadratic in xi[i] with a kink at
    a_plus[i] - a_minus[i], clamped to the box [-a_minus[i], a_plus[i]].
    ``w`` mirrors -(1/(lambda n)) * sum_i xi[i] x_i and is updated in place.

    ``sq_over[i]`` must equal ||x_i||^2 / (lambda n); ``inv_lambda_n`` is
    1 / (lambda n).
    """
    for i in order:
        start, stop = indptr[i], indptr[i + 1]
        cols = indices[start:stop]
        vals = values[start:stop]
        xi_old = xi[i]
        q = sq_over[i]
        # Margin with this coordinate's own contribution removed.
        z = float(w[cols] @ vals) + xi_old * q - b
        c0 = a_plus[i] - a_minus[i]
        if q > 0.0:
            if z - 0.5 > q * c0:
                delta = (z - 0.5) / q
            elif z + 0.5 < q * c0:
                delta = (z + 0.5) / q
            else:
                delta = c0
        else:
            if z - 0.5 > 0.0:
                delta = a_plus[i]
            elif z + 0.5 < 0.0:
                delta = -a_minus[i]
            else:
                delta = c0
        if delta > a_plus[i]:
            delta = a_plus[i]
        elif delta < -a_minus[i]:
            delta = -a_minus[i]
        step = delta - xi_old
        if step != 0.0:
            xi[i] = delta
            w[cols] -= (step * inv_lambda_n) * vals
