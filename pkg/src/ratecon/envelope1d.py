"""Exact piecewise-affine envelopes of line families on an interval.

Used by the one-dimensional cutting-plane layers: the multiplier-level
dual envelope is a min of affine cuts (concave), the bias-level envelope
a max of affine cuts (convex).  Segment structure enables exact interval
optima and exact centroids of the regions between an envelope and a
horizontal level, which drive the center-of-mass cut choosers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Segment:
    x0: float
    x1: float
    slope: float
    intercept: float
    line_index: int

    def value(self, x: float) -> float:
        return self.slope * x + self.intercept

    @property
    def v0(self) -> float:
        return self.value(self.x0)

    @property
    def v1(self) -> float:
        return self.value(self.x1)


def _envelope(lines, lo: float, hi: float, take_min: bool) -> list[Segment]:
    """Pointwise min (or max) of lines over [lo, hi] as merged segments.

    Candidate breakpoints are all pairwise intersections inside the
    interval; on each piece the extremal line is identified at the
    midpoint, ties resolved by lowest line index for determinism.
    """
    if hi <= lo:
        raise ValueError("empty interval")
    if not lines:
        raise ValueError("no lines")
    slopes = np.array([s for s, _ in lines], dtype=np.float64)
    intercepts = np.array([c for _, c in lines], dtype=np.float64)
    xs = {lo, hi}
    k = len(lines)
    for i in range(k):
        for j in range(i + 1, k):
            dm = slopes[i] - slopes[j]
            if dm == 0.0:
                continue
            x = (intercepts[j] - intercepts[i]) / dm
            if lo < x < hi:
                xs.add(float(x))
    points = sorted(xs)
    segments: list[Segment] = []
    for x0, x1 in zip(points[:-1], points[1:]):
        if x1 <= x0:
            continue
        mid = 0.5 * (x0 + x1)
        vals = slopes * mid + intercepts
        idx = int(np.argmin(vals) if take_min else np.argmax(vals))
        if segments and segments[-1].line_index == idx:
            prev = segments[-1]
            segments[-1] = Segment(prev.x0, x1, prev.slope, prev.intercept, idx)
        else:
            segments.append(Segment(x0, x1, float(slopes[idx]),
                                    float(intercepts[idx]), idx))
    return segments


def min_envelope(lines, lo: float, hi: float) -> list[Segment]:
    return _envelope(lines, lo, hi, take_min=True)


def max_envelope(lines, lo: float, hi: float) -> list[Segment]:
    return _envelope(lines, lo, hi, take_min=False)


def envelope_maximum(segments) -> tuple[float, float]:
    """(argmax, max) of a concave envelope: scan segment endpoints.

    Ties take the leftmost point, so the result is deterministic.
    """
    best_x, best_v = segments[0].x0, segments[0].v0
    for seg in segments:
        for x, v in ((seg.x0, seg.v0), (seg.x1, seg.v1)):
            if v > best_v:
                best_x, best_v = x, v
    return best_x, best_v


def envelope_minimum(segments) -> tuple[float, float]:
    """(argmin, min) of a convex envelope: scan segment endpoints."""
    best_x, best_v = segments[0].x0, segments[0].v0
    for seg in segments:
        for x, v in ((seg.x0, seg.v0), (seg.x1, seg.v1)):
            if v < best_v:
                best_x, best_v = x, v
    return best_x, best_v


def _clipped_moments(g0: float, g1: float, x0: float, x1: float):
    """Integrals of a nonnegative affine g over [x0, x1] after clipping at 0.

    Returns (area, x-moment, squared-integral): integral of g, of x*g, and
    of g^2.  The caller splits at sign changes, so g0, g1 >= 0 here.
    """
    h = x1 - x0
    if h <= 0.0:
        return 0.0, 0.0, 0.0
    area = 0.5 * h * (g0 + g1)
    dg = g1 - g0
    # int_0^1 (x0 + t h)(g0 + dg t) dt, scaled by h
    mx = h * (x0 * g0 + 0.5 * (x0 * dg + h * g0) + h * dg / 3.0)
    sq = h * (g0 * g0 + g0 * g1 + g1 * g1) / 3.0
    return area, mx, sq


def _split_at_level(seg: Segment, level: float, keep_above: bool):
    """Sub-intervals of the segment where (f - level) resp. (level - f) >= 0."""
    g0 = seg.v0 - level if keep_above else level - seg.v0
    g1 = seg.v1 - level if keep_above else level - seg.v1
    if g0 >= 0.0 and g1 >= 0.0:
        return [(seg.x0, seg.x1, g0, g1)]
    if g0 < 0.0 and g1 < 0.0:
        return []
    xc = seg.x0 + (seg.x1 - seg.x0) * g0 / (g0 - g1)
    if g0 >= 0.0:
        return [(seg.x0, xc, g0, 0.0)]
    return [(xc, seg.x1, 0.0, g1)]


def region_between(segments, level: float, envelope_on_top: bool,
                   ) -> tuple[float, float, float]:
    """Area and centroid of the region between an envelope and a level.

    With ``envelope_on_top`` the region is {(x, z): level <= z <= f(x)}
    (concave hypograph above a floor); otherwise {(x, z): f(x) <= z <= level}
    (convex epigraph below a ceiling).  Returns (area, x_centroid,
    z_centroid); a zero-area region returns (0, nan, nan).
    """
    area = 0.0
    mx = 0.0
    msq = 0.0
    for seg in segments:
        for x0, x1, g0, g1 in _split_at_level(seg, level, envelope_on_top):
            a, m, sq = _clipped_moments(g0, g1, x0, x1)
            area += a
            mx += m
            msq += sq
    if area <= 0.0:
        return 0.0, float("nan"), float("nan")
    if envelope_on_top:
        zc = level + 0.5 * msq / area
    else:
        zc = level - 0.5 * msq / area
    return area, mx / area, zc
