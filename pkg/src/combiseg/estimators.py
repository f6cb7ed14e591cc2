"""Tangent, normal and length estimation on 4-connected digital curves.

The tangent direction at a linel midpoint is the lambda-weighted mean of
the directions of all maximal segments covering that linel, where the
weight is a triangle profile of the midpoint's eccentricity inside each
segment (0 at the ends, 1 in the middle).  The elementary length of a
linel is the projection of the unit linel on the estimated tangent:
|cos theta| for horizontal linels, |sin theta| for vertical ones.
Curve length is the sum of elementary lengths; degenerate closed loops
of at most four linels fall back to unit lengths.

A compiled kernel accelerates the per-linel aggregation when available;
the pure-Python twin gives identical results.
"""

from __future__ import annotations

import math

from .pyramid import FreemanChain
from .dss import maximal_segments

try:  # pragma: no cover - exercised via the backend() report
    from . import _curvekernel

    BACKEND = "compiled"
except ImportError:  # pragma: no cover
    _curvekernel = None
    BACKEND = "pure"


def backend() -> str:
    """Name of the active aggregation backend: 'compiled' or 'pure'."""
    return BACKEND


def _lambda(e: float) -> float:
    """Triangle weight profile over eccentricity in [0, 1]."""
    return 1.0 - abs(2.0 * e - 1.0)


def _cover(segments, n, closed):
    """Per linel: list of (weight, angle) of the covering maximal segments.

    Linel k has abscissa k + 1/2; on closed chains a segment covers the
    unrolled copies k, k - n and k + n.
    """
    cover = [[] for _ in range(n)]
    for seg in segments:
        theta = seg.dss.angle()
        span = seg.last - seg.first
        for u in range(seg.first, seg.last):
            k = u % n if closed else u
            e = (u + 0.5 - seg.first) / span
            cover[k].append((_lambda(e), theta))
    return cover

def tangent_angles_py(codes, closed: bool = False):
    """Estimated tangent direction (image coords, y down) per linel."""
    codes = list(codes)
    n = len(codes)
    if n == 0:
        return []
    cover = _cover(maximal_segments(codes, closed), n, closed)
    out = []
    for k, pairs in enumerate(cover):
        if not pairs:
            raise AssertionError(f"linel {k} not covered by any maximal segment")
        # lift all angles near the reference of the heaviest segment, so
        # averaging is immune to the -pi/pi wrap
        ref = max(pairs)[1]
        num = den = 0.0
        for w, theta in pairs:
            lifted = theta + 2.0 * math.pi * round((ref - theta) / (2.0 * math.pi))
            num += w * lifted
            den += w
        mean = num / den
        mean = math.atan2(math.sin(mean), math.cos(mean))
        out.append(mean)
    return out


def elementary_lengths_py(codes, closed: bool = False):
    """Estimated length of each linel (projection on the local tangent)."""
    codes = list(codes)
    n = len(codes)
    if closed and n <= 4:
        return [1.0] * n
    thetas = tangent_angles_py(codes, closed)
    out = []
    for c, t in zip(codes, thetas):
        if c in (0, 2):
            out.append(abs(math.cos(t)))
        else:
            out.append(abs(math.sin(t)))
    return out


def tangent_angles(codes, closed: bool = False):
    if _curvekernel is not None:
        return list(_curvekernel.tangent_angles(list(codes), closed))
    return tangent_angles_py(codes, closed)


def elementary_lengths(codes, closed: bool = False):
    if _curvekernel is not None:
        return list(_curvekernel.elementary_lengths(list(codes), closed))
    return elementary_lengths_py(codes, closed)


def normal_angles(codes, closed: bool = False):
    """Inward normal per linel (the traced region lies left of travel)."""
    return [t - 0.5 * math.pi for t in tangent_angles(codes, closed)]


def curve_length(chain: FreemanChain) -> float:
    """Estimated Euclidean length of a digital curve."""
    return float(sum(elementary_lengths(chain.codes, chain.closed)))


def region_perimeter(view, d) -> float:
    """Estimated perimeter of region sigma*(d): sum over all its
    boundary components."""
    from .boundary import region_boundaries

    return sum(curve_length(loop.chain) for loop in region_boundaries(view, d))
