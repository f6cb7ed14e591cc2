"""Partition energy: goodness of fit plus boundary regularization.

The energy of a partition is the sum over regions of

    E(region) = E_img(region) + nu * E_reg(region)

where E_img is the squared error of the region's pixels around their
mean color minus delta times the gradient magnitude integrated along
the region boundary (each linel weighted by its estimated elementary
length), and E_reg is the estimated perimeter of the region.  With
length_mode="unit_linel" every linel counts 1 instead of its estimated
length, which makes the perimeter a plain linel count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import elementary_lengths
from .boundary import LevelView, region_boundaries

LENGTH_MODES = ("discrete_estimator", "unit_linel")


@dataclass(frozen=True)
class EnergyParams:
    nu: float = 1.3
    delta: float = 1.0
    length_mode: str = "discrete_estimator"

    def __post_init__(self):
        if self.length_mode not in LENGTH_MODES:
            raise ValueError(
                f"length_mode must be one of {LENGTH_MODES}, got {self.length_mode!r}"
            )


class RegionStats:
    """Exact color statistics of a pixel set: count, per-channel sum and
    total sum of squares (integer arithmetic for integer images)."""

    __slots__ = ("n", "s", "sq")

    def __init__(self, n=0, s=None, sq=0, channels=1):
        self.n = n
        self.s = np.zeros(channels, dtype=np.int64) if s is None else s
        self.sq = sq

    @classmethod
    def of_pixels(cls, values: np.ndarray) -> "RegionStats":
        """Stats of an (n, channels) array of pixel colors."""
        v = np.asarray(values, dtype=np.int64)
        if v.ndim == 1:
            v = v[:, None]
        return cls(n=v.shape[0], s=v.sum(axis=0), sq=int((v * v).sum()))

    def merged(self, other: "RegionStats") -> "RegionStats":
        return RegionStats(self.n + other.n, self.s + other.s, self.sq + other.sq)

    def squared_error(self) -> float:
        """Sum over pixels of the squared distance to the region mean."""
        if self.n == 0:
            return 0.0
        return float(self.sq) - float(self.s @ self.s) / self.n

    def __repr__(self):
        return f"RegionStats(n={self.n}, s={self.s.tolist()}, sq={self.sq})"


def stats_by_label(image: np.ndarray, labels: np.ndarray) -> dict:
    """Per-label RegionStats of an (H, W) or (H, W, C) image."""
    img = np.asarray(image)
    if img.ndim == 2:
        img = img[:, :, None]
    flat = img.reshape(-1, img.shape[2])
    lab = np.asarray(labels).reshape(-1)
    out = {}
    for value in np.unique(lab):
        out[int(value)] = RegionStats.of_pixels(flat[lab == value])
    return out


class GradientField:
    """Per-linel color-difference magnitude of an image.

    A linel separates two pixels; its gradient is the Euclidean norm of
    their color difference.  Linels on the image border have gradient 0.
    """

    def __init__(self, image: np.ndarray):
        img = np.asarray(image, dtype=np.float64)
        if img.ndim == 2:
            img = img[:, :, None]
        self.height, self.width = img.shape[:2]
        # vertical[y, x] : linel at pointel column x+1, between pixels
        # (x, y) and (x+1, y)
        self.vertical = np.linalg.norm(img[:, 1:] - img[:, :-1], axis=2)
        # horizontal[y, x] : linel at pointel row y+1, between pixels
        # (x, y) and (x, y+1)
        self.horizontal = np.linalg.norm(img[1:, :] - img[:-1, :], axis=2)

    def linel(self, start, code) -> float:
        """Gradient across one oriented linel given by start pointel and
        Freeman code."""
        x, y = start
        if code in (0, 2):  # horizontal linel on pointel row y
            px = x - 1 if code == 2 else x
            if y == 0 or y == self.height:
                return 0.0
            return float(self.horizontal[y - 1, px])
        py = y - 1 if code == 1 else y
        if x == 0 or x == self.width:
            return 0.0
        return float(self.vertical[py, x - 1])

    def chain(self, start, codes) -> np.ndarray:
        """Gradient of every linel along a Freeman chain."""
        out = np.empty(len(codes))
        x, y = start
        for k, c in enumerate(codes):
            out[k] = self.linel((x, y), c)
            if c == 0:
                x += 1
            elif c == 1:
                y -= 1
            elif c == 2:
                x -= 1
            else:
                y += 1
        return out


def loop_energy(codes, grads, params: EnergyParams) -> float:
    """Boundary contribution of one closed loop:
    -delta * sum(gradient * length) + nu * sum(length)."""
    if params.length_mode == "unit_linel":
        lengths = np.ones(len(codes))
    else:
        lengths = np.asarray(elementary_lengths(codes, closed=True))
    g = np.asarray(grads, dtype=np.float64)
    return float(-params.delta * (g @ lengths) + params.nu * lengths.sum())


def image_energy(view: LevelView, d, stats: RegionStats,
                 grad: GradientField, params: EnergyParams) -> float:
    """Goodness-of-fit term of region sigma*(d): squared error minus
    delta times the boundary gradient weighted by elementary lengths."""
    total = stats.squared_error()
    for loop in region_boundaries(view, d):
        grads = grad.chain(loop.chain.start, loop.chain.codes)
        if params.length_mode == "unit_linel":
            lengths = np.ones(len(loop.chain.codes))
        else:
            lengths = np.asarray(elementary_lengths(loop.chain.codes, closed=True))
        total += float(-params.delta * (grads @ lengths))
    return total


def regularization_energy(view: LevelView, d, params: EnergyParams) -> float:
    """Model term of region sigma*(d): its estimated perimeter (or the
    linel count with length_mode='unit_linel')."""
    total = 0.0
    for loop in region_boundaries(view, d):
        if params.length_mode == "unit_linel":
            total += len(loop.chain.codes)
        else:
            total += sum(elementary_lengths(loop.chain.codes, closed=True))
    return total


def region_energy(view: LevelView, d, stats: RegionStats,
                  grad: GradientField, params: EnergyParams) -> float:
    """Energy of region sigma*(d) at the view's level."""
    total = stats.squared_error()
    for loop in region_boundaries(view, d):
        grads = grad.chain(loop.chain.start, loop.chain.codes)
        total += loop_energy(loop.chain.codes, grads, params)
    return total


def merge_delta(view: LevelView, d, stats_a: RegionStats, stats_b: RegionStats,
                grad: GradientField, params: EnergyParams) -> float:
    """Energy variation of merging the two regions separated by dart d:
    E(A union B) - E(A) - E(B).  Reference implementation; the merge loop
    keeps a faster incremental equivalent."""
    from .boundary import boundary
    from .grid import BACKGROUND
    from .map_core import MapError

    a = view.alpha(d)
    orbit_a = view.cycle(d)
    if a in orbit_a:
        raise MapError(f"dart {d} is fictive; its edge separates nothing")
    orbit_b = view.cycle(a)
    if view.region_of(d) == BACKGROUND or view.region_of(a) == BACKGROUND:
        raise MapError("background region cannot take part in a merge")
    l_in = set(orbit_a) | set(orbit_b)
    merged = stats_a.merged(stats_b)
    e_merged = merged.squared_error()
    seen = set()
    for b in orbit_a + orbit_b:
        if b in seen or view.alpha(b) in l_in:
            continue
        loop = boundary(view, b, l_in)
        seen.update(loop.darts)
        grads = grad.chain(loop.chain.start, loop.chain.codes)
        e_merged += loop_energy(loop.chain.codes, grads, params)
    e_a = region_energy(view, d, stats_a, grad, params)
    e_b = region_energy(view, a, stats_b, grad, params)
    return e_merged - e_a - e_b


def level_energy(record, level, image: np.ndarray, params: EnergyParams,
                 grad: GradientField | None = None) -> float:
    """Total energy of the partition at a pyramid level, computed from
    scratch.  The background region only contributes through the other
    regions' boundaries and is skipped."""
    from .grid import BACKGROUND

    if grad is None:
        grad = GradientField(image)
    view = LevelView(record, level)
    labels = record.labels(level)
    stats = stats_by_label(image, labels)
    seen = set()
    total = 0.0
    for d in record.alive_darts(level):
        if d in seen:
            continue
        orbit = view.cycle(d)
        seen.update(orbit)
        region = view.region_of(d)
        if region == BACKGROUND:
            continue
        rep = int(labels[region // record.base.width,
                         region % record.base.width])
        total += region_energy(view, d, stats[rep], grad, params)
    return total


# The partition energy of a whole level ("map energy").
map_energy = level_energy
