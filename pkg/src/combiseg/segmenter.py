"""Greedy pyramidal segmentation by energy-minimizing region merging.

Starting from an initial over-partition, every pyramid level merges the
single pair of adjacent regions whose fusion changes the partition
energy the least (greatest decrease first, then smallest increase).
Each merge contracts one edge and restores minimality with the
self-loop / double-edge removal closure, so the full hierarchy stays
encoded in one pyramid record whose memory is proportional to the base
dart count.

The merge loop keeps, per surviving boundary edge, the Freeman codes
and gradient samples of its embedded interpixel path; double-edge
removals concatenate the caches of the merged edges, so evaluating a
candidate merge only re-traces the merged region's boundary at the
reduced-dart level.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

import numpy as np

from .map_core import MapError, _dart_key
from .grid import BACKGROUND, build_grid
from .pyramid import PyramidBuilder, PyramidRecord
from .energy import (
    EnergyParams,
    GradientField,
    RegionStats,
    loop_energy,
    stats_by_label,
)

INIT_MODES = ("pixel_grid", "flat_zones", "watershed")
STOP_MODES = ("single_region", "min_regions", "max_steps")


@dataclass(frozen=True)
class MergeRecord:
    """One pyramid level: which two regions merged and at what cost."""

    level: int
    region_a: int
    region_b: int
    delta_e: float
    energy_after: float


@dataclass
class SegmentationResult:
    record: PyramidRecord
    history: list
    params: EnergyParams
    init_mode: str
    initial_labels: np.ndarray
    base_level: int
    base_energy: float

    @property
    def levels(self) -> int:
        return self.record.levels

    def labels(self, level: int) -> np.ndarray:
        return self.record.labels(level)


def level_labels(record: PyramidRecord, level: int) -> np.ndarray:
    """Per-pixel region representatives of one pyramid level."""
    return record.labels(level)


# ---------------------------------------------------------------------------
# Initial over-partitions
# ---------------------------------------------------------------------------


def initial_partition(image: np.ndarray, mode: str = "pixel_grid",
                      grad: GradientField | None = None) -> np.ndarray:
    """(H, W) label array of an initial over-partition; labels are the
    smallest flat pixel index of each region and regions are 4-connected."""
    img = np.asarray(image)
    height, width = img.shape[:2]
    if mode == "pixel_grid":
        return np.arange(height * width, dtype=np.int64).reshape(height, width)
    if mode == "flat_zones":
        return _flat_zone_labels(img)
    if mode == "watershed":
        if grad is None:
            grad = GradientField(img)
        return _watershed_labels(img, grad)
    raise ValueError(f"init mode must be one of {INIT_MODES}, got {mode!r}")


def _canonical_labels(parent_find, height, width):
    flat = np.empty(height * width, dtype=np.int64)
    for p in range(height * width):
        flat[p] = parent_find(p)
    return flat.reshape(height, width)


def _flat_zone_labels(img: np.ndarray) -> np.ndarray:
    """Connected components of constant color (4-connectivity)."""
    height, width = img.shape[:2]
    color = img.reshape(height, width, -1)
    parent = list(range(height * width))

    def find(v):
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    def union(u, v):
        ru, rv = find(u), find(v)
        if ru != rv:
            if ru > rv:
                ru, rv = rv, ru
            parent[rv] = ru

    for y in range(height):
        for x in range(width):
            p = y * width + x
            if x + 1 < width and (color[y, x] == color[y, x + 1]).all():
                union(p, p + 1)
            if y + 1 < height and (color[y, x] == color[y + 1, x]).all():
                union(p, p + width)
    return _canonical_labels(find, height, width)


def _watershed_labels(img: np.ndarray, grad: GradientField) -> np.ndarray:
    """Unseeded flooding of a per-pixel relief (the largest gradient of
    the pixel's interior linels); basins grow from relief minima."""
    height, width = img.shape[:2]
    relief = np.zeros((height, width))
    if width > 1:
        np.maximum(relief[:, 1:], grad.vertical, out=relief[:, 1:])
        np.maximum(relief[:, :-1], grad.vertical, out=relief[:, :-1])
    if height > 1:
        np.maximum(relief[1:, :], grad.horizontal, out=relief[1:, :])
        np.maximum(relief[:-1, :], grad.horizontal, out=relief[:-1, :])
    flat = relief.reshape(-1)
    order = np.argsort(flat, kind="stable")
    labels = np.full(height * width, -1, dtype=np.int64)
    for p in order:
        x, y = int(p) % width, int(p) // width
        best = -1
        best_height = None
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if not (0 <= nx < width and 0 <= ny < height):
                continue
            q = ny * width + nx
            if labels[q] < 0:
                continue
            if best_height is None or flat[q] < best_height:
                best_height = flat[q]
                best = labels[q]
        labels[p] = best if best >= 0 else int(p)
    # normalize to the smallest pixel index per basin
    remap = {}
    for p in range(height * width):
        remap.setdefault(int(labels[p]), int(p))
    out = np.fromiter((remap[int(v)] for v in labels), dtype=np.int64)
    return out.reshape(height, width)


def _spanning_forest(grid, labels: np.ndarray):
    """Positive interior darts forming a spanning forest of every label's
    pixel set (one tree per region)."""
    width, height = grid.width, grid.height
    flat = np.asarray(labels).reshape(-1)
    parent = list(range(width * height))

    def find(v):
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    forest = []
    for d, (sx, sy, code) in grid.embedding.items():
        if d < 0:
            continue
        p = grid.owner[d]
        if p == BACKGROUND:
            continue
        q = grid.owner[-d]
        if q == BACKGROUND or flat[p] != flat[q]:
            continue
        rp, rq = find(p), find(q)
        if rp != rq:
            parent[max(rp, rq)] = min(rp, rq)
            forest.append(d)
    return forest


# ---------------------------------------------------------------------------
# Greedy merge engine
# ---------------------------------------------------------------------------


def build_pyramid(image: np.ndarray, params: EnergyParams | None = None,
                  init: str = "pixel_grid", stop: str = "single_region",
                  stop_value: int | None = None) -> SegmentationResult:
    """Build the whole merge hierarchy over an image.

    `stop` ends the merge loop early: "single_region" merges all the way
    down to one region, "min_regions" stops once the region count
    reaches `stop_value`, "max_steps" stops after `stop_value` merges.
    """
    if params is None:
        params = EnergyParams()
    if stop not in STOP_MODES:
        raise ValueError(f"stop must be one of {STOP_MODES}, got {stop!r}")
    if stop != "single_region":
        if stop_value is None or stop_value < 1:
            raise ValueError(f"stop mode {stop!r} needs a positive stop_value")

    img = np.asarray(image)
    height, width = img.shape[:2]
    grad = GradientField(img)
    grid = build_grid(width, height)
    builder = PyramidBuilder(grid)
    sigma, alpha = builder.sigma, builder.alpha

    # per-dart caches of the embedded boundary piece
    codes = {}
    grads = {}
    region_of = {}
    for d, (x, y, c) in grid.embedding.items():
        codes[d] = np.array([c], dtype=np.int32)
        grads[d] = np.array([grad.linel((x, y), c)])

    def drop(dead):
        del codes[dead]
        del grads[dead]
        region_of.pop(dead, None)

    def apply_reduce(cands):
        esl, events = builder.reduce(cands)
        for x, y, ax, ay in events:
            codes[ay] = np.concatenate([codes[ay], codes[x]])
            grads[ay] = np.concatenate([grads[ay], grads[x]])
            codes[ax] = np.concatenate([codes[ax], codes[y]])
            grads[ax] = np.concatenate([grads[ax], grads[y]])
            drop(x)
            drop(y)
        for dead in esl:
            drop(dead)

    # ---- initial partition ------------------------------------------------
    init_labels = initial_partition(img, init, grad)
    if init != "pixel_grid":
        forest = _spanning_forest(grid, init_labels)
        if forest:
            builder.begin_transition()
            cands = builder.contract_edges(
                [s for d in forest for s in (d, -d)])
            for d in forest:
                drop(d)
                drop(-d)
            apply_reduce(cands)
            builder.commit_transition()
    base_level = builder.current_level

    flat_labels = init_labels.reshape(-1)
    for d in alpha:
        owner = grid.owner[d]
        region_of[d] = BACKGROUND if owner == BACKGROUND else int(flat_labels[owner])

    stats = stats_by_label(img, init_labels)

    # ---- region energies --------------------------------------------------
    def orbit_of(d):
        out = [d]
        cur = sigma[d]
        while cur != d:
            out.append(cur)
            cur = sigma[cur]
        return out

    def loops_of(orbits):
        l_in = set()
        for orbit in orbits:
            l_in.update(orbit)
        loops = []
        seen = set()
        for orbit in orbits:
            for b0 in orbit:
                if b0 in seen or alpha[b0] in l_in:
                    continue
                loop = []
                b = b0
                while True:
                    loop.append(b)
                    seen.add(b)
                    b = sigma[b]
                    while alpha[b] in l_in:  # skip fictive/interior edges
                        b = sigma[alpha[b]]
                    if b == b0:
                        break
                loops.append(loop)
        return loops

    def boundary_energy(loops):
        total = 0.0
        for loop in loops:
            c = codes[loop[0]] if len(loop) == 1 else np.concatenate(
                [codes[b] for b in loop])
            g = grads[loop[0]] if len(loop) == 1 else np.concatenate(
                [grads[b] for b in loop])
            total += loop_energy(c, g, params)
        return total

    region_dart = {}
    energy_of = {}
    visited = set()
    for d in list(alpha):
        if d in visited:
            continue
        orbit = orbit_of(d)
        visited.update(orbit)
        rep = region_of[d]
        if rep == BACKGROUND:
            continue
        region_dart[rep] = d
        energy_of[rep] = stats[rep].squared_error() + boundary_energy(
            loops_of([orbit]))
    region_count = len(region_dart)
    total_energy = sum(energy_of.values())
    base_energy = total_energy

    # ---- candidate heap ---------------------------------------------------
    counter = itertools.count()
    stamp = {rep: 0 for rep in region_dart}
    heap = []

    def push_candidate(d):
        ra, rb = region_of[d], region_of[alpha[d]]
        if ra == rb or BACKGROUND in (ra, rb):
            return
        merged_stats = stats[ra].merged(stats[rb])
        merged_energy = merged_stats.squared_error() + boundary_energy(
            loops_of([orbit_of(d), orbit_of(alpha[d])]))
        delta = merged_energy - energy_of[ra] - energy_of[rb]
        edge_key = _dart_key(min(d, alpha[d], key=_dart_key))
        heapq.heappush(heap, (delta, edge_key, next(counter), d, ra, rb,
                              stamp[ra], stamp[rb], merged_energy,
                              merged_stats))

    for d in alpha:
        a = alpha[d]
        if _dart_key(d) < _dart_key(a):
            push_candidate(d)

    # ---- merge loop -------------------------------------------------------
    history = []

    def stop_reached():
        if stop == "single_region":
            return region_count <= 1
        if stop == "min_regions":
            return region_count <= stop_value
        return len(history) >= stop_value

    while not stop_reached() and region_count > 1:
        while heap:
            (delta, _, _, d, ra, rb, sa, sb,
             merged_energy, merged_stats) = heapq.heappop(heap)
            if (d in alpha
                    and region_of.get(d) == ra
                    and region_of.get(alpha[d]) == rb
                    and stamp.get(ra) == sa and stamp.get(rb) == sb):
                break
        else:
            raise MapError("no merge candidate left before the stop criterion")

        partner = alpha[d]
        orbit_a = orbit_of(d)
        orbit_b = orbit_of(partner)
        builder.begin_transition()
        cands = builder.contract_edges([d, partner])
        drop(d)
        drop(partner)
        apply_reduce(cands)
        builder.commit_transition()

        new_rep, old_rep = min(ra, rb), max(ra, rb)
        stats[new_rep] = merged_stats
        stats.pop(old_rep, None)
        energy_of[new_rep] = merged_energy
        energy_of.pop(old_rep, None)
        stamp[new_rep] = len(history) + 1
        stamp.pop(old_rep, None)
        region_dart.pop(old_rep, None)

        survivor = next(b for b in orbit_a + orbit_b if b in alpha)
        new_orbit = orbit_of(survivor)
        for b in new_orbit:
            region_of[b] = new_rep
        region_dart[new_rep] = survivor
        region_count -= 1
        total_energy += delta
        history.append(MergeRecord(builder.current_level, ra, rb, delta,
                                   total_energy))

        pushed_edges = set()
        for b in new_orbit:
            other = region_of.get(alpha[b])
            if other == new_rep or other == BACKGROUND:
                continue
            edge_key = _dart_key(min(b, alpha[b], key=_dart_key))
            if edge_key in pushed_edges:
                continue
            pushed_edges.add(edge_key)
            push_candidate(b)

    record = builder.finish()
    return SegmentationResult(
        record=record,
        history=history,
        params=params,
        init_mode=init,
        initial_labels=init_labels,
        base_level=base_level,
        base_energy=base_energy,
    )
