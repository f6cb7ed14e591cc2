"""Shared test utilities that drive the library (not oracles)."""

from __future__ import annotations

import numpy as np

from combiseg.grid import BACKGROUND, build_grid
from combiseg.pyramid import PyramidBuilder, _vertex_darts


def edge_between(builder: PyramidBuilder, region_a: int, region_b: int) -> int:
    """A current-level dart owned by region_a whose edge borders region_b.

    Region ids are base pixel indices; current ownership is resolved via
    the recorded merges."""
    record = builder.record
    lab = record.labels(builder.current_level).reshape(-1)
    owner = record.base.owner
    for d in builder.alpha:
        oa, ob = owner[d], owner[builder.alpha[d]]
        if oa == BACKGROUND or ob == BACKGROUND:
            continue
        if lab[oa] == lab[region_a] and lab[ob] == lab[region_b]:
            return d
    raise AssertionError(f"no edge between {region_a} and {region_b}")


def merge_regions(builder: PyramidBuilder, region_a: int, region_b: int):
    """One pyramid transition merging two pixel-identified regions."""
    d = edge_between(builder, region_a, region_b)
    builder.begin_transition()
    cands = builder.contract_edges([d, builder.alpha[d]])
    builder.reduce(cands)
    builder.commit_transition()


def mergeable_edges(builder: PyramidBuilder):
    """Current-level darts separating two distinct interior regions."""
    owner = builder.record.base.owner
    lab = builder.record.labels(builder.current_level).reshape(-1)
    out = []
    for d in builder.alpha:
        if d < 0:
            continue
        a = builder.alpha[d]
        oa, ob = owner[d], owner[a]
        if oa == BACKGROUND or ob == BACKGROUND:
            continue
        if a in _vertex_darts(builder.sigma, d):
            continue  # self-loop (same region on both sides, or fictive)
        if lab[oa] != lab[ob]:
            out.append(d)
    return out


def random_pyramid(rng: np.random.Generator, width: int, height: int,
                   steps: int | None = None):
    """Build a pyramid by contracting uniformly random region-separating
    edges; returns (record, list of merged pixel-rep pairs)."""
    builder = PyramidBuilder(build_grid(width, height))
    merged = []
    owner = builder.record.base.owner
    if steps is None:
        steps = width * height - 1
    for _ in range(steps):
        cands = mergeable_edges(builder)
        if not cands:
            break
        d = cands[rng.integers(len(cands))]
        merged.append((owner[d], owner[builder.alpha[d]]))
        builder.begin_transition()
        out = builder.contract_edges([d, builder.alpha[d]])
        builder.reduce(out)
        builder.commit_transition()
    return builder.finish(), merged


def union_find_labels(width, height, merged_pairs):
    """Oracle partitions, one per level: union the base pixel pairs that
    were contracted, representative = smallest pixel id in the region."""
    parent = list(range(width * height))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    out = [np.arange(width * height).reshape(height, width)]
    for a, b in merged_pairs:
        ra, rb = find(a), find(b)
        lo, hi = min(ra, rb), max(ra, rb)
        parent[hi] = lo
        lab = np.array([find(v) for v in range(width * height)])
        out.append(lab.reshape(height, width))
    return out
