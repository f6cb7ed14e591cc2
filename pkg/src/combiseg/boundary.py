"""Region boundary extraction on a pyramid level.

An edge of a reduced map is *separating* when its two darts lie on
different vertices: it embeds a connected piece of interpixel boundary
between two regions.  An edge whose darts share a vertex is *fictive*
(a bridge in the dual); it carries no linels and only stitches the outer
boundary of a region to the boundaries of holes inside it.

The tracer walks a boundary with sigma, skipping darts whose partner
lies inside the traced region set, and concatenates the Freeman chains
of the visited darts into one closed 4-connected loop.
"""

from __future__ import annotations

from dataclasses import dataclass

from .map_core import MapError
from .grid import MOVES
from .pyramid import FreemanChain, PyramidRecord


class LevelView:
    """Read-only facade over one level of a pyramid."""

    def __init__(self, record: PyramidRecord, level: int):
        if not 0 <= level < record.levels:
            raise MapError(f"level {level} out of range")
        self.record = record
        self.level = level

    def sigma(self, d):
        return self.record.sigma_at(d, self.level)

    def alpha(self, d):
        return self.record.alpha_at(d, self.level)

    def phi(self, d):
        return self.record.phi_at(d, self.level)

    def cycle(self, d):
        return self.record.cycle_at(d, self.level)

    def segment(self, d) -> FreemanChain:
        return self.record.segment(d, self.level)

    def is_fictive(self, d) -> bool:
        return self.alpha(d) in self.cycle(d)

    def region_of(self, d):
        """Region id of the vertex of d: the base owner of its smallest dart."""
        rep = min(self.cycle(d), key=lambda x: (abs(x), -x))
        return self.record.base.owner[rep]


@dataclass
class BoundaryLoop:
    """One closed boundary component of a region (set)."""

    darts: list        # visited separating darts, traversal order
    chain: FreemanChain

    @property
    def outer(self) -> bool:
        """True when the traced regions lie inside this loop.

        Boundary darts keep their region on the left; with image rows
        growing downward, the enclosing loop of a region is the one with
        negative shoelace sum.
        """
        return signed_area2(self.chain) < 0


def signed_area2(chain: FreemanChain) -> int:
    """Twice the shoelace area of a closed chain (sign follows traversal)."""
    total = 0
    x, y = chain.start
    for c in chain.codes:
        dx, dy = MOVES[c]
        total += x * dy - y * dx  # cross(p, p + step), telescoped
        x += dx
        y += dy
    if (x, y) != tuple(chain.start):
        raise MapError("chain is not closed")
    return total


def boundary(view: LevelView, d, l_in) -> BoundaryLoop:
    """Trace the closed boundary through dart d around the darts `l_in`.

    `l_in` is the union of the vertex orbits of the traced region(s);
    d must be separating with respect to it (alpha(d) not in l_in).
    """
    l_in = set(l_in)
    if view.alpha(d) in l_in:
        raise MapError(f"dart {d} is not separating for the given region set")
    darts = []
    codes = []
    start = None
    b = d
    guard = 0
    limit = 2 * len(view.record.base.map) + 8
    while True:
        seg = view.segment(b)
        if start is None:
            start = seg.start
        darts.append(b)
        codes.extend(seg.codes)
        b = view.sigma(b)
        while view.alpha(b) in l_in:  # skip fictive or interior edges
            b = view.phi(b)
            guard += 1
            if guard > limit:
                raise MapError("boundary trace does not terminate")
        if b == d:
            break
        guard += 1
        if guard > limit:
            raise MapError("boundary trace does not terminate")
    return BoundaryLoop(darts, FreemanChain(start=start, codes=codes, closed=True))


def region_boundaries(view: LevelView, d) -> list[BoundaryLoop]:
    """All closed boundary components of region sigma*(d), outer loop first."""
    orbit = view.cycle(d)
    l_in = set(orbit)
    loops = []
    seen = set()
    for b in orbit:
        if b in seen or view.alpha(b) in l_in:
            continue
        loop = boundary(view, b, l_in)
        seen.update(loop.darts)
        loops.append(loop)
    loops.sort(key=lambda lp: not lp.outer)
    return loops


def boundary_linels(view: LevelView, d):
    """Unoriented linel set of all boundaries of region sigma*(d)."""
    from .grid import unoriented_linel

    linels = set()
    for loop in region_boundaries(view, d):
        x, y = loop.chain.start
        for c in loop.chain.codes:
            linels.add(unoriented_linel((x, y), c))
            dx, dy = MOVES[c]
            x += dx
            y += dy
    return linels
