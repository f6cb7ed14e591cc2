"""Recognition of digital straight segments on 4-connected Freeman chains.

A chain using at most one horizontal code h and one vertical code v (a
staircase) is mapped to a local frame where x counts h-steps and y
counts v-steps.  It is a standard segment when some arithmetic line
mu <= a*x - b*y < mu + a + b (a, b >= 0 coprime) contains all its
pointels.  Recognition maintains the slope (a, b), the intercept mu and
the four extremal leaning points, and extends by one code at either end
in O(1): an inside point updates leaning points, a weakly exterior
point tilts the slope around the opposite extremal leaning point, and
any other point is refused.

Maximal segments (the inclusion-maximal straight runs of a chain) are
swept with two pointers; the recognizer only grows, so the back pointer
advance rebuilds from scratch, which keeps the sweep linear in the sum
of segment lengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .grid import MOVES

_HORIZONTAL = (0, 2)


class DSS:
    """One standard digital straight segment, extendable at both ends."""

    __slots__ = ("h", "v", "a", "b", "mu", "front", "back",
                 "uf", "ul", "lf", "ll", "n")

    def __init__(self, code: int):
        if code in _HORIZONTAL:
            self.h, self.v = code, None
            self.a, self.b = 0, 1
            p = (1, 0)
        else:
            self.h, self.v = None, code
            self.a, self.b = 1, 0
            p = (0, 1)
        self.mu = 0
        self.back = (0, 0)
        self.front = p
        self.uf = self.lf = (0, 0)
        self.ul = self.ll = p
        self.n = 1

    def copy(self) -> "DSS":
        other = DSS.__new__(DSS)
        for name in DSS.__slots__:
            setattr(other, name, getattr(self, name))
        return other

    def _axis_step(self, code: int):
        """Local unit step of a code, or None when the code is refused
        (opposite to an axis code already present)."""
        if code in _HORIZONTAL:
            if self.h is not None and code != self.h:
                return None
            return (1, 0)
        if self.v is not None and code != self.v:
            return None
        return (0, 1)

    def _adopt(self, code: int):
        if code in _HORIZONTAL:
            self.h = code
        else:
            self.v = code

    def _r(self, p):
        return self.a * p[0] - self.b * p[1]

    def try_front(self, code: int) -> bool:
        """Append one code at the front; True iff still a segment."""
        step = self._axis_step(code)
        if step is None:
            return False
        p = (self.front[0] + step[0], self.front[1] + step[1])
        r = self._r(p)
        omega = self.a + self.b
        if self.mu <= r <= self.mu + omega - 1:
            if r == self.mu:
                self.ul = p
            if r == self.mu + omega - 1:
                self.ll = p
        elif r == self.mu - 1:  # tilt up around the first upper leaning point
            self.b = p[0] - self.uf[0]
            self.a = p[1] - self.uf[1]
            self.mu = self._r(p)
            self.ul = p
            self.lf = self.ll
        elif r == self.mu + omega:  # tilt down around the first lower one
            self.b = p[0] - self.lf[0]
            self.a = p[1] - self.lf[1]
            self.mu = self._r(p) - (self.a + self.b) + 1
            self.ll = p
            self.uf = self.ul
        else:
            return False
        self.front = p
        self.n += 1
        self._adopt(code)
        return True

    def try_back(self, code: int) -> bool:
        """Prepend one code at the back; True iff still a segment."""
        step = self._axis_step(code)
        if step is None:
            return False
        q = (self.back[0] - step[0], self.back[1] - step[1])
        r = self._r(q)
        omega = self.a + self.b
        if self.mu <= r <= self.mu + omega - 1:
            if r == self.mu:
                self.uf = q
            if r == self.mu + omega - 1:
                self.lf = q
        elif r == self.mu - 1:  # tilt around the last upper leaning point
            self.b = self.ul[0] - q[0]
            self.a = self.ul[1] - q[1]
            self.mu = self._r(q)
            self.uf = q
            self.ll = self.lf
        elif r == self.mu + omega:
            self.b = self.ll[0] - q[0]
            self.a = self.ll[1] - q[1]
            self.mu = self._r(q) - (self.a + self.b) + 1
            self.lf = q
            self.ul = self.uf
        else:
            return False
        self.back = q
        self.n += 1
        self._adopt(code)
        return True

    def direction(self):
        """Direction vector in image coordinates, along the traversal."""
        dx = dy = 0
        if self.h is not None:
            mx, my = MOVES[self.h]
            dx += self.b * mx
            dy += self.b * my
        if self.v is not None:
            mx, my = MOVES[self.v]
            dx += self.a * mx
            dy += self.a * my
        return (dx, dy)

    def angle(self) -> float:
        """Direction angle atan2(dy, dx), image coordinates (y down)."""
        dx, dy = self.direction()
        return math.atan2(dy, dx)


@dataclass
class MaximalSegment:
    """A maximal straight run: codes [first, last) of the swept chain.

    On closed chains indices are unrolled (first may be negative, last
    may exceed the chain length); they cover pointels first..last.
    """

    first: int
    last: int
    dss: DSS

    def __len__(self):
        return self.last - self.first


def _build(codes, i, j, n, closed):
    dss = DSS(codes[i % n] if closed else codes[i])
    for k in range(i + 1, j):
        if not dss.try_front(codes[k % n] if closed else codes[k]):
            raise AssertionError("rebuild of a known segment failed")
    return dss


def maximal_segments(codes, closed: bool = False):
    """All maximal segments of a chain, ordered by their first code.

    For closed chains the sweep wraps around; exactly one copy of each
    cyclically-distinct segment is returned.
    """
    codes = list(codes)
    n = len(codes)
    if n == 0:
        return []
    if n == 1:
        return [MaximalSegment(0, 1, DSS(codes[0]))]
    segments = []
    i, j = 0, 1
    dss = DSS(codes[0])
    if closed:
        while j - i < n and dss.try_back(codes[(i - 1) % n]):
            i -= 1
    first_i = i

    def code_at(k):
        return codes[k % n] if closed else codes[k]

    def can_grow():
        return (j - i < n or not closed) and (j < n or closed)

    while True:
        while can_grow() and dss.try_front(code_at(j)):
            j += 1
        segments.append(MaximalSegment(i, j, dss))
        if not closed and j == n:
            return segments
        # slide the back pointer until the front can grow again
        while True:
            i += 1
            if closed and i >= first_i + n:
                return segments
            if i == j:  # adjacent codes incompatible: restart at a singleton
                j = i + 1
                dss = _build(codes, i, j, n, closed)
                break
            dss = _build(codes, i, j, n, closed)
            if can_grow() and dss.try_front(code_at(j)):
                j += 1
                break
