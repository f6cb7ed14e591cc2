"""Combinatorial maps: darts, the sigma/alpha/phi permutations, orbits.

A map is a triplet (darts, sigma, alpha) where sigma is a permutation
whose cycles are the counter-clockwise dart orderings around vertices and
alpha is a fixed-point-free involution pairing the two darts of each edge.
phi = sigma o alpha; its cycles are the faces.  Dart ids are nonzero
integers.  alpha is stored explicitly and is *not* assumed to be negation:
reduction kernels may re-pair surviving darts of different base edges.
"""

from __future__ import annotations


class MapError(Exception):
    """Raised on queries with unknown darts or structurally invalid kernels."""


class CombMap:
    """One partition level.  Treated as immutable once constructed."""

    __slots__ = ("_sigma", "_alpha")

    def __init__(self, sigma: dict[int, int], alpha: dict[int, int]):
        self._sigma = sigma
        self._alpha = alpha

    @property
    def darts(self):
        return self._alpha.keys()

    def __len__(self):
        return len(self._alpha)

    def __contains__(self, d: int) -> bool:
        return d in self._alpha

    def _check(self, d: int) -> None:
        if d not in self._alpha:
            raise MapError(f"unknown dart {d!r}")

    def sigma(self, d: int) -> int:
        self._check(d)
        return self._sigma[d]

    def alpha(self, d: int) -> int:
        self._check(d)
        return self._alpha[d]

    def phi(self, d: int) -> int:
        self._check(d)
        return self._sigma[self._alpha[d]]

    def _step(self, kind: str):
        if kind == "sigma":
            return self.sigma
        if kind == "alpha":
            return self.alpha
        if kind == "phi":
            return self.phi
        raise MapError(f"unknown permutation kind {kind!r}")

    def cycle(self, d: int, kind: str = "sigma") -> list[int]:
        """Full orbit of d under the chosen permutation, starting at d."""
        step = self._step(kind)
        orbit = [d]
        cur = step(d)
        while cur != d:
            orbit.append(cur)
            cur = step(cur)
        return orbit

    def cycles(self, kind: str = "sigma") -> list[list[int]]:
        """All distinct orbits, each starting at its smallest-|id| dart."""
        step = self._step(kind)
        seen = set()
        out = []
        for d in sorted(self._alpha, key=_dart_key):
            if d in seen:
                continue
            orbit = [d]
            seen.add(d)
            cur = step(d)
            while cur != d:
                orbit.append(cur)
                seen.add(cur)
                cur = step(cur)
            out.append(orbit)
        return out

    def copy_perms(self) -> tuple[dict[int, int], dict[int, int]]:
        return dict(self._sigma), dict(self._alpha)

    def validate(self) -> list[str]:
        """Check all structural invariants; returns a list of violations.

        An empty list means the map is valid.  Includes the Euler relation
        V - E + F = 2 per connected component.
        """
        violations = []
        darts = set(self._alpha)
        if set(self._sigma) != darts:
            violations.append("sigma domain differs from dart set")
            return violations
        if 0 in darts:
            violations.append("dart id 0 present")
        for d, a in self._alpha.items():
            if a not in darts:
                violations.append(f"alpha({d}) = {a} not a dart")
            elif a == d:
                violations.append(f"alpha fixed point at {d}")
            elif self._alpha[a] != d:
                violations.append(f"alpha not an involution at {d}")
        if set(self._sigma.values()) != darts:
            violations.append("sigma is not a bijection")
        if violations:
            return violations
        for comp in self._components():
            v = _orbit_count(comp, self._sigma)
            f = _orbit_count(comp, {d: self._sigma[self._alpha[d]] for d in comp})
            e = len(comp) // 2
            if v - e + f != 2:
                violations.append(
                    f"Euler relation violated: V={v} E={e} F={f} on component of {len(comp)} darts"
                )
        return violations

    def _components(self):
        """Connected components as dart sets (under sigma and alpha)."""
        remaining = set(self._alpha)
        while remaining:
            seed = next(iter(remaining))
            comp = {seed}
            stack = [seed]
            while stack:
                d = stack.pop()
                for nxt in (self._sigma[d], self._alpha[d]):
                    if nxt not in comp:
                        comp.add(nxt)
                        stack.append(nxt)
            remaining -= comp
            yield comp

    def dump(self) -> str:
        """Debug dump: header with dart count, one line per sigma-cycle."""
        lines = [f"combmap darts={len(self._alpha)}"]
        for orbit in self.cycles("sigma"):
            lines.append(" ".join(str(d) for d in orbit))
        return "\n".join(lines) + "\n"


def _dart_key(d: int) -> tuple[int, int]:
    return (abs(d), -d)


def _orbit_count(domain, perm) -> int:
    seen = set()
    count = 0
    for d in domain:
        if d in seen:
            continue
        count += 1
        cur = d
        while cur not in seen:
            seen.add(cur)
            cur = perm[cur]
    return count
