"""Combinatorial pyramid: reduction kernels and the implicit per-dart encoding.

A pyramid is an initial grid map successively reduced by contraction
kernels (CK), removal kernels of empty self-loops (RKESL) and removal
kernels of empty double edges (RKEDE).  Rather than storing every reduced
map, the pyramid records for each base dart the level at which it dies and
the operation that killed it; permutations of intermediate levels are
answered by walks over the base map, and the geometric embedding of a
reduced dart is recovered as its receptive segment of base darts.

RKEDE convention: the kernel contains all darts belonging to a dual vertex
of degree 2 (a phi-cycle of length 2).  Removing a maximal chain of double
edges keeps the two extremal darts, which are re-paired into a single
surviving edge; alpha is therefore relabelled, never assumed to be
negation above level 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .map_core import CombMap, MapError, _dart_key
from .grid import GridMap, build_grid, MOVES

_INF = float("inf")

CONTRACTED = "contracted"
REMOVED_ESL = "removed_esl"
REMOVED_EDE = "removed_ede"

_KIND_TO_OP = {
    "contraction": CONTRACTED,
    "removal_esl": REMOVED_ESL,
    "removal_ede": REMOVED_EDE,
}


class KernelError(MapError):
    """Raised when a kernel violates its structural preconditions."""


@dataclass(frozen=True)
class Kernel:
    kind: str  # contraction | removal_esl | removal_ede
    darts: tuple

    def __post_init__(self):
        if self.kind not in _KIND_TO_OP:
            raise KernelError(f"unknown kernel kind {self.kind!r}")

    def __len__(self):
        return len(self.darts)


@dataclass
class FreemanChain:
    """A 4-connected digital path as a start pointel plus Freeman codes."""

    start: tuple
    codes: list
    closed: bool = False

    def __len__(self):
        return len(self.codes)

    def points(self):
        """All visited pointels (len(codes)+1 of them; closed chains repeat
        the start as last point)."""
        pts = [self.start]
        x, y = self.start
        for c in self.codes:
            dx, dy = MOVES[c]
            x += dx
            y += dy
            pts.append((x, y))
        return pts


# ---------------------------------------------------------------------------
# Pure level-to-level operations (used for explicit replay and small fixtures)
# ---------------------------------------------------------------------------


def _vertex_darts(sigma, d):
    orbit = [d]
    cur = sigma[d]
    while cur != d:
        orbit.append(cur)
        cur = sigma[cur]
    return orbit


def contract(level_map: CombMap, kernel: Kernel) -> CombMap:
    """Contract a forest of edges, merging their endpoint vertices."""
    if kernel.kind != "contraction":
        raise KernelError(f"contract() needs a contraction kernel, got {kernel.kind}")
    sigma, alpha = level_map.copy_perms()
    kset = set(kernel.darts)
    for d in kernel.darts:
        if d not in alpha:
            raise KernelError(f"kernel dart {d} not in map")
        if alpha[d] not in kset:
            raise KernelError(f"kernel not closed under alpha at {d}")
    _check_forest(sigma, alpha, kset)
    new_sigma = {}
    for d in alpha:
        if d in kset:
            continue
        x = sigma[d]
        guard = 0
        while x in kset:
            x = sigma[alpha[x]]
            guard += 1
            if guard > len(alpha):
                raise KernelError("contraction walk does not terminate")
        new_sigma[d] = x
    new_alpha = {d: a for d, a in alpha.items() if d not in kset}
    return CombMap(new_sigma, new_alpha)


def _check_forest(sigma, alpha, kset):
    """Kernel edges must contain no self-loop and induce no vertex cycle."""
    vertex = {}
    for d in alpha:
        if d not in vertex:
            orbit = _vertex_darts(sigma, d)
            rep = min(orbit, key=_dart_key)
            for x in orbit:
                vertex[x] = rep
    parent = {}

    def find(v):
        root = v
        while parent.get(root, root) != root:
            root = parent[root]
        while parent.get(v, v) != v:
            parent[v], v = root, parent[v]
        return root

    seen_edges = set()
    for d in kset:
        e = frozenset((d, alpha[d]))
        if e in seen_edges:
            continue
        seen_edges.add(e)
        u, v = vertex[d], vertex[alpha[d]]
        if u == v:
            raise KernelError(f"contraction kernel contains self-loop edge at {d}")
        ru, rv = find(u), find(v)
        if ru == rv:
            raise KernelError(f"contraction kernel contains a cycle through {d}")
        parent[ru] = rv


def remove(level_map: CombMap, kernel: Kernel) -> CombMap:
    """Remove an RKESL or RKEDE kernel, splicing sigma (and for RKEDE,
    re-pairing the surviving extremal darts of each double-edge chain)."""
    if kernel.kind == "removal_esl":
        return _remove_esl(level_map, kernel)
    if kernel.kind == "removal_ede":
        return _remove_ede(level_map, kernel)[0]
    raise KernelError(f"remove() needs a removal kernel, got {kernel.kind}")


def _splice_sigma(sigma, alive, kset):
    new_sigma = {}
    for d in alive:
        x = sigma[d]
        guard = 0
        while x in kset:
            x = sigma[x]
            guard += 1
            if guard > len(sigma):
                raise KernelError("removal splice does not terminate")
        new_sigma[d] = x
    return new_sigma


def _remove_esl(level_map, kernel):
    sigma, alpha = level_map.copy_perms()
    kset = set(kernel.darts)
    for d in kset:
        if d not in alpha:
            raise KernelError(f"kernel dart {d} not in map")
        if alpha[d] not in kset:
            raise KernelError(f"RKESL kernel not closed under alpha at {d}")
    alive = [d for d in alpha if d not in kset]
    new_sigma = _splice_sigma(sigma, alive, kset)
    new_alpha = {d: alpha[d] for d in alive}
    return CombMap(new_sigma, new_alpha)


def _remove_ede(level_map, kernel):
    """Returns (reduced map, relabel pairs).  Replays the deterministic
    face-by-face removal restricted to the kernel's darts."""
    sigma, alpha = level_map.copy_perms()
    kset = set(kernel.darts)
    for d in kset:
        if d not in alpha:
            raise KernelError(f"kernel dart {d} not in map")
    removed, events = _ede_simulation(sigma, alpha, candidates=kset)
    if set(removed) != kset:
        raise KernelError(
            f"RKEDE kernel mismatch: {sorted(kset - set(removed))} not removable"
        )
    relabels = [
        (ax, ay) if _dart_key(ax) < _dart_key(ay) else (ay, ax)
        for _, _, ax, ay in events
    ]
    return CombMap(sigma, alpha), relabels


def find_rkesl(level_map: CombMap) -> Kernel:
    """All empty self-loops (sigma(d) = alpha(d)), iterated to closure since
    a removal can expose the next enclosing loop as empty."""
    sigma, alpha = level_map.copy_perms()
    removed = _esl_simulation(sigma, alpha)
    return Kernel("removal_esl", tuple(removed))


def _esl_simulation(sigma, alpha, candidates=None, touched_out=None):
    """Destructively removes empty self-loops; returns removed darts in
    order.  `candidates` limits the scan as in `_ede_simulation`;
    `touched_out` collects surviving darts whose neighbourhood changed."""
    import heapq

    removed = []
    heap = [(_dart_key(d), d) for d in (candidates if candidates is not None else alpha)]
    heapq.heapify(heap)
    while heap:
        _, d = heapq.heappop(heap)
        if d not in alpha:
            continue
        a = alpha[d]
        if a == d or sigma[d] != a:
            continue
        if sigma[a] == d:
            continue  # the vertex is only this loop; never empty it
        # splice: predecessor of d jumps over the loop
        prev = a
        orbit_guard = 0
        while sigma[prev] != d:
            prev = sigma[prev]
            orbit_guard += 1
            if orbit_guard > len(sigma):
                raise KernelError("corrupt sigma orbit in RKESL")
        sigma[prev] = sigma[a]
        for dead in (d, a):
            del sigma[dead]
            del alpha[dead]
            removed.append(dead)
        for t in (prev, sigma[prev], alpha[prev]):
            heapq.heappush(heap, (_dart_key(t), t))
            if touched_out is not None:
                touched_out.add(t)
    return removed


def find_rkede(level_map: CombMap) -> Kernel:
    """Darts of degree-2 dual vertices (phi-cycles of length 2).

    Follows the sequential semantics: faces are processed smallest dart
    first, re-pairing as it goes, so that on a closed chain of double
    edges exactly one surviving edge remains.  A face whose two darts are
    alpha-partners is never removed (it is the last edge of a boundary).
    """
    sigma, alpha = level_map.copy_perms()
    removed = _ede_simulation(sigma, alpha)[0]
    return Kernel("removal_ede", tuple(removed))


def _find_ede_face(sigma, alpha, d):
    """The degree-2 dual vertex containing d, if removable: (d, phi(d))."""
    if d not in alpha:
        return None
    y = sigma[alpha[d]]  # phi(d)
    if y == d or alpha[d] == y:
        return None
    if sigma[alpha[y]] == d:  # phi-cycle (d, y) of length 2
        return (d, y)
    return None


def _ede_simulation(sigma, alpha, candidates=None, touched_out=None):
    """Destructively removes empty double edges; returns (removed darts in
    order, re-pair events (x, y, alpha(x), alpha(y)) in removal order).

    Faces are processed smallest-dart-first.  `candidates` restricts the
    scan to a worklist (callers must pass every dart whose neighbourhood
    changed); darts touched by each removal are fed back into the worklist,
    so localized calls agree with a global scan on a fully reduced map.
    `touched_out` collects surviving darts whose neighbourhood changed.
    """
    import heapq

    removed = []
    events = []
    heap = [(_dart_key(d), d) for d in (candidates if candidates is not None else alpha)]
    heapq.heapify(heap)
    while heap:
        _, d = heapq.heappop(heap)
        face = _find_ede_face(sigma, alpha, d)
        if face is None:
            continue
        x, y = face
        ax, ay = alpha[x], alpha[y]
        touched = {ax, ay}
        for dead in (x, y):
            # splice sigma around the vertex losing the dart
            prev = dead
            orbit_guard = 0
            while sigma[prev] != dead:
                prev = sigma[prev]
                orbit_guard += 1
                if orbit_guard > len(sigma):
                    raise KernelError("corrupt sigma orbit in RKEDE")
            sigma[prev] = sigma[dead]
            del sigma[dead]
            del alpha[dead]
            removed.append(dead)
            touched.add(prev)
        alpha[ax] = ay
        alpha[ay] = ax
        events.append((x, y, ax, ay))
        for t in touched:
            if t in alpha:
                for w in (t, alpha[t], sigma[alpha[t]]):  # t, partner, phi(t)
                    heapq.heappush(heap, (_dart_key(w), w))
                    if touched_out is not None:
                        touched_out.add(w)
    return removed, events


# ---------------------------------------------------------------------------
# Implicit pyramid record
# ---------------------------------------------------------------------------


class PyramidRecord:
    """Implicit encoding: per base dart its death level and operation, the
    RKEDE re-pairing events, the kernel sequence (for explicit replay), and
    the top map."""

    def __init__(self, base: GridMap):
        self.base = base
        self._base_sigma, self._base_alpha = base.map.copy_perms()
        self.death_level: dict[int, int] = {}
        self.death_op: dict[int, str] = {}
        self.cpartner: dict[int, int] = {}
        #: dart -> list of (level, partner), level-ascending
        self.relabels: dict[int, list] = {}
        #: kernels[t] = ordered kernels of the transition to level t+1
        self.kernels: list[list[Kernel]] = []
        self.top: CombMap = base.map

    @property
    def levels(self) -> int:
        return len(self.kernels) + 1

    # -- survival ----------------------------------------------------------

    def alive_at(self, d: int, level: int) -> bool:
        return self.death_level.get(d, _INF) > level

    def alive_darts(self, level: int):
        """All base darts still present at `level`."""
        for d in self._base_alpha:
            if self.alive_at(d, level):
                yield d

    def labels(self, level: int):
        """(H, W) array mapping every pixel to the smallest pixel id of
        its region at `level` (background is never merged in)."""
        import numpy as np

        W, H = self.base.width, self.base.height
        parent = list(range(W * H))

        def find(v):
            root = v
            while parent[root] != root:
                root = parent[root]
            while parent[v] != root:
                parent[v], v = root, parent[v]
            return root

        owner = self.base.owner
        for d, lvl in self.death_level.items():
            if lvl > level or self.death_op[d] != CONTRACTED:
                continue
            u = owner[d]
            v = owner[self.cpartner[d]]
            if u < 0 or v < 0:
                raise MapError("background vertex was merged into a region")
            ru, rv = find(u), find(v)
            if ru != rv:
                if ru > rv:
                    ru, rv = rv, ru
                parent[rv] = ru
        flat = np.fromiter((find(p) for p in range(W * H)), dtype=np.int64)
        return flat.reshape(H, W)

    def _former_ede(self, d: int, level: int) -> bool:
        return (
            self.death_op.get(d) == REMOVED_EDE
            and self.death_level[d] <= level
        )

    # -- implicit permutation queries -------------------------------------

    def sigma_at(self, d: int, level: int) -> int:
        """sigma of the reduced map at `level`, by a walk over base darts."""
        if not self.alive_at(d, level):
            raise MapError(f"dart {d} dead at level {level}")
        x = self._base_sigma[d]
        guard = 0
        limit = 4 * len(self._base_alpha) + 8
        while self.death_level.get(x, _INF) <= level:
            if self.death_op[x] == CONTRACTED:
                x = self._base_sigma[self.cpartner[x]]
            else:
                x = self._base_sigma[x]
            guard += 1
            if guard > limit:
                raise MapError("implicit sigma walk does not terminate")
        return x

    def alpha_at(self, d: int, level: int) -> int:
        if not self.alive_at(d, level):
            raise MapError(f"dart {d} dead at level {level}")
        partner = self._base_alpha[d]
        for lvl, p in self.relabels.get(d, ()):
            if lvl <= level:
                partner = p
            else:
                break
        return partner

    def phi_at(self, d: int, level: int) -> int:
        return self.sigma_at(self.alpha_at(d, level), level)

    def cycle_at(self, d: int, level: int) -> list[int]:
        orbit = [d]
        cur = self.sigma_at(d, level)
        while cur != d:
            orbit.append(cur)
            cur = self.sigma_at(cur, level)
        return orbit

    def implicit_map(self, level: int) -> CombMap:
        """Materialize the level map from implicit queries only."""
        alive = [d for d in self._base_alpha if self.alive_at(d, level)]
        sigma = {d: self.sigma_at(d, level) for d in alive}
        alpha = {d: self.alpha_at(d, level) for d in alive}
        return CombMap(sigma, alpha)

    def level_map(self, level: int) -> CombMap:
        """Explicit replay of the kernel sequence (oracle for implicit_map)."""
        if not 0 <= level < self.levels:
            raise MapError(f"level {level} out of range")
        cmap = self.base.map
        for kernel_list in self.kernels[:level]:
            for kernel in kernel_list:
                if kernel.kind == "contraction":
                    cmap = contract(cmap, kernel)
                else:
                    cmap = remove(cmap, kernel)
        return cmap

    # -- receptive segments (embedding of reduced darts) -------------------

    def receptive_segment(self, d: int, level: int) -> list[int]:
        """Base darts embedding dart d of the level map, in boundary order."""
        if not self.alive_at(d, level):
            raise MapError(f"dart {d} dead at level {level}")
        if level > 0 and self.alpha_at(d, level) in self.cycle_at(d, level):
            raise MapError(f"dart {d} is a self-loop (fictive) at level {level}")
        return self._receptive(d, level)

    def _receptive(self, d: int, level: int) -> list[int]:
        sigma0, alpha0 = self._base_sigma, self._base_alpha
        seq = [d]
        cur = d
        limit = len(alpha0) + 8
        while True:
            y = alpha0[cur]
            if self.alive_at(y, level):
                return seq
            y = sigma0[cur]  # = phi0(alpha0(cur)); pivots around cur's end pointel
            guard = 0
            while not (self.alive_at(y, level) or self._former_ede(y, level)):
                y = sigma0[alpha0[y]]
                guard += 1
                if guard > limit:
                    raise MapError("receptive segment walk does not terminate")
            cur = y
            seq.append(cur)
            if len(seq) > limit:
                raise MapError("receptive segment does not close")

    def segment(self, d: int, level: int) -> FreemanChain:
        """Freeman chain embedding of a reduced dart."""
        seq = self.receptive_segment(d, level)
        emb = self.base.embedding
        start = emb[d][:2]
        codes = [emb[b][2] for b in seq]
        return FreemanChain(start=(start[0], start[1]), codes=codes)


# ---------------------------------------------------------------------------
# In-place pyramid construction
# ---------------------------------------------------------------------------


class PyramidBuilder:
    """Single-writer construction of a pyramid, one transition at a time.

    Keeps one working copy of the current level's permutations (memory stays
    proportional to the base dart count) and fills a PyramidRecord as darts
    die.  Each transition groups the kernels applied between two published
    levels: for the segmenter, a one-edge contraction followed by the
    RKESL/RKEDE closure.
    """

    def __init__(self, grid: GridMap):
        self.record = PyramidRecord(grid)
        self.sigma, self.alpha = grid.map.copy_perms()
        self._pending: list[Kernel] | None = None

    @property
    def current_level(self) -> int:
        return len(self.record.kernels)

    def begin_transition(self):
        if self._pending is not None:
            raise MapError("previous transition not committed")
        self._pending = []

    def commit_transition(self):
        if self._pending is None:
            raise MapError("no transition in progress")
        self.record.kernels.append(self._pending)
        self._pending = None

    def _dying_level(self) -> int:
        return len(self.record.kernels) + 1

    def _record_deaths(self, darts, op):
        lvl = self._dying_level()
        rec = self.record
        for d in darts:
            rec.death_level[d] = lvl
            rec.death_op[d] = op

    def contract_edges(self, darts):
        """Contract an alpha-closed forest of current-level edges."""
        if self._pending is None:
            raise MapError("no transition in progress")
        kset = set(darts)
        for d in kset:
            if d not in self.alpha:
                raise KernelError(f"kernel dart {d} not in map")
            if self.alpha[d] not in kset:
                raise KernelError(f"kernel not closed under alpha at {d}")
        if len(kset) == 2:
            d = next(iter(kset))
            if self.alpha[d] in _vertex_darts(self.sigma, d):
                raise KernelError(f"contraction kernel contains self-loop edge at {d}")
        else:
            _check_forest(self.sigma, self.alpha, kset)
        # record partners before any mutation (contraction kernels are
        # alpha-closed at their level, so partner always lies in the kernel)
        for d in kset:
            self.record.cpartner[d] = self.alpha[d]
        # splice sigma of surviving predecessors
        vertices_done = set()
        updates = {}
        for k in kset:
            if k in vertices_done:
                continue
            orbit = _vertex_darts(self.sigma, k)
            vertices_done.update(orbit)
            for d in orbit:
                if d in kset or self.sigma[d] not in kset:
                    continue
                x = self.sigma[d]
                guard = 0
                while x in kset:
                    x = self.sigma[self.alpha[x]]
                    guard += 1
                    if guard > len(self.alpha):
                        raise KernelError("contraction walk does not terminate")
                updates[d] = x
        self.sigma.update(updates)
        for d in kset:
            del self.sigma[d]
            del self.alpha[d]
        order = sorted(kset, key=_dart_key)
        self._record_deaths(order, CONTRACTED)
        self._pending.append(Kernel("contraction", tuple(order)))
        # surviving darts whose neighbourhood changed (reduce() candidates)
        return set(updates) | {self.alpha[u] for u in updates}

    def reduce(self, candidates=None):
        """RKESL / RKEDE closure; records kernels and re-pairing events.

        `candidates` restricts the scan to the darts whose neighbourhood a
        preceding contraction changed; None scans the whole map.  Returns
        (empty self-loop darts removed, double-edge re-pair events
        (x, y, alpha(x), alpha(y))) in application order.
        """
        if self._pending is None:
            raise MapError("no transition in progress")
        lvl = self._dying_level()
        all_esl: list[int] = []
        all_events: list[tuple] = []
        while True:
            touched: set[int] = set()
            esl = _esl_simulation(self.sigma, self.alpha, candidates, touched)
            if esl:
                self._record_deaths(esl, REMOVED_ESL)
                self._pending.append(Kernel("removal_esl", tuple(esl)))
                all_esl.extend(esl)
            if candidates is not None:
                candidates = set(candidates) | touched
            ede, events = _ede_simulation(self.sigma, self.alpha, candidates, touched)
            if ede:
                self._record_deaths(ede, REMOVED_EDE)
                self._pending.append(Kernel("removal_ede", tuple(ede)))
                all_events.extend(events)
                for _, _, ax, ay in events:
                    pair = (ax, ay) if _dart_key(ax) < _dart_key(ay) else (ay, ax)
                    a, b = pair
                    self.record.relabels.setdefault(a, []).append((lvl, b))
                    self.record.relabels.setdefault(b, []).append((lvl, a))
            if not esl and not ede:
                return all_esl, all_events
            if candidates is not None:
                candidates = {t for t in touched if t in self.alpha}

    def current_map(self) -> CombMap:
        return CombMap(dict(self.sigma), dict(self.alpha))

    def finish(self) -> PyramidRecord:
        if self._pending is not None:
            raise MapError("transition in progress")
        self.record.top = self.current_map()
        return self.record
