"""Initial map of a W x H 4-connected sampling grid with linel embedding.

Vertices are the W*H pixels plus one background vertex; edges are the
interpixel linels.  Every dart is embedded as an oriented linel given by a
start pointel and a Freeman code, oriented so that the owning region lies
on the left of the travel direction.

Freeman codes (image rows grow downward): 0 = +x, 1 = -y (up), 2 = -x,
3 = +y (down).  Dart labeling: positive ids assigned row-major; the
grid builder chooses alpha(d) = -d.
"""

from __future__ import annotations

from .map_core import CombMap, MapError

# Freeman code -> pointel displacement
MOVES = {0: (1, 0), 1: (0, -1), 2: (-1, 0), 3: (0, 1)}

BACKGROUND = -1  # region id of the infinite face


class GridMap:
    """Base combinatorial map of the sampling grid plus its embedding."""

    def __init__(self, width, height, cmap, embedding, owner, background_darts):
        self.width = width
        self.height = height
        self.map = cmap
        #: dart -> (start_x, start_y, freeman code)
        self.embedding = embedding
        #: dart -> owning region id (pixel index y*W+x, or BACKGROUND)
        self.owner = owner
        #: darts of the background sigma-cycle, in cycle order
        self.background_darts = background_darts

    def linel_of(self, d: int):
        """Oriented linel of a dart: ((start pointel), code)."""
        try:
            x, y, code = self.embedding[d]
        except KeyError:
            raise MapError(f"unknown dart {d!r}") from None
        return (x, y), code

    def pixel_of_vertex(self, region_id: int):
        if region_id == BACKGROUND:
            return None
        return (region_id % self.width, region_id // self.width)


def build_grid(width: int, height: int) -> GridMap:
    """Construct the level-0 map of a width x height pixel grid.

    Every pixel sigma-cycle has length 4; the background cycle has length
    2*(width+height).  Edge count is 2*W*H - W - H interior plus
    2*(W+H) border linels.
    """
    if width < 1 or height < 1:
        raise ValueError(f"grid dimensions must be positive, got {width}x{height}")
    W, H = width, height

    sigma: dict[int, int] = {}
    alpha: dict[int, int] = {}
    embedding: dict[int, tuple[int, int, int]] = {}
    owner: dict[int, int] = {}

    # Edge ids, row-major.  For each pixel (x, y): a right-side edge when
    # x < W-1 (to the right neighbour) and a bottom-side edge when y < H-1,
    # then the border linels.  The positive dart of an interior edge is the
    # one owned by the lesser (row-major) pixel; border edges give the
    # positive dart to the pixel.
    next_id = 1

    def new_edge():
        nonlocal next_id
        d = next_id
        next_id += 1
        return d

    right_edge = {}   # (x, y) -> dart owned by pixel (x,y) on its right side
    bottom_edge = {}  # (x, y) -> dart owned by pixel (x,y) on its bottom side
    top_border = {}   # x -> pixel-owned dart of the top border linel
    bottom_border = {}
    left_border = {}
    right_border = {}

    for y in range(H):
        for x in range(W):
            if x < W - 1:
                right_edge[(x, y)] = new_edge()
            if y < H - 1:
                bottom_edge[(x, y)] = new_edge()
    for x in range(W):
        top_border[x] = new_edge()
        bottom_border[x] = new_edge()
    for y in range(H):
        left_border[y] = new_edge()
        right_border[y] = new_edge()

    def emit(dart, start, code, region):
        alpha[dart] = -dart
        alpha[-dart] = dart
        embedding[dart] = (start[0], start[1], code)
        owner[dart] = region

    # Pixel-side darts.  Sides: R bottom-to-top (code 1), T right-to-left
    # (code 2), L top-to-bottom (code 3), B left-to-right (code 0); each
    # keeps the pixel on the left of the travel direction.
    def side_dart(x, y, side):
        """Dart owned by pixel (x, y) on the given side."""
        if side == "R":
            return right_edge[(x, y)] if x < W - 1 else right_border[y]
        if side == "L":
            return -right_edge[(x - 1, y)] if x > 0 else left_border[y]
        if side == "B":
            return bottom_edge[(x, y)] if y < H - 1 else bottom_border[x]
        if side == "T":
            return -bottom_edge[(x, y - 1)] if y > 0 else top_border[x]
        raise AssertionError(side)

    side_geometry = {
        "R": (lambda x, y: (x + 1, y + 1), 1),
        "T": (lambda x, y: (x + 1, y), 2),
        "L": (lambda x, y: (x, y), 3),
        "B": (lambda x, y: (x, y + 1), 0),
    }

    for y in range(H):
        for x in range(W):
            region = y * W + x
            cycle = []
            for side in ("R", "T", "L", "B"):  # counter-clockwise on screen
                d = side_dart(x, y, side)
                start_of, code = side_geometry[side]
                emit(d, start_of(x, y), code, region)
                cycle.append(d)
            for i, d in enumerate(cycle):
                sigma[d] = cycle[(i + 1) % 4]

    # Background vertex: border darts clockwise on screen around the image.
    bg_cycle = []
    for x in range(W):  # top edge, left to right
        d = -top_border[x]
        embedding[d] = (x, 0, 0)
        owner[d] = BACKGROUND
        bg_cycle.append(d)
    for y in range(H):  # right edge, top to bottom
        d = -right_border[y]
        embedding[d] = (W, y, 3)
        owner[d] = BACKGROUND
        bg_cycle.append(d)
    for x in range(W - 1, -1, -1):  # bottom edge, right to left
        d = -bottom_border[x]
        embedding[d] = (x + 1, H, 2)
        owner[d] = BACKGROUND
        bg_cycle.append(d)
    for y in range(H - 1, -1, -1):  # left edge, bottom to top
        d = -left_border[y]
        embedding[d] = (0, y + 1, 1)
        owner[d] = BACKGROUND
        bg_cycle.append(d)
    for i, d in enumerate(bg_cycle):
        sigma[d] = bg_cycle[(i + 1) % len(bg_cycle)]

    cmap = CombMap(sigma, alpha)
    return GridMap(W, H, cmap, embedding, owner, bg_cycle)


def linel_end(start, code):
    """End pointel of a unit move."""
    dx, dy = MOVES[code]
    return (start[0] + dx, start[1] + dy)


def unoriented_linel(start, code):
    """Canonical (lexicographically smaller endpoint first) linel key."""
    end = linel_end(start, code)
    return (start, end) if start <= end else (end, start)
