"""Compare the compiled and pure curve-geometry backends.

Times tangent/length estimation on digital circle boundaries of growing
radius and reports the speedup plus the maximum numerical difference.

Run:  python3 benchmarks/benchmark_backends.py
"""

from __future__ import annotations

import time

import numpy as np

from combiseg import estimators


def circle_chain(radius: int) -> list[int]:
    """Freeman codes of the boundary of a digital disk (left-hand trace)."""
    r2 = radius * radius

    def inside(px, py):
        return (px + 0.5) ** 2 + (py + 0.5) ** 2 <= r2

    # start on the top edge of the topmost-leftmost pixel
    top = None
    for y in range(-radius - 1, radius + 1):
        for x in range(-radius - 1, radius + 1):
            if inside(x, y):
                top = (x, y)
                break
        if top:
            break
    x, y = top
    start = (x + 1, y)
    codes = []
    cx, cy, c = start[0], start[1], 2
    moves = {0: (1, 0), 1: (0, -1), 2: (-1, 0), 3: (0, 1)}
    while True:
        codes.append(c)
        dx, dy = moves[c]
        cx, cy = cx + dx, cy + dy
        if (cx, cy) == start:
            break
        for cand in ((c + 1) % 4, c, (c - 1) % 4, (c + 2) % 4):
            dx, dy = moves[cand]
            nx, ny = cx + dx, cy + dy
            # left pixel of an oriented linel (region on the left, y down)
            left = {0: (cx, cy - 1), 1: (cx - 1, cy - 1),
                    2: (cx - 1, cy), 3: (cx, cy)}[cand]
            right = {0: (cx, cy), 1: (cx, cy - 1),
                     2: (cx - 1, cy - 1), 3: (cx - 1, cy)}[cand]
            if inside(*left) and not inside(*right):
                c = cand
                break
    return codes


def bench(fn, codes, repeats):
    t0 = time.perf_counter()
    for _ in range(repeats):
        out = fn(codes, True)
    return (time.perf_counter() - t0) / repeats, np.asarray(out)


def main():
    if estimators.backend() != "compiled":
        print("compiled backend unavailable; nothing to compare")
        return
    from combiseg import _curvekernel

    print(f"{'radius':>7} {'linels':>7} {'pure (ms)':>10} "
          f"{'compiled (ms)':>14} {'speedup':>8} {'max |diff|':>11}")
    for radius in (20, 50, 100, 200, 400):
        codes = circle_chain(radius)
        repeats = max(1, 2000 // radius)
        t_pure, a_pure = bench(estimators.tangent_angles_py, codes, repeats)
        t_comp, a_comp = bench(_curvekernel.tangent_angles, codes, repeats)
        diff = float(np.max(np.abs(a_pure - a_comp)))
        print(f"{radius:>7} {len(codes):>7} {t_pure * 1e3:>10.2f} "
              f"{t_comp * 1e3:>14.3f} {t_pure / t_comp:>7.1f}x {diff:>11.2e}")


if __name__ == "__main__":
    main()
