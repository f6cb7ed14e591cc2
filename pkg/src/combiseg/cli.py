"""Command-line front end and file formats.

Reads binary portable graymaps/pixmaps (P5/P6, 8-bit), runs the
pyramidal segmentation, and writes label maps (16-bit graymaps with
densely remapped ids), boundary overlays (pixmaps with inter-region
pixels painted), a merge-history log and an optional pyramid file that
restores the full hierarchy losslessly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .grid import build_grid
from .map_core import CombMap
from .pyramid import Kernel, PyramidRecord
from .energy import EnergyParams
from .segmenter import INIT_MODES, STOP_MODES, build_pyramid


class FormatError(Exception):
    """Raised on malformed or unsupported image/pyramid files."""


# ---------------------------------------------------------------------------
# Portable graymap / pixmap I/O
# ---------------------------------------------------------------------------


def _read_header(data: bytes, magics):
    """Parse a PNM header; returns (magic, width, height, maxval, offset)."""
    pos = 0
    fields = []

    def next_token():
        nonlocal pos
        while pos < len(data):
            ch = data[pos:pos + 1]
            if ch == b"#":
                while pos < len(data) and data[pos:pos + 1] != b"\n":
                    pos += 1
            elif ch.isspace():
                pos += 1
            else:
                break
        begin = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if begin == pos:
            raise FormatError("truncated header")
        return data[begin:pos]

    magic = next_token().decode("ascii", "replace")
    if magic not in magics:
        raise FormatError(f"unsupported magic {magic!r}, expected one of {magics}")
    for _ in range(3):
        token = next_token()
        if not token.isdigit():
            raise FormatError(f"malformed header field {token!r}")
        fields.append(int(token))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"bad dimensions {width}x{height}")
    return magic, width, height, maxval, pos


def load_image(path) -> np.ndarray:
    """8-bit image from a binary graymap (P5) or pixmap (P6).

    Returns (H, W) or (H, W, 3) uint8.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    magic, width, height, maxval, pos = _read_header(data, ("P5", "P6"))
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval}, only 8-bit supported")
    channels = 3 if magic == "P6" else 1
    need = width * height * channels
    payload = data[pos:pos + need]
    if len(payload) < need:
        raise FormatError(
            f"truncated payload: expected {need} bytes, got {len(payload)}")
    arr = np.frombuffer(payload, dtype=np.uint8)
    if channels == 1:
        return arr.reshape(height, width).copy()
    return arr.reshape(height, width, 3).copy()


def write_labels(labels: np.ndarray, path) -> None:
    """Label map as a 16-bit graymap, ids densely remapped by first
    appearance in row-major order."""
    lab = np.asarray(labels)
    height, width = lab.shape
    _, dense = np.unique(lab, return_inverse=True)
    # reorder so ids follow first appearance (deterministic, readable)
    order = {}
    flat = dense.reshape(-1)
    remap = np.empty(dense.max() + 1, dtype=np.uint16)
    nxt = 0
    for v in flat:
        if v not in order:
            order[v] = nxt
            remap[v] = nxt
            nxt += 1
    if nxt > 65536:
        raise FormatError(f"too many labels for a 16-bit map: {nxt}")
    out = remap[flat].reshape(height, width)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n65535\n".encode("ascii"))
        fh.write(out.astype(">u2").tobytes())


def read_labels(path) -> np.ndarray:
    """16-bit graymap back into an (H, W) integer array."""
    with open(path, "rb") as fh:
        data = fh.read()
    _, width, height, maxval, pos = _read_header(data, ("P5",))
    if maxval != 65535:
        raise FormatError(f"label maps are 16-bit, got maxval {maxval}")
    need = width * height * 2
    payload = data[pos:pos + need]
    if len(payload) < need:
        raise FormatError(
            f"truncated payload: expected {need} bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype=">u2").reshape(height, width).astype(np.int64)


def write_overlay(image: np.ndarray, labels: np.ndarray, path) -> None:
    """Pixmap of the image with inter-region boundary pixels painted red
    (both pixels adjacent to every boundary linel)."""
    img = np.asarray(image)
    if img.ndim == 2:
        rgb = np.stack([img] * 3, axis=2).astype(np.uint8)
    else:
        rgb = img.astype(np.uint8).copy()
    lab = np.asarray(labels)
    mark = np.zeros(lab.shape, dtype=bool)
    diff_h = lab[:, 1:] != lab[:, :-1]
    mark[:, 1:] |= diff_h
    mark[:, :-1] |= diff_h
    diff_v = lab[1:, :] != lab[:-1, :]
    mark[1:, :] |= diff_v
    mark[:-1, :] |= diff_v
    rgb[mark] = (255, 0, 0)
    height, width = lab.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


# ---------------------------------------------------------------------------
# Pyramid persistence
# ---------------------------------------------------------------------------

_FORMAT = "combiseg-pyramid-1"


def save_pyramid(record: PyramidRecord, path) -> None:
    """Serialize a pyramid record; the file restores every level exactly."""
    top_sigma, top_alpha = record.top.copy_perms()
    doc = {
        "format": _FORMAT,
        "width": record.base.width,
        "height": record.base.height,
        "death": [[d, lvl, record.death_op[d]]
                  for d, lvl in sorted(record.death_level.items())],
        "cpartner": sorted(record.cpartner.items()),
        "relabels": [[d, events] for d, events in sorted(record.relabels.items())],
        "kernels": [[[k.kind, list(k.darts)] for k in level]
                    for level in record.kernels],
        "top": [[d, top_sigma[d], top_alpha[d]] for d in sorted(top_sigma)],
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, separators=(",", ":"))


def load_pyramid(path) -> PyramidRecord:
    with open(path, "r", encoding="ascii") as fh:
        doc = json.load(fh)
    if doc.get("format") != _FORMAT:
        raise FormatError(f"not a pyramid file: format {doc.get('format')!r}")
    record = PyramidRecord(build_grid(doc["width"], doc["height"]))
    for d, lvl, op in doc["death"]:
        record.death_level[d] = lvl
        record.death_op[d] = op
    record.cpartner = {d: p for d, p in doc["cpartner"]}
    record.relabels = {d: [tuple(e) for e in events]
                       for d, events in doc["relabels"]}
    record.kernels = [[Kernel(kind, tuple(darts)) for kind, darts in level]
                      for level in doc["kernels"]]
    record.top = CombMap({d: s for d, s, _ in doc["top"]},
                         {d: a for d, _, a in doc["top"]})
    return record


# ---------------------------------------------------------------------------
# Pipeline driver
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="combiseg",
        description="Hierarchical image segmentation on combinatorial "
                    "pyramids with discrete geometric estimators.")
    parser.add_argument("input", help="input image (binary P5/P6)")
    parser.add_argument("--nu", type=float, default=1.3,
                        help="boundary regularization weight (default 1.3)")
    parser.add_argument("--delta", type=float, default=1.0,
                        help="boundary gradient weight (default 1.0)")
    parser.add_argument("--length-mode", default="discrete_estimator",
                        choices=["discrete_estimator", "unit_linel"],
                        help="boundary length measure")
    parser.add_argument("--init", default="pixel_grid", choices=list(INIT_MODES),
                        help="initial over-partition")
    parser.add_argument("--stop", default="single_region",
                        choices=list(STOP_MODES), help="merge stop criterion")
    parser.add_argument("--stop-value", type=int, default=None,
                        help="region count / step count for the stop criterion")
    parser.add_argument("--levels", default=None,
                        help="comma-separated pyramid levels to export "
                             "(default: the top level)")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--save-pyramid", default=None, metavar="FILE",
                        help="also save the full hierarchy to FILE")
    return parser


def run(args) -> int:
    if args.nu < 0 or args.delta < 0:
        print("error: --nu and --delta must be nonnegative", file=sys.stderr)
        return 2
    try:
        image = load_image(args.input)
    except (OSError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    params = EnergyParams(nu=args.nu, delta=args.delta,
                          length_mode=args.length_mode)
    t0 = time.perf_counter()
    try:
        result = build_pyramid(image, params, init=args.init,
                               stop=args.stop, stop_value=args.stop_value)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    elapsed = time.perf_counter() - t0

    os.makedirs(args.out, exist_ok=True)
    top = result.levels - 1
    if args.levels is None:
        levels = [top]
    else:
        try:
            levels = [int(tok) for tok in args.levels.split(",") if tok]
        except ValueError:
            print(f"error: bad --levels {args.levels!r}", file=sys.stderr)
            return 2
        for level in levels:
            if not 0 <= level <= top:
                print(f"error: level {level} outside 0..{top}", file=sys.stderr)
                return 2
    for level in levels:
        labels = result.labels(level)
        write_labels(labels, os.path.join(args.out, f"labels_{level:05d}.pgm"))
        write_overlay(image, labels,
                      os.path.join(args.out, f"overlay_{level:05d}.ppm"))

    history_path = os.path.join(args.out, "merge_history.txt")
    with open(history_path, "w", encoding="ascii") as fh:
        fh.write("# level region_a region_b delta_e energy_after\n")
        for mr in result.history:
            fh.write(f"{mr.level} {mr.region_a} {mr.region_b} "
                     f"{mr.delta_e:.12g} {mr.energy_after:.12g}\n")

    if args.save_pyramid:
        save_pyramid(result.record, args.save_pyramid)

    final_energy = (result.history[-1].energy_after if result.history
                    else result.base_energy)
    print(f"levels: {result.levels} (base partition at level "
          f"{result.base_level}, {len(result.history)} merges)")
    print(f"final energy: {final_energy:.6g}")
    print(f"time: {elapsed:.2f} s")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
