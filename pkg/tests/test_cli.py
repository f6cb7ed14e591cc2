"""Image I/O, pyramid persistence and the command-line driver."""

import numpy as np
import pytest

from combiseg import cli
from combiseg.energy import EnergyParams
from combiseg.segmenter import build_pyramid


def write_pgm(path, img, comment=False):
    h, w = img.shape
    note = "# c\n" if comment else ""
    header = f"P5\n{note}{w} {h}\n255\n"
    path.write_bytes(header.encode() + img.astype(np.uint8).tobytes())


def write_ppm(path, img):
    h, w = img.shape[:2]
    path.write_bytes(f"P6\n{w} {h}\n255\n".encode()
                     + img.astype(np.uint8).tobytes())


@pytest.fixture
def gray(tmp_path):
    rng = np.random.default_rng(0)
    img = np.zeros((12, 12), dtype=np.uint8)
    img[:, :6] = 60
    img[:, 6:] = 200
    img = np.clip(img + rng.normal(0, 5, img.shape), 0, 255).astype(np.uint8)
    p = tmp_path / "in.pgm"
    write_pgm(p, img)
    return p, img


# -- image loading -----------------------------------------------------------


def test_load_graymap_roundtrip(gray):
    path, img = gray
    assert np.array_equal(cli.load_image(path), img)


def test_load_pixmap(tmp_path):
    img = np.arange(2 * 3 * 3, dtype=np.uint8).reshape(2, 3, 3)
    p = tmp_path / "in.ppm"
    write_ppm(p, img)
    assert np.array_equal(cli.load_image(p), img)


def test_header_comments_are_skipped(tmp_path):
    img = np.full((2, 2), 7, dtype=np.uint8)
    p = tmp_path / "c.pgm"
    write_pgm(p, img, comment=True)
    assert np.array_equal(cli.load_image(p), img)


@pytest.mark.parametrize("payload,because", [
    (b"P5\n3 3\n255\n" + b"\x00" * 8, "truncated payload"),
    (b"P5\n3 3\n65535\n" + b"\x00" * 18, "unsupported maxval"),
    (b"P4\n3 3\n1\n\x00\x00\x00", "unsupported magic"),
    (b"P5\nx 3\n255\n", "malformed header"),
    (b"P5\n0 3\n255\n", "bad dimensions"),
    (b"P5\n3", "truncated header"),
])
def test_malformed_images_are_rejected(tmp_path, payload, because):
    p = tmp_path / "bad.pnm"
    p.write_bytes(payload)
    with pytest.raises(cli.FormatError) as err:
        cli.load_image(p)
    assert because.split()[0] in str(err.value)


# -- label and overlay writers ----------------------------------------------


def test_label_write_read_roundtrip(tmp_path):
    lab = np.array([[5, 5, 9], [9, 100, 100]])
    p = tmp_path / "lab.pgm"
    cli.write_labels(lab, p)
    back = cli.read_labels(p)
    # densely remapped by first appearance
    assert np.array_equal(back, [[0, 0, 1], [1, 2, 2]])


def test_label_roundtrip_preserves_partition(tmp_path):
    rng = np.random.default_rng(1)
    lab = rng.integers(0, 500, size=(9, 7)) * 37
    p = tmp_path / "lab.pgm"
    cli.write_labels(lab, p)
    back = cli.read_labels(p)
    # same partition: equality pattern is identical
    assert (lab[:, :, None, None] == lab[None, None, :, :]).all() == \
        (back[:, :, None, None] == back[None, None, :, :]).all()
    for v in np.unique(lab):
        vals = np.unique(back[lab == v])
        assert len(vals) == 1


def test_overlay_marks_boundary_pixels(tmp_path):
    img = np.zeros((4, 4), dtype=np.uint8)
    lab = np.zeros((4, 4), dtype=int)
    lab[:, 2:] = 1
    p = tmp_path / "ov.ppm"
    cli.write_overlay(img, lab, p)
    out = cli.load_image(p)
    red = (out == (255, 0, 0)).all(axis=2)
    assert red[:, 1].all() and red[:, 2].all()
    assert not red[:, 0].any() and not red[:, 3].any()


# -- pyramid persistence -----------------------------------------------------


def test_pyramid_file_reproduces_every_level(tmp_path, gray):
    _, img = gray
    result = build_pyramid(img, EnergyParams(), init="flat_zones",
                           stop="single_region")
    p = tmp_path / "pyr.json"
    cli.save_pyramid(result.record, p)
    back = cli.load_pyramid(p)
    assert back.levels == result.levels
    for level in range(result.levels):
        assert np.array_equal(back.labels(level), result.labels(level))
    s1, a1 = back.top.copy_perms()
    s2, a2 = result.record.top.copy_perms()
    assert s1 == s2 and a1 == a2


def test_pyramid_loader_rejects_other_files(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"format": "something-else"}')
    with pytest.raises(cli.FormatError):
        cli.load_pyramid(p)


# -- driver ------------------------------------------------------------------


def test_main_end_to_end(tmp_path, gray, capsys):
    path, img = gray
    out = tmp_path / "out"
    rc = cli.main([str(path), "--init", "flat_zones", "--stop", "min_regions",
                   "--stop-value", "2", "--out", str(out),
                   "--save-pyramid", str(tmp_path / "p.json")])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "levels:" in printed and "final energy:" in printed
    files = sorted(f.name for f in out.iterdir())
    labels = [f for f in files if f.startswith("labels_")]
    assert len(labels) == 1
    assert "merge_history.txt" in files
    lab = cli.read_labels(out / labels[0])
    assert len(np.unique(lab)) == 2
    # history file: level, two region ids, delta, cumulative energy
    lines = (out / "merge_history.txt").read_text().splitlines()
    assert lines[0].startswith("#")
    first = lines[1].split()
    assert len(first) == 5
    int(first[0]); int(first[1]); int(first[2])
    float(first[3]); float(first[4])
    assert (tmp_path / "p.json").exists()


def test_main_exports_requested_levels(tmp_path, gray):
    path, _ = gray
    out = tmp_path / "out"
    rc = cli.main([str(path), "--stop", "max_steps", "--stop-value", "3",
                   "--out", str(out), "--levels", "0,2"])
    assert rc == 0
    names = sorted(f.name for f in out.iterdir())
    assert "labels_00000.pgm" in names and "labels_00002.pgm" in names


def test_main_error_paths(tmp_path, gray, capsys):
    path, _ = gray
    assert cli.main([str(tmp_path / "missing.pgm")]) == 1
    assert cli.main([str(path), "--nu", "-1"]) == 2
    assert cli.main([str(path), "--stop", "max_steps", "--stop-value", "1",
                     "--levels", "99", "--out", str(tmp_path / "o")]) == 2
    assert cli.main([str(path), "--levels", "zero",
                     "--out", str(tmp_path / "o")]) == 2
    capsys.readouterr()
