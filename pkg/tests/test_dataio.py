import numpy as np
import pytest

from kmmatch.dataio import (
    ImageRecord,
    image_from_vector,
    images_to_matrix,
    load_image_dir,
    load_image_pnm,
    load_points_csv,
    save_image_grid,
    save_image_pnm,
    save_points_csv,
)


def test_load_points_basic(tmp_path):
    p = tmp_path / "pts.csv"
    p.write_text("0,1\n2,3\n")
    assert np.array_equal(load_points_csv(p), [[0.0, 1.0], [2.0, 3.0]])


def test_load_points_empty_file_errors(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.raises(ValueError):
        load_points_csv(p)


def test_load_points_ragged_rows_report_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n3,4,5\n")
    with pytest.raises(ValueError, match="line 2"):
        load_points_csv(p)


def test_load_points_bad_token_reports_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n3,x\n")
    with pytest.raises(ValueError, match="line 2"):
        load_points_csv(p)


def test_points_round_trip_exact(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(10, 4)) * np.pi
    p = tmp_path / "pts.csv"
    save_points_csv(X, p)
    assert np.array_equal(load_points_csv(p), X)  # 17 sig digits round-trips float64


def test_p5_round_trip(tmp_path):
    p = tmp_path / "img.pgm"
    p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 0, 255]))
    img = load_image_pnm(p)
    assert (img.channels, img.height, img.width) == (1, 2, 2)
    assert np.array_equal(img.values[0], [[0.0, 1.0], [0.0, 1.0]])


def test_p6_solid_red(tmp_path):
    p = tmp_path / "red.ppm"
    p.write_bytes(b"P6\n4 4\n255\n" + bytes([255, 0, 0] * 16))
    img = load_image_pnm(p)
    assert img.channels == 3
    assert np.array_equal(img.values.mean(axis=(1, 2)), [1.0, 0.0, 0.0])


def test_pnm_write_read_lossless_on_quantized_values(tmp_path):
    rng = np.random.default_rng(1)
    vals = np.round(rng.uniform(size=(3, 4, 6)) * 255) / 255.0
    img = ImageRecord(3, 4, 6, vals)
    p = tmp_path / "x.ppm"
    save_image_pnm(img, p)
    back = load_image_pnm(p)
    assert np.array_equal(back.values, vals)


def test_pnm_header_comments_ok(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# a comment\n2 1\n# another\n255\n" + bytes([7, 9]))
    img = load_image_pnm(p)
    assert img.width == 2 and img.height == 1


def test_pnm_error_cases(tmp_path):
    bad_magic = tmp_path / "a.pgm"
    bad_magic.write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(ValueError, match="magic"):
        load_image_pnm(bad_magic)
    bad_maxval = tmp_path / "b.pgm"
    bad_maxval.write_bytes(b"P5\n1 1\n65535\n" + bytes([0, 0]))
    with pytest.raises(ValueError, match="maxval"):
        load_image_pnm(bad_maxval)
    truncated = tmp_path / "c.ppm"
    truncated.write_bytes(b"P6\n2 2\n255\n" + bytes([1, 2, 3]))
    with pytest.raises(ValueError, match="truncated"):
        load_image_pnm(truncated)


def test_image_record_validation():
    with pytest.raises(ValueError):
        ImageRecord(2, 2, 2, np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        ImageRecord(1, 2, 2, np.full((1, 2, 2), 1.5))
    clipped = image_from_vector(np.array([-0.2, 0.5, 1.7, 0.0]), 1, 2, 2)
    assert clipped.values.min() == 0.0 and clipped.values.max() == 1.0


def test_grid_single_image_no_separators(tmp_path):
    img = ImageRecord(1, 2, 3, np.full((1, 2, 3), 0.5))
    p = tmp_path / "g.ppm"
    save_image_grid([img], 1, p)
    grid = load_image_pnm(p)
    assert (grid.height, grid.width) == (2, 3)
    # single-channel tiles are replicated into the 3-channel canvas
    assert np.allclose(grid.values, 128 / 255.0)


def test_grid_dimensions_with_separator(tmp_path):
    img = ImageRecord(3, 2, 2, np.full((3, 2, 2), 1.0))
    p = tmp_path / "g.ppm"
    save_image_grid([img] * 4, 2, p)
    grid = load_image_pnm(p)
    assert (grid.height, grid.width) == (2 * 2 + 1, 2 * 2 + 1)
    # the separator row and column are black
    assert np.array_equal(grid.values[:, 2, :], np.zeros((3, 5)))
    assert np.array_equal(grid.values[:, :, 2], np.zeros((3, 5)))


def test_grid_tile_offset_indexing(tmp_path):
    rng = np.random.default_rng(2)
    imgs = [
        ImageRecord(3, 2, 2, np.round(rng.uniform(size=(3, 2, 2)) * 255) / 255)
        for _ in range(4)
    ]
    p = tmp_path / "g.ppm"
    save_image_grid(imgs, 2, p)
    grid = load_image_pnm(p)
    # tile (r, c) starts at row r*(h+1), col c*(w+1)
    for idx, im in enumerate(imgs):
        r, c = divmod(idx, 2)
        tile = grid.values[:, r * 3 : r * 3 + 2, c * 3 : c * 3 + 2]
        assert np.array_equal(tile, im.values)


def test_grid_rejects_mixed_shapes(tmp_path):
    a = ImageRecord(1, 2, 2, np.zeros((1, 2, 2)))
    b = ImageRecord(1, 4, 4, np.zeros((1, 4, 4)))
    with pytest.raises(ValueError):
        save_image_grid([a, b], 2, tmp_path / "g.ppm")


def test_load_image_dir_sorted(tmp_path):
    for name, lvl in (("b.pgm", 20), ("a.pgm", 10)):
        (tmp_path / name).write_bytes(b"P5\n1 1\n255\n" + bytes([lvl]))
    images = load_image_dir(tmp_path)
    assert [im.values[0, 0, 0] for im in images] == [10 / 255, 20 / 255]
    M = images_to_matrix(images)
    assert M.shape == (2, 1)


def test_load_image_dir_empty_errors(tmp_path):
    with pytest.raises(ValueError):
        load_image_dir(tmp_path)
