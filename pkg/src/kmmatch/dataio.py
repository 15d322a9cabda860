"""Dataset input and artifact output: headerless point CSVs and binary PNM images.

Images travel as binary PGM (P5) or PPM (P6) with maxval 255 and are held
internally channel-major as floats in [0, 1]. No codec dependency; PNG is out
of scope.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np


def load_points_csv(path) -> np.ndarray:
    """Read a headerless CSV of decimal numbers into an (n, d) matrix."""
    rows = []
    width = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            if width is None:
                width = len(tokens)
            elif len(tokens) != width:
                raise ValueError(
                    f"{path}: line {lineno} has {len(tokens)} fields, expected {width}"
                )
            try:
                rows.append([float(tok) for tok in tokens])
            except ValueError:
                raise ValueError(f"{path}: line {lineno} has an unparseable number") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def save_points_csv(X: np.ndarray, path) -> None:
    """Write an (n, d) matrix as headerless CSV at float64 round-trip fidelity."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    lines = [",".join(f"{v:.17g}" for v in row) for row in X]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class ImageRecord:
    """One image: channel-major (channels, height, width) values in [0, 1]."""

    channels: int
    height: int
    width: int
    values: np.ndarray

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        if self.height < 1 or self.width < 1:
            raise ValueError("image dimensions must be positive")
        vals = np.asarray(self.values, dtype=np.float64).reshape(
            self.channels, self.height, self.width
        )
        if vals.min() < 0.0 or vals.max() > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")
        object.__setattr__(self, "values", vals)

    def flat_vector(self) -> np.ndarray:
        return self.values.ravel().copy()


def image_from_vector(vec: np.ndarray, channels: int, height: int, width: int,
                      clip: bool = True) -> ImageRecord:
    vals = np.asarray(vec, dtype=np.float64).reshape(channels, height, width)
    if clip:
        vals = np.clip(vals, 0.0, 1.0)
    return ImageRecord(channels, height, width, vals)


def _read_pnm_token(fh) -> bytes:
    # skip whitespace and '#' comments, then read one token
    tok = b""
    while True:
        ch = fh.read(1)
        if not ch:
            raise ValueError("truncated PNM header")
        if ch == b"#":
            while ch and ch != b"\n":
                ch = fh.read(1)
            continue
        if ch.isspace():
            if tok:
                return tok
            continue
        tok += ch


def load_image_pnm(path) -> ImageRecord:
    """Read a binary PGM (P5) or PPM (P6) file with maxval 255."""
    with open(path, "rb") as fh:
        magic = fh.read(2)
        if magic not in (b"P5", b"P6"):
            raise ValueError(f"{path}: unsupported magic {magic!r}, need P5 or P6")
        channels = 1 if magic == b"P5" else 3
        width = int(_read_pnm_token(fh))
        height = int(_read_pnm_token(fh))
        maxval = int(_read_pnm_token(fh))
        if maxval != 255:
            raise ValueError(f"{path}: maxval must be 255, got {maxval}")
        payload = fh.read(width * height * channels)
        if len(payload) != width * height * channels:
            raise ValueError(f"{path}: truncated pixel payload")
    raw = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    if channels == 1:
        vals = raw.reshape(1, height, width)
    else:
        # interleaved RGB on disk; channel-major in memory
        vals = raw.reshape(height, width, 3).transpose(2, 0, 1)
    return ImageRecord(channels, height, width, vals)


def _quantize(vals: np.ndarray) -> np.ndarray:
    return np.round(np.clip(vals, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_image_pnm(img: ImageRecord, path) -> None:
    """Write a binary PGM (1 channel) or PPM (3 channels) with maxval 255."""
    q = _quantize(img.values)
    magic = b"P5" if img.channels == 1 else b"P6"
    header = magic + f"\n{img.width} {img.height}\n255\n".encode("ascii")
    if img.channels == 1:
        payload = q[0].tobytes()
    else:
        payload = q.transpose(1, 2, 0).tobytes()
    with open(path, "wb") as fh:
        fh.write(header + payload)


def save_image_grid(images, columns: int, path) -> None:
    """Tile images row-major into one PPM with 1-pixel black separators."""
    images = list(images)
    if not images:
        raise ValueError("no images to tile")
    if columns < 1:
        raise ValueError("columns must be >= 1")
    shape = (images[0].channels, images[0].height, images[0].width)
    if any((im.channels, im.height, im.width) != shape for im in images):
        raise ValueError("all images in a grid must share one shape")
    c, h, w = shape
    rows = (len(images) + columns - 1) // columns
    canvas = np.zeros((3, rows * h + rows - 1, columns * w + columns - 1))
    for idx, im in enumerate(images):
        r, col = divmod(idx, columns)
        tile = im.values if c == 3 else np.repeat(im.values, 3, axis=0)
        canvas[:, r * (h + 1) : r * (h + 1) + h, col * (w + 1) : col * (w + 1) + w] = tile
    grid = ImageRecord(3, canvas.shape[1], canvas.shape[2], canvas)
    save_image_pnm(grid, path)


def load_image_dir(path):
    """Load every .pgm/.ppm file in a directory, sorted by file name."""
    names = sorted(
        f for f in os.listdir(path) if f.lower().endswith((".pgm", ".ppm"))
    )
    if not names:
        raise ValueError(f"{path}: no .pgm or .ppm files found")
    images = [load_image_pnm(os.path.join(path, name)) for name in names]
    shape = (images[0].channels, images[0].height, images[0].width)
    if any((im.channels, im.height, im.width) != shape for im in images):
        raise ValueError(f"{path}: images disagree on shape")
    return images


def images_to_matrix(images) -> np.ndarray:
    """Stack channel-major flattened images as matrix rows."""
    return np.stack([im.flat_vector() for im in images])
