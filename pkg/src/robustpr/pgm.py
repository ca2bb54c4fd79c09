"""Grayscale PGM images (P2 ASCII and P5 binary) as unit-interval signals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParseError


@dataclass
class GrayImage:
    width: int
    height: int
    pixels: np.ndarray  # (height, width) floats in [0, 1]
    maxval: int = 255

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.shape != (self.height, self.width):
            raise ValueError("pixel array shape must be (height, width)")
        self.pixels = np.clip(px, 0.0, 1.0)

    def as_signal(self) -> np.ndarray:
        """Row-major flattening to a real signal of length width*height."""
        return self.pixels.reshape(-1).copy()

    @classmethod
    def from_signal(cls, x: np.ndarray, width: int, height: int,
                    maxval: int = 255) -> "GrayImage":
        return cls(width=width, height=height,
                   pixels=np.asarray(x, dtype=np.float64).reshape(height, width),
                   maxval=maxval)


def _tokens(data: bytes):
    """Yield whitespace-separated header tokens, skipping '#' comments."""
    pos = 0
    while pos < len(data):
        ch = data[pos:pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            yield pos, data[pos:end]
            pos = end


def read_pgm(path) -> GrayImage:
    with open(path, "rb") as fh:
        data = fh.read()
    toks = _tokens(data)
    try:
        _, magic = next(toks)
    except StopIteration:
        raise ParseError("empty file; not a PGM image") from None
    if magic not in (b"P2", b"P5"):
        raise ParseError(f"not a PGM image (magic {magic!r}, want P2 or P5)")
    try:
        _, w = next(toks)
        _, h = next(toks)
        pos, mv = next(toks)
    except StopIteration:
        raise ParseError("truncated PGM header") from None
    try:
        width, height, maxval = int(w), int(h), int(mv)
    except ValueError:
        raise ParseError("malformed PGM header") from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ParseError("PGM header out of range")
    count = width * height
    if magic == b"P2":
        values = []
        for _, tok in toks:
            values.append(int(tok))
        if len(values) != count:
            raise ParseError(f"expected {count} pixels, found {len(values)}")
        raster = np.array(values, dtype=np.int64)
    else:
        offset = pos + len(mv) + 1  # single whitespace byte after maxval
        dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
        try:
            raster = np.frombuffer(data, dtype=dtype, count=count,
                                   offset=offset).astype(np.int64)
        except ValueError:
            raise ParseError("truncated PGM raster") from None
    if np.any(raster < 0) or np.any(raster > maxval):
        raise ParseError("pixel value outside [0, maxval]")
    pixels = raster.reshape(height, width) / maxval
    return GrayImage(width=width, height=height, pixels=pixels, maxval=maxval)


def write_pgm(path, img: GrayImage) -> None:
    """Write as binary P5 with the image's maxval."""
    raster = np.rint(np.clip(img.pixels, 0.0, 1.0) * img.maxval).astype(np.int64)
    header = f"P5\n{img.width} {img.height}\n{img.maxval}\n".encode("ascii")
    if img.maxval < 256:
        payload = raster.astype(np.uint8).tobytes()
    else:
        payload = raster.astype(">u2").tobytes()
    with open(path, "wb") as fh:
        fh.write(header + payload)
