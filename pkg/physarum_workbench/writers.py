"""
Shared file writers for the three engines.

Space-time diagrams and swarm frames are written as binary PGM (P5),
tabular metrics as CSV through pandas, and every output is checksummed
with SHA-256 for the run manifest.
"""

import hashlib
import logging
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def write_pgm(path: Union[str, Path], image: np.ndarray) -> Path:
    """
    Write an 8-bit greyscale image as binary PGM (P5).

    Args:
        path: Destination file
        image: 2-D array of values in [0, 255]; row 0 is written first

    Returns:
        The path written
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError(f"Invalid image shape: {image.shape}. Must be 2-D")
    if image.size and (image.min() < 0 or image.max() > 255):
        raise ValueError("Invalid image values. Must lie in [0, 255]")

    path = Path(path)
    height, width = image.shape
    with open(path, 'wb') as f:
        f.write(b'P5\n')
        f.write(f'{width} {height}\n'.encode('ascii'))
        f.write(b'255\n')
        f.write(np.ascontiguousarray(image, dtype=np.uint8).tobytes())
    logger.debug(f"Wrote {width}x{height} PGM to {path}")
    return path


def read_pgm(path: Union[str, Path]) -> np.ndarray:
    """Read a binary PGM written by write_pgm."""
    with open(path, 'rb') as f:
        data = f.read()
    # header is three whitespace-terminated tokens after the magic number
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b'P5':
        raise ValueError(f"Not a binary PGM file: {path}")
    width, height = int(tokens[1]), int(tokens[2])
    pixels = np.frombuffer(data[pos + 1:pos + 1 + width * height], dtype=np.uint8)
    return pixels.reshape(height, width)


def append_csv_row(path: Union[str, Path], row: Dict[str, Any]) -> Path:
    """
    Append one row to a CSV file, writing the header on first use.

    Numbers are written with a '.' decimal separator regardless of locale.
    """
    path = Path(path)
    frame = pd.DataFrame([row])
    frame.to_csv(path, mode='a', header=not path.exists(), index=False)
    return path


def file_sha256(path: Union[str, Path]) -> str:
    """SHA-256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()
