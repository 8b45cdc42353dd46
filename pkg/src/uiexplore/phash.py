"""64-bit DCT perceptual hash of grayscale rasters and Hamming distance."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

HASH_SIZE = 8
SAMPLE_SIZE = 32
DEFAULT_TAU = 8
# DCT coefficients are rounded before the median test so that analytically
# equal coefficients (e.g. all AC terms of a flat image) compare equal.
COEFF_DECIMALS = 6


class EmptyImage(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Hash64:
    bits: int

    def __post_init__(self):
        if not 0 <= self.bits < 1 << 64:
            raise ValueError("Hash64 holds exactly 64 bits")

    @classmethod
    def from_hex(cls, text: str) -> "Hash64":
        return cls(int(text, 16))

    def hex(self) -> str:
        return f"{self.bits:016x}"

    def __str__(self) -> str:
        return self.hex()

    def __sub__(self, other: "Hash64") -> int:
        return hamming(self, other)


ZERO = Hash64(0)
ONES = Hash64((1 << 64) - 1)


def hamming(a: Hash64, b: Hash64) -> int:
    return (a.bits ^ b.bits).bit_count()


@lru_cache(maxsize=None)
def _area_weights(n_in: int, n_out: int) -> np.ndarray:
    """Matrix W (n_out x n_in) such that W @ x averages x over equal-width bins."""
    w = np.zeros((n_out, n_in))
    scale = n_in / n_out
    for i in range(n_out):
        lo, hi = i * scale, (i + 1) * scale
        for j in range(int(np.floor(lo)), min(int(np.ceil(hi)), n_in)):
            overlap = min(hi, j + 1) - max(lo, j)
            if overlap > 0:
                w[i, j] = overlap
    return w / scale


def area_downsample(raster: np.ndarray, size: int = SAMPLE_SIZE) -> np.ndarray:
    img = np.asarray(raster, dtype=np.float64)
    h, w = img.shape
    return _area_weights(h, size) @ img @ _area_weights(w, size).T


@lru_cache(maxsize=None)
def _dct_matrix(n: int) -> np.ndarray:
    # unnormalized type-II: X_k = 2 * sum_n x_n cos(pi k (2n + 1) / 2N)
    k = np.arange(n)[:, None]
    m = np.arange(n)[None, :]
    return 2.0 * np.cos(np.pi * k * (2 * m + 1) / (2 * n))


def dct2(block: np.ndarray) -> np.ndarray:
    c = _dct_matrix(block.shape[0])
    r = _dct_matrix(block.shape[1])
    return c @ block @ r.T


def select_coefficients(coeffs: np.ndarray) -> np.ndarray:
    """The 63 AC terms of the top-left 8x8 block, then coefficient (0, 8)."""
    block = coeffs[:HASH_SIZE, :HASH_SIZE].ravel()[1:]
    return np.append(block, coeffs[0, HASH_SIZE])


def bits_from_coefficients(selected: np.ndarray) -> Hash64:
    selected = np.round(selected, COEFF_DECIMALS)
    above = selected > np.median(selected)
    value = 0
    for bit in above:
        value = (value << 1) | int(bit)
    return Hash64(value)


def phash(raster: np.ndarray) -> Hash64:
    raster = np.asarray(raster)
    if raster.size == 0 or raster.ndim != 2:
        raise EmptyImage("raster must be a nonempty 2-D array")
    return bits_from_coefficients(select_coefficients(dct2(area_downsample(raster))))
