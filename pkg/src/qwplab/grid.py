"""Uniform periodic grids and sampled wavefunctions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import QWPError

SNAPSHOT_MAGIC = b"QWPLAB01"


class GridResolutionError(QWPError):
    pass


class InsufficientCoverageError(GridResolutionError):
    pass


@dataclass(frozen=True)
class Grid:
    """``n`` points ``x_min + j*dx`` with ``dx = (x_max - x_min)/n``.

    The right end point is excluded; the grid is periodic, so the trapezoidal
    rule reduces to ``dx * sum``.
    """

    x_min: float
    x_max: float
    n: int = 4096

    def __post_init__(self):
        if self.n < 256 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 256, got {self.n}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @classmethod
    def centered(cls, center: float, half_width: float, n: int = 4096) -> "Grid":
        return cls(center - half_width, center + half_width, n)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n, self.dx)

    @property
    def k_max(self) -> float:
        return math.pi / self.dx


@dataclass
class GridWavefunction:
    samples: np.ndarray
    grid: Grid

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got {self.samples.shape}")

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def norm(self) -> float:
        return math.sqrt(self.grid.dx * float(np.sum(np.abs(self.samples) ** 2)))

    def normalized(self) -> "GridWavefunction":
        return GridWavefunction(self.samples / self.norm(), self.grid)

    def copy(self) -> "GridWavefunction":
        return GridWavefunction(self.samples.copy(), self.grid)


def dump_snapshot(psi: GridWavefunction, path) -> None:
    """Write ``x``, ``Re psi``, ``Im psi`` as little-endian float64 columns
    after the 8-byte magic header."""
    cols = np.concatenate([psi.x, psi.samples.real, psi.samples.imag]).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(cols.tobytes())


def load_snapshot(path) -> GridWavefunction:
    raw = Path(path).read_bytes()
    if raw[:8] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: bad magic header")
    body = np.frombuffer(raw[8:], dtype="<f8")
    if body.size % 3:
        raise ValueError(f"{path}: truncated snapshot")
    n = body.size // 3
    x, re, im = body[:n], body[n:2 * n], body[2 * n:]
    dx = x[1] - x[0]
    grid = Grid(float(x[0]), float(x[0] + n * dx), n)
    return GridWavefunction(re + 1j * im, grid)
