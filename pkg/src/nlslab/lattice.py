"""Truncated Fourier mode lattice and padded-grid transforms.

The field lives on the cube of integer modes {n in Z^d : |n|_inf <= N}.
A coefficient array a = (a_n) represents the trigonometric polynomial

    u(x) = sum_n a_n exp(-i n.x),   x in [0, 2pi)^d,

and all spatial integrals are normalised by (2pi)^d so that the mean of
u over the torus equals a_0 and Parseval reads mean(|u|^2) = sum |a_n|^2.
Pointwise products of such polynomials are evaluated without aliasing on
a zero-padded uniform grid: a product of total trigonometric degree D is
integrated exactly by the equal-weight grid average as soon as the grid
has at least D+1 points per dimension.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.fft import next_fast_len


class ModeLattice:
    """Mode bookkeeping for the cube |n|_inf <= N in d dimensions.

    Modes are stored in lexicographic order of the integer vectors
    (-N, ..., -N) ... (N, ..., N), which fixes the ordering of every
    serialized coefficient array.
    """

    def __init__(self, d: int, N: int):
        if d < 1:
            raise ValueError(f"lattice dimension d must be >= 1 (got {d})")
        if N < 0:
            raise ValueError(f"mode cutoff N must be >= 0 (got {N})")
        self.d = int(d)
        self.N = int(N)
        self.side = 2 * self.N + 1
        self.modes = np.array(
            list(itertools.product(range(-self.N, self.N + 1), repeat=self.d)),
            dtype=int,
        )
        self.size = self.modes.shape[0]
        self.nsq = np.sum(self.modes**2, axis=1)
        # quadratic symbol n^2 + m with unit mass
        self.quad_symbol = self.nsq + 1.0
        self._embed_cache: dict[tuple, np.ndarray] = {}

    def __repr__(self):
        return f"ModeLattice(d={self.d}, N={self.N}, size={self.size})"

    def index_of(self, n) -> int:
        """Flat index of the mode vector n in lexicographic order."""
        n = np.atleast_1d(np.asarray(n, dtype=int))
        if n.shape != (self.d,):
            raise ValueError(f"mode vector must have length {self.d}")
        if np.any(np.abs(n) > self.N):
            raise ValueError(f"mode {tuple(n)} outside |n|_inf <= {self.N}")
        idx = 0
        for c in n:
            idx = idx * self.side + (int(c) + self.N)
        return idx

    def grid_shape(self, p: int) -> tuple:
        """Padded grid shape that dealiases degree-p products exactly."""
        g = next_fast_len(max(p * self.N + 1, self.side))
        return (g,) * self.d

    def _flat_embed(self, shape: tuple) -> np.ndarray:
        key = tuple(shape)
        if key not in self._embed_cache:
            wrapped = np.stack(
                [np.mod(self.modes[:, k], shape[k]) for k in range(self.d)], axis=1
            )
            flat = np.zeros(self.size, dtype=np.int64)
            for k in range(self.d):
                flat = flat * shape[k] + wrapped[:, k]
            self._embed_cache[key] = flat
        return self._embed_cache[key]

    def to_grid(self, a: np.ndarray, shape: tuple) -> np.ndarray:
        """Evaluate u(x) = sum a_n exp(-i n.x) on the uniform grid.

        `a` may carry leading batch axes; the last axis must be the mode
        axis in lattice order.
        """
        a = np.asarray(a, dtype=complex)
        batch = a.shape[:-1]
        flat = self._flat_embed(shape)
        work = np.zeros(batch + (int(np.prod(shape)),), dtype=complex)
        work[..., flat] = a
        work = work.reshape(batch + shape)
        axes = tuple(range(len(batch), len(batch) + self.d))
        return np.fft.fftn(work, axes=axes)

    def from_grid(self, f: np.ndarray, shape: tuple) -> np.ndarray:
        """Fourier coefficients (lattice order) of grid samples f.

        Exact whenever f is a trigonometric polynomial of degree < grid
        size in every dimension.
        """
        f = np.asarray(f, dtype=complex)
        batch = f.shape[: f.ndim - self.d]
        axes = tuple(range(len(batch), len(batch) + self.d))
        coef = np.fft.ifftn(f, axes=axes).reshape(batch + (int(np.prod(shape)),))
        return coef[..., self._flat_embed(shape)]

    def grid_mean(self, f: np.ndarray) -> np.ndarray:
        """Equal-weight grid average, i.e. the normalised torus integral."""
        axes = tuple(range(f.ndim - self.d, f.ndim))
        return np.mean(f, axis=axes)
