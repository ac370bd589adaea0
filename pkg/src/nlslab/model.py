"""Reduced Hamiltonian of the truncated NLS field and its derivatives.

Conventions. With u(x) = sum_n a_n exp(-i n.x) and mean_x the normalised
torus integral, the reduced Hamiltonian is

    phi(a) = sum_n (n^2 + 1)|a_n|^2 + (2 lam / p) mean_x |u(x)|^p.

Derivatives treat a and abar as independent Wirtinger variables; the
gradient array returned here is g_n = d phi / d abar_n, so that the first
variation along a displacement (da = w, dabar = conj(w)) is

    d phi = 2 Re sum_n conj(w_n) g_n.

Tangent vectors are stored as pairs (w, cw) for the (da, dabar) slots.  A
"real direction" has cw = conj(w) and is the complex packaging of a real
displacement (dx_n, dy_n) = (Re w_n, Im w_n) of the real coordinates
a_n = x_n + i y_n.  The real pair inner product

    <v, v'> = (1/2) Re sum_n [ conj(w_n) w'_n + conj(cw_n) cw'_n ]

reduces on real directions to the Euclidean inner product of the real
coordinate displacements, so Hessian eigenvalues below agree with the
eigenvalues of the (2M x 2M) real Hessian of phi; for lam = 0 these are
2(n^2+1).

All nonlinear terms are trigonometric polynomials of degree <= pN and are
evaluated exactly on a zero-padded grid (no aliasing error).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .lattice import ModeLattice
from .params import ModelParams

# Membership in the Hamiltonian ball |phi| < B is restricted to the
# connected component of 0 by the auxiliary Sobolev bound
# sum (n^2+1)|a_n|^2 < H1_GUARD * B, which contains that component for
# small |lam| and is inactive in the defocusing case.
H1_GUARD = 5.0


@lru_cache(maxsize=32)
def _lattice(d: int, N: int) -> ModeLattice:
    return ModeLattice(d, N)


def get_lattice(params: ModelParams) -> ModeLattice:
    return _lattice(params.d, params.N)


@dataclass
class FieldState:
    """A single field configuration: coefficients in lattice order."""

    d: int
    N: int
    a: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=complex)
        lat = _lattice(self.d, self.N)
        if self.a.shape != (lat.size,):
            raise ValueError(
                f"coefficient array must have shape ({lat.size},), got {self.a.shape}"
            )

    @property
    def lattice(self) -> ModeLattice:
        return _lattice(self.d, self.N)


@dataclass
class TangentVector:
    """Displacement pair (w, cw) for the (da, dabar) slots."""

    w: np.ndarray
    cw: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=complex)
        self.cw = np.asarray(self.cw, dtype=complex)
        if self.w.shape != self.cw.shape:
            raise ValueError("tangent slots must have equal shapes")

    @classmethod
    def real_direction(cls, w) -> "TangentVector":
        w = np.asarray(w, dtype=complex)
        return cls(w, np.conj(w))

    def is_real_direction(self, tol: float = 1e-12) -> bool:
        scale = max(np.max(np.abs(self.w)), 1e-300)
        return bool(np.max(np.abs(self.cw - np.conj(self.w))) <= tol * scale)


def as_coeffs(state) -> np.ndarray:
    """Accept a FieldState or a raw coefficient array (batch axes allowed)."""
    if isinstance(state, FieldState):
        return state.a
    return np.asarray(state, dtype=complex)


def pair_inner(v: TangentVector, vp: TangentVector) -> float:
    """Real pair inner product; Euclidean on real directions."""
    s = np.sum(np.conj(v.w) * vp.w + np.conj(v.cw) * vp.cw, axis=-1)
    return 0.5 * np.real(s)


def h1_norm_sq(state, params: ModelParams):
    a = as_coeffs(state)
    lat = get_lattice(params)
    return np.sum(lat.quad_symbol * np.abs(a) ** 2, axis=-1)


def l2_norm_sq(state, params: ModelParams):
    a = as_coeffs(state)
    return np.sum(np.abs(a) ** 2, axis=-1)


def reduced_hamiltonian(state, params: ModelParams):
    """phi(a); supports leading batch axes on the coefficients."""
    a = as_coeffs(state)
    lat = get_lattice(params)
    quad = np.sum(lat.quad_symbol * np.abs(a) ** 2, axis=-1)
    if params.lam == 0.0:
        return quad
    shape = lat.grid_shape(params.p)
    u = lat.to_grid(a, shape)
    nl = lat.grid_mean(np.abs(u) ** params.p)
    return quad + (2.0 * params.lam / params.p) * np.real(nl)


def gradient(state, params: ModelParams):
    """g_n = d phi / d abar_n = (n^2+1) a_n + lam * coef_n(|u|^{p-2} u)."""
    a = as_coeffs(state)
    lat = get_lattice(params)
    g = lat.quad_symbol * a
    if params.lam != 0.0:
        shape = lat.grid_shape(params.p)
        u = lat.to_grid(a, shape)
        g = g + params.lam * lat.from_grid(np.abs(u) ** (params.p - 2) * u, shape)
    return g


def directional_derivative(g: np.ndarray, w: np.ndarray):
    """First variation of phi along the real direction w, given g."""
    return 2.0 * np.real(np.sum(np.conj(w) * g, axis=-1))


def hamiltonian_vector_field(state, params: ModelParams) -> TangentVector:
    """Symplectic field h_phi = (2 d_a phi, -2 d_abar phi).

    Orthogonal to both grad phi and grad |a|^2 under the real pair
    product, hence tangent to the energy and l2 spheres.
    """
    g = gradient(state, params)
    return TangentVector(2.0 * np.conj(g), -2.0 * g)


def in_domain(state, params: ModelParams):
    """Membership test for the configured confining region.

    Returns (inside, value, margin) where `value` is the constraint
    functional (|phi| for the Hamiltonian ball, sum |a_n|^2 for the l2
    ball) and margin = B - value.  Boundary points (margin == 0) count as
    outside.  Batched states give array results.
    """
    a = as_coeffs(state)
    if params.domain_kind == "whole_space":
        zeros = np.zeros(a.shape[:-1])
        return np.ones(a.shape[:-1], dtype=bool), zeros, np.full(a.shape[:-1], np.inf)
    if params.domain_kind == "l2_ball":
        value = l2_norm_sq(a, params)
        margin = params.B - value
        return margin > 0, value, margin
    # hamiltonian_ball
    value = np.abs(reduced_hamiltonian(a, params))
    margin = params.B - value
    inside = (margin > 0) & (h1_norm_sq(a, params) < H1_GUARD * params.B)
    return inside, value, margin


def _nl_grids(a: np.ndarray, params: ModelParams, lat: ModeLattice):
    shape = lat.grid_shape(params.p)
    u = lat.to_grid(a, shape)
    absu2 = np.abs(u) ** 2
    return shape, u, absu2


def hessian_apply(state, params: ModelParams, v: TangentVector) -> TangentVector:
    """Second-derivative action on a tangent pair.

    On real directions this is the real Hessian of phi in complex
    packaging: the output pair is again a real direction and
    <v', H v> equals the second variation.  For lam = 0 the action is
    diagonal, w_n -> 2 (n^2+1) w_n.
    """
    a = as_coeffs(state)
    lat = get_lattice(params)
    sym2 = 2.0 * lat.quad_symbol
    if params.lam == 0.0:
        return TangentVector(sym2 * v.w, sym2 * v.cw)
    p = params.p
    shape, u, absu2 = _nl_grids(a, params, lat)
    W = lat.to_grid(v.w, shape)
    real_dir = bool(np.allclose(v.cw, np.conj(v.w), rtol=0.0, atol=0.0))
    V = W if real_dir else lat.to_grid(np.conj(v.cw), shape)
    f1 = absu2 ** ((p - 2) // 2)
    f2 = u * u * (absu2 ** ((p - 4) // 2) if p > 4 else 1.0)
    half_p = 0.5 * p
    term_eta = half_p * f1 * W + (half_p - 1.0) * f2 * np.conj(V)
    eta = 2.0 * (lat.quad_symbol * v.w + params.lam * lat.from_grid(term_eta, shape))
    if real_dir:
        return TangentVector(eta, np.conj(eta))
    term_ceta = half_p * f1 * V + (half_p - 1.0) * f2 * np.conj(W)
    ceta = 2.0 * (
        lat.quad_symbol * v.cw
        + params.lam * np.conj(lat.from_grid(term_ceta, shape))
    )
    return TangentVector(eta, ceta)


def hessian_quadratic_form(state, params: ModelParams, v: TangentVector) -> float:
    """Second variation of phi along a real direction w:

        Q(w) = 2 sum (n^2+1)|w_n|^2
               + lam p  mean |u|^{p-2} |W|^2
               + lam (p-2) Re mean W^2 conj(u)^2 |u|^{p-4}.
    """
    if not v.is_real_direction():
        raise ValueError("quadratic form defined for real directions only")
    a = as_coeffs(state)
    lat = get_lattice(params)
    quad = 2.0 * np.sum(lat.quad_symbol * np.abs(v.w) ** 2)
    if params.lam == 0.0:
        return float(quad)
    p = params.p
    shape, u, absu2 = _nl_grids(a, params, lat)
    W = lat.to_grid(v.w, shape)
    f1 = absu2 ** ((p - 2) // 2)
    f4 = absu2 ** ((p - 4) // 2) if p > 4 else 1.0
    t1 = p * lat.grid_mean(f1 * np.abs(W) ** 2)
    t2 = (p - 2) * np.real(lat.grid_mean(W * W * np.conj(u) ** 2 * f4))
    return float(quad + params.lam * (np.real(t1) + t2))


def brute_force_nonlinearity(a: np.ndarray, params: ModelParams) -> float:
    """O(M^(p-1)) convolution sum for the interaction term; test oracle.

    Computes (2 lam / p) * sum over p-tuples (j1..jp) with alternating sum
    j1 - j2 + j3 - ... - jp = 0 of a_{j1} conj(a_{j2}) ... conj(a_{jp}).
    """
    lat = get_lattice(params)
    a = np.asarray(a, dtype=complex)
    p = params.p
    m = lat.size
    modes = lat.modes
    total = 0.0 + 0.0j
    # iterate over the first p-1 indices; the last conjugated index is
    # determined by the momentum constraint
    idx = np.zeros(p - 1, dtype=int)
    while True:
        n_last = np.zeros(lat.d, dtype=int)
        val = 1.0 + 0.0j
        for k in range(p - 1):
            n_k = modes[idx[k]]
            if k % 2 == 0:
                n_last = n_last + n_k
                val *= a[idx[k]]
            else:
                n_last = n_last - n_k
                val *= np.conj(a[idx[k]])
        if np.all(np.abs(n_last) <= lat.N):
            total += val * np.conj(a[lat.index_of(n_last)])
        k = p - 2
        while k >= 0:
            idx[k] += 1
            if idx[k] < m:
                break
            idx[k] = 0
            k -= 1
        if k < 0:
            break
    return (2.0 * params.lam / p) * total
