"""Sampled convexity certificates for the reduced Hamiltonian.

The spectral gap bound for the Gibbs dynamics rests on two-sided Hessian
bounds c < phi'' < C over the confining region.  At desk scale we certify
them by sampling states from the region and estimating the extremal
eigenvalues of the real Hessian at each sample with a matrix-free
iterative solver (hessian_apply never assembles the matrix).

Sampling: isotropic Gaussian direction, normalised in the H^1 metric
sqrt(sum (n^2+1)|a_n|^2), radius from the inverse CDF of the uniform ball
law in 2M real dimensions, then rejection against the actual region
constraint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .model import (
    TangentVector,
    as_coeffs,
    get_lattice,
    h1_norm_sq,
    hessian_apply,
    in_domain,
    reduced_hamiltonian,
)
from .params import ModelParams

REGION_KINDS = ("h1_ball", "hamiltonian_ball", "l2_ball")

# The H^1 sampling ball uses radius^2 = H1_REGION_FACTOR * B; this is the
# enlarged ball on which the norm equivalence and the Hessian bounds are
# expected to hold for small |lam|.
H1_REGION_FACTOR = 5.0


def _region_member(a: np.ndarray, params: ModelParams, region: str) -> bool:
    if region == "h1_ball":
        return bool(h1_norm_sq(a, params) < H1_REGION_FACTOR * params.B)
    if region == "l2_ball":
        return bool(np.sum(np.abs(a) ** 2) < params.B)
    if region == "hamiltonian_ball":
        ball = ModelParams(
            d=params.d, p=params.p, lam=params.lam, nu=params.nu,
            N=params.N, B=params.B, domain_kind="hamiltonian_ball",
        )
        inside, _, _ = in_domain(a, ball)
        return bool(inside)
    raise ValueError(f"region must be one of {REGION_KINDS} (got {region!r})")


def sample_region_state(params: ModelParams, region: str, rng) -> np.ndarray:
    """Draw one state ~ uniform-ball heuristic, filtered by the region."""
    lat = get_lattice(params)
    if region == "l2_ball":
        r_max = np.sqrt(params.B)
        metric = np.ones(lat.size)
    else:
        r_max = np.sqrt(H1_REGION_FACTOR * params.B)
        metric = lat.quad_symbol
    dim = 2 * lat.size
    for _ in range(1000):
        w = rng.standard_normal(lat.size) + 1j * rng.standard_normal(lat.size)
        h1 = np.sqrt(np.sum(metric * np.abs(w) ** 2))
        radius = r_max * rng.uniform() ** (1.0 / dim)
        a = (radius / h1) * w
        if _region_member(a, params, region):
            return a
    raise RuntimeError(f"region {region!r} rejected 1000 consecutive samples")


def hessian_extremal_eigs(state, params: ModelParams, max_iter: int = 2000):
    """Smallest and largest eigenvalue of the real Hessian at `state`.

    Matrix-free: the Hessian acts on packed real displacement vectors
    [Re w; Im w] through hessian_apply.  Returns
    (c_local, C_local, residual, converged).
    """
    a = as_coeffs(state)
    lat = get_lattice(params)
    m = lat.size
    dim = 2 * m

    def matvec(x):
        w = x[:m] + 1j * x[m:]
        out = hessian_apply(a, params, TangentVector.real_direction(w)).w
        return np.concatenate([np.real(out), np.imag(out)])

    def _resid(val, vec):
        return float(np.linalg.norm(matvec(vec) - val * vec) / np.linalg.norm(vec))

    if dim <= 8:
        # dimension too small for ARPACK; assemble from applications
        h = np.column_stack([matvec(col) for col in np.eye(dim)])
        vals, vecs = np.linalg.eigh(0.5 * (h + h.T))
        lo, hi = float(vals[0]), float(vals[-1])
        res = max(_resid(lo, vecs[:, 0]), _resid(hi, vecs[:, -1]))
        return lo, hi, res, True

    op = spla.LinearOperator((dim, dim), matvec=matvec, dtype=float)
    converged = True
    residual = 0.0
    out = []
    for which in ("SA", "LA"):
        try:
            vals, vecs = spla.eigsh(op, k=1, which=which, maxiter=max_iter, tol=1e-10)
            out.append(float(vals[0]))
            residual = max(residual, _resid(vals[0], vecs[:, 0]))
        except spla.ArpackNoConvergence as err:  # pragma: no cover - rare
            converged = False
            if len(err.eigenvalues) > 0:
                out.append(float(err.eigenvalues[0]))
                residual = np.inf
            else:
                out.append(np.nan)
    return out[0], out[1], residual, converged


@dataclass
class ConvexityCertificate:
    """Sampled two-sided Hessian bounds over a region."""

    params: ModelParams
    region: str
    n_samples: int
    rng_seed: int
    c_min: float = np.nan
    c_max: float = np.nan
    argmin_state: np.ndarray | None = None
    sample_values: np.ndarray = field(default_factory=lambda: np.empty(0))
    residual_tol: float = 0.0
    incomplete: bool = False

    @property
    def passed(self) -> bool:
        return (
            not self.incomplete
            and np.isfinite(self.c_min)
            and np.isfinite(self.c_max)
            and self.c_min > 0.0
        )


def convexity_certificate(
    params: ModelParams, region: str, n_samples: int, rng_seed: int
) -> ConvexityCertificate:
    """Estimate c_min = min over samples of the smallest Hessian eigenvalue
    (and c_max for the largest) over the region.

    Sample states are drawn from per-sample RNG streams spawned from the
    master seed, so results do not depend on evaluation order and the
    sample loop is safe to parallelise.
    """
    if region not in REGION_KINDS:
        raise ValueError(f"region must be one of {REGION_KINDS} (got {region!r})")
    streams = np.random.SeedSequence(rng_seed).spawn(n_samples)
    lows = np.empty(n_samples)
    highs = np.empty(n_samples)
    res_tol = 0.0
    incomplete = False
    argmin_state = None
    for i, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        a = sample_region_state(params, region, rng)
        lo, hi, res, ok = hessian_extremal_eigs(a, params)
        lows[i], highs[i] = lo, hi
        res_tol = max(res_tol, res)
        incomplete = incomplete or not ok
        if lo == np.nanmin(lows[: i + 1]):
            argmin_state = a
    cert = ConvexityCertificate(
        params=params,
        region=region,
        n_samples=n_samples,
        rng_seed=rng_seed,
        c_min=float(np.nanmin(lows)),
        c_max=float(np.nanmax(highs)),
        argmin_state=argmin_state,
        sample_values=lows,
        residual_tol=res_tol,
        incomplete=incomplete,
    )
    return cert


@dataclass
class NormEquivalenceReport:
    params: ModelParams
    n_samples: int
    pass_fraction: float
    worst_ratio_low: float
    worst_ratio_high: float

    @property
    def passed(self) -> bool:
        return self.pass_fraction == 1.0


def norm_equivalence_check(
    params: ModelParams, n_samples: int, rng_seed: int
) -> NormEquivalenceReport:
    """Check (1/2)||f||_H1 < sqrt(phi(f)) < 2 ||f||_H1 on sampled states.

    Samples live in the enlarged H^1 ball; a sample with phi(f) <= 0
    fails outright.  Meaningful for small |lam|; strongly focusing
    parameters are expected to fail, which is the point of the check.
    """
    streams = np.random.SeedSequence(rng_seed).spawn(n_samples)
    n_pass = 0
    worst_low, worst_high = np.inf, 0.0
    for ss in streams:
        rng = np.random.default_rng(ss)
        a = sample_region_state(params, "h1_ball", rng)
        h1 = np.sqrt(h1_norm_sq(a, params))
        val = reduced_hamiltonian(a, params)
        if val <= 0.0 or h1 == 0.0:
            worst_low = 0.0
            continue
        ratio = np.sqrt(val) / h1
        worst_low = min(worst_low, ratio)
        worst_high = max(worst_high, ratio)
        if 0.5 < ratio < 2.0:
            n_pass += 1
    return NormEquivalenceReport(
        params=params,
        n_samples=n_samples,
        pass_fraction=n_pass / n_samples,
        worst_ratio_low=float(worst_low),
        worst_ratio_high=float(worst_high),
    )


@dataclass
class SobolevProbeReport:
    params: ModelParams
    n_samples: int
    max_ratio: float
    mean_ratio: float


def sobolev_embedding_probe(
    params: ModelParams, n_samples: int, rng_seed: int
) -> SobolevProbeReport:
    """Sampled supremum of the embedding ratio

        mean |u|^{p-2} |W|^2  /  ( ||u||_H1^{p-2} ||W||_H1^2 ).

    The ratio is scale invariant in both arguments, so directions are
    sampled uniformly.  Finiteness and stability under N-refinement is
    the desk-scale stand-in for the continuum Sobolev bound.
    """
    lat = get_lattice(params)
    shape = lat.grid_shape(params.p)
    streams = np.random.SeedSequence(rng_seed).spawn(n_samples)
    ratios = np.empty(n_samples)
    for i, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        u_c = rng.standard_normal(lat.size) + 1j * rng.standard_normal(lat.size)
        w_c = rng.standard_normal(lat.size) + 1j * rng.standard_normal(lat.size)
        u = lat.to_grid(u_c, shape)
        W = lat.to_grid(w_c, shape)
        num = np.real(lat.grid_mean(np.abs(u) ** (params.p - 2) * np.abs(W) ** 2))
        den = (
            h1_norm_sq(u_c, params) ** ((params.p - 2) / 2)
            * h1_norm_sq(w_c, params)
        )
        ratios[i] = num / den
    return SobolevProbeReport(
        params=params,
        n_samples=n_samples,
        max_ratio=float(np.max(ratios)),
        mean_ratio=float(np.mean(ratios)),
    )
