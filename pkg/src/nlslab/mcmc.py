"""Metropolis oracle for the restricted Gibbs measure ~ exp(-2 phi) 1_D.

This sampler involves no time discretisation, so up to Monte Carlo error
it is exact for the target measure; the Langevin integrator is validated
against it.  Proposals are Gaussian random-walk steps with the per-mode
scale 1/sqrt(n^2+1) matched to the free covariance; moves leaving the
domain are rejected exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import get_lattice, in_domain, reduced_hamiltonian
from .observables import observable_series
from .params import ModelParams
from .stats import batch_means_se

ACCEPT_BAND = (0.3, 0.5)


@dataclass
class McmcConfig:
    n_steps: int
    burn_in: int
    thinning: int = 1
    proposal_scale: float = 0.3
    n_chains: int = 4
    rng_seed: int = 0
    adapt_interval: int = 200

    def __post_init__(self):
        if self.n_steps <= 0 or self.burn_in < 0 or self.thinning < 1:
            raise ValueError("n_steps > 0, burn_in >= 0, thinning >= 1 required")
        if not (0 < self.proposal_scale):
            raise ValueError("proposal_scale must be positive")


@dataclass
class MomentReport:
    """Equilibrium expectations with batch-means errors."""

    observables: list
    means: np.ndarray
    ses: np.ndarray
    esses: np.ndarray
    n_samples: int
    acceptance_rate: float
    proposal_scale: float
    params: ModelParams = None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            name: {"mean": float(m), "se": float(s), "ess": float(e)}
            for name, m, s, e in zip(self.observables, self.means, self.ses, self.esses)
        }


def _run_chains(params: ModelParams, cfg: McmcConfig):
    """Vectorised Metropolis chains; returns (kept states, acceptance, scale).

    All chains propose jointly; acceptance uses min(1, exp(-2 dphi)) and
    exact rejection of moves that leave the domain.  The proposal scale
    adapts toward the [0.3, 0.5] acceptance band during burn-in only.
    """
    lat = get_lattice(params)
    m = lat.size
    nc = cfg.n_chains
    rng = np.random.default_rng(np.random.SeedSequence(cfg.rng_seed))
    mode_scale = 1.0 / np.sqrt(lat.quad_symbol)
    scale = cfg.proposal_scale

    a = np.zeros((nc, m), dtype=complex)
    phi = np.real(reduced_hamiltonian(a, params))
    n_kept = (cfg.n_steps - cfg.burn_in) // cfg.thinning
    kept = np.empty((n_kept, nc, m), dtype=complex)
    n_acc = 0
    n_tot = 0
    acc_window = []
    k = 0
    for step in range(cfg.n_steps):
        noise = rng.standard_normal((nc, m)) + 1j * rng.standard_normal((nc, m))
        prop = a + scale * mode_scale * noise
        phi_prop = np.real(reduced_hamiltonian(prop, params))
        inside, _, _ = in_domain(prop, params)
        log_u = np.log(rng.uniform(size=nc))
        accept = inside & (log_u < -2.0 * (phi_prop - phi))
        a[accept] = prop[accept]
        phi[accept] = phi_prop[accept]
        acc_window.append(np.mean(accept))
        if step >= cfg.burn_in:
            n_acc += int(np.sum(accept))
            n_tot += nc
            if (step - cfg.burn_in) % cfg.thinning == 0 and k < n_kept:
                kept[k] = a
                k += 1
        elif (step + 1) % cfg.adapt_interval == 0:
            recent = float(np.mean(acc_window[-cfg.adapt_interval:]))
            if recent < ACCEPT_BAND[0]:
                scale *= 0.8
            elif recent > ACCEPT_BAND[1]:
                scale *= 1.25
    acc_rate = n_acc / max(n_tot, 1)
    return kept[:k], acc_rate, scale


def sample_expectations(
    params: ModelParams, cfg: McmcConfig, observables: list
) -> MomentReport:
    """Estimate equilibrium expectations of the named observables."""
    kept, acc_rate, scale = _run_chains(params, cfg)
    n_kept, nc, _ = kept.shape
    means = np.empty(len(observables))
    ses = np.empty(len(observables))
    esses = np.empty(len(observables))
    for j, name in enumerate(observables):
        series = observable_series(name, kept, params)  # (n_kept, nc)
        chain_stats = [batch_means_se(series[:, c]) for c in range(nc)]
        mu = np.array([s[0] for s in chain_stats])
        se = np.array([s[1] for s in chain_stats])
        ess = np.array([s[2] for s in chain_stats])
        means[j] = mu.mean()
        # chains are independent: combine per-chain errors in quadrature
        ses[j] = np.sqrt(np.sum(se**2)) / nc
        esses[j] = np.sum(ess)
    return MomentReport(
        observables=list(observables),
        means=means,
        ses=ses,
        esses=esses,
        n_samples=n_kept * nc,
        acceptance_rate=float(acc_rate),
        proposal_scale=float(scale),
        params=params,
    )


def chain_states(params: ModelParams, cfg: McmcConfig) -> np.ndarray:
    """Kept post-burn-in states, shape (n_kept, n_chains, M); for tests."""
    kept, _, _ = _run_chains(params, cfg)
    return kept
