"""Model parameters for the truncated focusing/defocusing NLS Gibbs system."""

from __future__ import annotations

from dataclasses import dataclass, field

# (d, p) pairs for which the nonlinearity is admissible: any even p >= 4 in
# d = 1, 2; only the stated low powers in d = 3, 4.
_DP_TABLE = {3: (4, 6), 4: (4,)}

DOMAIN_KINDS = ("whole_space", "hamiltonian_ball", "l2_ball")


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the reduced Hamiltonian

        phi(a) = sum_n (n^2 + 1)|a_n|^2
                 + (2 lam / p) * mean_x |u(x)|^p,

    together with the dissipation rate nu of the Langevin dynamics, the
    mode cutoff N, and the confining region. The mass m = 1 and the Gibbs
    inverse temperature beta = 2 (stationary density ~ exp(-2 phi)) are
    fixed conventions; they are stored only so that configurations are
    explicit about them.
    """

    d: int
    p: int
    lam: float
    nu: float
    N: int
    B: float
    domain_kind: str = "whole_space"
    mass: float = field(default=1.0)
    beta: float = field(default=2.0)

    def __post_init__(self):
        if self.d < 1 or self.d > 4:
            raise ValueError(f"d must be in 1..4 (got {self.d})")
        if self.p < 4 or self.p % 2 != 0:
            raise ValueError(f"p must be an even integer >= 4 (got {self.p})")
        if self.d in _DP_TABLE and self.p not in _DP_TABLE[self.d]:
            raise ValueError(
                f"p = {self.p} not admissible in d = {self.d}; "
                f"allowed: {_DP_TABLE[self.d]}"
            )
        if self.nu < 0:
            raise ValueError(f"nu must be >= 0 (got {self.nu})")
        if self.N < 0:
            raise ValueError(f"N must be >= 0 (got {self.N})")
        if self.B <= 0:
            raise ValueError(f"B must be > 0 (got {self.B})")
        if self.domain_kind not in DOMAIN_KINDS:
            raise ValueError(
                f"domain_kind must be one of {DOMAIN_KINDS} (got {self.domain_kind!r})"
            )
        if self.domain_kind == "whole_space" and self.lam < 0:
            raise ValueError(
                "whole_space domain requires lam >= 0 "
                "(focusing runs must confine to a ball)"
            )
        if self.mass != 1.0:
            raise ValueError("mass is fixed to 1 by convention")
        if self.beta != 2.0:
            raise ValueError("beta is fixed to 2 by convention")

    @property
    def n_modes(self) -> int:
        return (2 * self.N + 1) ** self.d
