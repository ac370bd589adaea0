"""Numerical laboratory for the Gibbs equilibration of the frequency-truncated
stochastic nonlinear Schrodinger equation: Hamiltonian calculus on the mode
lattice, reflected Langevin dynamics, a Metropolis sampling oracle, and
spectral studies of the associated non-self-adjoint Fokker-Planck / Witten
operators."""

__version__ = "0.1.0"
