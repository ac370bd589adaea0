"""Named scalar observables of field trajectories.

Names: "phi", "l2sq", "abs2_<label>", "re_<label>", "im_<label>", and
"mode_<label>" (the complex coefficient itself, for rate fits), where
<label> is the underscore-joined mode vector, e.g. "0", "-1", "1_0".
"""

from __future__ import annotations

import numpy as np

from .model import get_lattice, reduced_hamiltonian
from .params import ModelParams


def mode_label(n_vec) -> str:
    return "_".join(str(int(c)) for c in np.atleast_1d(n_vec))


def observable_series(name: str, traj: np.ndarray, params: ModelParams):
    """Evaluate one named observable along a trajectory (T, M) -> (T,)."""
    lat = get_lattice(params)
    if name == "phi":
        return np.real(reduced_hamiltonian(traj, params))
    if name == "l2sq":
        return np.sum(np.abs(traj) ** 2, axis=-1)
    for prefix in ("abs2_", "re_", "im_", "mode_"):
        if name.startswith(prefix):
            label = name[len(prefix):]
            vec = [int(c) for c in label.split("_")]
            idx = lat.index_of(vec)
            col = traj[..., idx]
            if prefix == "abs2_":
                return np.abs(col) ** 2
            if prefix == "re_":
                return np.real(col)
            if prefix == "im_":
                return np.imag(col)
            return col
    raise ValueError(f"unknown observable {name!r}")


def default_observables(params: ModelParams) -> list:
    lat = get_lattice(params)
    names = ["phi", "l2sq"]
    names += [f"abs2_{mode_label(n)}" for n in lat.modes]
    return names
