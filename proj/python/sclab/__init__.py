"""Python access to the sclab core: wavefunctions, phase-space transforms, classical flow."""

from ._sclab import (
    Grid,
    Potential,
    SclabError,
    Wavefunction,
    coherent_state,
    converge,
    flow_map,
    husimi,
    husimi_at,
    i_eps_pairing,
    momentum_second_moment,
    propagate,
    set_thread_count,
    wave_packet,
    wigner,
)

__all__ = [
    "Grid",
    "Potential",
    "SclabError",
    "Wavefunction",
    "coherent_state",
    "converge",
    "flow_map",
    "husimi",
    "husimi_at",
    "i_eps_pairing",
    "momentum_second_moment",
    "propagate",
    "set_thread_count",
    "wave_packet",
    "wigner",
]
