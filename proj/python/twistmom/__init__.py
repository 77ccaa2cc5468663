"""Central values and moments of L(1/2, Delta x chi) over primitive characters mod q."""

from ._core import (
    Audit,
    CentralValue,
    MomentReport,
    audit,
    central_values,
    family_moments,
    gauss_sum,
    ladder_c_k,
    ladder_r_k,
    phi_star,
    run_cli,
    tau,
)

__all__ = [
    "Audit",
    "CentralValue",
    "MomentReport",
    "audit",
    "central_values",
    "family_moments",
    "gauss_sum",
    "ladder_c_k",
    "ladder_r_k",
    "phi_star",
    "run_cli",
    "tau",
]
