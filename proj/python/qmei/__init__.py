"""Minimum relative entropy reconstruction of density matrices."""

from ._core import (
    CapacityError,
    DivergenceError,
    FeasibilityError,
    QmeiError,
    SupportError,
    ValidationError,
    concentration_simulation,
    decorrelate,
    kawasaki_gunton,
    pinch,
    quantum_neyman_pearson,
    relative_entropy,
    relative_entropy_via_extension,
    run_cli,
    selftest,
    solve_minrent,
    von_neumann_entropy,
)

__all__ = [
    "CapacityError",
    "DivergenceError",
    "FeasibilityError",
    "QmeiError",
    "SupportError",
    "ValidationError",
    "concentration_simulation",
    "decorrelate",
    "kawasaki_gunton",
    "pinch",
    "quantum_neyman_pearson",
    "relative_entropy",
    "relative_entropy_via_extension",
    "run_cli",
    "selftest",
    "solve_minrent",
    "von_neumann_entropy",
]
