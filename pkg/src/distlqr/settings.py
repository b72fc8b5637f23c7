"""Numerical tolerances shared by all modules.

Every function that compares against a threshold accepts a ``Tolerances``
instance; the CLI builds one from the ``tolerances`` block of a run config.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    stability_margin: float = 1e-9       # accept rho(sqrt(gamma) A_K) <= 1 - margin
    lyapunov_residual: float = 1e-10     # ||P - Q_K - gamma A_K' P A_K|| / ||P||
    fixed_point_residual: float = 1e-12
    fixed_point_max_iter: int = 1_000_000
    direct_solve_max_unknowns: int = 4096
    weight_floor: float = 1e-12          # eigenvalues of Gamma below floor*||Gamma|| are rejected
    cdf_floor: float = 1e-6
    curvature_tol: float = 1e-6
    bootstrap_sigmas: float = 3.0
    bootstrap_resamples: int = 200
    smoothing_window: int = 5
    min_grid_points: int = 10
    min_samples: int = 10_000

    def override(self, **kwargs) -> "Tolerances":
        known = {f.name for f in fields(self)}
        unknown = set(kwargs) - known
        if unknown:
            raise KeyError(f"unknown tolerance keys: {sorted(unknown)}")
        return replace(self, **kwargs)


DEFAULT_TOLERANCES = Tolerances()

# Ruben series truncation defaults (overridable per call and via the config's series block)
SERIES_TOL = 1e-10
SERIES_MAX_TERMS = 1 << 22
