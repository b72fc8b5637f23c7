"""Grid-based check that the CDF of the truncated return is log-concave.

The curvature of ``log F`` is estimated by central second differences on a
uniform grid, either from the Ruben series (Gaussian noise) or from an
empirical CDF (any noise law). A pass means no violation was detected at the
stated tolerance on that grid; it is not a proof.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .chisq import EmpiricalCDF, NoiseModel, RubenSeries, empirical_cdf, sample_return
from .errors import DimensionMismatch, GridTooCoarse, InsufficientSamples
from .model import ClosedLoopAnalysis, SystemSpec
from .qform import QuadraticForm, evaluate
from .settings import DEFAULT_TOLERANCES, Tolerances


@dataclass(frozen=True)
class LogConcavityReport:
    grid: np.ndarray
    log_cdf: np.ndarray
    second_diff: np.ndarray          # length G-2, NaN where not assessed
    tolerance: np.ndarray            # per-point threshold, same length as second_diff
    max_second_diff: float
    violations: int
    passed: bool
    noise_kind: str
    estimator: str
    meta: dict = field(default_factory=dict)

    @property
    def pass_(self) -> bool:
        return self.passed

    def summary(self) -> dict:
        return {
            "noise_kind": self.noise_kind,
            "estimator": self.estimator,
            "pass": self.passed,
            "max_second_diff": self.max_second_diff,
            "violations": self.violations,
            "assessed_points": int(np.sum(np.isfinite(self.second_diff))),
            "grid_points": int(self.grid.shape[0]),
            "grid_lo": float(self.grid[0]),
            "grid_hi": float(self.grid[-1]),
            **self.meta,
        }


def sublevel_contains(qf: QuadraticForm, z, g: float):
    """Whether ``S(z) <= g``; ``z`` may be a batch of shape ``(M, N*n)``."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != qf.dim:
        raise DimensionMismatch(f"z must have trailing length {qf.dim}, got {z.shape}")
    return evaluate(qf, z) <= g


def uniform_grid(lo: float, hi: float, points: int, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    if points < tol.min_grid_points:
        raise GridTooCoarse(f"grid needs at least {tol.min_grid_points} points, got {points}")
    if not hi > lo:
        raise GridTooCoarse(f"grid range [{lo}, {hi}] is empty")
    return np.linspace(lo, hi, points)


def _second_diff(logF: np.ndarray, h: float) -> np.ndarray:
    return (logF[2:] - 2.0 * logF[1:-1] + logF[:-2]) / (h * h)


def _smooth(y: np.ndarray, width: int) -> np.ndarray:
    """Centered moving average; the ``width // 2`` points at each edge become NaN."""
    if width <= 1:
        return y.copy()
    out = np.full(y.shape, np.nan)
    half = width // 2
    kernel = np.ones(width) / width
    out[half:y.shape[-1] - half] = np.convolve(y, kernel, mode="valid")
    return out


def _check_grid(grid: np.ndarray, tol: Tolerances) -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.shape[0] < tol.min_grid_points:
        raise GridTooCoarse(f"grid needs at least {tol.min_grid_points} points, got {grid.size}")
    steps = np.diff(grid)
    h = float(steps.mean())
    if np.any(steps <= 0) or np.max(np.abs(steps - h)) > 1e-8 * max(abs(h), 1e-300) + 1e-12 * np.max(np.abs(grid)):
        raise GridTooCoarse("grid must be strictly increasing with uniform spacing")
    return h


def curvature_from_series(
    series: RubenSeries,
    grid,
    noise_kind: str = "gaussian",
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> LogConcavityReport:
    grid = np.asarray(grid, dtype=float)
    h = _check_grid(grid, tol)
    F = series.cdf(grid)
    with np.errstate(divide="ignore"):
        logF = np.log(F)
    d2 = _second_diff(logF, h)
    assessed = (F[:-2] > tol.cdf_floor) & (F[1:-1] > tol.cdf_floor) & (F[2:] > tol.cdf_floor)
    d2 = np.where(assessed, d2, np.nan)
    thr = np.full(d2.shape, tol.curvature_tol)
    return _assemble(grid, logF, d2, thr, noise_kind, "ruben", {"terms_K": series.terms_K, "tail_bound": series.tail_bound})


def curvature_from_samples(
    samples,
    grid,
    noise_kind: str,
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> LogConcavityReport:
    """Curvature of the smoothed empirical log-CDF with a bootstrap tolerance.

    Bootstrap resamples are drawn as multinomial bin counts between grid
    nodes, which is equivalent to resampling the data for a grid-evaluated
    empirical CDF. The threshold at each point is ``bootstrap_sigmas`` times the
    bootstrap standard error of the smoothed second difference.
    """
    ecdf = samples if isinstance(samples, EmpiricalCDF) else empirical_cdf(samples)
    M = ecdf.size
    if M < tol.min_samples:
        raise InsufficientSamples(f"empirical estimator needs at least {tol.min_samples} samples, got {M}")
    grid = np.asarray(grid, dtype=float)
    h = _check_grid(grid, tol)
    counts_le = np.searchsorted(ecdf.sorted_samples, grid, side="right")
    F = counts_le / M
    width = tol.smoothing_window

    def curvature(Fv: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return _second_diff(_smooth(np.log(Fv), width), h)

    with np.errstate(divide="ignore"):
        logF = np.log(F)
    d2 = curvature(F)

    bins = np.diff(np.concatenate(([0], counts_le, [M])))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(0xB007,)))
    boot = rng.multinomial(M, bins / M, size=tol.bootstrap_resamples)
    Fb = np.cumsum(boot[:, :-1], axis=1) / M
    d2b = np.array([curvature(row) for row in Fb])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        se = np.nanstd(d2b, axis=0, ddof=1) if tol.bootstrap_resamples > 1 else np.zeros(d2.shape)

    # every grid value entering the smoothed difference must clear the floor
    half = width // 2
    ok_pt = F > tol.cdf_floor
    reach = half + 1
    assessed = np.array([
        ok_pt[max(0, i + 1 - reach):i + 2 + reach].all() if i + 1 - reach >= 0 and i + 1 + reach < F.size else False
        for i in range(F.size - 2)
    ])
    assessed &= np.isfinite(d2) & np.isfinite(se)
    d2 = np.where(assessed, d2, np.nan)
    thr = np.where(assessed, tol.bootstrap_sigmas * se, np.nan)
    return _assemble(
        grid, logF, d2, thr, noise_kind, "smoothed",
        {"samples": M, "bootstrap_resamples": tol.bootstrap_resamples, "smoothing_window": width},
    )


def _assemble(grid, logF, d2, thr, noise_kind, estimator, meta) -> LogConcavityReport:
    mask = np.isfinite(d2)
    if mask.any():
        max_d2 = float(np.max(d2[mask]))
        violations = int(np.sum(d2[mask] > thr[mask]))
    else:
        # nothing above the floor: log F is constant (0) or undefined
        max_d2 = 0.0
        violations = 0
    return LogConcavityReport(
        grid=grid,
        log_cdf=logF,
        second_diff=d2,
        tolerance=thr,
        max_second_diff=max_d2,
        violations=violations,
        passed=violations == 0,
        noise_kind=noise_kind,
        estimator=estimator,
        meta=meta,
    )


def log_cdf_curvature(
    source,
    grid,
    estimator: str | None = None,
    noise_kind: str = "gaussian",
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> LogConcavityReport:
    """Dispatch on the CDF source: a ``RubenSeries`` or a sample array / ``EmpiricalCDF``."""
    if isinstance(source, RubenSeries):
        if estimator not in (None, "ruben"):
            raise ValueError("a Ruben series source requires the 'ruben' estimator")
        return curvature_from_series(source, grid, noise_kind=noise_kind, tol=tol)
    if estimator not in (None, "empirical", "smoothed"):
        raise ValueError(f"unknown estimator {estimator!r}")
    return curvature_from_samples(source, grid, noise_kind=noise_kind, seed=seed, tol=tol)


def quantile_grid(ecdf: EmpiricalCDF, points: int, q_lo: float = 1e-3, q_hi: float = 0.999,
                  tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    lo, hi = ecdf.quantile([q_lo, q_hi])
    return uniform_grid(float(lo), float(hi), points, tol)


def counterexample_probe(
    noise: NoiseModel,
    spec: SystemSpec,
    cl: ClosedLoopAnalysis,
    N: int,
    M: int = 1_000_000,
    seed: int = 0,
    points: int = 400,
    q_lo: float = 1e-3,
    q_hi: float = 0.999,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> LogConcavityReport:
    """Run the empirical detector on an arbitrary (typically non-log-concave) noise law."""
    samples = sample_return(spec, cl, noise, N, M, seed)
    ecdf = empirical_cdf(samples)
    grid = quantile_grid(ecdf, points, q_lo, q_hi, tol)
    return curvature_from_samples(ecdf, grid, noise_kind=noise.kind, seed=seed, tol=tol)
