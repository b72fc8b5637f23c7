"""Experiment drivers behind the CLI commands. Each returns plain data."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .chisq import (
    analytic_mean,
    empirical_cdf,
    ks_grid_bound,
    ks_two_sample,
    ruben_series,
    sample_return,
    sample_returns,
    spectral_reduce,
)
from .concavity import LogConcavityReport, curvature_from_samples, curvature_from_series, quantile_grid, uniform_grid
from .config import RunConfig
from .errors import SeriesNotConverged, SeriesUnavailable
from .model import certify_assumption, solve_lyapunov
from .qform import build_qform, certify_pd, scalar_minors

log = logging.getLogger(__name__)


def analyze(cfg: RunConfig) -> list[dict]:
    """One row per horizon: dominance ratios, spectrum of ``H`` and its certified bounds."""
    cl = solve_lyapunov(cfg.system, tol=cfg.tolerances)
    rows = []
    for N in cfg.horizons:
        cert = certify_assumption(cl, N)
        qf = build_qform(cl, cfg.system.x0, N)
        ec = certify_pd(qf, cert, cl)
        row = {
            "N": N,
            "phi_max": cert.phi_max,
            "eig_min": ec.eig_min,
            "eig_max": ec.eig_max,
            "lb_norm_p": ec.lb_norm_p,
            "ub_norm_p": ec.ub_norm_p,
            "assumption_holds": cert.holds,
            "positive_definite": ec.positive_definite,
            "lambda_bar": cl.lambda_bar,
            "lb_pmin": ec.lb_pmin,
        }
        if cl.n == 1:
            row["deltas"] = scalar_minors(cl, N).tolist()
        rows.append(row)
    return rows


@dataclass
class PdfResult:
    N: int
    grid: np.ndarray
    pdf_ruben: np.ndarray
    pdf_mc: np.ndarray
    meta: dict
    warnings: list


def pdf_grid(cfg: RunConfig, N: int, threads: int = 1) -> PdfResult:
    if not cfg.noise.is_gaussian:
        raise SeriesUnavailable(f"series unavailable for {cfg.noise.kind!r} noise, use cmd_sample")
    cl = solve_lyapunov(cfg.system, tol=cfg.tolerances)
    qf = build_qform(cl, cfg.system.x0, N)
    sf = spectral_reduce(qf, cfg.noise, tol=cfg.tolerances)
    samples = sample_return(cfg.system, cl, cfg.noise, N, cfg.mc_samples, cfg.seed,
                            path=cfg.mc_path, threads=threads)
    notes = []
    lo, hi = np.quantile(samples, [cfg.quantile_lo, cfg.quantile_hi])
    degenerate = hi - lo <= 1e-9 * max(1.0, abs(qf.c))
    if degenerate:
        center = float(np.median(samples))
        notes.append(f"degenerate distribution: samples concentrate at {center!r} (c = {qf.c!r})")
        half = max(1e-9 * max(1.0, abs(qf.c)), 1e-12)
        lo, hi = center - half, center + half
    try:
        series = ruben_series(sf, beta=cfg.beta, tol=cfg.series_tol, max_terms=cfg.series_max_terms)
    except SeriesNotConverged as exc:
        if not degenerate:
            raise
        series = None
        notes.append(f"series skipped for the degenerate case: {exc}")
    grid = uniform_grid(float(lo), float(hi), cfg.grid_points, cfg.tolerances)
    h = grid[1] - grid[0]
    edges = np.concatenate(([grid[0] - h / 2], grid + h / 2))
    counts, _ = np.histogram(samples, bins=edges)
    pdf_mc = counts / (samples.size * h)
    meta = {
        "N": N,
        "seed": cfg.seed,
        "M": cfg.mc_samples,
        "beta": series.beta if series else None,
        "K_terms": series.terms_K if series else None,
        "tail_bound": series.tail_bound if series else None,
        "offset": sf.offset,
        "mean_analytic": analytic_mean(qf, cfg.noise),
        "mean_mc": float(samples.mean()),
        "mean_mc_stderr": float(samples.std(ddof=1) / math.sqrt(samples.size)),
        "histogram_bin_width": float(h),
    }
    pdf_ruben = series.pdf(grid) if series else np.full(grid.shape, np.nan)
    return PdfResult(N, grid, pdf_ruben, pdf_mc, meta, notes)


def logconcavity(cfg: RunConfig, N: int, threads: int = 1) -> list[LogConcavityReport]:
    """Curvature reports for every configured noise family (Ruben as well, for Gaussian)."""
    cl = solve_lyapunov(cfg.system, tol=cfg.tolerances)
    reports = []
    for fam_idx, noise in enumerate(cfg.noise_families):
        samples = sample_return(cfg.system, cl, noise, N, cfg.mc_samples, cfg.seed,
                                path=cfg.mc_path, threads=threads)
        ecdf = empirical_cdf(samples)
        grid = quantile_grid(ecdf, cfg.grid_points, cfg.quantile_lo, cfg.quantile_hi, cfg.tolerances)
        rep = curvature_from_samples(ecdf, grid, noise_kind=noise.kind, seed=cfg.seed + fam_idx, tol=cfg.tolerances)
        rep.meta.update({"N": N, "family_index": fam_idx, "seed": cfg.seed})
        reports.append(rep)
        if noise.is_gaussian:
            qf = build_qform(cl, cfg.system.x0, N)
            sf = spectral_reduce(qf, noise, tol=cfg.tolerances)
            series = ruben_series(sf, beta=cfg.beta, tol=cfg.series_tol, max_terms=cfg.series_max_terms)
            rep_r = curvature_from_series(series, grid, noise_kind=noise.kind, tol=cfg.tolerances)
            rep_r.meta.update({"N": N, "family_index": fam_idx})
            reports.append(rep_r)
    return reports


def decay(cfg: RunConfig, threads: int = 1) -> list[dict]:
    """KS distance between the horizon-``N`` return and the reference horizon.

    Samples are coupled: every horizon reuses the leading disturbances of
    the same draws used for the reference horizon.
    """
    cl = solve_lyapunov(cfg.system, tol=cfg.tolerances)
    N_ref = cfg.reference_horizon
    horizons = sorted(set(cfg.horizons))
    draws = sample_returns(cfg.system, cl, cfg.noise, horizons + [N_ref], cfg.mc_samples, cfg.seed,
                           path=cfg.mc_path, threads=threads)
    ref = empirical_cdf(draws[N_ref])
    g = cfg.system.gamma
    rows = []
    for N in horizons:
        ks = ks_two_sample(empirical_cdf(draws[N]), ref)
        rows.append({"N": N, "ks": ks, "ks_scaled": ks * g ** (-N), "reference_horizon": N_ref})
    return rows


def ruben_vs_mc(cfg: RunConfig, N: int, quantile_nodes: int = 2000) -> dict:
    """KS bounds between the series CDF and the Monte Carlo empirical CDF."""
    cl = solve_lyapunov(cfg.system, tol=cfg.tolerances)
    qf = build_qform(cl, cfg.system.x0, N)
    sf = spectral_reduce(qf, cfg.noise, tol=cfg.tolerances)
    series = ruben_series(sf, beta=cfg.beta, tol=cfg.series_tol, max_terms=cfg.series_max_terms)
    samples = sample_return(cfg.system, cl, cfg.noise, N, cfg.mc_samples, cfg.seed, path=cfg.mc_path)
    ecdf = empirical_cdf(samples)
    inner = ecdf.quantile(np.linspace(0.0, 1.0, quantile_nodes + 1)[1:-1])
    x = ecdf.sorted_samples
    grid = np.unique(np.concatenate(([x[0] - 1.0], inner, [x[-1] + 1.0])))
    lo, hi = ks_grid_bound(ecdf, grid, series.cdf(grid))
    return {"ks_lower": lo, "ks_upper": hi, "series": series, "spectral": sf, "qform": qf, "samples": samples}
