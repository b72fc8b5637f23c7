"""Distribution of the truncated return under Gaussian and other i.i.d. noise.

For Gaussian disturbances the quadratic form reduces to a positively weighted
non-central chi-square variable

    S(Z) =d offset + sum_i lambda_i (Y_i + eta_i)^2,   Y_i iid N(0, 1),

whose density and CDF are evaluated with Ruben's gamma-mixture series. Monte
Carlo sampling of the return (for any supported noise law) provides the
independent check.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, signal, special, stats

from .errors import (
    BetaOutOfRange,
    CovarianceNotSPD,
    DimensionMismatch,
    InsufficientSamples,
    NotPositiveDefinite,
    SeriesNotConverged,
    SeriesUnavailable,
)
from .model import ClosedLoopAnalysis, SystemSpec, _frozen, check_spd, sqrtm_spd
from .qform import QuadraticForm, build_qform, evaluate, simulate_return
from .settings import DEFAULT_TOLERANCES, SERIES_MAX_TERMS, SERIES_TOL, Tolerances

LOG_CONCAVE_KINDS = ("gaussian", "uniform", "laplace", "logistic", "triangular")
NOISE_KINDS = LOG_CONCAVE_KINDS + ("gaussian_mixture",)
CHUNK_SIZE = 1 << 15


# ----------------------------------------------------------------------------
# noise laws
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseModel:
    """I.i.d. disturbance law for each ``w_k``.

    ``gaussian`` uses the full covariance. The scalar families draw independent
    coordinates with zero mean and standard deviation ``scale[j]``.
    ``gaussian_mixture`` is an equal-weight mixture of ``N(+-separation, component_sd^2)``
    per coordinate; it is not log-concave once the components separate and
    serves as a negative control.
    """

    kind: str
    covariance: np.ndarray | None = None
    scale: np.ndarray | None = None
    separation: float = 0.0
    component_sd: float = 1.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.kind == "gaussian":
            if self.covariance is None:
                raise ValueError("gaussian noise needs a covariance")
            cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
            check_spd(cov, "noise covariance", exc=CovarianceNotSPD)
            object.__setattr__(self, "covariance", _frozen(cov))
        elif self.scale is not None:
            scale = np.asarray(self.scale, dtype=float).reshape(-1)
            if np.any(scale < 0):
                raise ValueError("noise scale must be nonnegative")
            object.__setattr__(self, "scale", _frozen(scale))
        if self.component_sd < 0:
            raise ValueError("component_sd must be nonnegative")

    @classmethod
    def gaussian(cls, covariance) -> "NoiseModel":
        return cls("gaussian", covariance=covariance)

    @property
    def log_concave(self) -> bool:
        return self.kind in LOG_CONCAVE_KINDS or (self.kind == "gaussian_mixture" and self.separation == 0.0)

    @property
    def is_gaussian(self) -> bool:
        return self.kind == "gaussian"

    def dim(self) -> int | None:
        if self.covariance is not None:
            return self.covariance.shape[0]
        if self.scale is not None:
            return self.scale.shape[0]
        return None

    def _scale(self, n: int) -> np.ndarray:
        if self.scale is None:
            return np.ones(n)
        if self.scale.shape[0] != n:
            raise DimensionMismatch(f"noise scale has length {self.scale.shape[0]}, state dimension is {n}")
        return self.scale

    def covariance_matrix(self, n: int) -> np.ndarray:
        if self.kind == "gaussian":
            if self.covariance.shape != (n, n):
                raise DimensionMismatch(f"noise covariance is {self.covariance.shape}, expected {(n, n)}")
            return np.array(self.covariance)
        if self.kind == "gaussian_mixture":
            return np.eye(n) * (self.separation ** 2 + self.component_sd ** 2)
        return np.diag(self._scale(n) ** 2)

    def draw(self, rng: np.random.Generator, size: tuple[int, ...], n: int) -> np.ndarray:
        """Array of shape ``size + (n,)`` of i.i.d. disturbance vectors."""
        shape = tuple(size) + (n,)
        kind = self.kind
        if kind == "gaussian":
            chol = np.linalg.cholesky(self.covariance_matrix(n))
            return rng.standard_normal(shape) @ chol.T
        if kind == "gaussian_mixture":
            signs = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
            return self.separation * signs + self.component_sd * rng.standard_normal(shape)
        s = self._scale(n)
        # unit-variance versions of each family
        if kind == "uniform":
            base = rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), shape)
        elif kind == "laplace":
            base = rng.laplace(0.0, 1.0 / math.sqrt(2.0), shape)
        elif kind == "logistic":
            base = rng.logistic(0.0, math.sqrt(3.0) / math.pi, shape)
        else:  # triangular
            a = math.sqrt(6.0)
            base = rng.triangular(-a, 0.0, a, shape)
        return base * s


# ----------------------------------------------------------------------------
# spectral reduction (Gaussian case)
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralForm:
    weights: np.ndarray
    noncentralities: np.ndarray
    offset: float

    @property
    def dof(self) -> int:
        return int(self.weights.shape[0])

    def mean(self) -> float:
        return float(self.offset + np.sum(self.weights * (1.0 + self.noncentralities ** 2)))

    def variance(self) -> float:
        lam, eta = self.weights, self.noncentralities
        return float(np.sum(2.0 * lam ** 2 * (1.0 + 2.0 * eta ** 2)))

    def sample(self, rng: np.random.Generator, M: int) -> np.ndarray:
        out = np.empty(M)
        for start in range(0, M, CHUNK_SIZE):
            m = min(CHUNK_SIZE, M - start)
            Y = rng.standard_normal((m, self.dof))
            out[start:start + m] = self.offset + ((Y + self.noncentralities) ** 2) @ self.weights
        return out


def stacked_covariance(noise: NoiseModel, N: int, n: int) -> np.ndarray:
    """``I_N (x) Sigma``."""
    return np.kron(np.eye(N), noise.covariance_matrix(n))


def analytic_mean(qf: QuadraticForm, noise: NoiseModel) -> float:
    """``E[S(Z)] = trace(H Sigma_Z) + c`` for zero-mean noise."""
    SZ = stacked_covariance(noise, qf.N, qf.n)
    return float(np.sum(qf.H * SZ) + qf.c)


def analytic_variance(qf: QuadraticForm, noise: NoiseModel) -> float:
    """``Var[S(Z)] = 2 trace((H Sigma_Z)^2) + 4 L' Sigma_Z L`` for Gaussian ``Z``."""
    if not noise.is_gaussian:
        raise SeriesUnavailable("closed-form variance is only available for Gaussian noise")
    SZ = stacked_covariance(noise, qf.N, qf.n)
    HS = qf.H @ SZ
    return float(2.0 * np.sum(HS * HS.T) + 4.0 * qf.L @ SZ @ qf.L)


def spectral_reduce(
    qf: QuadraticForm, noise: NoiseModel, tol: Tolerances = DEFAULT_TOLERANCES
) -> SpectralForm:
    """Rewrite ``S(Z)`` with ``Z ~ N(0, I_N (x) Sigma)`` as a weighted chi-square sum.

    With ``Gamma = Sigma_Z^{1/2} H Sigma_Z^{1/2} = U diag(lambda) U'`` and
    ``zeta = U' Sigma_Z^{1/2} L`` the form equals
    ``sum lambda_i (Y_i + zeta_i/lambda_i)^2 + c - sum zeta_i^2/lambda_i``.
    """
    if not noise.is_gaussian:
        raise SeriesUnavailable(
            f"series unavailable for {noise.kind!r} noise, use cmd_sample"
        )
    n, N = qf.n, qf.N
    Sigma = noise.covariance_matrix(n)
    check_spd(Sigma, "noise covariance", exc=CovarianceNotSPD)
    Sigma_half, _ = sqrtm_spd(Sigma)
    SZ_half = np.kron(np.eye(N), Sigma_half)
    Gamma = SZ_half @ qf.H @ SZ_half
    Gamma = 0.5 * (Gamma + Gamma.T)
    lam, U = np.linalg.eigh(Gamma)
    if lam[0] <= tol.weight_floor * abs(lam[-1]):
        raise NotPositiveDefinite(
            f"Sigma_Z^(1/2) H Sigma_Z^(1/2) is not positive definite (min eigenvalue {lam[0]:.3e})"
        )
    zeta = U.T @ (SZ_half @ qf.L)
    eta = zeta / lam
    offset = float(qf.c - np.sum(zeta ** 2 / lam))
    return SpectralForm(weights=_frozen(lam), noncentralities=_frozen(eta), offset=offset)


# ----------------------------------------------------------------------------
# Ruben series
# ----------------------------------------------------------------------------

_BASE_BLOCK = 256


def _ruben_b(c: np.ndarray, e2_over_lam: np.ndarray, beta: float, lo: int, hi: int) -> np.ndarray:
    """``b_k = sum_i c_i^k + k beta sum_i eta_i^2 c_i^{k-1} / lambda_i`` for ``k in [lo, hi)``."""
    out = np.empty(hi - lo)
    step = 1 << 14
    for s in range(lo, hi, step):
        k = np.arange(s, min(s + step, hi), dtype=float)[:, None]
        ck1 = np.power(c, k - 1.0)
        out[s - lo:s - lo + k.shape[0]] = (ck1 * c).sum(axis=1) + k[:, 0] * beta * (ck1 @ e2_over_lam)
    return out


class _RubenRecursion:
    """Coefficients ``a_k = (1/2k) sum_{l<k} b_{k-l} a_l``, extendable in place.

    Evaluated by divide and conquer: contributions from a finished left half
    to the right half are one FFT convolution; short ranges are solved as a
    lower-triangular Toeplitz system (forward substitution of the same
    recursion). ``extend`` doubles the computed range without redoing work.
    """

    def __init__(self, a0: float, b_fn):
        self.a0 = a0
        self.b_fn = b_fn
        self.a = np.zeros(0)
        self.b = np.zeros(1)
        self.acc = np.zeros(0)

    def _grow(self, K: int) -> None:
        K_old = self.a.shape[0]
        self.a = np.concatenate((self.a, np.zeros(K - K_old)))
        self.acc = np.concatenate((self.acc, np.zeros(K - K_old)))
        K_b = self.b.shape[0]
        if K_b < K:
            self.b = np.concatenate((self.b, self.b_fn(K_b, K)))

    def _base(self, lo: int, hi: int) -> None:
        a, b, acc = self.a, self.b, self.acc
        m = hi - lo
        col = np.concatenate(([0.0], -b[1:m]))
        T = linalg.toeplitz(col, np.zeros(m))
        rhs = acc[lo:hi].copy()
        diag = 2.0 * np.arange(lo, hi, dtype=float)
        if lo == 0:
            diag[0] = 1.0
            T[0, :] = 0.0
            rhs[0] = self.a0
        T[np.diag_indices(m)] = diag
        a[lo:hi] = linalg.solve_triangular(T, rhs, lower=True, check_finite=False)

    def _solve(self, lo: int, hi: int) -> None:
        if hi - lo <= _BASE_BLOCK:
            self._base(lo, hi)
            return
        mid = (lo + hi) // 2
        self._solve(lo, mid)
        self._spread(lo, mid, hi)
        self._solve(mid, hi)

    def _spread(self, lo: int, mid: int, hi: int) -> None:
        # acc[k] += sum_{l in [lo, mid)} b[k-l] a[l] for k in [mid, hi)
        cv = signal.convolve(self.a[lo:mid], self.b[1:hi - lo], method="auto")
        self.acc[mid:hi] += cv[mid - lo - 1:hi - lo - 1]

    def extend(self, K: int) -> np.ndarray:
        K_old = self.a.shape[0]
        if K <= K_old:
            return self.a[:K]
        self._grow(K)
        if K_old > 0:
            self._spread(0, K_old, K)
        self._solve(K_old, K)
        return self.a


@dataclass(frozen=True)
class RubenSeries:
    """Gamma-mixture representation ``f(q) = sum_k a_k Gamma(q; alpha + k, 2 beta)``.

    ``q = g - offset``. With ``beta <= min(lambda)`` every ``a_k`` is
    nonnegative and they sum to one, so ``tail_bound`` bounds the CDF
    truncation error.
    """

    beta: float
    coeffs_a: np.ndarray
    alpha: float
    offset: float
    tail_bound: float
    log_a0: float
    window_sigmas: float = field(default=12.0, repr=False)

    @property
    def terms_K(self) -> int:
        return int(self.coeffs_a.shape[0]) - 1

    def _window(self, x: float, alpha: float) -> tuple[int, int]:
        K = self.coeffs_a.shape[0]
        center = x - alpha
        half = self.window_sigmas * math.sqrt(max(x, 0.0) + alpha) + 40.0
        lo = int(max(0, math.floor(center - half)))
        hi = int(min(K, math.ceil(center + half) + 1))
        return lo, max(lo, hi)

    def cdf(self, g) -> np.ndarray | float:
        g_arr = np.atleast_1d(np.asarray(g, dtype=float))
        out = np.zeros(g_arr.shape)
        cum = np.concatenate(([0.0], np.cumsum(self.coeffs_a)))
        a, alpha, two_beta = self.coeffs_a, self.alpha, 2.0 * self.beta
        for idx, gv in np.ndenumerate(g_arr):
            q = gv - self.offset
            if q <= 0:
                continue
            if not np.isfinite(q):
                out[idx] = cum[-1]
                continue
            x = q / two_beta
            lo, hi = self._window(x, alpha)
            # P(s+1, x) = P(s, x) - x^s e^-x / Gamma(s+1): one gammainc per point
            s = alpha + np.arange(lo, hi, dtype=float)
            w = a[lo:hi]
            later = np.cumsum(w[::-1])[::-1]
            d = np.exp(s[:-1] * math.log(x) - x - special.gammaln(s[:-1] + 1.0))
            val = cum[lo] + later[0] * special.gammainc(s[0], x) - np.dot(d, later[1:])
            out[idx] = min(1.0, max(0.0, val))
        return float(out[0]) if np.ndim(g) == 0 else out

    def pdf(self, g) -> np.ndarray | float:
        g_arr = np.atleast_1d(np.asarray(g, dtype=float))
        out = np.zeros(g_arr.shape)
        a, alpha, two_beta = self.coeffs_a, self.alpha, 2.0 * self.beta
        log_two_beta = math.log(two_beta)
        for idx, gv in np.ndenumerate(g_arr):
            q = gv - self.offset
            if q <= 0 or not np.isfinite(q):
                continue
            x = q / two_beta
            lo, hi = self._window(x, alpha)
            s = alpha + np.arange(lo, hi, dtype=float)
            logf = (s - 1.0) * math.log(x) - x - special.gammaln(s) - log_two_beta
            out[idx] = np.dot(a[lo:hi], np.exp(logf))
        return float(out[0]) if np.ndim(g) == 0 else out

    def ppf(self, p: float) -> float:
        """Quantile by bracketing and Brent's method on the CDF."""
        from scipy.optimize import brentq

        if not 0.0 < p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        hi = 2.0 * self.beta * (self.alpha + self.terms_K) + 1.0
        lo_v = 0.0
        step = hi
        while self.cdf(self.offset + hi) < p:
            lo_v = hi
            step *= 2.0
            hi += step
        return float(brentq(lambda q: self.cdf(self.offset + q) - p, lo_v, hi, xtol=1e-12, rtol=1e-12)) + self.offset


def ruben_series(
    sf: SpectralForm,
    beta: float | None = None,
    tol: float | None = None,
    max_terms: int | None = None,
) -> RubenSeries:
    """Build the mixture coefficients up to the first order whose tail is ``<= tol``.

    ``beta`` defaults to ``min(lambda)``. Any ``0 < beta < 2 min(lambda)`` is
    admissible, but only ``beta <= min(lambda)`` yields a rigorous tail bound.
    """
    lam = np.asarray(sf.weights, dtype=float)
    eta = np.asarray(sf.noncentralities, dtype=float)
    tol = SERIES_TOL if tol is None else tol
    max_terms = SERIES_MAX_TERMS if max_terms is None else max_terms
    if tol <= 0:
        raise ValueError("tol must be positive")
    lam_min = float(lam.min())
    if beta is None:
        beta = lam_min
    beta = float(beta)
    c = 1.0 - beta / lam
    if beta <= 0 or np.any(np.abs(c) >= 1.0):
        raise BetaOutOfRange(f"beta = {beta:.6g} must satisfy |1 - beta/lambda_i| < 1, i.e. 0 < beta < {2 * lam_min:.6g}")

    e2 = eta ** 2
    # mean mixture index, from the generating function's derivative at z = 1
    mean_index = float(np.sum((c + e2) / (2.0 * (1.0 - c))))
    if mean_index > max_terms:
        raise SeriesNotConverged(
            f"mixture mass is centred near order {mean_index:.3g}, beyond max_terms = {max_terms} "
            "(noncentralities too large or weights too spread)"
        )
    log_a0 = float(-0.5 * e2.sum() + 0.5 * np.sum(np.log(beta / lam)))
    # keep the recursion inside floating range; coefficients are rescaled afterwards
    log_shift = min(0.0, log_a0 + 600.0)
    a0_scaled = math.exp(log_a0 - log_shift)
    e2_over_lam = e2 / lam

    def b_fn(lo: int, hi: int) -> np.ndarray:
        return _ruben_b(c, e2_over_lam, beta, lo, hi)

    rec = _RubenRecursion(a0_scaled, b_fn)
    K = 1024
    while True:
        K = min(K, max_terms + 1)
        with np.errstate(over="raise", invalid="raise"):
            try:
                a_scaled = rec.extend(K)
            except FloatingPointError as exc:
                raise SeriesNotConverged("Ruben coefficients left floating-point range") from exc
        a = a_scaled * math.exp(log_shift)
        tail = float(1.0 - math.fsum(a))
        if tail <= tol:
            break
        if K >= max_terms + 1:
            raise SeriesNotConverged(
                f"tail bound {tail:.3e} > tol {tol:.1e} after {max_terms} terms "
                "(raise series.max_terms or loosen series.tol)"
            )
        K *= 2
    # trim to the first order meeting the tolerance
    cum_tail = 1.0 - np.cumsum(a)
    k_stop = int(np.argmax(cum_tail <= tol))
    a = a[:k_stop + 1]
    return RubenSeries(
        beta=beta,
        coeffs_a=_frozen(a),
        alpha=sf.dof / 2.0,
        offset=sf.offset,
        tail_bound=max(0.0, float(1.0 - math.fsum(a))),
        log_a0=log_a0,
    )


def ruben_pdf(sf: SpectralForm, beta: float | None, tol: float, g):
    return ruben_series(sf, beta=beta, tol=tol).pdf(g)


def ruben_cdf(sf: SpectralForm, beta: float | None, tol: float, g):
    return ruben_series(sf, beta=beta, tol=tol).cdf(g)


def ruben_coefficients_gf(sf: SpectralForm, beta: float, K: int) -> np.ndarray:
    """Mixture coefficients from the generating function by FFT on the unit circle.

    ``sum_k a_k z^k = prod_i (1-c_i)^{1/2} (1 - c_i z)^{-1/2}
    exp(eta_i^2 (z - 1) / (2 (1 - c_i z)))``; mass beyond ``K`` aliases back,
    so ``K`` must exceed the effective support. Independent of the recursion.
    """
    lam = np.asarray(sf.weights, dtype=float)
    e2 = np.asarray(sf.noncentralities, dtype=float) ** 2
    c = 1.0 - beta / lam
    z = np.exp(2j * np.pi * np.arange(K) / K)
    log_phi = np.full(K, 0.5 * np.sum(np.log1p(-c)), dtype=complex)
    for ci, ei in zip(c, e2):
        log_phi += -0.5 * np.log(1.0 - ci * z) + ei * (z - 1.0) / (2.0 * (1.0 - ci * z))
    return np.fft.fft(np.exp(log_phi)).real / K


# ----------------------------------------------------------------------------
# Monte Carlo
# ----------------------------------------------------------------------------

def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(chunk),)))


def _run_chunks(fn, M: int, threads: int):
    bounds = [(i, s, min(CHUNK_SIZE, M - s)) for i, s in enumerate(range(0, M, CHUNK_SIZE))]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda t: fn(*t), bounds))
    return [fn(*t) for t in bounds]


def sample_returns(
    spec: SystemSpec,
    cl: ClosedLoopAnalysis,
    noise: NoiseModel,
    horizons,
    M: int,
    seed: int,
    path: str = "fast",
    threads: int = 1,
) -> dict[int, np.ndarray]:
    """Coupled samples of the truncated return for several horizons.

    Each chunk draws ``w_0 .. w_{Nmax-1}`` once; horizon ``N`` uses the first
    ``N`` disturbances. Output depends on ``seed`` only, not on ``threads``.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    horizons = sorted({int(N) for N in horizons})
    n = cl.n
    N_max = horizons[-1]
    forms = {N: build_qform(cl, spec.x0, N) for N in horizons} if path == "fast" else None
    if path not in ("fast", "slow"):
        raise ValueError(f"unknown sampling path {path!r}")

    def chunk(i: int, start: int, m: int):
        rng = _chunk_rng(seed, i)
        w = noise.draw(rng, (m, N_max), n)
        res = {}
        for N in horizons:
            if path == "fast":
                res[N] = evaluate(forms[N], w[:, :N, :].reshape(m, N * n))
            else:
                res[N] = simulate_return(spec, cl, w[:, :N, :])
        return res

    parts = _run_chunks(chunk, int(M), threads)
    return {N: np.concatenate([p[N] for p in parts]) for N in horizons}


def sample_return(
    spec: SystemSpec,
    cl: ClosedLoopAnalysis,
    noise: NoiseModel,
    N: int,
    M: int,
    seed: int,
    path: str = "fast",
    threads: int = 1,
) -> np.ndarray:
    return sample_returns(spec, cl, noise, [N], M, seed, path=path, threads=threads)[int(N)]


@dataclass(frozen=True)
class EmpiricalCDF:
    """Right-continuous empirical CDF backed by a sorted sample array."""

    sorted_samples: np.ndarray

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalCDF":
        s = np.sort(np.asarray(samples, dtype=float).reshape(-1))
        if s.size < 1:
            raise InsufficientSamples("empirical CDF needs at least one sample")
        return cls(_frozen(s))

    @property
    def size(self) -> int:
        return int(self.sorted_samples.shape[0])

    def __call__(self, g):
        return np.searchsorted(self.sorted_samples, g, side="right") / self.size

    def left_limit(self, g):
        return np.searchsorted(self.sorted_samples, g, side="left") / self.size

    def quantile(self, p):
        return np.quantile(self.sorted_samples, p)


def empirical_cdf(samples) -> EmpiricalCDF:
    return EmpiricalCDF.from_samples(samples)


def ks_distance(ecdf: EmpiricalCDF, cdf) -> float:
    """Exact sup distance between an empirical CDF and a continuous ``cdf`` callable."""
    x = ecdf.sorted_samples
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, x.size + 1) / x.size
    return float(max(np.max(i - F), np.max(F - (i - 1.0 / x.size))))


def ks_two_sample(a: EmpiricalCDF | np.ndarray, b: EmpiricalCDF | np.ndarray) -> float:
    xa = a.sorted_samples if isinstance(a, EmpiricalCDF) else np.sort(a)
    xb = b.sorted_samples if isinstance(b, EmpiricalCDF) else np.sort(b)
    return float(stats.ks_2samp(xa, xb, method="asymp").statistic)


def ks_grid_bound(ecdf: EmpiricalCDF, grid, cdf_on_grid) -> tuple[float, float]:
    """Lower and upper bounds on ``sup_g |F_hat(g) - F(g)|`` from a grid evaluation.

    ``F`` must be continuous and non-decreasing, and the grid must bracket the
    samples. Between consecutive nodes both functions are monotone, which
    bounds the gap by the node values.
    """
    grid = np.asarray(grid, dtype=float)
    F = np.asarray(cdf_on_grid, dtype=float)
    x = ecdf.sorted_samples
    if grid[0] > x[0] or grid[-1] < x[-1]:
        raise ValueError("grid must bracket the samples")
    Fh = ecdf(grid)
    Fh_left = ecdf.left_limit(grid)
    lower = float(max(np.max(np.abs(Fh - F)), np.max(np.abs(Fh_left - F))))
    # on (g_j, g_{j+1}): F_hat in [Fh_j, Fh_left_{j+1}], F in [F_j, F_{j+1}]
    upper_gaps = np.maximum(Fh_left[1:] - F[:-1], F[1:] - Fh[:-1])
    upper = float(max(lower, np.max(upper_gaps)))
    return lower, upper
