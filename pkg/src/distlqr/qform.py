"""Quadratic-form representation of the truncated random return.

Stacking the disturbances ``Z = [w_0; ...; w_{N-1}]`` the truncated return is

    S(Z) = Z' H Z + 2 L' Z + c

with ``H`` block-symmetric, ``[H]_{ij} = gamma^i P A_K^{i-j}`` for ``i >= j``
(1-based block indices), ``[L]_i = gamma^i P A_K^i x0`` and ``c = x0' P x0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EigensolveFailure, NotScalarSystem
from .model import AssumptionCertificate, ClosedLoopAnalysis, SystemSpec, _frozen, phi_values

MAX_DENSE_DIM = 4000


@dataclass(frozen=True)
class QuadraticForm:
    H: np.ndarray
    L: np.ndarray
    c: float
    N: int
    n: int

    @property
    def dim(self) -> int:
        return self.N * self.n

    def minimizer(self) -> np.ndarray:
        """``-H^{-1} L``, the unconstrained minimizer of ``S``."""
        return -np.linalg.solve(self.H, self.L)

    def minimum(self) -> float:
        """``c - L' H^{-1} L``."""
        return float(self.c - self.L @ np.linalg.solve(self.H, self.L))


@dataclass(frozen=True)
class EigenCertificate:
    eig_min: float
    eig_max: float
    lb_norm_p: float
    ub_norm_p: float
    lb_pmin: float
    positive_definite: bool
    assumption_holds: bool
    argmin_index: int
    argmax_index: int


def _matrix_powers(A: np.ndarray, N: int) -> list[np.ndarray]:
    powers = [np.eye(A.shape[0])]
    for _ in range(N):
        powers.append(powers[-1] @ A)
    return powers


def build_qform(cl: ClosedLoopAnalysis, x0, N: int) -> QuadraticForm:
    if N < 1:
        raise ValueError("N must be a positive integer")
    n = cl.n
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (n,):
        raise DimensionMismatch(f"x0 must have length {n}, got {x0.shape}")
    if N * n > MAX_DENSE_DIM:
        raise ValueError(f"N*n = {N * n} exceeds the dense assembly cap of {MAX_DENSE_DIM}")
    g, P = cl.gamma, cl.P
    powers = _matrix_powers(cl.A_K, N)
    H = np.zeros((N * n, N * n))
    L = np.zeros(N * n)
    for i in range(1, N + 1):
        gi = g ** i
        rows = slice((i - 1) * n, i * n)
        L[rows] = gi * P @ powers[i] @ x0
        H[rows, rows] = gi * P
        for j in range(1, i):
            block = gi * P @ powers[i - j]
            cols = slice((j - 1) * n, j * n)
            H[rows, cols] = block
            H[cols, rows] = block.T
    return QuadraticForm(H=_frozen(H), L=_frozen(L), c=float(x0 @ P @ x0), N=int(N), n=n)


def evaluate(qf: QuadraticForm, z) -> np.ndarray | float:
    """``z' H z + 2 L' z + c``; ``z`` may be a single vector or an ``(M, N*n)`` batch."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != qf.dim:
        raise DimensionMismatch(f"z must have trailing length {qf.dim}, got {z.shape}")
    if z.ndim == 1:
        return float(z @ qf.H @ z + 2.0 * qf.L @ z + qf.c)
    return np.einsum("mi,mi->m", z @ qf.H, z) + 2.0 * (z @ qf.L) + qf.c


def simulate_return(spec: SystemSpec, cl: ClosedLoopAnalysis, noise_draw) -> np.ndarray | float:
    """Truncated return summed term by term from the disturbance sequence.

    ``noise_draw`` has shape ``(N, n)`` or a batch ``(M, N, n)``. No quadratic
    form is assembled; this is the reference path for ``evaluate``.
    """
    w = np.asarray(noise_draw, dtype=float)
    single = w.ndim == 2
    if single:
        w = w[None]
    n = cl.n
    if w.ndim != 3 or w.shape[2] != n:
        raise DimensionMismatch(f"noise_draw must have shape (N, {n}) or (M, N, {n}), got {np.shape(noise_draw)}")
    N = w.shape[1]
    g, P, A_K, x = cl.gamma, cl.P, cl.A_K, spec.x0
    powers = _matrix_powers(A_K, N)

    total = np.full(w.shape[0], float(x @ P @ x))
    for k in range(N):
        gk = g ** (k + 1)
        wk = w[:, k, :]
        total += 2.0 * gk * (wk @ (P @ powers[k + 1] @ x))
        total += gk * np.einsum("mi,ij,mj->m", wk, P, wk)
        if k >= 1:
            acc = np.zeros_like(wk)
            for tau in range(k):
                acc += w[:, tau, :] @ powers[k - tau].T
            total += 2.0 * gk * np.einsum("mi,ij,mj->m", wk, P, acc)
    return float(total[0]) if single else total


def certify_pd(qf: QuadraticForm, cert: AssumptionCertificate, cl: ClosedLoopAnalysis) -> EigenCertificate:
    if cert.N != qf.N:
        raise ValueError("certificate and quadratic form use different horizons")
    try:
        eig = np.linalg.eigvalsh(qf.H)
    except np.linalg.LinAlgError as exc:
        raise EigensolveFailure(str(exc)) from exc
    gi = cl.gamma ** np.arange(1, qf.N + 1)
    norm_P = cl.norm_P
    lower = gi * norm_P * (1.0 - cert.phi)
    upper = gi * norm_P * (1.0 + cert.phi)
    lam_min_P = float(np.linalg.eigvalsh(cl.P)[0])
    imin = int(np.argmin(lower))
    imax = int(np.argmax(upper))
    return EigenCertificate(
        eig_min=float(eig[0]),
        eig_max=float(eig[-1]),
        lb_norm_p=float(lower[imin]),
        ub_norm_p=float(upper[imax]),
        lb_pmin=float(lam_min_P * np.min(gi * (1.0 - cert.phi))),
        positive_definite=bool(eig[0] > 0),
        assumption_holds=cert.holds,
        argmin_index=imin + 1,
        argmax_index=imax + 1,
    )


def scalar_minors(cl: ClosedLoopAnalysis, N: int) -> np.ndarray:
    """Leading principal minors of ``H`` for a scalar system, in closed form.

    ``Delta_i = P^i gamma^{i(i+1)/2} (1 - gamma a^2)^{i-1}`` with ``a = A_K``.
    """
    if cl.n != 1:
        raise NotScalarSystem(f"scalar_minors requires n = 1, got n = {cl.n}")
    p = float(cl.P[0, 0])
    a = float(cl.A_K[0, 0])
    g = cl.gamma
    i = np.arange(1, N + 1, dtype=float)
    return p ** i * g ** (i * (i + 1) / 2.0) * (1.0 - g * a * a) ** (i - 1)


def transformed_H(qf: QuadraticForm, cl: ClosedLoopAnalysis) -> np.ndarray:
    """``Psi^{-1} H Psi^{-1}`` with ``Psi = blockdiag(P^{1/2}, ..., P^{1/2})``."""
    Psi_inv = np.kron(np.eye(qf.N), cl.P_inv_half)
    return Psi_inv @ qf.H @ Psi_inv


def block_gershgorin(qf: QuadraticForm, cl: ClosedLoopAnalysis) -> list[tuple[float, float]]:
    """Inclusion intervals for the eigenvalues of the transformed matrix.

    Row ``i`` of the transformed matrix has diagonal block ``gamma^i I`` and
    off-diagonal blocks of norm at most ``gamma^i lb^{i-j}`` (``j < i``) and
    ``gamma^j lb^{j-i}`` (``j > i``), so every eigenvalue lies within
    ``gamma^i phi_i`` of some ``gamma^i``. Returned as ``(center, radius)``.
    """
    phi = phi_values(cl.lambda_bar, cl.gamma, qf.N)
    centers = cl.gamma ** np.arange(1, qf.N + 1)
    return [(float(c), float(c * f)) for c, f in zip(centers, phi)]


def in_union(values, intervals, rtol: float = 1e-10) -> np.ndarray:
    """Membership of each value in the union of ``[center - radius, center + radius]``."""
    values = np.asarray(values, dtype=float)
    ok = np.zeros(values.shape, dtype=bool)
    for center, radius in intervals:
        slack = rtol * max(abs(center), 1e-300) + 1e-15
        ok |= np.abs(values - center) <= radius + slack
    return ok
