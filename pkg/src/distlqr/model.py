"""Closed-loop quantities of a discounted LQR problem under a fixed gain.

Given ``(A, B, Q, R, gamma, K, x0)`` this module forms the closed loop
``A_K = A + B K`` and stage cost ``Q_K = Q + K' R K``, solves the discounted
Lyapunov equation

    P = Q_K + gamma * A_K' P A_K,

and derives the similarity-transformed closed loop ``A_hat = P^{1/2} A_K P^{-1/2}``
whose spectral norm ``lambda_bar`` drives the block-dominance certificate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonStabilizing, NotPositiveDefinite
from .settings import DEFAULT_TOLERANCES, Tolerances


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def check_spd(M: np.ndarray, name: str, tol: float = 1e-10, exc=NotPositiveDefinite) -> None:
    """Raise ``exc`` unless ``M`` is symmetric (to ``tol``) with positive eigenvalues."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {M.shape}")
    scale = max(np.abs(M).max(), 1.0)
    if np.abs(M - M.T).max() > tol * scale:
        raise exc(f"{name} is not symmetric")
    eig = np.linalg.eigvalsh(0.5 * (M + M.T))
    if eig[0] <= 0:
        raise exc(f"{name} is not positive definite (min eigenvalue {eig[0]:.3e})")


def sqrtm_spd(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Principal square root and inverse square root of an SPD matrix."""
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    if w[0] <= 0:
        raise NotPositiveDefinite(f"matrix is not positive definite (min eigenvalue {w[0]:.3e})")
    root = (V * np.sqrt(w)) @ V.T
    inv_root = (V / np.sqrt(w)) @ V.T
    return 0.5 * (root + root.T), 0.5 * (inv_root + inv_root.T)


@dataclass(frozen=True)
class SystemSpec:
    """LQR problem data with a fixed linear feedback gain ``u = K x``."""

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    gamma: float
    K: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float)
        K = np.asarray(self.K, dtype=float)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        B = B.reshape(n, -1) if B.ndim < 2 else B
        p = B.shape[1]
        K = K.reshape(p, n) if K.ndim < 2 and K.size == p * n else K
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if B.shape != (n, p):
            raise DimensionMismatch(f"B must be {n}x{p}, got {B.shape}")
        if K.shape != (p, n):
            raise DimensionMismatch(f"K must be {p}x{n}, got {K.shape}")
        if Q.shape != (n, n):
            raise DimensionMismatch(f"Q must be {n}x{n}, got {Q.shape}")
        if R.shape != (p, p):
            raise DimensionMismatch(f"R must be {p}x{p}, got {R.shape}")
        if x0.shape != (n,):
            raise DimensionMismatch(f"x0 must have length {n}, got {x0.shape}")
        gamma = float(self.gamma)
        if not 0.0 < gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
        check_spd(Q, "Q")
        check_spd(R, "R")
        for name, val in (("A", A), ("B", B), ("Q", Q), ("R", R), ("K", K), ("x0", x0)):
            object.__setattr__(self, name, _frozen(val))
        object.__setattr__(self, "gamma", gamma)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    @property
    def A_K(self) -> np.ndarray:
        return self.A + self.B @ self.K

    @property
    def Q_K(self) -> np.ndarray:
        QK = self.Q + self.K.T @ self.R @ self.K
        return 0.5 * (QK + QK.T)

    def with_x0(self, x0) -> "SystemSpec":
        return SystemSpec(self.A, self.B, self.Q, self.R, self.gamma, self.K, x0)


@dataclass(frozen=True)
class ClosedLoopAnalysis:
    gamma: float
    A_K: np.ndarray
    Q_K: np.ndarray
    P: np.ndarray
    P_half: np.ndarray
    P_inv_half: np.ndarray
    A_hat: np.ndarray
    lambda_bar: float
    lambda_bar_from_cost: float
    spectral_radius_AK: float
    norm_AK: float
    residual: float

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def norm_P(self) -> float:
        return float(np.linalg.norm(self.P, 2))


@dataclass(frozen=True)
class AssumptionCertificate:
    N: int
    phi: np.ndarray
    phi_max: float
    holds: bool


def lyapunov_residual(P, A_K, Q_K, gamma) -> float:
    """Relative residual ``||P - Q_K - gamma A_K' P A_K|| / ||P||`` (spectral norm)."""
    R = P - Q_K - gamma * A_K.T @ P @ A_K
    return float(np.linalg.norm(R, 2) / np.linalg.norm(P, 2))


def solve_lyapunov_direct(A_K: np.ndarray, Q_K: np.ndarray, gamma: float) -> np.ndarray:
    """Solve ``(I - gamma A_K' (x) A_K') vec(P) = vec(Q_K)``."""
    n = A_K.shape[0]
    At = A_K.T
    M = np.eye(n * n) - gamma * np.kron(At, At)
    # row-major vec: vec(A' P A) = kron(A', A') vec(P)
    P = np.linalg.solve(M, Q_K.reshape(-1)).reshape(n, n)
    return 0.5 * (P + P.T)


def solve_lyapunov_fixed_point(
    A_K: np.ndarray,
    Q_K: np.ndarray,
    gamma: float,
    rtol: float = 1e-12,
    max_iter: int = 1_000_000,
) -> np.ndarray:
    """Iterate ``P <- Q_K + gamma A_K' P A_K`` until the relative residual is below ``rtol``."""
    P = Q_K.copy()
    for _ in range(max_iter):
        P_next = Q_K + gamma * A_K.T @ P @ A_K
        P_next = 0.5 * (P_next + P_next.T)
        if np.linalg.norm(P_next - P, 2) <= rtol * np.linalg.norm(P_next, 2):
            return P_next
        if not np.all(np.isfinite(P_next)):
            break
        P = P_next
    raise NonStabilizing("fixed-point iteration for the discounted Lyapunov equation did not converge")


def solve_lyapunov(
    spec: SystemSpec,
    method: str = "auto",
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ClosedLoopAnalysis:
    """Solve the discounted Lyapunov equation and derive the closed-loop quantities.

    Parameters
    ----------
    spec : SystemSpec
    method : {"auto", "direct", "fixed_point"}
        ``auto`` uses the vectorized direct solve while ``n*n`` stays within
        ``tol.direct_solve_max_unknowns`` and fixed-point iteration beyond.
    """
    A_K = spec.A_K
    Q_K = spec.Q_K
    gamma = spec.gamma
    rho = float(np.max(np.abs(np.linalg.eigvals(A_K))))
    if np.sqrt(gamma) * rho > 1.0 - tol.stability_margin:
        raise NonStabilizing(
            f"spectral radius of sqrt(gamma)*A_K is {np.sqrt(gamma) * rho:.6g} >= 1; "
            "the discounted Lyapunov equation has no SPD solution"
        )
    if method == "auto":
        method = "direct" if spec.n ** 2 <= tol.direct_solve_max_unknowns else "fixed_point"
    if method == "direct":
        P = solve_lyapunov_direct(A_K, Q_K, gamma)
    elif method == "fixed_point":
        P = solve_lyapunov_fixed_point(
            A_K, Q_K, gamma, rtol=tol.fixed_point_residual, max_iter=tol.fixed_point_max_iter
        )
    else:
        raise ValueError(f"unknown Lyapunov method {method!r}")

    residual = lyapunov_residual(P, A_K, Q_K, gamma)
    if residual > tol.lyapunov_residual:
        raise NonStabilizing(f"Lyapunov residual {residual:.3e} exceeds tolerance")
    P_half, P_inv_half = sqrtm_spd(P)
    A_hat = P_half @ A_K @ P_inv_half
    lambda_bar = float(np.linalg.norm(A_hat, 2))
    M = P_inv_half @ Q_K @ P_inv_half
    lam_min = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
    lambda_bar_from_cost = float(np.sqrt(max(0.0, (1.0 - lam_min) / gamma)))
    return ClosedLoopAnalysis(
        gamma=gamma,
        A_K=_frozen(A_K),
        Q_K=_frozen(Q_K),
        P=_frozen(P),
        P_half=_frozen(P_half),
        P_inv_half=_frozen(P_inv_half),
        A_hat=_frozen(A_hat),
        lambda_bar=lambda_bar,
        lambda_bar_from_cost=lambda_bar_from_cost,
        spectral_radius_AK=rho,
        norm_AK=float(np.linalg.norm(A_K, 2)),
        residual=residual,
    )


def cost_identity_residual(cl: ClosedLoopAnalysis) -> float:
    """Norm of ``(1/gamma)(I - P^{-1/2} Q_K P^{-1/2}) - A_hat' A_hat``."""
    n = cl.n
    lhs = (np.eye(n) - cl.P_inv_half @ cl.Q_K @ cl.P_inv_half) / cl.gamma
    rhs = cl.A_hat.T @ cl.A_hat
    return float(np.linalg.norm(lhs - rhs, 2))


def geometric_sum(r: float, m: int) -> float:
    """``sum_{j=1}^{m} r**j`` in closed form (0 for ``m <= 0``)."""
    if m <= 0 or r == 0.0:
        return 0.0
    if r == 1.0:
        return float(m)
    return r * (1.0 - r ** m) / (1.0 - r)


def phi_values(lambda_bar: float, gamma: float, N: int) -> np.ndarray:
    """Row dominance ratios ``phi_i = sum_{j<=i} lb^j + sum_{j<=N-i} (gamma lb)^j``."""
    return np.array(
        [geometric_sum(lambda_bar, i) + geometric_sum(gamma * lambda_bar, N - i) for i in range(1, N + 1)]
    )


def certify_assumption(cl: ClosedLoopAnalysis, N: int) -> AssumptionCertificate:
    if N < 1:
        raise ValueError("N must be a positive integer")
    phi = phi_values(cl.lambda_bar, cl.gamma, N)
    phi_max = float(phi.max())
    return AssumptionCertificate(N=int(N), phi=_frozen(phi), phi_max=phi_max, holds=bool(phi_max < 1.0))
