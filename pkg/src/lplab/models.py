"""Model parameterizations, stationary moments, and horizon coefficients.

The univariate model is a quadratic autoregression with a latent AR(1)
state and conditionally heteroskedastic innovations:

    y_t = phi1*y_{t-1} + phi2*s_{t-1}^2 + (1 + gamma*s_{t-1})*sigma*u_t
    s_t = phi1*s_{t-1} + sigma*u_t,          u_t ~ iid N(0,1)

The multivariate analogue replaces scalars with matrices and the squared
state with vech(s s'); reduced-form shocks are eta_t = Sigma_tr u_t with
Sigma_tr the lower Cholesky factor of Sigma and u_t ~ N(0, I_n).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QarParams",
    "QarMoments",
    "HorizonCoeffs",
    "QvarParams",
    "qar_moments",
    "horizon_coeffs",
    "asym_m",
    "nu_m",
    "vech",
    "unvech",
    "vech_indices",
    "stationary_state_variance",
]


@dataclass(frozen=True)
class QarParams:
    """Parameters of the univariate quadratic autoregression.

    Stationarity needs only |phi1| < 1: the state is linear and the outcome
    inherits its stability. Large phi2 or gamma fatten the outcome's tails
    without breaking stationarity, so they are not restricted here.

    Attributes
    ----------
    phi1 : float
        AR coefficient of the latent state, |phi1| < 1.
    phi2 : float
        Loading on the squared lagged state in the outcome equation.
    gamma : float
        Heteroskedasticity loading on the lagged state.
    sigma : float
        Shock scale, > 0.
    """

    phi1: float
    phi2: float
    gamma: float
    sigma: float = 1.0

    def __post_init__(self):
        if not abs(self.phi1) < 1:
            raise ValueError(f"|phi1| must be < 1 for stationarity, got {self.phi1}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")

    def to_json(self) -> str:
        return json.dumps(
            {"phi1": self.phi1, "phi2": self.phi2, "gamma": self.gamma, "sigma": self.sigma}
        )

    @classmethod
    def from_json(cls, text: str) -> "QarParams":
        d = json.loads(text)
        return cls(phi1=d["phi1"], phi2=d["phi2"], gamma=d["gamma"], sigma=d["sigma"])


@dataclass(frozen=True)
class QarMoments:
    """Closed-form stationary moments of (y_t, s_t)."""

    mean_y: float
    var_y: float
    var_s: float
    cov_sy: float
    var_s_given_y: float
    proxy_slope: float


def qar_moments(p: QarParams) -> QarMoments:
    """Stationary moments from the model recursion.

    mean_y solves mu = phi1*mu + phi2*var_s.  var_y follows from the
    variance recursion using Var(s^2) = 2*var_s^2 (the state is marginally
    Gaussian) and the fixed point of Cov(y_t, s_t^2).  Cov(s, y) equals
    Var(s) exactly: the projection of y on s has unit slope.
    """
    phi1, phi2, gamma, sigma = p.phi1, p.phi2, p.gamma, p.sigma
    var_s = sigma**2 / (1 - phi1**2)
    mean_y = phi2 * sigma**2 / ((1 - phi1) * (1 - phi1**2))
    # cov(y_t, s_t^2) fixed point: c2 = phi1^3*c2 + 2*phi1^2*phi2*var_s^2 + 2*phi1*gamma*sigma^2*var_s
    cov_y_s2 = 2 * phi1 * var_s * (phi1 * phi2 * var_s + gamma * sigma**2) / (1 - phi1**3)
    var_y = (
        2 * phi2**2 * var_s**2
        + sigma**2 * (1 + gamma**2 * var_s)
        + 2 * phi1 * phi2 * cov_y_s2
    ) / (1 - phi1**2)
    cov_sy = var_s
    var_s_given_y = var_s - cov_sy**2 / var_y
    proxy_slope = cov_sy / var_y
    return QarMoments(
        mean_y=mean_y,
        var_y=var_y,
        var_s=var_s,
        cov_sy=cov_sy,
        var_s_given_y=var_s_given_y,
        proxy_slope=proxy_slope,
    )


@dataclass(frozen=True)
class HorizonCoeffs:
    """Coefficients of the true h-step response: baseline, state loading, quadratic."""

    h: int
    baseline: float
    a_h: float
    q_h: float


def horizon_coeffs(p: QarParams, h: int) -> HorizonCoeffs:
    """Horizon-h response coefficients.

    baseline = sigma*phi1^h
    a_h = sigma*phi1^h * (gamma + 2*phi2*(1 - phi1^h)/(1 - phi1))
    q_h = phi2*sigma^2 * (phi1^(h-1) - phi1^(2h-1))/(1 - phi1),  q_0 = 0

    q_0 is pinned to zero rather than evaluated (the formula's phi1^(-1)
    terms cancel identically but divide by zero at phi1 = 0).
    """
    if h < 0:
        raise ValueError(f"horizon must be >= 0, got {h}")
    phi1, phi2, gamma, sigma = p.phi1, p.phi2, p.gamma, p.sigma
    baseline = sigma * phi1**h
    a_h = sigma * phi1**h * (gamma + 2 * phi2 * (1 - phi1**h) / (1 - phi1))
    if h == 0:
        q_h = 0.0
    else:
        q_h = phi2 * sigma**2 * (phi1 ** (h - 1) - phi1 ** (2 * h - 1)) / (1 - phi1)
    return HorizonCoeffs(h=h, baseline=baseline, a_h=a_h, q_h=q_h)


def asym_m() -> float:
    """Constant m = sqrt(2/pi)/(1 - 2/pi).

    Equals the ratio (E[S]E[Su^3] - E[Su]E[Su^2]) / (E[S]E[Su^2] - E[Su]^2)
    of standard-normal moments truncated to u > 0; it is the slope with
    which a sign-split linear regression absorbs the quadratic term.
    """
    r = 2.0 / math.pi
    return math.sqrt(r) / (1.0 - r)


def nu_m() -> float:
    """E[(u^2 - m|u|)^2] for u ~ N(0,1): 3 - 4*m*sqrt(2/pi) + m^2."""
    m = asym_m()
    return 3.0 - 4.0 * m * math.sqrt(2.0 / math.pi) + m * m


def vech_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column indices of the lower triangle in column-major order."""
    rows, cols = [], []
    for j in range(n):
        for i in range(j, n):
            rows.append(i)
            cols.append(j)
    return np.asarray(rows), np.asarray(cols)


def vech(M: np.ndarray, *, tol: float = 1e-10) -> np.ndarray:
    """Stack the lower triangle of a symmetric matrix, column by column."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"vech expects a square matrix, got shape {M.shape}")
    if np.abs(M - M.T).max(initial=0.0) > tol:
        raise ValueError("vech input is not symmetric to tolerance 1e-10")
    rows, cols = vech_indices(M.shape[0])
    return M[rows, cols]


def unvech(v: np.ndarray) -> np.ndarray:
    """Inverse of vech: rebuild the symmetric matrix."""
    v = np.asarray(v, dtype=float)
    n = int(round((math.sqrt(8 * v.size + 1) - 1) / 2))
    if n * (n + 1) // 2 != v.size:
        raise ValueError(f"length {v.size} is not a triangular number")
    M = np.zeros((n, n))
    rows, cols = vech_indices(n)
    M[rows, cols] = v
    M[cols, rows] = v
    return M


@dataclass(frozen=True)
class QvarParams:
    """Parameters of the n-dimensional quadratic vector autoregression.

    Sigma_tr (lower Cholesky factor of Sigma) is computed at construction;
    a non-positive-definite Sigma is a construction error.
    """

    n: int
    Phi1: np.ndarray
    Phi2: np.ndarray
    Gamma: np.ndarray
    Sigma: np.ndarray
    Sigma_tr: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        n = self.n
        m = n * (n + 1) // 2
        for name, arr, shape in [
            ("Phi1", self.Phi1, (n, n)),
            ("Phi2", self.Phi2, (n, m)),
            ("Gamma", self.Gamma, (n, n)),
            ("Sigma", self.Sigma, (n, n)),
        ]:
            arr = np.asarray(arr, dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            object.__setattr__(self, name, arr)
        rho = np.max(np.abs(np.linalg.eigvals(self.Phi1)))
        if not rho < 1:
            raise ValueError(f"spectral radius of Phi1 must be < 1, got {rho:.6f}")
        if np.abs(self.Sigma - self.Sigma.T).max() > 1e-12:
            raise ValueError("Sigma must be symmetric")
        try:
            tr = np.linalg.cholesky(self.Sigma)
        except np.linalg.LinAlgError as exc:
            raise ValueError("Sigma must be positive definite") from exc
        object.__setattr__(self, "Sigma_tr", tr)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "Phi1": self.Phi1.tolist(),
                "Phi2": self.Phi2.tolist(),
                "Gamma": self.Gamma.tolist(),
                "Sigma": self.Sigma.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "QvarParams":
        d = json.loads(text)
        return cls(
            n=d["n"],
            Phi1=np.asarray(d["Phi1"], dtype=float),
            Phi2=np.asarray(d["Phi2"], dtype=float),
            Gamma=np.asarray(d["Gamma"], dtype=float),
            Sigma=np.asarray(d["Sigma"], dtype=float),
        )


def stationary_state_variance(
    p: QvarParams | None = None,
    *,
    Phi1: np.ndarray | None = None,
    Sigma: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> np.ndarray:
    """Stationary Var(s_t): the fixed point V = Phi1 V Phi1' + Sigma.

    Solved by squaring iterations, V <- V + A V A' with A <- A A, which
    converges quadratically for any stable Phi1.  Raises if the residual
    does not reach `tol` within `max_iter` iterations.
    """
    if p is not None:
        Phi1, Sigma = p.Phi1, p.Sigma
    A = np.asarray(Phi1, dtype=float)
    V = np.asarray(Sigma, dtype=float).copy()
    Ak = A.copy()
    for _ in range(max_iter):
        resid = np.abs(V - A @ V @ A.T - Sigma).max()
        if resid <= tol:
            return (V + V.T) / 2
        V = V + Ak @ V @ Ak.T
        Ak = Ak @ Ak
    resid = np.abs(V - A @ V @ A.T - Sigma).max()
    raise RuntimeError(f"state-variance iteration did not converge: residual {resid:.3e}")
