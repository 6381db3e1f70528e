"""Regression designs, OLS, and HAC/EHW inference for horizon-h projections.

Column ordering is fixed per specification so that coefficient names are
stable across runs (impulse-response gradients index coefficients by
name):

    linear  : const, u, controls
    asym    : pos, pos*u, neg, neg*u, pos-controls, neg-controls
    lag     : const, u, z*u, z, controls, z*controls
    mixed   : sign-split of the lag design
    feas    : const, u, z*u, u^2, controls
    infeas  : const, u, s*u, u^2, controls

Controls are `control_lags` lags of the outcome(s) and of the shock, all
dated t-1 or earlier.  The sign-split design always carries its two
state-dependent constants; without them the implied response would not
decay to zero with the horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .irf import SpecKind
from .models import QvarParams
from .simulate import SimulatedPath, simulate_qvar

__all__ = [
    "DesignSpec",
    "Design",
    "RegressionFit",
    "IrfEstimate",
    "build_design",
    "ols",
    "fit_lp",
    "hac_lrv",
    "ehw_vcov",
    "irf_ci",
    "default_bandwidth",
    "counterexample_params",
    "score_lag1_autocov",
]

_CONDITION_LIMIT = 1e12


def default_bandwidth(t_obs: int) -> int:
    """Bartlett truncation rule floor(0.75 * T^(1/3))."""
    return max(int(math.floor(0.75 * t_obs ** (1.0 / 3.0))), 1)


@dataclass(frozen=True)
class DesignSpec:
    """What to regress: specification, horizon, and data-column roles."""

    spec: SpecKind
    h: int
    shock_index: int = 0
    outcome_index: int = 0
    control_lags: int = 0
    state_proxy: tuple[int, ...] | None = None  # outcome columns entering z_{t-1}
    include_constant: bool = True

    def __post_init__(self):
        object.__setattr__(self, "spec", SpecKind(self.spec))
        if self.h < 0:
            raise ValueError("horizon must be >= 0")
        if self.control_lags < 0:
            raise ValueError("control_lags must be >= 0")


@dataclass(frozen=True)
class Design:
    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]
    spec: SpecKind
    h: int


def _series(path: SimulatedPath, design: DesignSpec):
    if path.multivariate:
        y_out = path.y[:, design.outcome_index]
        u = path.u[:, design.shock_index]
        proxy_cols = design.state_proxy
        if proxy_cols is None:
            proxy_cols = tuple(range(path.y.shape[1]))
        proxy = path.y[:, list(proxy_cols)]
        controls_pool = path.y
    else:
        y_out = path.y
        u = path.u
        proxy = path.y[:, None]
        controls_pool = path.y[:, None]
    return y_out, u, proxy, controls_pool


def build_design(design: DesignSpec, path: SimulatedPath) -> Design:
    """Assemble (X, y) for the requested horizon-h projection.

    Rows run over every index where the target, the shock, the lagged
    conditioning value, and all control lags exist.
    """
    spec, h = design.spec, design.h
    if spec in (SpecKind.INFEAS_COND1, SpecKind.INFEAS_COND2):
        raise ValueError(f"{spec.value} designs require a conditioning region, not a path")
    y_out, u, proxy, controls_pool = _series(path, design)
    T = len(y_out)
    needs_state = spec in (SpecKind.LAG, SpecKind.MIXED, SpecKind.FEAS, SpecKind.INFEAS)
    t0 = max(1 if needs_state else 0, design.control_lags)
    if T - h - t0 < 2:
        raise ValueError(f"path of length {T} too short for h={h} with {design.control_lags} lags")
    sl = slice(t0, T - h)
    yy = y_out[t0 + h : T]
    uu = u[sl]

    cols: list[np.ndarray] = []
    names: list[str] = []

    def add(name: str, col: np.ndarray):
        names.append(name)
        cols.append(col)

    # controls: lags of the outcome(s) and of the shock
    controls: list[tuple[str, np.ndarray]] = []
    n_out = controls_pool.shape[1]
    for lag in range(1, design.control_lags + 1):
        for j in range(n_out):
            nm = f"y{j+1}.l{lag}" if n_out > 1 else f"y.l{lag}"
            controls.append((nm, controls_pool[t0 - lag : T - h - lag, j]))
        controls.append((f"u.l{lag}", u[t0 - lag : T - h - lag]))

    if spec in (SpecKind.LAG, SpecKind.MIXED, SpecKind.FEAS):
        z = proxy[t0 - 1 : T - h - 1]
        z_names = [f"z{k+1}" for k in range(z.shape[1])] if z.shape[1] > 1 else ["z"]
    if spec == SpecKind.INFEAS:
        if path.multivariate:
            strue = path.s[t0 - 1 : T - h - 1]
            s_names = [f"s{k+1}" for k in range(strue.shape[1])]
        else:
            strue = path.s[t0 - 1 : T - h - 1, None]
            s_names = ["s"]

    if spec == SpecKind.LINEAR:
        if design.include_constant:
            add("const", np.ones_like(uu))
        add("u", uu)
        for nm, c in controls:
            add(nm, c)
    elif spec == SpecKind.ASYM:
        pos = (uu > 0).astype(float)
        add("pos", pos)
        add("pos*u", pos * uu)
        add("neg", 1.0 - pos)
        add("neg*u", (1.0 - pos) * uu)
        for nm, c in controls:
            add(f"pos*{nm}", pos * c)
        for nm, c in controls:
            add(f"neg*{nm}", (1.0 - pos) * c)
    elif spec == SpecKind.LAG:
        if design.include_constant:
            add("const", np.ones_like(uu))
        add("u", uu)
        for k, nm in enumerate(z_names):
            add(f"{nm}*u", z[:, k] * uu)
        for k, nm in enumerate(z_names):
            add(nm, z[:, k])
        for nm, c in controls:
            add(nm, c)
        for k, znm in enumerate(z_names):
            for nm, c in controls:
                add(f"{znm}*{nm}", z[:, k] * c)
    elif spec == SpecKind.MIXED:
        pos = (uu > 0).astype(float)
        for tag, ind in (("pos", pos), ("neg", 1.0 - pos)):
            add(tag, ind)
            add(f"{tag}*u", ind * uu)
            for k, nm in enumerate(z_names):
                add(f"{tag}*{nm}*u", ind * z[:, k] * uu)
            for k, nm in enumerate(z_names):
                add(f"{tag}*{nm}", ind * z[:, k])
            for nm, c in controls:
                add(f"{tag}*{nm}", ind * c)
    elif spec == SpecKind.FEAS:
        if design.include_constant:
            add("const", np.ones_like(uu))
        add("u", uu)
        for k, nm in enumerate(z_names):
            add(f"{nm}*u", z[:, k] * uu)
        add("u^2", uu**2)
        for nm, c in controls:
            add(nm, c)
    elif spec == SpecKind.INFEAS:
        if design.include_constant:
            add("const", np.ones_like(uu))
        add("u", uu)
        for k, nm in enumerate(s_names):
            add(f"{nm}*u", strue[:, k] * uu)
        add("u^2", uu**2)
        for nm, c in controls:
            add(nm, c)
    else:  # pragma: no cover
        raise ValueError(f"unsupported spec {spec}")

    X = np.column_stack(cols)
    return Design(X=X, y=yy, names=tuple(names), spec=spec, h=h)


@dataclass
class RegressionFit:
    """OLS output plus (optionally) HAC and EHW covariance estimates."""

    names: tuple[str, ...]
    coefficients: np.ndarray
    residuals: np.ndarray
    gram: np.ndarray
    t_obs: int
    hac_lrv: np.ndarray | None = None
    vcov_hac: np.ndarray | None = None
    vcov_ehw: np.ndarray | None = None
    bandwidth: int | None = None

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def se_hac(self, name: str) -> float:
        return float(np.sqrt(self.vcov_hac[self.names.index(name), self.names.index(name)]))

    def se_ehw(self, name: str) -> float:
        return float(np.sqrt(self.vcov_ehw[self.names.index(name), self.names.index(name)]))


def _report_collinear(X: np.ndarray, names: tuple[str, ...]) -> list[str]:
    # pivoted QR: columns whose diagonal collapses relative to the first
    _, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    bad = d <= d[0] * 1e-12 if d[0] > 0 else np.ones_like(d, dtype=bool)
    return [names[piv[k]] for k in np.nonzero(bad)[0]]


def ols(X: np.ndarray, y: np.ndarray, names: tuple[str, ...] | None = None) -> RegressionFit:
    """Least squares via QR; rejects near-rank-deficient designs.

    The condition number of X is checked against 1e12 and the offending
    column set is reported when the check fails.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if names is None:
        names = tuple(f"x{k}" for k in range(X.shape[1]))
    if X.shape[0] < X.shape[1]:
        raise ValueError(
            f"sample too short: {X.shape[0]} observations for {X.shape[1]} regressors"
        )
    cond = np.linalg.cond(X)
    if not np.isfinite(cond) or cond > _CONDITION_LIMIT:
        bad = _report_collinear(X, names)
        raise ValueError(
            f"design matrix condition number {cond:.2e} exceeds {_CONDITION_LIMIT:.0e}; "
            f"near-dependent columns: {bad}"
        )
    Q, R = np.linalg.qr(X)
    coef = scipy.linalg.solve_triangular(R, Q.T @ y)
    resid = y - X @ coef
    t_obs = X.shape[0]
    gram = X.T @ X / t_obs
    return RegressionFit(names=names, coefficients=coef, residuals=resid, gram=gram, t_obs=t_obs)


def hac_lrv(scores: np.ndarray, kernel: str = "bartlett", bandwidth: int = 0) -> np.ndarray:
    """Kernel long-run variance of the score series (rows are dates).

    Omega = Gamma_0 + sum_{m=1}^{b} (1 - m/b) (Gamma_m + Gamma_m'); a
    bandwidth of zero degenerates to the outer product Gamma_0.
    """
    if kernel != "bartlett":
        raise ValueError(f"unsupported kernel {kernel!r}")
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    if scores.shape[0] == 1:
        scores = scores.T
    N = scores.shape[0]
    if bandwidth < 0:
        raise ValueError("bandwidth must be >= 0")
    if bandwidth >= N:
        raise ValueError(f"bandwidth {bandwidth} must be < number of observations {N}")
    omega = scores.T @ scores / N
    for m in range(1, bandwidth):
        w = 1.0 - m / bandwidth
        gm = scores[m:].T @ scores[:-m] / N
        omega += w * (gm + gm.T)
    return omega


def ehw_vcov(X: np.ndarray, residuals: np.ndarray) -> np.ndarray:
    """Heteroskedasticity-robust sandwich with zero-lag scores only."""
    X = np.asarray(X, dtype=float)
    t_obs = X.shape[0]
    gram = X.T @ X / t_obs
    omega0 = hac_lrv(X * np.asarray(residuals)[:, None], bandwidth=0)
    gi = np.linalg.inv(gram)
    return gi @ omega0 @ gi / t_obs


def fit_lp(
    design: DesignSpec,
    path: SimulatedPath,
    bandwidth: int | None = None,
) -> RegressionFit:
    """Build the design, run OLS, and attach HAC and EHW covariances."""
    d = build_design(design, path)
    fit = ols(d.X, d.y, d.names)
    b = default_bandwidth(fit.t_obs) if bandwidth is None else bandwidth
    scores = d.X * fit.residuals[:, None]
    omega = hac_lrv(scores, bandwidth=b)
    gi = np.linalg.inv(fit.gram)
    fit.hac_lrv = omega
    fit.vcov_hac = gi @ omega @ gi / fit.t_obs
    fit.vcov_ehw = ehw_vcov(d.X, fit.residuals)
    fit.bandwidth = b
    return fit


@dataclass(frozen=True)
class IrfEstimate:
    value: float
    std_error: float
    conf_low: float
    conf_high: float
    gradient: np.ndarray


def _normal_quantile(prob: float) -> float:
    # inverse CDF via scipy to avoid a hand-rolled approximation
    from scipy.stats import norm

    return float(norm.ppf(prob))


def irf_ci(
    fit: RegressionFit,
    spec: SpecKind,
    z,
    delta: float,
    level: float = 0.90,
) -> IrfEstimate:
    """Delta-method impulse response with a symmetric normal interval.

    The gradient places delta on the shock column, z*delta on each
    interaction column, and delta^2 on the squared-shock column; all
    other coefficients (constants, controls) get zero weight.
    """
    spec = SpecKind(spec)
    if fit.vcov_hac is None:
        raise ValueError("fit carries no HAC covariance; use fit_lp")
    g = np.zeros(len(fit.names))

    def put(name: str, value: float):
        g[fit.names.index(name)] = value

    if spec == SpecKind.LINEAR:
        put("u", delta)
    elif spec == SpecKind.ASYM:
        put("pos*u" if delta > 0 else "neg*u", delta)
    elif spec in (SpecKind.LAG, SpecKind.FEAS, SpecKind.INFEAS):
        put("u", delta)
        tag = "s" if spec == SpecKind.INFEAS else "z"
        inter = [nm for nm in fit.names if nm.endswith("*u") and nm.startswith(tag)]
        zvec = np.atleast_1d(np.asarray(z, dtype=float))
        if zvec.size != len(inter):
            raise ValueError(f"conditioning value has length {zvec.size}, design has {len(inter)}")
        for nm, zk in zip(inter, zvec):
            put(nm, zk * delta)
        if spec in (SpecKind.FEAS, SpecKind.INFEAS):
            put("u^2", delta**2)
    else:
        raise ValueError(f"no impulse-response gradient for {spec.value}")

    value = float(g @ fit.coefficients)
    var = float(g @ fit.vcov_hac @ g)
    se = math.sqrt(max(var, 0.0))
    zq = _normal_quantile(0.5 + level / 2)
    return IrfEstimate(
        value=value,
        std_error=se,
        conf_low=value - zq * se,
        conf_high=value + zq * se,
        gradient=g,
    )


def counterexample_params(a: float = 0.8, rho: float = 0.5, b: float = 0.3) -> QvarParams:
    """Two-variable system whose quadratic-shock score is serially correlated.

    The first variable loads on the lagged second state and on its square;
    shocks are correlated across equations.  At h = 2 the lag-1
    autocovariance of the squared-shock score equals a*rho, so zero-lag
    (EHW) variance estimates are inconsistent there.
    """
    return QvarParams(
        n=2,
        Phi1=np.array([[0.0, a], [0.0, 0.0]]),
        Phi2=np.array([[0.0, 0.0, b], [0.0, 0.0, 0.0]]),
        Gamma=np.zeros((2, 2)),
        Sigma=np.array([[1.0, rho], [rho, 1.0]]),
    )


def score_lag1_autocov(
    p: QvarParams,
    T: int,
    seed: int = 0,
    h: int = 2,
    shock_index: int = 0,
    outcome_index: int = 0,
) -> tuple[float, float]:
    """Sample lag-1 autocovariance of the squared-shock score u^2 * resid.

    Fits the feasible design with lagged outcomes as proxy and controls,
    forms the score for the u^2 column, and returns the estimate together
    with a long-run standard error for it.
    """
    path = simulate_qvar(p, T, burn_in=1000, seed=seed)
    design = DesignSpec(
        spec=SpecKind.FEAS,
        h=h,
        shock_index=shock_index,
        outcome_index=outcome_index,
        control_lags=1,
    )
    d = build_design(design, path)
    fit = ols(d.X, d.y, d.names)
    u2 = d.X[:, d.names.index("u^2")]
    # the score uses the raw regressor, not its demeaned version
    psi = u2 * fit.residuals
    prod = psi[1:] * psi[:-1]
    value = float(prod.mean() - psi.mean() ** 2)
    centered = prod - prod.mean()
    lrv = float(hac_lrv(centered, bandwidth=default_bandwidth(len(centered)))[0, 0])
    mc_se = math.sqrt(max(lrv, 0.0) / len(centered))
    return value, mc_se
