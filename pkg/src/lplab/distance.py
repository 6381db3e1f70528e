"""Distances between the true response and each specification's response.

For one draw (s_{t-1}, u_t, z_t) the deviation is summed over horizons,

    delta_t = sum_{h=0}^{H} (true_h(s_{t-1}, u_t) - irf_h(z_t, u_t))^2,

and the overall distance is the square root of its path average.  Closed
forms for the shock- and state-conditional mean squared deviations are
also provided; they use population moments, never simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .irf import SpecKind
from .models import QarParams, asym_m, horizon_coeffs, nu_m, qar_moments
from .simulate import SimulatedPath, conditional_state_sampler

__all__ = [
    "BinDistance",
    "DistanceReport",
    "AnalyticLoss",
    "loss_grid",
    "population_irf_table",
    "estimated_irf_table",
    "per_obs_delta",
    "unconditional_distance",
    "binned_distance",
    "quantile_edges",
    "distance_report",
    "analytic_loss_u",
    "analytic_loss_s",
    "xi_estimate",
]

_POP_SPECS = (SpecKind.LINEAR, SpecKind.ASYM, SpecKind.LAG, SpecKind.FEAS, SpecKind.INFEAS)


def _coeff_arrays(p: QarParams, H: int):
    cs = [horizon_coeffs(p, h) for h in range(H + 1)]
    base = np.array([c.baseline for c in cs])
    a = np.array([c.a_h for c in cs])
    q = np.array([c.q_h for c in cs])
    return base, a, q


def population_irf_table(spec: SpecKind, p: QarParams, H: int) -> dict[str, np.ndarray]:
    """Per-horizon population coefficients of `spec`, stacked as arrays."""
    spec = SpecKind(spec)
    base, a, q = _coeff_arrays(p, H)
    if spec == SpecKind.LINEAR:
        return {"beta": base}
    if spec == SpecKind.ASYM:
        m = asym_m()
        return {"beta_plus": base + m * q, "beta_minus": base - m * q}
    mom = qar_moments(p)
    b1 = a * mom.var_s / mom.var_y
    b0 = base - b1 * mom.mean_y
    if spec == SpecKind.LAG:
        return {"beta0": b0, "beta1": b1}
    if spec == SpecKind.FEAS:
        return {"theta1": b0, "theta2": b1, "theta3": q}
    raise ValueError(f"no population response available for {spec.value}")


def estimated_irf_table(path: SimulatedPath, spec: SpecKind, H: int) -> dict[str, np.ndarray]:
    """Per-horizon OLS coefficients in the same layout, for robustness runs."""
    from .regression import DesignSpec, build_design, ols

    spec = SpecKind(spec)
    column = {
        SpecKind.LINEAR: {"beta": "u"},
        SpecKind.ASYM: {"beta_plus": "pos*u", "beta_minus": "neg*u"},
        SpecKind.LAG: {"beta0": "u", "beta1": "z*u"},
        SpecKind.FEAS: {"theta1": "u", "theta2": "z*u", "theta3": "u^2"},
    }
    if spec not in column:
        raise ValueError(f"no estimable coefficient table for {spec.value}")
    out = {name: np.empty(H + 1) for name in column[spec]}
    for h in range(H + 1):
        d = build_design(DesignSpec(spec=spec, h=h), path)
        fit = ols(d.X, d.y, d.names)
        for name, col in column[spec].items():
            out[name][h] = fit.coef(col)
    return out


def _deviation_sums(
    p: QarParams,
    spec: SpecKind,
    s,
    u,
    z,
    H: int,
    table: dict[str, np.ndarray] | None = None,
) -> np.ndarray:
    """Vector of horizon-summed squared deviations, one entry per draw."""
    spec = SpecKind(spec)
    if spec not in _POP_SPECS:
        raise ValueError(f"no population response available for {spec.value}")
    s = np.atleast_1d(np.asarray(s, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    base, a, q = _coeff_arrays(p, H)
    true = base[:, None] * u + a[:, None] * (s * u) + q[:, None] * u**2
    if spec == SpecKind.INFEAS:
        return np.zeros_like(true.sum(axis=0))
    co = population_irf_table(spec, p, H) if table is None else table
    if spec == SpecKind.LINEAR:
        irf = co["beta"][:, None] * u
    elif spec == SpecKind.ASYM:
        irf = np.where(u > 0, co["beta_plus"][:, None], co["beta_minus"][:, None]) * u
    else:
        zz = np.atleast_1d(np.asarray(z, dtype=float))
        if spec == SpecKind.LAG:
            irf = (co["beta0"][:, None] + co["beta1"][:, None] * zz) * u
        else:
            irf = (co["theta1"][:, None] + co["theta2"][:, None] * zz) * u + co["theta3"][:, None] * u**2
    return np.sum((true - irf) ** 2, axis=0)


def per_obs_delta(p: QarParams, s: float, u: float, z, spec: SpecKind, H: int) -> float:
    """Horizon-summed squared deviation at one (state, shock, conditioning) point.

    z is the specification's conditioning value: the lagged observable for
    lag-based designs, ignored for the linear and sign-split designs (the
    latter conditions on the sign of u), and the true state for the
    infeasible design (for which the deviation is identically zero).
    """
    return float(_deviation_sums(p, spec, s, u, z, H)[0])


def _lagged_tuples(path: SimulatedPath):
    # observation t uses (s_{t-1}, u_t, y_{t-1}); first index is dropped
    return path.s[:-1], path.u[1:], path.y[:-1]


def unconditional_distance(
    path: SimulatedPath,
    spec: SpecKind,
    p: QarParams,
    H: int,
    table: dict[str, np.ndarray] | None = None,
) -> float:
    """Root mean horizon-summed squared deviation along a simulated path.

    Pass an :func:`estimated_irf_table` as `table` to measure the distance
    at estimated rather than population coefficients.
    """
    s, u, z = _lagged_tuples(path)
    return float(np.sqrt(_deviation_sums(p, spec, s, u, z, H, table=table).mean()))


@dataclass(frozen=True)
class BinDistance:
    lo: float
    hi: float
    distance: float  # NaN marks an empty bin
    count: int


def binned_distance(
    path: SimulatedPath,
    spec: SpecKind,
    p: QarParams,
    H: int,
    axis: str,
    edges: np.ndarray,
    table: dict[str, np.ndarray] | None = None,
) -> list[BinDistance]:
    """Per-bin distances along either the lagged state or the shock axis."""
    if axis not in ("s", "u"):
        raise ValueError(f"axis must be 's' or 'u', got {axis!r}")
    edges = np.asarray(edges, dtype=float)
    if edges.size < 2:
        raise ValueError("need at least two bin edges")
    if np.any(np.diff(edges) <= 0):
        raise ValueError("bin edges must be strictly increasing")
    s, u, z = _lagged_tuples(path)
    dev = _deviation_sums(p, spec, s, u, z, H, table=table)
    key = s if axis == "s" else u
    which = np.digitize(key, edges)  # 0 and len(edges) fall outside
    out = []
    for b in range(1, edges.size):
        mask = which == b
        cnt = int(mask.sum())
        dist = float(np.sqrt(dev[mask].mean())) if cnt else float("nan")
        out.append(BinDistance(lo=float(edges[b - 1]), hi=float(edges[b]), distance=dist, count=cnt))
    return out


def quantile_edges(x: np.ndarray, n_bins: int = 12) -> np.ndarray:
    """Equal-probability bin edges from sample quantiles, ends widened to cover."""
    qs = np.linspace(0.0, 1.0, n_bins + 1)
    edges = np.quantile(np.asarray(x, dtype=float), qs)
    edges[0] -= 1e-9
    edges[-1] += 1e-9
    return edges


@dataclass(frozen=True)
class DistanceReport:
    spec: SpecKind
    overall: float
    s_bins: list[BinDistance]
    u_bins: list[BinDistance]
    H: int
    params: QarParams
    seed: int


def distance_report(
    path: SimulatedPath,
    spec: SpecKind,
    p: QarParams,
    H: int,
    n_bins: int = 12,
    estimated: bool = False,
) -> DistanceReport:
    """Overall plus binned distances with equal-probability bins per axis.

    With `estimated=True` the specification's coefficients are fit on the
    path itself instead of taken from the population formulas.
    """
    s, u, _ = _lagged_tuples(path)
    table = estimated_irf_table(path, spec, H) if estimated else None
    return DistanceReport(
        spec=SpecKind(spec),
        overall=unconditional_distance(path, spec, p, H, table=table),
        s_bins=binned_distance(path, spec, p, H, "s", quantile_edges(s, n_bins), table=table),
        u_bins=binned_distance(path, spec, p, H, "u", quantile_edges(u, n_bins), table=table),
        H=H,
        params=p,
        seed=path.seed,
    )


def analytic_loss_u(spec: SpecKind, p: QarParams, h: int, delta: float) -> float:
    """Closed-form mean squared deviation given the shock equals delta."""
    spec = SpecKind(spec)
    c = horizon_coeffs(p, h)
    mom = qar_moments(p)
    d2 = delta * delta
    if spec == SpecKind.LINEAR:
        return c.a_h**2 * d2 * mom.var_s + c.q_h**2 * d2 * d2
    if spec == SpecKind.LAG:
        return c.a_h**2 * d2 * mom.var_s_given_y + c.q_h**2 * d2 * d2
    if spec == SpecKind.FEAS:
        return c.a_h**2 * d2 * mom.var_s_given_y
    if spec == SpecKind.ASYM:
        return c.a_h**2 * d2 * mom.var_s + c.q_h**2 * (d2 - asym_m() * abs(delta)) ** 2
    raise ValueError(f"no shock-conditional loss for {spec.value}")


def analytic_loss_s(
    spec: SpecKind,
    p: QarParams,
    h: int,
    s: float,
    xi: float | None = None,
) -> float:
    """Closed-form mean squared deviation given the lagged state equals s.

    Lag-based specifications need the state-conditioned proxy error
    xi = E[(s - lambda*(y - mean_y))^2 | state = s], typically from
    :func:`xi_estimate`.
    """
    spec = SpecKind(spec)
    c = horizon_coeffs(p, h)
    if spec == SpecKind.LINEAR:
        return c.a_h**2 * s * s + 3.0 * c.q_h**2
    if spec == SpecKind.ASYM:
        return c.a_h**2 * s * s + nu_m() * c.q_h**2
    if spec in (SpecKind.LAG, SpecKind.FEAS):
        if xi is None:
            raise ValueError(f"{spec.value} state-conditional loss requires xi")
        quad = 3.0 * c.q_h**2 if spec == SpecKind.LAG else 0.0
        return c.a_h**2 * xi + quad
    raise ValueError(f"no state-conditional loss for {spec.value}")


def xi_estimate(p: QarParams, s: float, n_draws: int = 200_000, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo proxy error E[(s - lambda*(y - mean_y))^2 | state = s]."""
    mom = qar_moments(p)
    y = conditional_state_sampler(p, s, n_draws, seed=seed)
    vals = (s - mom.proxy_slope * (y - mom.mean_y)) ** 2
    se = float(vals.std(ddof=1) / math.sqrt(n_draws)) if n_draws > 1 else 0.0
    return float(vals.mean()), se


@dataclass(frozen=True)
class AnalyticLoss:
    spec: SpecKind
    h: int
    kind: str  # "shock" or "state"
    grid: list[tuple[float, float]]  # (point, value)


def loss_grid(
    spec: SpecKind,
    p: QarParams,
    h: int,
    kind: str,
    points,
    xi_by_point: dict[float, float] | None = None,
) -> AnalyticLoss:
    """Evaluate a conditional-loss profile over a grid of shocks or states."""
    spec = SpecKind(spec)
    if kind == "shock":
        grid = [(float(d), analytic_loss_u(spec, p, h, float(d))) for d in points]
    elif kind == "state":
        grid = []
        for s in points:
            xi = None
            if spec in (SpecKind.LAG, SpecKind.FEAS):
                if xi_by_point is None or float(s) not in xi_by_point:
                    raise ValueError(f"state-conditional loss at s={s} needs a proxy error value")
                xi = xi_by_point[float(s)]
            grid.append((float(s), analytic_loss_s(spec, p, h, float(s), xi=xi)))
    else:
        raise ValueError(f"kind must be 'shock' or 'state', got {kind!r}")
    return AnalyticLoss(spec=spec, h=h, kind=kind, grid=grid)
