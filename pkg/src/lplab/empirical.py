"""Monthly-data pipeline: CSV ingestion, trend/cycle states, horizon regressions.

Input CSVs carry a ``date`` column (YYYY-MM) plus named value columns.
A JSON config assigns roles::

    {
      "shock": "rr",
      "outcomes": ["ip", "unemp", "cpi", "ffr"],
      "controls": ["ffr", "ip", "unemp", "cpi", "pcomm"],
      "contemporaneous": ["ip", "unemp", "cpi"],
      "states": ["ip", "cpi"],
      "lags": {"controls": 2, "shock": 2},
      "horizons": 48,
      "level": 0.90,
      "hp_lambda": 14400,
      "shock_scale": [-1, 1, 2],
      "eval_states": [{"label": "peak1", "values": [0.031, 0.016]}],
      "transforms": {"ip": "log", "cpi": "log"},
      "window": ["1967-01", "2007-12"]
    }

Transforms: ``level`` keeps the series, ``log`` uses 100*ln(x).  State
variables are always the cyclical component of ln(series) from the
trend/cycle filter (the series' own transform tag does not apply to its
state role).  Output rows are scaled responses IRF(z, k*sigma)/k with
bands, where sigma is the sample standard deviation of the shock.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.linalg import solveh_banded
from scipy.stats import norm

from .regression import default_bandwidth, hac_lrv, ols

__all__ = [
    "MonthlySeries",
    "TrendCycle",
    "EmpiricalConfig",
    "load_csv",
    "hp_filter",
    "empirical_design",
    "run_empirical",
]


@dataclass(frozen=True)
class MonthlySeries:
    name: str
    index: pd.PeriodIndex
    values: np.ndarray
    transform: str = "level"

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class TrendCycle:
    trend: np.ndarray
    cycle: np.ndarray
    smoothing: float


def load_csv(
    path: str | Path,
    columns: list[str] | None = None,
    window: tuple[str, str] | None = None,
) -> dict[str, MonthlySeries]:
    """Read a monthly CSV into validated series.

    Raises on duplicate dates, calendar gaps, or unparsable cells, naming
    the offending row.  `window` trims to [start, end] (inclusive,
    YYYY-MM strings).
    """
    df = pd.read_csv(path, dtype=str)
    if "date" not in df.columns:
        raise ValueError("CSV must have a 'date' first column (YYYY-MM)")
    try:
        idx = pd.PeriodIndex(df["date"], freq="M")
    except Exception as exc:
        raise ValueError(f"unparsable date column: {exc}") from exc
    if idx.duplicated().any():
        row = int(np.nonzero(idx.duplicated())[0][0])
        raise ValueError(f"duplicate date {idx[row]} at row {row + 2}")
    steps = np.diff(idx.asi8)
    if (steps <= 0).any():
        row = int(np.nonzero(steps <= 0)[0][0])
        raise ValueError(f"dates not strictly increasing at row {row + 3}")
    if (steps > 1).any():
        row = int(np.nonzero(steps > 1)[0][0])
        missing = idx[row] + 1
        raise ValueError(f"monthly gap: missing {missing} after row {row + 2}")
    wanted = columns if columns is not None else [c for c in df.columns if c != "date"]
    for c in wanted:
        if c not in df.columns:
            raise ValueError(f"declared column {c!r} not present in CSV")
    if window is not None:
        lo, hi = pd.Period(window[0], freq="M"), pd.Period(window[1], freq="M")
        keep = (idx >= lo) & (idx <= hi)
        n_drop = int((~keep).sum())
        if n_drop:
            logging.getLogger(__name__).info(
                "window [%s, %s]: dropped %d of %d rows", window[0], window[1], n_drop, len(idx)
            )
            df = df.loc[keep].reset_index(drop=True)
            idx = idx[keep]
    out = {}
    for c in wanted:
        try:
            vals = df[c].astype(float).to_numpy()
        except ValueError:
            bad = df[c].apply(lambda v: not _is_number(v))
            row = int(np.nonzero(bad.to_numpy())[0][0])
            raise ValueError(f"unparsable value {df[c].iloc[row]!r} in column {c!r} at row {row + 2}")
        if np.isnan(vals).any():
            row = int(np.nonzero(np.isnan(vals))[0][0])
            raise ValueError(f"missing value in column {c!r} at row {row + 2}")
        out[c] = MonthlySeries(name=c, index=idx, values=vals)
    return out


def _is_number(v) -> bool:
    try:
        float(v)
        return True
    except (TypeError, ValueError):
        return False


def hp_filter(x: np.ndarray, smoothing: float) -> TrendCycle:
    """Trend/cycle split minimizing sum((x-trend)^2) + smoothing*sum((d2 trend)^2).

    The first-order condition (I + smoothing*D'D) trend = x is a symmetric
    pentadiagonal system solved in banded form; the cycle is the exact
    remainder x - trend.
    """
    x = np.asarray(x, dtype=float)
    T = x.size
    if T < 4:
        raise ValueError(f"series too short for trend extraction: {T} < 4")
    if smoothing <= 0:
        raise ValueError("smoothing parameter must be > 0")
    main = np.full(T, 6.0)
    main[[0, -1]] = 1.0
    main[[1, -2]] = 5.0
    off1 = np.full(T - 1, -4.0)
    off1[[0, -1]] = -2.0
    off2 = np.ones(T - 2)
    ab = np.zeros((3, T))
    ab[0, 2:] = smoothing * off2
    ab[1, 1:] = smoothing * off1
    ab[2, :] = 1.0 + smoothing * main
    trend = solveh_banded(ab, x, lower=False)
    return TrendCycle(trend=trend, cycle=x - trend, smoothing=smoothing)


@dataclass(frozen=True)
class EmpiricalConfig:
    shock: str
    outcomes: list[str]
    controls: list[str]
    states: list[str]
    lag_controls: int = 2
    lag_shock: int = 2
    contemporaneous: list[str] = field(default_factory=list)
    horizons: int = 48
    level: float = 0.90
    hp_lambda: float = 14400.0
    shock_scale: list[float] = field(default_factory=lambda: [-1.0, 1.0, 2.0])
    eval_states: list[dict] = field(default_factory=list)
    transforms: dict[str, str] = field(default_factory=dict)
    window: tuple[str, str] | None = None
    bandwidth: int | None = None

    @classmethod
    def from_json(cls, path: str | Path) -> "EmpiricalConfig":
        d = json.loads(Path(path).read_text())
        lags = d.pop("lags", {})
        window = d.pop("window", None)
        return cls(
            lag_controls=int(lags.get("controls", 2)),
            lag_shock=int(lags.get("shock", 2)),
            window=tuple(window) if window else None,
            **d,
        )


def _transformed(series: dict[str, MonthlySeries], name: str, transforms: dict[str, str]) -> np.ndarray:
    tag = transforms.get(name, "level")
    x = series[name].values
    if tag == "level":
        return x
    if tag == "log":
        if np.any(x <= 0):
            raise ValueError(f"log transform of {name!r} needs positive values")
        return 100.0 * np.log(x)
    raise ValueError(f"unknown transform {tag!r} for {name!r}")


def _state_cycles(series: dict[str, MonthlySeries], cfg: EmpiricalConfig) -> np.ndarray:
    cols = []
    for name in cfg.states:
        x = series[name].values
        if np.any(x <= 0):
            raise ValueError(f"state construction takes logs; {name!r} has non-positive values")
        cols.append(hp_filter(np.log(x), cfg.hp_lambda).cycle)
    return np.column_stack(cols)


def empirical_design(
    series: dict[str, MonthlySeries],
    cfg: EmpiricalConfig,
    outcome: str,
    h: int,
    spec: str,
    states: np.ndarray | None = None,
):
    """(X, y, names) for one outcome/horizon, spec in {"linear", "feas"}.

    Exposed separately so the nesting identity (the feasible design minus
    its interaction and squared-shock columns is the linear design) can be
    checked directly.
    """
    if spec not in ("linear", "feas"):
        raise ValueError("spec must be 'linear' or 'feas'")
    u = series[cfg.shock].values
    y = _transformed(series, outcome, cfg.transforms)
    z = _state_cycles(series, cfg) if states is None else states
    T = len(u)
    t0 = max(1, cfg.lag_controls, cfg.lag_shock)
    if T - h - t0 < 2:
        raise ValueError(f"sample of length {T} too short for horizon {h}")
    sl = slice(t0, T - h)
    yy = y[t0 + h : T]
    uu = u[sl]
    cols = [np.ones_like(uu), uu]
    names = ["const", "u"]
    if spec == "feas":
        for k, nm in enumerate(cfg.states):
            cols.append(z[t0 - 1 : T - h - 1, k] * uu)
            names.append(f"z_{nm}*u")
        cols.append(uu**2)
        names.append("u^2")
    for nm in cfg.contemporaneous:
        cols.append(_transformed(series, nm, cfg.transforms)[sl])
        names.append(f"{nm}.l0")
    for lag in range(1, cfg.lag_controls + 1):
        for nm in cfg.controls:
            cols.append(_transformed(series, nm, cfg.transforms)[t0 - lag : T - h - lag])
            names.append(f"{nm}.l{lag}")
    for lag in range(1, cfg.lag_shock + 1):
        cols.append(u[t0 - lag : T - h - lag])
        names.append(f"u.l{lag}")
    return np.column_stack(cols), yy, tuple(names)


def run_empirical(
    data: str | Path | dict[str, MonthlySeries],
    cfg: EmpiricalConfig,
) -> dict[str, pd.DataFrame]:
    """Fit linear and feasible projections per outcome and tabulate responses.

    Returns one table per outcome with rows (h, label, k, value, lo, hi):
    scaled responses IRF(z, k*sigma)/k evaluated at each configured state
    (label "linear" rows carry the linear benchmark at k = 1).
    """
    if isinstance(data, (str, Path)):
        needed = sorted(
            {cfg.shock, *cfg.outcomes, *cfg.controls, *cfg.states, *cfg.contemporaneous}
        )
        series = load_csv(data, columns=needed, window=cfg.window)
    else:
        series = data
    sigma_shock = float(np.std(series[cfg.shock].values, ddof=1))
    states = _state_cycles(series, cfg)
    zq = float(norm.ppf(0.5 + cfg.level / 2))
    results: dict[str, pd.DataFrame] = {}
    for outcome in cfg.outcomes:
        rows = []
        for h in range(cfg.horizons + 1):
            for spec in ("linear", "feas"):
                X, yy, names = empirical_design(series, cfg, outcome, h, spec, states=states)
                fit = ols(X, yy, names)
                b = cfg.bandwidth if cfg.bandwidth is not None else default_bandwidth(fit.t_obs)
                omega = hac_lrv(X * fit.residuals[:, None], bandwidth=b)
                gi = np.linalg.inv(fit.gram)
                vcov = gi @ omega @ gi / fit.t_obs
                if spec == "linear":
                    g = np.zeros(len(names))
                    g[names.index("u")] = sigma_shock
                    val = float(g @ fit.coefficients)
                    se = math.sqrt(max(float(g @ vcov @ g), 0.0))
                    rows.append(
                        {"h": h, "label": "linear", "k": 1.0,
                         "value": val,
                         "lo": val - zq * se, "hi": val + zq * se}
                    )
                    continue
                eval_pts = list(cfg.eval_states) or [
                    {"label": "steady_state", "values": [0.0] * len(cfg.states)}
                ]
                for pt in eval_pts:
                    zvals = np.asarray(pt["values"], dtype=float)
                    if zvals.size != len(cfg.states):
                        raise ValueError(
                            f"eval state {pt['label']!r} has {zvals.size} values, "
                            f"config declares {len(cfg.states)} states"
                        )
                    for k in cfg.shock_scale:
                        if k == 0:
                            raise ValueError("shock_scale entries must be nonzero")
                        delta = k * sigma_shock
                        g = np.zeros(len(names))
                        g[names.index("u")] = delta
                        for j, nm in enumerate(cfg.states):
                            g[names.index(f"z_{nm}*u")] = zvals[j] * delta
                        g[names.index("u^2")] = delta**2
                        val = float(g @ fit.coefficients)
                        se = math.sqrt(max(float(g @ vcov @ g), 0.0))
                        rows.append(
                            {"h": h, "label": pt["label"], "k": float(k),
                             "value": val / k,
                             "lo": val / k - zq * se / abs(k),
                             "hi": val / k + zq * se / abs(k)}
                        )
        results[outcome] = pd.DataFrame(rows, columns=["h", "label", "k", "value", "lo", "hi"])
    return results
