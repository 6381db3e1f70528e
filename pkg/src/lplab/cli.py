"""Command-line entry point.

Subcommands: simulate, true-irf, pop-irf, distance, analytic-loss,
estimate, empirical, verify.  Exit codes: 0 success, 1 config/data error,
2 usage error, 3 verification failure.  Numeric CSV output carries 12
significant digits and a provenance comment line.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd

from . import distance as dist
from . import irf as irf_mod
from .empirical import EmpiricalConfig, run_empirical
from .irf import SpecKind
from .models import QarParams, QvarParams, qar_moments
from .regression import (
    default_bandwidth,
    ehw_vcov,
    hac_lrv,
    irf_ci,
    ols,
)
from .simulate import car_oracle, simulate_qar, simulate_qvar

_POP_SPECS = ("linear", "asym", "lag", "feas", "infeas")


def _fmt(x) -> str:
    return f"{x:.12g}" if isinstance(x, (int, float, np.floating)) else str(x)


def _write_csv(path: Path, header: list[str], rows: list[list], provenance: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# lplab {provenance}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _load_config(name: str) -> dict:
    p = Path(name)
    if p.exists():
        cfg = json.loads(p.read_text())
    else:
        bundled = resources.files("lplab.configs").joinpath(name)
        if not bundled.is_file():
            raise FileNotFoundError(
                f"config file {name!r} not found on disk or among bundled configs"
            )
        cfg = json.loads(bundled.read_text())
    if "model" not in cfg and "model_file" in cfg:
        ref = Path(cfg["model_file"])
        if not ref.exists():
            raise FileNotFoundError(f"config field 'model_file' points to missing {ref}")
        cfg["model"] = json.loads(ref.read_text())
    return cfg


def _seeds_from_config(cfg: dict, count: int = 1) -> list[int]:
    if count > 1:
        base = int(cfg["seed"]) if "seed" in cfg else int(cfg["seeds"][0])
        return [base + k for k in range(count)]
    if "seed" in cfg:
        return [int(cfg["seed"])]
    return [int(s) for s in cfg["seeds"]]


def _params_from_config(cfg: dict) -> QarParams:
    model = cfg.get("model")
    if model is None:
        raise ValueError("config missing required field 'model'")
    if "n" in model:
        raise ValueError("this subcommand takes univariate model parameters")
    return QarParams(**model)


def _validate_run_config(cfg: dict) -> None:
    for key, cond, msg in [
        ("T", lambda v: int(v) >= 1, "must be >= 1"),
        ("H", lambda v: int(v) >= 0, "must be >= 0"),
        ("burn_in", lambda v: int(v) >= 0, "must be >= 0"),
    ]:
        if key in cfg and not cond(cfg[key]):
            raise ValueError(f"config field {key!r} {msg}, got {cfg[key]}")
    if "seed" not in cfg and not cfg.get("seeds"):
        raise ValueError("config field 'seed' (or nonempty 'seeds') is required")


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v != ""]


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    _validate_run_config(cfg)
    model = cfg.get("model")
    if model is None:
        raise ValueError("config missing required field 'model'")
    T = args.T or int(cfg["T"])
    seed = args.seed if args.seed is not None else _seeds_from_config(cfg)[0]
    burn = args.burn_in if args.burn_in is not None else int(cfg.get("burn_in", 1000))
    if "n" in model:
        p = QvarParams.from_json(json.dumps(model))
        path = simulate_qvar(p, T, burn_in=burn, seed=seed)
    else:
        p = QarParams(**model)
        path = simulate_qar(p, T, burn_in=burn, seed=seed)
    out = Path(args.out) / "path.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    path.to_csv(out, params=p)
    print(f"simulate: seed={seed} T={T} -> {out}")
    return 0


def _cmd_true_irf(args) -> int:
    cfg = _load_config(args.config)
    p = _params_from_config(cfg)
    H = args.H if args.H is not None else int(cfg.get("H", 10))
    s_grid = _parse_floats(args.s) if args.s else [float(v) for v in cfg.get("s_grid", [-2, 0, 2])]
    d_grid = _parse_floats(args.delta) if args.delta else [1.0]
    fns = {"car": irf_mod.car, "girf": irf_mod.girf}
    rows = []
    for h in range(H + 1):
        for s in s_grid:
            if args.kind == "cmr":
                rows.append([h, "cmr", s, "", float(irf_mod.cmr(p, s, h))])
            else:
                for d in d_grid:
                    rows.append([h, args.kind, s, d, float(fns[args.kind](p, s, d, h))])
    out = Path(args.out) / "trueirf.csv"
    _write_csv(out, ["h", "spec", "conditioning", "delta", "value"], rows,
               f"true-irf kind={args.kind} model={p.to_json()}")
    print(f"true-irf: kind={args.kind} H={H} -> {out}")
    return 0


def _cmd_pop_irf(args) -> int:
    cfg = _load_config(args.config)
    p = _params_from_config(cfg)
    H = args.H if args.H is not None else int(cfg.get("H", 10))
    specs = args.specs.split(",") if args.specs else list(cfg.get("specs", _POP_SPECS))
    s_grid = _parse_floats(args.s) if args.s else [float(v) for v in cfg.get("s_grid", [-2, 0, 2])]
    y_grid = _parse_floats(args.y) if args.y else s_grid
    d_grid = _parse_floats(args.delta) if args.delta else [1.0]
    rows = []
    for name in specs:
        spec = SpecKind(name)
        for h in range(H + 1):
            for d in d_grid:
                if spec == SpecKind.LINEAR:
                    rows.append([h, spec.value, "", d, float(irf_mod.irf_value(spec, p, d, h))])
                elif spec == SpecKind.ASYM:
                    rows.append([h, spec.value, "", d, float(irf_mod.irf_value(spec, p, d, h))])
                elif spec in (SpecKind.LAG, SpecKind.FEAS):
                    for y in y_grid:
                        rows.append([h, spec.value, y, d, float(irf_mod.irf_value(spec, p, d, h, y=y))])
                elif spec == SpecKind.INFEAS:
                    for s in s_grid:
                        rows.append([h, spec.value, s, d, float(irf_mod.irf_value(spec, p, d, h, s=s))])
                else:
                    raise ValueError(f"spec {name!r} has no population response")
    out = Path(args.out) / "popirf.csv"
    _write_csv(out, ["h", "spec", "conditioning", "delta", "value"], rows,
               f"pop-irf model={p.to_json()}")
    print(f"pop-irf: specs={','.join(specs)} H={H} -> {out}")
    return 0


def _cmd_distance(args) -> int:
    cfg = _load_config(args.config)
    _validate_run_config(cfg)
    p = _params_from_config(cfg)
    T, H = int(cfg["T"]), int(cfg["H"])
    burn = int(cfg.get("burn_in", 1000))
    n_bins = int(cfg.get("bins", 12))
    specs = [SpecKind(s) for s in cfg.get("specs", ["linear", "asym", "lag", "feas"])]
    seeds = _seeds_from_config(cfg, args.seeds)
    base_seed = seeds[0]
    per_seed = {spec: [] for spec in specs}
    for seed in seeds:
        path = simulate_qar(p, T, burn_in=burn, seed=seed)
        for spec in specs:
            per_seed[spec].append(dist.unconditional_distance(path, spec, p, H))
    prov = f"distance seeds={seeds[0]}..{seeds[-1]} T={T} H={H} model={p.to_json()}"
    rows = [[spec.value, float(np.mean(per_seed[spec]))] for spec in specs]
    _write_csv(Path(args.out) / "overall.csv", ["spec", "D"], rows, prov)
    if len(seeds) > 1:
        seed_rows = [
            [spec.value, seed, d]
            for spec in specs
            for seed, d in zip(seeds, per_seed[spec])
        ]
        _write_csv(Path(args.out) / "per_seed.csv", ["spec", "seed", "D"], seed_rows, prov)
    path = simulate_qar(p, T, burn_in=burn, seed=base_seed)
    bin_rows = []
    for spec in specs:
        rep = dist.distance_report(path, spec, p, H, n_bins=n_bins)
        for axis, bins in (("s", rep.s_bins), ("u", rep.u_bins)):
            for b in bins:
                bin_rows.append([spec.value, axis, b.lo, b.hi, b.count, b.distance])
    _write_csv(Path(args.out) / "bins.csv",
               ["spec", "axis", "lo", "hi", "count", "distance"], bin_rows, prov)
    summary = " ".join(f"{spec.value}={np.mean(per_seed[spec]):.3f}" for spec in specs)
    print(f"distance: seed={base_seed} ({len(seeds)} seeds) {summary} -> {args.out}")
    return 0


def _cmd_analytic_loss(args) -> int:
    cfg = _load_config(args.config)
    p = _params_from_config(cfg)
    hs = [int(v) for v in args.h_set.split(",")] if args.h_set else [1]
    d_grid = _parse_floats(args.delta) if args.delta else [-3, -2, -1, 1, 2, 3]
    s_grid = _parse_floats(args.s) if args.s else [float(v) for v in cfg.get("s_grid", [-2, 0, 2])]
    xi_cache = {
        s: dist.xi_estimate(p, s, n_draws=args.xi_draws, seed=int(cfg.get("seed", 0)))[0]
        for s in s_grid
    }
    grids = []
    for h in hs:
        for spec in (SpecKind.LINEAR, SpecKind.ASYM, SpecKind.LAG, SpecKind.FEAS):
            grids.append(dist.loss_grid(spec, p, h, "shock", d_grid))
            grids.append(dist.loss_grid(spec, p, h, "state", s_grid, xi_by_point=xi_cache))
    rows = [
        [g.spec.value, g.kind, g.h, point, value] for g in grids for point, value in g.grid
    ]
    out = Path(args.out) / "loss.csv"
    _write_csv(out, ["spec", "kind", "h", "point", "value"], rows,
               f"analytic-loss model={p.to_json()}")
    print(f"analytic-loss: horizons={hs} -> {out}")
    return 0


def _tabular_design(df: pd.DataFrame, design: dict, h: int):
    spec = SpecKind(design["spec"])
    u = df[design["shock"]].to_numpy(dtype=float)
    y = df[design["outcome"]].to_numpy(dtype=float)
    proxies = design.get("state_proxy", [])
    controls = design.get("controls", [])
    lags = int(design.get("control_lags", 0))
    T = len(df)
    needs_state = spec in (SpecKind.LAG, SpecKind.MIXED, SpecKind.FEAS)
    t0 = max(1 if needs_state else 0, lags)
    if T - h - t0 < 2:
        raise ValueError(f"data of length {T} too short for horizon {h}")
    sl = slice(t0, T - h)
    yy = y[t0 + h : T]
    uu = u[sl]
    z = np.column_stack([df[c].to_numpy(dtype=float)[t0 - 1 : T - h - 1] for c in proxies]) if proxies else None
    cols, names = [], []

    def add(nm, c):
        names.append(nm)
        cols.append(c)

    ctrl = []
    for lag in range(1, lags + 1):
        for c in controls:
            ctrl.append((f"{c}.l{lag}", df[c].to_numpy(dtype=float)[t0 - lag : T - h - lag]))
    if spec == SpecKind.LINEAR:
        add("const", np.ones_like(uu))
        add("u", uu)
    elif spec == SpecKind.ASYM:
        pos = (uu > 0).astype(float)
        add("pos", pos)
        add("pos*u", pos * uu)
        add("neg", 1 - pos)
        add("neg*u", (1 - pos) * uu)
    elif spec in (SpecKind.LAG, SpecKind.FEAS):
        if z is None:
            raise ValueError(f"{spec.value} design requires state_proxy columns")
        add("const", np.ones_like(uu))
        add("u", uu)
        for k, c in enumerate(proxies):
            add(f"z_{c}*u", z[:, k] * uu)
        if spec == SpecKind.FEAS:
            add("u^2", uu**2)
        else:
            for k, c in enumerate(proxies):
                add(f"z_{c}", z[:, k])
    elif spec == SpecKind.MIXED:
        if z is None:
            raise ValueError("mixed design requires state_proxy columns")
        pos = (uu > 0).astype(float)
        for tag, ind in (("pos", pos), ("neg", 1 - pos)):
            add(tag, ind)
            add(f"{tag}*u", ind * uu)
            for k, c in enumerate(proxies):
                add(f"{tag}*z_{c}*u", ind * z[:, k] * uu)
            for k, c in enumerate(proxies):
                add(f"{tag}*z_{c}", ind * z[:, k])
    else:
        raise ValueError(f"estimate subcommand does not support spec {spec.value!r}")
    for nm, c in ctrl:
        if spec in (SpecKind.ASYM, SpecKind.MIXED):
            pos = (uu > 0).astype(float)
            add(f"pos*{nm}", pos * c)
            add(f"neg*{nm}", (1 - pos) * c)
        else:
            add(nm, c)
    return np.column_stack(cols), yy, tuple(names), spec


def _cmd_estimate(args) -> int:
    design = json.loads(Path(args.design).read_text())
    df = pd.read_csv(args.data, comment="#")
    horizons = design.get("horizons", 10)
    hs = list(range(int(horizons) + 1)) if isinstance(horizons, int) else [int(h) for h in horizons]
    level = float(design.get("level", 0.90))
    deltas = [float(d) for d in design.get("delta", [1.0])]
    z_points = design.get("z", [0.0])
    coef_rows, irf_rows = [], []
    for h in hs:
        X, yy, names, spec = _tabular_design(df, design, h)
        fit = ols(X, yy, names)
        b = design.get("bandwidth")
        b = default_bandwidth(fit.t_obs) if b is None else int(b)
        scores = X * fit.residuals[:, None]
        omega = hac_lrv(scores, bandwidth=b)
        gi = np.linalg.inv(fit.gram)
        fit.hac_lrv = omega
        fit.vcov_hac = gi @ omega @ gi / fit.t_obs
        fit.vcov_ehw = ehw_vcov(X, fit.residuals)
        fit.bandwidth = b
        for nm in names:
            coef_rows.append([h, nm, fit.coef(nm), fit.se_hac(nm), fit.se_ehw(nm)])
        if spec in (SpecKind.LINEAR, SpecKind.ASYM, SpecKind.LAG, SpecKind.FEAS):
            for zp in z_points:
                for d in deltas:
                    zval = zp if spec in (SpecKind.LAG, SpecKind.FEAS) else ()
                    try:
                        est = irf_ci(fit, spec, zval, d, level=level)
                    except ValueError as exc:
                        raise ValueError(f"h={h}: {exc}") from exc
                    if spec in (SpecKind.LAG, SpecKind.FEAS):
                        ztxt = ";".join(_fmt(v) for v in zp) if isinstance(zp, (list, tuple)) else zp
                    else:
                        ztxt = ""
                    irf_rows.append([h, ztxt, d, est.value, est.conf_low, est.conf_high])
    prov = f"estimate design={args.design} data={args.data}"
    _write_csv(Path(args.out) / "coefs.csv",
               ["h", "coef_name", "estimate", "se_hac", "se_ehw"], coef_rows, prov)
    if irf_rows:
        _write_csv(Path(args.out) / "irf.csv",
                   ["h", "z", "delta", "value", "lo", "hi"], irf_rows, prov)
    print(f"estimate: {len(hs)} horizons -> {args.out}")
    return 0


def _cmd_empirical(args) -> int:
    cfg = EmpiricalConfig.from_json(args.config)
    tables = run_empirical(args.data, cfg)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for outcome, table in tables.items():
        rows = [list(r) for r in table.itertuples(index=False)]
        _write_csv(outdir / f"irf_{outcome}.csv", list(table.columns), rows,
                   f"empirical outcome={outcome} config={args.config}")
    print(f"empirical: outcomes={','.join(tables)} -> {outdir}")
    return 0


def _cmd_verify(args) -> int:
    cfg = _load_config(args.config)
    p = _params_from_config(cfg)
    H = int(cfg.get("H", 10))
    n_draws = 100_000 if args.quick else 1_000_000
    sim_T = 200_000 if args.quick else 1_000_000
    failures = 0

    def check(name: str, ok: bool, detail: str = ""):
        nonlocal failures
        print(f"  [{'PASS' if ok else 'FAIL'}] {name}" + (f"  ({detail})" if detail else ""))
        failures += 0 if ok else 1

    # closed-form response vs paired-path oracle
    worst = 0.0
    for s in (-2.0, 0.0, 2.0):
        for d in (-1.0, 1.0, 2.0):
            for h in (0, 1, 5):
                est, se = car_oracle(p, s, d, h, n_draws=n_draws, seed=7)
                ref = float(irf_mod.car(p, s, d, h))
                zstat = abs(est - ref) / (3 * se + 1e-9)
                worst = max(worst, zstat)
    check("response oracle grid (3x3x3)", worst <= 1.0, f"max |err|/(3se) = {worst:.3f}")

    # moments vs long simulation
    path = simulate_qar(p, sim_T, seed=11)
    mom = qar_moments(p)
    se_mean = path.y.std() / np.sqrt(sim_T / 10)
    check("stationary mean", abs(path.y.mean() - mom.mean_y) <= 3 * se_mean,
          f"sim {path.y.mean():.5f} vs {mom.mean_y:.5f}")
    se_var = path.y.var() * np.sqrt(2.0 / (sim_T / 10))
    check("stationary variance", abs(path.y.var() - mom.var_y) <= 3 * se_var,
          f"sim {path.y.var():.5f} vs {mom.var_y:.5f}")
    slope = np.cov(path.s, path.y)[0, 1] / path.s.var()
    check("unit projection slope", abs(slope - 1.0) <= 0.02, f"slope {slope:.4f}")

    # loss ranking on a grid
    ok = True
    for h in range(H + 1):
        for d in (-3, -2, -1, 1, 2, 3):
            lf = dist.analytic_loss_u(SpecKind.FEAS, p, h, d)
            ll = dist.analytic_loss_u(SpecKind.LAG, p, h, d)
            li = dist.analytic_loss_u(SpecKind.LINEAR, p, h, d)
            la = dist.analytic_loss_u(SpecKind.ASYM, p, h, d)
            ok = ok and lf <= ll + 1e-12 and ll <= li + 1e-12 and lf <= la + 1e-12
    check("shock-conditional loss ranking", ok)

    # weight function facts
    grid = np.linspace(-8, 8, 200_001)
    w = irf_mod.kp_weight(grid)
    check("weight integrates to 1", abs(np.trapezoid(w, grid) - 1) <= 1e-8)
    check("weight first moment 0", abs(np.trapezoid(w * grid, grid)) <= 1e-8)

    if failures:
        print(f"verify: {failures} check(s) failed")
        return 3
    print("verify: all checks passed")
    return 0


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # let values like "-2,0,2" pass as arguments to --s/--delta/--y
        self._negative_number_matcher = re.compile(r"^-\d+(\.\d+)?([,e].*)?$")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lplab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, config_default=None):
        sp.add_argument("--config", default=config_default or "paper33.json")
        sp.add_argument("--out", default="out")

    sp = sub.add_parser("simulate", help="simulate a path and write CSV + sidecar")
    common(sp)
    sp.add_argument("--T", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--burn-in", dest="burn_in", type=int)
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("true-irf", help="true responses on a grid")
    common(sp)
    sp.add_argument("--kind", choices=["car", "cmr", "girf"], default="car")
    sp.add_argument("--s")
    sp.add_argument("--delta")
    sp.add_argument("--H", type=int)
    sp.set_defaults(func=_cmd_true_irf)

    sp = sub.add_parser("pop-irf", help="population responses per specification")
    common(sp)
    sp.add_argument("--specs")
    sp.add_argument("--s")
    sp.add_argument("--y")
    sp.add_argument("--delta")
    sp.add_argument("--H", type=int)
    sp.set_defaults(func=_cmd_pop_irf)

    sp = sub.add_parser("distance", help="overall and binned distances to the truth")
    common(sp)
    sp.add_argument("--seeds", type=int, default=1)
    sp.set_defaults(func=_cmd_distance)

    sp = sub.add_parser("analytic-loss", help="closed-form conditional losses")
    common(sp)
    sp.add_argument("--h-set", dest="h_set")
    sp.add_argument("--delta")
    sp.add_argument("--s")
    sp.add_argument("--xi-draws", dest="xi_draws", type=int, default=200_000)
    sp.set_defaults(func=_cmd_analytic_loss)

    sp = sub.add_parser("estimate", help="fit projections on a CSV per a design file")
    sp.add_argument("--data", required=True)
    sp.add_argument("--design", required=True)
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=_cmd_estimate)

    sp = sub.add_parser("empirical", help="monthly-data pipeline")
    sp.add_argument("--data", required=True)
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=_cmd_empirical)

    sp = sub.add_parser("verify", help="run the oracle suite")
    sp.add_argument("--config", default="paper33.json")
    sp.add_argument("--quick", action="store_true")
    sp.set_defaults(func=_cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
