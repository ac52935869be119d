"""Command-line entry point.

Every command writes a CSV plus a JSON sidecar (same stem, ``.json``) with
the inputs, options, tolerances and source version. Exit codes: 0 success,
1 data error, 2 numeric error, 3 usage error. Set NETCPI_LOG_LEVEL to change
log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import subprocess
import sys
import warnings
from pathlib import Path

import numpy as np

from . import cpi, ingest, iotable, mxnsim, netstats, panelfe, sharesys
from .errors import CalibrationError, DataError, NumericError

logger = logging.getLogger("netcpi")

EXIT_OK, EXIT_DATA, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def num(v) -> str:
    """Nine significant digits; negative zero prints as 0."""
    return f"{float(v) + 0.0:.9g}"


def _git_describe() -> str:
    here = Path(__file__).resolve().parent
    try:
        res = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5, check=False)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return res.stdout.strip() or "unknown"


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _sidecar(out: Path, command: str, inputs: dict, options: dict, extra: dict | None = None) -> None:
    meta = {
        "command": command,
        "inputs": {k: str(v) for k, v in inputs.items()},
        "options": options,
        "tolerances": {"identity": iotable.TOL_IDENTITY, "solve": iotable.TOL_SOLVE},
        "source_version": _git_describe(),
    }
    if extra:
        meta.update(extra)
    with open(out.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sibling(out: Path, suffix: str) -> Path:
    return out.with_name(f"{out.stem}_{suffix}{out.suffix or '.csv'}")


def _select_table(tables, country):
    if country is None:
        if len(tables) != 1:
            raise UsageError("file holds several tables; choose one with --country")
        return tables[0]
    hits = [t for t in tables if t.country == country]
    if len(hits) != 1:
        raise UsageError(f"expected exactly one table for country {country!r}, found {len(hits)}")
    return hits[0]


# -- commands ----------------------------------------------------------------

def cmd_validate(args) -> int:
    tables = ingest.parse_io_csv(args.io, tol_identity=args.tol, strict=False)
    rows, failed = [], 0
    for t in sorted(tables, key=lambda t: (t.country, t.year or 0)):
        report = t.meta["validation"]
        print(f"{t.country or '<unnamed>'} {t.year or ''}: {report.summary()}")
        failed += not report.passed
        if report.passed:
            rows.append([t.country, t.year or "", "ok", "", ""])
        for v in report.violations:
            rows.append([t.country, t.year or "", v.identity, "" if v.index is None else v.index,
                         num(v.residual)])
    if args.out:
        out = Path(args.out)
        _write_csv(out, ["country", "year", "identity", "index", "residual"], rows)
        _sidecar(out, "validate", {"io": args.io}, {"tol": args.tol})
    return EXIT_DATA if failed else EXIT_OK


def cmd_stats(args) -> int:
    tables = sorted(ingest.parse_io_csv(args.io), key=lambda t: (t.country, t.year or 0))
    sec_rows, fac_rows, imp_rows = [], [], []
    for t in tables:
        adj = netstats.adjusted_shares(t)
        for k, s in enumerate(t.sectors):
            sec_rows.append([t.country, s, num(adj.domar[k]), num(adj.domar_export_adj[k]),
                             num(adj.domar_network_adj[k])])
        for k, f in enumerate(t.factors):
            fac_rows.append([t.country, f, num(adj.factor[k]), num(adj.factor_export_adj[k]),
                             num(adj.factor_network_adj[k])])
        for k, m in enumerate(t.imports):
            imp_rows.append([t.country, m, num(adj.import_direct[k]), num(adj.import_network_adj[k])])
    out = Path(args.out)
    _write_csv(out, ["country", "sector", "domar", "export_adj", "network_adj"], sec_rows)
    _write_csv(_sibling(out, "factors"), ["country", "factor", "share", "export_adj", "network_adj"],
               fac_rows)
    _write_csv(_sibling(out, "imports"), ["country", "import", "direct", "network_adj"], imp_rows)
    _sidecar(out, "stats", {"io": args.io}, {})
    return EXIT_OK


def read_shock_csv(path):
    """Long-format dated log levels: columns date, block, id, log_level."""
    levels: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = ["date", "block", "id", "log_level"]
        if [c for c in need if c not in (reader.fieldnames or [])]:
            raise DataError(f"shock file must have columns {need}")
        for lineno, row in enumerate(reader, start=2):
            block = row["block"].strip().lower()
            if block not in cpi.BLOCKS:
                raise DataError(f"line {lineno}: block must be one of {cpi.BLOCKS}")
            try:
                v = float(row["log_level"])
            except ValueError:
                raise DataError(f"line {lineno}: non-numeric log_level {row['log_level']!r}") from None
            series = levels.setdefault(block, {}).setdefault(row["id"].strip(), {})
            date = row["date"].strip()
            if date in series:
                raise DataError(f"line {lineno}: duplicate date {date} for {block}:{row['id']}")
            series[date] = v
    return levels


def cmd_decompose(args) -> int:
    table = _select_table(ingest.parse_io_csv(args.io), args.country)
    levels = read_shock_csv(args.shocks)
    dates = sorted({d for blk in levels.values() for s in blk.values() for d in s})
    base = args.base or (dates[0] if dates else "")
    path = cpi.shock_path_from_levels(levels, base, table.sectors, table.factors, table.imports)
    stats = iotable.derive(table)
    variants = cpi.VARIANTS if args.variant == "all" else (args.variant,)
    rows = []
    summary = {}
    for variant in variants:
        es = cpi.elasticity_set(table, stats, variant, expenditure_over_gdp=args.expenditure_over_gdp,
                                no_network_mode=args.no_network_mode)
        for d, v in zip(path.dates, cpi.price_level_path(es, path)):
            rows.append([d, variant, "price_level", num(v)])
        parts = cpi.decompose_path(es, path, args.lag)
        for term in ("inflation", *cpi.TERMS):
            series = parts[term]
            for d, v in zip(series.dates, series.values):
                rows.append([d, variant, term, num(v)])
        infl = parts["inflation"]
        if infl.values.size:
            mean, std = cpi.moments(infl)
            rows.append(["ALL", variant, "inflation_mean", num(mean)])
            rows.append(["ALL", variant, "inflation_std", num(std)])
            summary[variant] = {"mean": num(mean), "std": num(std)}
        else:
            summary[variant] = {"mean": None, "std": None, "short_path": True}
    out = Path(args.out)
    _write_csv(out, ["date", "variant", "term", "value"], rows)
    _sidecar(out, "decompose", {"io": args.io, "shocks": args.shocks},
             {"variant": args.variant, "lag": args.lag, "base": base,
              "expenditure_over_gdp": args.expenditure_over_gdp,
              "no_network_mode": args.no_network_mode, "country": args.country},
             {"moments": summary})
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.horizon < 40:
        raise UsageError("--horizon must be at least 40")
    cal = mxnsim.MXNCalibration.for_scenario(args.scenario)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = mxnsim.irf(cal, shock=args.shock, size=args.size, horizon=args.horizon,
                         check_horizon=not args.no_horizon_check)
        res.scenario = args.scenario
    for w in caught:
        logger.warning(str(w.message))
    series = res.series()
    names = list(series)
    rows = [[t] + [num(series[n][t]) for n in names] for t in range(res.horizon)]
    out = Path(args.out)
    _write_csv(out, ["t", *names], rows)
    _sidecar(out, "simulate", {}, {"scenario": args.scenario, "shock": args.shock, "size": args.size,
                                   "horizon": args.horizon},
             {"horizon_sensitivity": None if args.no_horizon_check else num(res.horizon_sensitivity)})
    return EXIT_OK


def read_panel_csv(path) -> list[panelfe.PanelObs]:
    obs = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if [c for c in ("country", "sector", "y") if c not in (reader.fieldnames or [])]:
            raise DataError("panel file must have columns country, sector, y")
        for lineno, row in enumerate(reader, start=2):
            try:
                y = float(row["y"])
            except ValueError:
                raise DataError(f"line {lineno}: non-numeric y {row['y']!r}") from None
            obs.append(panelfe.PanelObs(row["country"].strip(), row["sector"].strip(), y))
    return obs


def cmd_regress(args) -> int:
    obs = read_panel_csv(args.input)
    res = panelfe.fit_two_way_fe(obs)
    rows = [["intercept", "", num(res.intercept), num(res.se_intercept)]]
    for kind, eff, se in (("sector", res.alpha_sector, res.se_sector),
                          ("country", res.alpha_country, res.se_country)):
        rows += [[kind, k, num(eff[k]), num(se[k])] for k in sorted(eff)]
    out = Path(args.out)
    _write_csv(out, ["effect", "id", "estimate", "std_error"], rows)
    _write_csv(_sibling(out, "residuals"), ["country", "sector", "y", "fitted", "residual"],
               [[o.country, o.sector, num(o.y), num(f), num(r)]
                for o, f, r in zip(obs, res.fitted, res.residuals)])
    _sidecar(out, "regress", {"input": args.input}, {}, {"r2": num(res.r2), "n_obs": len(obs)})
    return EXIT_OK


def _vector_from_json(value, ids, name):
    if value is None:
        return np.zeros(len(ids))
    if isinstance(value, dict):
        unknown = set(value) - set(ids)
        if unknown:
            raise DataError(f"{name}: unknown ids {sorted(unknown)}")
        return np.array([float(value.get(i, 0.0)) for i in ids])
    if np.isscalar(value):
        return np.full(len(ids), float(value))
    arr = np.asarray(value, dtype=float)
    if arr.shape != (len(ids),):
        raise DataError(f"{name}: expected {len(ids)} values")
    return arr


def cmd_solve_shares(args) -> int:
    table = _select_table(ingest.parse_io_csv(args.io), args.country)
    with open(args.shocks, encoding="utf-8") as fh:
        spec = json.load(fh)
    N, F, M = table.shape
    params = sharesys.ElasticityParams(
        theta_c=float(spec.get("theta_c", 1.0)),
        theta_i=_vector_from_json(spec.get("theta_i", 1.0), table.sectors, "theta_i"),
    )
    shocks = sharesys.ShareShocks(
        z_hat=_vector_from_json(spec.get("z_hat"), table.sectors, "z_hat"),
        pm_hat=_vector_from_json(spec.get("pm_hat"), table.imports, "pm_hat"),
        x_hat=_vector_from_json(spec.get("x_hat"), table.sectors, "x_hat"),
        l_bar_hat=_vector_from_json(spec.get("l_bar_hat"), table.factors, "l_bar_hat"),
        m_hat=float(spec.get("m_hat", 0.0)),
    )
    stats = iotable.derive(table)
    sol = sharesys.solve_share_system(table, params, shocks, stats)
    es = cpi.elasticity_set(table, stats, "soe_network")
    p1 = cpi.cpi_change(es, shocks.z_hat, sol.w_hat, shocks.pm_hat)
    p3 = sharesys.prop3_from_solution(table, stats, sol)
    rows = []
    for block, ids, vals in (("w_hat", table.factors, sol.w_hat),
                             ("dLambda_bar", table.factors, sol.dLambda_bar),
                             ("dlambda_bar", table.sectors, sol.dlambda_bar),
                             ("p_d_hat", table.sectors, sol.p_d_hat),
                             ("dx_bar", table.sectors, sol.dx_bar)):
        rows += [[block, i, num(v)] for i, v in zip(ids, vals)]
    rows += [["cpi", "factor_prices_form", num(p1)], ["cpi", "factor_shares_form", num(p3)],
             ["transfer", "dT_over_M", num(sol.transfer_change)]]
    out = Path(args.out)
    _write_csv(out, ["block", "id", "value"], rows)
    _sidecar(out, "solve-shares", {"io": args.io, "shocks": args.shocks}, {"country": args.country},
             {"rcond": num(sol.rcond)})
    return EXIT_OK


def cmd_classify(args) -> int:
    records = ingest.parse_macro_csv(args.input)
    if args.year is not None:
        records = [r for r in records if r.year == args.year]
    if not records:
        raise DataError("no macro records to classify")
    world = {y: ingest.build_world_gdp(records, year=y) for y in sorted({r.year for r in records})}
    rows = []
    for r in sorted(records, key=lambda r: (r.year, r.country)):
        c = ingest.classify_soe(r, world[r.year])
        rows.append([c.country, c.year, num(c.alpha_c), num(c.openness),
                     str(c.is_small).lower(), str(c.is_open).lower(), str(c.is_soe).lower()])
    out = Path(args.out)
    _write_csv(out, ["country", "year", "alpha_c", "openness", "is_small", "is_open", "is_soe"], rows)
    _sidecar(out, "classify", {"input": args.input}, {"year": args.year},
             {"world_gdp": {str(y): num(v) for y, v in world.items()}})
    return EXIT_OK


# -- wiring ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="netcpi", description="CPI pass-through in open production networks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", help="check accounting identities of IO tables")
    s.add_argument("--io", required=True)
    s.add_argument("--tol", type=float, default=iotable.TOL_IDENTITY)
    s.add_argument("--out")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("stats", help="Domar, factor and import weights with adjustments")
    s.add_argument("--io", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("decompose", help="model-implied inflation from dated shocks")
    s.add_argument("--io", required=True)
    s.add_argument("--shocks", required=True, help="CSV with date, block (z|w|pm), id, log_level")
    s.add_argument("--variant", default="soe_network", choices=(*cpi.VARIANTS, "all"))
    s.add_argument("--lag", type=int, default=4)
    s.add_argument("--base", help="base period (default: first date)")
    s.add_argument("--country")
    s.add_argument("--expenditure-over-gdp", type=float, default=1.0)
    s.add_argument("--no-network-mode", default="raw", choices=netstats.NO_NETWORK_MODES)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("simulate", help="impulse responses of the dynamic three-good model")
    s.add_argument("--scenario", default="island", choices=sorted(mxnsim.SCENARIOS))
    s.add_argument("--shock", default="zN", choices=mxnsim.SHOCKS)
    s.add_argument("--size", type=float, default=-0.01)
    s.add_argument("--horizon", type=int, default=80)
    s.add_argument("--no-horizon-check", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("regress", help="two-way fixed effects on country-sector data")
    s.add_argument("--input", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_regress)

    s = sub.add_parser("solve-shares", help="endogenous shares under CES demand")
    s.add_argument("--io", required=True)
    s.add_argument("--shocks", required=True, help="JSON with theta_c, theta_i and shock vectors")
    s.add_argument("--country")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_solve_shares)

    s = sub.add_parser("classify", help="small-open-economy classification")
    s.add_argument("--input", required=True)
    s.add_argument("--year", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_classify)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("NETCPI_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, CalibrationError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
