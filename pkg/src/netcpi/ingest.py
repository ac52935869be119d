"""Readers and writers for input-output tables and country macro records.

Canonical IO file layout (UTF-8 CSV)::

    #format,shares            optional; "shares" (default) or "nominal"
    #sectors,s1,s2
    #factors,labor
    #imports,m1
    #table,FIX,2014           starts a table; country and year
    flow_type,row_id,col_id,value
    OMEGA,s1,s1,0.2
    ...

Every table lists every entry of every block, zeros included:

    OMEGA   sector, sector      FACTOR  sector, factor     IMPORT  sector, import
    CONS_D  sector, (blank)     CONS_M  import, (blank)    EXPORT  sector, (blank)

Nominal files hold flows in currency units plus ``GROSS_OUTPUT,<sector>,,v``
rows and one ``EXPENDITURE,,,v`` row; shares are flows divided by the
purchasing sector's gross output or by expenditure.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, SchemaError
from .iotable import CLAMP_FLOOR, TOL_IDENTITY, IOTable, validate

logger = logging.getLogger(__name__)

FLOW_TYPES = ("OMEGA", "FACTOR", "IMPORT", "CONS_D", "CONS_M", "EXPORT")
NOMINAL_EXTRA = ("GROSS_OUTPUT", "EXPENDITURE")
COLUMN_HEADER = ["flow_type", "row_id", "col_id", "value"]
SMALL_SHARE = 0.05
OPEN_SHARE = 0.3


def _layout(sectors, factors, imports):
    """(row ids, col ids) per flow type; a blank column id marks vectors."""
    return {
        "OMEGA": (sectors, sectors),
        "FACTOR": (sectors, factors),
        "IMPORT": (sectors, imports),
        "CONS_D": (sectors, ("",)),
        "CONS_M": (imports, ("",)),
        "EXPORT": (sectors, ("",)),
    }


@dataclass
class _Block:
    country: str
    year: int | None
    line: int
    entries: dict


def _parse_float(text, lineno, col):
    try:
        v = float(text)
    except ValueError:
        raise SchemaError(f"line {lineno}, column {col!r}: non-numeric value {text!r}") from None
    if not np.isfinite(v):
        raise SchemaError(f"line {lineno}, column {col!r}: non-finite value {text!r}")
    return v


def _read_blocks(path):
    header = {}
    blocks: list[_Block] = []
    fmt = "shares"
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            row = [c.strip() for c in row]
            key = row[0]
            if key.startswith("#"):
                tag = key[1:]
                if tag in ("sectors", "factors", "imports"):
                    if blocks:
                        raise SchemaError(f"line {lineno}: #{tag} must precede the first #table")
                    ids = tuple(c for c in row[1:] if c)
                    if len(set(ids)) != len(ids):
                        raise SchemaError(f"line {lineno}: duplicate ids in #{tag}")
                    header[tag] = ids
                elif tag == "format":
                    if len(row) < 2 or row[1] not in ("shares", "nominal"):
                        raise SchemaError(f"line {lineno}: #format must be 'shares' or 'nominal'")
                    fmt = row[1]
                elif tag == "table":
                    country = row[1] if len(row) > 1 else ""
                    year = None
                    if len(row) > 2 and row[2]:
                        try:
                            year = int(row[2])
                        except ValueError:
                            raise SchemaError(f"line {lineno}: year {row[2]!r} is not an integer") from None
                    blocks.append(_Block(country, year, lineno, {}))
                else:
                    raise SchemaError(f"line {lineno}: unknown header tag #{tag}")
                continue
            if row == COLUMN_HEADER:
                continue
            if len(row) != 4:
                raise SchemaError(f"line {lineno}: expected 4 fields, found {len(row)}")
            ftype, rid, cid, val = row
            if ftype not in FLOW_TYPES and not (fmt == "nominal" and ftype in NOMINAL_EXTRA):
                raise SchemaError(f"line {lineno}: unknown flow type {ftype!r}")
            if not blocks:
                blocks.append(_Block("", None, lineno, {}))
            k = (ftype, rid, cid)
            if k in blocks[-1].entries:
                raise SchemaError(f"line {lineno}: duplicate entry {ftype},{rid},{cid}")
            blocks[-1].entries[k] = (_parse_float(val, lineno, "value"), lineno)
    for tag in ("sectors", "factors", "imports"):
        if tag not in header:
            raise SchemaError(f"missing #{tag} header line")
    if not header["sectors"]:
        raise SchemaError("#sectors lists no sectors")
    if not blocks:
        raise SchemaError("file contains no table rows")
    return fmt, header, blocks


def _check_ids(block, layout, fmt, sectors):
    allowed = {(ft, r, c) for ft, (rows, cols) in layout.items() for r in rows for c in cols}
    if fmt == "nominal":
        allowed |= {("GROSS_OUTPUT", s, "") for s in sectors} | {("EXPENDITURE", "", "")}
    for k, (_, lineno) in block.entries.items():
        if k not in allowed:
            raise SchemaError(f"line {lineno}: entry {','.join(k)} does not match the declared ids")


def _dense(block, layout, ftype, what):
    rows, cols = layout[ftype]
    out = np.zeros((len(rows), len(cols)))
    for i, r in enumerate(rows):
        for j, c in enumerate(cols):
            try:
                out[i, j] = block.entries[(ftype, r, c)][0]
            except KeyError:
                col = c or "value"
                raise SchemaError(
                    f"table {block.country or '<unnamed>'}: {ftype} column {col!r} missing for "
                    f"{what} {r!r}"
                ) from None
    return out


def _clamp(arr, scale, label):
    """Zero out rounding-size negatives; reject larger ones."""
    scale = np.broadcast_to(np.asarray(scale, dtype=float), arr.shape)
    floor = CLAMP_FLOOR * scale
    bad = arr < floor
    if bad.any():
        i = tuple(int(k) for k in np.argwhere(bad)[0])
        raise DataError(f"{label}: negative entry {arr[i]:.6g} at index {i}")
    tiny = arr < 0
    if tiny.any():
        warnings.warn(f"{label}: clamped {int(tiny.sum())} tiny negative entries to zero",
                      RuntimeWarning, stacklevel=3)
        arr = np.where(tiny, 0.0, arr)
    return arr


def _table_from_block(block, fmt, header):
    sectors, factors, imports = header["sectors"], header["factors"], header["imports"]
    layout = _layout(sectors, factors, imports)
    _check_ids(block, layout, fmt, sectors)
    dense = {ft: _dense(block, layout, ft, "sector" if ft != "CONS_M" else "import")
             for ft in FLOW_TYPES}
    name = block.country or "<unnamed>"
    if fmt == "nominal":
        go = np.array([block.entries.get(("GROSS_OUTPUT", s, ""), (np.nan, 0))[0] for s in sectors])
        if np.isnan(go).any():
            missing = sectors[int(np.flatnonzero(np.isnan(go))[0])]
            raise SchemaError(f"table {name}: GROSS_OUTPUT missing for sector {missing!r}")
        if ("EXPENDITURE", "", "") not in block.entries:
            raise SchemaError(f"table {name}: EXPENDITURE row missing")
        E = block.entries[("EXPENDITURE", "", "")][0]
        zero = [s for s, v in zip(sectors, go) if v <= 0]
        if zero:
            raise DataError(f"table {name}: degenerate sector(s) with nonpositive gross output {zero}")
        if E <= 0:
            raise DataError(f"table {name}: expenditure must be positive")
        for ft in ("OMEGA", "FACTOR", "IMPORT"):
            dense[ft] = _clamp(dense[ft], go[:, None], f"table {name} {ft}") / go[:, None]
        for ft in ("CONS_D", "CONS_M", "EXPORT"):
            dense[ft] = _clamp(dense[ft], E, f"table {name} {ft}") / E
    else:
        for ft in FLOW_TYPES:
            tiny = (dense[ft] < 0) & (dense[ft] >= CLAMP_FLOOR)
            if tiny.any():
                warnings.warn(f"table {name} {ft}: clamped {int(tiny.sum())} tiny negative shares",
                              RuntimeWarning, stacklevel=3)
                dense[ft] = np.where(tiny, 0.0, dense[ft])
    return IOTable(
        sectors=sectors, factors=factors, imports=imports,
        omega=dense["OMEGA"], factor_shares_by_sector=dense["FACTOR"],
        import_input_shares=dense["IMPORT"], consumption_shares_domestic=dense["CONS_D"][:, 0],
        consumption_shares_import=dense["CONS_M"][:, 0], export_shares=dense["EXPORT"][:, 0],
        meta={"country": block.country, "year": block.year},
    )


def parse_io_csv(path, tol_identity: float = TOL_IDENTITY, strict: bool = True) -> list[IOTable]:
    """Read every table in a canonical IO file.

    Each table's validation report is stored under ``meta["validation"]``.
    With ``strict`` a table failing validation raises DataError.
    """
    fmt, header, blocks = _read_blocks(path)
    tables = []
    for block in blocks:
        table = _table_from_block(block, fmt, header)
        report = validate(table, tol_identity)
        if strict and not report.passed:
            raise DataError(f"table {block.country or '<unnamed>'} (line {block.line}) failed "
                            f"validation: {report.summary()}")
        table.meta["validation"] = report
        tables.append(table)
    return tables


def _fmt(v: float) -> str:
    return repr(float(v))


def write_io_csv(tables: Sequence[IOTable] | IOTable, path) -> None:
    """Write tables in the canonical share layout; values round-trip exactly."""
    if isinstance(tables, IOTable):
        tables = [tables]
    tables = list(tables)
    if not tables:
        raise ValueError("nothing to write")
    first = tables[0]
    for t in tables[1:]:
        if (t.sectors, t.factors, t.imports) != (first.sectors, first.factors, first.imports):
            raise DataError("all tables in one file must share sector, factor and import ids")
    layout = _layout(first.sectors, first.factors, first.imports)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["#format", "shares"])
        w.writerow(["#sectors", *first.sectors])
        w.writerow(["#factors", *first.factors])
        w.writerow(["#imports", *first.imports])
        for t in tables:
            year = "" if t.year is None else str(t.year)
            w.writerow(["#table", t.country, year])
            w.writerow(COLUMN_HEADER)
            blocks = {
                "OMEGA": t.omega, "FACTOR": t.A, "IMPORT": t.gamma,
                "CONS_D": t.b_d[:, None], "CONS_M": t.b_m[:, None], "EXPORT": t.x[:, None],
            }
            for ft in FLOW_TYPES:
                rows, cols = layout[ft]
                for i, r in enumerate(rows):
                    for j, c in enumerate(cols):
                        w.writerow([ft, r, c, _fmt(blocks[ft][i, j])])


# -- macro records and classification ----------------------------------------

@dataclass(frozen=True)
class CountryMacro:
    """One country-year. ``csh_m`` is negative by source convention."""

    country: str
    year: int
    cgdpo: float
    csh_x: float
    csh_m: float

    def __post_init__(self):
        if not self.cgdpo > 0:
            raise DataError(f"{self.country} {self.year}: cgdpo must be positive")


@dataclass(frozen=True)
class SOEClass:
    country: str
    year: int
    alpha_c: float
    openness: float
    is_small: bool
    is_open: bool

    @property
    def is_soe(self) -> bool:
        return self.is_small and self.is_open


MACRO_COLUMNS = ("country", "year", "cgdpo", "csh_x", "csh_m")


def parse_macro_csv(path) -> list[CountryMacro]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in MACRO_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(f"macro file lacks column(s) {missing}")
        for lineno, row in enumerate(reader, start=2):
            try:
                year = int(row["year"])
            except ValueError:
                raise SchemaError(f"line {lineno}, column 'year': not an integer {row['year']!r}") from None
            vals = {c: _parse_float(row[c], lineno, c) for c in ("cgdpo", "csh_x", "csh_m")}
            out.append(CountryMacro(country=row["country"].strip(), year=year, **vals))
    return out


def build_world_gdp(records: Iterable[CountryMacro], year: int | None = None) -> float:
    """Sum of cgdpo across countries for one year."""
    records = list(records)
    if year is not None:
        records = [r for r in records if r.year == year]
    if not records:
        raise DataError("no macro records for world GDP")
    years = {r.year for r in records}
    if len(years) > 1:
        raise DataError(f"records span several years {sorted(years)}; pass year=")
    seen = set()
    for r in records:
        if r.country in seen:
            raise DataError(f"duplicate record for {r.country} in {r.year}")
        seen.add(r.country)
    return float(sum(r.cgdpo for r in records))


def classify_soe(macro: CountryMacro, world_gdp: float) -> SOEClass:
    """Small if the world GDP share is at most 5%; open if openness is at least 30%."""
    if not world_gdp > 0:
        raise DataError("world GDP must be positive")
    alpha = macro.cgdpo / world_gdp
    openness = macro.csh_x - macro.csh_m
    return SOEClass(country=macro.country, year=macro.year, alpha_c=alpha, openness=openness,
                    is_small=alpha <= SMALL_SHARE, is_open=openness >= OPEN_SHARE)


def load_tables(paths: Iterable[str | Path], **kwargs) -> list[IOTable]:
    tables = []
    for p in paths:
        tables.extend(parse_io_csv(p, **kwargs))
    return tables
