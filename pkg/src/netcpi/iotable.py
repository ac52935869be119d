"""Production-network accounts for one country-year, in expenditure shares.

All share objects are divided by total domestic expenditure E (bar-denoted
quantities in the accounting). Sector rows of ``omega``, ``A`` and ``gamma``
are spending per unit of that sector's sales.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, NonProductiveError, StructuralError

logger = logging.getLogger(__name__)

TOL_IDENTITY = 1e-6
TOL_SOLVE = 1e-10
EPS_MARGIN = 1e-9
POWER_TOL = 1e-8
CLAMP_FLOOR = -1e-9


def _frozen(a, ndim):
    arr = np.array(a, dtype=float, copy=True)
    if arr.ndim != ndim:
        if arr.size == 0 and ndim == 1:
            arr = arr.reshape(0)
        else:
            raise StructuralError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class IOTable:
    sectors: tuple
    factors: tuple
    imports: tuple
    omega: np.ndarray
    factor_shares_by_sector: np.ndarray
    import_input_shares: np.ndarray
    consumption_shares_domestic: np.ndarray
    consumption_shares_import: np.ndarray
    export_shares: np.ndarray
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "sectors", tuple(self.sectors))
        set_(self, "factors", tuple(self.factors))
        set_(self, "imports", tuple(self.imports))
        set_(self, "omega", _frozen(self.omega, 2))
        N, F, M = len(self.sectors), len(self.factors), len(self.imports)
        A = np.array(self.factor_shares_by_sector, dtype=float)
        G = np.array(self.import_input_shares, dtype=float)
        if A.size == 0:
            A = A.reshape(N, F)
        if G.size == 0:
            G = G.reshape(N, M)
        set_(self, "factor_shares_by_sector", _frozen(A, 2))
        set_(self, "import_input_shares", _frozen(G, 2))
        set_(self, "consumption_shares_domestic", _frozen(self.consumption_shares_domestic, 1))
        set_(self, "consumption_shares_import", _frozen(self.consumption_shares_import, 1))
        set_(self, "export_shares", _frozen(self.export_shares, 1))
        set_(self, "meta", dict(self.meta))

    # short aliases used throughout the numerical code
    @property
    def A(self) -> np.ndarray:
        return self.factor_shares_by_sector

    @property
    def gamma(self) -> np.ndarray:
        return self.import_input_shares

    @property
    def b_d(self) -> np.ndarray:
        return self.consumption_shares_domestic

    @property
    def b_m(self) -> np.ndarray:
        return self.consumption_shares_import

    @property
    def x(self) -> np.ndarray:
        return self.export_shares

    @property
    def country(self) -> str:
        return str(self.meta.get("country", ""))

    @property
    def year(self):
        return self.meta.get("year")

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.sectors), len(self.factors), len(self.imports)

    def replace(self, **changes) -> "IOTable":
        fields = dict(
            sectors=self.sectors, factors=self.factors, imports=self.imports,
            omega=self.omega, factor_shares_by_sector=self.A,
            import_input_shares=self.gamma, consumption_shares_domestic=self.b_d,
            consumption_shares_import=self.b_m, export_shares=self.x, meta=self.meta,
        )
        fields.update(changes)
        return IOTable(**fields)


@dataclass(frozen=True)
class DerivedStats:
    psi: np.ndarray
    domar_expenditure: np.ndarray
    factor_shares_agg: np.ndarray

    @property
    def lam(self) -> np.ndarray:
        return self.domar_expenditure

    @property
    def Lam(self) -> np.ndarray:
        return self.factor_shares_agg


@dataclass(frozen=True)
class Violation:
    identity: str
    index: int | None
    residual: float

    def __str__(self):
        where = "" if self.index is None else f" at row {self.index}"
        return f"{self.identity}{where}: residual {self.residual:.3e}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()
    spectral_radius: float = float("nan")

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.passed

    def summary(self) -> str:
        if self.passed:
            return "ok"
        return "; ".join(str(v) for v in self.violations)


def check_shapes(table: IOTable) -> None:
    """Raise StructuralError if arrays disagree with the id lists."""
    N, F, M = table.shape
    expected = {
        "omega": (table.omega, (N, N)),
        "factor_shares_by_sector": (table.A, (N, F)),
        "import_input_shares": (table.gamma, (N, M)),
        "consumption_shares_domestic": (table.b_d, (N,)),
        "consumption_shares_import": (table.b_m, (M,)),
        "export_shares": (table.x, (N,)),
    }
    for name, (arr, shape) in expected.items():
        if arr.shape != shape:
            raise StructuralError(f"{name} has shape {arr.shape}, expected {shape}")
    if N == 0:
        raise StructuralError("table has no sectors")
    for label, ids in (("sector", table.sectors), ("factor", table.factors), ("import", table.imports)):
        if len(set(ids)) != len(ids):
            raise StructuralError(f"duplicate {label} ids")


def spectral_radius(omega, tol: float = POWER_TOL, max_iter: int = 2_000) -> float:
    """Perron root of |omega| by power iteration on |omega| + I.

    The shift makes the Perron root strictly dominant for nonnegative
    matrices, and the Collatz-Wielandt bounds give a stopping rule. Reducible
    matrices can stall the bounds; those fall back to a dense eigenvalue solve.
    """
    W = np.abs(np.asarray(omega, dtype=float))
    n = W.shape[0]
    if n == 0:
        return 0.0
    S = W + np.eye(n)
    v = np.ones(n) / n
    lo, hi = 0.0, np.inf
    for _ in range(max_iter):
        w = S @ v
        ratios = w / v
        lo, hi = ratios.min(), ratios.max()
        if hi - lo < tol:
            return float(0.5 * (lo + hi) - 1.0)
        v = w / w.sum()
        # keep components strictly positive so the bounds stay defined
        v = np.maximum(v, 1e-300)
    logger.debug("power iteration did not converge; falling back to eigenvalues")
    return float(np.max(np.abs(np.linalg.eigvals(W))))


def productivity_bound(omega) -> float:
    """Cheap certificate: the max row sum bounds the spectral radius; iterate only if needed."""
    W = np.abs(np.asarray(omega, dtype=float))
    if W.size == 0:
        return 0.0
    bound = min(W.sum(axis=1).max(), W.sum(axis=0).max())
    if bound < 1.0 - EPS_MARGIN:
        return float(bound)
    return spectral_radius(W)


def validate(table: IOTable, tol_identity: float = TOL_IDENTITY) -> ValidationReport:
    """Check share ranges, zero-profit rows, consumption normalization and productivity."""
    check_shapes(table)
    out = []
    blocks = {
        "omega": table.omega, "factor_shares_by_sector": table.A,
        "import_input_shares": table.gamma, "consumption_shares_domestic": table.b_d,
        "consumption_shares_import": table.b_m, "export_shares": table.x,
    }
    for name, arr in blocks.items():
        if not np.all(np.isfinite(arr)):
            out.append(Violation(f"non-finite entry in {name}", None, float("inf")))
            continue
        flat = arr.reshape(len(arr), -1) if arr.ndim == 2 else arr.reshape(-1, 1)
        for i, row in enumerate(flat):
            lo = row.min(initial=0.0)
            hi = row.max(initial=0.0)
            if lo < 0.0:
                out.append(Violation(f"negative share in {name}", i, float(-lo)))
            # exports over domestic expenditure can legitimately exceed one
            if name != "export_shares" and hi > 1.0 + tol_identity:
                out.append(Violation(f"share above one in {name}", i, float(hi - 1.0)))

    row_sums = table.omega.sum(axis=1) + table.A.sum(axis=1) + table.gamma.sum(axis=1)
    for i, s in enumerate(row_sums):
        if abs(s - 1.0) > tol_identity:
            out.append(Violation("zero-profit row", i, float(abs(s - 1.0))))
    total_c = table.b_d.sum() + table.b_m.sum()
    if abs(total_c - 1.0) > tol_identity:
        out.append(Violation("consumption normalization", None, float(abs(total_c - 1.0))))

    rho = spectral_radius(table.omega) if np.all(np.isfinite(table.omega)) else float("inf")
    if rho >= 1.0 - EPS_MARGIN:
        out.append(Violation("spectral radius of omega", None, float(rho - 1.0)))
    return ValidationReport(violations=tuple(out), spectral_radius=rho)


def leontief(omega) -> np.ndarray:
    """Leontief inverse (I - omega)^-1 by a dense LU solve."""
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
        raise StructuralError(f"omega must be square, got shape {omega.shape}")
    n = omega.shape[0]
    rho = productivity_bound(omega)
    if rho >= 1.0 - EPS_MARGIN:
        raise NonProductiveError(f"omega is not productive (spectral radius {rho:.10g})")
    try:
        psi = np.linalg.solve(np.eye(n) - omega, np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise NonProductiveError("I - omega is singular") from exc
    return psi


def neumann_oracle(omega, tol: float = 1e-12, max_terms: int = 100_000) -> np.ndarray:
    """Partial sums of sum_s omega^s until the increment's inf-norm drops below tol."""
    omega = np.asarray(omega, dtype=float)
    n = omega.shape[0]
    total = np.eye(n)
    term = np.eye(n)
    for _ in range(max_terms):
        term = term @ omega
        total = total + term
        if np.abs(term).sum(axis=1).max(initial=0.0) < tol:
            return total
    raise NonProductiveError(f"Neumann series did not converge after {max_terms} terms")


def derive(table: IOTable) -> DerivedStats:
    """Leontief inverse, expenditure-based Domar weights and aggregate factor shares."""
    check_shapes(table)
    psi = leontief(table.omega)
    lam = psi.T @ (table.b_d + table.x)
    Lam = lam @ table.A
    for arr in (psi, lam, Lam):
        arr.setflags(write=False)
    return DerivedStats(psi=psi, domar_expenditure=lam, factor_shares_agg=Lam)


def to_gdp_based(values, expenditure_over_gdp: float = 1.0) -> np.ndarray:
    """Convert expenditure-based shares to GDP-based ones (multiply by E/nGDP)."""
    if expenditure_over_gdp <= 0:
        raise ValueError("E/nGDP must be positive")
    return np.asarray(values, dtype=float) * expenditure_over_gdp


def implied_expenditure_over_gdp(stats: DerivedStats) -> float:
    """E/nGDP implied by the table itself: value added over E equals sum of factor shares."""
    total = float(stats.Lam.sum())
    if total <= 0:
        raise DataError("aggregate factor share is not positive")
    return 1.0 / total


def aggregate(table: IOTable, sector_mapping: Mapping[str, str],
              coarse_sectors: Sequence[str] | None = None, weights=None) -> IOTable:
    """Collapse sectors by summing nominal flows and re-deriving shares.

    ``weights`` are sector sales over E; by default the table's own Domar
    weights are used, which keeps the coarse table's goods-market identity exact.
    """
    check_shapes(table)
    missing = [s for s in table.sectors if s not in sector_mapping]
    if missing:
        raise DataError(f"sector mapping does not cover {missing}")
    if coarse_sectors is None:
        coarse_sectors = list(dict.fromkeys(sector_mapping[s] for s in table.sectors))
    coarse_sectors = list(coarse_sectors)
    used = {sector_mapping[s] for s in table.sectors}
    unknown = used - set(coarse_sectors)
    if unknown:
        raise DataError(f"mapping targets undeclared coarse sectors {sorted(unknown)}")
    empty = [c for c in coarse_sectors if c not in used]
    if empty:
        raise DataError(f"empty coarse bucket(s): {empty}")

    if weights is None:
        weights = derive(table).lam
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(table.sectors),) or np.any(weights <= 0):
        raise DataError("aggregation weights must be positive, one per sector")

    pos = {c: k for k, c in enumerate(coarse_sectors)}
    S = np.zeros((len(coarse_sectors), len(table.sectors)))
    for i, s in enumerate(table.sectors):
        S[pos[sector_mapping[s]], i] = 1.0

    sales = S @ weights
    flows = weights[:, None] * table.omega  # row i: sector i purchases, in units of E
    omega_c = (S @ flows @ S.T) / sales[:, None]
    A_c = (S @ (weights[:, None] * table.A)) / sales[:, None]
    G_c = (S @ (weights[:, None] * table.gamma)) / sales[:, None]
    return table.replace(
        sectors=tuple(coarse_sectors), omega=omega_c, factor_shares_by_sector=A_c,
        import_input_shares=G_c, consumption_shares_domestic=S @ table.b_d,
        export_shares=S @ table.x,
    )
