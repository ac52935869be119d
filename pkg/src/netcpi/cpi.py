"""First-order CPI responses to productivity, factor-price and import-price shocks.

Weights come in three flavours: a closed economy (GDP-based Domar and
factor shares), a small open economy that ignores domestic input-output
links, and a small open economy with the full network adjustment.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, StructuralError
from .iotable import TOL_SOLVE, DerivedStats, IOTable, derive, to_gdp_based
from .netstats import adjusted_shares, no_network_counterfactual

VARIANTS = ("closed", "soe_no_network", "soe_network")
TERMS = ("technology", "factor_prices", "import_prices")


@dataclass(frozen=True)
class ElasticitySet:
    """CPI weights. ``weight_z`` enters with a negative sign."""

    variant: str
    weight_z: np.ndarray
    weight_w: np.ndarray
    weight_pm: np.ndarray


def elasticity_set(table: IOTable, stats: DerivedStats | None = None, variant: str = "soe_network",
                   expenditure_over_gdp: float = 1.0, no_network_mode: str = "raw") -> ElasticitySet:
    """Weights of the requested variant.

    ``expenditure_over_gdp`` converts expenditure-based shares to GDP-based
    ones for the closed variant only.
    """
    if stats is None:
        stats = derive(table)
    if variant == "closed":
        return ElasticitySet(
            variant=variant,
            weight_z=to_gdp_based(stats.lam, expenditure_over_gdp),
            weight_w=to_gdp_based(stats.Lam, expenditure_over_gdp),
            weight_pm=np.zeros(len(table.imports)),
        )
    if variant == "soe_network":
        adj = adjusted_shares(table, stats)
    elif variant == "soe_no_network":
        adj = no_network_counterfactual(table, mode=no_network_mode, stats=stats)
    else:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return ElasticitySet(variant=variant, weight_z=adj.domar_network_adj,
                         weight_w=adj.factor_network_adj, weight_pm=adj.import_network_adj)


def _vec(v, n, name):
    arr = np.asarray(v, dtype=float)
    if arr.shape[-1:] != (n,):
        raise StructuralError(f"{name} has trailing dimension {arr.shape[-1:]}, expected {n}")
    return arr


def term_contributions(es: ElasticitySet, z_hat, w_hat, pm_hat) -> dict[str, np.ndarray]:
    """Technology, factor-price and import-price pieces of the CPI change.

    Inputs may be single vectors or stacked by date (rows are dates).
    """
    z = _vec(z_hat, len(es.weight_z), "z_hat")
    w = _vec(w_hat, len(es.weight_w), "w_hat")
    pm = _vec(pm_hat, len(es.weight_pm), "pm_hat")
    return {
        "technology": -(z @ es.weight_z),
        "factor_prices": w @ es.weight_w,
        "import_prices": pm @ es.weight_pm,
    }


def cpi_change(es: ElasticitySet, z_hat, w_hat, pm_hat):
    """P_hat = -weight_z . z_hat + weight_w . w_hat + weight_pm . pm_hat."""
    parts = term_contributions(es, z_hat, w_hat, pm_hat)
    return parts["technology"] + parts["factor_prices"] + parts["import_prices"]


def cpi_from_price_system(table: IOTable, z_hat, w_hat, pm_hat) -> float:
    """CPI change from the sector price system, without any network weights.

    Solves (I - omega) P_D = -z + A w + gamma pm and prices the consumption basket.
    """
    N = len(table.sectors)
    rhs = -_vec(z_hat, N, "z_hat") + table.A @ _vec(w_hat, len(table.factors), "w_hat") \
        + table.gamma @ _vec(pm_hat, len(table.imports), "pm_hat")
    p_d = np.linalg.solve(np.eye(N) - table.omega, rhs)
    return float(table.b_d @ p_d + table.b_m @ np.asarray(pm_hat, dtype=float))


# -- ex-post factor shares ---------------------------------------------------

@dataclass(frozen=True)
class Prop3Inputs:
    """Shocks for the factor-share form of the CPI response.

    ``dlambda_bar_hat`` are log changes of aggregate factor shares,
    ``l_bar_hat`` log changes of factor endowments, ``dT_over_M`` the change
    in the net transfer abroad over money and ``m_hat`` the log change in money.
    """

    dlambda_bar_hat: np.ndarray
    l_bar_hat: np.ndarray
    dT_over_M: float
    m_hat: float
    z_hat: np.ndarray
    pm_hat: np.ndarray

    def __post_init__(self):
        for name in ("dlambda_bar_hat", "l_bar_hat", "z_hat", "pm_hat"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            object.__setattr__(self, name, arr)
        for name in ("dT_over_M", "m_hat"):
            object.__setattr__(self, name, float(getattr(self, name)))
        values = np.concatenate([self.dlambda_bar_hat, self.l_bar_hat, self.z_hat, self.pm_hat,
                                 [self.dT_over_M, self.m_hat]])
        if not np.all(np.isfinite(values)):
            raise DataError("Prop3Inputs must be finite")


def implied_transfer(stats: DerivedStats, dlambda_bar_hat, m_hat: float) -> float:
    """dT/M consistent with the factor-share changes.

    Uses T/M = sum(Lambda_bar) - 1, so sum(dLambda_bar) = dT/M - (T/M) m_hat.
    """
    Lam = stats.Lam
    return float(Lam @ np.asarray(dlambda_bar_hat, dtype=float) + (Lam.sum() - 1.0) * m_hat)


def _prop3_expanded(table: IOTable, stats: DerivedStats, inputs: Prop3Inputs) -> float:
    adj = adjusted_shares(table, stats)
    Lam_tilde = adj.export_content_of_factors
    return float(
        -adj.domar_network_adj @ inputs.z_hat
        - Lam_tilde @ inputs.dlambda_bar_hat
        - adj.factor_network_adj @ inputs.l_bar_hat
        + inputs.dT_over_M
        + (1.0 - Lam_tilde.sum()) * inputs.m_hat
        + adj.import_network_adj @ inputs.pm_hat
    )


def cpi_prop3(table: IOTable, stats: DerivedStats | None, inputs: Prop3Inputs,
              tol: float = TOL_SOLVE) -> float:
    """CPI change written in terms of factor-share changes.

    Evaluated by substituting w_hat = dlambda_bar_hat + m_hat - l_bar_hat
    into the network formula. The expanded form in terms of the transfer is
    computed as a check; the two agree only when ``dT_over_M`` matches
    :func:`implied_transfer`, otherwise a DataError is raised.
    """
    if stats is None:
        stats = derive(table)
    F = len(table.factors)
    for name in ("dlambda_bar_hat", "l_bar_hat"):
        if getattr(inputs, name).shape != (F,):
            raise StructuralError(f"{name} must have length {F}")
    es = elasticity_set(table, stats, "soe_network")
    w_hat = inputs.dlambda_bar_hat + inputs.m_hat - inputs.l_bar_hat
    value = float(cpi_change(es, inputs.z_hat, w_hat, inputs.pm_hat))
    expanded = _prop3_expanded(table, stats, inputs)
    if abs(value - expanded) > tol * max(1.0, abs(value)):
        implied = implied_transfer(stats, inputs.dlambda_bar_hat, inputs.m_hat)
        raise DataError(
            f"dT/M = {inputs.dT_over_M:.10g} is inconsistent with the factor-share changes "
            f"(implied {implied:.10g})"
        )
    return value


# -- two-period economy ------------------------------------------------------

@dataclass(frozen=True)
class TwoPeriodInputs:
    """Shocks to the two-period economy, all as log changes.

    ``e0_hat`` defaults to the value implied by the Euler equation,
    e0 - eps0 = e1 - eps1 - beta_hat - istar_hat. ``p_m0_star_hat`` is the
    foreign price of the numeraire import; it cancels from the total.
    """

    eps0_hat: float = 0.0
    e1_hat: float = 0.0
    eps1_hat: float = 0.0
    istar_hat: float = 0.0
    beta_hat: float = 0.0
    e0_hat: float | None = None
    z_hat: Sequence[float] | None = None
    dlambda_bar_hat: Sequence[float] | None = None
    l_bar_hat: Sequence[float] | None = None
    pm_star_hat: Sequence[float] | None = None
    p_m0_star_hat: float = 0.0

    def demand_gap(self) -> float:
        """E_0 - eps_0 in log changes."""
        if self.e0_hat is not None:
            return self.e0_hat - self.eps0_hat
        return self.e1_hat - self.eps1_hat - self.beta_hat - self.istar_hat


@dataclass(frozen=True)
class TwoPeriodDecomposition:
    total: float
    components: dict = field(default_factory=dict)


TWO_PERIOD_TERMS = (
    "nominal_anchor", "aggregate_demand", "technology",
    "factor_share_reallocation", "factor_supplies", "import_prices",
)


def _or_zeros(v, n):
    return np.zeros(n) if v is None else np.asarray(v, dtype=float).reshape(n)


def two_period_cpi(inputs: TwoPeriodInputs, table: IOTable,
                   stats: DerivedStats | None = None) -> TwoPeriodDecomposition:
    """Date-0 CPI change of the two-period economy, split into six terms."""
    if stats is None:
        stats = derive(table)
    N, F, M = table.shape
    bpsi = table.b_d @ stats.psi
    bpsi_a = bpsi @ table.A
    import_w = bpsi @ table.gamma + table.b_m
    numeraire = inputs.p_m0_star_hat
    comps = {
        "nominal_anchor": inputs.eps0_hat + numeraire,
        "aggregate_demand": bpsi_a.sum() * (inputs.demand_gap() - numeraire),
        "technology": -bpsi @ _or_zeros(inputs.z_hat, N),
        "factor_share_reallocation": bpsi_a @ _or_zeros(inputs.dlambda_bar_hat, F),
        "factor_supplies": -bpsi_a @ _or_zeros(inputs.l_bar_hat, F),
        "import_prices": import_w @ (_or_zeros(inputs.pm_star_hat, M) - numeraire),
    }
    comps = {k: float(v) for k, v in comps.items()}
    return TwoPeriodDecomposition(total=float(sum(comps.values())), components=comps)


def implied_wage_change(inputs: TwoPeriodInputs, n_factors: int) -> np.ndarray:
    """Date-0 factor price changes consistent with the two-period inputs."""
    gap = inputs.demand_gap()
    return (_or_zeros(inputs.dlambda_bar_hat, n_factors) - _or_zeros(inputs.l_bar_hat, n_factors)
            + gap + inputs.eps0_hat)


def net_transfer(beta: float, p0c0: float, ngdp1: float, p1c1: float) -> float:
    """Date-0 transfer abroad, beta * P0C0 * (1 - nGDP1 / P1C1)."""
    if p1c1 == 0:
        raise ValueError("p1c1 must be nonzero")
    return beta * p0c0 * (1.0 - ngdp1 / p1c1)


# -- dated shock paths -------------------------------------------------------

@dataclass(frozen=True)
class ShockPath:
    dates: tuple
    z_hat: np.ndarray
    w_hat: np.ndarray
    pm_hat: np.ndarray
    base_period: str


BLOCKS = ("z", "w", "pm")


def shock_path_from_levels(levels: Mapping[str, Mapping[str, Mapping[str, float]]], base_period: str,
                           sectors: Sequence[str], factors: Sequence[str], imports: Sequence[str],
                           default_zero: Iterable[str] = ("w",)) -> ShockPath:
    """Deviations of dated log levels from their base-period value.

    ``levels[block][id][date]`` holds log levels for block in (z, w, pm).
    Ids missing from a block listed in ``default_zero`` get a zero path;
    any other missing id is an error.
    """
    default_zero = set(default_zero)
    unknown = set(levels) - set(BLOCKS)
    if unknown:
        raise DataError(f"unknown shock blocks {sorted(unknown)}")
    date_sets = {frozenset(s) for blk in levels.values() for s in blk.values()}
    if len(date_sets) > 1:
        raise DataError("ragged dates: series do not share the same set of dates")
    if not date_sets:
        raise DataError("no series supplied")
    dates = tuple(sorted(next(iter(date_sets))))
    if base_period not in dates:
        raise DataError(f"base period {base_period!r} missing from the series")

    def block(name, ids):
        series = levels.get(name, {})
        extra = set(series) - set(ids)
        if extra:
            raise DataError(f"unknown {name} ids {sorted(extra)}")
        out = np.zeros((len(dates), len(ids)))
        for k, ident in enumerate(ids):
            if ident not in series:
                if name in default_zero:
                    continue
                raise DataError(f"missing {name} series for {ident!r}")
            s = series[ident]
            col = np.array([s[d] for d in dates], dtype=float)
            out[:, k] = col - s[base_period]
        return out

    return ShockPath(dates=dates, z_hat=block("z", sectors), w_hat=block("w", factors),
                     pm_hat=block("pm", imports), base_period=base_period)


@dataclass(frozen=True)
class InflationSeries:
    dates: tuple
    values: np.ndarray
    short: bool = False


def price_level_path(es: ElasticitySet, path: ShockPath) -> np.ndarray:
    return np.asarray(cpi_change(es, path.z_hat, path.w_hat, path.pm_hat), dtype=float)


def lagged_difference(levels, dates: Sequence, lag: int = 4) -> InflationSeries:
    if lag < 1:
        raise ValueError("lag must be at least 1")
    levels = np.asarray(levels, dtype=float)
    if len(levels) <= lag:
        warnings.warn(f"path of length {len(levels)} is not longer than lag {lag}", RuntimeWarning,
                      stacklevel=2)
        return InflationSeries(dates=(), values=np.zeros(0), short=True)
    return InflationSeries(dates=tuple(dates[lag:]), values=levels[lag:] - levels[:-lag])


def model_inflation(es: ElasticitySet, path: ShockPath, lag: int = 4) -> InflationSeries:
    """pi_t = P_hat_t - P_hat_{t-lag}, defined where both dates exist."""
    return lagged_difference(price_level_path(es, path), path.dates, lag)


def decompose_path(es: ElasticitySet, path: ShockPath, lag: int = 4) -> dict[str, InflationSeries]:
    """Per-term contributions to model inflation, plus their total under ``inflation``."""
    parts = term_contributions(es, path.z_hat, path.w_hat, path.pm_hat)
    out = {k: lagged_difference(v, path.dates, lag) for k, v in parts.items()}
    out["inflation"] = model_inflation(es, path, lag)
    return out


def moments(series) -> tuple[float, float]:
    """Mean and sample standard deviation (n - 1 divisor)."""
    x = np.asarray(getattr(series, "values", series), dtype=float)
    if x.size == 0:
        raise ValueError("moments of an empty series")
    std = float(np.std(x, ddof=1)) if x.size > 1 else float("nan")
    return float(np.mean(x)), std
