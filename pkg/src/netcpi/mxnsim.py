"""Dynamic three-good (importable, exportable, non-tradable) small open economy.

The model has two producing sectors (N and X) with nested CES technologies
over labor, non-tradable intermediates and a tradable bundle of the
exportable good and the import. Households hold a foreign bond with a
debt-elastic interest rate and face a cash-in-advance constraint that pins
the price level. Impulse responses are first-order perfect-foresight paths
computed on one stacked linear system.

Prices enter the equilibrium conditions in logs; quantities and the foreign
asset position enter in levels because several intermediate flows are zero
in the steady state of the scenarios considered here.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .cpi import cpi_change, elasticity_set
from .errors import CalibrationError, IndeterminacyError, LinearizationError
from .iotable import IOTable

logger = logging.getLogger(__name__)

TOL_SS = 1e-10
TOL_LINEAR_SS = 1e-9

SCENARIOS = {
    # (omega_N, omega_X, omega_NX, omega_XX)
    "island": (1.0, 0.0, 0.0, 0.5),
    "network": (0.0, 1.0, 1.0, 0.5),
}
SHOCKS = ("zN", "pM")

PRICE_VARS = ("P", "E", "W", "PN", "PX", "PM", "MCN", "MCX", "PIN", "PIX", "PTN", "PTX")
QUANTITY_VARS = (
    "C", "CN", "CM", "CX", "QN", "QX", "LN", "LX", "MN", "MX",
    "MNN", "MXN", "MNT", "MXT", "MNX", "MXX", "MNM", "MXM",
)
ASSET_VARS = ("B", "istar", "i")
VARS = PRICE_VARS + QUANTITY_VARS + ASSET_VARS
IDX = {name: k for k, name in enumerate(VARS)}
NV = len(VARS)

EQUATIONS = (
    "cash_in_advance", "cpi_index", "euler_foreign", "euler_domestic",
    "lop_x", "lop_m", "zero_profit_N", "zero_profit_X", "mc_N", "mc_X",
    "int_index_N", "int_index_X", "trad_index_N", "trad_index_X",
    "demand_CN", "demand_CM", "demand_CX", "labor_N", "labor_X",
    "bundle_N", "bundle_X", "int_NN", "int_XN", "int_NT", "int_XT",
    "int_NX", "int_XX", "int_NM", "int_XM", "clear_N", "clear_L",
    "foreign_assets", "debt_elastic_rate",
)
EXOG = ("zN", "pM", "money")


@dataclass(frozen=True)
class MXNCalibration:
    """Parameters of the dynamic model; defaults are the annual calibration
    with the island scenario's intermediate shares."""

    a_N: float = 0.66
    a_X: float = 0.66
    b_N: float = 0.70
    b_X: float = 0.03
    b_M: float = 0.27
    chi: float = 1.0
    sigma: float = 2.0
    sigma_N: float = 1.0
    sigma_X: float = 1.0
    eps_N: float = 1.0
    eps_X: float = 1.0
    epsT_N: float = 1.0
    epsT_X: float = 1.0
    omega_N: float = 1.0
    omega_X: float = 0.0
    omega_NX: float = 0.0
    omega_XX: float = 0.5
    rho_zN: float = 0.53
    rho_pM: float = 0.53
    psi: float = 0.000742
    istar_bar: float = 0.04
    beta: float = 1.0 / 1.04
    B_bar: float = 0.0
    L_bar: float = 1.0

    def __post_init__(self):
        shares = {
            "a_N": self.a_N, "a_X": self.a_X, "b_N": self.b_N, "b_X": self.b_X,
            "b_M": self.b_M, "omega_N": self.omega_N, "omega_X": self.omega_X,
            "omega_NX": self.omega_NX, "omega_XX": self.omega_XX,
        }
        for name, v in shares.items():
            if not 0.0 <= v <= 1.0:
                raise CalibrationError(f"{name}={v} is not a share in [0, 1]")
        if abs(self.b_N + self.b_X + self.b_M - 1.0) > 1e-9:
            raise CalibrationError("consumption shares b_N + b_X + b_M must sum to 1")
        if abs(self.beta * (1.0 + self.istar_bar) - 1.0) > 1e-4:
            raise CalibrationError("beta * (1 + istar_bar) must equal 1 within 1e-4")
        for name in ("chi", "sigma", "sigma_N", "sigma_X", "eps_N", "eps_X", "epsT_N", "epsT_X"):
            if getattr(self, name) <= 0:
                raise CalibrationError(f"elasticity {name} must be positive")
        if self.psi < 0:
            raise CalibrationError("psi must be nonnegative")

    @classmethod
    def for_scenario(cls, scenario: str, **overrides) -> "MXNCalibration":
        try:
            wN, wX, wNX, wXX = SCENARIOS[scenario]
        except KeyError:
            raise ValueError(f"unknown scenario {scenario!r}; expected one of {sorted(SCENARIOS)}")
        params = dict(omega_N=wN, omega_X=wX, omega_NX=wNX, omega_XX=wXX)
        params.update(overrides)
        return cls(**params)


def log_ces_index(logp, weights, elasticity):
    """Log of the CES price index sum_k w_k p_k^(1-e))^(1/(1-e)) given log prices.

    The unit-elasticity case is the weighted geometric mean.
    """
    logp = np.asarray(logp, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if abs(elasticity - 1.0) < 1e-12:
        return float(weights @ logp)
    live = weights > 0
    s = np.sum(weights[live] * np.exp((1.0 - elasticity) * logp[live]))
    return float(np.log(s) / (1.0 - elasticity))


@dataclass(frozen=True)
class SteadyState:
    cal: MXNCalibration
    values: np.ndarray
    residuals: np.ndarray
    money: float

    def __getitem__(self, name: str) -> float:
        v = self.values[IDX[name]]
        return float(np.exp(v)) if name in PRICE_VARS else float(v)

    @property
    def trade_balance(self) -> float:
        """Exports minus imports at steady-state prices."""
        g = self.__getitem__
        exports = g("QX") - g("CX") - g("MXX") - g("MNX")
        imports = g("CM") + g("MNM") + g("MXM")
        return exports - imports

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals)))


def residuals(cal: MXNCalibration, y_lag, y, y_lead, u, money: float = 1.0) -> np.ndarray:
    """Stacked equilibrium conditions at one date.

    ``u`` holds log deviations of (Z_N, P*_M, money); Z_X and P*_X stay at one.
    """
    g = lambda name: y[IDX[name]]
    lag = lambda name: y_lag[IDX[name]]
    lead = lambda name: y_lead[IDX[name]]
    log_zN, log_pM_star = u[0], u[1]
    log_z = {"N": log_zN, "X": 0.0}
    a = {"N": cal.a_N, "X": cal.a_X}
    s = {"N": cal.sigma_N, "X": cal.sigma_X}
    e = {"N": cal.eps_N, "X": cal.eps_X}
    eT = {"N": cal.epsT_N, "X": cal.epsT_X}
    w = {"N": cal.omega_N, "X": cal.omega_X}
    wX = {"N": cal.omega_NX, "X": cal.omega_XX}
    b_X = 1.0 - cal.b_N - cal.b_M

    C = g("C")
    r = np.empty(NV)
    r[0] = np.log(money) + u[2] - g("P") - np.log(C)
    r[1] = g("P") - log_ces_index([g("PN"), g("PM"), g("PX")], [cal.b_N, cal.b_M, b_X], cal.chi)
    mu_now = -cal.sigma * np.log(C) - g("P")
    mu_next = -cal.sigma * np.log(lead("C")) - lead("P")
    r[2] = mu_now + g("E") - (np.log(cal.beta) + np.log1p(g("istar")) + mu_next + lead("E"))
    r[3] = mu_now - (np.log(cal.beta) + np.log1p(g("i")) + mu_next)
    r[4] = g("PX") - g("E")
    r[5] = g("PM") - g("E") - log_pM_star
    r[6] = g("PN") - g("MCN")
    r[7] = g("PX") - g("MCX")
    k = 8
    for sec in ("N", "X"):
        r[k] = g("MC" + sec) + log_z[sec] - log_ces_index([g("W"), g("PI" + sec)], [a[sec], 1 - a[sec]], s[sec])
        k += 1
    for sec in ("N", "X"):
        r[k] = g("PI" + sec) - log_ces_index([g("PN"), g("PT" + sec)], [w[sec], 1 - w[sec]], e[sec])
        k += 1
    for sec in ("N", "X"):
        r[k] = g("PT" + sec) - log_ces_index([g("PX"), g("PM")], [wX[sec], 1 - wX[sec]], eT[sec])
        k += 1
    r[k] = g("CN") - cal.b_N * np.exp(-cal.chi * (g("PN") - g("P"))) * C
    r[k + 1] = g("CM") - cal.b_M * np.exp(-cal.chi * (g("PM") - g("P"))) * C
    r[k + 2] = g("CX") - b_X * np.exp(-cal.chi * (g("PX") - g("P"))) * C
    k += 3
    for sec in ("N", "X"):
        zfac = np.exp((s[sec] - 1.0) * log_z[sec])
        r[k] = g("L" + sec) - a[sec] * np.exp(-s[sec] * (g("W") - g("MC" + sec))) * zfac * g("Q" + sec)
        k += 1
    for sec in ("N", "X"):
        zfac = np.exp((s[sec] - 1.0) * log_z[sec])
        r[k] = g("M" + sec) - (1 - a[sec]) * np.exp(-s[sec] * (g("PI" + sec) - g("MC" + sec))) * zfac * g("Q" + sec)
        k += 1
    for sec in ("N", "X"):
        r[k] = g("M" + sec + "N") - w[sec] * np.exp(-e[sec] * (g("PN") - g("PI" + sec))) * g("M" + sec)
        k += 1
    for sec in ("N", "X"):
        r[k] = g("M" + sec + "T") - (1 - w[sec]) * np.exp(-e[sec] * (g("PT" + sec) - g("PI" + sec))) * g("M" + sec)
        k += 1
    for sec in ("N", "X"):
        r[k] = g("M" + sec + "X") - wX[sec] * np.exp(-eT[sec] * (g("PX") - g("PT" + sec))) * g("M" + sec + "T")
        k += 1
    for sec in ("N", "X"):
        r[k] = g("M" + sec + "M") - (1 - wX[sec]) * np.exp(-eT[sec] * (g("PM") - g("PT" + sec))) * g("M" + sec + "T")
        k += 1
    r[k] = g("QN") - g("CN") - g("MNN") - g("MXN")
    r[k + 1] = g("LN") + g("LX") - cal.L_bar
    net_x_purchases = np.exp(g("PX")) * (g("CX") + g("MXX") + g("MNX") - g("QX"))
    imports = np.exp(g("PM")) * (g("CM") + g("MNM") + g("MXM"))
    r[k + 2] = g("B") - (1.0 + lag("istar")) * lag("B") + np.exp(-g("E")) * (net_x_purchases + imports)
    r[k + 3] = g("istar") - cal.istar_bar - cal.psi * (np.exp(cal.B_bar - g("B")) - 1.0)
    return r


def steady_state(cal: MXNCalibration) -> SteadyState:
    """Symmetric steady state: every price equals one and foreign assets sit at B_bar.

    With unit prices, household income is the wage bill plus interest on
    B_bar, so C is known; the labor and non-tradable market conditions are
    then linear in (Q_N, Q_X).
    """
    y = np.zeros(NV)
    C = cal.L_bar + cal.istar_bar * cal.B_bar
    if C <= 0:
        raise CalibrationError("steady-state consumption is not positive")
    b_X = 1.0 - cal.b_N - cal.b_M
    # intermediate share of sales spent on non-tradables, by sector
    nN = (1 - cal.a_N) * cal.omega_N
    nX = (1 - cal.a_X) * cal.omega_X
    lhs = np.array([[cal.a_N, cal.a_X], [1.0 - nN, -nX]])
    rhs = np.array([cal.L_bar, cal.b_N * C])
    try:
        QN, QX = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise CalibrationError("steady-state output system is singular") from exc
    if QN < 0 or QX < 0:
        raise CalibrationError(f"calibration implies negative output (Q_N={QN:.4g}, Q_X={QX:.4g})")

    q = {"N": QN, "X": QX}
    a = {"N": cal.a_N, "X": cal.a_X}
    w = {"N": cal.omega_N, "X": cal.omega_X}
    wX = {"N": cal.omega_NX, "X": cal.omega_XX}
    vals = {"C": C, "CN": cal.b_N * C, "CM": cal.b_M * C, "CX": b_X * C, "QN": QN, "QX": QX}
    for sec in ("N", "X"):
        Mi = (1 - a[sec]) * q[sec]
        vals["L" + sec] = a[sec] * q[sec]
        vals["M" + sec] = Mi
        vals["M" + sec + "N"] = w[sec] * Mi
        vals["M" + sec + "T"] = (1 - w[sec]) * Mi
        vals["M" + sec + "X"] = wX[sec] * (1 - w[sec]) * Mi
        vals["M" + sec + "M"] = (1 - wX[sec]) * (1 - w[sec]) * Mi
    vals["B"] = cal.B_bar
    vals["istar"] = cal.istar_bar
    vals["i"] = 1.0 / cal.beta - 1.0
    for name, v in vals.items():
        y[IDX[name]] = v
    money = C  # P = 1
    res = residuals(cal, y, y, y, np.zeros(len(EXOG)), money)
    ss = SteadyState(cal=cal, values=y, residuals=res, money=money)
    if ss.max_residual > TOL_SS:
        worst = EQUATIONS[int(np.argmax(np.abs(res)))]
        raise CalibrationError(f"steady-state residual {ss.max_residual:.3e} in {worst}")
    return ss


@dataclass(frozen=True)
class LinearSystem:
    """First-order system A_lag y_{t-1} + A_now y_t + A_lead y_{t+1} + B u_t = 0
    in deviations from the steady state."""

    A_lag: np.ndarray
    A_now: np.ndarray
    A_lead: np.ndarray
    B: np.ndarray
    ss: SteadyState


def _step(x):
    return 1e-6 * max(1.0, abs(x))


def linearize(cal: MXNCalibration, ss: SteadyState | None = None) -> LinearSystem:
    """Central finite-difference Jacobians of the residuals at the steady state."""
    if ss is None:
        ss = steady_state(cal)
    ybar = ss.values
    u0 = np.zeros(len(EXOG))
    f = lambda yl, y, yn, u: residuals(cal, yl, y, yn, u, ss.money)
    base = f(ybar, ybar, ybar, u0)
    if np.max(np.abs(base)) > TOL_LINEAR_SS:
        raise LinearizationError("steady state does not solve the dynamic system")

    jacs = []
    for slot in range(3):
        J = np.empty((NV, NV))
        for j in range(NV):
            h = _step(ybar[j])
            args_p = [ybar.copy(), ybar.copy(), ybar.copy()]
            args_m = [ybar.copy(), ybar.copy(), ybar.copy()]
            args_p[slot][j] += h
            args_m[slot][j] -= h
            J[:, j] = (f(*args_p, u0) - f(*args_m, u0)) / (2 * h)
        jacs.append(J)
    Bm = np.empty((NV, len(EXOG)))
    for j in range(len(EXOG)):
        h = _step(0.0)
        up, um = u0.copy(), u0.copy()
        up[j] += h
        um[j] -= h
        Bm[:, j] = (f(ybar, ybar, ybar, up) - f(ybar, ybar, ybar, um)) / (2 * h)
    for J in (*jacs, Bm):
        bad = ~np.isfinite(J).all(axis=1)
        if bad.any():
            raise LinearizationError(f"non-finite derivative in equation {EQUATIONS[int(np.argmax(bad))]}")
    return LinearSystem(A_lag=jacs[0], A_now=jacs[1], A_lead=jacs[2], B=Bm, ss=ss)


@dataclass
class IRF:
    """Impulse response in deviations from the steady state.

    ``paths[t, k]`` is the deviation of variable ``VARS[k]`` at date t
    (log deviation for prices, level deviation otherwise).
    """

    scenario: str
    shock: str
    size: float
    paths: np.ndarray
    ss: SteadyState
    horizon_sensitivity: float = float("nan")
    extras: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.paths[:, IDX[name]]

    @property
    def inflation(self) -> np.ndarray:
        p = self["P"]
        return np.diff(p, prepend=0.0)

    @property
    def horizon(self) -> int:
        return self.paths.shape[0]

    def series(self) -> dict[str, np.ndarray]:
        """Plot-ready named series (log deviations where the steady state is positive)."""
        out = {"pi": self.inflation, "P_hat": self["P"], "E_hat": self["E"],
               "W_hat": self["W"], "PN_hat": self["PN"], "B_star": self["B"]}
        for name in ("C", "QN", "QX", "LN", "LX"):
            out[name + "_hat"] = self[name] / self.ss[name]
        return out


def _shock_path(cal: MXNCalibration, shock: str, size: float, T: int) -> np.ndarray:
    if shock not in SHOCKS:
        raise ValueError(f"unknown shock {shock!r}; expected one of {SHOCKS}")
    rho = cal.rho_zN if shock == "zN" else cal.rho_pM
    u = np.zeros((T, len(EXOG)))
    u[:, SHOCKS.index(shock)] = size * rho ** np.arange(T)
    return u


def solve_stacked(lin: LinearSystem, u: np.ndarray) -> np.ndarray:
    """Perfect-foresight path with y_{-1} = 0 and y_T = 0, all dates solved at once."""
    T = u.shape[0]
    n = NV
    blocks = [[None] * T for _ in range(T)]
    for t in range(T):
        blocks[t][t] = sp.csr_matrix(lin.A_now)
        if t > 0:
            blocks[t][t - 1] = sp.csr_matrix(lin.A_lag)
        if t < T - 1:
            blocks[t][t + 1] = sp.csr_matrix(lin.A_lead)
    K = sp.bmat(blocks, format="csc")
    rhs = -(u @ lin.B.T).reshape(-1)
    try:
        lu = splu(K)
    except RuntimeError as exc:
        raise IndeterminacyError("stacked perfect-foresight system is singular") from exc
    y = lu.solve(rhs)
    if not np.all(np.isfinite(y)):
        raise IndeterminacyError("stacked perfect-foresight solution is not finite")
    return y.reshape(T, n)


def irf(cal: MXNCalibration, scenario: str | None = None, shock: str = "zN",
        size: float = -0.01, horizon: int = 80, check_horizon: bool = True,
        lin: LinearSystem | None = None) -> IRF:
    """Impulse response to an AR(1) path u_t = rho^t * size of one exogenous process.

    ``scenario`` replaces the intermediate-share parameters of ``cal``.
    With ``check_horizon`` the solve is repeated on twice the horizon and the
    change in the impact response is stored in ``horizon_sensitivity``.
    """
    if horizon < 40:
        raise ValueError("horizon must be at least 40 periods")
    if scenario is not None:
        wN, wX, wNX, wXX = SCENARIOS[scenario]
        cal = replace(cal, omega_N=wN, omega_X=wX, omega_NX=wNX, omega_XX=wXX)
    else:
        scenario = "custom"
    if lin is None:
        lin = linearize(cal)
    y = solve_stacked(lin, _shock_path(cal, shock, size, horizon))
    out = IRF(scenario=scenario, shock=shock, size=size, paths=y, ss=lin.ss)
    if check_horizon:
        y2 = solve_stacked(lin, _shock_path(cal, shock, size, 2 * horizon))
        out.horizon_sensitivity = float(np.max(np.abs(y2[0] - y[0])))
        if out.horizon_sensitivity > 1e-8:
            warnings.warn(
                f"impact response moves by {out.horizon_sensitivity:.2e} when the horizon doubles",
                RuntimeWarning, stacklevel=2,
            )
    return out


def mxn_iotable(cal: MXNCalibration, ss: SteadyState | None = None) -> IOTable:
    """Steady-state production network of the dynamic model as an IOTable.

    Sectors are (N, X), the single factor is labor and the single import is M.
    Shares are over steady-state consumption expenditure.
    """
    if ss is None:
        ss = steady_state(cal)
    C = ss["C"]
    a = np.array([cal.a_N, cal.a_X])
    w = np.array([cal.omega_N, cal.omega_X])
    wX = np.array([cal.omega_NX, cal.omega_XX])
    omega = np.column_stack([(1 - a) * w, (1 - a) * (1 - w) * wX])
    gamma = ((1 - a) * (1 - w) * (1 - wX))[:, None]
    exports = ss["QX"] - ss["CX"] - ss["MXX"] - ss["MNX"]
    return IOTable(
        sectors=("N", "X"), factors=("labor",), imports=("M",),
        omega=omega, factor_shares_by_sector=a[:, None], import_input_shares=gamma,
        consumption_shares_domestic=[cal.b_N, cal.b_X], consumption_shares_import=[cal.b_M],
        export_shares=[0.0, exports / C], meta={"country": "MXN-model"},
    )


def static_impact_cpi(result: IRF, cal: MXNCalibration | None = None) -> float:
    """First-order CPI response implied by the static network formula at date 0.

    Feeds the dynamic solution's impact wage and import price, and the
    impact productivity shock, into the small-open-economy network weights of
    the model's own steady-state table.
    """
    ss = result.ss
    cal = cal or ss.cal
    table = mxn_iotable(cal, ss)
    es = elasticity_set(table, variant="soe_network")
    z0 = result.size if result.shock == "zN" else 0.0
    return float(cpi_change(es, [z0, 0.0], [result["W"][0]], [result["PM"][0]]))
