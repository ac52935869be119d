"""Endogenous factor shares, sales shares and factor prices under CES demand.

Given shocks to productivity, import prices, export quantities, factor
supplies and money, the first-order system pins down factor price changes,
changes in sales and factor shares, domestic price changes and export
share changes together.

Producer inputs are ordered (domestic goods, imports, factors) and consumer
goods (domestic goods, imports).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cpi import Prop3Inputs, cpi_prop3
from .errors import DataError, IndeterminacyError, StructuralError
from .iotable import DerivedStats, IOTable, check_shapes, derive

RCOND_MIN = 1e-12


@dataclass(frozen=True)
class ElasticityParams:
    """Single-nest CES elasticities: ``theta_c`` for the consumer, ``theta_i`` per producer."""

    theta_c: float
    theta_i: np.ndarray

    def __post_init__(self):
        theta_i = np.atleast_1d(np.asarray(self.theta_i, dtype=float))
        object.__setattr__(self, "theta_i", theta_i)
        if not self.theta_c > 0 or np.any(~(theta_i > 0)):
            raise ValueError("elasticities must be positive")

    @classmethod
    def uniform(cls, theta: float, n_sectors: int) -> "ElasticityParams":
        return cls(theta_c=theta, theta_i=np.full(n_sectors, float(theta)))


@dataclass(frozen=True)
class SubstitutionMatrices:
    """Direct substitution matrices.

    ``consumer`` is the (N+M)x(N+M) matrix phi^C_{ik}; ``producer[i]`` the
    KxK matrix phi^i_{jk} of sector i with K = N+M+F. The named blocks are
    the aggregates entering the share system.
    """

    consumer: np.ndarray
    producer: np.ndarray
    phi_c_d: np.ndarray
    phi_c_m: np.ndarray
    phi_d: np.ndarray
    phi_m: np.ndarray
    phi_f: np.ndarray
    phi_f_d: np.ndarray
    phi_f_f: np.ndarray
    phi_f_m: np.ndarray


def ces_elasticities(table: IOTable, params: ElasticityParams) -> tuple[np.ndarray, np.ndarray]:
    """Demand elasticities eps^C (consumer) and eps^i (per producer) under single-nest CES."""
    N = len(table.sectors)
    if params.theta_i.shape != (N,):
        raise StructuralError(f"theta_i must have length {N}")
    b = np.concatenate([table.b_d, table.b_m])
    eps_c = params.theta_c * (b[None, :] - np.eye(len(b)))
    s = np.hstack([table.omega, table.gamma, table.A])
    K = s.shape[1]
    eps_p = params.theta_i[:, None, None] * (s[:, None, :] - np.eye(K)[None, :, :])
    return eps_c, eps_p


def substitution_matrices(table: IOTable, params: ElasticityParams | None = None,
                          stats: DerivedStats | None = None, eps_consumer=None,
                          eps_producer=None) -> SubstitutionMatrices:
    """Build phi matrices from CES parameters or from user-supplied elasticity tensors.

    phi^C_{ik} = delta_ik + eps^C_{ik} - b_k and phi^i_{jk} = delta_jk + eps^i_{jk} - s_ik.
    """
    check_shapes(table)
    if stats is None:
        stats = derive(table)
    N, F, M = table.shape
    if (eps_consumer is None) != (eps_producer is None):
        raise ValueError("supply both elasticity tensors or neither")
    if eps_consumer is None:
        if params is None:
            raise ValueError("either params or elasticity tensors are required")
        eps_consumer, eps_producer = ces_elasticities(table, params)
    eps_c = np.asarray(eps_consumer, dtype=float)
    eps_p = np.asarray(eps_producer, dtype=float)
    K = N + M + F
    if eps_c.shape != (N + M, N + M) or eps_p.shape != (N, K, K):
        raise StructuralError("elasticity tensors have the wrong shape")

    b = np.concatenate([table.b_d, table.b_m])
    phi_c = np.eye(N + M) + eps_c - b[None, :]
    s = np.hstack([table.omega, table.gamma, table.A])
    phi_p = np.eye(K)[None, :, :] + eps_p - s[:, None, :]

    lam = stats.lam
    dsl, msl, fsl = slice(0, N), slice(N, N + M), slice(N + M, K)
    # phi_{ik} = sum_j omega_ji lam_j phi^j_{ik}; phi_{fk} = sum_i a_if lam_i phi^i_{fk}
    wd = table.omega * lam[:, None]  # [j, i]
    wf = table.A * lam[:, None]  # [i, f]
    agg_d = np.einsum("ji,jik->ik", wd, phi_p[:, dsl, :])
    agg_f = np.einsum("if,ifk->fk", wf, phi_p[:, fsl, :])
    return SubstitutionMatrices(
        consumer=phi_c, producer=phi_p,
        phi_c_d=phi_c[:N, :N], phi_c_m=phi_c[:N, N:],
        phi_d=agg_d[:, dsl], phi_m=agg_d[:, msl], phi_f=agg_d[:, fsl],
        phi_f_d=agg_f[:, dsl], phi_f_f=agg_f[:, fsl], phi_f_m=agg_f[:, msl],
    )


@dataclass(frozen=True)
class ShareShocks:
    """Log changes of productivity, import prices, export quantities, factor supplies and money."""

    z_hat: np.ndarray
    pm_hat: np.ndarray
    x_hat: np.ndarray
    l_bar_hat: np.ndarray
    m_hat: float = 0.0

    @classmethod
    def zeros(cls, table: IOTable) -> "ShareShocks":
        N, F, M = table.shape
        return cls(np.zeros(N), np.zeros(M), np.zeros(N), np.zeros(F), 0.0)

    def scaled(self, k: float) -> "ShareShocks":
        return ShareShocks(k * self.z_hat, k * self.pm_hat, k * self.x_hat, k * self.l_bar_hat,
                           k * self.m_hat)


def _as_shocks(table, shocks) -> ShareShocks:
    N, F, M = table.shape
    if isinstance(shocks, ShareShocks):
        d = dict(z_hat=shocks.z_hat, pm_hat=shocks.pm_hat, x_hat=shocks.x_hat,
                 l_bar_hat=shocks.l_bar_hat, m_hat=shocks.m_hat)
    else:
        d = dict(shocks)
    sizes = {"z_hat": N, "pm_hat": M, "x_hat": N, "l_bar_hat": F}
    out = {}
    for name, n in sizes.items():
        v = d.get(name)
        arr = np.zeros(n) if v is None else np.atleast_1d(np.asarray(v, dtype=float))
        if arr.shape != (n,):
            raise StructuralError(f"{name} must have length {n}")
        out[name] = arr
    out["m_hat"] = float(d.get("m_hat", 0.0) or 0.0)
    return ShareShocks(**out)


@dataclass(frozen=True)
class ShareSystemSolution:
    w_hat: np.ndarray
    dlambda_bar: np.ndarray
    dLambda_bar: np.ndarray
    p_d_hat: np.ndarray
    dx_bar: np.ndarray
    shocks: ShareShocks
    transfer_change: float
    rcond: float


def _unknown_slices(N, F):
    return dict(dLambda=slice(0, F), w=slice(F, 2 * F), dlam=slice(2 * F, 2 * F + N),
                p=slice(2 * F + N, 2 * F + 2 * N), dx=slice(2 * F + 2 * N, 2 * F + 3 * N))


def assemble_share_system(table: IOTable, stats: DerivedStats, phi: SubstitutionMatrices,
                          shocks: ShareShocks) -> tuple[np.ndarray, np.ndarray]:
    """Dense (2F+3N) square system K u = r in unknowns (dLambda, w, dlambda, P_D, dx)."""
    N, F, M = table.shape
    n = 2 * F + 3 * N
    sl = _unknown_slices(N, F)
    psi, lam, Lam = stats.psi, stats.lam, stats.Lam
    K = np.zeros((n, n))
    r = np.zeros(n)
    I_N, I_F = np.eye(N), np.eye(F)
    rows = _unknown_slices(N, F)  # equation k is written in the rows of unknown block k

    # (1) factor shares
    e = rows["dLambda"]
    K[e, sl["dLambda"]] = I_F
    K[e, sl["p"]] = -phi.phi_f_d
    K[e, sl["w"]] = -phi.phi_f_f
    K[e, sl["dlam"]] = -table.A.T
    r[e] = phi.phi_f_m @ shocks.pm_hat

    # (2) sales shares; Psi^T multiplies every term of the goods-market differential
    e = rows["dlam"]
    bd = np.diag(table.b_d)
    K[e, sl["dlam"]] = I_N
    K[e, sl["p"]] = -psi.T @ (bd @ phi.phi_c_d + phi.phi_d)
    K[e, sl["dx"]] = -psi.T
    K[e, sl["w"]] = -psi.T @ phi.phi_f
    r[e] = psi.T @ ((bd @ phi.phi_c_m + phi.phi_m) @ shocks.pm_hat)

    # (3) domestic prices
    e = rows["p"]
    K[e, sl["p"]] = I_N
    K[e, sl["w"]] = -psi @ table.A
    r[e] = -psi @ shocks.z_hat + psi @ table.gamma @ shocks.pm_hat

    # (4) factor market clearing in share form
    e = rows["w"]
    K[e, sl["dLambda"]] = I_F
    K[e, sl["w"]] = -np.diag(Lam)
    r[e] = Lam * (shocks.l_bar_hat - shocks.m_hat)

    # (5) export shares
    e = rows["dx"]
    K[e, sl["dx"]] = I_N
    K[e, sl["p"]] = -np.diag(table.x)
    r[e] = table.x * (shocks.x_hat - shocks.m_hat)
    return K, r


def transfer_change_from_trade(table: IOTable, stats: DerivedStats, phi: SubstitutionMatrices,
                               sol_p_d, sol_w, dlambda_bar, dx_bar, shocks: ShareShocks) -> float:
    """dT/M computed from the trade balance rather than from factor shares.

    T/E = sum(x) - sum(b_M) - lam . gamma 1, and E moves one for one with money.
    """
    N, F, M = table.shape
    prices_c = np.concatenate([sol_p_d, shocks.pm_hat])
    db_m = table.b_m * (phi.consumer[N:, :] @ prices_c)
    prices_p = np.concatenate([sol_p_d, shocks.pm_hat, sol_w])
    # d gamma_im = gamma_im * sum_k phi^i_{mk} P_k
    dgamma = table.gamma * np.einsum("imk,k->im", phi.producer[:, N:N + M, :], prices_p)
    d_tb = dx_bar.sum() - db_m.sum() - dlambda_bar @ table.gamma.sum(axis=1) \
        - stats.lam @ dgamma.sum(axis=1)
    tb = table.x.sum() - table.b_m.sum() - stats.lam @ table.gamma.sum(axis=1)
    return float(d_tb + tb * shocks.m_hat)


def solve_share_system(table: IOTable, params: ElasticityParams | None, shocks,
                       stats: DerivedStats | None = None,
                       phi: SubstitutionMatrices | None = None) -> ShareSystemSolution:
    """Solve the stacked first-order share system with one dense LU factorization."""
    if stats is None:
        stats = derive(table)
    if phi is None:
        phi = substitution_matrices(table, params, stats)
    shocks = _as_shocks(table, shocks)
    N, F, M = table.shape
    K, r = assemble_share_system(table, stats, phi, shocks)
    rcond = 1.0 / np.linalg.cond(K, 1)
    if not rcond >= RCOND_MIN:
        raise IndeterminacyError(f"share system is singular (rcond {rcond:.3e})", rcond=rcond)
    u = np.linalg.solve(K, r)
    sl = _unknown_slices(N, F)
    w, p, dlam, dx = u[sl["w"]], u[sl["p"]], u[sl["dlam"]], u[sl["dx"]]
    dT = transfer_change_from_trade(table, stats, phi, p, w, dlam, dx, shocks)
    return ShareSystemSolution(
        w_hat=w, dlambda_bar=dlam, dLambda_bar=u[sl["dLambda"]], p_d_hat=p, dx_bar=dx,
        shocks=shocks, transfer_change=dT, rcond=float(rcond),
    )


def share_system_residuals(table: IOTable, stats: DerivedStats, phi: SubstitutionMatrices,
                           sol: ShareSystemSolution) -> dict[str, np.ndarray]:
    """Residual of each of the five equations, written out independently of the assembly."""
    sh = sol.shocks
    psi = stats.psi
    bd = np.diag(table.b_d)
    goods = (bd @ phi.phi_c_d + phi.phi_d) @ sol.p_d_hat + (bd @ phi.phi_c_m + phi.phi_m) @ sh.pm_hat \
        + sol.dx_bar + phi.phi_f @ sol.w_hat
    return {
        "factor_shares": sol.dLambda_bar - (phi.phi_f_d @ sol.p_d_hat + phi.phi_f_f @ sol.w_hat
                                            + phi.phi_f_m @ sh.pm_hat + table.A.T @ sol.dlambda_bar),
        "sales_shares": sol.dlambda_bar - psi.T @ goods,
        "prices": sol.p_d_hat - (-psi @ sh.z_hat + psi @ table.A @ sol.w_hat
                                 + psi @ table.gamma @ sh.pm_hat),
        "factor_market": sol.dLambda_bar - stats.Lam * (sol.w_hat + sh.l_bar_hat - sh.m_hat),
        "exports": sol.dx_bar - table.x * (sol.p_d_hat + sh.x_hat - sh.m_hat),
    }


def prop3_from_solution(table: IOTable, stats: DerivedStats | None, solution: ShareSystemSolution,
                        dT_over_M: float | None = None, m_hat: float | None = None) -> float:
    """CPI change from the solved factor-share changes.

    The transfer defaults to the trade-balance value computed with the solution.
    """
    if stats is None:
        stats = derive(table)
    Lam = stats.Lam
    if np.any(Lam == 0):
        raise DataError("log change of a zero aggregate factor share is undefined")
    sh = solution.shocks
    inputs = Prop3Inputs(
        dlambda_bar_hat=solution.dLambda_bar / Lam, l_bar_hat=sh.l_bar_hat,
        dT_over_M=solution.transfer_change if dT_over_M is None else dT_over_M,
        m_hat=sh.m_hat if m_hat is None else m_hat, z_hat=sh.z_hat, pm_hat=sh.pm_hat,
    )
    return cpi_prop3(table, stats, inputs)
