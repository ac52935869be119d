"""Two-way (country, sector) fixed-effects regression.

The model is y_cs = mu + a_s + a_c + e_cs with sum-zero normalizations on
both effect blocks, so each effect is a deviation from the average effect.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DataError, IdentificationError


@dataclass(frozen=True)
class PanelObs:
    country: str
    sector: str
    y: float

    def __post_init__(self):
        if not self.country or not self.sector:
            raise DataError("panel observations need nonempty country and sector ids")
        if not np.isfinite(self.y):
            raise DataError(f"non-finite y for ({self.country}, {self.sector})")


@dataclass(frozen=True)
class FEResult:
    alpha_sector: dict
    alpha_country: dict
    intercept: float
    residuals: np.ndarray
    fitted: np.ndarray
    r2: float
    se_sector: dict
    se_country: dict
    se_intercept: float


def _index(obs):
    countries = sorted({o.country for o in obs})
    sectors = sorted({o.sector for o in obs})
    ci = {c: k for k, c in enumerate(countries)}
    si = {s: k for k, s in enumerate(sectors)}
    c_idx = np.array([ci[o.country] for o in obs])
    s_idx = np.array([si[o.sector] for o in obs])
    y = np.array([o.y for o in obs], dtype=float)
    return countries, sectors, c_idx, s_idx, y


def design_components(obs: Iterable[PanelObs]) -> list[tuple[list[str], list[str]]]:
    """Connected components of the bipartite country-sector graph, as (countries, sectors)."""
    obs = list(obs)
    countries, sectors, c_idx, s_idx, _ = _index(obs)
    C, S = len(countries), len(sectors)
    g = coo_matrix((np.ones(len(obs)), (c_idx, C + s_idx)), shape=(C + S, C + S))
    n, labels = connected_components(g, directed=False)
    comps = []
    for k in range(n):
        members = np.flatnonzero(labels == k)
        comps.append(([countries[m] for m in members if m < C],
                      [sectors[m - C] for m in members if m >= C]))
    return comps


def _sum_zero_basis(n: int) -> np.ndarray:
    """n x (n-1) basis of the sum-zero subspace (effects coding)."""
    B = np.zeros((n, n - 1))
    B[: n - 1] = np.eye(n - 1)
    B[n - 1] = -1.0
    return B


def fit_two_way_fe(obs: Iterable[PanelObs]) -> FEResult:
    """Least squares with an intercept and sum-zero sector and country effects.

    The constraints are imposed by projecting each effect block onto the
    sum-zero subspace, and the reduced normal equations are solved directly.
    """
    obs = list(obs)
    countries, sectors, c_idx, s_idx, y = _index(obs)
    C, S, n = len(countries), len(sectors), len(obs)
    if C < 2 or S < 2:
        raise IdentificationError("need at least two countries and two sectors")
    comps = design_components(obs)
    if len(comps) > 1:
        listing = "; ".join(f"{{{', '.join(cs + ss)}}}" for cs, ss in comps)
        raise IdentificationError(f"design is disconnected into {len(comps)} components: {listing}")

    Bs, Bc = _sum_zero_basis(S), _sum_zero_basis(C)
    X = np.hstack([np.ones((n, 1)), Bs[s_idx], Bc[c_idx]])
    p = X.shape[1]
    if n < p:
        raise IdentificationError(f"{n} observations for {p} free parameters")
    XtX = X.T @ X
    if np.linalg.matrix_rank(XtX) < p:
        raise IdentificationError("design matrix is rank deficient")
    beta = np.linalg.solve(XtX, X.T @ y)

    fitted = X @ beta
    resid = y - fitted
    # T maps free parameters to (intercept, all sector effects, all country effects)
    T = np.zeros((1 + S + C, p))
    T[0, 0] = 1.0
    T[1:1 + S, 1:S] = Bs
    T[1 + S:, S:] = Bc
    theta = T @ beta
    dof = n - p
    s2 = float(resid @ resid) / dof if dof > 0 else float("nan")
    cov = s2 * T @ np.linalg.inv(XtX) @ T.T
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / tss if tss > 0 else 1.0
    return FEResult(
        alpha_sector=dict(zip(sectors, theta[1:1 + S].tolist())),
        alpha_country=dict(zip(countries, theta[1 + S:].tolist())),
        intercept=float(theta[0]), residuals=resid, fitted=fitted, r2=r2,
        se_sector=dict(zip(sectors, se[1:1 + S].tolist())),
        se_country=dict(zip(countries, se[1 + S:].tolist())),
        se_intercept=float(se[0]),
    )


def rank_fixed_effects(result: FEResult, which: str = "country", top_k: int | None = None) -> list:
    """Effects sorted by value, largest first; ties broken by id."""
    if which == "country":
        effects = result.alpha_country
    elif which == "sector":
        effects = result.alpha_sector
    else:
        raise ValueError("which must be 'country' or 'sector'")
    ranked = sorted(effects.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked if top_k is None else ranked[:top_k]
