"""Random valid inputs for property tests, acceptance checks and experiments."""

from __future__ import annotations

import numpy as np

from .iotable import IOTable
from .panelfe import PanelObs


def fixture_table() -> IOTable:
    """Two sectors, one factor, one import; small enough to check by hand."""
    return IOTable(
        sectors=("s1", "s2"), factors=("labor",), imports=("m1",),
        omega=[[0.2, 0.1], [0.0, 0.3]],
        factor_shares_by_sector=[[0.5], [0.4]],
        import_input_shares=[[0.2], [0.3]],
        consumption_shares_domestic=[0.3, 0.4],
        consumption_shares_import=[0.3],
        export_shares=[0.1, 0.05],
        meta={"country": "FIX", "year": 2014},
    )


def random_table(rng: np.random.Generator, n_sectors: int, n_factors: int, n_imports: int,
                 density: float = 0.7, min_factor_share: float = 0.05,
                 max_export: float = 0.4, closed: bool = False) -> IOTable:
    """Random table satisfying every accounting identity.

    Raw factor weights are at least ``min_factor_share`` before
    normalization, so every omega row sums to less than one and omega is
    productive.
    ``closed`` drops imports and exports.
    """
    N, F = n_sectors, n_factors
    M = 0 if closed else n_imports
    raw_d = rng.random((N, N)) * (rng.random((N, N)) < density)
    raw_m = rng.random((N, M)) * (rng.random((N, M)) < density)
    raw_f = rng.random((N, F)) + min_factor_share
    total = raw_d.sum(1) + raw_m.sum(1) + raw_f.sum(1)
    scale = (1.0 / total)[:, None]
    omega, gamma, A = raw_d * scale, raw_m * scale, raw_f * scale
    c = rng.dirichlet(np.ones(N + M))
    x = np.zeros(N) if closed else rng.random(N) * max_export
    return IOTable(
        sectors=tuple(f"s{i}" for i in range(N)), factors=tuple(f"f{k}" for k in range(F)),
        imports=tuple(f"m{k}" for k in range(M)),
        omega=omega, factor_shares_by_sector=A, import_input_shares=gamma,
        consumption_shares_domestic=c[:N], consumption_shares_import=c[N:], export_shares=x,
        meta={"country": "RND"},
    )


def random_dims(rng: np.random.Generator, max_n: int, max_f: int, max_m: int) -> tuple[int, int, int]:
    return int(rng.integers(1, max_n + 1)), int(rng.integers(1, max_f + 1)), int(rng.integers(1, max_m + 1))


def random_panel(rng: np.random.Generator, n_countries: int, n_sectors: int, fill: float = 0.6,
                 noise: float = 0.0, intercept: float | None = None):
    """Unbalanced connected panel with planted sum-zero effects.

    Returns (observations, intercept, sector effects, country effects).
    Every country is observed in the first sector and every sector in the
    first country, which keeps the design connected.
    """
    countries = [f"C{k:02d}" for k in range(n_countries)]
    sectors = [f"S{k:02d}" for k in range(n_sectors)]
    a_c = rng.normal(size=n_countries)
    a_c -= a_c.mean()
    a_s = rng.normal(size=n_sectors)
    a_s -= a_s.mean()
    mu = float(rng.normal()) if intercept is None else intercept
    obs = []
    for i, c in enumerate(countries):
        for j, s in enumerate(sectors):
            if i == 0 or j == 0 or rng.random() < fill:
                y = mu + a_s[j] + a_c[i] + (noise * rng.normal() if noise else 0.0)
                obs.append(PanelObs(c, s, float(y)))
    return obs, mu, dict(zip(sectors, a_s)), dict(zip(countries, a_c))
