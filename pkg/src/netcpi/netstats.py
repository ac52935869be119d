"""Export- and network-adjusted sales, factor and import shares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .iotable import DerivedStats, IOTable, derive

NO_NETWORK_MODES = ("raw", "reallocated")


@dataclass(frozen=True)
class AdjustedShares:
    """Sector, factor and import weights of one table.

    ``domar`` is sales over E. The export adjustment removes direct
    exports; the network adjustment also removes sales embodied in exports
    through downstream production.
    """

    domar: np.ndarray
    domar_export_adj: np.ndarray
    domar_network_adj: np.ndarray
    factor: np.ndarray
    factor_export_adj: np.ndarray
    factor_network_adj: np.ndarray
    import_direct: np.ndarray
    import_network_adj: np.ndarray
    export_content_of_factors: np.ndarray


def adjusted_shares(table: IOTable, stats: DerivedStats | None = None) -> AdjustedShares:
    if stats is None:
        stats = derive(table)
    psi, lam, Lam = stats.psi, stats.lam, stats.Lam
    x_psi = table.x @ psi
    export_content = x_psi @ table.A
    return AdjustedShares(
        domar=lam.copy(),
        domar_export_adj=lam - table.x,
        domar_network_adj=lam - x_psi,
        factor=Lam.copy(),
        factor_export_adj=Lam - table.x @ table.A,
        factor_network_adj=Lam - export_content,
        import_direct=table.b_m.copy(),
        import_network_adj=table.b_m + table.b_d @ psi @ table.gamma,
        export_content_of_factors=export_content,
    )


def _reallocate(table: IOTable) -> IOTable:
    """Drop domestic intermediates and rescale factor and import rows to keep zero profits."""
    keep = 1.0 - table.omega.sum(axis=1)
    scale = np.divide(1.0, keep, out=np.zeros_like(keep), where=keep > 0)
    return table.replace(
        omega=np.zeros_like(table.omega),
        factor_shares_by_sector=table.A * scale[:, None],
        import_input_shares=table.gamma * scale[:, None],
    )


def no_network_counterfactual(table: IOTable, mode: str = "raw",
                              stats: DerivedStats | None = None) -> AdjustedShares:
    """Adjusted shares computed as if domestic input-output links were absent.

    ``raw`` keeps the observed sales and factor shares and sets the
    Leontief inverse to the identity. ``reallocated`` sets omega to zero,
    rescales factor and import rows so they still sum to one, and recomputes
    everything from that table.
    """
    if mode == "reallocated":
        return adjusted_shares(_reallocate(table))
    if mode != "raw":
        raise ValueError(f"unknown mode {mode!r}; expected one of {NO_NETWORK_MODES}")
    if stats is None:
        stats = derive(table)
    lam, Lam = stats.lam, stats.Lam
    x_a = table.x @ table.A
    return AdjustedShares(
        domar=lam.copy(),
        domar_export_adj=lam - table.x,
        domar_network_adj=lam - table.x,
        factor=Lam.copy(),
        factor_export_adj=Lam - x_a,
        factor_network_adj=Lam - x_a,
        import_direct=table.b_m.copy(),
        import_network_adj=table.b_m + table.b_d @ table.gamma,
        export_content_of_factors=x_a,
    )
