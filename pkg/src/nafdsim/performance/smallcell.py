"""Full-duplex small-cell baseline: every UE is served by exactly one AP.

The desired signal comes from the home AP only; interference and noise keep
the cell-free expressions restricted to what each AP actually transmits or
combines, i.e. the cell-free evaluator with coefficients masked to the
UE-AP association.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nafdsim.channel import LargeScaleModel
from nafdsim.errors import ContractError
from nafdsim.performance.closed_form import evaluate_se
from nafdsim.performance.power import fractional_theta
from nafdsim.performance.types import DuplexAssignment, PowerAllocation, SEReport
from nafdsim.precoding import GroupingAssignment, build_grouping


@dataclass(frozen=True)
class SmallCellAssociation:
    dl_home: np.ndarray
    ul_home: np.ndarray

    def serve_masks(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        dl = np.zeros((m, self.dl_home.size), dtype=bool)
        ul = np.zeros((m, self.ul_home.size), dtype=bool)
        dl[self.dl_home, np.arange(self.dl_home.size)] = True
        ul[self.ul_home, np.arange(self.ul_home.size)] = True
        return dl, ul


def associate(ls: LargeScaleModel) -> SmallCellAssociation:
    """Each UE picks the AP with the largest large-scale gain (ties: lowest AP index)."""
    return SmallCellAssociation(np.argmax(ls.beta_dl, axis=0), np.argmax(ls.beta_ul, axis=0))


def _check_association(assoc: SmallCellAssociation, ls: LargeScaleModel):
    for name, home, k in (("dl_home", assoc.dl_home, ls.n_dl), ("ul_home", assoc.ul_home, ls.n_ul)):
        home = np.asarray(home)
        if home.shape != (k,):
            raise ContractError(name, f"expected one serving AP per UE ({k}), got shape {home.shape}")
        if np.any(home < 0) or np.any(home >= ls.n_aps):
            raise ContractError(name, "unmapped UE (serving AP index out of range)")


def smallcell_grouping(ls: LargeScaleModel, assoc: SmallCellAssociation, upsilon: float, n: int,
                       mode: str = "PZF") -> GroupingAssignment:
    """PZF grouping where each AP only considers the UEs it serves."""
    _check_association(assoc, ls)
    serve_dl, serve_ul = assoc.serve_masks(ls.n_aps)
    return build_grouping(ls.beta_dl, ls.beta_ul, upsilon, n, mode, serve_dl, serve_ul)


def smallcell_power(ls: LargeScaleModel, assoc: SmallCellAssociation, grouping: GroupingAssignment,
                    rho_d: float, rho_u: float, exponent: float = 0.0) -> PowerAllocation:
    serve_dl, serve_ul = assoc.serve_masks(ls.n_aps)
    theta = fractional_theta(ls.gamma_dl, grouping, np.ones(ls.n_aps), exponent, serve=serve_dl)
    return PowerAllocation(theta, np.ones(ls.n_ul), serve_ul.astype(float), rho_d, rho_u)


def smallcell_se(ls: LargeScaleModel, assoc: SmallCellAssociation, power: PowerAllocation,
                 grouping: GroupingAssignment) -> SEReport:
    """SE of the FD small-cell network; coefficients off the association are ignored."""
    _check_association(assoc, ls)
    serve_dl, serve_ul = assoc.serve_masks(ls.n_aps)
    masked = PowerAllocation(np.where(serve_dl, power.theta, 0.0), power.varsigma,
                             np.where(serve_ul, power.alpha, 0.0), power.rho_d, power.rho_u)
    report = evaluate_se(ls, grouping, DuplexAssignment.fd(ls.n_aps), masked)
    report.structure = "SMALLCELL"
    return report
