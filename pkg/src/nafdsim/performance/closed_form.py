"""Closed-form DL/UL spectral efficiency for NAFD, FD and HD cell-free networks.

Both directions use the use-and-then-forget bound. Every term is an exact
expectation over the Rayleigh/MMSE model given the PZF grouping:

* a ZF precoder for UE k' nulls the estimate of every other strong UE, so a
  victim in the same strong set only sees the estimation-error part
  ``beta - gamma`` of its channel;
* every other victim sees its full channel ``beta``;
* the interferer's precoder carries E||v||^2 = gamma/(N-|S|) (ZF) or N*gamma (MRT).

``leakage="table"`` instead sizes each leakage term by the *victim's* group
(the compact tabulated form). The two agree whenever an AP uses a single
scheme for all UEs (pure ZF or pure MRT), and differ for mixed groups.
"""
from __future__ import annotations

import numpy as np

from nafdsim.channel import LargeScaleModel
from nafdsim.errors import ContractError
from nafdsim.performance.power import dl_utilization, expected_gains, expected_norms
from nafdsim.performance.types import DuplexAssignment, PowerAllocation, SEReport
from nafdsim.precoding import GroupingAssignment

LEAKAGE_MODES = ("exact", "table")
_BUDGET_TOL = 1e-9


def _check_inputs(structure: str, ls: LargeScaleModel, grouping: GroupingAssignment,
                  duplex: DuplexAssignment, power: PowerAllocation, leakage: str):
    if structure.upper() != duplex.structure:
        raise ContractError("structure", f"{structure!r} does not match duplex structure "
                                         f"{duplex.structure!r}")
    if leakage not in LEAKAGE_MODES:
        raise ContractError("leakage", f"unknown leakage mode {leakage!r}")
    m, k_d, k_u = ls.n_aps, ls.n_dl, ls.n_ul
    if duplex.n_aps != m:
        raise ContractError("duplex", f"expected {m} APs, got {duplex.n_aps}")
    if grouping.strong_dl.shape != (m, k_d) or grouping.strong_ul.shape != (m, k_u):
        raise ContractError("grouping", "mask shapes do not match the large-scale model")
    if power.theta.shape != (m, k_d):
        raise ContractError("theta", f"expected shape {(m, k_d)}, got {power.theta.shape}")
    if power.alpha.shape != (m, k_u):
        raise ContractError("alpha", f"expected shape {(m, k_u)}, got {power.alpha.shape}")
    util = dl_utilization(power.theta, ls.gamma_dl, grouping)
    over = (duplex.a == 1) & (util > 1 + _BUDGET_TOL)
    if np.any(over):
        raise ContractError("theta", f"per-AP power budget exceeded at APs {np.flatnonzero(over)}")


def _log_se(prelog: float, num: np.ndarray, den: np.ndarray) -> np.ndarray:
    sinr = np.zeros_like(num)
    np.divide(num, den, out=sinr, where=num > 0)
    return prelog * np.log2(1.0 + sinr)


def dl_terms(ls: LargeScaleModel, grouping: GroupingAssignment, duplex: DuplexAssignment,
             power: PowerAllocation, leakage: str = "exact") -> dict[str, np.ndarray]:
    n = grouping.n_antennas
    a = duplex.a.astype(float)
    strong = grouping.strong_dl
    beta, gamma = ls.beta_dl, ls.gamma_dl
    theta2 = power.theta**2
    norms = expected_norms(gamma, strong, n)
    gains = expected_gains(gamma, strong, n)

    desired = np.sqrt(power.rho_d) * np.sum(a[:, None] * power.theta * gains, axis=0)

    # Leakage from AP m's precoder for k' onto victim k, indexed [m, k, k'].
    if leakage == "exact":
        load = np.broadcast_to((theta2 * norms)[:, None, :], strong.shape + (strong.shape[1],))
        nulled = strong[:, :, None] & strong[:, None, :]
    else:
        size = strong.sum(axis=1)[:, None, None]
        victim_norm = np.where(strong[:, :, None], gamma[:, None, :] / np.maximum(n - size, 1),
                               n * gamma[:, None, :])
        load = theta2[:, None, :] * victim_norm
        nulled = np.broadcast_to(strong[:, :, None], load.shape)
    channel = beta[:, :, None] - np.where(nulled, gamma[:, :, None], 0.0)
    leak = power.rho_d * a[:, None, None] * load * channel
    per_pair = leak.sum(axis=0)
    self_term = np.diagonal(per_pair).copy()
    inter = per_pair.sum(axis=1) - self_term
    est_error = power.rho_d * np.sum(a[:, None, None] * load * (beta - gamma)[:, :, None], axis=(0, 2))

    if duplex.cross_link:
        ul_to_dl = power.rho_u * ls.beta_du @ power.varsigma
    else:
        ul_to_dl = np.zeros(ls.n_dl)
    return {"desired": desired, "self": self_term, "inter_ue": inter, "ul_to_dl": ul_to_dl,
            "est_error": est_error, "noise": np.ones(ls.n_dl)}


def ul_terms(ls: LargeScaleModel, grouping: GroupingAssignment, duplex: DuplexAssignment,
             power: PowerAllocation, leakage: str = "exact") -> dict[str, np.ndarray]:
    n = grouping.n_antennas
    a = duplex.a.astype(float)
    b = duplex.b.astype(float)
    strong = grouping.strong_ul
    beta, gamma = ls.beta_ul, ls.gamma_ul
    alpha = power.alpha
    vs = power.varsigma

    norms = expected_norms(gamma, strong, n)
    gains = expected_gains(gamma, strong, n)
    desired = np.sqrt(power.rho_u * vs) * np.sum(alpha * b[:, None] * gains, axis=0)

    # Combiner energy of AP m for UE l, weighted by the CPU decoding weight.
    weight = alpha**2 * b[:, None] * norms
    if leakage == "exact":
        nulled = strong[:, :, None] & strong[:, None, :]
    else:
        nulled = np.broadcast_to(strong[:, :, None], strong.shape + (strong.shape[1],))
    channel = beta[:, None, :] - np.where(nulled, gamma[:, None, :], 0.0)
    per_pair = power.rho_u * np.einsum("ml,mlj,j->lj", weight, channel, vs)
    self_term = np.diagonal(per_pair).copy()
    inter = per_pair.sum(axis=1) - self_term
    noise = weight.sum(axis=0)
    est_error = power.rho_u * weight.T @ ((beta - gamma) @ vs)

    if duplex.cross_link:
        dl_norms = expected_norms(ls.gamma_dl, grouping.strong_dl, n)
        radiated = power.rho_d * a * np.sum(power.theta**2 * dl_norms, axis=1)
        ap = ls.beta_ap * radiated[None, :]
        si = np.diag(ap).copy()
        phi_si = weight.T @ si
        phi_iap = weight.T @ (ap.sum(axis=1) - si)
    else:
        phi_si = np.zeros(ls.n_ul)
        phi_iap = np.zeros(ls.n_ul)
    return {"desired": desired, "self": self_term, "inter_ue": inter, "noise": noise,
            "est_error": est_error, "phi_iap": phi_iap, "phi_si": phi_si}


def dl_se_closed_form(structure: str, ls: LargeScaleModel, grouping: GroupingAssignment,
                      duplex: DuplexAssignment, power: PowerAllocation,
                      leakage: str = "exact") -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Per-DL-UE SE and its term breakdown."""
    _check_inputs(structure, ls, grouping, duplex, power, leakage)
    t = dl_terms(ls, grouping, duplex, power, leakage)
    den = t["self"] + t["inter_ue"] + t["ul_to_dl"] + t["noise"]
    se = _log_se(duplex.prelog_dl * ls.training_prelog, t["desired"] ** 2, den)
    return se, t


def ul_se_closed_form(structure: str, ls: LargeScaleModel, grouping: GroupingAssignment,
                      duplex: DuplexAssignment, power: PowerAllocation,
                      leakage: str = "exact") -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Per-UL-UE SE and its term breakdown."""
    _check_inputs(structure, ls, grouping, duplex, power, leakage)
    t = ul_terms(ls, grouping, duplex, power, leakage)
    den = t["self"] + t["inter_ue"] + t["noise"] + t["phi_iap"] + t["phi_si"]
    se = _log_se(duplex.prelog_ul * ls.training_prelog, t["desired"] ** 2, den)
    return se, t


def evaluate_se(ls: LargeScaleModel, grouping: GroupingAssignment, duplex: DuplexAssignment,
                power: PowerAllocation, leakage: str = "exact") -> SEReport:
    dl_se, dl_t = dl_se_closed_form(duplex.structure, ls, grouping, duplex, power, leakage)
    ul_se, ul_t = ul_se_closed_form(duplex.structure, ls, grouping, duplex, power, leakage)
    pre = ls.training_prelog
    return SEReport(duplex.structure, dl_se, ul_se, dl_t, ul_t,
                    duplex.prelog_dl * pre, duplex.prelog_ul * pre)
