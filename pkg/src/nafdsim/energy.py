"""Power consumption and energy efficiency of cell-free and cellular structures."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from nafdsim.errors import ContractError
from nafdsim.performance.types import DuplexAssignment, PowerAllocation, SEReport

POWER_STRUCTURES = ("NAFD", "FDCF", "HDCF", "HDCEL", "FDCEL")
# Which SE report structure each cell-free power model accepts.
_REPORT_FOR = {"NAFD": ("NAFD",), "FDCF": ("FD", "SMALLCELL"), "HDCF": ("HD",)}


@dataclass(frozen=True)
class PowerModelParams:
    """Power-model constants in W, W/(bit/s) and Hz.

    Defaults for amplifier efficiencies, transmit powers and the
    traffic-dependent fronthaul slope (0.25 W per Gbit/s) follow the usual
    cell-free EE setup. Per-chain dynamic power, static power, SIC power per
    receive chain and the fixed fronthaul power are conventional choices, not
    measured values.
    """

    fh_fixed: float = 0.825
    fh_traffic: float = 0.25e-9
    eps_ap: float = 0.4
    eps_ue: float = 0.3
    p_ue_tx: float = 0.1
    p_ue_circuit: float = 0.1
    p_ap_tx_fixed: float = 0.1
    p_ap_dyn_tx: float = 0.2
    p_ap_dyn_rx: float = 0.2
    p_ap_static: float = 0.1
    p_sic: float = 1.0
    bandwidth: float = 20e6

    def __post_init__(self):
        for name in ("fh_fixed", "fh_traffic", "p_ue_tx", "p_ue_circuit", "p_ap_tx_fixed",
                     "p_ap_dyn_tx", "p_ap_dyn_rx", "p_ap_static", "p_sic"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ContractError(name, f"must be a non-negative power, got {value}")
        for name in ("eps_ap", "eps_ue"):
            if not 0 < getattr(self, name) < 1:
                raise ContractError(name, "amplifier efficiency must lie in (0, 1)")
        if not self.bandwidth > 0:
            raise ContractError("bandwidth", "must be positive")


def fronthaul_power(rate_bps: float, params: PowerModelParams) -> float:
    """Fronthaul power of one AP link: fixed part plus rate-proportional part."""
    if rate_bps < 0:
        raise ContractError("rate_bps", "must be non-negative")
    return params.fh_fixed + rate_bps * params.fh_traffic


def ap_circuit_power(n_tx: int, n_rx: int, params: PowerModelParams) -> float:
    return n_tx * params.p_ap_dyn_tx + n_rx * params.p_ap_dyn_rx + params.p_ap_static


def ue_power(varsigma, params: PowerModelParams) -> float:
    """UL UEs: amplifier-scaled transmit power plus circuit power."""
    varsigma = np.asarray(varsigma, dtype=float)
    return float(np.sum(varsigma * params.p_ue_tx / params.eps_ue + params.p_ue_circuit))


def p_tot_hdcel(varsigma, bs_tx_power: float, n_tx: int, n_rx: int,
                params: PowerModelParams) -> float:
    """Half-duplex cellular network with one BS."""
    return (ue_power(varsigma, params) + bs_tx_power / params.eps_ap
            + ap_circuit_power(n_tx, n_rx, params))


def p_tot_fdcel(p_hdcel: float, n_rx: int, params: PowerModelParams) -> float:
    """Full-duplex cellular: both directions over the whole frame plus SIC per receive chain."""
    return 2.0 * p_hdcel + n_rx * params.p_sic


def _ap_tx(utilization, params: PowerModelParams) -> np.ndarray:
    return np.asarray(utilization, dtype=float) * params.p_ap_tx_fixed / params.eps_ap


def p_tot_nafd(varsigma, duplex: DuplexAssignment, n_antennas: int, sum_se: float,
               params: PowerModelParams, ap_utilization=None) -> float:
    """NAFD: only DL-mode APs draw transmit and circuit power; SIC only at APs doing both."""
    a = duplex.a.astype(bool)
    b = duplex.b.astype(bool)
    util = np.ones(duplex.n_aps) if ap_utilization is None else np.asarray(ap_utilization, float)
    n = n_antennas
    per_ap = (_ap_tx(util, params) + n * params.p_ap_dyn_tx + params.p_ap_static
              + b * n * (params.p_ap_dyn_rx + params.p_sic))
    rate = params.bandwidth * sum_se
    return (ue_power(varsigma, params) + float(np.sum(np.where(a, per_ap, 0.0)))
            + duplex.n_aps * fronthaul_power(rate, params))


def p_tot_fdcf(varsigma, m: int, n_antennas: int, sum_se: float, params: PowerModelParams,
               ap_utilization=None) -> float:
    """Full-duplex cell-free: every AP transmits, receives and cancels SI."""
    util = np.ones(m) if ap_utilization is None else np.asarray(ap_utilization, float)
    n = n_antennas
    rate = params.bandwidth * sum_se
    per_ap = (_ap_tx(util, params) + ap_circuit_power(n, n, params) + n * params.p_sic
              + fronthaul_power(rate, params))
    return ue_power(varsigma, params) + float(np.sum(per_ap))


def p_tot_hdcf(varsigma, m: int, n_antennas: int, sum_se: float, params: PowerModelParams,
               ap_utilization=None) -> float:
    """Half-duplex cell-free, mirroring the cellular relation P_FD = 2 P_HD + SIC."""
    full = p_tot_fdcf(varsigma, m, n_antennas, sum_se, params, ap_utilization)
    return 0.5 * (full - m * n_antennas * params.p_sic)


def total_power(structure: str, se_report: SEReport | None, duplex: DuplexAssignment | None,
                power_alloc: PowerAllocation | None, params: PowerModelParams, n_antennas: int,
                ap_utilization=None, bs_tx_power: float | None = None) -> float:
    """Dispatch to the structure's power model.

    Cell-free structures (NAFD, FDCF, HDCF) need the SE report (for the
    fronthaul rate), the duplex assignment and the power allocation.
    Cellular ones (HDCEL, FDCEL) model a single BS with ``n_antennas``
    transmit and receive chains.
    """
    structure = structure.upper()
    if structure not in POWER_STRUCTURES:
        raise ContractError("structure", f"unknown power structure {structure!r}")
    if structure in ("HDCEL", "FDCEL"):
        varsigma = power_alloc.varsigma if power_alloc is not None else []
        tx = params.p_ap_tx_fixed if bs_tx_power is None else bs_tx_power
        p_hd = p_tot_hdcel(varsigma, tx, n_antennas, n_antennas, params)
        return p_hd if structure == "HDCEL" else p_tot_fdcel(p_hd, n_antennas, params)
    if se_report is None or duplex is None or power_alloc is None:
        raise ContractError("se_report", f"{structure} needs an SE report, duplex and power")
    if se_report.structure not in _REPORT_FOR[structure]:
        raise ContractError("se_report", f"{structure} power model cannot use a "
                                         f"{se_report.structure} report")
    sum_se = se_report.sum_se
    if structure == "NAFD":
        return p_tot_nafd(power_alloc.varsigma, duplex, n_antennas, sum_se, params, ap_utilization)
    m = duplex.n_aps
    if structure == "FDCF":
        return p_tot_fdcf(power_alloc.varsigma, m, n_antennas, sum_se, params, ap_utilization)
    return p_tot_hdcf(power_alloc.varsigma, m, n_antennas, sum_se, params, ap_utilization)


def energy_efficiency(se_sum: float, p_tot: float, bandwidth: float | None = None) -> float:
    """Aggregate SE per watt, or bits per joule when ``bandwidth`` (Hz) is given."""
    if not p_tot > 0:
        raise ContractError("p_tot", f"total power must be positive, got {p_tot}")
    ee = se_sum / p_tot
    return ee * bandwidth if bandwidth is not None else ee
