"""AP mode selection under per-UE SE constraints.

The joint mode/power design is replaced by transparent pieces: a fixed
fractional power rule, an exhaustive enumeration over NAFD mode vectors
(the desk-scale oracle) and a single-flip greedy search.

Objective order: any feasible solution beats any infeasible one; feasible
solutions compare by EE, infeasible ones by worst-UE slack. Ties go to the
lexicographically smallest ``a``.
"""
from __future__ import annotations

import itertools
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from nafdsim.channel import LargeScaleModel
from nafdsim.energy import PowerModelParams, energy_efficiency, total_power
from nafdsim.errors import ContractError, ScaleError
from nafdsim.performance import (
    DuplexAssignment,
    PowerAllocation,
    SEReport,
    dl_utilization,
    evaluate_se,
    fractional_theta,
)
from nafdsim.precoding import GroupingAssignment

DEFAULT_M_MAX = 16
# Power model used for each SE structure.
_ENERGY_STRUCTURE = {"NAFD": "NAFD", "FD": "FDCF", "HD": "HDCF", "SMALLCELL": "FDCF"}

PowerRule = Callable[[DuplexAssignment], PowerAllocation]


@dataclass(frozen=True)
class QosSpec:
    s_qos_dl: float
    s_qos_ul: float

    def __post_init__(self):
        if not (self.s_qos_dl >= 0 and self.s_qos_ul >= 0):
            raise ContractError("qos", "SE requirements must be non-negative")

    @classmethod
    def uniform(cls, level: float) -> "QosSpec":
        return cls(level, level)


@dataclass
class AssignmentSolution:
    duplex: DuplexAssignment
    power: PowerAllocation
    feasible: bool
    ee: float
    slack: float
    p_tot: float
    report: SEReport
    trace: list[tuple[bool, float]] = field(default_factory=list)

    @property
    def dl_se(self) -> np.ndarray:
        return self.report.dl_se

    @property
    def ul_se(self) -> np.ndarray:
        return self.report.ul_se

    @property
    def key(self) -> tuple[bool, float]:
        return objective_key(self.feasible, self.ee, self.slack)


def objective_key(feasible: bool, ee: float, slack: float) -> tuple[bool, float]:
    return (True, ee) if feasible else (False, slack)


def check_qos(report: SEReport, qos: QosSpec) -> tuple[bool, float]:
    """Feasibility and worst-UE slack min(SE - QoS) over both directions.

    With no UEs at all the slack is +inf.
    """
    slack = np.inf
    if report.dl_se.size:
        slack = min(slack, float(np.min(report.dl_se - qos.s_qos_dl)))
    if report.ul_se.size:
        slack = min(slack, float(np.min(report.ul_se - qos.s_qos_ul)))
    return bool(slack >= 0), slack


def power_rule_fractional(ls: LargeScaleModel, grouping: GroupingAssignment,
                          duplex: DuplexAssignment, exponent: float, rho_d: float,
                          rho_u: float) -> PowerAllocation:
    """theta_mk proportional to gamma_mk**exponent at full per-AP budget; varsigma = 1; alpha_ml = b_m."""
    if not -1.0 <= exponent <= 1.0:
        raise ContractError("exponent", "must lie in [-1, 1]")
    theta = fractional_theta(ls.gamma_dl, grouping, duplex.a, exponent)
    alpha = np.repeat(duplex.b.astype(float)[:, None], ls.n_ul, axis=1)
    return PowerAllocation(theta, np.ones(ls.n_ul), alpha, rho_d, rho_u)


def make_power_rule(ls: LargeScaleModel, grouping: GroupingAssignment, exponent: float,
                    rho_d: float, rho_u: float) -> PowerRule:
    return lambda duplex: power_rule_fractional(ls, grouping, duplex, exponent, rho_d, rho_u)


class AssignmentEvaluator:
    """Evaluates assignments on one network, caching the QoS-independent part by mode vector."""

    def __init__(self, ls: LargeScaleModel, grouping: GroupingAssignment, power_rule: PowerRule,
                 params: PowerModelParams | None = None):
        self.ls = ls
        self.grouping = grouping
        self.power_rule = power_rule
        self.params = params or PowerModelParams()
        self._cache: dict = {}

    def _physics(self, duplex: DuplexAssignment):
        key = (duplex.structure, duplex.hd_split, duplex.a.tobytes(), duplex.b.tobytes())
        hit = self._cache.get(key)
        if hit is None:
            power = self.power_rule(duplex)
            report = evaluate_se(self.ls, self.grouping, duplex, power)
            util = dl_utilization(power.theta, self.ls.gamma_dl, self.grouping)
            p_tot = total_power(_ENERGY_STRUCTURE[duplex.structure], report, duplex, power,
                                self.params, self.grouping.n_antennas, ap_utilization=util)
            hit = (power, report, p_tot, energy_efficiency(report.sum_se, p_tot))
            self._cache[key] = hit
        return hit

    def __call__(self, duplex: DuplexAssignment, qos: QosSpec) -> AssignmentSolution:
        power, report, p_tot, ee = self._physics(duplex)
        feasible, slack = check_qos(report, qos)
        return AssignmentSolution(duplex, power, feasible, ee, slack, p_tot, report)


def evaluate_assignment(ls: LargeScaleModel, grouping: GroupingAssignment, duplex: DuplexAssignment,
                        qos: QosSpec, power_rule: PowerRule,
                        params: PowerModelParams | None = None) -> AssignmentSolution:
    """SE, power and EE of one fixed assignment."""
    return AssignmentEvaluator(ls, grouping, power_rule, params)(duplex, qos)


def exhaustive_mode_select(ls: LargeScaleModel, grouping: GroupingAssignment, qos: QosSpec,
                           power_rule: PowerRule, m_max: int = DEFAULT_M_MAX,
                           params: PowerModelParams | None = None,
                           threads: int = 1,
                           evaluator: AssignmentEvaluator | None = None) -> AssignmentSolution:
    """Best NAFD assignment over all 2^M mode vectors (b = 1 - a)."""
    m = ls.n_aps
    if m > m_max:
        raise ScaleError(f"exhaustive search over 2^{m} assignments exceeds m_max={m_max}")
    evaluator = evaluator or AssignmentEvaluator(ls, grouping, power_rule, params)

    def run(a):
        return evaluator(DuplexAssignment.nafd(a), qos)

    # itertools.product yields vectors in lexicographic order; a strict
    # comparison during the ordered reduction keeps the smallest on ties.
    candidates = itertools.product((0, 1), repeat=m)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = pool.map(run, candidates)
            return _reduce(results)
    return _reduce(map(run, candidates))


def _reduce(results) -> AssignmentSolution:
    best = None
    for sol in results:
        if best is None or sol.key > best.key:
            best = sol
    return best


def greedy_mode_select(ls: LargeScaleModel, grouping: GroupingAssignment, qos: QosSpec,
                       power_rule: PowerRule, params: PowerModelParams | None = None,
                       max_iter: int | None = None,
                       evaluator: AssignmentEvaluator | None = None) -> AssignmentSolution:
    """Single-flip local search starting from the direction with larger aggregate gain.

    Each iteration evaluates every single-AP flip and takes the best one
    (lowest AP index on ties) if it strictly improves the objective.
    """
    m = ls.n_aps
    evaluator = evaluator or AssignmentEvaluator(ls, grouping, power_rule, params)
    start_dl = ls.beta_dl.sum() >= ls.beta_ul.sum()
    a = np.full(m, 1 if start_dl else 0, dtype=int)
    current = evaluator(DuplexAssignment.nafd(a), qos)
    trace = [current.key]
    limit = max_iter if max_iter is not None else m * m + m
    for _ in range(limit):
        best = None
        for i in range(m):
            trial = a.copy()
            trial[i] ^= 1
            sol = evaluator(DuplexAssignment.nafd(trial), qos)
            if best is None or sol.key > best[1].key:
                best = (trial, sol)
        if best is None or not best[1].key > current.key:
            break
        a, current = best
        trace.append(current.key)
    current.trace = trace
    return current


def fixed_structure_solution(structure: str, ls: LargeScaleModel, grouping: GroupingAssignment,
                             qos: QosSpec, power_rule: PowerRule,
                             params: PowerModelParams | None = None,
                             hd_split: float = 0.5) -> AssignmentSolution:
    """FD or HD with every AP active in both directions."""
    structure = structure.upper()
    if structure == "FD":
        duplex = DuplexAssignment.fd(ls.n_aps)
    elif structure == "HD":
        duplex = DuplexAssignment.hd(ls.n_aps, hd_split)
    else:
        raise ContractError("structure", f"no fixed assignment for {structure!r}")
    return evaluate_assignment(ls, grouping, duplex, qos, power_rule, params)
