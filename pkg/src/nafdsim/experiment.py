"""Topology sweeps and the closed-form vs Monte-Carlo validation run.

Topology ``i`` of a run with master seed ``s`` uses seeds ``(s, i, 0)`` for
placement and ``(s, i, 1)`` for large-scale fading, so results do not depend
on the number of worker threads; per-topology results are reduced in index
order.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from nafdsim.assignment import (
    AssignmentEvaluator,
    QosSpec,
    check_qos,
    exhaustive_mode_select,
    greedy_mode_select,
    make_power_rule,
)
from nafdsim.channel import LargeScaleModel, draw_large_scale
from nafdsim.config import ExperimentConfig
from nafdsim.energy import energy_efficiency, total_power
from nafdsim.errors import PlacementError
from nafdsim.performance import (
    DuplexAssignment,
    PowerAllocation,
    associate,
    dl_utilization,
    evaluate_se,
    fractional_theta,
    mc_estimate_terms,
    smallcell_grouping,
    smallcell_power,
    smallcell_se,
)
from nafdsim.precoding import build_grouping
from nafdsim.topology import generate_topology

RESULT_HEADER = ("structure", "qos", "metric", "value")
PLOT_HEADER = ("curve", "x", "y")
METRICS = ("feasibility_rate", "ee_mean", "ee_mean_feasible", "ee_mean_all_feasible",
           "n_all_feasible", "dl_se_mean", "ul_se_mean")
VALIDATION_HEADER = ("structure", "upsilon", "direction", "term", "ue_index", "closed_form",
                     "monte_carlo", "rel_error", "tolerance", "passed")


@dataclass(frozen=True)
class Outcome:
    feasible: bool
    ee: float
    dl_se_mean: float
    ul_se_mean: float


def _fmt(x: float) -> str:
    return "nan" if isinstance(x, float) and math.isnan(x) else repr(float(x))


def build_network(cfg: ExperimentConfig, index: int) -> LargeScaleModel:
    t = cfg.topology
    seed = cfg.experiment.seed
    try:
        topo = generate_topology(t.m, t.k_d, t.k_u, t.side, t.min_ap_dist, seed=[seed, index, 0])
    except PlacementError as exc:
        raise PlacementError(f"topology {index} (seed ({seed}, {index}, 0)): {exc}") from exc
    return draw_large_scale(topo, cfg.channel.to_channel_config(), seed=[seed, index, 1])


def _mean(x: np.ndarray) -> float:
    return float(np.mean(x)) if x.size else math.nan


def _smallcell(cfg: ExperimentConfig, ls: LargeScaleModel, qos_grid) -> list[Outcome]:
    p = cfg.precoding
    ch = cfg.channel.to_channel_config()
    assoc = associate(ls)
    grouping = smallcell_grouping(ls, assoc, p.upsilon, p.n_antennas, p.mode)
    power = smallcell_power(ls, assoc, grouping, ch.rho_d, ch.rho_u, cfg.experiment.power_exponent)
    report = smallcell_se(ls, assoc, power, grouping)
    duplex = DuplexAssignment.fd(ls.n_aps)
    util = dl_utilization(power.theta, ls.gamma_dl, grouping)
    p_tot = total_power("FDCF", report, duplex, power, cfg.power, p.n_antennas,
                        ap_utilization=util)
    ee = energy_efficiency(report.sum_se, p_tot)
    out = []
    for q in qos_grid:
        feasible, _ = check_qos(report, QosSpec.uniform(q))
        out.append(Outcome(feasible, ee, _mean(report.dl_se), _mean(report.ul_se)))
    return out


def evaluate_topology(cfg: ExperimentConfig, index: int,
                      structures: tuple[str, ...]) -> dict[str, list[Outcome]]:
    """Outcomes per structure, one per QoS grid point."""
    e, p = cfg.experiment, cfg.precoding
    ch = cfg.channel.to_channel_config()
    ls = build_network(cfg, index)
    grouping = build_grouping(ls.beta_dl, ls.beta_ul, p.upsilon, p.n_antennas, p.mode)
    rule = make_power_rule(ls, grouping, e.power_exponent, ch.rho_d, ch.rho_u)
    evaluator = AssignmentEvaluator(ls, grouping, rule, cfg.power)
    result: dict[str, list[Outcome]] = {}
    for s in structures:
        if s == "SMALLCELL":
            result[s] = _smallcell(cfg, ls, e.qos_grid)
            continue
        outcomes = []
        for q in e.qos_grid:
            qos = QosSpec.uniform(q)
            if s == "NAFD" and e.solver == "exhaustive":
                sol = exhaustive_mode_select(ls, grouping, qos, rule, e.m_max, cfg.power,
                                             evaluator=evaluator)
            elif s == "NAFD":
                sol = greedy_mode_select(ls, grouping, qos, rule, cfg.power, evaluator=evaluator)
            elif s == "FD":
                sol = evaluator(DuplexAssignment.fd(ls.n_aps), qos)
            else:
                sol = evaluator(DuplexAssignment.hd(ls.n_aps, e.hd_split), qos)
            outcomes.append(Outcome(sol.feasible, sol.ee, _mean(sol.dl_se), _mean(sol.ul_se)))
        result[s] = outcomes
    return result


def aggregate(per_topology: list[dict[str, list[Outcome]]], structures, qos_grid) -> list[tuple]:
    """Long-format rows (structure, qos, metric, value) in a fixed order."""
    rows = []
    n = len(per_topology)
    for qi, q in enumerate(qos_grid):
        all_ok = [all(t[s][qi].feasible for s in structures) for t in per_topology]
        for s in structures:
            outs = [t[s][qi] for t in per_topology]
            feas = np.array([o.feasible for o in outs])
            ee = np.array([o.ee for o in outs])
            values = {
                "feasibility_rate": feas.mean(),
                "ee_mean": float(np.sum(np.where(feas, ee, 0.0))) / n,
                "ee_mean_feasible": float(ee[feas].mean()) if feas.any() else math.nan,
                "ee_mean_all_feasible": (float(ee[np.array(all_ok)].mean()) if any(all_ok)
                                         else math.nan),
                "n_all_feasible": float(sum(all_ok)),
                "dl_se_mean": float(np.mean([o.dl_se_mean for o in outs])),
                "ul_se_mean": float(np.mean([o.ul_se_mean for o in outs])),
            }
            rows.extend((s, q, metric, float(values[metric])) for metric in METRICS)
    return rows


def run_experiment(cfg: ExperimentConfig, structures: tuple[str, ...] | None = None,
                   threads: int | None = None) -> list[tuple]:
    structures = tuple(structures or cfg.experiment.structures)
    threads = threads or cfg.experiment.threads
    indices = range(cfg.experiment.n_topologies)

    def work(i):
        return evaluate_topology(cfg, i, structures)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            per_topology = list(pool.map(work, indices))
    else:
        per_topology = [work(i) for i in indices]
    return aggregate(per_topology, structures, cfg.experiment.qos_grid)


def rows_to_csv(rows, header=RESULT_HEADER) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def plot_rows(rows) -> list[tuple]:
    """(curve, x, y) series for EE and feasibility curves against QoS."""
    return [(f"{s}:{metric}", q, v) for s, q, metric, v in rows
            if metric in ("ee_mean", "ee_mean_all_feasible", "feasibility_rate")]


def lookup(rows, structure: str, metric: str) -> dict[float, float]:
    return {q: v for s, q, m, v in rows if s == structure and m == metric}


def feasibility_crossover(rows, threshold: float = 0.5) -> list[float]:
    """QoS levels where NAFD's feasibility rate exceeds ``threshold`` and every other structure's does not."""
    rates = {s: lookup(rows, s, "feasibility_rate") for s in {r[0] for r in rows}}
    if "NAFD" not in rates:
        return []
    others = [s for s in rates if s != "NAFD"]
    return sorted(q for q, v in rates["NAFD"].items()
                  if v > threshold and all(rates[s][q] < threshold for s in others))


def _validation_duplexes(cfg: ExperimentConfig, m: int):
    v = cfg.validation
    a = v.nafd_a if v.nafd_a is not None else tuple(1 - (i % 2) for i in range(m))
    make = {"NAFD": lambda: DuplexAssignment.nafd(a), "FD": lambda: DuplexAssignment.fd(m),
            "HD": lambda: DuplexAssignment.hd(m, cfg.experiment.hd_split)}
    return [make[s]() for s in v.structures]


def compare_terms(closed: dict, empirical: dict, tol_desired: float, tol_other: float):
    """Yield (term, ue, closed, empirical, rel_error, tolerance, passed).

    A closed-form term that is exactly zero must be exactly zero empirically.
    """
    for term, c in closed.items():
        mc = empirical[term]
        tol = tol_desired if term == "desired" else tol_other
        for i in range(c.size):
            ci, ei = float(c[i]), float(mc[i])
            if ci == 0.0:
                rel = 0.0 if ei == 0.0 else math.inf
            else:
                rel = abs(ei - ci) / abs(ci)
            yield term, i, ci, ei, rel, tol, rel <= tol


def run_validation(cfg: ExperimentConfig) -> list[tuple]:
    """Closed form vs Monte Carlo for every term, structure and upsilon on one small network."""
    v, p = cfg.validation, cfg.precoding
    ch = cfg.channel.to_channel_config()
    ls = build_network(cfg, 0)
    rows = []
    for ups in v.upsilons:
        grouping = build_grouping(ls.beta_dl, ls.beta_ul, ups, p.n_antennas)
        for duplex in _validation_duplexes(cfg, ls.n_aps):
            theta = fractional_theta(ls.gamma_dl, grouping, duplex.a, cfg.experiment.power_exponent)
            alpha = np.repeat(duplex.b.astype(float)[:, None], ls.n_ul, axis=1)
            power = PowerAllocation(theta, np.ones(ls.n_ul), alpha, ch.rho_d, ch.rho_u)
            cf = evaluate_se(ls, grouping, duplex, power)
            mc = mc_estimate_terms(duplex.structure, ls, grouping, duplex, power,
                                   v.n_fading_draws, cfg.experiment.seed)
            for direction, c_terms, m_terms in (("dl", cf.dl_terms, mc.dl_terms),
                                                ("ul", cf.ul_terms, mc.ul_terms)):
                for term, i, c, e, rel, tol, ok in compare_terms(c_terms, m_terms,
                                                                 v.tol_desired, v.tol_other):
                    rows.append((duplex.structure, float(ups), direction, term, i, c, e, rel,
                                 tol, "pass" if ok else "FAIL"))
    return rows


def validation_passed(rows) -> bool:
    return all(r[-1] == "pass" for r in rows)
