import math

import numpy as np
import pytest
from conftest import all_structures, grouping_for, make_power
from hypothesis import given
from hypothesis import strategies as st
from reference_forms import fzf_forms, mrt_forms, package_forms

from nafdsim.channel import ChannelConfig, build_large_scale, draw_large_scale
from nafdsim.errors import ContractError
from nafdsim.performance import (
    DuplexAssignment,
    PowerAllocation,
    SmallCellAssociation,
    associate,
    dl_se_closed_form,
    dl_utilization,
    evaluate_se,
    mc_estimate_terms,
    smallcell_grouping,
    smallcell_power,
    smallcell_se,
    ul_se_closed_form,
)
from nafdsim.topology import generate_topology

N = 8


def test_zero_theta_gives_zero_dl_se(small_ls, channel_cfg):
    g = grouping_for(small_ls, 50, N)
    for duplex in all_structures(4):
        p = make_power(small_ls, g, duplex, channel_cfg)
        p0 = PowerAllocation(np.zeros_like(p.theta), p.varsigma, p.alpha, p.rho_d, p.rho_u)
        se, terms = dl_se_closed_form(duplex.structure, small_ls, g, duplex, p0)
        assert np.all(se == 0) and np.all(terms["desired"] == 0)


def test_hd_has_no_cross_link_terms(small_ls, channel_cfg):
    g = grouping_for(small_ls, 50, N)
    hd = DuplexAssignment.hd(4)
    r = evaluate_se(small_ls, g, hd, make_power(small_ls, g, hd, channel_cfg))
    assert np.all(r.dl_terms["ul_to_dl"] == 0)
    assert np.all(r.phi == 0)
    assert r.prelog_dl == pytest.approx(0.5 * small_ls.training_prelog)


def test_no_ul_aps_gives_zero_ul_se(small_ls, channel_cfg):
    g = grouping_for(small_ls, 50, N)
    duplex = DuplexAssignment.nafd([1, 1, 1, 1])
    se, terms = ul_se_closed_form("NAFD", small_ls, g, duplex,
                                  make_power(small_ls, g, duplex, channel_cfg))
    assert np.all(se == 0) and np.all(terms["desired"] == 0)


def test_nafd_excludes_self_interference(small_ls, channel_cfg):
    g = grouping_for(small_ls, 50, N)
    duplex = DuplexAssignment.nafd([1, 0, 1, 0])
    r = evaluate_se(small_ls, g, duplex, make_power(small_ls, g, duplex, channel_cfg))
    assert np.all(r.ul_terms["phi_si"] == 0)
    assert np.all(r.ul_terms["phi_iap"] > 0)


@pytest.mark.parametrize("ups", [0, 50, 100])
def test_all_on_nafd_equals_fd(small_ls, channel_cfg, ups):
    g = grouping_for(small_ls, ups, N)
    fd = DuplexAssignment.fd(4)
    hybrid = DuplexAssignment.hybrid(np.ones(4), np.ones(4))
    p = make_power(small_ls, g, fd, channel_cfg)
    r_fd, r_hy = evaluate_se(small_ls, g, fd, p), evaluate_se(small_ls, g, hybrid, p)
    for key in r_fd.dl_terms:
        np.testing.assert_allclose(r_hy.dl_terms[key], r_fd.dl_terms[key], rtol=1e-12, atol=0)
    for key in r_fd.ul_terms:
        np.testing.assert_allclose(r_hy.ul_terms[key], r_fd.ul_terms[key], rtol=1e-12, atol=0)
    np.testing.assert_allclose(r_hy.ul_se, r_fd.ul_se, rtol=1e-12)


@pytest.mark.parametrize("leakage", ["exact", "table"])
@pytest.mark.parametrize("which", ["mrt", "fzf"])
def test_reduction_to_pure_forms(medium_ls, channel_cfg, leakage, which):
    ups, ref = (0, mrt_forms) if which == "mrt" else (100, fzf_forms)
    g = grouping_for(medium_ls, ups, N)
    for duplex in all_structures(8):
        p = make_power(medium_ls, g, duplex, channel_cfg, exponent=0.5,
                       varsigma=[0.3, 0.7, 1.0])
        got = package_forms(evaluate_se(medium_ls, g, duplex, p, leakage=leakage))
        for x, y in zip(got, ref(medium_ls, duplex, p, N)):
            np.testing.assert_allclose(x, y, rtol=1e-12, atol=0)


def test_hd_is_fd_without_cross_link(small_ls, channel_cfg):
    g = grouping_for(small_ls, 50, N)
    fd, hd = DuplexAssignment.fd(4), DuplexAssignment.hd(4, hd_split=0.3)
    p = make_power(small_ls, g, fd, channel_cfg)
    r_fd, r_hd = evaluate_se(small_ls, g, fd, p), evaluate_se(small_ls, g, hd, p)
    for key in ("desired", "self", "inter_ue", "noise"):
        np.testing.assert_array_equal(r_hd.dl_terms[key], r_fd.dl_terms[key])
        np.testing.assert_array_equal(r_hd.ul_terms[key], r_fd.ul_terms[key])
    t = r_fd.dl_terms
    expected = 0.3 * small_ls.training_prelog * np.log2(
        1 + t["desired"] ** 2 / (t["self"] + t["inter_ue"] + 1))
    np.testing.assert_allclose(r_hd.dl_se, expected, rtol=1e-12)


def test_exact_and_table_leakage_differ_only_for_mixed_groups(medium_ls, channel_cfg):
    g = grouping_for(medium_ls, 60, N)
    fd = DuplexAssignment.fd(8)
    p = make_power(medium_ls, g, fd, channel_cfg)
    ex = evaluate_se(medium_ls, g, fd, p, "exact")
    tb = evaluate_se(medium_ls, g, fd, p, "table")
    np.testing.assert_array_equal(ex.dl_terms["desired"], tb.dl_terms["desired"])
    assert not np.allclose(ex.dl_terms["inter_ue"], tb.dl_terms["inter_ue"], rtol=1e-6)


@given(st.integers(0, 2), st.floats(0.0, 0.9))
def test_more_ul_power_never_helps_dl(ell, base):
    cfg = ChannelConfig.from_physical(0.1, 0.1)
    ls = draw_large_scale(generate_topology(5, 3, 3, 500, 50, seed=11), cfg, seed=11)
    g = grouping_for(ls, 60, N)
    for duplex in (DuplexAssignment.nafd([1, 0, 1, 1, 0]), DuplexAssignment.fd(5)):
        vs = np.full(3, base)
        lo = make_power(ls, g, duplex, cfg, varsigma=vs)
        vs[ell] = base + 0.1
        hi = make_power(ls, g, duplex, cfg, varsigma=vs)
        se_lo, _ = dl_se_closed_form(duplex.structure, ls, g, duplex, lo)
        se_hi, _ = dl_se_closed_form(duplex.structure, ls, g, duplex, hi)
        assert np.all(se_hi <= se_lo + 1e-12)


def test_more_si_never_helps_fd_ul(small_ls, channel_cfg):
    g = grouping_for(small_ls, 50, N)
    fd = DuplexAssignment.fd(4)
    p = make_power(small_ls, g, fd, channel_cfg)
    prev = None
    for db in (0, 20, 40, 50, 60):
        se, _ = ul_se_closed_form("FD", small_ls.with_si_ratio(db, channel_cfg.rho_d), g, fd, p)
        if prev is not None:
            assert np.all(se <= prev + 1e-12)
        prev = se


def test_contract_errors_name_field(small_ls, channel_cfg):
    g = grouping_for(small_ls, 50, N)
    fd = DuplexAssignment.fd(4)
    p = make_power(small_ls, g, fd, channel_cfg)
    with pytest.raises(ContractError) as exc:
        dl_se_closed_form("NAFD", small_ls, g, fd, p)
    assert exc.value.field == "structure"
    over = PowerAllocation(p.theta * 1.1, p.varsigma, p.alpha, p.rho_d, p.rho_u)
    with pytest.raises(ContractError) as exc:
        dl_se_closed_form("FD", small_ls, g, fd, over)
    assert exc.value.field == "theta"
    with pytest.raises(ContractError):
        PowerAllocation(p.theta, [1.5, 0.1], p.alpha, p.rho_d, p.rho_u)
    with pytest.raises(ContractError):
        DuplexAssignment(np.ones(4), np.ones(4), "NAFD")


def test_full_budget_used(small_ls, channel_cfg):
    g = grouping_for(small_ls, 50, N)
    duplex = DuplexAssignment.nafd([1, 0, 0, 1])
    p = make_power(small_ls, g, duplex, channel_cfg, exponent=-0.5)
    np.testing.assert_allclose(dl_utilization(p.theta, small_ls.gamma_dl, g), [1, 0, 0, 1])


def test_monte_carlo_single_link_toy():
    beta, n, rho = 1e-9, 4, 1e10
    cfg = ChannelConfig(rho, rho, perfect_csi=True)
    ls = build_large_scale([[beta]], np.zeros((1, 0)), np.zeros((1, 0)), np.ones((1, 1)), cfg)
    g = grouping_for(ls, 0, n)
    duplex = DuplexAssignment.nafd([1])
    theta = 1 / math.sqrt(n * beta)
    p = PowerAllocation([[theta]], np.zeros(0), np.zeros((1, 0)), rho, rho)
    mc = mc_estimate_terms("NAFD", ls, g, duplex, p, 20_000, seed=3)
    t = mc.dl_terms
    sinr_mc = t["desired"][0] ** 2 / (t["self"][0] + t["inter_ue"][0] + 1)
    gamma = beta
    sinr = rho * theta**2 * n**2 * gamma**2 / (rho * theta**2 * n * gamma * beta + 1)
    assert sinr_mc == pytest.approx(sinr, rel=0.02)
    cf = evaluate_se(ls, g, duplex, p)
    assert cf.dl_se[0] == pytest.approx(ls.training_prelog * math.log2(1 + sinr), rel=1e-12)


def test_monte_carlo_perfect_csi_error_terms_vanish(small_ls, channel_cfg):
    ls = small_ls.with_gamma(small_ls.beta_dl, small_ls.beta_ul)
    g = grouping_for(ls, 50, N)
    duplex = DuplexAssignment.nafd([1, 0, 1, 0])
    p = make_power(ls, g, duplex, channel_cfg)
    mc = mc_estimate_terms("NAFD", ls, g, duplex, p, 200, seed=0)
    cf = evaluate_se(ls, g, duplex, p)
    assert np.all(cf.dl_terms["est_error"] == 0) and np.all(mc.dl_terms["est_error"] == 0)
    assert np.all(cf.ul_terms["est_error"] == 0) and np.all(mc.ul_terms["est_error"] == 0)


def test_monte_carlo_is_deterministic(small_ls, channel_cfg):
    g = grouping_for(small_ls, 50, N)
    fd = DuplexAssignment.fd(4)
    p = make_power(small_ls, g, fd, channel_cfg)
    a = mc_estimate_terms("FD", small_ls, g, fd, p, 700, seed=5, batch_size=300)
    b = mc_estimate_terms("FD", small_ls, g, fd, p, 700, seed=5, batch_size=300)
    for key in a.ul_terms:
        np.testing.assert_array_equal(a.ul_terms[key], b.ul_terms[key])


def test_report_csv_columns(small_ls, channel_cfg):
    g = grouping_for(small_ls, 50, N)
    fd = DuplexAssignment.fd(4)
    csv_text = evaluate_se(small_ls, g, fd, make_power(small_ls, g, fd, channel_cfg)).to_csv()
    lines = csv_text.strip().splitlines()
    header = lines[0].split(",")
    assert header[:5] == ["structure", "ue_kind", "ue_index", "se", "desired_power"]
    assert header[-1] == "prelog"
    assert len(lines) == 1 + small_ls.n_dl + small_ls.n_ul


def test_smallcell_single_ap_matches_cell_free(channel_cfg):
    cfg = ChannelConfig(channel_cfg.rho_d, channel_cfg.rho_u)
    ls = build_large_scale([[3e-9]], np.zeros((1, 0)), np.zeros((1, 0)), np.ones((1, 1)), cfg)
    assoc = associate(ls)
    g = smallcell_grouping(ls, assoc, 50, N)
    p = smallcell_power(ls, assoc, g, cfg.rho_d, cfg.rho_u)
    sc = smallcell_se(ls, assoc, p, g)
    cf = evaluate_se(ls, g, DuplexAssignment.fd(1), p)
    np.testing.assert_allclose(sc.dl_se, cf.dl_se, rtol=1e-12)


def test_smallcell_association_ties_to_lower_index(channel_cfg):
    beta = np.array([[2e-9, 1e-9], [2e-9, 3e-9], [1e-9, 3e-9]])
    cfg = ChannelConfig(channel_cfg.rho_d, channel_cfg.rho_u)
    ls = build_large_scale(beta, beta, np.ones((2, 2)) * 1e-12, np.ones((3, 3)) * 1e-12, cfg)
    assoc = associate(ls)
    np.testing.assert_array_equal(assoc.dl_home, [0, 1])


def test_smallcell_unmapped_ue_is_contract_error(small_ls):
    bad = SmallCellAssociation(np.array([0, 9]), np.array([0, 1]))
    with pytest.raises(ContractError):
        smallcell_grouping(small_ls, bad, 50, N)


def test_smallcell_dl_not_better_than_cell_free(channel_cfg):
    # Equal theta (exponent 0) under PZF starves the ZF members, which makes the
    # comparison about the power rule rather than coherent transmission.
    diffs = []
    for seed in range(100):
        ls = draw_large_scale(generate_topology(8, 3, 3, 500, 50, seed=seed), channel_cfg, seed)
        g = grouping_for(ls, 90, N)
        fd = DuplexAssignment.fd(8)
        cf = evaluate_se(ls, g, fd, make_power(ls, g, fd, channel_cfg, exponent=0.5))
        assoc = associate(ls)
        sg = smallcell_grouping(ls, assoc, 90, N)
        sc = smallcell_se(ls, assoc, smallcell_power(ls, assoc, sg, channel_cfg.rho_d,
                                                     channel_cfg.rho_u, exponent=0.5), sg)
        diffs.append(np.sum(sc.dl_se) - np.sum(cf.dl_se))
    assert np.median(diffs) <= 0
