import numpy as np
import pytest
from conftest import grouping_for, make_power
from hypothesis import given
from hypothesis import strategies as st

from nafdsim.energy import (
    PowerModelParams,
    energy_efficiency,
    fronthaul_power,
    p_tot_fdcel,
    p_tot_hdcel,
    p_tot_nafd,
    total_power,
)
from nafdsim.errors import ContractError
from nafdsim.performance import DuplexAssignment, dl_utilization, evaluate_se

P = PowerModelParams()


def test_fronthaul_examples():
    assert fronthaul_power(0, P) == P.fh_fixed
    assert fronthaul_power(1e9, P) == pytest.approx(P.fh_fixed + 0.25)
    t1 = fronthaul_power(3e8, P) - P.fh_fixed
    t2 = fronthaul_power(6e8, P) - P.fh_fixed
    assert t2 == pytest.approx(2 * t1)
    with pytest.raises(ContractError):
        fronthaul_power(-1, P)


def test_fdcel_example():
    params = PowerModelParams(p_sic=0.1)
    assert p_tot_fdcel(1.0, 4, params) == pytest.approx(2.4)


def test_hdcel_expression():
    p = p_tot_hdcel([1.0, 0.5], 0.2, 4, 2, P)
    expected = (1.0 * 0.1 / 0.3 + 0.1) + (0.5 * 0.1 / 0.3 + 0.1) + 0.2 / 0.4 + 4 * 0.2 + 2 * 0.2 + 0.1
    assert p == pytest.approx(expected)


def test_nafd_without_dl_aps_keeps_only_ue_and_fronthaul():
    duplex = DuplexAssignment.nafd([0, 0, 0])
    p = p_tot_nafd(np.ones(2), duplex, 4, sum_se=5.0, params=P)
    ue = 2 * (0.1 / 0.3 + 0.1)
    assert p == pytest.approx(ue + 3 * fronthaul_power(P.bandwidth * 5.0, P))


def test_energy_efficiency_examples():
    assert energy_efficiency(2, 1) == 2
    assert energy_efficiency(2, 2) == pytest.approx(energy_efficiency(2, 1) / 2)
    assert energy_efficiency(0, 3) == 0
    assert energy_efficiency(2, 1, bandwidth=20e6) == pytest.approx(4e7)
    for bad in (0, -1):
        with pytest.raises(ContractError):
            energy_efficiency(1, bad)


@given(st.floats(0, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_ee_scale_invariant(se, p, c):
    assert energy_efficiency(c * se, c * p) == pytest.approx(energy_efficiency(se, p), rel=1e-12)


@given(st.floats(0, 100), st.integers(1, 64), st.floats(0, 5))
def test_fdcel_identity(p_hd, n_rx, p_sic):
    params = PowerModelParams(p_sic=p_sic)
    assert p_tot_fdcel(p_hd, n_rx, params) - 2 * p_hd == pytest.approx(n_rx * p_sic, abs=1e-9)


def test_params_invariants():
    with pytest.raises(ContractError):
        PowerModelParams(eps_ap=1.0)
    with pytest.raises(ContractError):
        PowerModelParams(p_sic=-0.1)


def test_structure_report_mismatch(small_ls, channel_cfg):
    g = grouping_for(small_ls, 50, 8)
    fd = DuplexAssignment.fd(4)
    p = make_power(small_ls, g, fd, channel_cfg)
    report = evaluate_se(small_ls, g, fd, p)
    with pytest.raises(ContractError):
        total_power("NAFD", report, fd, p, P, 8)
    with pytest.raises(ContractError):
        total_power("XYZ", report, fd, p, P, 8)


def test_nafd_below_fdcf_on_matched_config(small_ls, channel_cfg):
    g = grouping_for(small_ls, 90, 8)
    fd = DuplexAssignment.fd(4)
    nafd = DuplexAssignment.nafd([1, 0, 1, 0])
    p_fd, p_nafd = make_power(small_ls, g, fd, channel_cfg), make_power(small_ls, g, nafd, channel_cfg)
    r_fd, r_nafd = evaluate_se(small_ls, g, fd, p_fd), evaluate_se(small_ls, g, nafd, p_nafd)
    tot_fd = total_power("FDCF", r_fd, fd, p_fd, P, 8,
                         dl_utilization(p_fd.theta, small_ls.gamma_dl, g))
    tot_nafd = total_power("NAFD", r_nafd, nafd, p_nafd, P, 8,
                           dl_utilization(p_nafd.theta, small_ls.gamma_dl, g))
    assert tot_nafd < tot_fd


def test_cellular_dispatch():
    hd = total_power("HDCEL", None, None, None, P, 4)
    fd = total_power("FDCEL", None, None, None, P, 4)
    assert fd - 2 * hd == pytest.approx(4 * P.p_sic)
