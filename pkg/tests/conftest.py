import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nafdsim.channel import ChannelConfig, draw_large_scale
from nafdsim.performance import DuplexAssignment, PowerAllocation, fractional_theta
from nafdsim.precoding import build_grouping
from nafdsim.topology import generate_topology

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# Lines reported by test_acceptance.py, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def channel_cfg():
    return ChannelConfig.from_physical(0.1, 0.1, si_ratio_db=50.0)


@pytest.fixture(scope="session")
def small_ls(channel_cfg):
    """M=4, K_d=K_u=2 network on a 500 m torus."""
    topo = generate_topology(4, 2, 2, 500.0, 50.0, seed=1)
    return draw_large_scale(topo, channel_cfg, seed=1)


@pytest.fixture(scope="session")
def medium_ls(channel_cfg):
    topo = generate_topology(8, 3, 3, 500.0, 50.0, seed=5)
    return draw_large_scale(topo, channel_cfg, seed=5)


def make_power(ls, grouping, duplex, cfg, exponent=0.0, varsigma=None):
    theta = fractional_theta(ls.gamma_dl, grouping, duplex.a, exponent)
    alpha = np.repeat(duplex.b.astype(float)[:, None], ls.n_ul, axis=1)
    vs = np.ones(ls.n_ul) if varsigma is None else np.asarray(varsigma, float)
    return PowerAllocation(theta, vs, alpha, cfg.rho_d, cfg.rho_u)


def all_structures(m, a=None):
    a = [1 - (i % 2) for i in range(m)] if a is None else a
    return [DuplexAssignment.nafd(a), DuplexAssignment.fd(m), DuplexAssignment.hd(m)]


def grouping_for(ls, upsilon, n):
    return build_grouping(ls.beta_dl, ls.beta_ul, upsilon, n)
