import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nafdsim.errors import InvalidInputError, PrecoderError
from nafdsim.precoding import (
    GroupingAssignment,
    build_grouping,
    build_precoders,
    group_ues,
    mrt_precoder,
    ul_combiner,
    zf_columns,
    zf_precoder,
)

BETAS = [0.5, 0.3, 0.2]


@pytest.mark.parametrize("ups, strong", [(50, (0,)), (100, (0, 1, 2)), (79, (0, 1)), (0, ())])
def test_group_ues_examples(ups, strong):
    s, w = group_ues(BETAS, ups, 8)
    assert s == strong
    assert set(s) | set(w) == {0, 1, 2} and not set(s) & set(w)


def test_group_ues_truncates_to_n_minus_one():
    s, w = group_ues(BETAS, 100, 2)
    assert s == (0,) and w == (1, 2)


def test_group_ues_tie_breaks_on_lower_index():
    s, _ = group_ues([0.25, 0.25, 0.25, 0.25], 50, 8)
    assert s == (0, 1)


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@given(st.lists(st.floats(1e-3, 1.0), min_size=1, max_size=10), st.floats(0, 100),
       st.integers(1, 12))
def test_grouping_partition_and_budget(betas, ups, n):
    s, w = group_ues(betas, ups, n)
    assert sorted(s + w) == list(range(len(betas)))
    assert len(s) <= n - 1
    # Strong members dominate weak ones.
    if s and w:
        assert min(betas[i] for i in s) >= max(betas[i] for i in w)


@given(st.lists(st.floats(1e-3, 1.0), min_size=2, max_size=8), st.floats(1, 99))
def test_grouping_permutation_equivariant(betas, ups):
    betas = list(dict.fromkeys(betas))  # distinct gains avoid tie-break effects
    perm = list(reversed(range(len(betas))))
    s, _ = group_ues(betas, ups, 16)
    s_perm, _ = group_ues([betas[i] for i in perm], ups, 16)
    assert sorted(perm[i] for i in s_perm) == sorted(s)


@given(st.integers(0, 10_000), st.integers(2, 16), st.data())
def test_zf_orthogonality(seed, n, data):
    s = data.draw(st.integers(1, n - 1))
    rng = np.random.default_rng(seed)
    g = _cn(rng, (n, s))
    gammas = rng.uniform(0.1, 2.0, s)
    v = zf_columns(g, gammas)
    np.testing.assert_allclose(g.conj().T @ v, np.diag(gammas), atol=1e-10 * gammas.max())


def test_zf_single_column_parallel():
    rng = np.random.default_rng(0)
    g = _cn(rng, (4, 1))
    v = zf_precoder(g, 0, 0.7)
    assert np.vdot(g[:, 0], v) == pytest.approx(0.7, rel=1e-10)
    assert abs(np.vdot(v, g[:, 0])) / (np.linalg.norm(v) * np.linalg.norm(g)) == pytest.approx(1.0)


def test_zf_rank_deficient_raises():
    g = np.ones((4, 2), dtype=complex)
    with pytest.raises(PrecoderError):
        zf_precoder(g, 0, 1.0)
    with pytest.raises(PrecoderError):
        zf_columns(np.ones((2, 3), dtype=complex), np.ones(3))


def test_mrt_identity():
    assert np.all(mrt_precoder(np.zeros(3)) == 0)
    g = np.array([1 + 2j, 3 - 1j])
    np.testing.assert_array_equal(mrt_precoder(g), g)


def test_ul_combiner_modes():
    rng = np.random.default_rng(2)
    g = _cn(rng, (6, 3))
    u = ul_combiner(g, 1, 0.4, "ZF")
    np.testing.assert_allclose(g.conj().T @ u, [0, 0.4, 0], atol=1e-12)
    np.testing.assert_array_equal(ul_combiner(g, 2, 0.4, "MR"), g[:, 2])
    with pytest.raises(InvalidInputError):
        ul_combiner(g, 0, 1.0, "MMSE")


def test_expected_norms_by_monte_carlo():
    n, s, gamma = 8, 3, 0.5
    rng = np.random.default_rng(7)
    g = np.sqrt(gamma) * _cn(rng, (20_000, n, s))
    v = zf_columns(g, np.full(s, gamma))
    assert np.mean(np.sum(np.abs(v[..., 0]) ** 2, axis=-1)) == pytest.approx(gamma / (n - s), rel=0.02)
    assert np.mean(np.sum(np.abs(g[..., 0]) ** 2, axis=-1)) == pytest.approx(n * gamma, rel=0.02)


def test_grouping_modes_and_deltas(small_ls):
    fzf = build_grouping(small_ls.beta_dl, small_ls.beta_ul, 30, 8, mode="FZF")
    assert fzf.strong_dl.all() and fzf.strong_ul.all()
    mrt = build_grouping(small_ls.beta_dl, small_ls.beta_ul, 70, 8, mode="MRT")
    assert not mrt.strong_dl.any()
    g = build_grouping(small_ls.beta_dl, small_ls.beta_ul, 60, 8)
    d = g.deltas([1, 0, 1, 0], [0, 1, 0, 1])
    np.testing.assert_array_equal(d["z_dl"] + d["t_dl"], np.array([[1, 1], [0, 0], [1, 1], [0, 0]]))
    np.testing.assert_array_equal(d["z_ul"] + d["t_ul"], np.array([[0, 0], [1, 1], [0, 0], [1, 1]]))


def test_grouping_rejects_oversized_strong_set():
    with pytest.raises(InvalidInputError):
        GroupingAssignment(2, np.ones((1, 2), bool), np.zeros((1, 1), bool))


def test_build_precoders_inactive_aps_zero(small_ls):
    from nafdsim.channel import draw_small_scale
    g = build_grouping(small_ls.beta_dl, small_ls.beta_ul, 50, 8)
    draw = draw_small_scale(small_ls, 8, seed=0)
    p = build_precoders(draw.ghat_dl, draw.ghat_ul, small_ls.gamma_dl, small_ls.gamma_ul, g,
                        [1, 0, 1, 0], [0, 1, 0, 1])
    assert np.all(p.v_dl[[1, 3]] == 0) and np.all(p.v_ul[[0, 2]] == 0)
    for m in (0, 2):
        for k in np.flatnonzero(~g.strong_dl[m]):
            np.testing.assert_array_equal(p.v_dl[m, k], draw.ghat_dl[m, k])
