"""Strong/weak UE grouping and local partial zero-forcing precoders/combiners."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nafdsim.errors import InvalidInputError, PrecoderError

PRECODING_MODES = ("PZF", "FZF", "MRT")
_RANK_TOL = 1e-10


def group_ues(betas, upsilon: float, n: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Split UEs into (strong, weak) for one AP.

    Strong set is the shortest prefix of the UEs sorted by decreasing gain
    (ties: lower index first) whose share of the total gain reaches
    ``upsilon`` percent, capped at ``n - 1`` members.
    """
    betas = np.asarray(betas, dtype=float).ravel()
    if not 0.0 <= upsilon <= 100.0:
        raise InvalidInputError(f"upsilon must lie in [0, 100], got {upsilon}")
    if n < 1:
        raise InvalidInputError("antenna count must be >= 1")
    k = betas.size
    if k == 0:
        return (), ()
    if np.any(betas < 0) or not np.all(np.isfinite(betas)):
        raise InvalidInputError("betas must be finite and non-negative")
    order = np.lexsort((np.arange(k), -betas))
    if upsilon == 0:
        size = 0
    else:
        share = np.cumsum(betas[order]) / betas.sum()
        reached = np.nonzero(share >= upsilon / 100.0 - 1e-12)[0]
        size = int(reached[0]) + 1 if reached.size else k
    size = min(size, n - 1)
    strong = tuple(int(i) for i in order[:size])
    weak = tuple(sorted(set(range(k)) - set(strong)))
    return strong, weak


@dataclass(frozen=True)
class GroupingAssignment:
    """Per-AP strong-set membership masks for both directions.

    ``strong_dl[m, k]`` is True when DL UE k belongs to AP m's ZF set; everyone
    else is served by MRT. Which APs actually serve a direction is decided by
    the duplex assignment, see ``deltas``.
    """

    n_antennas: int
    strong_dl: np.ndarray
    strong_ul: np.ndarray

    def __post_init__(self):
        for name in ("strong_dl", "strong_ul"):
            arr = np.asarray(getattr(self, name), dtype=bool)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
            if np.any(arr.sum(axis=1) > self.n_antennas - 1):
                raise InvalidInputError(f"{name}: strong set larger than N - 1")

    def s_dl(self, m: int) -> tuple[int, ...]:
        return tuple(np.flatnonzero(self.strong_dl[m]))

    def w_dl(self, m: int) -> tuple[int, ...]:
        return tuple(np.flatnonzero(~self.strong_dl[m]))

    def s_ul(self, m: int) -> tuple[int, ...]:
        return tuple(np.flatnonzero(self.strong_ul[m]))

    def w_ul(self, m: int) -> tuple[int, ...]:
        return tuple(np.flatnonzero(~self.strong_ul[m]))

    @property
    def size_dl(self) -> np.ndarray:
        return self.strong_dl.sum(axis=1)

    @property
    def size_ul(self) -> np.ndarray:
        return self.strong_ul.sum(axis=1)

    def deltas(self, a, b) -> dict[str, np.ndarray]:
        """ZF/MRT membership indicators, zero where the AP does not serve the direction."""
        a = np.asarray(a, dtype=bool)[:, None]
        b = np.asarray(b, dtype=bool)[:, None]
        return {
            "z_dl": (a & self.strong_dl).astype(float),
            "t_dl": (a & ~self.strong_dl).astype(float),
            "z_ul": (b & self.strong_ul).astype(float),
            "t_ul": (b & ~self.strong_ul).astype(float),
        }


def build_grouping(beta_dl: np.ndarray, beta_ul: np.ndarray, upsilon: float, n: int,
                   mode: str = "PZF", serve_dl=None, serve_ul=None) -> GroupingAssignment:
    """Group UEs at every AP from the large-scale gains.

    ``mode`` FZF forces upsilon=100 and MRT forces upsilon=0. ``serve_dl`` /
    ``serve_ul`` optionally restrict each AP's candidate UEs (boolean masks of
    the same shape as the gains); unserved UEs never enter a strong set.
    """
    mode = mode.upper()
    if mode not in PRECODING_MODES:
        raise InvalidInputError(f"unknown precoding mode {mode!r}")
    if mode == "FZF":
        upsilon = 100.0
    elif mode == "MRT":
        upsilon = 0.0

    def one_direction(beta, serve):
        beta = np.asarray(beta, dtype=float)
        mask = np.zeros(beta.shape, dtype=bool)
        serve = np.ones(beta.shape, dtype=bool) if serve is None else np.asarray(serve, bool)
        for m in range(beta.shape[0]):
            idx = np.flatnonzero(serve[m])
            strong, _ = group_ues(beta[m, idx], upsilon, n)
            mask[m, idx[list(strong)]] = True
        return mask

    return GroupingAssignment(n, one_direction(beta_dl, serve_dl), one_direction(beta_ul, serve_ul))


def zf_columns(ghat: np.ndarray, gammas: np.ndarray) -> np.ndarray:
    """ZF vectors for every column of ``ghat`` (shape ``(..., N, S)``).

    Column j of the result is ``gammas[j] * G (G^H G)^{-1} e_j``, computed via
    a QR factorization ``G = QR`` as ``Q R^{-H} diag(gammas)``.
    """
    ghat = np.asarray(ghat)
    n, s = ghat.shape[-2:]
    if s == 0:
        return np.zeros(ghat.shape, dtype=complex)
    if s > n:
        raise PrecoderError(f"ZF needs at most N={n} columns, got {s}")
    q, r = np.linalg.qr(ghat)
    diag = np.abs(np.diagonal(r, axis1=-2, axis2=-1))
    if np.any(diag.min(axis=-1) <= _RANK_TOL * diag.max(axis=-1)) or np.any(diag.max(axis=-1) == 0):
        raise PrecoderError("estimate matrix is numerically rank deficient")
    gam = np.broadcast_to(np.asarray(gammas, dtype=float), ghat.shape[:-2] + (s,))
    rhs = gam[..., None, :] * np.eye(s)
    coef = np.linalg.solve(np.conj(np.swapaxes(r, -1, -2)), rhs.astype(complex))
    return q @ coef


def zf_precoder(ghat_strong: np.ndarray, k_col: int, gamma_k: float) -> np.ndarray:
    """ZF vector for column ``k_col``: satisfies ghat_j^H v = gamma_k * [j == k_col]."""
    ghat_strong = np.asarray(ghat_strong)
    if ghat_strong.ndim != 2:
        raise InvalidInputError("ghat_strong must be an N x |S| matrix")
    s = ghat_strong.shape[1]
    if not 0 <= k_col < s:
        raise InvalidInputError(f"column {k_col} out of range for |S|={s}")
    gam = np.zeros(s)
    gam[k_col] = gamma_k
    return zf_columns(ghat_strong, gam)[:, k_col]


def mrt_precoder(ghat_k: np.ndarray) -> np.ndarray:
    return np.asarray(ghat_k).copy()


def ul_combiner(ghat_strong: np.ndarray, ell_col: int, gamma_ell: float, mode: str = "ZF",
                ghat_ell: np.ndarray | None = None) -> np.ndarray:
    """Local UL combining vector; ZF over the strong set or MR on the UE's own estimate."""
    mode = mode.upper()
    if mode == "ZF":
        return zf_precoder(ghat_strong, ell_col, gamma_ell)
    if mode in ("MR", "MRT", "MRC"):
        if ghat_ell is None:
            ghat_ell = np.asarray(ghat_strong)[:, ell_col]
        return mrt_precoder(ghat_ell)
    raise InvalidInputError(f"unknown combining mode {mode!r}")


@dataclass(frozen=True)
class PrecoderSet:
    """Precoders ``v_dl`` (..., M, K_d, N) and combiners ``v_ul`` (..., M, K_u, N).

    Entries for APs not serving a direction are zero.
    """

    v_dl: np.ndarray
    v_ul: np.ndarray


def _pzf_vectors(ghat: np.ndarray, gamma: np.ndarray, strong: np.ndarray,
                 active: np.ndarray) -> np.ndarray:
    out = np.zeros_like(ghat)
    for m in range(ghat.shape[-3]):
        if not active[m]:
            continue
        s_idx = np.flatnonzero(strong[m])
        w_idx = np.flatnonzero(~strong[m])
        if s_idx.size:
            cols = np.swapaxes(ghat[..., m, s_idx, :], -1, -2)
            out[..., m, s_idx, :] = np.swapaxes(zf_columns(cols, gamma[m, s_idx]), -1, -2)
        out[..., m, w_idx, :] = ghat[..., m, w_idx, :]
    return out


def build_precoders(ghat_dl: np.ndarray, ghat_ul: np.ndarray, gamma_dl: np.ndarray,
                    gamma_ul: np.ndarray, grouping: GroupingAssignment, a, b) -> PrecoderSet:
    """PZF precoders/combiners for every AP from (possibly batched) estimates."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    return PrecoderSet(_pzf_vectors(ghat_dl, gamma_dl, grouping.strong_dl, a),
                       _pzf_vectors(ghat_ul, gamma_ul, grouping.strong_ul, b))
