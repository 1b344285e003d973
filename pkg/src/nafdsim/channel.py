"""Large-scale fading (path loss + correlated shadowing) and Rayleigh small-scale draws.

All gains are linear power gains. SNRs ``rho_*`` are normalized by the noise
power, so ``rho * beta`` is a received SNR.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from nafdsim.errors import InvalidInputError, ModelConstructionError
from nafdsim.topology import NetworkTopology, pairwise_wrap_distance

SHADOW_STD_DB = 4.0
DECORR_DISTANCE_M = 9.0
MIN_DISTANCE_M = 1.0
_JITTER = 1e-12


def pathloss_db(d: float) -> float:
    """Path loss in dB at distance ``d`` (meters), -30.5 - 36.7 log10(d)."""
    if not math.isfinite(d) or d <= 0:
        raise InvalidInputError(f"pathloss_db: distance must be positive and finite, got {d}")
    return -30.5 - 36.7 * math.log10(d)


def _pathloss_db_array(d: np.ndarray) -> np.ndarray:
    return -30.5 - 36.7 * np.log10(np.maximum(d, MIN_DISTANCE_M))


def shadowing_covariance(delta: float, same_ap: bool) -> float:
    """Covariance (dB^2) of two shadowing terms whose UEs are ``delta`` meters apart."""
    if not math.isfinite(delta) or delta < 0:
        raise InvalidInputError(f"shadowing_covariance: delta must be finite and >= 0, got {delta}")
    if not same_ap:
        return 0.0
    return SHADOW_STD_DB**2 * 2.0 ** (-delta / DECORR_DISTANCE_M)


def shadowing_factor(ue_positions: np.ndarray, side: float) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T`` equal to the per-AP UE shadowing covariance."""
    ue_positions = np.asarray(ue_positions, dtype=float).reshape(-1, 2)
    k = ue_positions.shape[0]
    if k == 0:
        return np.zeros((0, 0))
    dist = pairwise_wrap_distance(ue_positions, ue_positions, side)
    cov = SHADOW_STD_DB**2 * 2.0 ** (-dist / DECORR_DISTANCE_M)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(cov + _JITTER * np.eye(k))
    except np.linalg.LinAlgError as exc:
        raise ModelConstructionError(
            "shadowing covariance is not positive semidefinite after regularization") from exc


def draw_shadowing(factor: np.ndarray, n_aps: int, rng: np.random.Generator,
                   n_samples: int | None = None) -> np.ndarray:
    """Shadowing in dB, shape ``(n_aps, K)`` or ``(n_samples, n_aps, K)``.

    Rows for different APs are independent; within a row the UE terms are
    correlated through ``factor``.
    """
    k = factor.shape[0]
    shape = (n_aps, k) if n_samples is None else (n_samples, n_aps, k)
    return rng.standard_normal(shape) @ factor.T


def mmse_gamma(beta, tau_t: float, rho_t: float):
    """Variance of the MMSE channel estimate under orthogonal pilots.

    ``rho_t = inf`` gives perfect CSI (gamma == beta).
    """
    beta = np.asarray(beta, dtype=float)
    if math.isinf(rho_t):
        out = beta.copy()
    else:
        snr = tau_t * rho_t
        out = snr * beta**2 / (snr * beta + 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ChannelConfig:
    """Normalized SNRs and training parameters.

    ``si_ratio_db`` is the residual SI power per receive antenna over the noise
    floor when the AP radiates its full transmit budget. ``tau_t = None``
    means one orthogonal pilot per UE; ``rho_t = None`` reuses ``rho_u``.
    """

    rho_d: float
    rho_u: float
    si_ratio_db: float = 50.0
    tau_c: int = 200
    tau_t: int | None = None
    rho_t: float | None = None
    perfect_csi: bool = False

    def __post_init__(self):
        if not (self.rho_d > 0 and self.rho_u > 0):
            raise InvalidInputError("rho_d and rho_u must be positive")
        if self.tau_c < 2:
            raise InvalidInputError("tau_c must be at least 2")

    @classmethod
    def from_physical(cls, p_ap_tx: float, p_ue_tx: float, bandwidth: float = 20e6,
                      noise_figure_db: float = 9.0, **kwargs) -> "ChannelConfig":
        noise_w = noise_power_w(bandwidth, noise_figure_db)
        return cls(rho_d=p_ap_tx / noise_w, rho_u=p_ue_tx / noise_w, **kwargs)

    def pilot_length(self, k_d: int, k_u: int) -> int:
        return self.tau_t if self.tau_t is not None else max(k_d + k_u, 1)

    def pilot_snr(self) -> float:
        if self.perfect_csi:
            return math.inf
        return self.rho_t if self.rho_t is not None else self.rho_u


def noise_power_w(bandwidth: float, noise_figure_db: float) -> float:
    """Thermal noise power in watts (-174 dBm/Hz plus noise figure)."""
    dbm = -174.0 + 10.0 * math.log10(bandwidth) + noise_figure_db
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class LargeScaleModel:
    """Large-scale coefficients for every link class.

    ``beta_ap[m, i]`` (``m != i``) is the AP i -> AP m gain; its diagonal holds
    the SI channel variance in gain units, ``si_variance / rho_d``, so that
    ``rho_d * beta_ap[m, m]`` equals the configured SI-to-noise ratio.
    ``si_variance`` itself is the noise-normalized ratio.
    """

    beta_dl: np.ndarray
    beta_ul: np.ndarray
    beta_du: np.ndarray
    beta_ap: np.ndarray
    si_variance: np.ndarray
    pilot_length: int
    coherence_length: int
    gamma_dl: np.ndarray
    gamma_ul: np.ndarray
    shadowing_db: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m = self.beta_ap.shape[0]
        k_d = self.beta_dl.shape[1]
        k_u = self.beta_ul.shape[1]
        if self.beta_dl.shape != (m, k_d) or self.beta_ul.shape != (m, k_u):
            raise InvalidInputError("beta_dl/beta_ul shapes inconsistent with beta_ap")
        if self.beta_du.shape != (k_d, k_u):
            raise InvalidInputError("beta_du must be K_d x K_u")
        if self.pilot_length < max(k_d, k_u) or self.pilot_length >= self.coherence_length:
            raise InvalidInputError(
                f"need max(K_d, K_u) <= tau_t < tau_c, got tau_t={self.pilot_length}, "
                f"tau_c={self.coherence_length}")
        for name in ("beta_dl", "beta_ul", "beta_du", "beta_ap"):
            arr = getattr(self, name)
            if not (np.all(np.isfinite(arr)) and np.all(arr > 0)):
                raise InvalidInputError(f"{name}: all coefficients must be positive and finite")
        for g, b, name in ((self.gamma_dl, self.beta_dl, "gamma_dl"),
                           (self.gamma_ul, self.beta_ul, "gamma_ul")):
            if np.any(g <= 0) or np.any(g > b * (1 + 1e-12)):
                raise InvalidInputError(f"{name}: need 0 < gamma <= beta")

    @property
    def n_aps(self) -> int:
        return self.beta_ap.shape[0]

    @property
    def n_dl(self) -> int:
        return self.beta_dl.shape[1]

    @property
    def n_ul(self) -> int:
        return self.beta_ul.shape[1]

    @property
    def training_prelog(self) -> float:
        return 1.0 - self.pilot_length / self.coherence_length

    def with_gamma(self, gamma_dl: np.ndarray, gamma_ul: np.ndarray) -> "LargeScaleModel":
        return LargeScaleModel(self.beta_dl, self.beta_ul, self.beta_du, self.beta_ap,
                               self.si_variance, self.pilot_length, self.coherence_length,
                               np.asarray(gamma_dl, float), np.asarray(gamma_ul, float),
                               self.shadowing_db)

    def with_si_ratio(self, si_ratio_db: float, rho_d: float) -> "LargeScaleModel":
        si = np.full(self.n_aps, 10.0 ** (si_ratio_db / 10.0))
        beta_ap = self.beta_ap.copy()
        np.fill_diagonal(beta_ap, si / rho_d)
        return LargeScaleModel(self.beta_dl, self.beta_ul, self.beta_du, beta_ap, si,
                               self.pilot_length, self.coherence_length, self.gamma_dl,
                               self.gamma_ul, self.shadowing_db)


def build_large_scale(beta_dl, beta_ul, beta_du, beta_ap_offdiag, cfg: ChannelConfig,
                      shadowing_db=None) -> LargeScaleModel:
    """Assemble a model from explicit gain matrices (diagonal of ``beta_ap_offdiag`` ignored)."""
    beta_dl = np.asarray(beta_dl, dtype=float)
    beta_ul = np.asarray(beta_ul, dtype=float)
    m = beta_dl.shape[0] if beta_dl.size else np.asarray(beta_ap_offdiag).shape[0]
    beta_dl = beta_dl.reshape(m, -1)
    beta_ul = beta_ul.reshape(m, -1)
    k_d, k_u = beta_dl.shape[1], beta_ul.shape[1]
    beta_du = np.asarray(beta_du, dtype=float).reshape(k_d, k_u)
    beta_ap = np.array(beta_ap_offdiag, dtype=float).reshape(m, m)
    si = np.full(m, 10.0 ** (cfg.si_ratio_db / 10.0))
    np.fill_diagonal(beta_ap, si / cfg.rho_d)
    tau_t = cfg.pilot_length(k_d, k_u)
    rho_t = cfg.pilot_snr()
    return LargeScaleModel(
        beta_dl=beta_dl, beta_ul=beta_ul, beta_du=beta_du, beta_ap=beta_ap, si_variance=si,
        pilot_length=tau_t, coherence_length=cfg.tau_c,
        gamma_dl=mmse_gamma(beta_dl, tau_t, rho_t), gamma_ul=mmse_gamma(beta_ul, tau_t, rho_t),
        shadowing_db=shadowing_db)


def draw_large_scale(topo: NetworkTopology, cfg: ChannelConfig, seed) -> LargeScaleModel:
    """Draw path loss plus correlated log-normal shadowing for all links."""
    rng = np.random.default_rng(seed)
    side = topo.side_length
    m, k_d = topo.n_aps, topo.n_dl
    ues = topo.ue_positions

    d_ap_ue = pairwise_wrap_distance(topo.ap_positions, ues, side)
    shadow = draw_shadowing(shadowing_factor(ues, side), m, rng)
    beta_ap_ue = 10.0 ** ((_pathloss_db_array(d_ap_ue) + shadow) / 10.0)

    d_du = pairwise_wrap_distance(topo.dl_ue_positions, topo.ul_ue_positions, side)
    f_du = SHADOW_STD_DB * rng.standard_normal(d_du.shape)
    beta_du = 10.0 ** ((_pathloss_db_array(d_du) + f_du) / 10.0)

    d_ap = topo.ap_ap_distances()
    f_ap = np.triu(SHADOW_STD_DB * rng.standard_normal((m, m)), 1)
    f_ap = f_ap + f_ap.T
    beta_ap = 10.0 ** ((_pathloss_db_array(d_ap) + f_ap) / 10.0)

    return build_large_scale(beta_ap_ue[:, :k_d], beta_ap_ue[:, k_d:], beta_du, beta_ap, cfg,
                             shadowing_db=shadow)


@dataclass(frozen=True)
class SmallScaleDraw:
    """One (or a batch of) Rayleigh realizations.

    Array shapes carry an optional leading draw axis ``D``:
    ``g_dl``/``ghat_dl``/``err_dl``: (D, M, K_d, N); ``g_ul`` etc.: (D, M, K_u, N);
    ``h_du``: (D, K_d, K_u); ``z_ap``: (D, M, M, N, N) with ``z_ap[m, i]`` the
    AP i -> AP m channel, or ``None`` when not drawn.
    """

    g_dl: np.ndarray
    g_ul: np.ndarray
    h_du: np.ndarray
    z_ap: np.ndarray | None
    ghat_dl: np.ndarray
    ghat_ul: np.ndarray
    err_dl: np.ndarray
    err_ul: np.ndarray


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def draw_small_scale(ls: LargeScaleModel, n: int, seed, n_draws: int | None = None,
                     include_ap: bool = True) -> SmallScaleDraw:
    """Rayleigh draws consistent with ``ls``; the estimate and its error are independent."""
    if n < 1:
        raise InvalidInputError("antenna count must be >= 1")
    rng = np.random.default_rng(seed)
    pre = () if n_draws is None else (n_draws,)
    m, k_d, k_u = ls.n_aps, ls.n_dl, ls.n_ul

    def link(gamma, beta):
        hat = np.sqrt(gamma)[..., None] * _cn(rng, pre + gamma.shape + (n,))
        err = np.sqrt(np.maximum(beta - gamma, 0.0))[..., None] * _cn(rng, pre + gamma.shape + (n,))
        return hat, err

    ghat_dl, err_dl = link(ls.gamma_dl, ls.beta_dl)
    ghat_ul, err_ul = link(ls.gamma_ul, ls.beta_ul)
    h_du = np.sqrt(ls.beta_du) * _cn(rng, pre + (k_d, k_u))
    z_ap = None
    if include_ap:
        z_ap = np.sqrt(ls.beta_ap)[..., None, None] * _cn(rng, pre + (m, m, n, n))
    return SmallScaleDraw(g_dl=ghat_dl + err_dl, g_ul=ghat_ul + err_ul, h_du=h_du, z_ap=z_ap,
                          ghat_dl=ghat_dl, ghat_ul=ghat_ul, err_dl=err_dl, err_ul=err_ul)
