"""Monte-Carlo estimate of every SE term from simulated received signals.

Draws are generated in fixed-size batches, batch ``c`` seeded by ``(seed, c)``,
so the result depends only on ``(seed, n_draws, batch_size)``.
"""
from __future__ import annotations

import numpy as np

from nafdsim.channel import LargeScaleModel, draw_small_scale
from nafdsim.performance.types import DuplexAssignment, PowerAllocation, SEReport
from nafdsim.precoding import GroupingAssignment, build_precoders

DEFAULT_BATCH = 500


def _inner(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """x[..., m, i, :]^H y[..., m, j, :] -> [..., m, i, j]."""
    return np.einsum("...min,...mjn->...mij", np.conj(x), y)


def mc_estimate_terms(structure: str, ls: LargeScaleModel, grouping: GroupingAssignment,
                      duplex: DuplexAssignment, power: PowerAllocation, n_draws: int, seed,
                      batch_size: int = DEFAULT_BATCH) -> SEReport:
    """Empirical counterpart of the closed-form terms.

    DL: the coefficient of symbol k' at DL UE k,
    A[k, k'] = sqrt(rho_d) sum_m a_m theta_mk' g_mk^H v_mk',
    gives desired = mean A[k, k], self = sample variance of A[k, k],
    inter_ue = sum_{k' != k} mean |A[k, k']|^2. UL analogously on the CPU
    output sum_m alpha_ml v_ml^H y_m; the cross-link coefficient of DL symbol
    q collects every (UL AP m, DL AP i) path, split into the SI part (m = i)
    and the inter-AP part. Noise terms are conditional expectations over the
    AWGN given the drawn combiners.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    if structure.upper() != duplex.structure:
        raise ValueError(f"{structure!r} does not match duplex structure {duplex.structure!r}")
    n = grouping.n_antennas
    m_aps, k_d, k_u = ls.n_aps, ls.n_dl, ls.n_ul
    a = duplex.a.astype(float)
    b = duplex.b.astype(float)
    theta, alpha, vs = power.theta, power.alpha, power.varsigma
    cross = duplex.cross_link

    a_diag, b_diag = [], []
    dl_inter = np.zeros(k_d)
    dl_err = np.zeros(k_d)
    udl = np.zeros(k_d)
    ul_inter = np.zeros(k_u)
    ul_err = np.zeros(k_u)
    ul_noise = np.zeros(k_u)
    phi_si = np.zeros(k_u)
    phi_iap = np.zeros(k_u)
    off_dl = ~np.eye(k_d, dtype=bool)
    off_ul = ~np.eye(k_u, dtype=bool)

    done = 0
    batch_idx = 0
    while done < n_draws:
        size = min(batch_size, n_draws - done)
        draw = draw_small_scale(ls, n, seed=[int(seed), batch_idx], n_draws=size,
                                include_ap=cross)
        prec = build_precoders(draw.ghat_dl, draw.ghat_ul, ls.gamma_dl, ls.gamma_ul,
                               grouping, duplex.a, duplex.b)
        v, u = prec.v_dl, prec.v_ul

        # DL: [d, m, k, k'] inner products of channel to UE k with precoder of k'.
        w_dl = np.sqrt(power.rho_d) * a[:, None] * theta  # [m, k']
        coef = np.einsum("dmkj,mj->dkj", _inner(draw.g_dl, v), w_dl)
        coef_err = np.einsum("dmkj,mj->dkj", _inner(draw.err_dl, v), w_dl)
        a_diag.append(np.diagonal(coef, axis1=1, axis2=2).copy())
        dl_inter += np.sum(np.abs(coef) ** 2 * off_dl, axis=(0, 2))
        dl_err += np.sum(np.abs(coef_err) ** 2, axis=(0, 2))
        if cross:
            udl += power.rho_u * np.sum(np.abs(draw.h_du) ** 2 @ vs, axis=0)

        # UL: [d, m, l, j] inner products of combiner of l with channel of UE j.
        w_ul = alpha * b[:, None]  # [m, l]
        amp = np.sqrt(power.rho_u * vs)  # [j]
        coef = np.einsum("dmlj,ml,j->dlj", _inner(u, draw.g_ul), w_ul, amp)
        coef_err = np.einsum("dmlj,ml,j->dlj", _inner(u, draw.err_ul), w_ul, amp)
        b_diag.append(np.diagonal(coef, axis1=1, axis2=2).copy())
        ul_inter += np.sum(np.abs(coef) ** 2 * off_ul, axis=(0, 2))
        ul_err += np.sum(np.abs(coef_err) ** 2, axis=(0, 2))
        ul_noise += np.sum(np.sum(np.abs(u) ** 2, axis=-1) * w_ul**2, axis=(0, 1))

        if cross:
            # z_ap[d, m, i] maps AP i's transmit vector into AP m's receiver.
            zv = np.einsum("dmirc,diqc->dmiqr", draw.z_ap, v)
            t = np.einsum("dmlr,dmiqr->dlmiq", np.conj(u), zv)
            t = t * (np.sqrt(power.rho_d) * w_ul.T[None, :, :, None, None]
                     * (a[:, None] * theta)[None, None, None, :, :])
            eye = np.eye(m_aps, dtype=bool)[None, None, :, :, None]
            c_si = np.sum(np.where(eye, t, 0.0), axis=(2, 3))
            c_iap = np.sum(np.where(eye, 0.0, t), axis=(2, 3))
            phi_si += np.sum(np.abs(c_si) ** 2, axis=(0, 2))
            phi_iap += np.sum(np.abs(c_iap) ** 2, axis=(0, 2))

        done += size
        batch_idx += 1

    a_all = np.concatenate(a_diag, axis=0)
    b_all = np.concatenate(b_diag, axis=0)
    a_mean = a_all.mean(axis=0)
    b_mean = b_all.mean(axis=0)
    d = float(n_draws)
    dl_terms = {
        "desired": a_mean.real,
        "self": np.mean(np.abs(a_all - a_mean) ** 2, axis=0),
        "inter_ue": dl_inter / d,
        "ul_to_dl": udl / d,
        "est_error": dl_err / d,
        "noise": np.ones(k_d),
    }
    ul_terms = {
        "desired": b_mean.real,
        "self": np.mean(np.abs(b_all - b_mean) ** 2, axis=0),
        "inter_ue": ul_inter / d,
        "noise": ul_noise / d,
        "est_error": ul_err / d,
        "phi_iap": phi_iap / d,
        "phi_si": phi_si / d,
    }
    pre = ls.training_prelog

    def se(prelog, num, den):
        sinr = np.zeros_like(num)
        np.divide(num, den, out=sinr, where=num > 0)
        return prelog * np.log2(1 + sinr)

    dl_se = se(duplex.prelog_dl * pre, dl_terms["desired"] ** 2,
               dl_terms["self"] + dl_terms["inter_ue"] + dl_terms["ul_to_dl"] + 1.0)
    ul_se = se(duplex.prelog_ul * pre, ul_terms["desired"] ** 2,
               ul_terms["self"] + ul_terms["inter_ue"] + ul_terms["noise"]
               + ul_terms["phi_iap"] + ul_terms["phi_si"])
    return SEReport(duplex.structure, dl_se, ul_se, dl_terms, ul_terms,
                    duplex.prelog_dl * pre, duplex.prelog_ul * pre,
                    meta={"n_draws": n_draws, "seed": seed, "source": "monte-carlo"})
