"""Covariance matrices and stacked signal operators of the receive model.

Every radar-side slow-time covariance has the Hadamard structure
(phase outer product) o (signal Gram), which the builders exploit; the
stacked target statistic Sigma_t is kept in factored form Sigma_t = F F^H
(rank M_r + 1) alongside the materialized matrices required by the module
contracts.
"""

from dataclasses import dataclass

import numpy as np

from ._linalg import herm, hermitize
from .scenario import ChannelSet, Pilots, SystemConfig

FEAS_RTOL = 1e-10


# ---------------------------------------------------------------------------
# code matrix feasibility

def par(a) -> float:
    """Peak-to-average power ratio K max|a_k|^2 / ||a||^2 of one code column."""
    a = np.asarray(a)
    p = np.abs(a) ** 2
    total = p.sum()
    if total == 0:
        return float("inf")
    return float(len(a) * p.max() / total)


def code_feasible(A, P_r_m, gamma_m, rtol=FEAS_RTOL) -> bool:
    """Column-wise power equality and PAR bound for a K x M_r code matrix."""
    A = np.asarray(A)
    K = A.shape[0]
    for m in range(A.shape[1]):
        norm2 = float(np.sum(np.abs(A[:, m]) ** 2))
        if abs(norm2 - P_r_m[m]) > rtol * max(P_r_m[m], 1.0):
            return False
        if K * np.max(np.abs(A[:, m]) ** 2) / P_r_m[m] > gamma_m[m] + rtol:
            return False
    return True


@dataclass
class CodeMatrix:
    """Slow-time code, rows a^T[k] per PRI, columns a_m per radar Tx."""
    A: np.ndarray

    def feasible(self, cfg: SystemConfig) -> bool:
        return code_feasible(self.A, cfg.P_r_m, cfg.gamma_m)


# ---------------------------------------------------------------------------
# precoders

@dataclass
class PrecoderSet:
    """UL precoders P_u[i] of shape (K, Nu_i, Du_i) and DL P_d[j] of (K, M_c, Dd_j)."""
    P_u: list
    P_d: list

    def copy(self):
        return PrecoderSet([p.copy() for p in self.P_u], [p.copy() for p in self.P_d])


def transmit_powers(precoders: PrecoderSet, k: int):
    """Frame-k BS total power and per-UL-UE powers, tr{P P^H}."""
    P_d_total = float(sum(np.sum(np.abs(P[k]) ** 2) for P in precoders.P_d))
    P_u = [float(np.sum(np.abs(P[k]) ** 2)) for P in precoders.P_u]
    return P_d_total, P_u


# ---------------------------------------------------------------------------
# stacked-operator plumbing

def selection_matrices(cfg: SystemConfig):
    """J_r (M x M_r), J_B (M x M_c), and the per-pulse J_h[k] (KM x M)."""
    M = cfg.M
    J_r = np.zeros((M, cfg.M_r))
    J_r[: cfg.M_r, :] = np.eye(cfg.M_r)
    J_B = np.zeros((M, cfg.M_c))
    J_B[cfg.M_r:, :] = np.eye(cfg.M_c)
    J_h = []
    for k in range(cfg.K):
        Jk = np.zeros((cfg.K * M, M))
        Jk[k * M:(k + 1) * M, :] = np.eye(M)
        J_h.append(Jk)
    return J_r, J_B, J_h


def dl_superposed_symbol(P_d, pilots: Pilots, k: int, l: int):
    """BS transmit vector at symbol (k, l): sum_j P_d[j][k] d_d[j][k, l]."""
    return sum(P_d[j][k] @ pilots.d_d[j][k, l] for j in range(len(P_d)))


def target_factor(ch: ChannelSet, A, P_d, n_r: int):
    """Low-rank factor F (KM x (M_r+1)) with Sigma_t = F F^H, and B = S_t F (K x (M_r+1)).

    Column m < M_r carries the m-th radar Tx slow-time phase ramp; the last
    column carries the DL-target response through the BS steering vector.
    Without cooperation the DL column of B is zero (reflections unobserved).
    """
    cfg = ch.cfg
    K, M_r, M_c = cfg.K, cfg.M_r, cfg.M_c
    M = cfg.M
    r = M_r + 1
    F = np.zeros((K * M, r), dtype=complex)
    B = np.zeros((K, r), dtype=complex)
    v_rt = np.stack([ch.doppler_phase(ch.f_rt[m, n_r]) for m in range(M_r)], axis=1)  # (K, M_r)
    amp_rt = np.sqrt(ch.eta2_rt[:, n_r])
    v_Bt = ch.doppler_phase(ch.f_Bt[n_r])
    amp_Bt = np.sqrt(ch.eta2_Bt[n_r])
    for k in range(K):
        rows = slice(k * M, (k + 1) * M)
        F[rows, :M_r][np.arange(M_r), np.arange(M_r)] = amp_rt * v_rt[k]
        F[k * M + M_r:(k + 1) * M, M_r] = amp_Bt * v_Bt[k] * ch.a_T.conj()
        B[k, :M_r] = A[k] * amp_rt * v_rt[k]
        if cfg.cooperation:
            s_Bt = dl_superposed_symbol(P_d, ch.pilots, k, 0)
            B[k, M_r] = amp_Bt * v_Bt[k] * (ch.a_T.conj() @ s_Bt)
    return F, B


def build_target_cov(ch: ChannelSet, A, P_d, pilots: Pilots, n_r: int):
    """Target covariance R_t = R_rt (+ R_Bt under cooperation) with its factored form.

    Returns (R_t, S_t, Sigma_t) where R_t = S_t Sigma_t S_t^H, S_t is the
    K x KM block-diagonal stacked transmit operator and Sigma_t the KM x KM
    stacked target-response covariance.
    """
    cfg = ch.cfg
    K, M = cfg.K, cfg.M
    F, B = target_factor(ch, A, P_d, n_r)
    S_t = np.zeros((K, K * M), dtype=complex)
    for k in range(K):
        s_t = np.zeros(M, dtype=complex)
        s_t[: cfg.M_r] = A[k]
        if cfg.cooperation:
            s_t[cfg.M_r:] = dl_superposed_symbol(P_d, pilots, k, 0)
        S_t[k, k * M:(k + 1) * M] = s_t
    Sigma_t = hermitize(F @ herm(F))
    R_t = hermitize(B @ herm(B))
    return R_t, S_t, Sigma_t


def build_dl_target_cov(ch: ChannelSet, P_d, n_r: int):
    """DL-reflection covariance R_Bt (counted as interference when cooperation is off)."""
    cfg = ch.cfg
    v = ch.doppler_phase(ch.f_Bt[n_r])
    b = np.array([ch.a_T.conj() @ dl_superposed_symbol(P_d, ch.pilots, k, 0)
                  for k in range(cfg.K)])
    x = np.sqrt(ch.eta2_Bt[n_r]) * v * b
    return hermitize(np.outer(x, x.conj()))


def build_clutter_cov(A, Sigma_c):
    """Clutter covariance R_c = A Sigma_c A^H."""
    A = np.asarray(A)
    return hermitize(A @ Sigma_c @ herm(A))


def build_bs_direct_cov(ch: ChannelSet, P_d, n_r: int):
    """Direct-path DL covariance at the radar, R_Bm."""
    cfg = ch.cfg
    v = ch.doppler_phase(ch.f_Bm[n_r])
    S = np.stack([dl_superposed_symbol(P_d, ch.pilots, k, cfg.n_t) for k in range(cfg.K)])
    X = v[:, None] * S  # (K, M_c), rows v[k] s_Bm[k]^T
    return hermitize(ch.eta2_Bm[n_r] * (X @ X.conj().T))


def build_ul_radar_cov(ch: ChannelSet, P_u, n_r: int):
    """UL interference covariance at the radar, summed over UEs."""
    cfg = ch.cfg
    R = np.zeros((cfg.K, cfg.K), dtype=complex)
    for i in range(cfg.I):
        v = ch.doppler_phase(ch.f_u[i, n_r])
        S = np.stack([P_u[i][k] @ ch.pilots.d_u[i][k, cfg.n_t] for k in range(cfg.K)])
        X = v[:, None] * S
        R += ch.eta2_u[i, n_r] * (X @ X.conj().T)
    return hermitize(R)


def build_radar_interference_cov(ch: ChannelSet, A, precoders: PrecoderSet,
                                 pilots: Pilots, n_r: int):
    """Interference-plus-noise covariance R_in_r = R_c + R_Bm + R_UL + sigma2_r I.

    With cooperation off the DL reflection R_Bt joins the interference."""
    cfg = ch.cfg
    R = build_clutter_cov(A, ch.Sigma_c)
    R += build_bs_direct_cov(ch, precoders.P_d, n_r)
    R += build_ul_radar_cov(ch, precoders.P_u, n_r)
    if not cfg.cooperation:
        R += build_dl_target_cov(ch, precoders.P_d, n_r)
    R += cfg.sigma2_r * np.eye(cfg.K)
    return hermitize(R)


def build_uplink_cov(ch: ChannelSet, A, precoders: PrecoderSet, i: int, k: int):
    """BS receive covariances for UL UE i at frame k: (R_u, R_in_u, R_iB)."""
    cfg = ch.cfg
    H = ch.H_iB[i]
    R_iB = H @ precoders.P_u[i][k] @ herm(precoders.P_u[i][k]) @ herm(H)
    R_in = np.zeros((cfg.N_c, cfg.N_c), dtype=complex)
    for q in range(cfg.I):
        if q == i:
            continue
        Hq = ch.H_iB[q]
        R_in += Hq @ precoders.P_u[q][k] @ herm(precoders.P_u[q][k]) @ herm(Hq)
    for j in range(cfg.J):
        R_in += ch.H_BB @ precoders.P_d[j][k] @ herm(precoders.P_d[j][k]) @ herm(ch.H_BB)
    ra = ch.H_rB @ A[k]
    R_in += np.outer(ra, ra.conj())
    R_in += cfg.sigma2_B * np.eye(cfg.N_c)
    R_iB = hermitize(R_iB)
    R_in = hermitize(R_in)
    return hermitize(R_iB + R_in), R_in, R_iB


def build_downlink_cov(ch: ChannelSet, A, precoders: PrecoderSet, j: int, k: int):
    """DL UE j receive covariances at frame k: (R_d, R_in_d, R_DLj)."""
    cfg = ch.cfg
    H = ch.H_Bj[j]
    R_DL = H @ precoders.P_d[j][k] @ herm(precoders.P_d[j][k]) @ herm(H)
    R_in = np.zeros((cfg.Nd_j[j], cfg.Nd_j[j]), dtype=complex)
    for g in range(cfg.J):
        if g == j:
            continue
        R_in += H @ precoders.P_d[g][k] @ herm(precoders.P_d[g][k]) @ herm(H)
    for i in range(cfg.I):
        Hij = ch.H_ij[i][j]
        R_in += Hij @ precoders.P_u[i][k] @ herm(precoders.P_u[i][k]) @ herm(Hij)
    ra = ch.H_rj[j] @ A[k]
    R_in += np.outer(ra, ra.conj())
    R_in += cfg.sigma2_d * np.eye(cfg.Nd_j[j])
    R_DL = hermitize(R_DL)
    R_in = hermitize(R_in)
    return hermitize(R_DL + R_in), R_in, R_DL


# ---------------------------------------------------------------------------
# bundle

@dataclass
class CovarianceBundle:
    """Every per-receiver covariance derived from (channels, design variables)."""

    R_t: list        # per n_r, K x K
    R_in_r: list     # per n_r, K x K
    S_t: list        # per n_r, K x KM
    Sigma_t: list    # per n_r, KM x KM
    Sigma_t_factor: list  # per n_r, KM x (M_r+1), Sigma_t = F F^H
    target_B: list   # per n_r, K x (M_r+1), R_t = B B^H
    R_u: list        # per i, (K, N_c, N_c)
    R_in_u: list
    R_iB: list
    R_d: list        # per j, (K, Nd_j, Nd_j)
    R_in_d: list
    R_DLj: list
    HP_u: list       # per i, (K, N_c, Du_i): effective UL signal channel H_iB P_u
    HP_d: list       # per j, (K, Nd_j, Dd_j): effective DL signal channel H_Bj P_d
    J_r: np.ndarray
    J_B: np.ndarray
    J_h: list


def build_bundle(ch: ChannelSet, precoders: PrecoderSet, A) -> CovarianceBundle:
    """Assemble the full covariance bundle at the symbols of interest."""
    cfg = ch.cfg
    J_r, J_B, J_h = selection_matrices(cfg)
    R_t, R_in_r, S_t, Sig, Fs, Bs = [], [], [], [], [], []
    for n_r in range(cfg.N_r):
        Rt, St, Sg = build_target_cov(ch, A, precoders.P_d, ch.pilots, n_r)
        F, Bmat = target_factor(ch, A, precoders.P_d, n_r)
        R_t.append(Rt)
        S_t.append(St)
        Sig.append(Sg)
        Fs.append(F)
        Bs.append(Bmat)
        R_in_r.append(build_radar_interference_cov(ch, A, precoders, ch.pilots, n_r))
    R_u = [np.empty((cfg.K, cfg.N_c, cfg.N_c), dtype=complex) for _ in range(cfg.I)]
    R_in_u = [np.empty_like(R_u[i]) for i in range(cfg.I)]
    R_iB = [np.empty_like(R_u[i]) for i in range(cfg.I)]
    for i in range(cfg.I):
        for k in range(cfg.K):
            R_u[i][k], R_in_u[i][k], R_iB[i][k] = build_uplink_cov(ch, A, precoders, i, k)
    R_d = [np.empty((cfg.K, cfg.Nd_j[j], cfg.Nd_j[j]), dtype=complex) for j in range(cfg.J)]
    R_in_d = [np.empty_like(R_d[j]) for j in range(cfg.J)]
    R_DLj = [np.empty_like(R_d[j]) for j in range(cfg.J)]
    for j in range(cfg.J):
        for k in range(cfg.K):
            R_d[j][k], R_in_d[j][k], R_DLj[j][k] = build_downlink_cov(ch, A, precoders, j, k)
    HP_u = [np.stack([ch.H_iB[i] @ precoders.P_u[i][k] for k in range(cfg.K)])
            for i in range(cfg.I)]
    HP_d = [np.stack([ch.H_Bj[j] @ precoders.P_d[j][k] for k in range(cfg.K)])
            for j in range(cfg.J)]
    return CovarianceBundle(
        R_t=R_t, R_in_r=R_in_r, S_t=S_t, Sigma_t=Sig,
        Sigma_t_factor=Fs, target_B=Bs,
        R_u=R_u, R_in_u=R_in_u, R_iB=R_iB,
        R_d=R_d, R_in_d=R_in_d, R_DLj=R_DLj,
        HP_u=HP_u, HP_d=HP_d,
        J_r=J_r, J_B=J_B, J_h=J_h,
    )
