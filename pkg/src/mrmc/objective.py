"""Mutual informations, MSE matrices, WMMSE filters and weights, and the
scalar objectives (CWSM and weighted-sum MSE).

All mutual informations and rates are in nats; conversion to bits happens
only at reporting boundaries.  The stacked radar statistic Sigma_t is rank
deficient, so radar weights and the correction terms of the CWSM/WMMSE
identity use pseudo-inverses / pseudo-determinants (exact through the
factored form Sigma_t = F F^H).
"""

from dataclasses import dataclass

import numpy as np

from ._linalg import RIDGE, herm, hermitize, inv_psd, logdet_psd, logpdet, eigh_psd
from .signal_model import CovarianceBundle


@dataclass
class FilterSet:
    """Linear receive filters: U_r[n_r] (KM x K), U_u[i] (K, Du, N_c), U_d[j] (K, Dd, Nd)."""
    U_r: list
    U_u: list
    U_d: list


@dataclass
class WeightSet:
    """Hermitian PSD weights paired with the MSE matrices.

    W_r_core holds the (M_r+1)-dim core G of the factored radar weight
    W_r = F G F^H when the weights came from :func:`optimal_weights`; it is
    what the optimizer consumes.
    """
    W_r: list
    W_u: list
    W_d: list
    W_r_core: list = None


def _mi_from_parts(M_sig, M_in):
    M_in = hermitize(M_in)
    try:
        den = logdet_psd(M_in)
    except np.linalg.LinAlgError:
        raise ValueError("degenerate filter") from None
    num = logdet_psd(hermitize(M_sig + M_in))
    return max(float(num - den), 0.0)


def radar_mi(U_r, R_t, R_in_r) -> float:
    """Radar mutual information log|I + U R_t U^H (U R_in U^H)^{-1}| in nats.

    For the tall KM x K filter the quadratic forms are evaluated on the
    column space of U (the support of the filtered signal); for a square
    nonsingular U this equals the literal expression.
    """
    U = np.asarray(U_r)
    if U.shape[0] == U.shape[1]:
        Z = U
    else:
        W, s, Vh = np.linalg.svd(U, full_matrices=False)
        keep = s > (s.max() * max(U.shape) * 1e-13 if s.size and s.max() > 0 else 1.0)
        if not np.any(keep):
            raise ValueError("degenerate filter")
        Z = (s[keep, None] * Vh[keep])  # rank x K restriction of U to its row action
    return _mi_from_parts(Z @ R_t @ herm(Z), Z @ R_in_r @ herm(Z))


def comm_mi(U, R_signal, R_in) -> float:
    """Per-stream communications MI log|I + U R_s U^H (U R_in U^H)^{-1}| in nats."""
    U = np.asarray(U)
    return _mi_from_parts(U @ R_signal @ herm(U), U @ R_in @ herm(U))


def cwsm(filters: FilterSet, bundle: CovarianceBundle, cfg) -> float:
    """Compounded-and-weighted sum MI: radar terms once per CPI, comm terms per frame."""
    total = 0.0
    for n_r in range(cfg.N_r):
        total += cfg.alpha_r[n_r] * radar_mi(filters.U_r[n_r], bundle.R_t[n_r],
                                             bundle.R_in_r[n_r])
    for k in range(cfg.K):
        for i in range(cfg.I):
            total += cfg.alpha_u[i] * comm_mi(filters.U_u[i][k], bundle.R_iB[i][k],
                                              bundle.R_in_u[i][k])
        for j in range(cfg.J):
            total += cfg.alpha_d[j] * comm_mi(filters.U_d[j][k], bundle.R_DLj[j][k],
                                              bundle.R_in_d[j][k])
    return float(total)


def mse_matrices(filters: FilterSet, bundle: CovarianceBundle, cfg):
    """MSE matrices E_r[n_r], E_u[i][k], E_d[j][k] at the given filters."""
    E_r = []
    for n_r in range(cfg.N_r):
        U = filters.U_r[n_r]
        Sig = bundle.Sigma_t[n_r]
        St = bundle.S_t[n_r]
        R_r = bundle.R_t[n_r] + bundle.R_in_r[n_r]
        cross = U @ (St @ Sig)
        E = Sig - cross - herm(cross) + U @ R_r @ herm(U)
        E_r.append(hermitize(E))
    E_u = []
    for i in range(cfg.I):
        Ei = np.empty((cfg.K, cfg.Du_i[i], cfg.Du_i[i]), dtype=complex)
        for k in range(cfg.K):
            U = filters.U_u[i][k]
            HP = bundle.HP_u[i][k]
            cross = U @ HP
            Ei[k] = hermitize(np.eye(cfg.Du_i[i]) - cross - herm(cross)
                              + U @ bundle.R_u[i][k] @ herm(U))
        E_u.append(Ei)
    E_d = []
    for j in range(cfg.J):
        Ej = np.empty((cfg.K, cfg.Dd_j[j], cfg.Dd_j[j]), dtype=complex)
        for k in range(cfg.K):
            U = filters.U_d[j][k]
            HP = bundle.HP_d[j][k]
            cross = U @ HP
            Ej[k] = hermitize(np.eye(cfg.Dd_j[j]) - cross - herm(cross)
                              + U @ bundle.R_d[j][k] @ herm(U))
        E_d.append(Ej)
    return E_r, E_u, E_d


def wmmse_filters(bundle: CovarianceBundle, cfg) -> FilterSet:
    """MMSE-optimal receive filters.

    U_r = Sigma_t S_t^H R_r^{-1}; U_u = (H P)^H R_u^{-1}; U_d analogous."""
    U_r = []
    for n_r in range(cfg.N_r):
        F = bundle.Sigma_t_factor[n_r]
        B = bundle.target_B[n_r]
        R_r = hermitize(bundle.R_t[n_r] + bundle.R_in_r[n_r])
        try:
            U_r.append(F @ herm(B) @ inv_psd(R_r))
        except np.linalg.LinAlgError:
            raise ValueError("degenerate covariance") from None
    U_u = []
    for i in range(cfg.I):
        Ui = np.empty((cfg.K, cfg.Du_i[i], cfg.N_c), dtype=complex)
        for k in range(cfg.K):
            Ui[k] = herm(bundle.HP_u[i][k]) @ inv_psd(bundle.R_u[i][k])
        U_u.append(Ui)
    U_d = []
    for j in range(cfg.J):
        Uj = np.empty((cfg.K, cfg.Dd_j[j], cfg.Nd_j[j]), dtype=complex)
        for k in range(cfg.K):
            Uj[k] = herm(bundle.HP_d[j][k]) @ inv_psd(bundle.R_d[j][k])
        U_d.append(Uj)
    return FilterSet(U_r=U_r, U_u=U_u, U_d=U_d)


def mmse_matrices(bundle: CovarianceBundle, cfg):
    """Closed-form minimum MSE matrices at the optimal filters."""
    E_r = []
    for n_r in range(cfg.N_r):
        F = bundle.Sigma_t_factor[n_r]
        B = bundle.target_B[n_r]
        R_r = hermitize(bundle.R_t[n_r] + bundle.R_in_r[n_r])
        core = np.eye(B.shape[1]) - herm(B) @ inv_psd(R_r) @ B
        E_r.append(hermitize(F @ core @ herm(F)))
    E_u = []
    for i in range(cfg.I):
        Ei = np.empty((cfg.K, cfg.Du_i[i], cfg.Du_i[i]), dtype=complex)
        for k in range(cfg.K):
            HP = bundle.HP_u[i][k]
            Ei[k] = hermitize(np.eye(cfg.Du_i[i])
                              - herm(HP) @ inv_psd(bundle.R_u[i][k]) @ HP)
        E_u.append(Ei)
    E_d = []
    for j in range(cfg.J):
        Ej = np.empty((cfg.K, cfg.Dd_j[j], cfg.Dd_j[j]), dtype=complex)
        for k in range(cfg.K):
            HP = bundle.HP_d[j][k]
            Ej[k] = hermitize(np.eye(cfg.Dd_j[j])
                              - herm(HP) @ inv_psd(bundle.R_d[j][k]) @ HP)
        E_d.append(Ej)
    return E_r, E_u, E_d


def _pinv_psd(E):
    w, V = eigh_psd(E)
    cutoff = w.max() * E.shape[0] * 1e-12
    inv_w = np.where(w > cutoff, 1.0 / np.maximum(w, cutoff), 0.0)
    return hermitize((V * inv_w) @ herm(V))


def optimal_weights(e_star, bundle: CovarianceBundle = None, cfg=None) -> WeightSet:
    """First-order optimal weights W = inverse of the minimum MSE.

    The radar MMSE matrix is singular (rank M_r+1), so its weight is the
    pseudo-inverse; when the bundle is supplied it is built exactly from the
    factored form and the (M_r+1)-dim core is cached on the WeightSet.
    """
    E_r, E_u, E_d = e_star
    W_r, cores = [], []
    for n_r, E in enumerate(E_r):
        if bundle is not None:
            F = bundle.Sigma_t_factor[n_r]
            B = bundle.target_B[n_r]
            R_r = hermitize(bundle.R_t[n_r] + bundle.R_in_r[n_r])
            core = np.eye(B.shape[1]) - herm(B) @ inv_psd(R_r) @ B
            FtF_inv = inv_psd(herm(F) @ F)
            G = hermitize(FtF_inv @ inv_psd(hermitize(core)) @ FtF_inv)
            W_r.append(hermitize(F @ G @ herm(F)))
            cores.append(G)
        else:
            W_r.append(_pinv_psd(E))
            cores.append(None)
    def inv_block(E_list):
        out = []
        for E in E_list:
            W = np.empty_like(E)
            for k in range(E.shape[0]):
                try:
                    W[k] = hermitize(inv_psd(E[k]))
                except np.linalg.LinAlgError:
                    raise ValueError("singular MMSE matrix") from None
            out.append(W)
        return out
    return WeightSet(W_r=W_r, W_u=inv_block(E_u), W_d=inv_block(E_d), W_r_core=cores)


def achievable_rates(bundle: CovarianceBundle, cfg):
    """Rates log|I + R_sig R_in^{-1}| in nats: (R_r[n_r], R_u[I,K], R_d[J,K])."""
    Rr = np.empty(cfg.N_r)
    for n_r in range(cfg.N_r):
        R_in = bundle.R_in_r[n_r]
        Rr[n_r] = logdet_psd(hermitize(bundle.R_t[n_r] + R_in)) - logdet_psd(R_in)
    Ru = np.empty((cfg.I, cfg.K))
    for i in range(cfg.I):
        for k in range(cfg.K):
            Ru[i, k] = (logdet_psd(bundle.R_u[i][k])
                        - logdet_psd(bundle.R_in_u[i][k]))
    Rd = np.empty((cfg.J, cfg.K))
    for j in range(cfg.J):
        for k in range(cfg.K):
            Rd[j, k] = (logdet_psd(bundle.R_d[j][k])
                        - logdet_psd(bundle.R_in_d[j][k]))
    return Rr, Ru, Rd


def weighted_sum_mse(filters: FilterSet, weights: WeightSet,
                     bundle: CovarianceBundle, cfg):
    """Weighted-sum MSE Xi and its (Xi_UL, Xi_DL, Xi_r) split."""
    E_r, E_u, E_d = mse_matrices(filters, bundle, cfg)
    xi_r = sum(cfg.alpha_r[n_r] * float(np.real(np.sum(weights.W_r[n_r].T * E_r[n_r])))
               for n_r in range(cfg.N_r))
    xi_ul = 0.0
    for i in range(cfg.I):
        for k in range(cfg.K):
            xi_ul += cfg.alpha_u[i] * float(np.real(np.sum(weights.W_u[i][k].T * E_u[i][k])))
    xi_dl = 0.0
    for j in range(cfg.J):
        for k in range(cfg.K):
            xi_dl += cfg.alpha_d[j] * float(np.real(np.sum(weights.W_d[j][k].T * E_d[j][k])))
    return xi_ul + xi_dl + xi_r, xi_ul, xi_dl, xi_r


def xi_wmse_prime(filters: FilterSet, weights: WeightSet,
                  bundle: CovarianceBundle, cfg) -> float:
    """Corrected weighted-sum MSE whose value at (U*, W*) is -I_CWSM.

    Xi' = Xi - sum alpha (logdet W + dim) over comm terms, with the radar
    correction alpha_r (logpdet W_r + rank + logpdet Sigma_t) in the
    pseudo-determinant convention forced by the singular Sigma_t.
    """
    xi, _, _, _ = weighted_sum_mse(filters, weights, bundle, cfg)
    corr = 0.0
    for n_r in range(cfg.N_r):
        lpd_w, rank_w = logpdet(weights.W_r[n_r])
        lpd_sig, _ = logpdet(bundle.Sigma_t[n_r])
        corr += cfg.alpha_r[n_r] * (lpd_w + rank_w + lpd_sig)
    for k in range(cfg.K):
        for i in range(cfg.I):
            corr += cfg.alpha_u[i] * (logdet_psd(weights.W_u[i][k]) + cfg.Du_i[i])
        for j in range(cfg.J):
            corr += cfg.alpha_d[j] * (logdet_psd(weights.W_d[j][k]) + cfg.Dd_j[j])
    return float(xi - corr)
