"""Problem instances: system configuration plus one seeded channel realization.

A scenario is a validated :class:`SystemConfig` together with a
:class:`ChannelSet` drawn deterministically from ``(cfg, seed)``.  All
second-order channel statistics (Doppler-phase covariance blocks, clutter,
steering) are parameterized here and consumed by :mod:`mrmc.signal_model`.
"""

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from ._linalg import rand_cn

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def lin2db(x):
    return 10.0 * np.log10(x)


# Normalized-Doppler law for target and direct paths (uniform support).
DOPPLER_LOW = 0.05
DOPPLER_HIGH = 0.325

# Rician parameters for the radar -> comm interference channels.
RICIAN_KAPPA = 1.0
MU_RADAR_BS = 0.1
MU_RADAR_DL = 0.05
ETA2_RADAR_BS = 0.3
ETA2_RADAR_DL = 0.5
RICIAN_K_BS = 1.0  # self-interference channel K-factor


@dataclass
class SystemConfig:
    """All scalar dimensions, powers, weights, floors, and iteration caps.

    Powers, CNR, and PAR bounds are stored in linear units; rate floors in
    bits/s/Hz.  ``configuration files`` may use dB (see :func:`load_config`).
    """

    M_r: int = 4                 # radar Tx count
    N_r: int = 4                 # radar Rx count
    M_c: int = 4                 # BS Tx antennas
    N_c: int = 4                 # BS Rx antennas
    I: int = 2                   # UL UE count
    J: int = 2                   # DL UE count
    Nu_i: list = field(default_factory=lambda: [2, 2])   # per-UL-UE antennas
    Nd_j: list = field(default_factory=lambda: [2, 2])   # per-DL-UE antennas
    Du_i: list = field(default_factory=lambda: [2, 2])   # UL data streams
    Dd_j: list = field(default_factory=lambda: [2, 2])   # DL data streams
    K: int = 8                   # pulses / frames per CPI
    N: int = 32                  # range cells (symbols) per PRI
    n_t: int = 4                 # cell under test
    n_rB: int = 2                # UL symbol of interest
    n_rd: int = 3                # DL symbol of interest
    P_B: float = 0.01            # max DL transmit power (linear)
    P_U: float = 0.01            # max UL transmit power per UE (linear)
    P_r_m: list = field(default_factory=lambda: [0.001] * 4)  # per-Tx radar power
    gamma_m: list = field(default_factory=lambda: [10 ** 0.3] * 4)  # per-Tx PAR bound
    sigma2_r: float = 0.001      # radar Rx noise variance
    sigma2_B: float = 0.001      # BS Rx noise variance
    sigma2_d: float = 0.001      # DL UE noise variance
    CNR: float = 100.0           # clutter-to-noise ratio (linear)
    R_UL: float = 0.5025         # UL QoS floor (bits/s/Hz)
    R_DL: float = 0.2295         # DL QoS floor (bits/s/Hz)
    alpha_r: list = field(default_factory=lambda: [0.125] * 4)  # radar CWSM weights
    alpha_u: list = field(default_factory=lambda: [0.125] * 2)  # UL CWSM weights
    alpha_d: list = field(default_factory=lambda: [0.125] * 2)  # DL CWSM weights
    t_u_max: int = 50            # subgradient iterations, UL
    t_d_max: int = 50            # subgradient iterations, DL
    iota_max: int = 1            # WMMSE-MRMC sweeps per outer iteration
    ell_max: int = 200           # outer BCD-AP iterations
    rng_seed: int = 0
    cooperation: bool = True     # DL reflections processed as radar signal

    @property
    def M(self):
        """Effective transmit dimension for target detection, M_r + M_c."""
        return self.M_r + self.M_c

    def to_dict(self):
        return asdict(self)


def validate_config(cfg: SystemConfig) -> list:
    """Check every SystemConfig invariant; return the list of violations (empty = ok)."""
    errors = []
    counts = {
        "M_r": cfg.M_r, "N_r": cfg.N_r, "M_c": cfg.M_c, "N_c": cfg.N_c,
        "I": cfg.I, "J": cfg.J, "K": cfg.K, "N": cfg.N,
    }
    for name, v in counts.items():
        if int(v) < 1:
            errors.append(f"count {name} must be >= 1, got {v}")
    for name, lst, n in (("Nu_i", cfg.Nu_i, cfg.I), ("Nd_j", cfg.Nd_j, cfg.J),
                         ("Du_i", cfg.Du_i, cfg.I), ("Dd_j", cfg.Dd_j, cfg.J),
                         ("P_r_m", cfg.P_r_m, cfg.M_r), ("gamma_m", cfg.gamma_m, cfg.M_r),
                         ("alpha_r", cfg.alpha_r, cfg.N_r), ("alpha_u", cfg.alpha_u, cfg.I),
                         ("alpha_d", cfg.alpha_d, cfg.J)):
        if len(lst) != n:
            errors.append(f"{name} must have length {n}, got {len(lst)}")
    if len(cfg.Nd_j) == cfg.J and cfg.M_c < sum(cfg.Nd_j):
        errors.append(f"M_c < sum(Nd_j): {cfg.M_c} < {sum(cfg.Nd_j)}")
    if len(cfg.Nu_i) == cfg.I and cfg.N_c < sum(cfg.Nu_i):
        errors.append(f"N_c < sum(Nu_i): {cfg.N_c} < {sum(cfg.Nu_i)}")
    if len(cfg.Du_i) == len(cfg.Nu_i):
        for i, (d, n) in enumerate(zip(cfg.Du_i, cfg.Nu_i)):
            if d < 1 or d > n:
                errors.append(f"Du_i[{i}] must satisfy 1 <= Du <= Nu, got {d} (Nu={n})")
    if len(cfg.Dd_j) == len(cfg.Nd_j):
        for j, (d, n) in enumerate(zip(cfg.Dd_j, cfg.Nd_j)):
            if d < 1 or d > n:
                errors.append(f"Dd_j[{j}] must satisfy 1 <= Dd <= Nd, got {d} (Nd={n})")
    for name, v in (("P_B", cfg.P_B), ("P_U", cfg.P_U), ("sigma2_r", cfg.sigma2_r),
                    ("sigma2_B", cfg.sigma2_B), ("sigma2_d", cfg.sigma2_d), ("CNR", cfg.CNR)):
        if not v > 0:
            errors.append(f"nonpositive power/variance {name} = {v}")
    for m, p in enumerate(cfg.P_r_m):
        if not p > 0:
            errors.append(f"nonpositive power P_r_m[{m}] = {p}")
    for m, g in enumerate(cfg.gamma_m):
        if g < 1.0:
            errors.append(f"PAR below 1: gamma_m[{m}] = {g}")
        elif g > cfg.K:
            errors.append(f"PAR out of [1, K]: gamma_m[{m}] = {g} > K = {cfg.K}")
    for name, v in (("n_t", cfg.n_t), ("n_rB", cfg.n_rB), ("n_rd", cfg.n_rd)):
        if not (0 <= v <= cfg.N - 1):
            errors.append(f"{name} = {v} outside [0, N-1]")
    for name, lst in (("alpha_r", cfg.alpha_r), ("alpha_u", cfg.alpha_u), ("alpha_d", cfg.alpha_d)):
        if any(not a > 0 for a in lst):
            errors.append(f"weights {name} must be strictly positive")
    for name, v in (("t_u_max", cfg.t_u_max), ("t_d_max", cfg.t_d_max),
                    ("iota_max", cfg.iota_max), ("ell_max", cfg.ell_max)):
        if v < 0:
            errors.append(f"iteration cap {name} must be >= 0, got {v}")
    if not (0 <= cfg.R_UL) or not (0 <= cfg.R_DL):
        errors.append("QoS floors must be >= 0")
    return errors


def require_valid(cfg: SystemConfig):
    errors = validate_config(cfg)
    if errors:
        raise ValueError("invalid SystemConfig:\n  " + "\n  ".join(errors))


def qos_floors(cfg: SystemConfig, SNR_r, SNR_UL, SNR_DL):
    """QoS rate floors (bits/s/Hz) from the linear SNR operating point.

    R_u = log2(1 + SNR_UL / (M_r SNR_r + SNR_DL + (I-1) SNR_UL)) and the
    analogous per-user DL form with the DL power split across J UEs.
    """
    if min(SNR_r, SNR_UL, SNR_DL) <= 0:
        raise ValueError("SNRs must be positive (linear)")
    eps = 1e-15
    den_u = cfg.M_r * SNR_r + SNR_DL + (cfg.I - 1) * SNR_UL
    if den_u < eps:
        R_u = math.log2(1.0 + SNR_UL)
    else:
        R_u = math.log2(1.0 + SNR_UL / den_u)
    den_d = cfg.M_r * SNR_r + SNR_DL * (cfg.J - 1) / cfg.J + cfg.I * SNR_UL
    if den_d < eps:
        R_d = math.log2(1.0 + SNR_DL / cfg.J)
    else:
        R_d = math.log2(1.0 + (SNR_DL / cfg.J) / den_d)
    return R_u, R_d


def doppler_from_geometry(v_x, v_y, theta_tx, phi_rx, lam):
    """Bistatic Doppler f = (v_x/lam)(cos th + cos ph) + (v_y/lam)(sin th + sin ph)."""
    if lam <= 0:
        raise ValueError("wavelength must be positive")
    return (v_x / lam) * (math.cos(theta_tx) + math.cos(phi_rx)) \
        + (v_y / lam) * (math.sin(theta_tx) + math.sin(phi_rx))


def steering_vector(theta, n_antennas):
    """Half-wavelength ULA transmit steering vector."""
    m = np.arange(n_antennas)
    return np.exp(1j * np.pi * m * np.sin(theta))


def default_config(SNR_r_db=0.0, SNR_UL_db=10.0, SNR_DL_db=10.0, CNR_db=20.0, **overrides):
    """SS-default configuration; powers and QoS floors derived from the SNR point."""
    cfg = SystemConfig()
    snr_r = float(db2lin(SNR_r_db))
    snr_ul = float(db2lin(SNR_UL_db))
    snr_dl = float(db2lin(SNR_DL_db))
    cfg.CNR = float(db2lin(CNR_db))
    cfg.P_r_m = [snr_r * cfg.sigma2_r] * cfg.M_r
    cfg.P_U = snr_ul * cfg.sigma2_B
    cfg.P_B = snr_dl * cfg.sigma2_d
    cfg.R_UL, cfg.R_DL = qos_floors(cfg, snr_r, snr_ul, snr_dl)
    for k, v in overrides.items():
        if not hasattr(cfg, k):
            raise ValueError(f"unknown SystemConfig field {k!r}")
        setattr(cfg, k, v)
    return cfg


@dataclass
class Pilots:
    """Deterministic unit-modulus QPSK symbol tables, one per UE.

    d_u[i] has shape (K, N, Du_i); d_d[j] has shape (K, N, Dd_j).  Each symbol
    vector has squared norm equal to its stream count.
    """
    d_u: list
    d_d: list


@dataclass
class ChannelSet:
    """One realization of every channel matrix and second-order statistic."""

    cfg: SystemConfig
    seed: int
    # communications channels
    H_iB: list          # per UL UE, (N_c, Nu_i)
    H_Bj: list          # per DL UE, (Nd_j, M_c)
    H_BB: np.ndarray    # self interference, (N_c, M_c)
    H_ij: list          # H_ij[i][j], (Nd_j, Nu_i)
    # radar -> comm interference channels (Rician)
    H_rB: np.ndarray    # (N_c, M_r)
    H_rj: list          # per DL UE, (Nd_j, M_r)
    # target / direct-path second-order statistics (normalized Dopplers, gains)
    f_rt: np.ndarray    # (M_r, N_r) target normalized Dopplers per Tx-Rx pair
    eta2_rt: np.ndarray  # (M_r, N_r) target reflection powers
    f_Bt: np.ndarray    # (N_r,) DL-target Doppler per radar Rx
    eta2_Bt: np.ndarray  # (N_r,)
    theta_Bt: float     # BS AoD toward the target
    a_T: np.ndarray     # (M_c,) BS steering vector at theta_Bt
    f_Bm: np.ndarray    # (N_r,) BS direct-path Doppler per radar Rx
    eta2_Bm: np.ndarray  # (N_r,)
    f_u: np.ndarray     # (I, N_r) UL direct-path Dopplers
    eta2_u: np.ndarray  # (I, N_r)
    Sigma_c: np.ndarray  # (M_r, M_r) clutter covariance
    pilots: Pilots

    def doppler_phase(self, f):
        """Slow-time phase vector v[k] = exp(j 2 pi k f), k = 0..K-1."""
        k = np.arange(self.cfg.K)
        return np.exp(2j * np.pi * k * f)


def _qpsk(rng, shape):
    idx = rng.integers(0, 4, size=shape)
    return np.exp(1j * (np.pi / 4.0 + np.pi / 2.0 * idx))


def generate_channels(cfg: SystemConfig, seed: int) -> ChannelSet:
    """Draw one ChannelSet; pure function of (cfg, seed).

    Small-scale fades are i.i.d. CN(0,1); H_BB and the radar->comm channels
    are Rician; normalized Dopplers are uniform on [0.05, 0.325]; clutter is
    sigma_c^2 I with sigma_c^2 = CNR * sigma2_r.  The draw order below is part
    of the reproducibility contract.
    """
    require_valid(cfg)
    rng = np.random.default_rng(seed)

    H_iB = [rand_cn(rng, (cfg.N_c, cfg.Nu_i[i])) for i in range(cfg.I)]
    H_Bj = [rand_cn(rng, (cfg.Nd_j[j], cfg.M_c)) for j in range(cfg.J)]
    kb = RICIAN_K_BS
    H_BB = (np.sqrt(kb / (1 + kb)) * np.ones((cfg.N_c, cfg.M_c))
            + rand_cn(rng, (cfg.N_c, cfg.M_c), var=1.0 / (1 + kb)))
    H_ij = [[rand_cn(rng, (cfg.Nd_j[j], cfg.Nu_i[i])) for j in range(cfg.J)]
            for i in range(cfg.I)]

    kap = RICIAN_KAPPA
    H_rB = (np.sqrt(1.0 / (kap + 1)) * MU_RADAR_BS * np.ones((cfg.N_c, cfg.M_r))
            + rand_cn(rng, (cfg.N_c, cfg.M_r), var=ETA2_RADAR_BS / (kap + 1)))
    H_rj = [(np.sqrt(1.0 / (kap + 1)) * MU_RADAR_DL * np.ones((cfg.Nd_j[j], cfg.M_r))
             + rand_cn(rng, (cfg.Nd_j[j], cfg.M_r), var=ETA2_RADAR_DL / (kap + 1)))
            for j in range(cfg.J)]

    unif = lambda shape: rng.uniform(DOPPLER_LOW, DOPPLER_HIGH, size=shape)
    f_rt = unif((cfg.M_r, cfg.N_r))
    f_Bt = unif(cfg.N_r)
    f_Bm = unif(cfg.N_r)
    f_u = unif((cfg.I, cfg.N_r))
    theta_Bt = float(rng.uniform(-np.pi / 2, np.pi / 2))

    d_u = [_qpsk(rng, (cfg.K, cfg.N, cfg.Du_i[i])) for i in range(cfg.I)]
    d_d = [_qpsk(rng, (cfg.K, cfg.N, cfg.Dd_j[j])) for j in range(cfg.J)]

    sigma2_c = cfg.CNR * cfg.sigma2_r
    return ChannelSet(
        cfg=cfg, seed=seed,
        H_iB=H_iB, H_Bj=H_Bj, H_BB=H_BB, H_ij=H_ij, H_rB=H_rB, H_rj=H_rj,
        f_rt=f_rt, eta2_rt=np.ones((cfg.M_r, cfg.N_r)),
        f_Bt=f_Bt, eta2_Bt=np.ones(cfg.N_r),
        theta_Bt=theta_Bt, a_T=steering_vector(theta_Bt, cfg.M_c),
        f_Bm=f_Bm, eta2_Bm=np.ones(cfg.N_r),
        f_u=f_u, eta2_u=np.ones((cfg.I, cfg.N_r)),
        Sigma_c=sigma2_c * np.eye(cfg.M_r),
        pilots=Pilots(d_u=d_u, d_d=d_d),
    )


# ---------------------------------------------------------------------------
# configuration file ingestion

_DB_KEYS = {"CNR", "gamma_m", "SNR_r", "SNR_UL", "SNR_DL"}
_DERIVED_KEYS = {"SNR_r", "SNR_UL", "SNR_DL", "units"}


def config_from_dict(doc: dict) -> SystemConfig:
    """Build a SystemConfig from a parsed document.

    Keys mirror SystemConfig field names.  A "units" key ("db" | "linear",
    default linear) selects the convention for SNR/CNR/PAR values.  Optional
    SNR_r / SNR_UL / SNR_DL keys derive the transmit powers from the noise
    variances and, when floors are not given, the QoS floors as well.
    """
    doc = dict(doc)
    units = str(doc.get("units", "linear")).lower()
    if units not in ("db", "linear"):
        raise ValueError(f'units must be "db" or "linear", got {units!r}')

    def to_linear(key, value):
        if units == "db" and key in _DB_KEYS:
            if isinstance(value, (list, tuple)):
                return [float(db2lin(v)) for v in value]
            return float(db2lin(value))
        return value

    cfg = SystemConfig()
    explicit_floors = ("R_UL" in doc) or ("R_DL" in doc)
    for key, value in doc.items():
        if key in _DERIVED_KEYS:
            continue
        if not hasattr(cfg, key):
            raise ValueError(f"unknown config key {key!r}")
        setattr(cfg, key, to_linear(key, value))

    snrs = {k: to_linear(k, doc[k]) for k in ("SNR_r", "SNR_UL", "SNR_DL") if k in doc}
    if "SNR_r" in snrs:
        cfg.P_r_m = [snrs["SNR_r"] * cfg.sigma2_r] * cfg.M_r
    if "SNR_UL" in snrs:
        cfg.P_U = snrs["SNR_UL"] * cfg.sigma2_B
    if "SNR_DL" in snrs:
        cfg.P_B = snrs["SNR_DL"] * cfg.sigma2_d
    if len(snrs) == 3 and not explicit_floors:
        cfg.R_UL, cfg.R_DL = qos_floors(cfg, snrs["SNR_r"], snrs["SNR_UL"], snrs["SNR_DL"])

    # scalar-per-Tx shorthand for radar power / PAR
    if not isinstance(cfg.P_r_m, (list, tuple)):
        cfg.P_r_m = [float(cfg.P_r_m)] * cfg.M_r
    if not isinstance(cfg.gamma_m, (list, tuple)):
        cfg.gamma_m = [float(cfg.gamma_m)] * cfg.M_r
    cfg.P_r_m = [float(p) for p in cfg.P_r_m]
    cfg.gamma_m = [float(g) for g in cfg.gamma_m]

    require_valid(cfg)
    return cfg


def load_config(path) -> SystemConfig:
    """Load a SystemConfig from a JSON or TOML document."""
    path = Path(path)
    if path.suffix.lower() == ".toml":
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    else:
        with open(path, "r") as fh:
            doc = json.load(fh)
    return config_from_dict(doc)
