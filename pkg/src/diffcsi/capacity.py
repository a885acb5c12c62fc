"""Water-filling precoder and closed-loop ergodic capacity.

The transmitter precodes on the singular vectors of the quantized channel
with water-filled per-mode powers; the per-block capacity accounts for
pilot overhead and for the residual estimation-error covariance in closed
form.  The Monte Carlo evaluator is vectorized over trials and chunked so
results are independent of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, autocorrelation
from .mathcore import RngStream, check_finite, sample_cn
from .ratedist import FeedbackBudget

__all__ = [
    "PowerAllocation",
    "CapacityConfig",
    "waterfill",
    "waterfill_batch",
    "block_capacity",
    "ergodic_capacity",
]

CHUNK_TRIALS = 2048  # fixed chunking keeps results worker-count invariant


@dataclass(frozen=True)
class PowerAllocation:
    """Per-eigenmode power weights z_i^2 with water level mu."""

    z2: np.ndarray
    mu: float
    amplitude2: float


@dataclass(frozen=True)
class CapacityConfig:
    """Link configuration for capacity evaluation.

    SNR convention: SNR = N_t A^2 sigma_h2 / sigma_0^2, so the symbol
    power is A^2 = SNR_linear * sigma_0^2 / (N_t sigma_h2).
    """

    params: ChannelParams
    snr_db: float
    l_block: int
    noise_variance: float = 1.0

    def __post_init__(self):
        if self.l_block <= self.params.n_t:
            raise ValueError("l_block must exceed n_t (pilot overhead)")
        if self.noise_variance <= 0:
            raise ValueError("noise_variance must be > 0")

    @property
    def amplitude2(self) -> float:
        snr_lin = 10.0 ** (self.snr_db / 10.0)
        return snr_lin * self.noise_variance / (self.params.n_t * self.params.sigma_h2)

    @property
    def overhead(self) -> float:
        return (self.l_block - self.params.n_t) / self.l_block


def waterfill(gammas: np.ndarray, amplitude2: float, n_t: int) -> PowerAllocation:
    """Water-fill total power N_t over eigenmodes with gains gammas.

    Active modes get z_i^2 = mu - 1/(gamma_i^2 A^2); the weakest mode is
    deactivated until every active allocation is positive.
    """
    gammas = np.asarray(gammas, dtype=float)
    if amplitude2 <= 0:
        raise ValueError("amplitude2 must be > 0")
    if np.any(gammas < 0) or np.any(np.diff(gammas) > 0):
        raise ValueError("gammas must be non-negative and sorted descending")
    if not np.any(gammas > 0):
        raise ValueError("all eigenmode gains are zero; nothing to allocate")

    inv = np.full(len(gammas), np.inf)
    live = gammas > 0
    inv[live] = 1.0 / (gammas[live] ** 2 * amplitude2)
    m = len(gammas)
    for k in range(m, 0, -1):
        if not np.isfinite(inv[k - 1]):
            continue
        mu = (n_t + inv[:k].sum()) / k
        if mu > inv[k - 1]:
            z2 = np.zeros(m)
            z2[:k] = mu - inv[:k]
            return PowerAllocation(z2=z2, mu=mu, amplitude2=amplitude2)
    raise RuntimeError("water-filling failed to find an active set")  # unreachable


def waterfill_batch(gammas: np.ndarray, amplitude2: float, n_t: int) -> np.ndarray:
    """Vectorized water-filling: gammas (B, m) descending -> z2 (B, m)."""
    g2 = np.maximum(gammas, 0.0) ** 2 * amplitude2
    inv = np.where(g2 > 0, 1.0 / np.where(g2 > 0, g2, 1.0), np.inf)
    b, m = inv.shape
    finite = np.isfinite(inv)
    csum = np.where(finite, inv, 0.0).cumsum(axis=1)
    ks = np.arange(1, m + 1)
    mu_k = (n_t + csum) / ks            # water level if first k modes active
    valid = finite & (mu_k > inv)       # weakest active mode stays positive
    k_best = np.where(valid, ks, 0).max(axis=1)
    if np.any(k_best == 0):
        raise ValueError("water-filling batch hit an all-zero channel")
    mu = np.take_along_axis(mu_k, (k_best - 1)[:, None], axis=1)
    z2 = np.where(ks[None, :] <= k_best[:, None], mu - inv, 0.0)
    return np.maximum(z2, 0.0)


def _f_matrix(j: np.ndarray, cfg: CapacityConfig) -> np.ndarray:
    """Closed-form F = (1/A^2 + N_t sigma_psi^2) I + (1-r)^2 J J^+."""
    p = cfg.params
    r = p.ratio
    eye = np.eye(p.n_r)
    jj = j @ np.swapaxes(j.conj(), -1, -2)
    diag = cfg.noise_variance / cfg.amplitude2 + p.n_t * p.psi_variance
    return diag * eye + (1.0 - r) ** 2 * jj


def _logdet_ratio(f: np.ndarray, jj: np.ndarray) -> np.ndarray:
    """log2 det(I + JJ^+ F^-1) = log2 det(F + JJ^+) - log2 det(F)."""
    _, ld_num = np.linalg.slogdet(f + jj)
    _, ld_den = np.linalg.slogdet(f)
    return (ld_num - ld_den) / math.log(2.0)


def block_capacity(h_hat: np.ndarray, h_bar: np.ndarray, cfg: CapacityConfig) -> float:
    """Per-block capacity in bits/s/Hz with precoder derived from h_bar.

    h_bar is the transmitter's (possibly outdated, quantized) channel;
    h_hat is the receiver's current estimate.
    """
    h_hat = check_finite(np.asarray(h_hat), "h_hat")
    h_bar = check_finite(np.asarray(h_bar), "h_bar")
    gammas, v = _svd_vz(h_bar)
    alloc = waterfill(gammas, cfg.amplitude2, cfg.params.n_t)
    z = np.sqrt(alloc.z2)
    j = h_hat @ v @ np.diag(z)
    jj = j @ j.conj().T
    f = _f_matrix(j, cfg)
    return float(cfg.overhead * _logdet_ratio(f, jj))


def _svd_vz(h_bar: np.ndarray):
    """Singular values (descending) and right singular vectors of h_bar."""
    _, s, vh = np.linalg.svd(h_bar)
    return s, np.swapaxes(vh.conj(), -1, -2)


def _held_precoder(h_bar: np.ndarray, cfg: CapacityConfig):
    """Batched precoder (V sqrt(Z^2)) from quantized channel (B, nr, nt)."""
    s, v = _svd_vz(h_bar)
    z2 = waterfill_batch(s, cfg.amplitude2, cfg.params.n_t)
    return v * np.sqrt(z2)[:, None, :]   # V @ diag(z)


def _capacity_batch(h_hat: np.ndarray, vz: np.ndarray, cfg: CapacityConfig) -> np.ndarray:
    j = h_hat @ vz
    jj = j @ np.swapaxes(j.conj(), -1, -2)
    f = _f_matrix(j, cfg)
    return cfg.overhead * _logdet_ratio(f, jj)


def _simulate_chunk(args):
    """One chunk of Monte Carlo trials; pure function of (seed, chunk index)."""
    cfg, budget, d, n_trials, seed, chunk_id, periods, mode = args
    p = cfg.params
    rng = RngStream(seed, chunk_id).generator()
    t = max(1, budget.t_blocks)
    alpha1 = autocorrelation(p, 1.0)
    beta = math.sqrt(1.0 - alpha1 * alpha1)
    shape = (n_trials, p.n_r, p.n_t)

    h = sample_cn(shape, p.sigma_h2, rng)
    per_block = []
    if mode == "analytic":
        # independent per-block snapshots with the effective distortion d
        for _ in range(periods):
            h_hat = h + sample_cn(shape, p.sigma_e2, rng)
            h_bar = h_hat - sample_cn(shape, d, rng)
            vz = _held_precoder(h_bar, cfg)
            per_block.append(_capacity_batch(h_hat, vz, cfg))
            h = sample_cn(shape, p.sigma_h2, rng)
    else:
        # causal feedback: the quantized channel produced at an epoch is
        # applied during the following period, so the CSI in use at the
        # epoch itself is one interval old (matches the delayed-distortion
        # closed form).  The cold-start period uses its own epoch's
        # feedback and is excluded from the statistics.
        vz = None
        for period in range(periods + 1):
            for b in range(t):
                h_hat = h + sample_cn(shape, p.sigma_e2, rng)
                if b == 0:
                    h_bar = h_hat - sample_cn(shape, d, rng)
                    next_vz = _held_precoder(h_bar, cfg)
                    if vz is None:
                        vz = next_vz
                if period > 0:
                    per_block.append(_capacity_batch(h_hat, vz, cfg))
                h = alpha1 * h + beta * sample_cn(shape, p.sigma_h2, rng)
            vz = next_vz
    caps = np.stack(per_block, axis=0)          # (blocks, trials)
    return caps.mean(axis=0)                    # per-trial mean


def ergodic_capacity(
    cfg: CapacityConfig,
    budget: FeedbackBudget,
    d: float,
    trials: int,
    seed: int,
    periods: int = 1,
    mode: str = "simulate",
    workers: int = 1,
):
    """Monte Carlo mean and standard error of the per-block capacity.

    mode "simulate": quantized feedback is formed at each epoch from the
    current estimate (additive error of per-entry variance d) and the
    precoder is held for T blocks, so within-period aging is simulated.
    mode "analytic": every block gets an independent snapshot with the
    supplied effective distortion (the theory curve).

    Deterministic for fixed (seed, trials) regardless of worker count:
    trials are split into fixed-size chunks, each with its own substream.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if mode not in ("simulate", "analytic"):
        raise ValueError(f"unknown mode {mode!r}")
    chunks = []
    start = 0
    cid = 0
    while start < trials:
        n = min(CHUNK_TRIALS, trials - start)
        chunks.append((cfg, budget, d, n, seed, cid, periods, mode))
        start += n
        cid += 1

    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_simulate_chunk, chunks))
    else:
        results = [_simulate_chunk(c) for c in chunks]

    per_trial = np.concatenate(results)
    mean = float(math.fsum(per_trial) / trials)
    if trials == 1:
        return mean, float("nan")
    var = math.fsum((per_trial - mean) ** 2) / (trials - 1)
    return mean, math.sqrt(var / trials)
