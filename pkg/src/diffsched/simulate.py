"""Time-domain Monte Carlo of the reverse process with the exact denoiser.

This is the independent oracle for the closed-form spectral results: it runs
the sampler as dense affine steps on the original coordinates and never
touches the eigenbasis shortcut.

Reproducibility: sample ``i`` is generated from its own counter-based RNG
stream derived from ``(seed, i)`` (Philox keyed by the seed, counter offset
``i << 128``), so results do not depend on chunking or parallel order.
Standard normals come from the Box-Muller transform on pairs of uniforms
(``u1`` mapped from [0,1) to (0,1]), which an oracle re-implementation can
match distributionally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .spectral import (
    Schedule,
    SpectralModel,
    _ddim_ab,
    _ddpm_abc,
    _step_gains,
    _trajectory_coefficients,
)

__all__ = [
    "DenseGaussian",
    "SimConfig",
    "simulate_reverse",
    "empirical_moments",
    "relative_error_dynamics",
    "w2_dynamics",
]

SYMMETRY_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10
REL_ERR_EPS = 1e-12

_CHUNK = 4096


@dataclass
class DenseGaussian:
    """Gaussian in original coordinates: mean vector and dense covariance."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.covariance = np.asarray(self.covariance, dtype=float)
        if self.mean.ndim != 1:
            raise ValueError("mean must be a vector")
        d = len(self.mean)
        if self.covariance.shape != (d, d):
            raise ValueError(
                f"covariance shape {self.covariance.shape} does not match mean length {d}"
            )
        asym = np.max(np.abs(self.covariance - self.covariance.T))
        if asym > SYMMETRY_TOL * max(1.0, np.max(np.abs(self.covariance))):
            raise ValueError(f"covariance is not symmetric (max asymmetry {asym:.3e})")

    @property
    def dim(self) -> int:
        return len(self.mean)


@dataclass
class SimConfig:
    process: str
    samples: int
    seed: int
    schedule: Schedule

    def __post_init__(self):
        if self.process not in ("ddim", "ddpm"):
            raise ValueError(f"process must be 'ddim' or 'ddpm', got {self.process!r}")
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")


def _sample_stream_normals(seed: int, index: int, count: int) -> np.ndarray:
    """Box-Muller normals from the per-sample counter-based stream."""
    gen = Generator(Philox(key=seed, counter=index << 128))
    pairs = (count + 1) // 2
    u1 = 1.0 - gen.random(pairs)
    u2 = gen.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(2.0 * np.pi * u2)
    z[1::2] = radius * np.sin(2.0 * np.pi * u2)
    return z[:count]


def _check_psd(covariance: np.ndarray) -> None:
    eigs = np.linalg.eigvalsh(covariance)
    if eigs[0] < EIGENVALUE_FLOOR:
        raise ValueError(f"covariance is not PSD (smallest eigenvalue {eigs[0]:.3e})")


def _step_maps(target: DenseGaussian, alpha_bar: np.ndarray, process: str):
    """Dense per-step affine maps (W_s, o_s) and, for ddpm, noise scales c_s.

    Step ``s`` maps state s to s-1 via ``x <- W_s x + o_s (+ c_s z)``.
    """
    d = target.dim
    eye = np.eye(d)
    if process == "ddim":
        a, b = _ddim_ab(alpha_bar)
        c = np.zeros(len(a))
    else:
        a, b, c2 = _ddpm_abc(alpha_bar)
        c = np.sqrt(c2)
    gains = []
    offsets = []
    for s in range(len(a)):
        ab_s = alpha_bar[s + 1]
        shifted = ab_s * target.covariance + (1.0 - ab_s) * eye
        wiener_gain = np.linalg.solve(shifted, target.covariance)
        wiener_offset = np.linalg.solve(shifted, target.mean)
        gains.append(a[s] * eye + b[s] * np.sqrt(ab_s) * wiener_gain)
        offsets.append(b[s] * (1.0 - ab_s) * wiener_offset)
    return gains, offsets, c


def compose_affine(target: DenseGaussian, schedule: Schedule) -> tuple[np.ndarray, np.ndarray]:
    """Fold all deterministic steps into one map: ``x0 = T x_S + offset``."""
    schedule.validate()
    _check_psd(target.covariance)
    gains, offsets, _ = _step_maps(target, schedule.alpha_bar, "ddim")
    T = np.eye(target.dim)
    offset = np.zeros(target.dim)
    for s in range(len(gains) - 1, -1, -1):
        T = gains[s] @ T
        offset = gains[s] @ offset + offsets[s]
    return T, offset


def simulate_reverse(target: DenseGaussian, cfg: SimConfig) -> np.ndarray:
    """Draw ``cfg.samples`` outputs of the reverse process, shape (n, d).

    The deterministic sampler folds all steps into a single precomputed
    affine map; the stochastic sampler applies the per-step maps and adds
    fresh noise each step.  Sample ``i`` depends only on ``(seed, i)``.
    """
    cfg.schedule.validate()
    _check_psd(target.covariance)
    d = target.dim
    n = cfg.samples
    S = cfg.schedule.steps

    if cfg.process == "ddim":
        T, offset = compose_affine(target, cfg.schedule)
        out = np.empty((n, d))
        for start in range(0, n, _CHUNK):
            stop = min(start + _CHUNK, n)
            z = np.empty((stop - start, d))
            for i in range(start, stop):
                z[i - start] = _sample_stream_normals(cfg.seed, i, d)
            out[start:stop] = z @ T.T + offset
        return out

    gains, offsets, c = _step_maps(target, cfg.schedule.alpha_bar, "ddpm")
    per_sample = d * (S + 1)  # initial state, then one z per step
    out = np.empty((n, d))
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        draws = np.empty((stop - start, per_sample))
        for i in range(start, stop):
            draws[i - start] = _sample_stream_normals(cfg.seed, i, per_sample)
        x = draws[:, :d].copy()
        for s in range(S, 0, -1):
            z = draws[:, d * (S - s + 1) : d * (S - s + 2)]
            x = x @ gains[s - 1].T + offsets[s - 1] + c[s - 1] * z
        out[start:stop] = x
    return out


def empirical_moments(samples: np.ndarray) -> DenseGaussian:
    """Sample mean and unbiased (n-1 divisor) covariance of sample rows."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise ValueError(f"samples must be 2-D (n, d), got shape {samples.shape}")
    n = samples.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    mean = samples.mean(axis=0)
    centered = samples - mean
    cov = centered.T @ centered / (n - 1)
    cov = 0.5 * (cov + cov.T)
    return DenseGaussian(mean=mean, covariance=cov)


def _trajectory(model: SpectralModel, schedule: Schedule):
    schedule.validate()
    a, b = _ddim_ab(schedule.alpha_bar)
    G, M = _step_gains(model.eigenvalues, schedule.alpha_bar, a, b)
    return _trajectory_coefficients(G, M)


def relative_error_dynamics(model: SpectralModel, schedule: Schedule) -> np.ndarray:
    """Per-step, per-coordinate variance mismatch of the deterministic sampler.

    Row ``l`` holds ``|lam_i - var_{l,i}| / (lam_i + eps)`` where
    ``var_{l,i}`` is the state variance at step ``l``; row 0 is the output.
    """
    A, _ = _trajectory(model, schedule)
    lam = model.eigenvalues
    return np.abs(lam[None, :] - A**2) / (lam[None, :] + REL_ERR_EPS)


def w2_dynamics(model: SpectralModel, schedule: Schedule) -> np.ndarray:
    """Squared quadratic-transport distance to the target at every step.

    Entry ``l`` compares the step-``l`` state distribution with the target;
    entry ``S`` is the distance from the initial unit Gaussian, entry 0
    equals the terminal loss.
    """
    A, B = _trajectory(model, schedule)
    lam = model.eigenvalues
    mu = model.mean_spectral
    var_term = np.sum((np.sqrt(lam)[None, :] - np.abs(A)) ** 2, axis=1)
    mean_term = np.sum(mu[None, :] ** 2 * (B - 1.0) ** 2, axis=1)
    return var_term + mean_term
