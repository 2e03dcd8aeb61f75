"""Building spectral targets from data or synthetic constructions.

Covers the synthetic circulant benchmark model, sliding-window covariance
estimation from sample streams with silence rejection, projection of
near-Toeplitz estimates onto circulant structure, eigendecomposition into a
spectral model, and principal-component truncation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .simulate import DenseGaussian
from .spectral import SpectralModel

__all__ = [
    "EstimationConfig",
    "CovarianceEstimate",
    "synthetic_circulant_model",
    "sliding_window_covariance",
    "covariance_from_windows",
    "toeplitz_average",
    "circulant_projection",
    "circulant_matrix",
    "spectral_model_from_covariance",
    "pca_truncate",
]


@dataclass
class EstimationConfig:
    """Sliding-window estimation settings.

    ``stride`` defaults to the window length (non-overlapping windows, which
    avoids inflating the estimate with correlated samples).  A window is
    rejected as silence when its mean absolute amplitude falls below
    ``silence_threshold``.
    """

    window: int
    stride: int | None = None
    silence_threshold: float = 0.05
    structure: str = "circulant"

    def __post_init__(self):
        if self.window < 2:
            raise ValueError(f"window must be >= 2, got {self.window}")
        if self.stride is None:
            self.stride = self.window
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.silence_threshold < 0:
            raise ValueError("silence_threshold must be >= 0")
        if self.structure not in ("circulant", "symmetric"):
            raise ValueError(f"structure must be 'circulant' or 'symmetric', got {self.structure!r}")


@dataclass
class CovarianceEstimate:
    mean: np.ndarray
    covariance: np.ndarray
    windows_used: int
    windows_rejected: int

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.covariance = np.asarray(self.covariance, dtype=float)


def synthetic_circulant_model(
    d: int, l: float, mu_const: float
) -> tuple[DenseGaussian, SpectralModel]:
    """Benchmark target with a circulant covariance and a constant mean.

    The covariance is ``A.T @ A`` for the circulant matrix ``A`` whose first
    row ramps linearly from ``-l`` to ``l`` over ``d`` entries.  Because the
    ramp sums to zero, the DC eigenvalue vanishes exactly.  The spectral
    form uses the Fourier eigenbasis: eigenvalues are the squared DFT
    magnitudes of the ramp row, and the constant mean projects onto the DC
    coordinate alone (value ``mu_const * sqrt(d)``).
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if l <= 0:
        raise ValueError(f"l must be positive, got {l}")
    row = np.linspace(-l, l, d)
    A = circulant_matrix(row)
    covariance = A.T @ A
    covariance = 0.5 * (covariance + covariance.T)
    eigenvalues = np.abs(np.fft.fft(row)) ** 2
    mean_spectral = np.zeros(d)
    mean_spectral[0] = mu_const * np.sqrt(d)
    dense = DenseGaussian(mean=mu_const * np.ones(d), covariance=covariance)
    model = SpectralModel(
        dim=d,
        eigenvalues=eigenvalues,
        mean_spectral=mean_spectral,
        source=f"synthetic-circulant(d={d}, l={l}, mu={mu_const})",
    )
    return dense, model


def circulant_matrix(first_row: np.ndarray) -> np.ndarray:
    """Dense circulant matrix with the given first row (rows shift right)."""
    row = np.asarray(first_row, dtype=float)
    n = len(row)
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return row[idx]


def covariance_from_windows(windows: np.ndarray, silence_threshold: float) -> CovarianceEstimate:
    """Moments over window rows, dropping rows quieter than the threshold."""
    windows = np.asarray(windows, dtype=float)
    if windows.ndim != 2:
        raise ValueError(f"windows must be 2-D, got shape {windows.shape}")
    loud = np.mean(np.abs(windows), axis=1) >= silence_threshold
    used = int(np.sum(loud))
    rejected = int(len(loud) - used)
    if used == 0:
        raise ValueError("no window passed the silence threshold")
    kept = windows[loud]
    mean = kept.mean(axis=0)
    centered = kept - mean
    cov = centered.T @ centered / max(used - 1, 1)
    cov = 0.5 * (cov + cov.T)
    return CovarianceEstimate(
        mean=mean, covariance=cov, windows_used=used, windows_rejected=rejected
    )


def sliding_window_covariance(signal: np.ndarray, cfg: EstimationConfig) -> CovarianceEstimate:
    """Estimate mean and covariance from windows slid over a scalar stream."""
    signal = np.asarray(signal, dtype=float).ravel()
    if len(signal) < cfg.window:
        raise ValueError(
            f"stream length {len(signal)} is shorter than the window {cfg.window}"
        )
    starts = range(0, len(signal) - cfg.window + 1, cfg.stride)
    windows = np.stack([signal[s : s + cfg.window] for s in starts])
    return covariance_from_windows(windows, cfg.silence_threshold)


def toeplitz_average(covariance: np.ndarray) -> np.ndarray:
    """First row of the Frobenius-nearest symmetric Toeplitz matrix.

    Entry ``k`` is the mean of the k-th diagonal (super- and sub-diagonal
    pooled, which coincide for symmetric input).
    """
    cov = np.asarray(covariance, dtype=float)
    n = cov.shape[0]
    if cov.shape != (n, n):
        raise ValueError(f"covariance must be square, got {cov.shape}")
    if np.max(np.abs(cov - cov.T)) > 1e-10 * max(1.0, np.max(np.abs(cov))):
        raise ValueError("covariance must be symmetric")
    row = np.empty(n)
    for k in range(n):
        upper = np.diagonal(cov, k)
        if k == 0:
            row[k] = upper.mean()
        else:
            row[k] = np.concatenate([upper, np.diagonal(cov, -k)]).mean()
    return row


def circulant_projection(toeplitz_row: np.ndarray, n: int | None = None) -> np.ndarray:
    """First row of the circulant matrix closest to a symmetric Toeplitz one.

    Minimizes, independently per lag k, the occurrence-weighted mismatch
    against the Toeplitz lags k and n-k, giving
    ``X_A[k] = (X_B[k] (n-k) + X_B[n-k] k) / n`` with ``X_A[0] = X_B[0]``.
    A row already satisfying ``X_B[k] == X_B[n-k]`` is a fixed point.
    """
    row = np.asarray(toeplitz_row, dtype=float)
    if n is None:
        n = len(row)
    if len(row) != n:
        raise ValueError(f"row length {len(row)} != n={n}")
    out = np.empty(n)
    out[0] = row[0]
    for k in range(1, n):
        out[k] = (row[k] * (n - k) + row[n - k] * k) / n
    return out


def spectral_model_from_covariance(
    est: CovarianceEstimate, structure: str = "symmetric"
) -> SpectralModel:
    """Diagonalize a covariance estimate into a spectral target.

    ``symmetric`` eigendecomposes the dense matrix (eigenvalues sorted
    descending, mean projected onto the eigenbasis).  ``circulant`` averages
    onto Toeplitz form, projects to circulant and reads eigenvalues off the
    DFT of the first row, keeping frequency order; the mean reduces to its
    stationary (constant) part on the DC coordinate.  Negative estimated
    eigenvalues are clamped to zero.
    """
    cov = est.covariance
    if not np.all(np.isfinite(cov)) or not np.all(np.isfinite(est.mean)):
        raise ValueError("covariance estimate contains non-finite entries")
    d = cov.shape[0]
    if structure == "symmetric":
        eigvals, eigvecs = np.linalg.eigh(0.5 * (cov + cov.T))
        order = np.argsort(eigvals)[::-1]
        eigvals = eigvals[order]
        eigvecs = eigvecs[:, order]
        mean_spectral = eigvecs.T @ est.mean
        source = "estimated-symmetric"
    elif structure == "circulant":
        circ_row = circulant_projection(toeplitz_average(cov))
        eigvals = np.fft.fft(circ_row).real
        mean_spectral = np.zeros(d)
        mean_spectral[0] = est.mean.mean() * np.sqrt(d)
        source = "estimated-circulant"
    else:
        raise ValueError(f"structure must be 'circulant' or 'symmetric', got {structure!r}")
    if not np.all(np.isfinite(eigvals)):
        raise ValueError("eigendecomposition produced non-finite eigenvalues")
    negatives = int(np.sum(eigvals < 0.0))
    if negatives:
        warnings.warn(f"clamped {negatives} negative eigenvalue(s) to zero", stacklevel=2)
        eigvals = np.clip(eigvals, 0.0, None)
    return SpectralModel(dim=d, eigenvalues=eigvals, mean_spectral=mean_spectral, source=source)


def pca_truncate(est, d_reduced: int) -> SpectralModel:
    """Keep the ``d_reduced`` largest-variance coordinates of a model.

    Accepts either a :class:`CovarianceEstimate` (diagonalized via the
    symmetric path first) or a :class:`SpectralModel`.
    """
    if isinstance(est, CovarianceEstimate):
        model = spectral_model_from_covariance(est, "symmetric")
    elif isinstance(est, SpectralModel):
        model = est
    else:
        raise TypeError(f"expected CovarianceEstimate or SpectralModel, got {type(est)!r}")
    if not 1 <= d_reduced <= model.dim:
        raise ValueError(f"d_reduced must be in [1, {model.dim}], got {d_reduced}")
    order = np.argsort(model.eigenvalues)[::-1][:d_reduced]
    return SpectralModel(
        dim=d_reduced,
        eigenvalues=model.eigenvalues[order],
        mean_spectral=model.mean_spectral[order],
        source=f"{model.source}#pca{d_reduced}",
    )
