"""Closed-form distances between the generated and target diagonal Gaussians.

All distances use the total output variance ``noise_gain**2 + var_extra``,
so the same formulas cover both the deterministic and stochastic samplers.
Reported squared-distance values are squared (no root) unless callers take
the root themselves.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .spectral import SpectralModel, Schedule, Transfer, _transfer_arrays

__all__ = [
    "LossKind",
    "LAMBDA_FLOOR",
    "w2_loss",
    "kl_loss",
    "weighted_l1_loss",
    "loss_gradient",
]

# Coordinates with eigenvalue below this floor are kept in the quadratic
# losses but excluded from KL sums (their log is undefined).
LAMBDA_FLOOR = 1e-12


class LossKind(str, Enum):
    WASSERSTEIN2 = "wasserstein2"
    KL = "kl"
    WEIGHTED_L1 = "weighted_l1"

    @classmethod
    def from_cli_name(cls, name: str) -> "LossKind":
        table = {"w2": cls.WASSERSTEIN2, "kl": cls.KL, "wl1": cls.WEIGHTED_L1}
        if name not in table:
            raise ValueError(f"unknown loss {name!r}; expected one of {sorted(table)}")
        return table[name]


def _check_dims(model: SpectralModel, transfer: Transfer) -> None:
    if len(transfer.noise_gain) != model.dim:
        raise ValueError(
            f"transfer dimension {len(transfer.noise_gain)} != model dim {model.dim}"
        )


def _w2_value(lam: np.ndarray, mu: np.ndarray, variance: np.ndarray, mean_gain: np.ndarray) -> float:
    std = np.sqrt(variance)
    return float(np.sum((np.sqrt(lam) - std) ** 2) + np.sum(mu**2 * (mean_gain - 1.0) ** 2))


def _kl_value(lam: np.ndarray, mu: np.ndarray, variance: np.ndarray, mean_gain: np.ndarray) -> float:
    keep = lam >= LAMBDA_FLOOR
    if not np.any(keep):
        raise ValueError("all coordinates fall below the eigenvalue floor; KL undefined")
    lam, mu = lam[keep], mu[keep]
    var, gain = variance[keep], mean_gain[keep]
    if np.any(var <= 0.0):
        # a degenerate generated coordinate: infinite divergence, not NaN
        # (log -> -inf and the ratio -> +inf would otherwise cancel badly)
        return float("inf")
    return float(
        0.5
        * np.sum(np.log(var) - np.log(lam) - 1.0 + (lam + (gain - 1.0) ** 2 * mu**2) / var)
    )


def _weighted_l1_value(
    lam: np.ndarray, mu: np.ndarray, variance: np.ndarray, mean_gain: np.ndarray
) -> float:
    lam_total = np.sum(lam)
    if lam_total <= 0.0:
        raise ValueError("all eigenvalues are zero; weighted-L1 loss undefined")
    value = float(np.sum(lam / lam_total * np.abs(variance - lam)))
    mu_total = np.sum(mu**2)
    if mu_total > 0.0:
        value += float(np.sum(mu**2 / mu_total * (mean_gain - 1.0) ** 2))
    return value


_EVALUATORS = {
    LossKind.WASSERSTEIN2: _w2_value,
    LossKind.KL: _kl_value,
    LossKind.WEIGHTED_L1: _weighted_l1_value,
}


def w2_loss(model: SpectralModel, transfer: Transfer) -> float:
    """Squared quadratic-transport distance to the target.

    Variance term plus mean term, both coordinatewise; zero exactly when the
    output standard deviations match ``sqrt(eigenvalues)`` and the mean gain
    is 1 on every coordinate with nonzero mean.  Unlike the KL, coordinates
    below the eigenvalue floor stay included.
    """
    _check_dims(model, transfer)
    return _w2_value(
        model.eigenvalues, model.mean_spectral, transfer.output_variance, transfer.mean_gain
    )


def kl_loss(model: SpectralModel, transfer: Transfer) -> float:
    """Relative entropy D(target || generated).

    Coordinates with eigenvalue below :data:`LAMBDA_FLOOR` are excluded from
    the sums (the effective dimension shrinks accordingly); raises when every
    coordinate is excluded.
    """
    _check_dims(model, transfer)
    return _kl_value(
        model.eigenvalues, model.mean_spectral, transfer.output_variance, transfer.mean_gain
    )


def weighted_l1_loss(model: SpectralModel, transfer: Transfer) -> float:
    """Eigenvalue-weighted L1 variance mismatch plus mean-weighted drift term.

    The variance term weights each coordinate by its share of the total
    eigenvalue mass; the mean term weights by the share of squared mean and
    is dropped entirely for a centered target.
    """
    _check_dims(model, transfer)
    return _weighted_l1_value(
        model.eigenvalues, model.mean_spectral, transfer.output_variance, transfer.mean_gain
    )


def loss_from_alpha_bar(
    model: SpectralModel, alpha_bar: np.ndarray, kind: LossKind, process: str = "ddim"
) -> float:
    """Loss of a raw alpha_bar vector (no schedule validation).

    Fast path for optimizer iterates, which may be non-monotone in the
    unconstrained mode.
    """
    noise_gain, mean_gain, var_extra = _transfer_arrays(model.eigenvalues, alpha_bar, process)
    variance = noise_gain**2 + var_extra
    return _EVALUATORS[LossKind(kind)](model.eigenvalues, model.mean_spectral, variance, mean_gain)


def finite_difference_gradient(f, x: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Central-difference gradient with steps clipped to stay inside bounds.

    Step per coordinate is ``1e-7 * max(1, |x_i|)``, shrunk so both stencil
    points remain strictly inside ``(lower_i, upper_i)``; degenerate spacing
    falls back to a one-sided difference.
    """
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(len(x)):
        h = 1e-7 * max(1.0, abs(x[i]))
        room_up = max(upper[i] - x[i], 0.0)
        room_down = max(x[i] - lower[i], 0.0)
        step = min(h, 0.5 * room_up, 0.5 * room_down)
        if step > 0.0:
            xp = x.copy()
            xm = x.copy()
            xp[i] += step
            xm[i] -= step
            grad[i] = (f(xp) - f(xm)) / (2.0 * step)
        else:
            side = min(h, 0.5 * room_up)
            if side == 0.0:
                side = -min(h, 0.5 * room_down)
            if side == 0.0:
                grad[i] = 0.0
                continue
            xs = x.copy()
            xs[i] += side
            grad[i] = (f(xs) - f(x)) / side
    return grad


def loss_gradient(
    model: SpectralModel, schedule: Schedule, kind: LossKind, process: str = "ddim"
) -> np.ndarray:
    """Gradient of the loss with respect to the interior alpha_bar values.

    Endpoints stay fixed; component ``i`` differentiates ``alpha_bar[i+1]``
    with the stencil clipped to the open interval between its neighbours so
    perturbed schedules stay monotone.
    """
    schedule.validate()
    ab = schedule.alpha_bar
    if schedule.steps < 2:
        return np.zeros(0)
    kind = LossKind(kind)

    def f(interior: np.ndarray) -> float:
        full = np.concatenate([ab[:1], interior, ab[-1:]])
        return loss_from_alpha_bar(model, full, kind, process)

    interior = ab[1:-1]
    lower = ab[2:]
    upper = ab[:-2]
    return finite_difference_gradient(f, interior, lower, upper)
