"""Admissible paths: piecewise-constant controls, RK4 integration, cost/length.

An admissible path solves gamma' = sum_k omega_k X_k(gamma) + Y(gamma) with
dt/ds = -1, so the time coordinate decreases with slope one along the path
while the controls steer the spatial coordinates through the model's fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import ASIAN, DomainError, Model

__all__ = [
    "ControlPath",
    "AdmissiblePath",
    "DomainExitError",
    "constant_control",
    "integrate_path",
    "path_cost",
    "path_length",
]


class DomainExitError(DomainError):
    """Raised when the integrated path leaves the model domain."""

    def __init__(self, message, exit_time):
        super().__init__(message)
        self.exit_time = exit_time


@dataclass(frozen=True)
class ControlPath:
    """Piecewise-constant control on [0, T].

    grid    strictly increasing breakpoints, grid[0] = 0, grid[-1] = T > 0
    values  (len(grid)-1, m) control vectors, one per interval
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("control grid needs at least two breakpoints")
        if grid[0] != 0.0:
            raise ValueError("control grid must start at 0")
        if not np.all(np.diff(grid) > 0):
            raise ValueError("control grid must be strictly increasing")
        if values.shape[0] != grid.size - 1:
            raise ValueError(
                f"need {grid.size - 1} control vectors, got {values.shape[0]}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("control values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    @property
    def n_controls(self) -> int:
        return self.values.shape[1]

    def value_at(self, s: float) -> np.ndarray:
        """Control vector on the interval containing s (right-open)."""
        k = np.searchsorted(self.grid, s, side="right") - 1
        k = min(max(k, 0), self.values.shape[0] - 1)
        return self.values[k]


def constant_control(omega, horizon: float) -> ControlPath:
    """Single-interval control identically equal to omega on [0, horizon]."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    return ControlPath(np.array([0.0, horizon]), omega[None, :])


@dataclass(frozen=True)
class AdmissiblePath:
    """Sampled admissible path: samples[i] has time exactly t0 - i*step."""

    samples: np.ndarray
    control: ControlPath
    step: float

    @property
    def start(self) -> np.ndarray:
        return self.samples[0]

    @property
    def endpoint(self) -> np.ndarray:
        return self.samples[-1]


def path_cost(omega: ControlPath) -> float:
    """Energy cost Phi(omega) = integral of |omega(s)|^2, exact for pc controls."""
    sq = np.sum(omega.values**2, axis=1)
    return float(np.dot(sq, np.diff(omega.grid)))


def path_length(omega: ControlPath) -> float:
    """Horizontal length ell(omega) = integral of |omega(s)|, exact for pc controls."""
    nrm = np.sqrt(np.sum(omega.values**2, axis=1))
    return float(np.dot(nrm, np.diff(omega.grid)))


def _spatial_rhs(model: Model, xs, omega):
    return model.control_matrix(xs).T @ omega + model.drift(xs)


def integrate_path(model: Model, z0, omega: ControlPath, step: float) -> AdmissiblePath:
    """Integrate the admissible-path ODE with classical RK4.

    Every control interval must be an integer multiple of `step` (so RK4
    stages never straddle a control discontinuity and the local order is
    kept); sample times are t0 - i*step exactly.
    """
    z0 = model.check_point(z0)
    if omega.n_controls != model.n_controls:
        raise ValueError(
            f"{model.name} expects {model.n_controls} controls, got {omega.n_controls}"
        )
    if step <= 0:
        raise ValueError("step must be positive")
    intervals = np.diff(omega.grid)
    if step > intervals.min() + 1e-15:
        raise ValueError("step must not exceed the smallest control interval")
    counts = intervals / step
    if not np.allclose(counts, np.round(counts), rtol=0, atol=1e-9):
        raise ValueError("every control interval must be a multiple of step")
    counts = np.round(counts).astype(int)

    t0 = z0[-1]
    xs = z0[:-1].copy()
    samples = [np.append(xs, t0)]
    i = 0
    for k, nk in enumerate(counts):
        w = omega.values[k]
        for _ in range(nk):
            k1 = _spatial_rhs(model, xs, w)
            k2 = _spatial_rhs(model, xs + 0.5 * step * k1, w)
            k3 = _spatial_rhs(model, xs + 0.5 * step * k2, w)
            k4 = _spatial_rhs(model, xs + step * k3, w)
            xs = xs + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            i += 1
            t = t0 - i * step
            if model is ASIAN and xs[0] <= 0.0:
                raise DomainExitError(
                    f"asian path exited x > 0 at path time {i * step}", i * step
                )
            samples.append(np.append(xs, t))
    return AdmissiblePath(np.array(samples), omega, float(step))
