"""Damped spring (attractor) model with a radial-basis forcing term.

Per joint::

    tau * dz/dt = alpha_z * (beta_z * (g - y) - z) + f(x)
    tau * dy/dt = z
    f(x) = sum_i psi_i(x) w_i / sum_i psi_i(x) * (g - y0) * x

with beta_z = alpha_z / 4 (critical damping) and the canonical phase
x(t) = exp(-alpha_x t / tau).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter, lfiltic

ALPHA_X = math.log(100.0)
DEGENERATE_AMPLITUDE = 1e-6


@dataclass(frozen=True, eq=False)
class ForcingTerm:
    centers: np.ndarray
    widths: np.ndarray
    weights: np.ndarray
    alpha_x: float = ALPHA_X

    def __post_init__(self):
        for name in ("centers", "widths", "weights"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (len(self.centers) == len(self.widths) == len(self.weights) >= 2):
            raise ValueError("centers, widths and weights need one entry per basis (N >= 2)")
        if np.any(np.diff(self.centers) >= 0):
            raise ValueError("centers must be strictly decreasing")
        if not (np.all(np.isfinite(self.widths)) and np.all(self.widths > 0)):
            raise ValueError("widths must be finite and positive")

    @property
    def n_basis(self) -> int:
        return len(self.centers)


@dataclass(frozen=True, eq=False)
class SpringModel:
    tau: float
    alpha_z: float
    beta_z: float
    g: float
    y0: float
    forcing: ForcingTerm
    forcing_enabled: bool = True

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.alpha_z > 0:
            raise ValueError("alpha_z must be positive")
        if self.beta_z != self.alpha_z / 4:
            raise ValueError("beta_z must equal alpha_z / 4")


@dataclass(frozen=True, eq=False)
class Rollout:
    t: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __len__(self) -> int:
        return len(self.t)


def canonical_phase(t, tau: float, alpha_x: float = ALPHA_X):
    return np.exp(-alpha_x * np.asarray(t, dtype=float) / tau)


def basis_layout(n_basis: int, alpha_x: float = ALPHA_X) -> tuple[np.ndarray, np.ndarray]:
    """Centers at the phase of N evenly spaced times; widths from center spacing."""
    if n_basis < 2:
        raise ValueError("at least 2 basis functions are needed")
    centers = np.exp(-alpha_x * np.linspace(0.0, 1.0, n_basis))
    widths = np.empty(n_basis)
    widths[:-1] = 1.0 / np.diff(centers) ** 2
    widths[-1] = widths[-2]
    return centers, widths


def activations(centers, widths, x) -> np.ndarray:
    """psi_i(x) for each phase value, shape (len(x), N)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.exp(-widths[None, :] * (x[:, None] - centers[None, :]) ** 2)


def _normalized_sum(psi, weights):
    total = psi.sum(axis=1)
    num = psi @ weights
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / total[:, None] if num.ndim == 2 else num / total
    out[total < 1e-300] = 0.0
    return out


def forcing_value(ft: ForcingTerm, x, g: float, y0: float):
    """f(x); a vanishing basis sum yields 0."""
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    psi = activations(ft.centers, ft.widths, xs)
    f = _normalized_sum(psi, ft.weights) * (g - y0) * xs
    return float(f[0]) if scalar else f


def forcing_target(y, t, alpha_z: float) -> np.ndarray:
    """Forcing needed to make the spring follow ``y`` exactly (finite differences).

    ``y`` may be (T,) or (T, n).
    """
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    tau = t[-1] - t[0]
    yd = np.gradient(y, t, axis=0)
    ydd = np.gradient(yd, t, axis=0)
    g = y[-1]
    beta_z = alpha_z / 4
    return tau * tau * ydd - alpha_z * (beta_z * (g - y) - tau * yd)


def _lwr_weights(psi, s, target):
    """Per-basis locally weighted regression of ``target`` on ``s``."""
    num = psi.T @ (s * target)
    den = psi.T @ (s * s) + 1e-12
    return num / den


def fit_weights(gmr_joint, timestamps, alpha_z: float, n_basis: int,
                alpha_x: float = ALPHA_X) -> ForcingTerm:
    """Learn basis weights so the spring reproduces one GMR joint trajectory.

    Weights are zero when the start and goal coincide (|g - y0| < 1e-6 deg).
    """
    y = np.asarray(gmr_joint, dtype=float)
    t = np.asarray(timestamps, dtype=float)
    if len(y) < 3 or len(t) != len(y):
        raise ValueError("need at least 3 samples with matching timestamps")
    if not alpha_z > 0:
        raise ValueError("alpha_z must be positive")
    centers, widths = basis_layout(n_basis, alpha_x)
    y0, g = y[0], y[-1]
    if abs(g - y0) < DEGENERATE_AMPLITUDE:
        return ForcingTerm(centers, widths, np.zeros(n_basis), alpha_x)
    tau = t[-1] - t[0]
    x = canonical_phase(t - t[0], tau, alpha_x)
    psi = activations(centers, widths, x)
    target = forcing_target(y, t, alpha_z)
    weights = _lwr_weights(psi, x * (g - y0), target)
    return ForcingTerm(centers, widths, weights, alpha_x)


def fit_spring(gmr_joint, timestamps, alpha_z: float, n_basis: int) -> SpringModel:
    y = np.asarray(gmr_joint, dtype=float)
    t = np.asarray(timestamps, dtype=float)
    ft = fit_weights(y, t, alpha_z, n_basis)
    enabled = bool(abs(y[-1] - y[0]) >= DEGENERATE_AMPLITUDE)
    return SpringModel(tau=float(t[-1] - t[0]), alpha_z=float(alpha_z), beta_z=alpha_z / 4,
                       g=float(y[-1]), y0=float(y[0]), forcing=ft, forcing_enabled=enabled)


def step_count(tau: float, dt: float) -> int:
    """Number of states covering [0, tau]: ceil(tau/dt) + 1."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    return int(math.ceil(tau / dt - 1e-9)) + 1


def integrate(tau: float, alpha_z: float, y0, g, forcing, dt: float):
    """Explicit Euler on the error e = y - g, vectorized over joints.

    ``forcing`` has shape (S, n): f evaluated at every step time. Euler
    gives a linear second-order recurrence

        e[k+2] = (2 - a alpha) e[k+1] - (1 - a alpha + a^2 alpha beta) e[k] + a^2 f[k]

    with a = dt/tau and e[1] = e[0] (z starts at rest), which is run through
    ``lfilter``. Returns y and z, each (S, n).
    """
    forcing = np.asarray(forcing, dtype=float)
    if forcing.ndim == 1:
        forcing = forcing[:, None]
    steps, n = forcing.shape
    y0 = np.broadcast_to(np.asarray(y0, dtype=float), (n,))
    g = np.broadcast_to(np.asarray(g, dtype=float), (n,))
    beta_z = alpha_z / 4
    a = dt / tau
    c1 = 2.0 - a * alpha_z
    c2 = -(1.0 - a * alpha_z + a * a * alpha_z * beta_z)
    num, den = [a * a], [1.0, -c1, -c2]
    e0 = y0 - g
    err = np.empty((steps, n))
    err[0] = e0
    if steps > 1:
        err[1] = e0
    if steps > 2:
        zi = np.column_stack([lfiltic(num, den, [e, e]) for e in e0])
        err[2:], _ = lfilter(num, den, forcing[: steps - 2], axis=0, zi=zi)
    z = np.empty_like(err)
    z[:-1] = np.diff(err, axis=0) / a
    k = steps - 1
    if k == 0:
        z[0] = 0.0
    else:
        z[k] = z[k - 1] + a * (-alpha_z * beta_z * err[k - 1] - alpha_z * z[k - 1] + forcing[k - 1])
    return err + g, z


def rollout_many(springs, y0_new, g_new, dt: float) -> Rollout:
    """Roll out several joints sharing tau and alpha_z; y and z are (S, n)."""
    springs = list(springs)
    tau = springs[0].tau
    alpha_z = springs[0].alpha_z
    if any(s.tau != tau or s.alpha_z != alpha_z for s in springs):
        raise ValueError("joints must share tau and alpha_z")
    y0_new = np.asarray(y0_new, dtype=float).reshape(-1)
    g_new = np.asarray(g_new, dtype=float).reshape(-1)
    if len(y0_new) != len(springs) or len(g_new) != len(springs):
        raise ValueError(f"expected {len(springs)} start/goal values")
    steps = step_count(tau, dt)
    t = np.arange(steps) * dt
    x = canonical_phase(t, tau, springs[0].forcing.alpha_x)
    f = np.zeros((steps, len(springs)))
    for j, s in enumerate(springs):
        if s.forcing_enabled:
            f[:, j] = forcing_value(s.forcing, x, g_new[j], y0_new[j])
    y, z = integrate(tau, alpha_z, y0_new, g_new, f, dt)
    return Rollout(t, y, z)


def rollout(model: SpringModel, y0_new: float, g_new: float, dt: float) -> Rollout:
    """Single-joint rollout from rest at ``y0_new`` toward ``g_new`` over [0, tau]."""
    r = rollout_many([model], [y0_new], [g_new], dt)
    return Rollout(r.t, r.y[:, 0], r.z[:, 0])
