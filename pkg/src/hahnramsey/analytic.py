"""Closed-form expected signals under exponentially correlated Gaussian
dephasing.

The detuned-echo (Hahn-Ramsey) signal decomposes into a constant plus
three decaying components,

    s(2 tau) = 2 [ a^4/2 (1 - 2 b^2)
                 + a^2 b^4 / 2        exp(-2 (F1 + dF))
                 - 2 a^4 b^2          cos(delta tau)   exp(-F1)
                 + b^4/2 (a^2 + 1)    cos(2 delta tau) exp(-2 (F1 - dF)) ]

with a = cos theta, b = sin theta, and F1, dF the dephasing integrals of
the noise module.  The bracketed sum is the spin-1/2 (S_z) expectation;
the factor 2 converts uniformly to the canonical sigma_z signal in
[-1, 1], which is what direct matrix propagation yields.

A static bias field shifts the accumulated phase of both free intervals
by +epsilon*tau (common mode); the biased signal and its epsilon
derivative drive the DC-sensitivity analysis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import NoiseParams, delta_f, f1

__all__ = [
    "BiasParams", "SignalComponents", "ramsey_signal", "hahn_echo_signal",
    "hahn_ramsey_signal", "signal_components", "hr_signal_biased",
    "hr_signal_derivative", "component_weights",
]


@dataclass(frozen=True)
class BiasParams:
    """Bias detuning epsilon in rad/time (epsilon = 2 pi gamma_e B)."""

    epsilon: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.epsilon):
            raise ValueError("epsilon must be finite")


@dataclass(frozen=True)
class SignalComponents:
    """Term-by-term decomposition at one tau, in the spin-1/2 (S_z)
    normalization; the canonical sigma_z signal is 2x the term sum.

    weights are the bare coefficients (a^4/2 (1-2b^2), a^2 b^4/2,
    -2 a^4 b^2, b^4/2 (a^2+1)) without decay or oscillation factors.
    """

    constant_term: float
    ramsey_like_term: float
    cos_delta_term: float
    cos_2delta_term: float
    weights: tuple

    @property
    def total(self) -> float:
        """Canonical sigma_z signal: twice the term sum."""
        return 2.0 * (self.constant_term + self.ramsey_like_term
                      + self.cos_delta_term + self.cos_2delta_term)


def component_weights(theta: float) -> tuple:
    """Tilt-dependent weights of the four signal components."""
    a, b = np.cos(theta), np.sin(theta)
    return (a ** 4 / 2 * (1 - 2 * b ** 2),
            a ** 2 * b ** 4 / 2,
            -2 * a ** 4 * b ** 2,
            b ** 4 / 2 * (a ** 2 + 1))


def _exponents(noise: NoiseParams, tau):
    if noise.gamma == 0.0:
        z = np.zeros_like(np.asarray(tau, dtype=float))
        return z, z
    return f1(noise, tau), delta_f(noise, tau)


def ramsey_signal(delta: float, noise: NoiseParams, tau):
    """Free-precession fringe cos(delta tau) exp(-F1) for ideal pi/2
    pulses (theta = pi/2); tau is the full free-precession time."""
    tau = np.asarray(tau, dtype=float)
    F1, _ = _exponents(noise, tau)
    out = np.cos(delta * tau) * np.exp(-F1)
    return out if out.ndim else float(out)


def hahn_echo_signal(noise: NoiseParams, tau):
    """Resonant echo envelope exp(-2 (F1 - dF)); tau is the half
    interval, total sequence time 2 tau."""
    tau = np.asarray(tau, dtype=float)
    F1, dF = _exponents(noise, tau)
    out = np.exp(-2.0 * (F1 - dF))
    return out if out.ndim else float(out)


def hahn_ramsey_signal(theta: float, delta: float, noise: NoiseParams, tau):
    """Detuned-echo signal at total time 2 tau, in [-1, 1]."""
    tau = np.asarray(tau, dtype=float)
    w0, w1, w2, w3 = component_weights(theta)
    F1, dF = _exponents(noise, tau)
    out = 2.0 * (w0
                 + w1 * np.exp(-2.0 * (F1 + dF))
                 + w2 * np.cos(delta * tau) * np.exp(-F1)
                 + w3 * np.cos(2.0 * delta * tau) * np.exp(-2.0 * (F1 - dF)))
    return out if out.ndim else float(out)


def signal_components(theta: float, delta: float, noise: NoiseParams,
                      tau: float) -> SignalComponents:
    """Split hahn_ramsey_signal into its four terms (S_z normalization)."""
    w0, w1, w2, w3 = component_weights(theta)
    F1, dF = _exponents(noise, float(tau))
    return SignalComponents(
        constant_term=float(w0),
        ramsey_like_term=float(w1 * np.exp(-2.0 * (F1 + dF))),
        cos_delta_term=float(w2 * np.cos(delta * tau) * np.exp(-F1)),
        cos_2delta_term=float(w3 * np.cos(2.0 * delta * tau)
                              * np.exp(-2.0 * (F1 - dF))),
        weights=(float(w0), float(w1), float(w2), float(w3)),
    )


def hr_signal_biased(theta: float, delta: float, bias: BiasParams,
                     noise: NoiseParams, tau):
    """Detuned-echo signal with a bias field shifting both free-interval
    phases by +epsilon*tau; reduces to hahn_ramsey_signal at epsilon 0."""
    tau = np.asarray(tau, dtype=float)
    a, b = np.cos(theta), np.sin(theta)
    e = bias.epsilon
    F1, dF = _exponents(noise, tau)
    out = 2.0 * (
        a ** 4 / 2 * (1 - 2 * b ** 2)
        + a ** 2 * b ** 2 / 2 * np.exp(-2.0 * (F1 + dF))
        * (b ** 2 * np.cos(2 * e * tau) - 2 * a * np.sin(2 * e * tau))
        - 2 * a ** 3 * b ** 2 * np.exp(-F1)
        * np.cos(delta * tau) * (a * np.cos(e * tau) + np.sin(e * tau))
        + b ** 4 / 2 * (a ** 2 + 1) * np.cos(2 * delta * tau)
        * np.exp(-2.0 * (F1 - dF)))
    return out if out.ndim else float(out)


def hr_signal_derivative(theta: float, delta: float, bias: BiasParams,
                         noise: NoiseParams, tau):
    """d(hr_signal_biased)/d(epsilon) at the given bias point."""
    tau = np.asarray(tau, dtype=float)
    a, b = np.cos(theta), np.sin(theta)
    e = bias.epsilon
    F1, dF = _exponents(noise, tau)
    out = 2.0 * (
        -2 * a ** 3 * b ** 2 * np.exp(-F1) * tau * np.cos(delta * tau)
        * (np.cos(e * tau) - a * np.sin(e * tau))
        - a ** 2 * b ** 2 * np.exp(-2.0 * (F1 + dF)) * tau
        * (2 * a * np.cos(2 * e * tau) + b ** 2 * np.sin(2 * e * tau)))
    return out if out.ndim else float(out)
