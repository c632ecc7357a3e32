"""Computable regret certificates for the two online methods.

All series share one backbone: a geometric recursion with contraction
zeta = 1 - mu/L and a per-step additive cost,

    B_0 = r_0,    B_{t+1} = zeta B_t + c_{t+1},

equal to the closed-form sum zeta^t r_0 + sum_tau zeta^(t-tau) c_tau but
numerically stable for long horizons.  The per-step cost distinguishes the
certificates:

    gradient method, expectation:   c_tau = E||e_{tau-1}||^2 / (2L) + psi_tau
    gradient method, high prob.:    c_tau = 4^theta K_{tau-1}^2 / (2L) + psi_tau,
                                    whole series scaled by h(theta, delta)
    prox method, expectation:       c_tau = 2 D E||e_{tau-1}|| + psi_tau
    prox method, high prob.:        c_tau = 2 D K_{tau-1} + psi_tau,
                                    scaled by h_p(theta, delta)

The high-probability scale factors are not hard-coded: they are the
quantile bound of the sub-Weibull class at unit moment scale, evaluated at
tail exponent 2*theta (the square of the error norm drives the gradient
method) or theta (the norm itself drives the prox method).  A Markov-
inequality alternative (expectation series divided by delta) is provided
for comparison, and the long-run asymptote e_bar/(2 mu) + (L/mu) psi_bar
caps the plateau.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .subweibull import SubWeibullParams, hp_bound

EXPECTATION_KINDS = ("ogd_expectation", "ogd_expectation_tight", "opgm_expectation")
HIGHPROB_KINDS = ("ogd_highprob", "opgm_highprob", "markov_highprob")
KINDS = EXPECTATION_KINDS + HIGHPROB_KINDS + ("asymptote",)


@dataclass(frozen=True)
class BoundSeries:
    """A certificate series indexed by t, with its input snapshot."""

    kind: str
    values: np.ndarray
    delta: float | None = None
    inputs: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown bound kind {self.kind!r}")
        if self.kind in HIGHPROB_KINDS and self.delta is None:
            raise ValueError(f"{self.kind} requires delta")
        if self.kind in EXPECTATION_KINDS and self.delta is not None:
            raise ValueError(f"{self.kind} forbids delta")
        if np.any(self.values < 0):
            raise ValueError("certificate values must be nonnegative")

    def __len__(self) -> int:
        return self.values.shape[0]


def _check_zeta(zeta: float) -> None:
    if not 0.0 < zeta < 1.0:
        raise ValueError(f"contraction factor must lie in (0, 1), got {zeta}")


def _check_delta(delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def geometric_recursion(r0: float, zeta: float, costs: np.ndarray) -> np.ndarray:
    """B_0 = r0; B_{t+1} = zeta B_t + costs[t].  Length len(costs) + 1."""
    _check_zeta(zeta)
    if r0 < 0:
        raise ValueError(f"r0 must be nonnegative, got {r0}")
    out = np.empty(len(costs) + 1)
    out[0] = r0
    acc = r0
    for t, c in enumerate(costs):
        acc = zeta * acc + c
        out[t + 1] = acc
    return out


def _as_cost_series(values, horizon: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(horizon, float(arr))
    if arr.shape != (horizon,):
        raise ValueError(f"{name} must have length {horizon}, got {arr.shape}")
    if np.any(arr < 0):
        raise ValueError(f"{name} entries must be nonnegative")
    return arr


def ogd_expectation_factor(smoothness: float) -> float:
    return 1.0 / (2.0 * smoothness)


def ogd_highprob_factor(theta: float, delta: float) -> float:
    """Scale h(theta, delta) applied to the gradient-method series.

    Derived as the unit-scale quantile bound at tail exponent 2*theta; this
    equals log(2/delta)**(2 theta) * (e/theta)**(2 theta).
    """
    _check_delta(delta)
    return hp_bound(SubWeibullParams(2.0 * theta, 1.0), delta)


def opgm_highprob_factor(theta: float, delta: float) -> float:
    """Scale h_p(theta, delta) = log(2/delta)**theta * (2e/theta)**theta."""
    _check_delta(delta)
    return hp_bound(SubWeibullParams(theta, 1.0), delta)


def ogd_expectation_bound(
    r0: float,
    zeta: float,
    second_moments,
    psi,
    smoothness: float,
    tight: bool = False,
) -> BoundSeries:
    """Expected-regret certificate for the gradient method.

    second_moments[i] = E||e_i||^2 for i = 0..T-1; psi[i] is the
    variability entering between times i and i+1.  Feeding trajectory
    variability means (rather than domain suprema) yields the tighter
    variant, flagged by `tight`.
    """
    if smoothness <= 0:
        raise ValueError(f"smoothness must be positive, got {smoothness}")
    horizon = len(np.atleast_1d(np.asarray(second_moments, dtype=float)))
    moments = _as_cost_series(second_moments, horizon, "second_moments")
    psi_arr = _as_cost_series(psi, horizon, "psi")
    costs = ogd_expectation_factor(smoothness) * moments + psi_arr
    values = geometric_recursion(r0, zeta, costs)
    return BoundSeries(
        kind="ogd_expectation_tight" if tight else "ogd_expectation",
        values=values,
        inputs={"r0": r0, "zeta": zeta, "smoothness": smoothness},
    )


def ogd_highprob_bound(
    r0: float,
    zeta: float,
    envelope_ks,
    psi,
    theta: float,
    delta: float,
    smoothness: float,
) -> BoundSeries:
    """High-probability certificate for the gradient method.

    envelope_ks[i] is the sub-Weibull moment scale of ||e_i||; the squared
    norms aggregate into a tail-exponent-2*theta variable with scale
    4^theta K_i^2 / (2L), whence the series and the factor h(theta, delta).
    Holds with probability at least 1 - delta at each fixed t.
    """
    if smoothness <= 0:
        raise ValueError(f"smoothness must be positive, got {smoothness}")
    horizon = len(np.atleast_1d(np.asarray(envelope_ks, dtype=float)))
    ks = _as_cost_series(envelope_ks, horizon, "envelope_ks")
    psi_arr = _as_cost_series(psi, horizon, "psi")
    costs = (4.0**theta / (2.0 * smoothness)) * ks**2 + psi_arr
    h = ogd_highprob_factor(theta, delta)
    values = h * geometric_recursion(r0, zeta, costs)
    return BoundSeries(
        kind="ogd_highprob",
        values=values,
        delta=delta,
        inputs={"r0": r0, "zeta": zeta, "theta": theta, "smoothness": smoothness, "h": h},
    )


def opgm_expectation_bound(
    r0: float, zeta: float, first_moments, psi, diameter: float
) -> BoundSeries:
    """Expected-regret certificate for the prox method.

    first_moments[i] = E||e_i||; the error enters linearly with weight 2D,
    D being the domain (or constraint-box) diameter.
    """
    if diameter <= 0:
        raise ValueError(f"diameter must be positive, got {diameter}")
    horizon = len(np.atleast_1d(np.asarray(first_moments, dtype=float)))
    moments = _as_cost_series(first_moments, horizon, "first_moments")
    psi_arr = _as_cost_series(psi, horizon, "psi")
    costs = 2.0 * diameter * moments + psi_arr
    values = geometric_recursion(r0, zeta, costs)
    return BoundSeries(
        kind="opgm_expectation",
        values=values,
        inputs={"r0": r0, "zeta": zeta, "diameter": diameter},
    )


def opgm_highprob_bound(
    r0: float,
    zeta: float,
    envelope_ks,
    psi,
    diameter: float,
    theta: float,
    delta: float,
) -> BoundSeries:
    """High-probability certificate for the prox method.

    The error norms aggregate at their own tail exponent theta with scale
    2 D K_i, scaled by h_p(theta, delta).  Holds with probability at least
    1 - delta at each fixed t.
    """
    if diameter <= 0:
        raise ValueError(f"diameter must be positive, got {diameter}")
    horizon = len(np.atleast_1d(np.asarray(envelope_ks, dtype=float)))
    ks = _as_cost_series(envelope_ks, horizon, "envelope_ks")
    psi_arr = _as_cost_series(psi, horizon, "psi")
    costs = 2.0 * diameter * ks + psi_arr
    h = opgm_highprob_factor(theta, delta)
    values = h * geometric_recursion(r0, zeta, costs)
    return BoundSeries(
        kind="opgm_highprob",
        values=values,
        delta=delta,
        inputs={"r0": r0, "zeta": zeta, "theta": theta, "diameter": diameter, "h": h},
    )


def asymptote(mu: float, smoothness: float, e_bar_second_moment: float, psi_bar: float) -> float:
    """Almost-sure limsup cap: e_bar/(2 mu) + (L/mu) psi_bar."""
    if mu <= 0 or smoothness <= 0:
        raise ValueError("mu and smoothness must be positive")
    if e_bar_second_moment < 0 or psi_bar < 0:
        raise ValueError("e_bar and psi_bar must be nonnegative")
    return e_bar_second_moment / (2.0 * mu) + (smoothness / mu) * psi_bar


def markov_highprob_bound(expectation_bound: BoundSeries, delta: float) -> BoundSeries:
    """Markov-inequality alternative: expectation series divided by delta.

    Scales as 1/delta where the sub-Weibull certificates scale as
    log(1/delta); kept for empirical comparison.
    """
    _check_delta(delta)
    if expectation_bound.kind not in EXPECTATION_KINDS:
        raise ValueError("markov bound needs an expectation series")
    return BoundSeries(
        kind="markov_highprob",
        values=expectation_bound.values / delta,
        delta=delta,
        inputs=dict(expectation_bound.inputs, base_kind=expectation_bound.kind),
    )
