"""Noncontextual assignment designs.

The adaptive designs here run projected online gradient descent on the
per-round variance objective f_t(p) = y_t(1)^2 / p + y_t(0)^2 / (1 - p),
using an inverse-propensity gradient estimate that only needs the observed
arm. Iterates are clipped into a slowly widening interval [delta_t, 1 - delta_t]
so propensities never collapse onto 0 or 1.

Update convention: feedback from round t is applied immediately with that
round's step size and clipping level,

    p <- clamp(p_t - eta(t) * g_t, delta(t), 1 - delta(t)),

and the next emission projects the stored iterate onto the then-current
admissible interval. This keeps a single-group run of the multigroup design
numerically identical to the standalone design (see multigroup module).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .core import ConfigurationError, Covariate

ClippingFunction = Callable[[int], float]


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


@dataclass(frozen=True)
class Schedule:
    """Step sizes and clipping levels indexed by round, starting at 1.

    `delta(t)` must lie in (0, 0.5]; the value 0.5 collapses the admissible
    interval to the single point {0.5} and is allowed (it pins the iterate).
    """

    eta: Callable[[int], float]
    delta: Callable[[int], float]

    def validated_delta(self, t: int) -> float:
        d = float(self.delta(t))
        if not 0.0 < d <= 0.5:
            raise ConfigurationError(f"delta({t}) = {d!r} outside (0, 0.5]")
        return d

    def validated_eta(self, t: int) -> float:
        e = float(self.eta(t))
        if not (e > 0.0 and math.isfinite(e)):
            raise ConfigurationError(f"eta({t}) = {e!r} must be positive and finite")
        return e


def log_power_clipping(power: float = 0.25, offset: float = 2.0) -> ClippingFunction:
    """Default clipping function h(t) = exp((ln(t + offset))^power).

    Grows without bound but slower than any polynomial, so 1/h(t) shrinks
    slowly; h(1) must exceed 2 so that 1/h(t) < 0.5 from the first round.
    """
    if not 0.0 < power < 1.0:
        raise ConfigurationError("power must lie in (0, 1)")
    h = lambda t: math.exp(math.log(t + offset) ** power)
    _check_clipping(h)
    return h


def polynomial_clipping(exponent: float = 0.1, scale: float = 2.5) -> ClippingFunction:
    """Alternative clipping function h(t) = scale * (t + 1)^exponent."""
    h = lambda t: scale * (t + 1.0) ** exponent
    _check_clipping(h)
    return h


def _check_clipping(h: ClippingFunction) -> None:
    # Spot checks: h must exceed 2 everywhere and be strictly increasing.
    probes = [1, 2, 3, 10, 100, 10_000, 1_000_000]
    vals = [h(t) for t in probes]
    if any(v <= 2.0 for v in vals):
        raise ConfigurationError("clipping function must satisfy h(t) > 2 for t >= 1")
    if any(a >= b for a, b in zip(vals, vals[1:])):
        raise ConfigurationError("clipping function must be strictly increasing")


def schedule_zero(horizon: float) -> Schedule:
    """Horizon-tuned schedule: constant eta = 1/sqrt(T), delta_t = 0.5 t^(-1/alpha)
    with alpha = sqrt(5 ln T). Requires T >= 2. At t = 1 the clip interval is
    the single point {0.5}."""
    if horizon < 2:
        raise ConfigurationError("horizon-tuned schedule needs a horizon of at least 2")
    alpha = math.sqrt(5.0 * math.log(horizon))
    eta = 1.0 / math.sqrt(horizon)
    return Schedule(eta=lambda t: eta, delta=lambda t: 0.5 * t ** (-1.0 / alpha))


def schedule_sc(c: float, h: ClippingFunction | None = None) -> Schedule:
    """Anytime schedule for strongly convex per-round objectives:
    eta_t = 1 / (2 c^2 t), delta_t = 1 / h(t). `c` is the lower moment bound
    assumed of the outcome sequence."""
    if c <= 0:
        raise ConfigurationError("moment lower bound c must be positive")
    if h is None:
        h = log_power_clipping()
    else:
        _check_clipping(h)
    return Schedule(eta=lambda t: 1.0 / (2.0 * c * c * t), delta=lambda t: 1.0 / h(t))


def gradient_estimate(y_obs: float, z: int, p: float) -> float:
    """Unbiased estimate of f_t'(p) from the observed arm only.

    g = y^2 * (-z / p^3 + (1 - z) / (1 - p)^3); averaging over the coin
    z ~ Bernoulli(p) recovers f_t'(p) = -y1^2/p^2 + y0^2/(1-p)^2 exactly.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("propensity must lie strictly inside (0, 1)")
    if z not in (0, 1):
        raise ValueError("z must be 0 or 1")
    y2 = y_obs * y_obs
    if z == 1:
        w = -1.0 / (p * p * p)
    else:
        q = 1.0 - p
        w = 1.0 / (q * q * q)
    return y2 * w


class ClipOgd:
    """Clipped online gradient descent over treatment propensities.

    State carries the next round index, the current iterate, and the last
    gradient fed back. `propose` emits the iterate projected onto the current
    round's interval; `observe` converts (outcome, arm) into the gradient
    estimate and applies the same-round update. `feed_gradient` accepts a raw
    gradient instead, which is what a meta-design substitutes its own
    estimator into.
    """

    requires_covariates = False

    def __init__(self, schedule: Schedule):
        self.schedule = schedule
        self.round_index = 1
        self.p = 0.5
        self.g_last = 0.0
        self._emitted: float | None = None

    def propose(self, x: Covariate | None = None) -> float:
        if self._emitted is not None:
            raise RuntimeError("propose called twice without feedback")
        d = self.schedule.validated_delta(self.round_index)
        self._emitted = _clamp(self.p, d, 1.0 - d)
        return self._emitted

    def feed_gradient(self, g: float) -> None:
        if self._emitted is None:
            raise RuntimeError("feedback before propose")
        t = self.round_index
        d = self.schedule.validated_delta(t)
        e = self.schedule.validated_eta(t)
        self.p = _clamp(self._emitted - e * g, d, 1.0 - d)
        self.g_last = g
        self.round_index = t + 1
        self._emitted = None

    def observe(self, y_obs: float, z: int) -> None:
        if self._emitted is None:
            raise RuntimeError("feedback before propose")
        self.feed_gradient(gradient_estimate(y_obs, z, self._emitted))


def clip_ogd_zero(horizon: float) -> ClipOgd:
    """Horizon-tuned clipped OGD design."""
    return ClipOgd(schedule_zero(horizon))


def clip_ogd_sc(c: float, h: ClippingFunction | None = None) -> ClipOgd:
    """Anytime clipped OGD design for strongly convex round objectives."""
    return ClipOgd(schedule_sc(c, h))


class FixedDesign:
    """Bernoulli design with a constant treatment probability."""

    requires_covariates = False

    def __init__(self, p: float):
        if not 0.0 < p < 1.0:
            raise ConfigurationError("fixed propensity must lie strictly inside (0, 1)")
        self.p = float(p)

    def propose(self, x: Covariate | None = None) -> float:
        return self.p

    def observe(self, y_obs: float, z: int) -> None:
        pass


def fixed_design(p: float) -> FixedDesign:
    return FixedDesign(p)
