"""Multigroup adaptive assignment.

A group family marks each unit as a member of zero or more (possibly
overlapping) groups. The multigroup design keeps one clipped-OGD propensity
iterate per group and mixes the active groups' iterates through a
sleeping-experts weighting into a single effective propensity per round.
Feedback is reweighted by the effective propensity so each group's iterate
still receives an unbiased gradient of its own round objective, and the
expert weights receive an unbiased estimate of each group's round loss.

Two implementations are provided on purpose: `Mgate` spells out the joint
update explicitly, while `MetaGroupDesign` composes independent per-group
base designs with a generic sleeping-experts learner. They are round-for-round
identical for the same inputs; the test suite holds them to that.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .core import ConfigurationError, Covariate
from .designs import (ClipOgd, ClippingFunction, _check_clipping, _clamp,
                      log_power_clipping, schedule_sc)
from .olo import SleepingExperts

Predicate = Callable[[Covariate], bool]


class GroupFamily:
    """Named groups, defined either by predicates on covariates or by a
    precomputed per-round boolean membership matrix."""

    def __init__(self, names: Sequence[str],
                 predicates: Sequence[Predicate] | None = None,
                 matrix: np.ndarray | None = None):
        names = list(names)
        if len(names) == 0:
            raise ConfigurationError("group family must name at least one group")
        if len(set(names)) != len(names):
            raise ConfigurationError("group names must be unique")
        if (predicates is None) == (matrix is None):
            raise ConfigurationError("provide exactly one of predicates or matrix")
        if predicates is not None and len(predicates) != len(names):
            raise ConfigurationError("one predicate per group name required")
        self.names = names
        self._predicates = list(predicates) if predicates is not None else None
        if matrix is not None:
            matrix = np.asarray(matrix, dtype=bool)
            if matrix.ndim != 2 or matrix.shape[1] != len(names):
                raise ConfigurationError("membership matrix must be (rounds, groups)")
        self._matrix = matrix

    @classmethod
    def from_predicates(cls, named: Sequence[tuple[str, Predicate]]) -> "GroupFamily":
        return cls([n for n, _ in named], predicates=[p for _, p in named])

    @classmethod
    def from_matrix(cls, names: Sequence[str], matrix) -> "GroupFamily":
        return cls(names, matrix=np.asarray(matrix, dtype=bool))

    @classmethod
    def everyone(cls, name: str = "all") -> "GroupFamily":
        return cls([name], predicates=[lambda x: True])

    @property
    def d(self) -> int:
        return len(self.names)

    @property
    def requires_covariates(self) -> bool:
        return self._matrix is None

    @property
    def matrix(self) -> np.ndarray | None:
        return self._matrix

    def activity(self, t: int, x: Covariate | None) -> np.ndarray:
        """0/1 activity vector for round t (1-based) with covariate x."""
        if self._matrix is not None:
            if not 1 <= t <= self._matrix.shape[0]:
                raise ConfigurationError(
                    f"round {t} outside the membership matrix of length {self._matrix.shape[0]}")
            return self._matrix[t - 1].astype(float)
        if x is None:
            raise ConfigurationError("predicate group family needs a covariate")
        return np.array([1.0 if pred(x) else 0.0 for pred in self._predicates])

    def membership_matrix(self, seq) -> np.ndarray:
        """(T, d) boolean membership over one outcome sequence."""
        if self._matrix is not None:
            if self._matrix.shape[0] != len(seq):
                raise ConfigurationError(
                    "membership matrix length does not match the outcome sequence")
            return self._matrix
        if seq.covariates is None:
            raise ConfigurationError("predicate group family needs covariates")
        return np.array([[bool(pred(x)) for pred in self._predicates]
                         for x in seq.covariates])


def active_groups(fam: GroupFamily, t: int, x: Covariate | None = None) -> np.ndarray:
    """Activity vector of a family at round t; may be all zeros."""
    return fam.activity(t, x)


def effective_propensity(w_eff: np.ndarray, p: np.ndarray) -> float:
    """Mixture propensity <w_eff, p> of per-group iterates under expert weights."""
    w_eff = np.asarray(w_eff, dtype=float)
    p = np.asarray(p, dtype=float)
    if w_eff.shape != p.shape:
        raise ValueError("weights and propensities must have equal dimension")
    return float(np.sum(w_eff * p))


def mgate_gradient(y_obs: float, z: int, p_eff: float, p_g: float) -> float:
    """Unbiased estimate of the group objective's derivative f_t'(p_g) when the
    coin was flipped with probability p_eff instead of p_g.

    g = y^2 (z/p_eff + (1-z)/(1-p_eff)) (-z/p_g^2 + (1-z)/(1-p_g)^2); the first
    factor reweights for the off-policy coin, the second is the derivative of
    the inverse-propensity integrand. Averaging over z ~ Bernoulli(p_eff)
    recovers f_t'(p_g) exactly.
    """
    _check_probs(p_eff, p_g, z)
    y2 = y_obs * y_obs
    if z == 1:
        f1 = 1.0 / p_eff
        gf = -1.0 / (p_g * p_g)
    else:
        f1 = 1.0 / (1.0 - p_eff)
        qg = 1.0 - p_g
        gf = 1.0 / (qg * qg)
    return y2 * f1 * gf


def mgate_loss(y_obs: float, z: int, p_eff: float, p_g: float) -> float:
    """Unbiased estimate of the group objective value f_t(p_g) under a coin of
    probability p_eff: y^2 (z/p_eff + (1-z)/(1-p_eff)) (z/p_g + (1-z)/(1-p_g))."""
    _check_probs(p_eff, p_g, z)
    y2 = y_obs * y_obs
    if z == 1:
        f1 = 1.0 / p_eff
        lf = 1.0 / p_g
    else:
        f1 = 1.0 / (1.0 - p_eff)
        lf = 1.0 / (1.0 - p_g)
    return y2 * f1 * lf


def _check_probs(p_eff: float, p_g: float, z: int) -> None:
    if not 0.0 < p_eff < 1.0:
        raise ValueError("effective propensity must lie strictly inside (0, 1)")
    if not 0.0 < p_g < 1.0:
        raise ValueError("group propensity must lie strictly inside (0, 1)")
    if z not in (0, 1):
        raise ValueError("z must be 0 or 1")


class Mgate:
    """Multigroup clipped-OGD design with sleeping-experts aggregation.

    Per-group iterates start at 0.5 and expert pre-weights at 1. Each round:
    the active groups' iterates are mixed by normalized pre-weights into the
    effective propensity; after the coin, every active group receives the
    reweighted gradient (applied with a step size and clipping level indexed
    by that group's own activation count) and a reweighted loss estimate whose
    centered version updates the expert pre-weights. Inactive groups are
    untouched and charged zero loss. Rounds with no active group emit the
    fallback propensity and change no state.
    """

    def __init__(self, family: GroupFamily, c: float,
                 h: ClippingFunction | None = None, fallback_p: float = 0.5):
        if c <= 0:
            raise ConfigurationError("moment lower bound c must be positive")
        if not 0.0 < fallback_p < 1.0:
            raise ConfigurationError("fallback propensity must lie strictly inside (0, 1)")
        self.family = family
        self.c = float(c)
        if h is None:
            self.h = log_power_clipping()
        else:
            _check_clipping(h)
            self.h = h
        self.fallback_p = float(fallback_p)
        d = family.d
        self.t = 1
        self.n = np.zeros(d, dtype=int)
        self.p = np.full(d, 0.5)
        self.wprime = np.ones(d)
        self.L = np.zeros(d)
        self.q = 0.0
        self._pending: tuple[np.ndarray, np.ndarray, float] | None = None
        self._skip = False

    @property
    def requires_covariates(self) -> bool:
        return self.family.requires_covariates

    @property
    def d(self) -> int:
        return self.family.d

    def propose(self, x: Covariate | None = None) -> float:
        if self._pending is not None or self._skip:
            raise RuntimeError("propose called twice without feedback")
        a = self.family.activity(self.t, x)
        if float(np.sum(a)) == 0.0:
            self._skip = True
            return self.fallback_p
        self.n = self.n + a.astype(int)
        masses = a * self.wprime
        total = float(np.sum(masses))
        if total > 0.0:
            w_eff = masses / total
        else:
            w_eff = a / float(np.sum(a))
        p_eff = float(np.sum(w_eff * self.p))
        self._pending = (a, w_eff, p_eff)
        return p_eff

    def observe(self, y_obs: float, z: int) -> None:
        if self._skip:
            self._skip = False
            self.t += 1
            return
        if self._pending is None:
            raise RuntimeError("feedback before propose")
        a, w_eff, p_eff = self._pending
        ell = np.zeros(self.d)
        new_p = self.p.copy()
        for i in np.flatnonzero(a):
            p_g = float(self.p[i])
            g = mgate_gradient(y_obs, z, p_eff, p_g)
            ell[i] = mgate_loss(y_obs, z, p_eff, p_g)
            n_g = int(self.n[i])
            eta = 1.0 / (2.0 * self.c * self.c * n_g)
            delta = 1.0 / self.h(n_g)
            new_p[i] = _clamp(p_g - eta * g, delta, 1.0 - delta)
        self.p = new_p
        mix = float(np.sum(ell * w_eff))
        surrogate = a * (ell - mix)
        self.L = self.L + surrogate
        self.q = self.q + float(np.sum(surrogate * surrogate))
        if self.q > 0.0:
            self.wprime = np.maximum(0.0, -self.L / np.sqrt(self.q))
        else:
            self.wprime = np.zeros(self.d)
        self.t += 1
        self._pending = None


class MetaGroupDesign:
    """Generic multigroup meta-design over any gradient-fed base design.

    Keeps one independent base design copy per group plus a sleeping-experts
    learner over the groups. Each round the active copies are asked for
    advice, the learner mixes the advice, and after the coin each active copy
    receives the reweighted gradient while the learner receives the reweighted
    loss estimates. With clipped-OGD copies this reproduces `Mgate` exactly.
    """

    def __init__(self, family: GroupFamily, base_factory: Callable[[], ClipOgd],
                 experts: SleepingExperts | None = None, fallback_p: float = 0.5):
        if not 0.0 < fallback_p < 1.0:
            raise ConfigurationError("fallback propensity must lie strictly inside (0, 1)")
        self.family = family
        self.copies = [base_factory() for _ in range(family.d)]
        self.experts = experts if experts is not None else SleepingExperts(family.d)
        if self.experts.d != family.d:
            raise ConfigurationError("experts dimension must match the group family")
        self.fallback_p = float(fallback_p)
        self.t = 1
        self._pending: tuple[np.ndarray, np.ndarray, np.ndarray, float] | None = None
        self._skip = False

    @property
    def requires_covariates(self) -> bool:
        return self.family.requires_covariates

    @property
    def d(self) -> int:
        return self.family.d

    def propose(self, x: Covariate | None = None) -> float:
        if self._pending is not None or self._skip:
            raise RuntimeError("propose called twice without feedback")
        a = self.family.activity(self.t, x)
        if float(np.sum(a)) == 0.0:
            self._skip = True
            return self.fallback_p
        advice = np.zeros(self.d)
        for i in np.flatnonzero(a):
            advice[i] = self.copies[i].propose()
        v = self.experts.distribution(a)
        p_eff = float(np.sum(v * advice))
        self._pending = (a, v, advice, p_eff)
        return p_eff

    def observe(self, y_obs: float, z: int) -> None:
        if self._skip:
            self._skip = False
            self.t += 1
            return
        if self._pending is None:
            raise RuntimeError("feedback before propose")
        a, v, advice, p_eff = self._pending
        ell = np.zeros(self.d)
        for i in np.flatnonzero(a):
            p_g = float(advice[i])
            self.copies[i].feed_gradient(mgate_gradient(y_obs, z, p_eff, p_g))
            ell[i] = mgate_loss(y_obs, z, p_eff, p_g)
        self.experts.observe(ell)
        self.t += 1
        self._pending = None

    @property
    def group_propensities(self) -> np.ndarray:
        return np.array([copy.p for copy in self.copies])


def general_meta_design(base_factory: Callable[[], ClipOgd],
                        family: GroupFamily,
                        experts: SleepingExperts | None = None,
                        fallback_p: float = 0.5) -> MetaGroupDesign:
    """Compose per-group base design copies with a sleeping-experts learner."""
    return MetaGroupDesign(family, base_factory, experts, fallback_p)


def mgate(family: GroupFamily, c: float, h: ClippingFunction | None = None,
          fallback_p: float = 0.5) -> Mgate:
    """The multigroup design with its standard strongly convex base schedule.

    Equivalent to `general_meta_design(lambda: clip_ogd_sc(c, h), family)`;
    kept as an explicit joint implementation.
    """
    return Mgate(family, c, h, fallback_p)


def _sc_factory(c: float, h: ClippingFunction | None):
    hh = h if h is not None else log_power_clipping()
    return lambda: ClipOgd(schedule_sc(c, hh))


def meta_mgate(family: GroupFamily, c: float, h: ClippingFunction | None = None,
               fallback_p: float = 0.5) -> MetaGroupDesign:
    """Compositional twin of `mgate`, used to cross-check the joint version."""
    return MetaGroupDesign(family, _sc_factory(c, h), None, fallback_p)
