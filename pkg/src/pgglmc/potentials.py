"""Black-box potentials with declared Hölder regularity, and l2 regularization.

A Potential carries a convex function U, an optional subgradient, and the
declared weak-smoothness certificate (L, alpha):

    ||grad U(x) - grad U(y)||_2 <= L * ||x - y||_2^alpha

The certificate is trusted but spot-checked: ``make_potential`` samples random
pairs and warns (never raises) when the declared constants look violated,
since Hölder constants cannot be verified exhaustively.

Regularization adds (lam/2) ||x||^2, making the potential lam-strongly convex.
The derived constants used by every bound live here too:

    M   = L d^((1-alpha)/p) / (mu^(1-alpha) (1+alpha)^(1-alpha))
    a   = L mu^(1+alpha) d^((1+alpha)/p) / (1+alpha) + (lam/2) mu^2 (d+1)^(2/p)
    cap = 2 / (M + 2 lam)

Callables are vectorized: value maps (..., d) -> (...), subgrad maps
(..., d) -> (..., d).  Potentials are immutable; evaluation is reentrant.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ParameterError
from .pgg import PggSpec, pgg_sq_norm_moment_bound

__all__ = [
    "Potential",
    "RegularizedPotential",
    "make_potential",
    "regularize",
    "smoothness_constant_M",
    "perturbation_scale_a",
    "max_step_size",
    "get_potential",
    "POTENTIAL_REGISTRY",
    "certify_holder",
]


@dataclass(frozen=True)
class Potential:
    """Convex potential with declared (L, alpha) weak-smoothness certificate.

    ``quad_curvature`` is set only for the quadratic family U = (c/2)||x||^2
    (c = 0 for the flat potential); it unlocks closed-form smoothing and a
    known Gaussian target downstream.
    """

    name: str
    d: int
    L: float
    alpha: float
    value: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    subgrad: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    quad_curvature: Optional[float] = None

    def __post_init__(self):
        if self.d < 1:
            raise ParameterError(f"dimension must be >= 1, got {self.d}")
        if not self.L > 0:
            raise ParameterError(f"Hölder constant L must be > 0, got {self.L}")
        if not (0.0 <= self.alpha <= 1.0):
            raise ParameterError(f"Hölder exponent alpha must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class RegularizedPotential:
    """U_bar(x) = U(x) + (lam/2) ||x||^2, lam > 0; lam-strongly convex."""

    base: Potential
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ParameterError(f"regularization weight must be > 0, got {self.lam}")

    @property
    def d(self) -> int:
        return self.base.d

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.base.value(x) + 0.5 * self.lam * np.sum(x * x, axis=-1)

    def subgrad(self, x) -> np.ndarray:
        if self.base.subgrad is None:
            raise ParameterError(f"potential {self.base.name!r} has no subgradient")
        x = np.asarray(x, dtype=float)
        return self.base.subgrad(x) + self.lam * x

    # Closed-form smoothing exists exactly for the quadratic family: smoothing
    # a quadratic shifts it by a constant and leaves the gradient untouched.
    @property
    def has_exact_smoothing(self) -> bool:
        return self.base.quad_curvature is not None

    @property
    def total_curvature(self) -> float:
        if self.base.quad_curvature is None:
            raise ParameterError(f"potential {self.base.name!r} is not in the quadratic family")
        return self.base.quad_curvature + self.lam

    @property
    def target_variance(self) -> float:
        """Per-coordinate variance of the known Gaussian target exp(-U_bar)."""
        return 1.0 / self.total_curvature

    def smoothed_value(self, x, mu: float, pgg: PggSpec) -> np.ndarray:
        """Exact U_bar_mu for the quadratic family: U_bar + (c+lam)/2 mu^2 E||xi||^2."""
        shift = 0.5 * self.total_curvature * mu * mu * pgg_sq_norm_moment_bound(pgg).exact
        return self.value(x) + shift

    def smoothed_grad(self, x, mu: float, pgg: PggSpec) -> np.ndarray:
        """Exact grad U_bar_mu for the quadratic family: (c + lam) x."""
        c = self.total_curvature
        return c * np.asarray(x, dtype=float)


def regularize(base: Potential, lam: float) -> RegularizedPotential:
    """Attach the (lam/2)||x||^2 term; lam must be positive."""
    return RegularizedPotential(base=base, lam=float(lam))


def smoothness_constant_M(pot: RegularizedPotential, mu: float, p: float) -> float:
    """Smoothness constant of the smoothed base potential.

    M = L d^((1-alpha)/p) / (mu^(1-alpha) (1+alpha)^(1-alpha)); the smoothed
    regularized potential is then (M + lam)-smooth.
    """
    if not mu > 0:
        raise ParameterError(f"smoothing radius must be > 0, got {mu}")
    L, alpha, d = pot.base.L, pot.base.alpha, pot.base.d
    return L * d ** ((1.0 - alpha) / p) / (mu ** (1.0 - alpha) * (1.0 + alpha) ** (1.0 - alpha))


def perturbation_scale_a(pot: RegularizedPotential, mu: float, p: float) -> float:
    """a = L mu^(1+alpha) d^((1+alpha)/p) / (1+alpha) + (lam/2) mu^2 (d+1)^(2/p).

    Controls how far the smoothed target exp(-U_bar_mu) drifts from
    exp(-U_bar) in 2-Wasserstein distance.
    """
    if not mu > 0:
        raise ParameterError(f"smoothing radius must be > 0, got {mu}")
    L, alpha, d = pot.base.L, pot.base.alpha, pot.base.d
    gap = L * mu ** (1.0 + alpha) * d ** ((1.0 + alpha) / p) / (1.0 + alpha)
    reg = 0.5 * pot.lam * mu * mu * (d + 1.0) ** (2.0 / p)
    return gap + reg


def max_step_size(pot: RegularizedPotential, mu: float, p: float) -> float:
    """Stability cap 2 / (M + 2 lam); chains must use eta strictly below it."""
    return 2.0 / (smoothness_constant_M(pot, mu, p) + 2.0 * pot.lam)


# ---------------------------------------------------------------------------
# Built-in corpus
# ---------------------------------------------------------------------------


def _quadratic(d: int, curvature: float = 1.0) -> Potential:
    c = float(curvature)
    if not c > 0:
        raise ParameterError(f"curvature must be > 0, got {c}")
    return Potential(
        name="quadratic",
        d=d,
        L=c,
        alpha=1.0,
        value=lambda x: 0.5 * c * np.sum(np.square(x), axis=-1),
        subgrad=lambda x: c * np.asarray(x, dtype=float),
        quad_curvature=c,
    )


def _power(d: int, alpha: float = 0.5) -> Potential:
    """U(x) = ||x||^(1+alpha) / (1+alpha); gradient ||x||^(alpha-1) x.

    The gradient map is alpha-Hölder with constant exactly 2^(1-alpha)
    (certified empirically by the spot-check suite; the ratio approaches the
    constant on nearly antipodal pairs).
    """
    a = float(alpha)
    if not (0.0 < a < 1.0):
        raise ParameterError(f"power potential needs alpha in (0, 1), got {a}")

    def value(x):
        x = np.asarray(x, dtype=float)
        s = np.sqrt(np.sum(x * x, axis=-1))
        return s ** (1.0 + a) / (1.0 + a)

    def subgrad(x):
        x = np.asarray(x, dtype=float)
        s = np.sqrt(np.sum(x * x, axis=-1))
        safe = np.where(s > 0, s, 1.0)
        return np.where(s[..., None] > 0, safe[..., None] ** (a - 1.0) * x, 0.0)

    return Potential(name="power", d=d, L=2.0 ** (1.0 - a), alpha=a, value=value, subgrad=subgrad)


def _l1(d: int) -> Potential:
    # grad difference of two sign vectors is at most 2 sqrt(d); 0 is a valid
    # subgradient element at kinks.
    return Potential(
        name="l1",
        d=d,
        L=2.0 * np.sqrt(d),
        alpha=0.0,
        value=lambda x: np.sum(np.abs(x), axis=-1),
        subgrad=lambda x: np.sign(np.asarray(x, dtype=float)),
    )


def _huber(d: int, delta: float = 0.5) -> Potential:
    """Coordinate-wise Huber sum: quadratic within |x| <= delta, linear beyond."""
    dl = float(delta)
    if not dl > 0:
        raise ParameterError(f"huber delta must be > 0, got {dl}")

    def value(x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        per = np.where(ax <= dl, 0.5 * x * x / dl, ax - 0.5 * dl)
        return np.sum(per, axis=-1)

    def subgrad(x):
        x = np.asarray(x, dtype=float)
        return np.clip(x / dl, -1.0, 1.0)

    return Potential(name="huber", d=d, L=1.0 / dl, alpha=1.0, value=value, subgrad=subgrad)


def _zero(d: int, L: float = 1.0, alpha: float = 1.0) -> Potential:
    """Identically-zero potential; satisfies any (L, alpha) certificate.

    Useful for targets whose entire curvature comes from the regularizer:
    the regularized target is then N(0, I/lam) exactly, while the declared
    (L, alpha) still drives the theory bounds being exercised.
    """
    return Potential(
        name="zero",
        d=d,
        L=float(L),
        alpha=float(alpha),
        value=lambda x: np.zeros(np.shape(x)[:-1]),
        subgrad=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        quad_curvature=0.0,
    )


POTENTIAL_REGISTRY = {
    "quadratic": _quadratic,
    "power": _power,
    "l1": _l1,
    "huber": _huber,
    "zero": _zero,
}


def get_potential(name: str, d: int, **params) -> Potential:
    """Build a registry potential by key; unknown keys raise ParameterError."""
    try:
        builder = POTENTIAL_REGISTRY[name]
    except KeyError:
        raise ParameterError(
            f"unknown potential {name!r}; available: {sorted(POTENTIAL_REGISTRY)}"
        ) from None
    return builder(d, **params)


def certify_holder(pot: Potential, rng: np.random.Generator, pairs: int = 1000,
                   scale: float = 10.0, rtol: float = 1e-9) -> float:
    """Spot-check the declared (L, alpha) on random pairs with ||x - y|| <= scale.

    Returns the worst observed ratio ||grad U(x) - grad U(y)|| / ||x - y||^alpha.
    """
    if pot.subgrad is None:
        raise ParameterError(f"potential {pot.name!r} has no subgradient to certify")
    x = rng.normal(size=(pairs, pot.d)) * (scale / 4.0)
    y = x + rng.normal(size=(pairs, pot.d)) * rng.uniform(1e-4, scale / 4.0, size=(pairs, 1))
    dist = np.linalg.norm(x - y, axis=-1)
    keep = dist > 0
    gap = np.linalg.norm(pot.subgrad(x) - pot.subgrad(y), axis=-1)
    ratio = gap[keep] / dist[keep] ** pot.alpha
    return float(ratio.max(initial=0.0))


def make_potential(name: str, d: int, L: float, alpha: float, value, subgrad=None,
                   quad_curvature=None, check: bool = True,
                   rng: Optional[np.random.Generator] = None) -> Potential:
    """Register a user potential; spot-checks the certificate and warns on failure."""
    pot = Potential(name=name, d=d, L=float(L), alpha=float(alpha), value=value,
                    subgrad=subgrad, quad_curvature=quad_curvature)
    if check and subgrad is not None:
        worst = certify_holder(pot, rng or np.random.default_rng(0), pairs=256)
        if worst > pot.L * (1.0 + 1e-9):
            warnings.warn(
                f"potential {name!r}: observed Hölder ratio {worst:.6g} exceeds "
                f"declared L = {pot.L:.6g}; constants look optimistic",
                stacklevel=2,
            )
    return pot
