"""Multi-time Klein-Gordon wave functions built from on-shell plane waves.

A wave function of ``n`` particles is a finite sum

    psi(x_1, ..., x_n) = sum_j c_j prod_a exp(-i p_{j,a} . x_a)

with every ``p_{j,a}`` on the mass shell of particle ``a``.  Each product
term solves the n-particle Klein-Gordon equation exactly, so values,
derivatives, box integrals and the guidance field are all closed form.

Configurations are arrays of shape ``(n, 4)``; batches ``(..., n, 4)`` are
accepted everywhere and evaluated elementwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import NodeProximity, ZeroNorm
from .spacetime import (
    LorentzBoost,
    SpacetimeBox,
    apply_boost,
    boost_box,
    lower_index,
    minkowski_dot,
)

ON_SHELL_TOL = 1e-12
NODE_FACTOR = 1e-8


def on_shell_energy(mass: float, p3, sign: int = 1) -> float:
    if mass < 0:
        raise ValueError("mass must be non-negative")
    if sign not in (1, -1):
        raise ValueError("energy sign must be +1 or -1")
    p3 = np.asarray(p3, dtype=float)
    return sign * float(np.sqrt(mass * mass + p3 @ p3))


@dataclass(frozen=True)
class PlaneWaveMode:
    momentum: tuple
    mass: float

    def __post_init__(self):
        p = tuple(float(c) for c in np.asarray(self.momentum, dtype=float))
        if len(p) != 4 or not np.all(np.isfinite(p)):
            raise ValueError(f"momentum must be a finite four-vector, got {self.momentum}")
        if self.mass < 0:
            raise ValueError("mass must be non-negative")
        object.__setattr__(self, "momentum", p)
        object.__setattr__(self, "mass", float(self.mass))

    @classmethod
    def on_shell(cls, mass: float, p3, sign: int = 1) -> "PlaneWaveMode":
        return cls((on_shell_energy(mass, p3, sign), *p3), mass)

    def shell_error(self) -> float:
        return abs(float(minkowski_dot(self.momentum, self.momentum)) - self.mass ** 2)

    def is_on_shell(self, tol: float = ON_SHELL_TOL) -> bool:
        return self.shell_error() <= tol * (1.0 + self.mass ** 2)


@dataclass(frozen=True)
class ProductTerm:
    coefficient: complex
    modes: tuple

    def __post_init__(self):
        object.__setattr__(self, "coefficient", complex(self.coefficient))
        object.__setattr__(self, "modes", tuple(self.modes))


@dataclass(frozen=True, eq=False)
class MultiTimeWaveFunction:
    """psi(x_1, ..., x_n) as a finite superposition of plane-wave products.

    ``domain`` holds one closed box per particle; the product of the boxes is
    the region over which the state is normalized and sampled.  Set
    ``check_on_shell=False`` only to build deliberately broken states for
    testing residual diagnostics.
    """

    masses: tuple
    terms: tuple
    domain: tuple
    check_on_shell: bool = True
    coefficients: np.ndarray = field(init=False, repr=False)
    momenta: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        masses = tuple(float(m) for m in self.masses)
        terms = tuple(self.terms)
        domain = tuple(self.domain)
        n = len(masses)
        if n == 0:
            raise ValueError("need at least one particle")
        if any(m < 0 for m in masses):
            raise ValueError("masses must be non-negative")
        if not terms:
            raise ValueError("wave function needs at least one term")
        if len(domain) != n or not all(isinstance(b, SpacetimeBox) for b in domain):
            raise ValueError("domain must contain one SpacetimeBox per particle")
        for j, term in enumerate(terms):
            if len(term.modes) != n:
                raise ValueError(f"term {j} has {len(term.modes)} modes, expected {n}")
            for a, mode in enumerate(term.modes):
                if abs(mode.mass - masses[a]) > 1e-12 * (1 + masses[a]):
                    raise ValueError(f"term {j} particle {a}: mode mass {mode.mass} != {masses[a]}")
                if self.check_on_shell and not mode.is_on_shell():
                    raise ValueError(f"term {j} particle {a}: momentum {mode.momentum} is off-shell "
                                     f"for mass {mode.mass}")
        coeffs = np.array([t.coefficient for t in terms], dtype=complex)
        mom = np.array([[m.momentum for m in t.modes] for t in terms], dtype=float)
        coeffs.setflags(write=False)
        mom.setflags(write=False)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "momenta", mom)

    @classmethod
    def from_arrays(cls, masses, coefficients, momenta, domain, check_on_shell=True):
        """Build from coefficients ``(J,)`` and momenta ``(J, n, 4)``."""
        momenta = np.asarray(momenta, dtype=float)
        masses = tuple(float(m) for m in masses)
        terms = tuple(
            ProductTerm(c, tuple(PlaneWaveMode(p, masses[a]) for a, p in enumerate(row)))
            for c, row in zip(np.asarray(coefficients, dtype=complex), momenta)
        )
        return cls(masses, terms, tuple(domain), check_on_shell)

    @property
    def n(self) -> int:
        return len(self.masses)

    @cached_property
    def _lowered(self) -> np.ndarray:
        return lower_index(self.momenta)

    @cached_property
    def volume(self) -> float:
        return float(np.prod([b.volume for b in self.domain]))

    @cached_property
    def node_threshold(self) -> float:
        """Amplitude below which the phase gradient is treated as singular."""
        rms = np.sqrt(max(norm_over_box(self), 0.0) / self.volume)
        return NODE_FACTOR * rms

    def with_coefficients(self, coefficients) -> "MultiTimeWaveFunction":
        return MultiTimeWaveFunction.from_arrays(self.masses, coefficients, self.momenta,
                                                 self.domain, self.check_on_shell)

    def __call__(self, cfg):
        return evaluate(self, cfg)


def _as_cfg(psi: MultiTimeWaveFunction, cfg) -> np.ndarray:
    x = np.asarray(cfg, dtype=float)
    if x.ndim < 2 or x.shape[-2:] != (psi.n, 4):
        raise ValueError(f"configuration shape {x.shape} does not match {psi.n} particles")
    return x


def term_values(psi: MultiTimeWaveFunction, cfg) -> np.ndarray:
    """c_j exp(-i sum_a p_{j,a} . x_a), shape ``(..., J)``."""
    x = _as_cfg(psi, cfg)
    phase = np.einsum("...am,jam->...j", x, psi._lowered)
    return psi.coefficients * np.exp(-1j * phase)


def evaluate(psi: MultiTimeWaveFunction, cfg):
    tv = term_values(psi, cfg)
    out = tv.sum(axis=-1)
    return complex(out) if out.ndim == 0 else out


def _all_gradients(psi, tv):
    # d^mu_a psi with the index raised: sum_j (-i p^mu_{j,a}) c_j e_j
    return -1j * np.einsum("...j,jam->...am", tv, psi.momenta)


def gradient(psi: MultiTimeWaveFunction, cfg, a: int) -> np.ndarray:
    """Contravariant gradient d_a^mu psi for particle ``a`` (0-based)."""
    if not 0 <= a < psi.n:
        raise IndexError(f"particle index {a} out of range for n={psi.n}")
    tv = term_values(psi, cfg)
    return _all_gradients(psi, tv)[..., a, :]


def guidance(psi: MultiTimeWaveFunction, cfg):
    """Return ``(v, amplitude)`` without any node check.

    ``v`` has shape ``(..., n, 4)`` and holds v^mu_a = -Im[d_a^mu psi / psi];
    ``amplitude`` is |psi|.  At exact nodes ``v`` contains inf/nan.
    """
    tv = term_values(psi, cfg)
    value = tv.sum(axis=-1)
    grads = _all_gradients(psi, tv)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = -np.imag(grads / value[..., None, None])
    return v, np.abs(value)


def velocity(psi: MultiTimeWaveFunction, cfg) -> np.ndarray:
    """Bohmian four-velocities of all particles, shape ``(n, 4)`` (or batched)."""
    v, amp = guidance(psi, cfg)
    eps = psi.node_threshold
    if np.any(amp <= eps):
        raise NodeProximity(f"|psi| = {np.min(amp):.3e} <= node threshold {eps:.3e}",
                            amplitude=float(np.min(amp)), threshold=eps)
    return v


def current(psi: MultiTimeWaveFunction, cfg) -> np.ndarray:
    """|psi|^2 v^mu_a = -Im(psi* d_a^mu psi); regular at nodes."""
    tv = term_values(psi, cfg)
    value = tv.sum(axis=-1)
    return -np.imag(np.conj(value)[..., None, None] * _all_gradients(psi, tv))


def kg_residual(psi: MultiTimeWaveFunction, cfg) -> float:
    """|sum_a (d_a^mu d_{a mu} + m_a^2) psi|, evaluated from the mode algebra."""
    tv = term_values(psi, cfg)
    shell = np.sum(np.asarray(psi.masses) ** 2 - minkowski_dot(psi.momenta, psi.momenta), axis=-1)
    out = np.abs(tv @ shell)
    return float(out) if out.ndim == 0 else out


def gradient_fd(psi: MultiTimeWaveFunction, cfg, a: int, h: float = 1e-5) -> np.ndarray:
    """Central-difference contravariant gradient (test oracle)."""
    x = _as_cfg(psi, cfg)
    out = np.empty(4, dtype=complex)
    for mu in range(4):
        e = np.zeros_like(x)
        e[a, mu] = h
        d = (evaluate(psi, x + e) - evaluate(psi, x - e)) / (2 * h)
        out[mu] = d if mu == 0 else -d
    return out


def kg_residual_fd(psi: MultiTimeWaveFunction, cfg, h: float = 1e-3) -> float:
    """KG residual with fourth-order central second differences."""
    x = _as_cfg(psi, cfg)
    f0 = evaluate(psi, x)
    total = sum(m * m for m in psi.masses) * f0
    for a in range(psi.n):
        for mu in range(4):
            e = np.zeros_like(x)
            e[a, mu] = h
            d2 = (-evaluate(psi, x + 2 * e) + 16 * evaluate(psi, x + e) - 30 * f0
                  + 16 * evaluate(psi, x - e) - evaluate(psi, x - 2 * e)) / (12 * h * h)
            total += d2 if mu == 0 else -d2
    return float(abs(total))


def _axis_integrals(kappa, lo, hi):
    # int_lo^hi exp(i kappa u) du, with the kappa -> 0 limit supplied by sinc
    length = hi - lo
    mid = 0.5 * (hi + lo)
    return np.exp(1j * kappa * mid) * length * np.sinc(kappa * length / (2 * np.pi))


def gram_matrix(p_left, p_right, domain, times=None) -> np.ndarray:
    """Overlaps int prod_a exp(i p_{j,a}.x_a) exp(-i q_{k,a}.x_a) over the boxes.

    ``p_left`` ``(J, n, 4)``, ``p_right`` ``(K, n, 4)``.  With ``times`` given,
    particle ``a`` is held at time ``times[a]`` and only its spatial box is
    integrated.
    """
    kappa = lower_index(np.asarray(p_left)[:, None] - np.asarray(p_right)[None, :])
    lo = np.array([b.lo for b in domain])
    hi = np.array([b.hi for b in domain])
    if times is None:
        return np.prod(_axis_integrals(kappa, lo, hi), axis=(-2, -1))
    times = np.asarray(times, dtype=float)
    spatial = np.prod(_axis_integrals(kappa[..., 1:], lo[:, 1:], hi[:, 1:]), axis=(-2, -1))
    return spatial * np.exp(1j * np.sum(kappa[..., 0] * times, axis=-1))


def inner(psi: MultiTimeWaveFunction, phi: MultiTimeWaveFunction) -> complex:
    """<psi|phi> over ``psi.domain`` (both must have the same particle count)."""
    if psi.n != phi.n:
        raise ValueError("particle counts differ")
    g = gram_matrix(psi.momenta, phi.momenta, psi.domain)
    return complex(np.conj(psi.coefficients) @ g @ phi.coefficients)


def norm_over_box(psi: MultiTimeWaveFunction) -> float:
    g = gram_matrix(psi.momenta, psi.momenta, psi.domain)
    return float(np.real(np.conj(psi.coefficients) @ g @ psi.coefficients))


def normalize(psi: MultiTimeWaveFunction) -> MultiTimeWaveFunction:
    nrm = norm_over_box(psi)
    if not nrm > 1e-300:
        raise ZeroNorm(f"norm {nrm:.3e} too small to normalize")
    return psi.with_coefficients(psi.coefficients / np.sqrt(nrm))


def boost_wavefunction(psi: MultiTimeWaveFunction, boost: LorentzBoost) -> MultiTimeWaveFunction:
    """Scalar transformation psi'(Lambda x) = psi(x): momenta go to Lambda p."""
    if boost.is_identity():
        return psi
    return MultiTimeWaveFunction.from_arrays(
        psi.masses, psi.coefficients, apply_boost(boost, psi.momenta),
        tuple(boost_box(b, boost) for b in psi.domain), psi.check_on_shell)
