"""Pointer-state model of a measurement and the Born rule it produces.

The measured particle lives in a box ``Omega_x`` and is expanded in box
harmonics psi_b.  The apparatus is one pointer particle y whose states E_b
are cos^2 bumps along y^1 with pairwise disjoint supports, constant in the
remaining coordinates of a reference cell.  After the (schematic)
interaction the joint state is sum_b c_b psi_b(x) E_b(y).
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import integrate as spi

from .dynamics import OK, IntegratorSettings
from .spacetime import SpacetimeBox
from .stats import flow_ensemble, sample
from .wavefn import MultiTimeWaveFunction, gram_matrix, norm_over_box, normalize, on_shell_energy


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """One-particle plane waves e^{-ip_b.x}/sqrt(V) on a single box."""

    domain: SpacetimeBox
    mass: float
    momenta: np.ndarray

    def __post_init__(self):
        mom = np.array(self.momenta, dtype=float).reshape(-1, 4)
        mom.setflags(write=False)
        object.__setattr__(self, "momenta", mom)
        object.__setattr__(self, "mass", float(self.mass))

    @classmethod
    def box_harmonics(cls, domain: SpacetimeBox, mass: float, harmonics, sign: int = 1) -> "EigenBasis":
        """Modes with spatial momentum 2 pi n_i / L_i for integer triples ``harmonics``."""
        L = domain.lengths[1:]
        mom = []
        for h in harmonics:
            p3 = 2 * np.pi * np.asarray(h, dtype=float) / L
            mom.append((on_shell_energy(mass, p3, sign), *p3))
        return cls(domain, mass, np.array(mom))

    def __len__(self):
        return len(self.momenta)

    @property
    def amplitude(self) -> float:
        return 1.0 / np.sqrt(self.domain.volume)

    def element(self, b: int) -> MultiTimeWaveFunction:
        return MultiTimeWaveFunction.from_arrays([self.mass], [self.amplitude], self.momenta[b:b + 1, None],
                                                 [self.domain])

    def combination(self, coefficients) -> MultiTimeWaveFunction:
        c = np.asarray(coefficients, dtype=complex)
        return MultiTimeWaveFunction.from_arrays([self.mass], c * self.amplitude, self.momenta[:len(c), None],
                                                 [self.domain])

    def gram(self) -> np.ndarray:
        p = self.momenta[:, None]
        return gram_matrix(p, p, (self.domain,)) / self.domain.volume


@dataclass(frozen=True)
class Expansion:
    coefficients: np.ndarray
    residual: float


def expand(phi: MultiTimeWaveFunction, basis: EigenBasis) -> Expansion:
    """c_b = <psi_b|phi> and the norm of what the basis leaves unexplained."""
    if phi.n != 1:
        raise ValueError("expand works on one-particle wave functions")
    if phi.domain[0] != basis.domain:
        raise ValueError("phi and the basis must share a domain box")
    g = gram_matrix(basis.momenta[:, None], phi.momenta, (basis.domain,))
    c = basis.amplitude * (g @ phi.coefficients)
    rest = np.concatenate([phi.coefficients, -c * basis.amplitude])
    mom = np.concatenate([phi.momenta, basis.momenta[:, None]])
    diff = MultiTimeWaveFunction.from_arrays([phi.masses[0]], rest, mom, phi.domain, check_on_shell=False)
    return Expansion(c, float(np.sqrt(max(norm_over_box(diff), 0.0))))


@dataclass(frozen=True, eq=False)
class PointerFamily:
    """Apparatus states E_b(y) ~ cos^2(pi (y^1 - c_b) / (2 w)) on [c_b - w, c_b + w].

    ``domain`` is the pointer particle's box: its y^1 extent is the pointer
    scale and its other three extents form the reference cell on which every
    E_b is constant.  ``ready`` is the centre of the pre-measurement state
    E_0; it is kept for completeness only.
    """

    centers: tuple
    half_width: float
    domain: SpacetimeBox
    ready: float | None = None
    allow_overlap: bool = False

    def __post_init__(self):
        centers = tuple(float(c) for c in self.centers)
        object.__setattr__(self, "centers", centers)
        w = float(self.half_width)
        if w <= 0:
            raise ValueError("half_width must be positive")
        lo, hi = self.domain.lo[1], self.domain.hi[1]
        for c in centers:
            if c - w < lo or c + w > hi:
                raise ValueError(f"pointer support [{c - w}, {c + w}] leaves the y^1 range [{lo}, {hi}]")
        if not self.allow_overlap:
            s = sorted(centers)
            if any(b - a < 2 * w for a, b in zip(s, s[1:])):
                raise ValueError("pointer supports overlap")

    @classmethod
    def evenly_spaced(cls, count: int, half_width: float = 8.0, gap: float = 2.0,
                      cell=((-0.5, 0.5), (0.0, 1.0), (0.0, 1.0))) -> "PointerFamily":
        pitch = 2 * half_width + gap
        centers = [gap / 2 + half_width + b * pitch for b in range(count)]
        (t0, t1), (y0, y1), (z0, z1) = cell
        dom = SpacetimeBox((t0, 0.0, y0, z0), (t1, count * pitch, y1, z1))
        return cls(tuple(centers), half_width, dom)

    def __len__(self):
        return len(self.centers)

    @property
    def cell_volume(self) -> float:
        L = self.domain.lengths
        return float(L[0] * L[2] * L[3])

    @property
    def amplitude(self) -> float:
        # int cos^4 over a support of width 2w is 3w/4
        return 1.0 / np.sqrt(0.75 * self.half_width * self.cell_volume)

    def support(self, b: int):
        c = self.centers[b]
        return c - self.half_width, c + self.half_width

    def profile(self, b: int, y1):
        u = (np.asarray(y1, dtype=float) - self.centers[b]) / self.half_width
        return np.where(np.abs(u) <= 1.0, self.amplitude * np.cos(0.5 * np.pi * u) ** 2, 0.0)

    def in_cell(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        lo, hi = np.asarray(self.domain.lo), np.asarray(self.domain.hi)
        return np.all((y >= lo) & (y <= hi), axis=-1)

    def __call__(self, b: int, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.where(self.in_cell(y), self.profile(b, y[..., 1]), 0.0)

    def classify(self, y1) -> np.ndarray:
        """Index of the support containing each y^1 value, -1 for none."""
        y1 = np.asarray(y1, dtype=float)
        out = np.full(y1.shape, -1, dtype=int)
        for b in range(len(self)):
            lo, hi = self.support(b)
            out[(y1 >= lo) & (y1 <= hi) & (out < 0)] = b
        return out

    def fourier_coefficients(self, b: int, harmonics: int, anchor_time: float):
        """Comb (q_m, e_m) with sum_m e_m e^{-i q_m . y} ~ E_b(y) at y^0 = anchor_time.

        Spatial wavenumbers are 2 pi m / L for |m| <= ``harmonics`` over the
        y^1 range.  Energies are supplied by the caller's mass via
        :func:`comb_momenta`.
        """
        lo, hi = self.domain.lo[1], self.domain.hi[1]
        L = hi - lo
        m = np.arange(-harmonics, harmonics + 1)
        k = 2 * np.pi * m / L
        w = self.half_width
        F = w * np.sinc(k * w / np.pi) + 0.5 * w * (np.sinc(k * w / np.pi - 1) + np.sinc(k * w / np.pi + 1))
        return k, self.amplitude * F * np.exp(-1j * k * self.centers[b]) / L


def comb_momenta(k, mass: float) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    E = np.sqrt(mass * mass + k * k)
    return np.stack([E, k, np.zeros_like(k), np.zeros_like(k)], axis=-1)


@dataclass(frozen=True, eq=False)
class JointState:
    """sum_b c_b psi_b(x) E_b(y) after the measurement interaction."""

    coefficients: np.ndarray
    basis: EigenBasis
    pointers: PointerFamily
    ready: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=complex))

    @property
    def outcomes(self) -> int:
        return len(self.coefficients)


def couple(coeffs, pointers: PointerFamily, basis: EigenBasis, tol: float = 1e-10) -> JointState:
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1 or len(c) == 0:
        raise ValueError("need a non-empty coefficient list")
    if len(c) > len(pointers) or len(c) > len(basis):
        raise ValueError(f"{len(c)} coefficients but {len(pointers)} pointer states / {len(basis)} basis states")
    total = float(np.sum(np.abs(c) ** 2))
    if abs(total - 1.0) > tol:
        raise ValueError(f"coefficients must be normalized, sum |c_b|^2 = {total:.12g}")
    return JointState(c, basis, pointers, pointers.ready)


def _gram(j: JointState) -> np.ndarray:
    return j.basis.gram()[:j.outcomes, :j.outcomes]


def pointer_density(j: JointState, y) -> float:
    """rho(y) = sum_{b,b'} c_b^* c_b' <psi_b|psi_b'> E_b(y) E_b'(y)."""
    E = np.array([j.pointers(b, y) for b in range(j.outcomes)])
    c = j.coefficients
    rho = np.einsum("b,bc,c,b...,c...->...", np.conj(c), _gram(j), c, E, E)
    out = np.real(rho)
    return float(out) if np.ndim(out) == 0 else out


def _overlap_integral(pointers: PointerFamily, b1: int, b2: int, lo: float, hi: float) -> float:
    s1, s2 = pointers.support(b1), pointers.support(b2)
    a, b = max(lo, s1[0], s2[0]), min(hi, s1[1], s2[1])
    if b <= a:
        return 0.0
    val, _ = spi.quad(lambda u: pointers.profile(b1, u) * pointers.profile(b2, u), a, b,
                      epsabs=1e-14, epsrel=1e-12, limit=200)
    return val * pointers.cell_volume


def outcome_probabilities(j: JointState, diagonal_only: bool = False) -> np.ndarray:
    """p_b = integral of rho over supp E_b (times the reference cell)."""
    B = j.outcomes
    c = j.coefficients
    g = _gram(j)
    p = np.zeros(B)
    for b in range(B):
        lo, hi = j.pointers.support(b)
        total = 0.0
        for b1 in range(B):
            for b2 in range(B):
                if diagonal_only and b1 != b2:
                    continue
                ov = _overlap_integral(j.pointers, b1, b2, lo, hi)
                if ov:
                    total += np.real(np.conj(c[b1]) * c[b2] * g[b1, b2]) * ov
        p[b] = total
    return p


def joint_wavefunction(j: JointState, pointer_mass: float = 1.0, harmonics: int | None = None) -> MultiTimeWaveFunction:
    """Two-particle (x, y) wave function with each E_b replaced by a truncated momentum comb.

    The comb reproduces E_b's Fourier series along y^1 at the centre time of
    the pointer cell; ``harmonics`` defaults to 4 L / w, i.e. wavenumbers up
    to 8 pi / w.
    """
    pf = j.pointers
    L = pf.domain.lengths[1]
    if harmonics is None:
        harmonics = int(np.ceil(4 * L / pf.half_width))
    t_c = 0.5 * (pf.domain.lo[0] + pf.domain.hi[0])
    coeffs, mom = [], []
    for b in range(j.outcomes):
        if j.coefficients[b] == 0:
            continue
        k, e = pf.fourier_coefficients(b, harmonics, t_c)
        q = comb_momenta(k, pointer_mass)
        e = e * np.exp(1j * q[:, 0] * t_c)
        for em, qm in zip(e, q):
            coeffs.append(j.coefficients[b] * j.basis.amplitude * em)
            mom.append([j.basis.momenta[b], qm])
    psi = MultiTimeWaveFunction.from_arrays([j.basis.mass, pointer_mass], coeffs, mom,
                                            (j.basis.domain, pf.domain))
    return normalize(psi)


@dataclass
class MeasurementReport:
    p_theory: np.ndarray
    frequencies: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray
    count: int
    unresolved: int
    aborted: int
    unresolved_limit: float = 0.02

    @property
    def unresolved_fraction(self) -> float:
        return self.unresolved / self.count

    @property
    def within_3sigma(self) -> np.ndarray:
        return np.abs(self.frequencies - self.p_theory) <= 3 * self.stderr + 1e-15

    @property
    def passed(self) -> bool:
        return bool(np.all(self.within_3sigma)) and self.unresolved_fraction < self.unresolved_limit

    def to_json(self) -> list:
        return [{"outcome_index": b, "p_theory": float(self.p_theory[b]), "p_bohmian": float(self.frequencies[b]),
                 "stderr": float(self.stderr[b]), "unresolved_fraction": self.unresolved_fraction}
                for b in range(len(self.p_theory))]


def bohmian_outcome_frequencies(j: JointState, count: int, seed: int, delta_s: float,
                                settings: IntegratorSettings = IntegratorSettings(),
                                pointer_mass: float = 1.0, harmonics: int | None = None,
                                jobs: int = 1) -> MeasurementReport:
    """Sample (x, y) from |psi(x, y)|^2, flow by ``delta_s`` and read the pointer.

    Each flowed configuration is assigned the outcome whose support contains
    its pointer coordinate y^1.  Node aborts and pointer readings between
    supports count as unresolved; frequencies are taken over resolved
    samples.
    """
    psi = joint_wavefunction(j, pointer_mass, harmonics)
    ens = sample(psi, count, seed)
    cfgs = ens.configurations
    if delta_s > 0:
        cfgs, status = flow_ensemble(psi, cfgs, delta_s, settings, jobs)
        aborted = status != OK
    else:
        aborted = np.zeros(len(cfgs), dtype=bool)
    outcome = np.where(aborted, -1, j.pointers.classify(np.nan_to_num(cfgs[:, 1, 1], nan=-np.inf)))
    counts = np.array([(outcome == b).sum() for b in range(j.outcomes)])
    resolved = int(counts.sum())
    p = np.abs(j.coefficients) ** 2
    freq = counts / resolved if resolved else np.zeros(j.outcomes)
    stderr = np.sqrt(p * (1 - p) / max(resolved, 1))
    return MeasurementReport(outcome_probabilities(j), freq, stderr, counts, int(count),
                             int(count - resolved), int(aborted.sum()))


def write_outcome_json(report: MeasurementReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
