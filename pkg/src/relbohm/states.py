"""Reference wave functions used by the tests, scripts and bundled scenarios."""
from __future__ import annotations

import numpy as np

from .spacetime import SpacetimeBox
from .wavefn import MultiTimeWaveFunction, normalize, on_shell_energy

SQRT2 = np.sqrt(2.0)


def box(t=(0.0, 1.0), x=(0.0, 1.0), y=(0.0, 1.0), z=(0.0, 1.0)) -> SpacetimeBox:
    return SpacetimeBox((t[0], x[0], y[0], z[0]), (t[1], x[1], y[1], z[1]))


def p4(mass, p3, sign=1):
    return (on_shell_energy(mass, p3, sign), *map(float, p3))


def plane_wave(mass=1.0, p3=(0.0, 0.0, 0.0), domain=None, sign=1) -> MultiTimeWaveFunction:
    domain = domain or box()
    psi = MultiTimeWaveFunction.from_arrays([mass], [1.0], [[p4(mass, p3, sign)]], [domain])
    return normalize(psi)


def standing_wave(domain=None) -> MultiTimeWaveFunction:
    """(e^{-ip.x} + e^{-iq.x}), p = (sqrt2, 1, 0, 0), q = (sqrt2, -1, 0, 0); |psi|^2 ~ cos^2(x)."""
    domain = domain or box(t=(0.0, 200.0), x=(-2 * np.pi, 2 * np.pi))
    mom = [[p4(1.0, (1, 0, 0))], [p4(1.0, (-1, 0, 0))]]
    return normalize(MultiTimeWaveFunction.from_arrays([1.0], [1.0, 1.0], mom, [domain]))


def unequal_two_mode(ratio=0.8, domain=None) -> MultiTimeWaveFunction:
    """Rest mode plus a moving mode with a different energy and weaker amplitude.

    Near the minima of |psi| the spatial phase gradient is amplified by
    ~1/(1 - ratio), which makes the guidance velocity spacelike there.
    """
    domain = domain or box(t=(0.0, 50.0), x=(-10.0, 10.0))
    mom = [[p4(1.0, (0, 0, 0))], [p4(1.0, (1, 0, 0))]]
    return normalize(MultiTimeWaveFunction.from_arrays([1.0], [1.0, ratio], mom, [domain]))


ENTANGLED_BOX = box(t=(0.0, 400.0), x=(-200.0, 200.0))


def entangled_pair(domain=None, weight=0.6) -> MultiTimeWaveFunction:
    """Exchange-symmetric two-particle state.

    psi = e^{-i(p.x1 + q.x2)} + e^{-i(q.x1 + p.x2)} + w e^{-i(k.x1 + k.x2)}
    with p = (sqrt2, 1, 0, 0), q = (sqrt5, -2, 0, 0), k = (1, 0, 0, 0).
    A two-term symmetrization alone has a constant guidance field off nodes;
    the third term makes v_1 depend on x_2.
    """
    domain = domain or (ENTANGLED_BOX, ENTANGLED_BOX)
    p, q, k = p4(1.0, (1, 0, 0)), p4(1.0, (-2, 0, 0)), p4(1.0, (0, 0, 0))
    mom = [[p, q], [q, p], [k, k]]
    return normalize(MultiTimeWaveFunction.from_arrays([1.0, 1.0], [1.0, 1.0, weight], mom, domain))


def product_pair(domain=None) -> MultiTimeWaveFunction:
    domain = domain or (ENTANGLED_BOX, ENTANGLED_BOX)
    mom = [[p4(1.0, (1, 0, 0)), p4(1.0, (-2, 0, 0))]]
    return normalize(MultiTimeWaveFunction.from_arrays([1.0, 1.0], [1.0], mom, domain))


def product_superposition_pair(domain=None) -> MultiTimeWaveFunction:
    """(e^{-ip.x1} + 0.5 e^{-ik.x1}) (e^{-iq.x2} + 0.7 e^{-ik.x2}) expanded into four terms."""
    domain = domain or (ENTANGLED_BOX, ENTANGLED_BOX)
    p, q, k = p4(1.0, (1, 0, 0)), p4(1.0, (-2, 0, 0)), p4(1.0, (0, 0, 0))
    mom = [[p, q], [p, k], [k, q], [k, k]]
    c = [1.0, 0.7, 0.5, 0.35]
    return normalize(MultiTimeWaveFunction.from_arrays([1.0, 1.0], c, mom, domain))
