"""Minkowski-space algebra in natural units, metric signature (+,-,-,-).

Four-vectors are stored as float arrays whose last axis holds (t, x, y, z).
Every function here broadcasts over leading axes, so a single event, a
configuration of ``n`` events (shape ``(n, 4)``) and a batch of
configurations (shape ``(N, n, 4)``) all go through the same code.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])
_SIGNS = np.array([1.0, -1.0, -1.0, -1.0])


@dataclass(frozen=True)
class FourVector:
    t: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.t, self.x, self.y, self.z])):
            raise ValueError(f"non-finite four-vector component in {self}")

    def __array__(self, dtype=None, copy=None):
        return np.array([self.t, self.x, self.y, self.z], dtype=dtype or float)

    @classmethod
    def from_array(cls, a) -> "FourVector":
        a = np.asarray(a, dtype=float)
        if a.shape != (4,):
            raise ValueError(f"expected shape (4,), got {a.shape}")
        return cls(*(float(c) for c in a))

    def __iter__(self):
        return iter((self.t, self.x, self.y, self.z))


def minkowski_dot(a, b):
    """a^0 b^0 - a^1 b^1 - a^2 b^2 - a^3 b^3, broadcast over leading axes."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 0] - a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2] - a[..., 3] * b[..., 3]


def lower_index(v):
    return np.asarray(v) * _SIGNS


def boost_matrix(beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    b2 = float(beta @ beta)
    if not b2 < 1.0:
        raise ValueError(f"boost speed |beta| = {np.sqrt(b2):.6g} must be < 1")
    L = np.eye(4)
    if b2 == 0.0:
        return L
    g = 1.0 / np.sqrt(1.0 - b2)
    L[0, 0] = g
    L[0, 1:] = -g * beta
    L[1:, 0] = -g * beta
    L[1:, 1:] += (g - 1.0) * np.outer(beta, beta) / b2
    return L


@dataclass(frozen=True)
class LorentzBoost:
    """Pure boost with velocity ``beta``.

    Active convention: a particle at rest acquires spatial momentum
    ``-gamma * m * beta``; equivalently, ``apply_boost`` returns the
    coordinates seen from a frame moving with ``+beta``.
    """

    beta: tuple = (0.0, 0.0, 0.0)
    matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        if len(beta) != 3:
            raise ValueError("beta must have three components")
        object.__setattr__(self, "beta", beta)
        m = boost_matrix(beta)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def gamma(self) -> float:
        return float(self.matrix[0, 0])

    def inverse(self) -> "LorentzBoost":
        return LorentzBoost(tuple(-b for b in self.beta))

    def is_identity(self) -> bool:
        return all(b == 0.0 for b in self.beta)


def apply_boost(boost: LorentzBoost, v) -> np.ndarray:
    """Return Lambda v for four-vectors stored along the last axis of ``v``."""
    v = np.asarray(v, dtype=float)
    if boost.is_identity():
        return v.copy()
    return v @ boost.matrix.T


@dataclass(frozen=True)
class SpacetimeBox:
    """Closed axis-aligned 4D box ``[lo, hi]``."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(c) for c in np.asarray(self.lo, dtype=float))
        hi = tuple(float(c) for c in np.asarray(self.hi, dtype=float))
        if len(lo) != 4 or len(hi) != 4:
            raise ValueError("box corners must be four-vectors")
        if not np.all(np.isfinite(lo + hi)):
            raise ValueError("box corners must be finite")
        if not all(l < h for l, h in zip(lo, hi)):
            raise ValueError(f"box needs lo < hi on every axis, got {lo} / {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def lengths(self) -> np.ndarray:
        return np.subtract(self.hi, self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def corners(self) -> np.ndarray:
        return np.array([[(self.lo, self.hi)[k][mu] for mu, k in enumerate(bits)]
                         for bits in product((0, 1), repeat=4)])


def contains(box: SpacetimeBox, e) -> np.ndarray | bool:
    e = np.asarray(e, dtype=float)
    inside = np.all((e >= np.asarray(box.lo)) & (e <= np.asarray(box.hi)), axis=-1)
    return bool(inside) if inside.ndim == 0 else inside


def boost_box(box: SpacetimeBox, boost: LorentzBoost) -> SpacetimeBox:
    """Axis-aligned bounding box of the boosted corners."""
    if boost.is_identity():
        return box
    c = apply_boost(boost, box.corners())
    return SpacetimeBox(c.min(axis=0), c.max(axis=0))


def as_configuration(events, n: int | None = None) -> np.ndarray:
    """Coerce a list of events into a float array of shape (n, 4)."""
    cfg = np.array([np.asarray(e, dtype=float) for e in events]) if not isinstance(events, np.ndarray) \
        else np.asarray(events, dtype=float)
    if cfg.ndim != 2 or cfg.shape[1] != 4:
        raise ValueError(f"configuration must have shape (n, 4), got {cfg.shape}")
    if n is not None and cfg.shape[0] != n:
        raise ValueError(f"configuration has {cfg.shape[0]} events, wave function has {n} particles")
    if not np.all(np.isfinite(cfg)):
        raise ValueError("configuration contains non-finite coordinates")
    return cfg
