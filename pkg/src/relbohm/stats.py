"""Monte Carlo and density diagnostics for the 4n-dimensional measure |psi|^2 d^4x_1...d^4x_n."""
from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats as sps

from .dynamics import OK, IntegratorSettings, flow
from .errors import DomainError, EnvelopeViolation, NodeProximity, ZeroMarginal
from .spacetime import as_configuration
from .wavefn import MultiTimeWaveFunction, current, evaluate, gram_matrix, velocity

BLOCK = 8192
FLOW_CHUNK = 2048
AXES = ("t", "x", "y", "z")


def fingerprint(psi: MultiTimeWaveFunction) -> str:
    h = hashlib.sha1()
    for arr in (np.asarray(psi.masses), psi.coefficients, psi.momenta,
                np.array([b.lo + b.hi for b in psi.domain])):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()[:16]


def rng_stream(seed: int, *keys: int) -> np.random.Generator:
    """PCG64 seeded through SeedSequence([seed, *keys]); stable across platforms."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, keys)])))


@dataclass
class Ensemble:
    configurations: np.ndarray
    seed: int
    psi_ref: str
    proposals: int = 0

    def __len__(self):
        return len(self.configurations)

    def axis(self, particle: int, component: int) -> np.ndarray:
        return self.configurations[:, particle, component]


@dataclass(frozen=True)
class HistogramSpec:
    particle: int
    component: int
    edges: tuple

    def __post_init__(self):
        e = tuple(float(x) for x in self.edges)
        if len(e) < 2 or any(b <= a for a, b in zip(e, e[1:])):
            raise ValueError("histogram needs at least two strictly increasing edges")
        object.__setattr__(self, "edges", e)


def histogram(ens: Ensemble, spec: HistogramSpec):
    counts, _ = np.histogram(ens.axis(spec.particle, spec.component), bins=np.asarray(spec.edges))
    return counts


def envelope(psi: MultiTimeWaveFunction) -> float:
    """(sum_j |c_j|)^2, an upper bound on |psi|^2 everywhere."""
    return float(np.sum(np.abs(psi.coefficients))) ** 2


def _domain_arrays(psi):
    lo = np.array([b.lo for b in psi.domain])
    hi = np.array([b.hi for b in psi.domain])
    return lo, hi


def sample(psi: MultiTimeWaveFunction, count: int, seed: int, stream: int = 0) -> Ensemble:
    """Rejection-sample ``count`` configurations from |psi|^2 over the domain boxes.

    Proposals come in fixed blocks of ``BLOCK``; block ``k`` draws from
    ``rng_stream(seed, stream, k)``, so the ensemble depends only on
    ``(psi, count, seed, stream)``.
    """
    count = int(count)
    lo, hi = _domain_arrays(psi)
    width = hi - lo
    bound = envelope(psi)
    accepted = []
    have = 0
    block = 0
    while have < count:
        rng = rng_stream(seed, stream, block)
        x = lo + width * rng.random((BLOCK, psi.n, 4))
        u = rng.random(BLOCK)
        dens = np.abs(evaluate(psi, x)) ** 2
        if np.any(dens > bound * (1 + 1e-9)):
            raise EnvelopeViolation(f"|psi|^2 = {dens.max():.6g} exceeds envelope {bound:.6g}")
        keep = x[u * bound < dens]
        accepted.append(keep)
        have += len(keep)
        block += 1
    cfgs = np.concatenate(accepted)[:count]
    return Ensemble(cfgs, int(seed), fingerprint(psi), proposals=block * BLOCK)


def in_domain(psi: MultiTimeWaveFunction, cfgs) -> np.ndarray:
    lo, hi = _domain_arrays(psi)
    c = np.asarray(cfgs)
    return np.all((c >= lo) & (c <= hi), axis=(-2, -1))


def _check_times(psi, times):
    times = np.asarray(times, dtype=float)
    if times.shape != (psi.n,):
        raise ValueError(f"need one time per particle ({psi.n})")
    for a, (t, b) in enumerate(zip(times, psi.domain)):
        if not b.lo[0] <= t <= b.hi[0]:
            raise DomainError(f"time {t} of particle {a} outside [{b.lo[0]}, {b.hi[0]}]")
    return times


def time_marginal(psi: MultiTimeWaveFunction, times) -> float:
    """N_{t_1..t_n}: integral of |psi|^2 over the spatial boxes with particle times fixed."""
    times = _check_times(psi, times)
    g = gram_matrix(psi.momenta, psi.momenta, psi.domain, times)
    return float(np.real(np.conj(psi.coefficients) @ g @ psi.coefficients))


def conditional_density(psi: MultiTimeWaveFunction, times, spatial_points) -> float:
    """|psi|^2 at (x_a, t_a) divided by N_{t_1..t_n}; a density over 3n-space."""
    times = _check_times(psi, times)
    pts = np.asarray(spatial_points, dtype=float)
    nrm = time_marginal(psi, times)
    if not nrm > 1e-300:
        raise ZeroMarginal(f"time marginal {nrm:.3e} vanishes")
    t = np.broadcast_to(times[:, None], pts.shape[:-1] + (1,))
    cfg = np.concatenate([t, pts], axis=-1)
    out = np.abs(evaluate(psi, cfg)) ** 2 / nrm
    return float(out) if np.ndim(out) == 0 else out


def single_time_density(psi: MultiTimeWaveFunction, t: float, spatial_points):
    """Equal-time special case t_1 = ... = t_n = t of :func:`conditional_density`."""
    return conditional_density(psi, [t] * psi.n, spatial_points)


def _flow_chunk(args):
    psi, chunk, delta_s, settings = args
    states, status, _ = flow(psi, chunk, (0.0, delta_s), settings, [delta_s])
    return states[:, 0], status


def flow_ensemble(psi, cfgs, delta_s, settings=IntegratorSettings(), jobs: int = 1):
    """Flow every configuration by ``delta_s``; returns (final states, status codes)."""
    chunks = [cfgs[i:i + FLOW_CHUNK] for i in range(0, len(cfgs), FLOW_CHUNK)]
    work = [(psi, c, float(delta_s), settings) for c in chunks]
    if jobs > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_flow_chunk, work))
    else:
        results = [_flow_chunk(w) for w in work]
    return np.concatenate([r[0] for r in results]), np.concatenate([r[1] for r in results])


@dataclass
class CheckRecord:
    test: str
    statistic: float
    p_value: float | None
    count: int
    seed: int
    passed: bool

    def to_dict(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


@dataclass
class EquivarianceReport:
    records: list
    count: int
    seed: int
    delta_s: float
    exited: int
    aborted: int
    alpha: float = 0.01
    leak_limit: float = 0.01

    @property
    def leak_fraction(self) -> float:
        return (self.exited + self.aborted) / self.count

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records) and self.leak_fraction < self.leak_limit

    def to_json(self) -> list:
        rows = [r.to_dict() for r in self.records]
        rows.append(CheckRecord("leak_fraction", self.leak_fraction, None, self.count,
                               self.seed, self.leak_fraction < self.leak_limit).to_dict())
        return rows


def equivariance_test(psi: MultiTimeWaveFunction, count: int, seed: int, delta_s: float,
                      settings: IntegratorSettings = IntegratorSettings(), alpha: float = 0.01,
                      jobs: int = 1) -> EquivarianceReport:
    """Flow a |psi|^2 ensemble by ``delta_s`` and compare it with a fresh ensemble.

    Per-axis two-sample KS tests at level ``alpha`` with a Bonferroni
    correction over the 4n axes.  Configurations that abort at a node or
    leave the domain are dropped from the comparison and counted.
    """
    start = sample(psi, count, seed, stream=0)
    final, status = flow_ensemble(psi, start.configurations, delta_s, settings, jobs)
    aborted = status != OK
    inside = ~aborted & in_domain(psi, np.where(aborted[:, None, None], 0.0, final))
    exited = ~aborted & ~inside
    moved = final[inside]
    fresh = sample(psi, count, seed, stream=1).configurations
    level = alpha / (4 * psi.n)
    records = []
    for a in range(psi.n):
        for mu in range(4):
            res = sps.ks_2samp(moved[:, a, mu], fresh[:, a, mu])
            records.append(CheckRecord(f"ks_2samp[particle={a},axis={AXES[mu]}]", float(res.statistic),
                                      float(res.pvalue), int(len(moved)), int(seed), bool(res.pvalue > level)))
    return EquivarianceReport(records, int(count), int(seed), float(delta_s),
                              int(exited.sum()), int(aborted.sum()), alpha)


def continuity_residual(psi: MultiTimeWaveFunction, cfg, h: float = 1e-4) -> float:
    """Normalized central-difference residual of sum_a d_{a mu}(|psi|^2 v^mu_a).

    The divergence is divided by the larger of sum_a max_mu |d_{a mu} j^mu_a|
    and (largest momentum component) * max |j|, the natural size of a
    derivative of the current; the second scale keeps the ratio meaningful
    when every individual term vanishes, e.g. for plane waves.
    """
    x = as_configuration(cfg, psi.n)
    amp = abs(evaluate(psi, x))
    if not amp > psi.node_threshold:
        raise NodeProximity(f"|psi| = {amp:.3e} at node", amplitude=amp, threshold=psi.node_threshold)
    lo = np.array([b.lo for b in psi.domain])
    hi = np.array([b.hi for b in psi.domain])
    if np.any(x - lo <= 2 * h) or np.any(hi - x <= 2 * h):
        raise DomainError("configuration closer than 2h to the domain boundary")
    d = np.empty((psi.n, 4))
    for a in range(psi.n):
        for mu in range(4):
            e = np.zeros_like(x)
            e[a, mu] = h
            d[a, mu] = (current(psi, x + e)[a, mu] - current(psi, x - e)[a, mu]) / (2 * h)
    div = abs(d.sum())
    term_scale = float(np.sum(np.max(np.abs(d), axis=1)))
    natural = float(np.max(np.abs(psi.momenta)) * np.max(np.abs(current(psi, x))))
    scale = max(term_scale, natural)
    return div / scale if scale > 0 else div


def nonlocality_witness(psi: MultiTimeWaveFunction, cfg, a: int, b: int, displacement) -> float:
    """|v_a(cfg) - v_a(cfg with x_b shifted by displacement)|."""
    if a == b:
        raise ValueError("witness needs two distinct particles")
    x = as_configuration(cfg, psi.n)
    moved = x.copy()
    moved[b] += np.asarray(displacement, dtype=float)
    return float(np.linalg.norm(velocity(psi, x)[a] - velocity(psi, moved)[a]))


ENSEMBLE_COLUMNS = ("sample_id", "particle", "t", "x", "y", "z")


def write_ensemble_csv(ens: Ensemble, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ENSEMBLE_COLUMNS)
        for i, cfg in enumerate(ens.configurations):
            for a, ev in enumerate(cfg):
                w.writerow([i, a, *(repr(float(c)) for c in ev)])


def write_report_json(rows, path) -> None:
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=2, sort_keys=True)
        fh.write("\n")
