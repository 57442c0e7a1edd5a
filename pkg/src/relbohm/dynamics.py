"""Bohmian trajectories X^mu_a(s) driven by the guidance field of a wave function.

The ODE dX/ds = v(X) is autonomous, so every configuration in a batch can be
advanced with its own step size.  ``flow`` does exactly that with an embedded
Dormand-Prince 5(4) pair and its fourth-order dense output; ``integrate`` is
the single-configuration wrapper that returns a :class:`Trajectory`.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .errors import NodeProximity, StepLimitExceeded
from .spacetime import LorentzBoost, apply_boost, as_configuration, minkowski_dot
from .wavefn import MultiTimeWaveFunction, boost_wavefunction, guidance

# Dormand-Prince 5(4) tableau, FSAL, with Shampine's dense-output polynomial.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

OK, NODE, STEP_LIMIT = 0, 1, 2
STATUS_NAMES = {OK: "ok", NODE: "node", STEP_LIMIT: "step_limit"}


class VelocityClass(str, enum.Enum):
    TIMELIKE = "timelike"
    SPACELIKE = "spacelike"
    LIGHTLIKE = "lightlike"


@dataclass(frozen=True)
class IntegratorSettings:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    max_step: float = 0.1
    max_steps: int = 200_000
    node_abort: bool = True

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.max_step > 0):
            raise ValueError("tolerances and max_step must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")

    def scaled(self, factor: float) -> "IntegratorSettings":
        return IntegratorSettings(self.rel_tol * factor, self.abs_tol * factor,
                                  self.max_step, self.max_steps, self.node_abort)


@dataclass
class Trajectory:
    s_values: np.ndarray
    states: np.ndarray
    velocities: np.ndarray
    flags: np.ndarray
    status: str = "ok"
    message: str = ""
    steps: int = 0

    def __post_init__(self):
        if len(self.states) != len(self.s_values):
            raise ValueError("one state per s sample required")
        if np.any(np.diff(self.s_values) <= 0):
            raise ValueError("s samples must be strictly increasing")

    def __len__(self):
        return len(self.s_values)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def classify_velocity(v, tol: float = 1e-9):
    vv = minkowski_dot(v, v)
    if np.ndim(vv) == 0:
        if vv > tol:
            return VelocityClass.TIMELIKE
        if vv < -tol:
            return VelocityClass.SPACELIKE
        return VelocityClass.LIGHTLIKE
    out = np.full(np.shape(vv), VelocityClass.LIGHTLIKE.value, dtype=object)
    out[vv > tol] = VelocityClass.TIMELIKE.value
    out[vv < -tol] = VelocityClass.SPACELIKE.value
    return out


def _error_norm(err, y_old, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
    with np.errstate(invalid="ignore"):
        e = np.max(np.abs(err) / scale, axis=-1)
    return np.where(np.isfinite(e), e, np.inf)


def flow(psi: MultiTimeWaveFunction, x0, s_span, settings: IntegratorSettings = IntegratorSettings(),
         s_eval=None):
    """Advance a batch of configurations through ``s_span``.

    ``x0`` has shape ``(N, n, 4)``.  Returns ``(states, status, steps)`` where
    ``states`` has shape ``(N, K, n, 4)`` for the ``K`` output parameters
    (NaN after an abort), ``status`` holds OK / NODE / STEP_LIMIT per
    configuration and ``steps`` the attempted step counts.  Never raises on
    per-configuration failures.
    """
    s0, s1 = map(float, s_span)
    if not s1 >= s0:
        raise ValueError("s_span must be non-decreasing")
    x0 = np.asarray(x0, dtype=float)
    N, n = x0.shape[0], psi.n
    if x0.shape[1:] != (n, 4):
        raise ValueError(f"initial batch shape {x0.shape} does not match {n} particles")
    s_eval = np.array([s0, s1] if s_eval is None else s_eval, dtype=float)
    if np.any(np.diff(s_eval) <= 0) or s_eval[0] < s0 or s_eval[-1] > s1:
        raise ValueError("s_eval must be increasing and inside s_span")
    D = 4 * n
    eps = psi.node_threshold
    rtol, atol = settings.rel_tol, settings.abs_tol

    def rhs(y):
        v, amp = guidance(psi, y.reshape(-1, n, 4))
        return v.reshape(-1, D), amp

    out = np.full((N, len(s_eval), D), np.nan)
    y = x0.reshape(N, D).copy()
    s = np.full(N, s0)
    f, amp = rhs(y)
    status = np.where(amp > eps, OK, NODE)
    steps = np.zeros(N, dtype=int)
    nxt = np.zeros(N, dtype=int)
    at_start = s_eval[0] == s0
    if at_start:
        out[:, 0] = y
        nxt[:] = 1
    h = np.full(N, min(settings.max_step, max(s1 - s0, 0.0)))
    done = (s >= s1) | (status != OK)

    while not np.all(done):
        ia = np.nonzero(~done)[0]
        yi, si = y[ia], s[ia]
        remaining = s1 - si
        hi = np.minimum(np.minimum(h[ia], settings.max_step), remaining)
        last = hi >= remaining
        s_new = np.where(last, s1, si + hi)
        hcol = hi[:, None]

        k = [f[ia]]
        for i in range(1, 6):
            acc = np.zeros_like(yi)
            for j, aij in enumerate(_A[i]):
                acc = acc + aij * k[j]
            k.append(rhs(yi + hcol * acc)[0])
        acc = np.zeros_like(yi)
        for j in range(6):
            acc = acc + _B[j] * k[j]
        y_new = yi + hcol * acc
        f_new, amp_new = rhs(y_new)
        k.append(f_new)
        err = np.zeros_like(yi)
        for j in range(7):
            err = err + _E[j] * k[j]
        err_norm = _error_norm(hcol * err, yi, y_new, rtol, atol)

        steps[ia] += 1
        ok_step = (err_norm <= 1.0) & np.all(np.isfinite(y_new), axis=1)
        near_node = ok_step & ~(amp_new > eps)
        accept = ok_step & ~near_node

        with np.errstate(divide="ignore"):
            factor = 0.9 * np.where(err_norm > 0, err_norm, 1e-10) ** -0.2
        factor = np.where(accept, np.clip(factor, 0.2, 10.0), np.clip(factor, 0.1, 1.0))
        if settings.node_abort:
            status[ia[near_node]] = NODE
        else:
            factor = np.where(near_node, 0.5, factor)
            stalled = near_node & (hi <= 1e-14 * np.maximum(1.0, np.abs(si)))
            status[ia[stalled]] = NODE
        h[ia] = hi * factor

        acc_idx = np.nonzero(accept)[0]
        if acc_idx.size:
            g = ia[acc_idx]
            Q = np.stack([kk[acc_idx] for kk in k], axis=-1) @ _P  # (M, D, 4)
            sa, s_na, ha = si[acc_idx], s_new[acc_idx], hi[acc_idx]
            ya, yna = yi[acc_idx], y_new[acc_idx]
            while True:
                pending = nxt[g] < len(s_eval)
                se = s_eval[np.minimum(nxt[g], len(s_eval) - 1)]
                fill = pending & (se <= s_na)
                if not fill.any():
                    break
                r = np.nonzero(fill)[0]
                theta = (se[r] - sa[r]) / ha[r]
                powers = np.cumprod(np.repeat(theta[:, None], 4, axis=1), axis=1)
                dense = ya[r] + ha[r, None] * np.einsum("mdp,mp->md", Q[r], powers)
                exact = se[r] == s_na[r]
                dense[exact] = yna[r][exact]
                out[g[r], nxt[g[r]]] = dense
                nxt[g[r]] += 1
            y[g] = yna
            s[g] = s_na
            f[g] = f_new[acc_idx]

        over = (steps[ia] >= settings.max_steps) & (s[ia] < s1) & (status[ia] == OK)
        status[ia[over]] = STEP_LIMIT
        done = (s >= s1) | (status != OK)

    return out.reshape(N, len(s_eval), n, 4), status, steps


def _trajectory_from_states(psi, s_eval, states, status, steps, tol=1e-9):
    keep = np.all(np.isfinite(states), axis=(1, 2))
    s_vals, st = s_eval[keep], states[keep]
    v, _ = guidance(psi, st) if len(st) else (np.empty((0, psi.n, 4)), None)
    flags = classify_velocity(v, tol) if len(st) else np.empty((0, psi.n), dtype=object)
    return Trajectory(s_vals, st, v, flags, STATUS_NAMES[int(status)], steps=int(steps))


def integrate(psi: MultiTimeWaveFunction, x0, s_span, settings: IntegratorSettings = IntegratorSettings(),
              s_eval=None, n_samples: int = 101) -> Trajectory:
    """Integrate dX^mu_a/ds = v^mu_a(X) from ``x0`` over ``s_span``.

    Output is sampled at ``s_eval`` (default: ``n_samples`` evenly spaced
    points).  A node approach raises :class:`NodeProximity` and an exhausted
    step budget :class:`StepLimitExceeded`; both carry the partial trajectory
    as ``.trajectory``.  With ``settings.node_abort`` false a node approach
    instead returns the truncated trajectory with ``status == "node"``.
    """
    x0 = as_configuration(x0, psi.n)
    if s_eval is None:
        s_eval = np.linspace(float(s_span[0]), float(s_span[1]), n_samples)
    s_eval = np.asarray(s_eval, dtype=float)
    _, amp0 = guidance(psi, x0)
    if not amp0 > psi.node_threshold:
        raise NodeProximity(f"initial |psi| = {float(amp0):.3e} is at a node",
                            amplitude=float(amp0), threshold=psi.node_threshold)
    states, status, steps = flow(psi, x0[None], s_span, settings, s_eval)
    traj = _trajectory_from_states(psi, s_eval, states[0], status[0], steps[0])
    if status[0] == NODE:
        s_last = traj.s_values[-1] if len(traj) else float(s_span[0])
        traj.message = f"node approached after s = {s_last:.6g}"
        if settings.node_abort:
            exc = NodeProximity(traj.message, threshold=psi.node_threshold)
            exc.trajectory = traj
            raise exc
    elif status[0] == STEP_LIMIT:
        traj.message = f"step limit {settings.max_steps} exceeded"
        exc = StepLimitExceeded(traj.message)
        exc.trajectory = traj
        raise exc
    return traj


def covariance_deviation(psi: MultiTimeWaveFunction, boost: LorentzBoost, x0, s_span,
                         settings: IntegratorSettings = IntegratorSettings(), n_samples: int = 101) -> float:
    """max over s samples and particles of |Lambda X(s) - X'(s)|.

    ``X`` is integrated in the original frame, ``X'`` with the boosted wave
    function from the boosted initial configuration; both are compared at
    equal ``s``.
    """
    x0 = as_configuration(x0, psi.n)
    s_eval = np.linspace(float(s_span[0]), float(s_span[1]), n_samples)
    t1 = integrate(psi, x0, s_span, settings, s_eval)
    t2 = integrate(boost_wavefunction(psi, boost), apply_boost(boost, x0), s_span, settings, s_eval)
    diff = apply_boost(boost, t1.states) - t2.states
    return float(np.max(np.linalg.norm(diff, axis=-1)))


def superluminal_fraction(traj: Trajectory) -> float:
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    return float(np.mean(np.asarray(traj.flags) == VelocityClass.SPACELIKE.value))


TRAJECTORY_COLUMNS = ("s", "particle", "t", "x", "y", "z", "v0", "v1", "v2", "v3", "flag")


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for k, s in enumerate(traj.s_values):
            for a in range(traj.states.shape[1]):
                w.writerow([repr(float(s)), a, *(repr(float(c)) for c in traj.states[k, a]),
                            *(repr(float(c)) for c in traj.velocities[k, a]), traj.flags[k, a]])
