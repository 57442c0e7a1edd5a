"""Scenario files: JSON documents describing one wave function and one task.

Schema (keys fixed)::

    {
      "name": "standing_wave_equivariance",
      "n": 1,
      "masses": [1.0],
      "normalize": true,                      # optional, default true
      "terms": [
        {"coefficient": 1.0,                  # or [re, im]
         "modes": [{"p3": [1, 0, 0], "sign": 1}]},   # energy completed on shell
        {"coefficient": [1.0, 0.0],
         "modes": [{"p": [1.4142135623730951, -1, 0, 0]}]}   # full four-momentum
      ],
      "domain": [{"lo": [0, -6.28, 0, 0], "hi": [200, 6.28, 1, 1]}],
      "task": "equivariance",
      "params": {...}                         # task specific, see TASK_PARAMS
    }

A mode given as ``"p"`` must already be on shell unless it also carries
``"complete_energy": true``, in which case p^0 is recomputed from the
spatial part and ``"sign"``.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .spacetime import SpacetimeBox
from .wavefn import MultiTimeWaveFunction, PlaneWaveMode, ProductTerm, normalize, on_shell_energy

TASKS = ("trajectory", "ensemble", "equivariance", "continuity", "covariance", "measurement", "nonlocality")
TOP_KEYS = {"name", "n", "masses", "terms", "domain", "task", "params", "normalize", "description"}

TASK_PARAMS = {
    "trajectory": {"initial", "s_span", "n_samples", "settings", "expect_superluminal", "expect_final",
                   "final_tol", "seed"},
    "ensemble": {"count", "seed", "reference", "alpha"},
    "equivariance": {"count", "seed", "delta_s", "settings", "alpha", "jobs"},
    "continuity": {"count", "seed", "h", "tol"},
    "covariance": {"initial", "s_span", "betas", "settings", "tol", "n_samples", "seed"},
    "measurement": {"harmonics", "pointer", "pointer_mass", "count", "seed", "delta_s", "settings",
                    "born_tol", "jobs"},
    "nonlocality": {"configuration", "a", "b", "displacement", "expect", "threshold", "seed"},
}


class ScenarioError(Exception):
    exit_code = 2


class ParseError(ScenarioError):
    def __init__(self, message, line=None, field=None):
        loc = f" (line {line})" if line is not None else ""
        loc += f" [{field}]" if field else ""
        super().__init__(message + loc)
        self.line = line
        self.field = field


class ValidationError(ScenarioError):
    def __init__(self, message, field=None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


@dataclass
class Scenario:
    name: str
    wavefunction: MultiTimeWaveFunction
    task: str
    params: dict
    source_hash: str
    raw: dict = field(repr=False, default_factory=dict)
    path: Path | None = None


def content_hash(data: bytes) -> str:
    """git-style blob hash of the scenario file."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _require(obj, key, where):
    if key not in obj:
        raise ValidationError("missing required key", f"{where}.{key}" if where else key)
    return obj[key]


def _number_list(value, length, where):
    if not isinstance(value, (list, tuple)) or len(value) != length:
        raise ValidationError(f"expected a list of {length} numbers", where)
    try:
        out = [float(v) for v in value]
    except (TypeError, ValueError):
        raise ValidationError("non-numeric entry", where) from None
    if not np.all(np.isfinite(out)):
        raise ValidationError("non-finite entry", where)
    return out


def _coefficient(value, where):
    if isinstance(value, (int, float)):
        return complex(value)
    re, im = _number_list(value, 2, where)
    return complex(re, im)


def _mode(spec, mass, where):
    if not isinstance(spec, dict):
        raise ValidationError("mode must be an object", where)
    sign = spec.get("sign", 1)
    if sign not in (1, -1):
        raise ValidationError("sign must be +1 or -1", f"{where}.sign")
    if "p3" in spec:
        p3 = _number_list(spec["p3"], 3, f"{where}.p3")
        return PlaneWaveMode((on_shell_energy(mass, p3, sign), *p3), mass)
    p = _number_list(_require(spec, "p", where), 4, f"{where}.p")
    if spec.get("complete_energy", False):
        return PlaneWaveMode((on_shell_energy(mass, p[1:], sign), *p[1:]), mass)
    mode = PlaneWaveMode(p, mass)
    if not mode.is_on_shell():
        raise ValidationError(f"off-shell momentum {p} for mass {mass} "
                              f"(p.p - m^2 = {mode.shell_error():.3g}); give p3 or set complete_energy",
                              f"{where}.p")
    return mode


def build_wavefunction(doc: dict) -> MultiTimeWaveFunction:
    n = _require(doc, "n", "")
    if not isinstance(n, int) or n < 1:
        raise ValidationError("must be a positive integer", "n")
    masses = _number_list(_require(doc, "masses", ""), n, "masses")
    if any(m < 0 for m in masses):
        raise ValidationError("masses must be non-negative", "masses")
    terms_doc = _require(doc, "terms", "")
    if not isinstance(terms_doc, list) or not terms_doc:
        raise ValidationError("need a non-empty list of terms", "terms")
    terms = []
    for j, t in enumerate(terms_doc):
        where = f"terms[{j}]"
        if not isinstance(t, dict):
            raise ValidationError("term must be an object", where)
        c = _coefficient(_require(t, "coefficient", where), f"{where}.coefficient")
        modes = _require(t, "modes", where)
        if not isinstance(modes, list) or len(modes) != n:
            raise ValidationError(f"need exactly {n} modes", f"{where}.modes")
        terms.append(ProductTerm(c, tuple(_mode(m, masses[a], f"{where}.modes[{a}]") for a, m in enumerate(modes))))
    dom_doc = _require(doc, "domain", "")
    if not isinstance(dom_doc, list) or len(dom_doc) != n:
        raise ValidationError(f"need one box per particle ({n})", "domain")
    boxes = []
    for a, b in enumerate(dom_doc):
        where = f"domain[{a}]"
        if not isinstance(b, dict):
            raise ValidationError("box must be an object", where)
        lo = _number_list(_require(b, "lo", where), 4, f"{where}.lo")
        hi = _number_list(_require(b, "hi", where), 4, f"{where}.hi")
        try:
            boxes.append(SpacetimeBox(lo, hi))
        except ValueError as e:
            raise ValidationError(str(e), where) from None
    psi = MultiTimeWaveFunction(tuple(masses), tuple(terms), tuple(boxes))
    if doc.get("normalize", True):
        psi = normalize(psi)
    return psi


def validate_document(doc) -> Scenario:
    if not isinstance(doc, dict):
        raise ValidationError("scenario must be a JSON object")
    unknown = set(doc) - TOP_KEYS
    if unknown:
        raise ValidationError(f"unknown keys {sorted(unknown)}")
    name = _require(doc, "name", "")
    if not isinstance(name, str) or not name:
        raise ValidationError("must be a non-empty string", "name")
    task = _require(doc, "task", "")
    if task not in TASKS:
        raise ValidationError(f"unknown task {task!r}; expected one of {TASKS}", "task")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise ValidationError("must be an object", "params")
    unknown = set(params) - TASK_PARAMS[task]
    if unknown:
        raise ValidationError(f"unknown parameters {sorted(unknown)} for task {task}", "params")
    psi = build_wavefunction(doc)
    return Scenario(name, psi, task, params, "", doc)


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}") from None
    try:
        doc = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as e:
        raise ParseError(f"not UTF-8 text: {e}") from None
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno) from None
    sc = validate_document(doc)
    sc.source_hash = content_hash(data)
    sc.path = path
    return sc
