"""Problem files and the built-in fixture gallery."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import jsonschema
import numpy as np

from .config import Tolerances
from .errors import ConfigError, SalvageError
from .funcspec import RealFn, differentiate, parse
from .intervals import Interval, IntervalSet
from .numerics import truncate

CONSISTENCY_TOL = 1e-6

_BOUND = {"anyOf": [{"type": "number"}, {"enum": ["-inf", "inf"]}]}
_FUNCTION = {
    "anyOf": [
        {"type": "string", "minLength": 1},
        {"type": "number"},
        {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["interval", "expr"],
                "additionalProperties": False,
                "properties": {
                    "interval": {"type": "array", "items": _BOUND, "minItems": 2, "maxItems": 2},
                    "expr": {"anyOf": [{"type": "string", "minLength": 1}, {"type": "number"}]},
                },
            },
        },
    ]
}

PROBLEM_SCHEMA = {
    "type": "object",
    "required": ["domain", "omega"],
    "anyOf": [{"required": ["g_prime"]}, {"required": ["g"]}],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "domain": {"type": "array", "items": _BOUND, "minItems": 2, "maxItems": 2},
        "omega": _FUNCTION,
        "g_prime": _FUNCTION,
        "g": _FUNCTION,
        "link": {"anyOf": [{"type": "string", "minLength": 1}, {"type": "number"}]},
        "link_branch": {"type": "integer", "minimum": 0},
        "params": {"type": "object", "additionalProperties": {"type": "number"}},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "binning": {"enum": ["equal_measure", "equal_width"]},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "quad_tol": {"type": "number", "exclusiveMinimum": 0},
                "rel_tol": {"type": "number", "minimum": 0},
                "a_tol": {"type": "number", "minimum": 0},
                "grid_points": {"type": "integer", "minimum": 2},
                "bins": {"type": "integer", "minimum": 1},
                "n_schedule": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            },
        },
    },
}


@dataclass
class ProblemSpec:
    name: str
    domain: IntervalSet  # finite working domain (infinite ends truncated)
    declared_domain: Interval
    omega: RealFn
    g_prime: RealFn
    g: Optional[RealFn] = None
    link: Optional[RealFn] = None
    link_text: Optional[str] = None
    link_branch: Optional[int] = None
    params: dict = field(default_factory=dict)
    tolerances: Tolerances = field(default_factory=Tolerances)
    binning: str = "equal_measure"
    epsilon: float = 0.01
    truncated: bool = False
    warnings: List[str] = field(default_factory=list)

    def to_json(self):
        return {
            "name": self.name,
            "domain": self.domain.to_json(),
            "declared_domain": self.declared_domain.to_json(),
            "truncated": self.truncated,
            "params": dict(self.params),
            "link": self.link_text,
            "link_branch": self.link_branch,
            "binning": self.binning,
            "epsilon": self.epsilon,
            "tolerances": self.tolerances.to_json(),
            "warnings": list(self.warnings),
        }


def _bound(v):
    if v == "-inf":
        return -math.inf
    if v == "inf":
        return math.inf
    return float(v)


def _field_path(err) -> str:
    path = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
    return path.lstrip(".") or "<root>"


def validate(data) -> None:
    """Schema check; the first violation is raised with its field path."""
    validator = jsonschema.Draft202012Validator(PROBLEM_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        err = errors[0]
        if err.validator == "anyOf" and not err.absolute_path:
            raise ConfigError("problem needs either 'g_prime' or 'g'")
        while err.context:
            # report the failing alternative that got furthest into the value
            err = max(err.context, key=lambda e: len(e.absolute_path))
        raise ConfigError(f"{_field_path(err)}: {err.message}")


def _parse_field(data, key, params, domain):
    value = data[key]
    if isinstance(value, (int, float)):
        value = repr(float(value))
    elif isinstance(value, list):
        value = [dict(item, expr=str(item["expr"])) for item in value]
    try:
        fn = parse(value, params, domain=domain)
    except (SalvageError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    missing = IntervalSet([domain]).difference(fn.domain).without_points()
    if missing:
        raise ConfigError(f"{key}: not defined on {missing}")
    return fn


def problem_from_dict(data: dict, name: Optional[str] = None) -> ProblemSpec:
    """Validate a problem description and build the functions it names."""
    validate(data)
    lo, hi = (_bound(v) for v in data["domain"])
    if not lo < hi:
        raise ConfigError(f"domain: lower bound {lo} must be below upper bound {hi}")
    declared = Interval(lo, hi)
    params = {k: float(v) for k, v in data.get("params", {}).items()}
    omega = _parse_field(data, "omega", params, declared)

    warnings = []
    g = _parse_field(data, "g", params, declared) if "g" in data else None
    if "g_prime" in data:
        g_prime = _parse_field(data, "g_prime", params, declared)
    else:
        g_prime = differentiate(g)

    domain, _ = truncate(IntervalSet([declared]), omega)
    truncated = not declared.is_finite
    if g is not None and "g_prime" in data:
        xs = domain.grid(257)
        gap = np.abs(differentiate(g)(xs) - g_prime(xs))
        scale = np.maximum(1.0, np.abs(g_prime(xs)))
        k = int(np.argmax(gap / scale))
        if gap[k] > CONSISTENCY_TOL * scale[k]:
            warnings.append(
                f"g and g_prime disagree: derivative of g is {differentiate(g)(xs[k]):.6g} "
                f"but g_prime is {g_prime(xs[k]):.6g} at x={xs[k]:.6g}"
            )

    link = link_text = None
    if "link" in data:
        link_text = str(data["link"])
        try:
            link = parse(link_text, params)
        except SalvageError as exc:
            raise ConfigError(f"link: {exc}") from exc

    tol_data = data.get("tolerances", {})
    try:
        tols = Tolerances(**{k: (tuple(v) if k == "n_schedule" else v) for k, v in tol_data.items()})
    except ValueError as exc:
        raise ConfigError(f"tolerances: {exc}") from exc

    return ProblemSpec(
        name=name or data.get("name", "problem"),
        domain=domain,
        declared_domain=declared,
        omega=omega,
        g_prime=g_prime,
        g=g,
        link=link,
        link_text=link_text,
        link_branch=data.get("link_branch"),
        params=params,
        tolerances=tols,
        binning=data.get("binning", "equal_measure"),
        epsilon=float(data.get("epsilon", 0.01)),
        truncated=truncated,
        warnings=warnings,
    )


def read_problem_data(path) -> dict:
    """Raw JSON of a problem file (not yet validated)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"problem file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    if isinstance(data, dict):
        data.setdefault("name", path.stem)
    return data


def load_problem(path) -> ProblemSpec:
    return problem_from_dict(read_problem_data(path))


# --------------------------------------------------------------------------
# gallery

_GALLERY = {
    "example1": {
        "description": "shift link: omega = x - 1 on [0, 3], g = 2x - 3, Q(x) = x + 2",
        "domain": [0, 3],
        "omega": "x - 1",
        "g": "2*x - 3",
        "g_prime": "2",
        "link": "x + 2",
    },
    "example2": {
        "description": "cubic link on [0, 2] with g' = Q on [0, 1] and g' = x on [1, 2]",
        "domain": [0, 2],
        "omega": "x - 1",
        "g_prime": [
            {"interval": [0, 1], "expr": "2 - x + 12*x^2 - 12*x^3"},
            {"interval": [1, 2], "expr": "x"},
        ],
        "link": "2 - x + 12*x^2 - 12*x^3",
    },
    "constant_effect": {
        "description": "constant marginal effect with unit total weight",
        "domain": [0, 2],
        "omega": "x - 0.5",
        "g_prime": "3",
    },
    "gaussian": {
        "description": "weight (1 + z x) phi(x) on the real line with g' = x^2",
        "domain": ["-inf", "inf"],
        "omega": "(1 + z*x)*phi(x)",
        "g_prime": "x^2",
        "params": {"z": 2.0},
    },
}

GALLERY_NAMES = tuple(_GALLERY)


def gallery_data(name: str, z: Optional[float] = None) -> dict:
    if name not in _GALLERY:
        raise ConfigError(f"unknown fixture {name!r}; choose from {', '.join(GALLERY_NAMES)}")
    data = copy.deepcopy(_GALLERY[name])
    if z is not None:
        if "z" not in data.get("params", {}):
            raise ConfigError(f"fixture {name!r} takes no z parameter")
        data["params"]["z"] = float(z)
    return data


def gallery(name: str, z: Optional[float] = None) -> ProblemSpec:
    """Load a built-in fixture (``gaussian`` takes ``z``, default 2)."""
    return problem_from_dict(gallery_data(name, z), name=name)
