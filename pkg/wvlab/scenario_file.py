"""Scenario files: JSON description of a run, validated key by key"""
import dataclasses
import hashlib
import json
import logging
from typing import List, Optional, Tuple

import numpy as np

from . import pointer
from .errors import DegenerateResourceError, ScenarioParseError
from .pointer import GaussianPointer, GridSpec
from .protocol import Scenario
from .qmath import DensityOp, PureState
from .resources import EntangledResource, ResourceKind

logger = logging.getLogger(__name__)

ALLOWED_KEYS = {
    "name",
    "resource",
    "n",
    "p",
    "xi",
    "observable",
    "psi_i",
    "psi_f",
    "rho_i",
    "rho_f",
    "sigma",
    "g",
    "g_values",
    "grid",
    "shots",
    "seed",
    "accepted_bell_outcome",
    "p_values",
}
DEFAULT_SHOTS = 10_000
DEFAULT_SEED = 0


@dataclasses.dataclass(frozen=True, eq=False)
class ScenarioFile:
    """A parsed scenario file.

    Attributes:
        scenario: the protocol scenario.
        shots: shots for sampled runs.
        seed: sampling seed.
        grid: optional grid for cross-checking pointer moments.
        p_values: Werner weights to sweep, if any.
    """

    scenario: Scenario
    shots: int = DEFAULT_SHOTS
    seed: int = DEFAULT_SEED
    grid: Optional[GridSpec] = None
    p_values: Optional[Tuple[float, ...]] = None

    def scenarios(self) -> List[Scenario]:
        """The scenario, or one per Werner weight in p_values"""
        if self.p_values is None:
            return [self.scenario]
        return [
            dataclasses.replace(
                self.scenario,
                resource=EntangledResource.werner(p),
                name=f"{self.scenario.name} p={p!r}",
            )
            for p in self.p_values
        ]


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _complex(value) -> complex:
    """A number or an [re, im] pair"""
    if _is_number(value):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(map(_is_number, value)):
        return complex(value[0], value[1])
    raise ValueError("entries must be numbers or [re, im] pairs")


def _vector(value, size: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != size:
        raise ValueError(f"must be a list of {size} amplitudes")
    return np.array([_complex(entry) for entry in value])


def _matrix(value, size: int) -> np.ndarray:
    """Row-major square matrix of [re, im] pairs"""
    if not isinstance(value, list) or len(value) != size:
        raise ValueError(f"must be a {size}x{size} matrix given as {size} rows")
    rows = []
    for row in value:
        if not isinstance(row, list) or len(row) != size:
            raise ValueError(f"every row must hold {size} entries")
        rows.append([_complex(entry) for entry in row])
    return np.array(rows)


def _state(document: dict, pure_key: str, mixed_key: str, errors: list):
    if (pure_key in document) == (mixed_key in document):
        errors.append(f"{pure_key}: give exactly one of {pure_key} or {mixed_key}")
        return None
    try:
        if pure_key in document:
            return PureState(dims=(2,), amps=_vector(document[pure_key], 2))
        return DensityOp(dims=(2,), mat=_matrix(document[mixed_key], 2))
    except ValueError as err:
        errors.append(f"{pure_key if pure_key in document else mixed_key}: {err}")
        return None


def _number(document: dict, key: str, default, errors: list, check=None, message=""):
    value = document.get(key, default)
    if not _is_number(value) or (check is not None and not check(value)):
        errors.append(f"{key}: {message or 'must be a number'}")
        return None
    return value


def _integer(document: dict, key: str, default, errors: list, low, high):
    value = document.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int) or not low <= value < high:
        errors.append(f"{key}: must be an integer in [{low}, {high})")
        return None
    return value


def _resource(document: dict, errors: list) -> Optional[EntangledResource]:
    kind_name = document.get("resource", ResourceKind.SINGLET.value)
    try:
        kind = ResourceKind(kind_name)
    except (ValueError, TypeError):
        names = ", ".join(kind.value for kind in ResourceKind)
        errors.append(f"resource: must be one of {names}")
        return None
    try:
        if kind is ResourceKind.SINGLET:
            return EntangledResource.singlet()
        if kind is ResourceKind.NONMAX:
            if "n" not in document:
                errors.append("n: required for the nonmax resource")
                return None
            return EntangledResource.nonmax(_complex(document["n"]))
        if kind is ResourceKind.WERNER:
            p = document.get("p", 1.0 if "p_values" in document else None)
            if not _is_number(p):
                errors.append("p: required number for the werner resource")
                return None
            return EntangledResource.werner(p)
        if "xi" not in document:
            errors.append("xi: required for the custom resource")
            return None
        xi = DensityOp(dims=(2, 2), mat=_matrix(document["xi"], 4))
        return EntangledResource.custom(xi)
    except DegenerateResourceError as err:
        errors.append(f"n: {err}")
    except ValueError as err:
        key = {ResourceKind.NONMAX: "n", ResourceKind.WERNER: "p"}.get(kind, "xi")
        errors.append(f"{key}: {err}")
    return None


def _number_list(document: dict, key: str, errors: list) -> Optional[Tuple[float, ...]]:
    if key not in document:
        return None
    value = document[key]
    if not isinstance(value, list) or not value or not all(map(_is_number, value)):
        errors.append(f"{key}: must be a non-empty list of numbers")
        return None
    return tuple(float(entry) for entry in value)


def _grid(document: dict, errors: list) -> Optional[GridSpec]:
    if "grid" not in document:
        return None
    value = document["grid"]
    if not isinstance(value, dict) or set(value) != {"min", "max", "points"}:
        errors.append("grid: must be an object with min, max and points")
        return None
    points = value["points"]
    if (
        not _is_number(value["min"])
        or not _is_number(value["max"])
        or isinstance(points, bool)
        or not isinstance(points, int)
        or points < 2
        or points & (points - 1)
    ):
        errors.append("grid: min and max must be numbers, points a power of two")
        return None
    return GridSpec(q_min=float(value["min"]), q_max=float(value["max"]), points=points)


def parse_scenario(document) -> ScenarioFile:
    """Validates a decoded scenario document.

    Args:
        document: the JSON object of a scenario file.

    Returns:
        ScenarioFile

    Raises:
        ScenarioParseError: with one "key: reason" entry per problem.
    """
    if not isinstance(document, dict):
        raise ScenarioParseError(["<root>: scenario must be a JSON object"])
    errors = []
    for key in sorted(set(document) - ALLOWED_KEYS):
        errors.append(f"{key}: unknown key")

    resource = _resource(document, errors)
    observable = None
    if "observable" not in document:
        errors.append("observable: required")
    else:
        try:
            observable = _matrix(document["observable"], 2)
            if np.max(np.abs(observable - observable.conj().T)) > 1e-10:
                raise ValueError("must be Hermitian")
        except ValueError as err:
            errors.append(f"observable: {err}")
            observable = None
    pre = _state(document, "psi_i", "rho_i", errors)
    post = _state(document, "psi_f", "rho_f", errors)
    sigma = _number(document, "sigma", 1.0, errors, lambda s: s > 0, "must be positive")
    g = _number(document, "g", 0.0, errors)
    g_values = _number_list(document, "g_values", errors)
    if g_values is not None:
        try:
            pointer.check_g_values(g_values)
        except ValueError as err:
            errors.append(f"g_values: {err}")
    p_values = _number_list(document, "p_values", errors)
    if p_values is not None and not all(0 <= p <= 1 for p in p_values):
        errors.append("p_values: every weight must lie in [0, 1]")
    if p_values is not None and document.get("resource") != ResourceKind.WERNER.value:
        errors.append("p_values: only allowed with the werner resource")
    shots = _integer(document, "shots", DEFAULT_SHOTS, errors, 1, 2**63)
    seed = _integer(document, "seed", DEFAULT_SEED, errors, 0, 2**64)
    accepted = document.get("accepted_bell_outcome")
    if accepted is not None and (
        isinstance(accepted, bool) or accepted not in (1, 2, 3, 4)
    ):
        errors.append("accepted_bell_outcome: must be 1, 2, 3 or 4")
    name = document.get("name", "scenario")
    if not isinstance(name, str):
        errors.append("name: must be a string")
    grid = _grid(document, errors)
    if errors:
        raise ScenarioParseError(errors)

    scenario = Scenario(
        resource=resource,
        observable=observable,
        pre=pre,
        post=post,
        g=g,
        pointer=GaussianPointer(sigma),
        accepted_bell_outcome=accepted,
        g_values=g_values,
        name=name,
    )
    return ScenarioFile(
        scenario=scenario, shots=shots, seed=seed, grid=grid, p_values=p_values
    )


def load_scenario_file(path: str) -> ScenarioFile:
    """Reads and validates a scenario file.

    Raises:
        ScenarioParseError: unreadable JSON (with its line) or invalid keys.
    """
    logger.info(f"READING SCENARIO {path}")
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    try:
        document = json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioParseError([f"line {err.lineno}: {err.msg}"])
    return parse_scenario(document)


def _pair(value: complex) -> list:
    return [float(value.real), float(value.imag)]


def _matrix_pairs(matrix: np.ndarray) -> list:
    return [[_pair(entry) for entry in row] for row in matrix]


def _state_entry(state) -> dict:
    if isinstance(state, PureState):
        return {"amps": [_pair(amp) for amp in state.amps]}
    return {"rho": _matrix_pairs(state.mat)}


def scenario_to_dict(scenario: Scenario) -> dict:
    """Canonical JSON-ready description of a scenario"""
    resource = scenario.resource
    return {
        "name": scenario.name,
        "resource": resource.kind.value,
        "n": _pair(complex(resource.n)),
        "p": float(resource.p),
        "xi": None if resource.xi is None else _matrix_pairs(resource.xi.mat),
        "observable": _matrix_pairs(scenario.observable.mat),
        "pre": _state_entry(scenario.pre),
        "post": _state_entry(scenario.post),
        "sigma": scenario.pointer.sigma,
        "g": scenario.g,
        "g_values": None if scenario.g_values is None else list(scenario.g_values),
        "accepted_bell_outcome": scenario.accepted_bell_outcome,
    }


def scenario_digest(scenario: Scenario) -> str:
    """SHA-256 of the canonical scenario description"""
    canonical = json.dumps(
        scenario_to_dict(scenario), sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
