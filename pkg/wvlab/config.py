"""Tolerances and configuration to obtain registry classes"""
import dataclasses
import importlib
import json
import logging
import os
from typing import Dict, Type

from .verify import IdentityCheck

logger = logging.getLogger(__name__)

TOLERANCE_ENV = "WVLAB_TOL"


@dataclasses.dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by every module.

    Attributes:
        algebraic: algebraic identities and Hermiticity of observables.
        normalization: state norms, density Hermiticity and unit trace.
        overlap: smallest admissible |<psi_f|psi_i>| or Tr[rho_f rho_i].
        cluster: eigenvalues closer than this share a spectral projector.
        eigenvalue_floor: most negative eigenvalue tolerated in a density.
        zero_amplitude: postselected branch amplitudes below this are dropped.
    """

    algebraic: float = 1e-10
    normalization: float = 1e-12
    overlap: float = 1e-9
    cluster: float = 1e-9
    eigenvalue_floor: float = 1e-10
    zero_amplitude: float = 1e-14


def get_tolerances() -> Tolerances:
    """Gets the active tolerances, applying WVLAB_TOL overrides.

    WVLAB_TOL is JSON: either an object of field overrides such as
    '{"overlap": 1e-8}' or a bare number that overrides `algebraic`.

    Returns:
        Tolerances
    """
    raw = os.getenv(TOLERANCE_ENV)
    if raw is None or raw.strip() == "":
        return Tolerances()
    try:
        overrides = json.loads(raw)
    except json.JSONDecodeError:
        raise ValueError(f"{TOLERANCE_ENV} must be JSON, got {raw!r}")
    if isinstance(overrides, (int, float)) and not isinstance(overrides, bool):
        overrides = {"algebraic": overrides}
    if not isinstance(overrides, dict):
        raise ValueError(f"{TOLERANCE_ENV} must be a JSON object or number.")
    known = {field.name for field in dataclasses.fields(Tolerances)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(
            f"Unknown tolerance(s) in {TOLERANCE_ENV}: {', '.join(sorted(unknown))}"
        )
    for name, value in overrides.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
            raise ValueError(f"Tolerance '{name}' must be a non-negative number.")
    logger.debug(f"Tolerance overrides from {TOLERANCE_ENV}: {overrides}")
    return dataclasses.replace(
        Tolerances(), **{name: float(value) for name, value in overrides.items()}
    )


def make_check_registry_dict(cls_list: list) -> dict:
    """Use an object's _checkname attribute to make a class lookup dictionary.

    Args:
        cls_list: A list of Python classes.

    Returns:
        A dictionary mapping the class._checkname to the class.

    """
    return {cls._checkname: cls for cls in cls_list}


def get_subclasses(cls: type):
    """Gets subclasses of modules and classes"""
    for subclass in cls.__subclasses__():
        yield from get_subclasses(subclass)
        yield subclass


def _in_packages(module_name: str, package_names: list) -> bool:
    return any(
        module_name == package or module_name.startswith(package + ".")
        for package in package_names
    )


def find_subclasses(package_names: list, base_class: type) -> list:
    """Finds subclasses of a specified base class
    from a list of package names.

    Args:
        package_names: A list of Python package names as strings.
        base_class: A base class to use to search for subclasses

    Returns:
        A list of subclasses that extend from the base class

    """
    matching_classes = []
    for package_name in package_names:
        package = importlib.import_module(package_name)
        # Import every submodule listed by the package so its classes register
        for submodule in getattr(package, "__all__", []):
            importlib.import_module(f"{package_name}.{submodule}")

    for cls in get_subclasses(base_class):
        logger.debug(f"checking {cls}.")
        if _in_packages(cls.__module__, package_names):
            matching_classes.append(cls)
    return matching_classes


def collect_checks(package_names: list) -> Dict[str, Type[IdentityCheck]]:
    """Finds subclasses of verify.IdentityCheck from a list of package names.

    Args:
        package_names: A list of Python package names as strings.

    Returns:
        A mapping of check name to check class for the named packages.

    """
    check_list = [
        cls
        for cls in find_subclasses(package_names, IdentityCheck)
        if cls._checkname is not None
    ]
    return make_check_registry_dict(check_list)
