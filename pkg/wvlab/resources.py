"""Shared entangled resources and the Bell-type bases they are measured in"""
import dataclasses
import enum
import logging
from typing import Optional, Tuple, Union

import numpy as np

from . import qmath
from .errors import DegenerateResourceError
from .qmath import I2, SIGMA_X, SIGMA_Z, DensityOp, PureState

logger = logging.getLogger(__name__)

_HALF_ROOT = 1 / np.sqrt(2)


class ResourceKind(enum.Enum):
    SINGLET = "singlet"
    NONMAX = "nonmax"
    WERNER = "werner"
    CUSTOM = "custom"


@dataclasses.dataclass(frozen=True, eq=False)
class EntangledResource:
    """Two-qubit state shared by Alice (qubit 1) and Bob (qubit 2).

    Attributes:
        kind: resource family.
        n: amplitude ratio of the non-maximally entangled state.
        p: singlet weight of the Werner state.
        xi: arbitrary two-qubit density for the custom kind.
    """

    kind: ResourceKind
    n: complex = 1.0
    p: float = 1.0
    xi: Optional[DensityOp] = None

    def __post_init__(self):
        if self.kind is ResourceKind.NONMAX and self.n == 0:
            raise DegenerateResourceError(
                "n = 0 gives a product state; the resource carries no entanglement."
            )
        if self.kind is ResourceKind.WERNER and not 0 <= self.p <= 1:
            raise ValueError(f"Werner weight p must lie in [0, 1], got {self.p}.")
        if self.kind is ResourceKind.CUSTOM:
            if self.xi is None or self.xi.dims != (2, 2):
                raise ValueError("Custom resource needs a two-qubit density xi.")

    @classmethod
    def singlet(cls):
        return cls(ResourceKind.SINGLET)

    @classmethod
    def nonmax(cls, n: complex):
        return cls(ResourceKind.NONMAX, n=complex(n))

    @classmethod
    def werner(cls, p: float):
        return cls(ResourceKind.WERNER, p=float(p))

    @classmethod
    def custom(cls, xi: DensityOp):
        return cls(ResourceKind.CUSTOM, xi=xi)

    @property
    def is_pure(self) -> bool:
        return self.kind in (ResourceKind.SINGLET, ResourceKind.NONMAX)

    @property
    def default_accepted_outcome(self) -> int:
        """Bell outcome the protocol conditions on"""
        return 2 if self.kind is ResourceKind.NONMAX else 4


def _bell_state(amps) -> PureState:
    return PureState(dims=(2, 2), amps=np.array(amps) * _HALF_ROOT)


BELL_LABELS = ("phi+", "phi-", "psi+", "psi-")
BELL_STATES = (
    _bell_state([1, 0, 0, 1]),
    _bell_state([1, 0, 0, -1]),
    _bell_state([0, 1, 1, 0]),
    _bell_state([0, 1, -1, 0]),
)
# |a>|psi-> = 1/2 sum_i |B_i> U_i|a>
BELL_UNITARIES = (-(SIGMA_Z @ SIGMA_X), SIGMA_X.copy(), -SIGMA_Z, -I2)


@dataclasses.dataclass(frozen=True, eq=False)
class BellBasis:
    """Bell basis with the unitaries relating it to a singlet re-expansion"""

    states: Tuple[PureState, ...]
    unitaries: Tuple[np.ndarray, ...]

    def state(self, outcome: int) -> PureState:
        return self.states[_outcome_index(outcome)]


@dataclasses.dataclass(frozen=True, eq=False)
class GeneralizedBellBasis:
    """Orthonormal two-qubit basis adapted to N(|00> + n|11>).

    Attributes:
        n: amplitude ratio.
        normalization: N = 1/sqrt(1 + |n|^2).
        states: the four basis states, equal to the Bell basis at n = 1.
    """

    n: complex
    normalization: float
    states: Tuple[PureState, ...]

    def state(self, outcome: int) -> PureState:
        return self.states[_outcome_index(outcome)]


def _outcome_index(outcome: int) -> int:
    if outcome not in (1, 2, 3, 4):
        raise ValueError(f"Bell outcome must be 1..4, got {outcome}.")
    return outcome - 1


def bell_basis() -> BellBasis:
    """The Bell basis phi+, phi-, psi+, psi- with its singlet unitaries"""
    return BellBasis(states=BELL_STATES, unitaries=tuple(BELL_UNITARIES))


def _nonmax_normalization(n: complex) -> float:
    return float(1 / np.sqrt(1 + abs(n) ** 2))


def generalized_bell_basis(n: complex) -> GeneralizedBellBasis:
    """Basis B~1..B~4 for the non-maximally entangled resource.

    Args:
        n: nonzero complex amplitude ratio.
    """
    n = complex(n)
    if n == 0:
        raise DegenerateResourceError("Generalized Bell basis needs n != 0.")
    norm = _nonmax_normalization(n)
    conj = n.conjugate()
    rows = (
        [1, 0, 0, n],
        [conj, 0, 0, -1],
        [0, 1, conj, 0],
        [0, n, -1, 0],
    )
    states = tuple(
        PureState(dims=(2, 2), amps=norm * np.array(row, dtype=complex))
        for row in rows
    )
    return GeneralizedBellBasis(n=n, normalization=norm, states=states)


def make_resource(resource: EntangledResource) -> Union[PureState, DensityOp]:
    """Two-qubit state of a resource.

    Returns:
        PureState for singlet and non-maximal resources, DensityOp otherwise.
    """
    if resource.kind is ResourceKind.SINGLET:
        return BELL_STATES[3]
    if resource.kind is ResourceKind.NONMAX:
        norm = _nonmax_normalization(resource.n)
        return PureState(dims=(2, 2), amps=norm * np.array([1, 0, 0, resource.n]))
    if resource.kind is ResourceKind.WERNER:
        singlet = BELL_STATES[3].projector()
        mixed = resource.p * singlet + (1 - resource.p) * np.eye(4) / 4
        return DensityOp(dims=(2, 2), mat=mixed)
    return resource.xi


def resource_density(resource: EntangledResource) -> DensityOp:
    return qmath.as_density(make_resource(resource))


@dataclasses.dataclass(frozen=True, eq=False)
class ResourceDecomposition:
    """|a> x resource written as weight * sum_i |basis_i>_12 |branch_i>_3"""

    weight: float
    basis_states: Tuple[PureState, ...]
    branch_states: Tuple[PureState, ...]

    def reconstruct(self) -> np.ndarray:
        return self.weight * sum(
            np.kron(basis.amps, branch.amps)
            for basis, branch in zip(self.basis_states, self.branch_states)
        )


def resource_decomposition(
    state: PureState, resource: EntangledResource
) -> ResourceDecomposition:
    """Re-expands a qubit state times a pure resource in the matching basis.

    For the singlet, the branches are the unitaries U_i applied to |a> with
    weight 1/2. For N(|00> + n|11>) they are the unnormalized states
    c|0> + d|n|^2|1>, n(c|0> - d|1>), n(d|0> + c|1>), -d|0> + c|n|^2|1>
    with weight N^2.

    Args:
        state: normalized qubit state a = c|0> + d|1>.
        resource: singlet or non-maximal resource.

    Returns:
        ResourceDecomposition
    """
    if state.dims != (2,):
        raise ValueError(f"Decomposition needs a single qubit, got dims {state.dims}.")
    if not state.normalized:
        raise ValueError("Decomposition needs a normalized qubit state.")
    if not resource.is_pure:
        raise ValueError(f"{resource.kind.value} resource is not a pure state.")
    if resource.kind is ResourceKind.SINGLET:
        basis = bell_basis()
        branches = tuple(
            PureState(dims=(2,), amps=unitary @ state.amps)
            for unitary in basis.unitaries
        )
        return ResourceDecomposition(
            weight=0.5, basis_states=basis.states, branch_states=branches
        )
    basis = generalized_bell_basis(resource.n)
    c, d = state.amps
    n = basis.n
    weight_sq = abs(n) ** 2
    rows = (
        [c, d * weight_sq],
        [n * c, -n * d],
        [n * d, n * c],
        [-d, c * weight_sq],
    )
    branches = tuple(
        PureState(dims=(2,), amps=row, normalized=False) for row in rows
    )
    return ResourceDecomposition(
        weight=basis.normalization**2,
        basis_states=basis.states,
        branch_states=branches,
    )


def postselection_basis(resource: EntangledResource):
    """Basis Alice measures in: generalized for non-maximal resources"""
    if resource.kind is ResourceKind.NONMAX:
        return generalized_bell_basis(resource.n)
    return bell_basis()


def bob_postselection(
    final: Union[PureState, DensityOp], resource: EntangledResource
) -> Union[PureState, DensityOp]:
    """Effect Bob projects onto.

    For the non-maximal resource Bob applies sigma_z before projecting onto
    the final state, so his effective projector is sigma_z |psi_f>.
    """
    if resource.kind is not ResourceKind.NONMAX:
        return final
    if isinstance(final, PureState):
        return PureState(dims=final.dims, amps=SIGMA_Z @ final.amps)
    return DensityOp(dims=final.dims, mat=SIGMA_Z @ final.mat @ SIGMA_Z)


def remote_preselection(
    initial: Union[PureState, DensityOp], resource: EntangledResource
) -> Union[PureState, DensityOp]:
    """Three-qubit initial state: system (0), Alice's half (1), Bob's half (2)"""
    shared = make_resource(resource)
    if isinstance(initial, PureState) and isinstance(shared, PureState):
        return qmath.tensor(initial, shared)
    return qmath.tensor(qmath.as_density(initial), qmath.as_density(shared))


def remote_postselection(
    final: Union[PureState, DensityOp],
    resource: EntangledResource,
    outcome: Optional[int] = None,
) -> Union[PureState, DensityOp]:
    """Three-qubit final state: Alice's Bell outcome on (0, 1), Bob's on 2.

    Args:
        final: state Bob postselects on.
        resource: shared resource.
        outcome: accepted Bell outcome, defaults to the resource's.
    """
    if outcome is None:
        outcome = resource.default_accepted_outcome
    alice = postselection_basis(resource).state(outcome)
    bob = bob_postselection(final, resource)
    if isinstance(bob, PureState):
        return qmath.tensor(alice, bob)
    return qmath.tensor(alice.density(), bob)
