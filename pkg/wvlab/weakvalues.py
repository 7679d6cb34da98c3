"""Weak values for pure, mixed and remotely postselected systems"""
import dataclasses
import logging
from typing import Dict, NamedTuple, Optional, Tuple, Union

import numpy as np

from . import config, qmath, resources
from .errors import OrthogonalPostselectionError
from .qmath import I2, SIGMA_X, SIGMA_Z, DensityOp, PureState
from .resources import EntangledResource

logger = logging.getLogger(__name__)

State = Union[PureState, DensityOp]


class WeakValueResult(NamedTuple):
    value: complex
    numerator: complex
    denominator: complex


class TransitionAmplitude(NamedTuple):
    amplitude: complex
    overlap: complex


def _ratio(numerator: complex, denominator: complex, eps: Optional[float]):
    if eps is None:
        eps = config.get_tolerances().overlap
    if abs(denominator) <= eps:
        raise OrthogonalPostselectionError(
            f"Postselection overlap {abs(denominator):.3g} is below {eps:.3g}."
        )
    return WeakValueResult(
        value=complex(numerator / denominator),
        numerator=complex(numerator),
        denominator=complex(denominator),
    )


def _operator_for(observable, dim: int) -> np.ndarray:
    matrix = qmath.as_matrix(observable)
    if matrix.shape[0] != dim:
        raise ValueError(
            f"Observable of size {matrix.shape[0]} does not match states of "
            f"dimension {dim}."
        )
    return matrix


def _check_pair(initial: PureState, final: PureState):
    if initial.dims != final.dims:
        raise ValueError(
            f"Pre- and postselected dims differ: {initial.dims} vs {final.dims}."
        )


def weak_value_pure(
    observable, initial: PureState, final: PureState, eps_overlap: float = None
) -> WeakValueResult:
    """<psi_f|A|psi_i> / <psi_f|psi_i>

    Args:
        observable: Hermitian matrix or Observable.
        initial: preselected state.
        final: postselected state.
        eps_overlap: smallest admissible |<psi_f|psi_i>|.

    Returns:
        WeakValueResult

    Raises:
        OrthogonalPostselectionError: the overlap is below eps_overlap.
    """
    _check_pair(initial, final)
    matrix = _operator_for(observable, initial.dim)
    numerator = np.vdot(final.amps, matrix @ initial.amps)
    denominator = np.vdot(final.amps, initial.amps)
    return _ratio(numerator, denominator, eps_overlap)


def weak_value_composite(
    observable_full, initial: PureState, final: PureState, eps_overlap: float = None
) -> WeakValueResult:
    """Weak value of a three-qubit operator between three-qubit states"""
    if initial.dims != (2, 2, 2) or final.dims != (2, 2, 2):
        raise ValueError("Composite weak values need three-qubit states.")
    return weak_value_pure(observable_full, initial, final, eps_overlap)


def transition_amplitude(
    observable, initial: PureState, final: PureState, resource: EntangledResource
) -> TransitionAmplitude:
    """<Psi_fin| A x I x I |Psi_in> for remote pre- and postselection.

    The singlet gives -1/2 <psi_f|A|psi_i>; the non-maximal resource, with
    Alice accepting B~2 and Bob projecting onto sigma_z psi_f, gives
    n N^2 <psi_f|A|psi_i>.

    Returns:
        TransitionAmplitude with the matching overlap <Psi_fin|Psi_in>.
    """
    if not resource.is_pure:
        raise ValueError("Transition amplitudes need a pure resource.")
    composite_in = resources.remote_preselection(initial, resource)
    composite_fin = resources.remote_postselection(final, resource)
    full = qmath.embed(_operator_for(observable, 2), 0, (2, 2, 2))
    return TransitionAmplitude(
        amplitude=complex(np.vdot(composite_fin.amps, full @ composite_in.amps)),
        overlap=complex(np.vdot(composite_fin.amps, composite_in.amps)),
    )


def weak_value_mixed(
    observable, rho_i: State, rho_f: State, eps_overlap: float = None
) -> WeakValueResult:
    """Tr[rho_f A rho_i] / Tr[rho_f rho_i]"""
    rho_i = qmath.as_density(rho_i)
    rho_f = qmath.as_density(rho_f)
    if rho_i.dims != rho_f.dims:
        raise ValueError(f"Density dims differ: {rho_i.dims} vs {rho_f.dims}.")
    matrix = _operator_for(observable, rho_i.dim)
    numerator = np.trace(rho_f.mat @ matrix @ rho_i.mat)
    denominator = np.trace(rho_f.mat @ rho_i.mat)
    return _ratio(numerator, denominator, eps_overlap)


def weak_value_trace_composite(
    observable_full, chi_in: State, chi_fin: State, eps_overlap: float = None
) -> WeakValueResult:
    """Trace-ratio weak value on the three-qubit register"""
    chi_in = qmath.as_density(chi_in)
    if chi_in.dims != (2, 2, 2):
        raise ValueError("Composite weak values need three-qubit densities.")
    return weak_value_mixed(observable_full, chi_in, chi_fin, eps_overlap)


# Contracting |psi->_12 against |x>_1 |B_m>_23 leaves -1/2 V_m^dagger |x>_3.
# Every V_m is real with V_m^dagger = +-V_m, the minus sign only for V_1.
CORRECTION_UNITARIES = (-(SIGMA_Z @ SIGMA_X), SIGMA_X.copy(), -SIGMA_Z, I2.copy())
CORRECTION_PHASES = (-1, 1, 1, 1)


@dataclasses.dataclass(frozen=True, eq=False)
class CorrectionSet:
    """Unitaries V_1..V_4 for a Bell-diagonal expansion of the shared state"""

    unitaries: Tuple[np.ndarray, ...]

    def twirl(self, rho: np.ndarray) -> np.ndarray:
        """sum_m V_m rho V_m^dagger, equal to 2 Tr(rho) I"""
        return sum(v @ rho @ v.conj().T for v in self.unitaries)


def correction_unitaries() -> CorrectionSet:
    return CorrectionSet(unitaries=tuple(CORRECTION_UNITARIES))


def bell_contraction(state: PureState, outcome: int) -> np.ndarray:
    """<psi-|_12 (|x>_1 |B_m>_23), a vector on qubit 3"""
    joint = np.kron(state.amps, resources.bell_basis().state(outcome).amps)
    singlet = resources.BELL_STATES[3].amps
    return singlet.conj() @ joint.reshape(4, 2)


def derive_correction_unitaries() -> Tuple[np.ndarray, ...]:
    """Recomputes V_1..V_4 from the Bell contraction identity"""
    derived = []
    for outcome in (1, 2, 3, 4):
        adjoint = np.column_stack(
            [-2 * bell_contraction(ket, outcome) for ket in (qmath.KET_0, qmath.KET_1)]
        )
        derived.append(adjoint.conj().T)
    return tuple(derived)


def _bell_matrix_elements(xi: DensityOp) -> np.ndarray:
    """xi_nm = <B_n|xi|B_m>"""
    basis = np.column_stack([state.amps for state in resources.BELL_STATES])
    return basis.conj().T @ xi.mat @ basis


def weak_value_general(
    observable, rho_i: State, rho_f: State, xi: DensityOp, eps_overlap: float = None
) -> WeakValueResult:
    """Weak value through an arbitrary two-qubit shared state xi.

    sum_mn Tr[V_m rho_f V_n^dagger A rho_i] xi_nm divided by the same sum
    with A replaced by the identity.
    """
    rho_i = qmath.as_density(rho_i)
    rho_f = qmath.as_density(rho_f)
    matrix = _operator_for(observable, 2)
    elements = _bell_matrix_elements(qmath.as_density(xi))
    unitaries = correction_unitaries().unitaries
    numerator = 0j
    denominator = 0j
    for m, v_m in enumerate(unitaries):
        for n, v_n in enumerate(unitaries):
            sandwich = v_m @ rho_f.mat @ v_n.conj().T
            numerator += np.trace(sandwich @ matrix @ rho_i.mat) * elements[n, m]
            denominator += np.trace(sandwich @ rho_i.mat) * elements[n, m]
    return _ratio(numerator, denominator, eps_overlap)


def weak_value_brute_force(
    observable, rho_i: State, rho_f: State, xi: DensityOp, eps_overlap: float = None
) -> WeakValueResult:
    """Same quantity as weak_value_general from explicit 8x8 matrices.

    Preselection rho_i x xi, postselection |psi-><psi-| x rho_f.
    """
    chi_in = qmath.tensor(qmath.as_density(rho_i), qmath.as_density(xi))
    chi_fin = qmath.tensor(resources.BELL_STATES[3].density(), qmath.as_density(rho_f))
    full = qmath.embed(_operator_for(observable, 2), 0, (2, 2, 2))
    return weak_value_trace_composite(full, chi_in, chi_fin, eps_overlap)


def weak_value_werner(
    observable, rho_i: State, rho_f: State, p: float, eps_overlap: float = None
) -> WeakValueResult:
    """Weak value through a Werner state of singlet weight p.

    (p Tr[rho_f A rho_i] + (1-p)/2 Tr[A rho_i])
    / (p Tr[rho_f rho_i] + (1-p)/2)
    """
    if not 0 <= p <= 1:
        raise ValueError(f"Werner weight p must lie in [0, 1], got {p}.")
    rho_i = qmath.as_density(rho_i)
    rho_f = qmath.as_density(rho_f)
    matrix = _operator_for(observable, 2)
    numerator = p * np.trace(rho_f.mat @ matrix @ rho_i.mat) + (1 - p) / 2 * np.trace(
        matrix @ rho_i.mat
    )
    denominator = p * np.trace(rho_f.mat @ rho_i.mat) + (1 - p) / 2
    return _ratio(numerator, denominator, eps_overlap)


def q_sum(observable, rho_i: State, rho_f: State) -> complex:
    """sum over m = 1..3 of Tr[rho_f V_m^dagger A rho_i V_m].

    Equals 2 Tr[A rho_i] - Tr[rho_f A rho_i].
    """
    rho_i = qmath.as_density(rho_i)
    rho_f = qmath.as_density(rho_f)
    matrix = _operator_for(observable, 2)
    return complex(
        sum(
            np.trace(rho_f.mat @ v.conj().T @ matrix @ rho_i.mat @ v)
            for v in correction_unitaries().unitaries[:3]
        )
    )


def bell_resource_weak_values(
    observable, rho_i: State, rho_f: State
) -> Dict[int, Optional[complex]]:
    """Weak value when the shared state is each Bell projector in turn.

    Only outcome 4 (the singlet) reproduces the local weak value; the others
    amount to a rotated postselection and are reported as computed. Entries
    are None where the postselection is orthogonal.
    """
    values = {}
    for outcome, state in enumerate(resources.BELL_STATES, start=1):
        try:
            values[outcome] = weak_value_general(
                observable, rho_i, rho_f, state.density()
            ).value
        except OrthogonalPostselectionError:
            values[outcome] = None
    return values


def transition_probability_weak(state: PureState, other: PureState) -> float:
    """|<phi|psi>|^2 as the weak value of |phi><phi| pre- and postselected on psi"""
    result = weak_value_pure(other.projector(), state, state)
    return float(result.value.real)
