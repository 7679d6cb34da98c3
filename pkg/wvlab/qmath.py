"""Dense state vectors, density operators and observables for small registers"""
import dataclasses
import functools
import logging
from typing import Iterable, List, NamedTuple, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from . import config

logger = logging.getLogger(__name__)


def _frozen(values, ndim: int) -> np.ndarray:
    array = np.array(values, dtype=complex)
    if ndim == 1:
        array = array.reshape(-1)
    array.setflags(write=False)
    return array


I2 = _frozen([[1, 0], [0, 1]], 2)
SIGMA_X = _frozen([[0, 1], [1, 0]], 2)
SIGMA_Y = _frozen([[0, -1j], [1j, 0]], 2)
SIGMA_Z = _frozen([[1, 0], [0, -1]], 2)


def _check_dims(dims: Tuple[int, ...], size: int):
    if len(dims) == 0 or any(dim < 1 for dim in dims):
        raise ValueError(f"Invalid subsystem dimensions {dims}.")
    if int(np.prod(dims)) != size:
        raise ValueError(
            f"Dimensions {dims} do not match an array of size {size}."
        )


@dataclasses.dataclass(frozen=True, eq=False)
class PureState:
    """State vector over a register of subsystems.

    Attributes:
        dims: dimension of each subsystem, left to right.
        amps: flattened amplitudes in row-major (Kronecker) order.
        normalized: whether the state must have unit norm. Branch states
            produced by decompositions are left unnormalized.
    """

    dims: Tuple[int, ...]
    amps: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        amps = _frozen(self.amps, 1)
        dims = tuple(int(dim) for dim in self.dims)
        _check_dims(dims, amps.size)
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "dims", dims)
        if self.normalized:
            norm = np.linalg.norm(amps)
            if abs(norm - 1) > config.get_tolerances().normalization:
                raise ValueError(f"State is not normalized (norm {norm!r}).")

    @classmethod
    def from_amplitudes(cls, amps, dims=None, normalize: bool = True):
        """Builds a state, rescaling the amplitudes to unit norm.

        Args:
            amps: amplitudes.
            dims: subsystem dimensions. Defaults to a single subsystem.
            normalize: rescale to unit norm.

        Returns:
            PureState
        """
        amps = np.array(amps, dtype=complex).reshape(-1)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValueError("Cannot normalize the zero vector.")
            amps = amps / norm
        if dims is None:
            dims = (amps.size,)
        return cls(dims=tuple(dims), amps=amps, normalized=normalize)

    @property
    def dim(self) -> int:
        return self.amps.size

    def projector(self) -> np.ndarray:
        """|psi><psi|"""
        return np.outer(self.amps, self.amps.conj())

    def density(self) -> "DensityOp":
        return DensityOp(dims=self.dims, mat=self.projector())

    def allclose(self, other: "PureState", atol: float = 1e-12) -> bool:
        return self.dims == other.dims and np.allclose(
            self.amps, other.amps, rtol=0, atol=atol
        )


@dataclasses.dataclass(frozen=True, eq=False)
class DensityOp:
    """Hermitian, unit-trace, positive semidefinite operator.

    Attributes:
        dims: dimension of each subsystem.
        mat: the density matrix.
    """

    dims: Tuple[int, ...]
    mat: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.mat, 2)
        dims = tuple(int(dim) for dim in self.dims)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"Density matrix must be square, got {mat.shape}.")
        _check_dims(dims, mat.shape[0])
        tol = config.get_tolerances()
        if np.max(np.abs(mat - mat.conj().T)) > tol.normalization:
            raise ValueError("Density matrix is not Hermitian.")
        trace = np.trace(mat)
        if abs(trace - 1) > tol.normalization:
            raise ValueError(f"Density matrix trace is {trace.real!r}, not 1.")
        lowest = linalg.eigvalsh(mat)[0]
        if lowest < -tol.eigenvalue_floor:
            raise ValueError(f"Density matrix has negative eigenvalue {lowest!r}.")
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def allclose(self, other: "DensityOp", atol: float = 1e-12) -> bool:
        return self.dims == other.dims and np.allclose(
            self.mat, other.mat, rtol=0, atol=atol
        )


class SpectralComponent(NamedTuple):
    eigenvalue: float
    projector: np.ndarray


@dataclasses.dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator together with its spectral decomposition.

    Attributes:
        mat: the operator.
        spectrum: one component per distinct eigenvalue, ascending.
    """

    mat: np.ndarray
    spectrum: Tuple[SpectralComponent, ...]

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def reconstruct(self) -> np.ndarray:
        """Sum of eigenvalue times projector"""
        return sum(
            component.eigenvalue * component.projector for component in self.spectrum
        )


Operator = Union[np.ndarray, DensityOp, Observable]


def spectral(matrix) -> Observable:
    """Spectral decomposition of a Hermitian matrix.

    Eigenvalues closer than the cluster tolerance are merged into one
    projector, so degenerate observables get one branch per distinct value.

    Args:
        matrix: square Hermitian matrix.

    Returns:
        Observable

    Raises:
        ValueError: the matrix is not square or not Hermitian.
    """
    mat = np.array(matrix, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"Observable must be a square matrix, got {mat.shape}.")
    tol = config.get_tolerances()
    if np.max(np.abs(mat - mat.conj().T)) > tol.algebraic:
        raise ValueError("Observable is not Hermitian.")
    values, vectors = linalg.eigh((mat + mat.conj().T) / 2)
    components = []
    start = 0
    for end in range(1, len(values) + 1):
        if end == len(values) or values[end] - values[end - 1] > tol.cluster:
            block = vectors[:, start:end]
            components.append(
                SpectralComponent(
                    eigenvalue=float(np.mean(values[start:end])),
                    projector=block @ block.conj().T,
                )
            )
            start = end
    logger.debug(f"Spectrum with {len(components)} distinct eigenvalue(s)")
    return Observable(mat=_frozen(mat, 2), spectrum=tuple(components))


def as_observable(operator) -> Observable:
    if isinstance(operator, Observable):
        return operator
    return spectral(operator)


def as_matrix(operator: Operator) -> np.ndarray:
    """Underlying matrix of any operator-like argument"""
    if isinstance(operator, (DensityOp, Observable)):
        return operator.mat
    matrix = np.asarray(operator, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {matrix.shape}.")
    return matrix


def as_density(state: Union[PureState, DensityOp]) -> DensityOp:
    if isinstance(state, PureState):
        return state.density()
    if isinstance(state, DensityOp):
        return state
    raise TypeError(f"Expected PureState or DensityOp, got {type(state).__name__}.")


def _is_operator(value) -> bool:
    if isinstance(value, (DensityOp, Observable)):
        return True
    return isinstance(value, np.ndarray) and value.ndim == 2


def tensor(a, b):
    """Kronecker product of two states or two operators.

    Two PureStates give a PureState and two DensityOps give a DensityOp.
    Any other operator pairing gives a plain matrix.

    Raises:
        TypeError: a state was paired with an operator.
    """
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(
            dims=a.dims + b.dims,
            amps=np.kron(a.amps, b.amps),
            normalized=a.normalized and b.normalized,
        )
    if isinstance(a, DensityOp) and isinstance(b, DensityOp):
        return DensityOp(dims=a.dims + b.dims, mat=np.kron(a.mat, b.mat))
    if _is_operator(a) and _is_operator(b):
        return np.kron(as_matrix(a), as_matrix(b))
    raise TypeError(
        f"Cannot tensor {type(a).__name__} with {type(b).__name__}; "
        "pass two states or two operators."
    )


def partial_trace(rho: Union[DensityOp, PureState], keep: Iterable[int]) -> DensityOp:
    """Traces out every subsystem not listed in keep.

    Args:
        rho: density operator (a PureState is converted).
        keep: 0-based indices of the subsystems to keep.

    Returns:
        DensityOp over the kept subsystems in their original order.
    """
    rho = as_density(rho)
    keep = sorted(set(keep))
    count = len(rho.dims)
    if not keep:
        raise ValueError("keep must name at least one subsystem.")
    if keep[0] < 0 or keep[-1] >= count:
        raise ValueError(f"Subsystem index out of range for dims {rho.dims}.")
    tensor_form = rho.mat.reshape(rho.dims + rho.dims)
    remaining = count
    for index in reversed([i for i in range(count) if i not in keep]):
        tensor_form = np.trace(tensor_form, axis1=index, axis2=index + remaining)
        remaining -= 1
    kept_dims = tuple(rho.dims[i] for i in keep)
    size = int(np.prod(kept_dims))
    reduced = tensor_form.reshape(size, size)
    return DensityOp(dims=kept_dims, mat=(reduced + reduced.conj().T) / 2)


def embed(operator: Operator, index: int, dims: Sequence[int]) -> np.ndarray:
    """Lifts a single-subsystem operator to the full register.

    Args:
        operator: operator on subsystem `index`.
        index: 0-based subsystem.
        dims: register dimensions.

    Returns:
        I x ... x operator x ... x I
    """
    matrix = as_matrix(operator)
    dims = tuple(dims)
    if not 0 <= index < len(dims):
        raise ValueError(f"Subsystem index {index} out of range for dims {dims}.")
    if matrix.shape[0] != dims[index]:
        raise ValueError(
            f"Operator of size {matrix.shape[0]} does not act on subsystem "
            f"{index} of dimension {dims[index]}."
        )
    factors = [
        matrix if position == index else np.eye(dim, dtype=complex)
        for position, dim in enumerate(dims)
    ]
    return functools.reduce(np.kron, factors)


def eigen_ensemble(rho: Union[DensityOp, PureState]) -> List[Tuple[float, PureState]]:
    """Decomposes a density operator into weighted orthonormal pure states.

    Eigenvalues below the eigenvalue floor are dropped.
    """
    if isinstance(rho, PureState):
        return [(1.0, rho)]
    floor = config.get_tolerances().eigenvalue_floor
    weights, vectors = linalg.eigh(rho.mat)
    return [
        (float(weight), PureState(dims=rho.dims, amps=vectors[:, i]))
        for i, weight in enumerate(weights)
        if weight > floor
    ]


def ket(*amplitudes, normalize: bool = True) -> PureState:
    """Single-subsystem state from amplitudes"""
    return PureState.from_amplitudes(amplitudes, normalize=normalize)


def random_state(rng: np.random.Generator, dims: Sequence[int] = (2,)) -> PureState:
    """Haar-random pure state"""
    size = int(np.prod(dims))
    amps = rng.normal(size=size) + 1j * rng.normal(size=size)
    return PureState(dims=tuple(dims), amps=amps / np.linalg.norm(amps))


def random_density(
    rng: np.random.Generator, dim: int = 2, rank: int = None
) -> DensityOp:
    """Random density matrix of the given rank (full rank by default)"""
    rank = dim if rank is None else rank
    factor = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    mat = factor @ factor.conj().T
    mat = (mat + mat.conj().T) / 2
    return DensityOp(dims=(dim,), mat=mat / np.trace(mat).real)


def random_hermitian(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    values = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (values + values.conj().T) / 2


KET_0 = PureState(dims=(2,), amps=[1, 0])
KET_1 = PureState(dims=(2,), amps=[0, 1])
KET_PLUS = PureState(dims=(2,), amps=np.array([1, 1]) / np.sqrt(2))
KET_MINUS = PureState(dims=(2,), amps=np.array([1, -1]) / np.sqrt(2))
