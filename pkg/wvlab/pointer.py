"""Gaussian von Neumann pointer: coupling, postselection and readout"""
import concurrent.futures
import dataclasses
import logging
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from . import config, qmath
from .errors import GridError, ImpossiblePostselectionError
from .qmath import DensityOp, Observable, PureState

logger = logging.getLogger(__name__)

DEFAULT_G_VALUES = (1e-2, 1e-3, 1e-4)
# Grid must extend this many sigma beyond the outermost branch
GRID_MARGIN = 8.0


@dataclasses.dataclass(frozen=True)
class GaussianPointer:
    """Pointer prepared in a Gaussian of position variance sigma^2"""

    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"Pointer sigma must be positive, got {self.sigma}.")

    def wavefunction(self, q: np.ndarray) -> np.ndarray:
        """(2 pi sigma^2)^(-1/4) exp(-q^2 / (4 sigma^2))"""
        return (2 * np.pi * self.sigma**2) ** -0.25 * np.exp(
            -np.square(q) / (4 * self.sigma**2)
        )


class CoupledBranch(NamedTuple):
    eigenvalue: float
    shift: float
    state: np.ndarray


class RawMoments(NamedTuple):
    """Unnormalized pointer integrals of 1, Q, Q^2 and P"""

    norm: float
    q: float
    q2: float
    p: float


class PointerMoments(NamedTuple):
    mean_q: float
    mean_p: float
    var_q: float


class GridSpec(NamedTuple):
    q_min: float
    q_max: float
    points: int


class SweepPoint(NamedTuple):
    g: float
    mean_q: float
    mean_p: float
    re_est: float
    im_est: float
    success_prob: float


def overlap_kernel(a, b, sigma: float):
    """<G_a|G_b> for Gaussians centred at a and b"""
    return np.exp(-np.square(np.subtract(a, b)) / (8 * sigma**2))


@dataclasses.dataclass(frozen=True, eq=False)
class BranchedPointer:
    """Unnormalized pointer state sum_n c_n G(q - s_n).

    Attributes:
        sigma: pointer width.
        coefficients: postselected branch amplitudes c_n.
        shifts: branch displacements s_n = g a_n.
    """

    sigma: float
    coefficients: np.ndarray
    shifts: np.ndarray

    def __post_init__(self):
        coefficients = np.asarray(self.coefficients, dtype=complex).reshape(-1)
        shifts = np.asarray(self.shifts, dtype=float).reshape(-1)
        if coefficients.size != shifts.size or coefficients.size == 0:
            raise ValueError("Need one shift per coefficient and at least one branch.")
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "shifts", shifts)

    def overlap_matrix(self) -> np.ndarray:
        return overlap_kernel(self.shifts[:, None], self.shifts[None, :], self.sigma)

    def raw_moments(self) -> RawMoments:
        """Closed-form integrals from Gaussian product identities"""
        weights = (
            np.outer(self.coefficients.conj(), self.coefficients)
            * self.overlap_matrix()
        )
        left = self.shifts[:, None]
        right = self.shifts[None, :]
        middle = (left + right) / 2
        return RawMoments(
            norm=float(weights.sum().real),
            q=float((weights * middle).sum().real),
            q2=float((weights * (np.square(middle) + self.sigma**2)).sum().real),
            p=float((weights * 1j * (left - right)).sum().real / (4 * self.sigma**2)),
        )

    @property
    def success_probability(self) -> float:
        return self.raw_moments().norm

    def wavefunction(self, q: np.ndarray) -> np.ndarray:
        gaussian = GaussianPointer(self.sigma)
        q = np.asarray(q, dtype=float)
        return sum(
            coefficient * gaussian.wavefunction(q - shift)
            for coefficient, shift in zip(self.coefficients, self.shifts)
        )

    def q_density(self, q: np.ndarray) -> np.ndarray:
        """|psi(q)|^2, integrating to the success probability"""
        return np.abs(self.wavefunction(q)) ** 2

    def p_density(self, p: np.ndarray) -> np.ndarray:
        """|psi~(p)|^2, integrating to the success probability"""
        p = np.asarray(p, dtype=float)
        phases = np.exp(-1j * np.multiply.outer(p, self.shifts)) @ self.coefficients
        envelope = self.sigma * np.sqrt(2 / np.pi) * np.exp(
            -2 * self.sigma**2 * np.square(p)
        )
        return np.abs(phases) ** 2 * envelope


def couple(
    state: PureState,
    observable,
    g: float,
    pointer: GaussianPointer,
    subsystem: Optional[int] = 0,
) -> List[CoupledBranch]:
    """Applies exp(-i g A x P): one branch per distinct eigenvalue of A.

    Args:
        state: system state before coupling.
        observable: observable on `subsystem`, or on the whole register
            when subsystem is None.
        g: coupling strength.
        pointer: pointer the branches will displace.
        subsystem: 0-based subsystem the observable acts on.

    Returns:
        Branches P_n |psi> (unnormalized) with pointer shift g a_n.
    """
    observable = qmath.as_observable(observable)
    if subsystem is None:
        if observable.dim != state.dim:
            raise ValueError(
                f"Observable of size {observable.dim} does not act on a state of "
                f"dimension {state.dim}."
            )
        projectors = [component.projector for component in observable.spectrum]
    else:
        if not 0 <= subsystem < len(state.dims):
            raise ValueError(
                f"Subsystem index {subsystem} out of range for dims {state.dims}."
            )
        projectors = [
            qmath.embed(component.projector, subsystem, state.dims)
            for component in observable.spectrum
        ]
    logger.debug(f"Coupling at g={g} with pointer sigma={pointer.sigma}")
    return [
        CoupledBranch(
            eigenvalue=component.eigenvalue,
            shift=g * component.eigenvalue,
            state=projector @ state.amps,
        )
        for component, projector in zip(observable.spectrum, projectors)
    ]


def postselect(
    branches: Sequence[CoupledBranch], pointer: GaussianPointer, final: PureState
) -> BranchedPointer:
    """Projects the system onto `final`, leaving a branched pointer.

    Raises:
        ImpossiblePostselectionError: every branch amplitude vanishes.
    """
    zero = config.get_tolerances().zero_amplitude
    kept = []
    for branch in branches:
        if branch.state.size != final.dim:
            raise ValueError("Final state dimension does not match the branches.")
        coefficient = np.vdot(final.amps, branch.state)
        if abs(coefficient) > zero:
            kept.append((coefficient, branch.shift))
    if not kept:
        raise ImpossiblePostselectionError(
            "Final state is orthogonal to every coupled branch."
        )
    coefficients, shifts = zip(*kept)
    return BranchedPointer(
        sigma=pointer.sigma, coefficients=coefficients, shifts=shifts
    )


def _normalize(raw: RawMoments) -> PointerMoments:
    if raw.norm <= 0:
        raise ImpossiblePostselectionError("Pointer state has zero norm.")
    mean_q = raw.q / raw.norm
    return PointerMoments(
        mean_q=mean_q, mean_p=raw.p / raw.norm, var_q=raw.q2 / raw.norm - mean_q**2
    )


def moments_closed(pointer_state: BranchedPointer) -> PointerMoments:
    """Conditional mean Q, mean P and Var Q in closed form"""
    return _normalize(pointer_state.raw_moments())


def combine_raw(components: Sequence[Tuple[float, BranchedPointer]]) -> RawMoments:
    """Probability-weighted sum of raw moments over an ensemble"""
    totals = np.zeros(4)
    for weight, pointer_state in components:
        totals += weight * np.array(pointer_state.raw_moments())
    return RawMoments(*(float(total) for total in totals))


def combine_moments(
    components: Sequence[Tuple[float, BranchedPointer]]
) -> PointerMoments:
    """Conditional moments of an ensemble of branched pointers"""
    if not components:
        raise ImpossiblePostselectionError("No ensemble member survives postselection.")
    return _normalize(combine_raw(components))


def _check_grid(pointer_state: BranchedPointer, grid: GridSpec):
    points = grid.points
    if points < 2 or points & (points - 1):
        raise ValueError(f"Grid points must be a power of two, got {points}.")
    if not grid.q_min < grid.q_max:
        raise ValueError("Grid needs q_min < q_max.")
    margin = GRID_MARGIN * pointer_state.sigma
    if (
        grid.q_min > pointer_state.shifts.min() - margin
        or grid.q_max < pointer_state.shifts.max() + margin
    ):
        raise GridError(
            f"Grid [{grid.q_min}, {grid.q_max}] must extend {GRID_MARGIN:g} sigma "
            "beyond every branch."
        )


def moments_grid(pointer_state: BranchedPointer, grid: GridSpec) -> PointerMoments:
    """Moments from the sampled wavefunction; P by FFT spectral derivative.

    Raises:
        GridError: the wavefunction does not vanish at the grid edges.
    """
    _check_grid(pointer_state, grid)
    q, step = np.linspace(
        grid.q_min, grid.q_max, grid.points, endpoint=False, retstep=True
    )
    psi = pointer_state.wavefunction(q)
    density = np.abs(psi) ** 2
    norm = density.sum() * step
    if norm <= 0:
        raise ImpossiblePostselectionError("Pointer state has zero norm.")
    if (density[0] + density[-1]) * step > 1e-10 * norm:
        raise GridError("Pointer wavefunction has mass at the grid boundary.")
    mean_q = (q * density).sum() * step / norm
    var_q = (np.square(q - mean_q) * density).sum() * step / norm
    power = np.abs(np.fft.fft(psi)) ** 2
    momenta = 2 * np.pi * np.fft.fftfreq(grid.points, d=step)
    mean_p = (momenta * power).sum() / power.sum()
    return PointerMoments(
        mean_q=float(mean_q), mean_p=float(mean_p), var_q=float(var_q)
    )


def combine_moments_grid(
    components: Sequence[Tuple[float, BranchedPointer]], grid: GridSpec
) -> PointerMoments:
    """Grid counterpart of combine_moments, each member weighted by its norm"""
    if not components:
        raise ImpossiblePostselectionError("No ensemble member survives postselection.")
    totals = np.zeros(4)
    for weight, pointer_state in components:
        mass = weight * pointer_state.raw_moments().norm
        moments = moments_grid(pointer_state, grid)
        totals += mass * np.array(
            [1.0, moments.mean_q, moments.var_q + moments.mean_q**2, moments.mean_p]
        )
    return _normalize(RawMoments(*(float(total) for total in totals)))


@dataclasses.dataclass(frozen=True, eq=False)
class PostselectedMeasurement:
    """Weak measurement of a pure pre- and postselected system"""

    observable: Observable
    initial: PureState
    final: PureState
    pointer: GaussianPointer = GaussianPointer()
    subsystem: Optional[int] = 0

    def __post_init__(self):
        object.__setattr__(self, "observable", qmath.as_observable(self.observable))

    def components(self, g: float) -> List[Tuple[float, BranchedPointer]]:
        branches = couple(
            self.initial, self.observable, g, self.pointer, self.subsystem
        )
        return [(1.0, postselect(branches, self.pointer, self.final))]


@dataclasses.dataclass(frozen=True, eq=False)
class EnsembleMeasurement:
    """Weak measurement between weighted pure-state ensembles.

    Attributes:
        initial: (probability, state) preparation ensemble.
        final: (weight, state) decomposition of the postselection effect.
    """

    observable: Observable
    initial: Tuple[Tuple[float, PureState], ...]
    final: Tuple[Tuple[float, PureState], ...]
    pointer: GaussianPointer = GaussianPointer()
    subsystem: Optional[int] = 0

    def __post_init__(self):
        object.__setattr__(self, "observable", qmath.as_observable(self.observable))
        object.__setattr__(self, "initial", tuple(self.initial))
        object.__setattr__(self, "final", tuple(self.final))

    @classmethod
    def from_densities(
        cls,
        observable,
        rho_i: Union[PureState, DensityOp],
        rho_f: Union[PureState, DensityOp],
        pointer: GaussianPointer = GaussianPointer(),
        subsystem: Optional[int] = 0,
    ):
        return cls(
            observable=observable,
            initial=qmath.eigen_ensemble(rho_i),
            final=qmath.eigen_ensemble(rho_f),
            pointer=pointer,
            subsystem=subsystem,
        )

    def components(self, g: float) -> List[Tuple[float, BranchedPointer]]:
        components = []
        for weight_i, state in self.initial:
            branches = couple(state, self.observable, g, self.pointer, self.subsystem)
            for weight_f, final in self.final:
                try:
                    pointer_state = postselect(branches, self.pointer, final)
                except ImpossiblePostselectionError:
                    continue
                components.append((weight_i * weight_f, pointer_state))
        if not components:
            raise ImpossiblePostselectionError(
                "No ensemble member survives postselection."
            )
        return components


Measurement = Union[PostselectedMeasurement, EnsembleMeasurement]


def sweep_point(
    components_at: Callable[[float], Sequence[Tuple[float, BranchedPointer]]],
    g: float,
    sigma: float,
) -> SweepPoint:
    """Conditional moments and first-order readouts at one coupling"""
    raw = combine_raw(components_at(g))
    moments = _normalize(raw)
    return SweepPoint(
        g=g,
        mean_q=moments.mean_q,
        mean_p=moments.mean_p,
        re_est=moments.mean_q / g,
        im_est=2 * sigma**2 * moments.mean_p / g,
        success_prob=raw.norm,
    )


def sweep(
    measurement: Measurement, g_values: Sequence[float], workers: int = None
) -> List[SweepPoint]:
    """Evaluates the readout at every g, in the order given.

    Args:
        measurement: what is being weakly measured.
        g_values: positive couplings.
        workers: thread pool size; points are returned in input order.
    """
    g_values = [float(g) for g in g_values]
    if any(not g > 0 for g in g_values):
        raise ValueError("Sweep couplings must be positive.")
    sigma = measurement.pointer.sigma

    def evaluate(g):
        return sweep_point(measurement.components, g, sigma)

    if workers is None or workers <= 1:
        return [evaluate(g) for g in g_values]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(evaluate, g_values))


def check_g_values(g_values: Sequence[float]):
    """At least three strictly decreasing positive couplings over two decades"""
    if len(g_values) < 3:
        raise ValueError("Extrapolation needs at least three coupling values.")
    if any(not g > 0 for g in g_values):
        raise ValueError("Coupling values must be positive.")
    if any(later >= earlier for earlier, later in zip(g_values, g_values[1:])):
        raise ValueError("Coupling values must be strictly decreasing.")
    if g_values[0] / g_values[-1] < 100:
        raise ValueError("Coupling values must span at least two decades.")


def extrapolate(points: Sequence[SweepPoint]) -> complex:
    """Fits the readouts as quadratics in g^2 and evaluates them at g = 0"""
    g_values = np.array([point.g for point in points])
    scaled = np.square(g_values / g_values.max())
    degree = min(2, len(points) - 1)
    real = np.polynomial.polynomial.polyfit(
        scaled, [point.re_est for point in points], degree
    )[0]
    imag = np.polynomial.polynomial.polyfit(
        scaled, [point.im_est for point in points], degree
    )[0]
    return complex(real, imag)


def estimate_weak_value(
    measurement: Measurement,
    g_values: Sequence[float] = DEFAULT_G_VALUES,
    workers: int = None,
) -> complex:
    """Weak value read from the pointer and extrapolated to g -> 0.

    Real part from mean Q / g, imaginary part from 2 sigma^2 mean P / g.
    """
    g_values = tuple(float(g) for g in g_values)
    check_g_values(g_values)
    return extrapolate(sweep(measurement, g_values, workers=workers))


def estimate_weak_value_mixed(
    observable,
    rho_i: Union[PureState, DensityOp],
    rho_f: Union[PureState, DensityOp],
    g_values: Sequence[float] = DEFAULT_G_VALUES,
    pointer: GaussianPointer = GaussianPointer(),
    subsystem: Optional[int] = 0,
) -> complex:
    """Pointer estimate of Tr[rho_f A rho_i] / Tr[rho_f rho_i]"""
    measurement = EnsembleMeasurement.from_densities(
        observable, rho_i, rho_f, pointer=pointer, subsystem=subsystem
    )
    return estimate_weak_value(measurement, g_values)
