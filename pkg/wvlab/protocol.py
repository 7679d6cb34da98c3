"""Remote pre- and postselection protocol: conditional and sampled runs"""
import concurrent.futures
import dataclasses
import logging
from typing import Dict, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from . import pointer, qmath, resources, weakvalues
from .errors import (
    ImpossiblePostselectionError,
    InsufficientStatisticsError,
    OrthogonalPostselectionError,
)
from .pointer import GaussianPointer, PointerMoments, SweepPoint
from .qmath import I2, DensityOp, Observable, PureState
from .resources import EntangledResource, ResourceKind

logger = logging.getLogger(__name__)

STAGES = (
    "preselect",
    "couple",
    "bell_measure",
    "classical_msg",
    "bob_project",
    "classical_msg",
    "readout",
)
DEFAULT_BATCH_SIZE = 2**14
# Sampling tables for the conditional pointer distributions
SAMPLING_POINTS = 2**14
SAMPLING_WIDTH = 10.0
MAX_SEED = 2**64

State = Union[PureState, DensityOp]


class TranscriptEvent(NamedTuple):
    stage: str
    actor: str
    detail: str


@dataclasses.dataclass(frozen=True, eq=False)
class Scenario:
    """One remote weak measurement setup.

    Attributes:
        resource: state shared by Alice and Bob.
        observable: qubit observable weakly measured on the system.
        pre: preselected system state.
        post: state Bob postselects on.
        g: coupling strength of the run.
        pointer: measuring pointer.
        accepted_bell_outcome: Bell outcome Alice conditions on, 1..4.
            Defaults to 4 (psi-) or 2 for the non-maximal resource.
        g_values: couplings used to extrapolate the pointer estimate.
        name: label carried into reports.
    """

    resource: EntangledResource
    observable: Observable
    pre: State
    post: State
    g: float = 0.0
    pointer: GaussianPointer = GaussianPointer()
    accepted_bell_outcome: Optional[int] = None
    g_values: Optional[Tuple[float, ...]] = None
    name: str = "scenario"

    def __post_init__(self):
        observable = qmath.as_observable(self.observable)
        object.__setattr__(self, "observable", observable)
        if observable.dim != 2:
            raise ValueError("Scenario observable must act on a qubit.")
        for label, state in (("pre", self.pre), ("post", self.post)):
            if not isinstance(state, (PureState, DensityOp)) or state.dims != (2,):
                raise ValueError(f"Scenario '{label}' must be a qubit state.")
        if self.accepted_bell_outcome is None:
            object.__setattr__(
                self, "accepted_bell_outcome", self.resource.default_accepted_outcome
            )
        if self.accepted_bell_outcome not in (1, 2, 3, 4):
            raise ValueError(
                f"Accepted Bell outcome must be 1..4, got {self.accepted_bell_outcome}."
            )
        object.__setattr__(self, "g", float(self.g))
        if self.g_values is not None:
            object.__setattr__(self, "g_values", tuple(float(g) for g in self.g_values))

    def sweep_g_values(self) -> Tuple[float, ...]:
        """Couplings for the extrapolated estimate, anchored at g when set"""
        if self.g_values is not None:
            return self.g_values
        if self.g > 0:
            return (self.g, self.g / 10, self.g / 100)
        return pointer.DEFAULT_G_VALUES

    @property
    def uses_default_outcome(self) -> bool:
        return self.accepted_bell_outcome == self.resource.default_accepted_outcome


@dataclasses.dataclass(frozen=True)
class ProtocolResult:
    """Outcome of a conditional or sampled protocol run.

    Attributes:
        analytic_wv: weak value from the closed-form law.
        pointer_estimate: weak value read from the pointer; None when g = 0
            in sampled runs or when a quadrature got no readings.
        bell_outcome_probs: probabilities (or frequencies) of Alice's outcomes.
        joint_success_prob: P(accepted outcome and Bob succeeds).
        shots_used: 0 for conditional runs.
        transcript: the protocol stages in order.
        pointer_moments: conditional pointer moments at the run's g (sample
            means in sampled runs).
        accepted_shots: shots that passed both selections.
        sweep: per-g readouts behind the conditional estimate.
    """

    analytic_wv: complex
    pointer_estimate: Optional[complex]
    bell_outcome_probs: Tuple[float, float, float, float]
    joint_success_prob: float
    shots_used: int
    transcript: Tuple[TranscriptEvent, ...]
    pointer_moments: PointerMoments
    accepted_shots: int = 0
    sweep: Tuple[SweepPoint, ...] = ()


def protocol_transcript(scenario: Scenario, mode: str) -> Tuple[TranscriptEvent, ...]:
    """Event sequence every run emits"""
    nonmax = scenario.resource.kind is ResourceKind.NONMAX
    details = (
        ("alice", f"resource={scenario.resource.kind.value}"),
        ("alice", f"g={scenario.g!r}"),
        ("alice", f"basis={'generalized' if nonmax else 'bell'}"),
        ("alice->bob", f"accepted_outcome={scenario.accepted_bell_outcome}"),
        ("bob", "sigma_z then final state" if nonmax else "final state"),
        ("bob->alice", "postselection result"),
        ("alice", f"mode={mode}"),
    )
    return tuple(
        TranscriptEvent(stage=stage, actor=actor, detail=detail)
        for stage, (actor, detail) in zip(STAGES, details)
    )


def bob_projector(scenario: Scenario) -> np.ndarray:
    """2x2 effect Bob asks to have applied to his qubit"""
    effect = resources.bob_postselection(scenario.post, scenario.resource)
    return qmath.as_density(effect).mat


class ConditionalModel:
    """Three-qubit model of a scenario with a coupled pointer.

    Subsystem 0 is the system, 1 Alice's half and 2 Bob's half of the
    resource. Mixed inputs are handled through their eigen ensembles.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        composite_in = resources.remote_preselection(scenario.pre, scenario.resource)
        composite_fin = resources.remote_postselection(
            scenario.post, scenario.resource, scenario.accepted_bell_outcome
        )
        self.measurement = pointer.EnsembleMeasurement(
            observable=scenario.observable,
            initial=qmath.eigen_ensemble(composite_in),
            final=qmath.eigen_ensemble(composite_fin),
            pointer=scenario.pointer,
            subsystem=0,
        )
        basis = resources.postselection_basis(scenario.resource)
        self.bell_projectors = [
            np.kron(state.projector(), I2) for state in basis.states
        ]

    def _projector_probability(self, branches, projector) -> float:
        states = np.array([branch.state for branch in branches])
        shifts = np.array([branch.shift for branch in branches])
        gram = states.conj() @ projector @ states.T
        overlaps = pointer.overlap_kernel(
            shifts[:, None], shifts[None, :], self.scenario.pointer.sigma
        )
        return float((gram * overlaps).sum().real)

    def bell_outcome_probs(self, g: float) -> Tuple[float, float, float, float]:
        """Alice's outcome probabilities after coupling, pointer traced out"""
        probs = np.zeros(4)
        for weight, state in self.measurement.initial:
            branches = pointer.couple(
                state, self.scenario.observable, g, self.scenario.pointer, 0
            )
            probs += weight * np.array(
                [
                    self._projector_probability(branches, projector)
                    for projector in self.bell_projectors
                ]
            )
        return tuple(float(prob) for prob in probs)

    def joint_success_prob(self, g: float) -> float:
        try:
            components = self.measurement.components(g)
        except ImpossiblePostselectionError:
            return 0.0
        return min(1.0, max(0.0, pointer.combine_raw(components).norm))

    def moments(self, g: float) -> PointerMoments:
        return pointer.combine_moments(self.measurement.components(g))


def analytic_weak_value(scenario: Scenario) -> complex:
    """Weak value from the closed-form law matching the scenario.

    Outcomes other than the resource's default fall back to the explicit
    three-qubit trace ratio.
    """
    observable = scenario.observable
    kind = scenario.resource.kind
    if not scenario.uses_default_outcome:
        return _outcome_weak_value(scenario, scenario.accepted_bell_outcome)
    if kind in (ResourceKind.SINGLET, ResourceKind.NONMAX):
        if isinstance(scenario.pre, PureState) and isinstance(scenario.post, PureState):
            result = weakvalues.weak_value_pure(observable, scenario.pre, scenario.post)
        else:
            result = weakvalues.weak_value_mixed(
                observable, scenario.pre, scenario.post
            )
        return result.value
    if kind is ResourceKind.WERNER:
        return weakvalues.weak_value_werner(
            observable, scenario.pre, scenario.post, scenario.resource.p
        ).value
    return weakvalues.weak_value_general(
        observable, scenario.pre, scenario.post, scenario.resource.xi
    ).value


def _outcome_weak_value(scenario: Scenario, outcome: int) -> complex:
    chi_in = resources.remote_preselection(scenario.pre, scenario.resource)
    chi_fin = resources.remote_postselection(scenario.post, scenario.resource, outcome)
    full = qmath.embed(scenario.observable, 0, (2, 2, 2))
    return weakvalues.weak_value_trace_composite(full, chi_in, chi_fin).value


def outcome_weak_values(scenario: Scenario) -> Dict[int, Optional[complex]]:
    """Weak value conditioned on each of Alice's four outcomes.

    Reported for inspection; only the accepted outcome is used by the
    protocol. None marks an outcome whose postselection is orthogonal.
    """
    values = {}
    for outcome in (1, 2, 3, 4):
        try:
            values[outcome] = _outcome_weak_value(scenario, outcome)
        except OrthogonalPostselectionError:
            values[outcome] = None
    return values


def success_probability(scenario: Scenario) -> float:
    """P(accepted Bell outcome and Bob succeeds) after coupling at scenario.g"""
    return ConditionalModel(scenario).joint_success_prob(scenario.g)


def run_conditional(scenario: Scenario, workers: int = None) -> ProtocolResult:
    """Exact conditional pointer analysis of a scenario.

    Raises:
        OrthogonalPostselectionError: the analytic weak value is undefined.
        ImpossiblePostselectionError: no branch survives both selections.
    """
    logger.info(f"RUNNING CONDITIONAL PROTOCOL FOR {scenario.name}")
    model = ConditionalModel(scenario)
    analytic = analytic_weak_value(scenario)
    g_values = scenario.sweep_g_values()
    pointer.check_g_values(g_values)
    points = pointer.sweep(model.measurement, g_values, workers=workers)
    estimate = pointer.extrapolate(points)
    logger.debug(f"analytic {analytic}, pointer estimate {estimate}")
    return ProtocolResult(
        analytic_wv=analytic,
        pointer_estimate=estimate,
        bell_outcome_probs=model.bell_outcome_probs(scenario.g),
        joint_success_prob=model.joint_success_prob(scenario.g),
        shots_used=0,
        transcript=protocol_transcript(scenario, "conditional"),
        pointer_moments=model.moments(scenario.g),
        sweep=tuple(points),
    )


def shot_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Four uniforms per shot, keyed by (seed, shot index).

    Shot i always draws the Philox block at counter i + 1, so any split of
    the shot range into batches reproduces the serial stream bit-exactly.
    """
    if not 0 <= seed < MAX_SEED:
        raise ValueError(f"Seed must be a 64-bit unsigned integer, got {seed}.")
    generator = np.random.Generator(np.random.Philox(key=seed, counter=start))
    return generator.random((count, 4))


class ShotBatch(NamedTuple):
    outcomes: np.ndarray
    success: np.ndarray
    quadrature: np.ndarray
    readouts: np.ndarray


class ShotSummary(NamedTuple):
    """Everything a sampled run reports; carried verbatim over the wire"""

    bell_counts: Tuple[int, int, int, int]
    accepted: int
    mean_q: Optional[float]
    mean_p: Optional[float]
    var_q: Optional[float]
    q_samples: int
    p_samples: int


def _inverse_cdf(grid: np.ndarray, density: np.ndarray) -> np.ndarray:
    cdf = integrate.cumulative_trapezoid(density, grid, initial=0)
    return np.maximum.accumulate(cdf / cdf[-1])


class ShotEngine:
    """Per-shot Born-rule sampler for a scenario.

    Each shot draws Alice's Bell outcome, then Bob's success given an
    accepted outcome, then a pointer reading from the exact conditional
    distribution: position on even shot indices, momentum on odd ones.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        model = ConditionalModel(scenario)
        self.bell_probs = model.bell_outcome_probs(scenario.g)
        self.cumulative = np.cumsum(self.bell_probs)[:3]
        accepted_prob = self.bell_probs[scenario.accepted_bell_outcome - 1]
        joint = model.joint_success_prob(scenario.g)
        self.success_given_accepted = (
            min(1.0, joint / accepted_prob) if accepted_prob > 0 else 0.0
        )
        self._tables = None
        if joint > 0:
            self._tables = self._sampling_tables(
                model.measurement.components(scenario.g)
            )

    def _sampling_tables(self, components):
        sigma = self.scenario.pointer.sigma
        low = min(state.shifts.min() for _, state in components)
        high = max(state.shifts.max() for _, state in components)
        low -= SAMPLING_WIDTH * sigma
        high += SAMPLING_WIDTH * sigma
        q_grid = np.linspace(low, high, SAMPLING_POINTS)
        p_limit = SAMPLING_WIDTH / (2 * sigma)
        p_grid = np.linspace(-p_limit, p_limit, SAMPLING_POINTS)
        q_density = sum(
            weight * state.q_density(q_grid) for weight, state in components
        )
        p_density = sum(
            weight * state.p_density(p_grid) for weight, state in components
        )
        return (
            (_inverse_cdf(q_grid, q_density), q_grid),
            (_inverse_cdf(p_grid, p_density), p_grid),
        )

    def simulate(self, seed: int, start: int, count: int) -> ShotBatch:
        """Samples shots start .. start + count - 1"""
        uniforms = shot_uniforms(seed, start, count)
        outcomes = 1 + np.searchsorted(self.cumulative, uniforms[:, 0], side="right")
        accepted = outcomes == self.scenario.accepted_bell_outcome
        success = accepted & (uniforms[:, 1] < self.success_given_accepted)
        quadrature = np.arange(start, start + count) % 2
        readouts = np.zeros(count)
        if self._tables is not None:
            (q_cdf, q_grid), (p_cdf, p_grid) = self._tables
            positions = np.interp(uniforms[:, 2], q_cdf, q_grid)
            momenta = np.interp(uniforms[:, 2], p_cdf, p_grid)
            chosen = np.where(quadrature == 0, positions, momenta)
            readouts = np.where(success, chosen, 0.0)
        return ShotBatch(
            outcomes=outcomes, success=success, quadrature=quadrature, readouts=readouts
        )


def summarize_shots(batch: ShotBatch) -> ShotSummary:
    """Reduces per-shot records in shot order.

    A quadrature that got no accepted reading reports None for its moments.

    Raises:
        InsufficientStatisticsError: no shot passed both selections.
    """
    counts = np.bincount(batch.outcomes, minlength=5)[1:5]
    accepted = int(batch.success.sum())
    if accepted == 0:
        raise InsufficientStatisticsError(
            "No shot passed both the Bell outcome and the postselection."
        )
    positions = batch.readouts[batch.success & (batch.quadrature == 0)]
    momenta = batch.readouts[batch.success & (batch.quadrature == 1)]
    if positions.size == 0 or momenta.size == 0:
        logger.warning(
            f"{accepted} accepted shot(s) left a quadrature without readings"
        )
    return ShotSummary(
        bell_counts=tuple(int(count) for count in counts),
        accepted=accepted,
        mean_q=float(np.mean(positions)) if positions.size else None,
        mean_p=float(np.mean(momenta)) if momenta.size else None,
        var_q=float(np.var(positions)) if positions.size else None,
        q_samples=int(positions.size),
        p_samples=int(momenta.size),
    )


def result_from_summary(
    scenario: Scenario, summary: ShotSummary, shots: int
) -> ProtocolResult:
    """ProtocolResult of a sampled run; shared by every party that reports one"""
    g = scenario.g
    sigma = scenario.pointer.sigma
    estimate = None
    if g != 0 and summary.mean_q is not None and summary.mean_p is not None:
        estimate = complex(summary.mean_q / g, 2 * sigma**2 * summary.mean_p / g)
    return ProtocolResult(
        analytic_wv=analytic_weak_value(scenario),
        pointer_estimate=estimate,
        bell_outcome_probs=tuple(count / shots for count in summary.bell_counts),
        joint_success_prob=summary.accepted / shots,
        shots_used=shots,
        transcript=protocol_transcript(scenario, "sample"),
        pointer_moments=PointerMoments(
            mean_q=summary.mean_q, mean_p=summary.mean_p, var_q=summary.var_q
        ),
        accepted_shots=summary.accepted,
    )


def concatenate_batches(batches: Sequence[ShotBatch]) -> ShotBatch:
    return ShotBatch(*(np.concatenate(parts) for parts in zip(*batches)))


def simulate_shots(
    engine: ShotEngine,
    shots: int,
    seed: int,
    batch_size: int = DEFAULT_BATCH_SIZE,
    workers: int = None,
) -> ShotBatch:
    """All shots of a run, batched and optionally spread over threads"""
    if shots < 1:
        raise ValueError(f"Need at least one shot, got {shots}.")
    if batch_size < 1:
        raise ValueError(f"Batch size must be positive, got {batch_size}.")
    starts = list(range(0, shots, batch_size))

    def run(start):
        return engine.simulate(seed, start, min(batch_size, shots - start))

    if workers is None or workers <= 1:
        batches = [run(start) for start in starts]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            batches = list(executor.map(run, starts))
    return concatenate_batches(batches)


def sample_shots(
    scenario: Scenario,
    shots: int,
    seed: int,
    batch_size: int = DEFAULT_BATCH_SIZE,
    workers: int = None,
) -> ProtocolResult:
    """Seeded Monte Carlo run of the protocol.

    Deterministic in (scenario, shots, seed) regardless of batch_size and
    workers.

    Raises:
        InsufficientStatisticsError: too few shots passed both selections.
    """
    logger.info(f"SAMPLING {shots} SHOTS FOR {scenario.name}")
    engine = ShotEngine(scenario)
    batch = simulate_shots(engine, shots, seed, batch_size=batch_size, workers=workers)
    summary = summarize_shots(batch)
    logger.info(f"{summary.accepted} OF {shots} SHOTS ACCEPTED")
    return result_from_summary(scenario, summary, shots)
