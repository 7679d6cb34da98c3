"""Pointer moments and readouts against independent oracles"""
import numpy as np

from .. import pointer, qmath, weakvalues
from ..pointer import GaussianPointer, GridSpec, PostselectedMeasurement
from ..verify import IdentityCheck

GRID = GridSpec(q_min=-24.0, q_max=24.0, points=2**12)
READOUT_LAW_G_VALUES = (1e-1, 1e-2, 1e-3)
THREE_QUBITS = (2, 2, 2)


def _measurement(rng: np.random.Generator, min_overlap: float, sigma: float = 1.0):
    while True:
        initial = qmath.random_state(rng)
        final = qmath.random_state(rng)
        if abs(np.vdot(final.amps, initial.amps)) >= min_overlap:
            break
    observable = qmath.random_hermitian(rng)
    return PostselectedMeasurement(
        observable=observable,
        initial=initial,
        final=final,
        pointer=GaussianPointer(sigma),
    )


def _bounded_measurement(rng: np.random.Generator, bound: float = 5.0):
    """Random measurement with overlap >= 0.1 and |A_w| <= bound"""
    while True:
        measurement = _measurement(rng, 0.1)
        weak_value = weakvalues.weak_value_pure(
            measurement.observable, measurement.initial, measurement.final
        ).value
        if abs(weak_value) <= bound:
            return measurement, weak_value


class ClosedVsGridMoments(IdentityCheck):
    """Closed-form moments against the sampled wavefunction and its FFT"""

    _checkname = "closed-vs-grid-moments"
    _suite = "pointer"
    _tolerance = 1e-8
    _trials = 50

    def _errors(self, rng):
        for _ in range(self.trials):
            measurement = _measurement(rng, 0.2, sigma=rng.uniform(0.5, 1.5))
            g = rng.uniform(0.05, 1.0)
            ((_, pointer_state),) = measurement.components(g)
            closed = pointer.moments_closed(pointer_state)
            grid = pointer.moments_grid(pointer_state, GRID)
            yield max(abs(a - b) for a, b in zip(closed, grid))


class PointerReadoutExtrapolation(IdentityCheck):
    """Extrapolated pointer readout equals the weak value"""

    _checkname = "pointer-readout-extrapolation"
    _suite = "pointer"
    _tolerance = 1e-7
    _trials = 50

    def _errors(self, rng):
        for _ in range(self.trials):
            measurement = _measurement(rng, 0.3)
            estimate = pointer.estimate_weak_value(measurement)
            expected = weakvalues.weak_value_pure(
                measurement.observable, measurement.initial, measurement.final
            )
            yield abs(estimate - expected.value)


class MixedPointerReadout(IdentityCheck):
    """Ensemble readout equals the trace-ratio weak value"""

    _checkname = "mixed-pointer-readout"
    _suite = "pointer"
    _tolerance = 1e-7
    _trials = 20

    def _errors(self, rng):
        for _ in range(self.trials):
            observable = qmath.random_hermitian(rng)
            rho_i = qmath.random_density(rng)
            rho_f = qmath.random_density(rng)
            estimate = pointer.estimate_weak_value_mixed(observable, rho_i, rho_f)
            expected = weakvalues.weak_value_mixed(observable, rho_i, rho_f)
            yield abs(estimate - expected.value)


class FirstOrderReadoutLaw(IdentityCheck):
    """mean Q / g approaches Re(A_w) with a g^2 correction.

    The correction coefficient is fitted at the two larger couplings; the
    error is how far the smallest coupling lands outside twice that bound.
    """

    _checkname = "first-order-readout-law"
    _suite = "pointer"
    _tolerance = 1e-12
    _trials = 50

    def _errors(self, rng):
        for _ in range(self.trials):
            measurement, weak_value = _bounded_measurement(rng)
            points = pointer.sweep(measurement, READOUT_LAW_G_VALUES)
            residuals = [abs(point.re_est - weak_value.real) for point in points]
            coefficient = max(
                residual / point.g**2 for residual, point in zip(residuals, points[:2])
            )
            yield max(0.0, residuals[-1] - 2 * coefficient * points[-1].g ** 2)


class ZeroCouplingSuccessProbability(IdentityCheck):
    """Postselection probability at g = 0 is |<final|initial>|^2"""

    _checkname = "zero-coupling-success-probability"
    _suite = "pointer"
    _tolerance = 1e-12
    _trials = 100

    def _errors(self, rng):
        for _ in range(self.trials):
            initial = qmath.random_state(rng, THREE_QUBITS)
            final = qmath.random_state(rng, THREE_QUBITS)
            branches = pointer.couple(
                initial,
                qmath.random_hermitian(rng),
                0.0,
                GaussianPointer(),
                int(rng.integers(0, 3)),
            )
            pointer_state = pointer.postselect(branches, GaussianPointer(), final)
            expected = abs(np.vdot(final.amps, initial.amps)) ** 2
            yield abs(pointer_state.success_probability - expected)


class PostselectedNormBound(IdentityCheck):
    """A postselected pointer never carries more than unit probability"""

    _checkname = "postselected-norm-bound"
    _suite = "pointer"
    _tolerance = 1e-12
    _trials = 100

    def _errors(self, rng):
        for trial in range(self.trials):
            model = GaussianPointer(rng.uniform(0.2, 2.0))
            initial = qmath.random_state(rng, THREE_QUBITS)
            # Odd trials postselect on the preselected state itself
            final = initial if trial % 2 else qmath.random_state(rng, THREE_QUBITS)
            branches = pointer.couple(
                initial,
                qmath.random_hermitian(rng),
                rng.uniform(0.0, 2.0),
                model,
                int(rng.integers(0, 3)),
            )
            pointer_state = pointer.postselect(branches, model, final)
            yield max(0.0, pointer_state.success_probability - 1.0)
