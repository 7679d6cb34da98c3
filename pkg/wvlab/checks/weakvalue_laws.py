"""Closed-form weak value laws against explicit three-qubit evaluations"""
import numpy as np

from .. import qmath, resources, weakvalues
from ..qmath import I2, KET_0, KET_PLUS, SIGMA_Z, DensityOp
from ..resources import EntangledResource
from ..verify import IdentityCheck

MIN_OVERLAP = 0.05
WERNER_WEIGHTS = (0.0, 0.25, 0.5, 0.75, 1.0)


def _pair(rng: np.random.Generator, min_overlap: float = MIN_OVERLAP):
    """Random pre- and postselected states with |<f|i>| >= min_overlap"""
    while True:
        initial = qmath.random_state(rng)
        final = qmath.random_state(rng)
        if abs(np.vdot(final.amps, initial.amps)) >= min_overlap:
            return initial, final


def _random_resource(rng: np.random.Generator, trial: int) -> EntangledResource:
    if trial % 2 == 0:
        return EntangledResource.singlet()
    return EntangledResource.nonmax(complex(rng.normal() + 1j * rng.normal()))


class AmplitudePrefactors(IdentityCheck):
    """Tripartite amplitude is -1/2 (singlet) or n N^2 (nonmax) times local"""

    _checkname = "amplitude-prefactors"
    _suite = "weakvalues"
    _tolerance = 1e-12

    def _errors(self, rng):
        for _ in range(self.trials):
            observable = qmath.random_hermitian(rng)
            initial = qmath.random_state(rng)
            final = qmath.random_state(rng)
            local = np.vdot(final.amps, observable @ initial.amps)
            singlet = weakvalues.transition_amplitude(
                observable, initial, final, EntangledResource.singlet()
            )
            yield abs(singlet.amplitude + 0.5 * local)
            n = complex(rng.normal() + 1j * rng.normal())
            nonmax = weakvalues.transition_amplitude(
                observable, initial, final, EntangledResource.nonmax(n)
            )
            yield abs(nonmax.amplitude - n * local / (1 + abs(n) ** 2))


class RemoteEqualsLocal(IdentityCheck):
    """Weak value through the resource equals the local weak value"""

    _checkname = "remote-equals-local"
    _suite = "weakvalues"
    _tolerance = 1e-10
    _trials = 200

    def _errors(self, rng):
        for trial in range(self.trials):
            observable = qmath.random_hermitian(rng)
            initial, final = _pair(rng)
            resource = _random_resource(rng, trial)
            composite = weakvalues.weak_value_composite(
                qmath.embed(observable, 0, (2, 2, 2)),
                resources.remote_preselection(initial, resource),
                resources.remote_postselection(final, resource),
            )
            local = weakvalues.weak_value_pure(observable, initial, final)
            yield abs(composite.value - local.value)


class MixedTraceLaw(IdentityCheck):
    """Trace ratio through the singlet, with the 1/4 factor on both traces"""

    _checkname = "mixed-trace-law"
    _suite = "weakvalues"

    def _errors(self, rng):
        singlet = EntangledResource.singlet()
        for _ in range(self.trials):
            observable = qmath.random_hermitian(rng)
            rho_i = qmath.random_density(rng)
            rho_f = qmath.random_density(rng)
            composite = weakvalues.weak_value_trace_composite(
                qmath.embed(observable, 0, (2, 2, 2)),
                resources.remote_preselection(rho_i, singlet),
                resources.remote_postselection(rho_f, singlet),
            )
            local = weakvalues.weak_value_mixed(observable, rho_i, rho_f)
            yield abs(composite.value - local.value)
            yield abs(composite.numerator - local.numerator / 4)
            yield abs(composite.denominator - local.denominator / 4)


class NoisyResourceBruteForce(IdentityCheck):
    """Bell-expanded law for a general shared state against 8x8 matrices"""

    _checkname = "noisy-resource-brute-force"
    _suite = "weakvalues"

    def _errors(self, rng):
        for _ in range(self.trials):
            observable = qmath.random_hermitian(rng)
            rho_i = qmath.random_density(rng)
            rho_f = qmath.random_density(rng)
            xi = DensityOp(dims=(2, 2), mat=qmath.random_density(rng, dim=4).mat)
            closed = weakvalues.weak_value_general(observable, rho_i, rho_f, xi)
            brute = weakvalues.weak_value_brute_force(observable, rho_i, rho_f, xi)
            yield abs(closed.value - brute.value)


class CorrectionTwirl(IdentityCheck):
    """sum_m V_m rho V_m^dagger = 2 Tr(rho) I, and V_m match their derivation"""

    _checkname = "correction-twirl"
    _suite = "weakvalues"
    _tolerance = 1e-12

    def _errors(self, rng):
        corrections = weakvalues.correction_unitaries()
        for derived, frozen in zip(
            weakvalues.derive_correction_unitaries(), corrections.unitaries
        ):
            yield np.max(np.abs(derived - frozen))
        for _ in range(self.trials):
            rho = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            yield np.max(np.abs(corrections.twirl(rho) - 2 * np.trace(rho) * I2))


class WernerClosedForm(IdentityCheck):
    """Werner law against the general law, and its p = 1 and |+>, |0> limits"""

    _checkname = "werner-closed-form"
    _suite = "weakvalues"
    _trials = 20

    def _errors(self, rng):
        for p in WERNER_WEIGHTS:
            xi = resources.resource_density(EntangledResource.werner(p))
            for _ in range(self.trials):
                observable = qmath.random_hermitian(rng)
                rho_i = qmath.random_density(rng)
                rho_f = qmath.random_density(rng)
                closed = weakvalues.weak_value_werner(observable, rho_i, rho_f, p)
                general = weakvalues.weak_value_general(observable, rho_i, rho_f, xi)
                yield abs(closed.value - general.value)
                if p == 1.0:
                    ideal = weakvalues.weak_value_mixed(observable, rho_i, rho_f)
                    yield abs(closed.value - ideal.value)
            plus_zero = weakvalues.weak_value_werner(SIGMA_Z, KET_PLUS, KET_0, p)
            yield abs(plus_zero.value - p)


class QIdentities(IdentityCheck):
    """Q(A) = 2 Tr[A rho_i] - Tr[rho_f A rho_i] and Q(I) = 2 - Tr[rho_f rho_i]"""

    _checkname = "q-identities"
    _suite = "weakvalues"

    def _errors(self, rng):
        for _ in range(self.trials):
            observable = qmath.random_hermitian(rng)
            rho_i = qmath.random_density(rng)
            rho_f = qmath.random_density(rng)
            expected = 2 * np.trace(observable @ rho_i.mat) - np.trace(
                rho_f.mat @ observable @ rho_i.mat
            )
            yield abs(weakvalues.q_sum(observable, rho_i, rho_f) - expected)
            identity = 2 - np.trace(rho_f.mat @ rho_i.mat)
            yield abs(weakvalues.q_sum(I2, rho_i, rho_f) - identity)


class SingletBellResource(IdentityCheck):
    """Shared singlet projector reproduces the local weak value"""

    _checkname = "singlet-bell-resource"
    _suite = "weakvalues"

    def _errors(self, rng):
        for _ in range(self.trials):
            observable = qmath.random_hermitian(rng)
            rho_i = qmath.random_density(rng)
            rho_f = qmath.random_density(rng)
            values = weakvalues.bell_resource_weak_values(observable, rho_i, rho_f)
            local = weakvalues.weak_value_mixed(observable, rho_i, rho_f)
            yield abs(values[4] - local.value)


class TransitionProbability(IdentityCheck):
    """|<phi|psi>|^2 as a weak value of |phi><phi|"""

    _checkname = "transition-probability"
    _suite = "weakvalues"
    _tolerance = 1e-12

    def _errors(self, rng):
        for _ in range(self.trials):
            state = qmath.random_state(rng)
            other = qmath.random_state(rng)
            expected = abs(np.vdot(other.amps, state.amps)) ** 2
            yield abs(weakvalues.transition_probability_weak(state, other) - expected)
