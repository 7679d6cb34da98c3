"""End-to-end protocol runs: conditional readout and sampled statistics"""
import numpy as np

from .. import protocol, qmath
from ..protocol import Scenario
from ..qmath import KET_0, KET_PLUS, SIGMA_X
from ..resources import EntangledResource
from ..verify import IdentityCheck

SAMPLED_SHOTS = 100_000


class ConditionalPointerEstimate(IdentityCheck):
    """Pointer read out after remote selection equals the analytic weak value"""

    _checkname = "conditional-pointer-estimate"
    _suite = "protocol"
    _tolerance = 1e-7
    _trials = 20

    def _errors(self, rng):
        for trial in range(self.trials):
            while True:
                initial = qmath.random_state(rng)
                final = qmath.random_state(rng)
                if abs(np.vdot(final.amps, initial.amps)) >= 0.3:
                    break
            if trial % 2 == 0:
                resource = EntangledResource.singlet()
            else:
                resource = EntangledResource.nonmax(
                    complex(rng.normal() + 1j * rng.normal())
                )
            scenario = Scenario(
                resource=resource,
                observable=qmath.random_hermitian(rng),
                pre=initial,
                post=final,
            )
            result = protocol.run_conditional(scenario)
            yield abs(result.pointer_estimate - result.analytic_wv)


class BellOutcomeFrequencies(IdentityCheck):
    """Sampled frequencies at g = 0 agree with the Born probabilities.

    Covers each Bell outcome and the fraction of shots accepted by both
    parties. The error is the largest |f - p| in units of its binomial
    standard deviation.
    """

    _checkname = "bell-outcome-frequencies"
    _suite = "protocol"
    _tolerance = 5.0
    _trials = 1

    def _errors(self, rng):
        scenario = Scenario(
            resource=EntangledResource.singlet(),
            observable=SIGMA_X,
            pre=KET_0,
            post=KET_PLUS,
            name="bell-outcome-frequencies",
        )
        model = protocol.ConditionalModel(scenario)
        expected = np.array(
            model.bell_outcome_probs(scenario.g)
            + (model.joint_success_prob(scenario.g),)
        )
        for _ in range(self.trials):
            seed = int(rng.integers(0, 2**32))
            result = protocol.sample_shots(scenario, SAMPLED_SHOTS, seed)
            observed = np.array(
                result.bell_outcome_probs + (result.joint_success_prob,)
            )
            spread = np.sqrt(expected * (1 - expected) / SAMPLED_SHOTS)
            yield float(np.max(np.abs(observed - expected) / spread))
