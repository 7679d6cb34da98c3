"""Resource re-expansions and the bases they use"""
import numpy as np

from .. import qmath, resources
from ..resources import EntangledResource
from ..verify import IdentityCheck


def _random_n(rng: np.random.Generator) -> complex:
    return complex(rng.normal() + 1j * rng.normal())


class SingletDecompositionReconstruction(IdentityCheck):
    """|a>|psi-> rebuilt from the Bell basis and the unitaries U_i"""

    _checkname = "eq7-reconstruction"
    _suite = "decompositions"
    _tolerance = 1e-12
    _trials = 200

    def _errors(self, rng):
        singlet = EntangledResource.singlet()
        for _ in range(self.trials):
            state = qmath.random_state(rng)
            target = np.kron(state.amps, resources.make_resource(singlet).amps)
            rebuilt = resources.resource_decomposition(state, singlet).reconstruct()
            yield np.max(np.abs(rebuilt - target))


class NonmaxDecompositionReconstruction(IdentityCheck):
    """|a> N(|00> + n|11>) rebuilt from the generalized basis"""

    _checkname = "eq12-reconstruction"
    _suite = "decompositions"
    _tolerance = 1e-12
    _trials = 200

    def _errors(self, rng):
        for _ in range(self.trials):
            state = qmath.random_state(rng)
            resource = EntangledResource.nonmax(_random_n(rng))
            target = np.kron(state.amps, resources.make_resource(resource).amps)
            rebuilt = resources.resource_decomposition(state, resource).reconstruct()
            yield np.max(np.abs(rebuilt - target))


class GeneralizedBasisOrthonormality(IdentityCheck):
    _checkname = "generalized-basis-orthonormality"
    _suite = "decompositions"
    _tolerance = 1e-12
    _trials = 200

    def _errors(self, rng):
        for _ in range(self.trials):
            basis = resources.generalized_bell_basis(_random_n(rng))
            vectors = np.column_stack([state.amps for state in basis.states])
            yield np.max(np.abs(vectors.conj().T @ vectors - np.eye(4)))


class GeneralizedBasisUnitParameter(IdentityCheck):
    """At n = 1 each generalized state equals its Bell state up to phase"""

    _checkname = "generalized-basis-unit-parameter"
    _suite = "decompositions"
    _tolerance = 1e-12
    _trials = 1

    def _errors(self, rng):
        basis = resources.generalized_bell_basis(1.0)
        for general, bell in zip(basis.states, resources.bell_basis().states):
            yield 1 - abs(np.vdot(bell.amps, general.amps))


class WernerSpectrum(IdentityCheck):
    """Eigenvalues (1 + 3p)/4 once and (1 - p)/4 three times"""

    _checkname = "werner-spectrum"
    _suite = "decompositions"
    _tolerance = 1e-12
    _trials = 5

    def _errors(self, rng):
        for p in np.linspace(0, 1, self.trials):
            rho = resources.resource_density(EntangledResource.werner(p))
            expected = np.sort([(1 - p) / 4] * 3 + [(1 + 3 * p) / 4])
            yield np.max(np.abs(np.linalg.eigvalsh(rho.mat) - expected))
