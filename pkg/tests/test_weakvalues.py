"""Tests weakvalues.py"""
import numpy as np
import pytest

from wvlab import qmath, resources, weakvalues
from wvlab.errors import OrthogonalPostselectionError
from wvlab.qmath import (
    I2,
    KET_0,
    KET_1,
    KET_PLUS,
    SIGMA_X,
    SIGMA_Z,
    DensityOp,
    PureState,
)
from wvlab.resources import EntangledResource

RNG_SEED = 3
ANGLE = 3 * np.pi / 8
TILTED = PureState(dims=(2,), amps=[np.cos(ANGLE), np.sin(ANGLE)])
MAXIMALLY_MIXED = DensityOp(dims=(2,), mat=np.eye(2) / 2)
SINGLET = EntangledResource.singlet()


@pytest.mark.parametrize(
    "final,expected", [(KET_0, 1.0), (TILTED, -0.41421)]
)
def test_weak_value_pure(final, expected):
    result = weakvalues.weak_value_pure(SIGMA_Z, KET_PLUS, final)
    assert result.value == pytest.approx(expected, abs=1e-4)


def test_weak_value_pure_orthogonal():
    with pytest.raises(OrthogonalPostselectionError, match="below"):
        weakvalues.weak_value_pure(SIGMA_X, KET_0, KET_1)


def test_weak_value_pure_overlap_override():
    """A stricter overlap threshold rejects a 1/sqrt(2) overlap"""
    with pytest.raises(OrthogonalPostselectionError):
        weakvalues.weak_value_pure(SIGMA_Z, KET_PLUS, KET_0, eps_overlap=0.9)


def test_weak_value_overlap_from_environment(monkeypatch):
    monkeypatch.setenv("WVLAB_TOL", '{"overlap": 0.9}')
    with pytest.raises(OrthogonalPostselectionError):
        weakvalues.weak_value_pure(SIGMA_Z, KET_PLUS, KET_0)


def test_weak_value_pure_dimension_mismatch():
    with pytest.raises(ValueError, match="does not match"):
        weakvalues.weak_value_pure(np.eye(4), KET_PLUS, KET_0)


def test_weak_value_composite_singlet():
    full = qmath.embed(SIGMA_Z, 0, (2, 2, 2))
    initial = qmath.tensor(KET_PLUS, resources.BELL_STATES[3])
    final = qmath.tensor(resources.BELL_STATES[3], KET_0)
    result = weakvalues.weak_value_composite(full, initial, final)
    assert result.value == pytest.approx(1)


def test_weak_value_composite_identity():
    rng = np.random.default_rng(RNG_SEED)
    initial = qmath.random_state(rng, (2, 2, 2))
    final = qmath.random_state(rng, (2, 2, 2))
    result = weakvalues.weak_value_composite(np.eye(8), initial, final)
    assert result.value == pytest.approx(1)


def test_weak_value_composite_nonmax():
    resource = EntangledResource.nonmax(0.5)
    full = qmath.embed(SIGMA_Z, 0, (2, 2, 2))
    initial = resources.remote_preselection(KET_PLUS, resource)
    final = resources.remote_postselection(KET_0, resource)
    result = weakvalues.weak_value_composite(full, initial, final)
    assert result.value == pytest.approx(1)


def test_weak_value_composite_needs_three_qubits():
    with pytest.raises(ValueError, match="three-qubit"):
        weakvalues.weak_value_composite(SIGMA_Z, KET_PLUS, KET_0)


@pytest.mark.parametrize(
    "resource,expected",
    [
        (SINGLET, -0.35355),
        (EntangledResource.nonmax(1.0), 0.35355),
        (EntangledResource.nonmax(0.5), 0.28284),
    ],
)
def test_transition_amplitude(resource, expected):
    result = weakvalues.transition_amplitude(SIGMA_Z, KET_PLUS, KET_0, resource)
    assert result.amplitude == pytest.approx(expected, abs=1e-5)


def test_transition_amplitude_needs_pure_resource():
    with pytest.raises(ValueError, match="pure resource"):
        weakvalues.transition_amplitude(
            SIGMA_Z, KET_PLUS, KET_0, EntangledResource.werner(0.5)
        )


def test_weak_value_mixed():
    pure = weakvalues.weak_value_mixed(SIGMA_Z, KET_PLUS, KET_0)
    assert pure.value == pytest.approx(1)
    mixed = weakvalues.weak_value_mixed(SIGMA_Z, MAXIMALLY_MIXED, MAXIMALLY_MIXED)
    assert mixed.value == pytest.approx(0)


def test_weak_value_mixed_matches_pure():
    rng = np.random.default_rng(RNG_SEED)
    observable = qmath.random_hermitian(rng)
    initial = qmath.random_state(rng)
    final = qmath.random_state(rng)
    mixed = weakvalues.weak_value_mixed(observable, initial.density(), final.density())
    pure = weakvalues.weak_value_pure(observable, initial, final)
    assert mixed.value == pytest.approx(pure.value)


def test_weak_value_trace_composite_quarter_factors():
    full = qmath.embed(SIGMA_Z, 0, (2, 2, 2))
    chi_in = resources.remote_preselection(KET_PLUS.density(), SINGLET)
    chi_fin = resources.remote_postselection(KET_0.density(), SINGLET)
    result = weakvalues.weak_value_trace_composite(full, chi_in, chi_fin)
    assert result.numerator == pytest.approx(0.125)
    assert result.denominator == pytest.approx(0.125)
    assert result.value == pytest.approx(1)


def test_correction_twirl_of_zero():
    twirled = weakvalues.correction_unitaries().twirl(KET_0.projector())
    assert np.allclose(twirled, 2 * I2)


def test_correction_twirl_random():
    rng = np.random.default_rng(RNG_SEED)
    corrections = weakvalues.correction_unitaries()
    for _ in range(100):
        rho = qmath.random_density(rng)
        assert np.allclose(corrections.twirl(rho.mat), 2 * I2, atol=1e-12)


def test_bell_contraction_singlet_outcome():
    """<psi-|_12 |1>_1 |psi->_23 = -1/2 |1>"""
    assert np.allclose(weakvalues.bell_contraction(KET_1, 4), [0, -0.5])


def test_derived_corrections_match_constants():
    for derived, frozen in zip(
        weakvalues.derive_correction_unitaries(), weakvalues.CORRECTION_UNITARIES
    ):
        assert np.allclose(derived, frozen, atol=1e-12)


def test_weak_value_general_singlet_is_ideal():
    rng = np.random.default_rng(RNG_SEED)
    xi = resources.BELL_STATES[3].density()
    for _ in range(20):
        observable = qmath.random_hermitian(rng)
        rho_i = qmath.random_density(rng)
        rho_f = qmath.random_density(rng)
        general = weakvalues.weak_value_general(observable, rho_i, rho_f, xi)
        ideal = weakvalues.weak_value_mixed(observable, rho_i, rho_f)
        assert general.value == pytest.approx(ideal.value, abs=1e-10)


@pytest.mark.parametrize("p,expected", [(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)])
def test_weak_value_general_werner(p, expected):
    xi = resources.resource_density(EntangledResource.werner(p))
    result = weakvalues.weak_value_general(SIGMA_Z, KET_PLUS, KET_0, xi)
    assert result.value == pytest.approx(expected, abs=1e-10)


def test_weak_value_general_matches_brute_force():
    rng = np.random.default_rng(RNG_SEED)
    for _ in range(20):
        observable = qmath.random_hermitian(rng)
        rho_i = qmath.random_density(rng)
        rho_f = qmath.random_density(rng)
        xi = DensityOp(dims=(2, 2), mat=qmath.random_density(rng, dim=4).mat)
        closed = weakvalues.weak_value_general(observable, rho_i, rho_f, xi)
        brute = weakvalues.weak_value_brute_force(observable, rho_i, rho_f, xi)
        assert closed.value == pytest.approx(brute.value, abs=1e-10)


@pytest.mark.parametrize("p", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_weak_value_werner(p):
    """Value p for |+>, |0> and sigma_z"""
    result = weakvalues.weak_value_werner(SIGMA_Z, KET_PLUS, KET_0, p)
    assert result.value == pytest.approx(p, abs=1e-10)


def test_weak_value_werner_full_weight_is_ideal():
    rng = np.random.default_rng(RNG_SEED)
    observable = qmath.random_hermitian(rng)
    rho_i = qmath.random_density(rng)
    rho_f = qmath.random_density(rng)
    werner = weakvalues.weak_value_werner(observable, rho_i, rho_f, 1.0)
    ideal = weakvalues.weak_value_mixed(observable, rho_i, rho_f)
    assert werner.value == pytest.approx(ideal.value, abs=1e-12)


def test_weak_value_werner_range():
    with pytest.raises(ValueError, match="must lie in"):
        weakvalues.weak_value_werner(SIGMA_Z, KET_PLUS, KET_0, -0.1)


def test_q_sum_identities():
    rng = np.random.default_rng(RNG_SEED)
    observable = qmath.random_hermitian(rng)
    rho_i = qmath.random_density(rng)
    rho_f = qmath.random_density(rng)
    expected = 2 * np.trace(observable @ rho_i.mat) - np.trace(
        rho_f.mat @ observable @ rho_i.mat
    )
    assert weakvalues.q_sum(observable, rho_i, rho_f) == pytest.approx(expected)
    identity = 2 - np.trace(rho_f.mat @ rho_i.mat)
    assert weakvalues.q_sum(I2, rho_i, rho_f) == pytest.approx(identity)


def test_bell_resource_weak_values_reports_all_outcomes():
    """Only the singlet projector is guaranteed to give the ideal value"""
    values = weakvalues.bell_resource_weak_values(SIGMA_Z, KET_PLUS, KET_0)
    assert sorted(values) == [1, 2, 3, 4]
    assert values[4] == pytest.approx(1)


@pytest.mark.parametrize(
    "state,other,expected",
    [(KET_0, KET_PLUS, 0.5), (KET_PLUS, KET_PLUS, 1.0), (KET_0, KET_1, 0.0)],
)
def test_transition_probability_weak(state, other, expected):
    assert weakvalues.transition_probability_weak(state, other) == pytest.approx(
        expected, abs=1e-12
    )
