"""Form sampling, the polar-unitary identification, projector pullback,
and the commutation structure of the recovered position measurement."""

import numpy as np
import pytest

from holesim import (
    BackgroundMap,
    DegenerateForm,
    DomainError,
    FormSample,
    Grid,
    InvalidMeasure,
    commutation_check,
    coordinate_projectors,
    inner_product,
    localized_basis,
    pull_back_position_measure,
    recover_background,
    riesz_isomorphism,
    sample_form,
    translate_basis,
)
from holesim.background_recover import localization_index
from oracles import haar_unitary

GRID = Grid(256, 40.0)


def make_sample(matrix):
    """Wrap a hand-built form matrix with a shared localized basis."""
    n = matrix.shape[0]
    basis = localized_basis(GRID, n)
    return FormSample(basis, basis, matrix, float(np.linalg.cond(matrix)))


def test_localized_basis_orthonormal():
    basis = localized_basis(GRID, 16)
    gram = np.array([[inner_product(a, b) for b in basis] for a in basis])
    assert np.max(np.abs(gram - np.eye(16))) < 1e-14


def test_sample_form_identity_physics():
    basis = localized_basis(GRID, 8)
    sample = sample_form(basis, basis, inner_product)
    assert np.max(np.abs(sample.matrix - np.eye(8))) < 1e-8
    assert sample.condition_number == pytest.approx(1.0, abs=1e-10)


def test_sample_form_translated_basis_is_cyclic_permutation():
    n, cells = 8, 96  # stride 32, index shift 3
    basis_g = localized_basis(GRID, n)
    basis_eta = translate_basis(basis_g, cells)
    sample = sample_form(basis_g, basis_eta, inner_product)
    shift = cells // (GRID.shape[0] // n)
    expected = np.zeros((n, n))
    for j in range(n):
        expected[(j + shift) % n, j] = 1.0
    assert np.max(np.abs(sample.matrix - expected)) < 1e-8


def test_sample_form_rank_deficient_rejected():
    basis = localized_basis(GRID, 4)
    with pytest.raises(DegenerateForm):
        sample_form(basis, basis, lambda e, f: 1.0)


def test_sample_form_requires_orthonormal_bases():
    basis = localized_basis(GRID, 4)
    skewed = (basis[0], basis[0], basis[2], basis[3])
    with pytest.raises(DomainError):
        sample_form(skewed, basis, inner_product)


def test_riesz_identity():
    background = riesz_isomorphism(make_sample(np.eye(8, dtype=complex)))
    assert np.max(np.abs(background.unitary - np.eye(8))) < 1e-12


def test_riesz_permutation():
    perm = np.roll(np.eye(8, dtype=complex), 3, axis=0)
    background = riesz_isomorphism(make_sample(perm))
    assert np.max(np.abs(background.unitary - perm)) < 1e-12


def test_riesz_scaled_unitary(rng):
    v = haar_unitary(8, rng)
    background = riesz_isomorphism(make_sample(1.7 * v))
    assert np.max(np.abs(background.unitary - v)) < 1e-10


def test_riesz_condition_guard():
    bad = np.diag(np.concatenate([np.ones(7), [1e-9]])).astype(complex)
    sample = make_sample(bad)
    with pytest.raises(DegenerateForm):
        riesz_isomorphism(sample)


def test_pull_back_identity_returns_inputs():
    background = riesz_isomorphism(make_sample(np.eye(4, dtype=complex)))
    projectors = coordinate_projectors(4)
    recovered = pull_back_position_measure(background, projectors)
    for p, q in zip(recovered, projectors):
        assert np.max(np.abs(p - q)) < 1e-12


def test_pull_back_permutation_relabels():
    perm = np.roll(np.eye(4, dtype=complex), 1, axis=0)
    background = riesz_isomorphism(make_sample(perm))
    recovered = pull_back_position_measure(background, coordinate_projectors(4))
    for j, p in enumerate(recovered):
        assert localization_index(p) == (j + 1) % 4


def test_planted_translation_recovery_exact():
    """n = 32 localized states, 24-cell translation: every recovered
    projector localizes at the translated grid cell (exact index match)."""
    n, cells = 32, 24
    stride = GRID.shape[0] // n
    basis_g = localized_basis(GRID, n)
    basis_eta = translate_basis(basis_g, cells)
    sample = sample_form(basis_g, basis_eta, inner_product)
    background = recover_background(sample)
    assert background.recovered_projectors is not None
    shift = cells // stride
    for j, p in enumerate(background.recovered_projectors):
        recovered_cell = localization_index(p) * stride
        planted_cell = (j * stride + cells) % GRID.shape[0]
        assert recovered_cell == planted_cell
        assert localization_index(p) == (j + shift) % n


def test_pvm_validation():
    background = riesz_isomorphism(make_sample(np.eye(4, dtype=complex)))
    good = coordinate_projectors(4)
    not_idempotent = (0.5 * good[0],) + good[1:]
    with pytest.raises(InvalidMeasure):
        pull_back_position_measure(background, not_idempotent)
    not_complete = good[:-1]
    with pytest.raises(InvalidMeasure):
        pull_back_position_measure(background, not_complete)
    overlapping = (good[0], good[0]) + good[2:]
    with pytest.raises(InvalidMeasure):
        pull_back_position_measure(background, overlapping)


def test_commutation_identity_zero():
    sample = make_sample(np.eye(8, dtype=complex))
    background = recover_background(sample)
    assert commutation_check(background, coordinate_projectors(8)) <= 1e-12


def test_commutation_permutation_small():
    perm = np.roll(np.eye(8, dtype=complex), 5, axis=0)
    background = recover_background(make_sample(perm))
    assert commutation_check(background, coordinate_projectors(8)) <= 1e-10


def test_commutation_generic_unitary_large(rng):
    """A non-position-diagonal identification leaves order-one commutators:
    the vanishing depends on the product form of the sampled overlap."""
    u = haar_unitary(32, rng)
    background = recover_background(make_sample(u))
    assert commutation_check(background, coordinate_projectors(32)) > 0.1


def test_vacuum_change_covariance(rng):
    """Re-expressing the reference space through a known unitary W turns U
    into U W but leaves the recovered projectors unchanged to 1e-8."""
    n, cells = 8, 64
    basis_g = localized_basis(GRID, n)
    basis_eta = translate_basis(basis_g, cells)
    sample = sample_form(basis_g, basis_eta, inner_product)

    w = haar_unitary(n, rng)
    rotated = []
    for j in range(n):
        amps = sum(w[m, j] * basis_eta[m].amplitudes for m in range(n))
        from holesim import WaveFunction

        rotated.append(WaveFunction(GRID, amps, f"eta'{j}"))
    sample2 = sample_form(basis_g, tuple(rotated), inner_product)

    assert np.max(np.abs(sample2.matrix - sample.matrix @ w)) < 1e-10
    u1 = riesz_isomorphism(sample).unitary
    u2 = riesz_isomorphism(sample2).unitary
    assert np.max(np.abs(u2 - u1 @ w)) < 1e-8

    projectors = coordinate_projectors(n)
    rotated_projectors = tuple(w.conj().T @ q @ w for q in projectors)
    first = pull_back_position_measure(riesz_isomorphism(sample), projectors)
    second = pull_back_position_measure(riesz_isomorphism(sample2), rotated_projectors)
    worst = max(np.max(np.abs(p1 - p2)) for p1, p2 in zip(first, second))
    assert worst <= 1e-8


def test_polar_stability(rng):
    """Spectral-norm 1e-6 perturbations move the polar factor by <= 1e-4
    while the form is well conditioned (sigma_max = 1, cond <= 100)."""
    cases = []
    cases.append(np.roll(np.eye(16, dtype=complex), 4, axis=0))  # cond 1
    u0, v0 = haar_unitary(16, rng), haar_unitary(16, rng)
    singulars = np.linspace(1.0, 0.02, 16)  # cond 50
    cases.append(u0 @ np.diag(singulars) @ v0.conj().T)
    for matrix in cases:
        base = riesz_isomorphism(make_sample(matrix)).unitary
        for _ in range(5):
            delta = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
            delta *= 1e-6 / np.linalg.norm(delta, 2)
            perturbed = riesz_isomorphism(make_sample(matrix + delta)).unitary
            assert np.linalg.norm(perturbed - base, 2) <= 1e-4


def test_background_map_requires_unitary():
    with pytest.raises(DomainError):
        BackgroundMap(np.diag([1.0, 0.5]).astype(complex), 1.0)
