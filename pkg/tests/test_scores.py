import math

import numpy as np
import pytest

from conftest import (
    central_gradient,
    central_hessian,
    interior_point,
    random_commuting_family,
    random_diagonal_model,
    random_stable_family,
)

import ctrlscore as cs
from ctrlscore import ObjectiveKind

TWO_PI_SQ = 2.0 * np.pi**2


def test_aecs_heat_reference_value():
    model = cs.heat_dirichlet_model([1, 2, 3, 4])
    point = [0.1, 0.2, 0.3, 0.4]
    got = cs.evaluate(ObjectiveKind.AECS, model, point)
    # independent summation of 2 pi^2 k^2 / p_k
    want = sum(TWO_PI_SQ * k**2 / p for k, p in zip([1, 2, 3, 4], point))
    assert got.value == pytest.approx(want, rel=1e-14)
    assert got.value == pytest.approx(1973.9208802178716, rel=1e-12)


def test_vcs_heat_reference_value():
    model = cs.heat_dirichlet_model([1, 2])
    got = cs.evaluate(ObjectiveKind.VCS, model, [0.5, 0.5])
    want = math.log(4.0) + math.log(16.0 * np.pi**4)
    assert got.value == pytest.approx(want, rel=1e-14)


def test_zero_coordinate_gives_infinity_sentinel():
    model = cs.heat_dirichlet_model([1, 2, 3])
    got = cs.evaluate(ObjectiveKind.AECS, model, [0.5, 0.5, 0.0])
    assert got.value == math.inf
    assert got.gradient is None
    assert not got.feasible


def test_near_degenerate_flagged():
    table = np.array([[1.0, 0.0], [0.0, 1.0]])
    model = cs.SpectralModel((1, 2), table, 1)
    got = cs.evaluate(ObjectiveKind.AECS, model, [0.5, 0.5])
    assert got.near_degenerate


def _fd_check(kind, model, count, points, grad_rtol=1e-5, hess_rtol=1e-4):
    for point in points:
        got = cs.evaluate(kind, model, point, count)

        def value_at(x, _kind=kind, _model=model, _count=count):
            return cs.evaluate(_kind, _model, x, _count).value

        def grad_at(x, _kind=kind, _model=model, _count=count):
            return cs.evaluate(_kind, _model, x, _count).gradient

        fd_grad = central_gradient(value_at, np.asarray(point, dtype=float))
        scale = np.linalg.norm(got.gradient)
        assert np.linalg.norm(got.gradient - fd_grad) <= grad_rtol * scale
        if got.hessian is not None:
            fd_hess = central_hessian(grad_at, np.asarray(point, dtype=float))
            hscale = np.linalg.norm(got.hessian)
            assert np.linalg.norm(got.hessian - fd_hess) <= hess_rtol * hscale


def test_gradients_and_hessians_match_finite_differences(rng):
    # 20 interior points across diagonal spectral models and commuting
    # matrix families, both objectives.
    diag_model = random_diagonal_model(rng, 4)
    family = random_commuting_family(rng, 3)
    diag_points = [interior_point(rng, 4) for _ in range(5)]
    fam_points = [interior_point(rng, 3) for _ in range(5)]
    for kind in (ObjectiveKind.VCS, ObjectiveKind.AECS):
        _fd_check(kind, diag_model, 4, diag_points)
        _fd_check(kind, family, 3, fam_points)


def test_matrix_gradient_with_partial_selection(rng):
    family = random_stable_family(rng, 4)
    point = interior_point(rng, 4)
    for kind in (ObjectiveKind.VCS, ObjectiveKind.AECS):
        got = cs.evaluate(kind, family, point, 2)
        if got.near_degenerate:
            pytest.skip("random system produced a degenerate gap")

        def value_at(x, _kind=kind):
            return cs.evaluate(_kind, family, x, 2).value

        fd = central_gradient(value_at, point)
        assert np.linalg.norm(got.gradient - fd) <= 1e-5 * np.linalg.norm(fd)


def test_convexity_witness(rng):
    model = random_diagonal_model(rng, 4)
    for kind in (ObjectiveKind.VCS, ObjectiveKind.AECS):
        for _ in range(10):
            point = interior_point(rng, 4)
            hess = cs.evaluate(kind, model, point).hessian
            assert np.linalg.eigvalsh(hess)[0] >= -1e-8


def test_strict_convexity_with_independent_rows(rng):
    table = rng.uniform(0.2, 2.0, (3, 3))
    while abs(np.linalg.det(table)) < 1e-3:
        table = rng.uniform(0.2, 2.0, (3, 3))
    model = cs.SpectralModel((1, 2, 3), table, 3)
    point = interior_point(rng, 3)
    for kind in (ObjectiveKind.VCS, ObjectiveKind.AECS):
        hess = cs.evaluate(kind, model, point).hessian
        assert np.linalg.eigvalsh(hess)[0] > 0.0


def test_full_spectrum_reduction_identities(rng):
    family = random_stable_family(rng, 3)
    for _ in range(5):
        point = interior_point(rng, 3)
        mixed = cs.assemble_gramian(family, point)
        vcs = cs.evaluate(ObjectiveKind.VCS, family, point, 3).value
        sign, logdet = np.linalg.slogdet(mixed)
        assert sign > 0
        assert vcs == pytest.approx(-logdet, rel=1e-8)
        aecs = cs.evaluate(ObjectiveKind.AECS, family, point, 3).value
        assert aecs == pytest.approx(np.trace(np.linalg.inv(mixed)), rel=1e-8)


def test_aecs_value_decreases_when_selected_eigenvalue_grows(rng):
    model = random_diagonal_model(rng, 3)
    point = interior_point(rng, 3)
    base = cs.evaluate(ObjectiveKind.AECS, model, point)
    bumped_table = model.eigen_table.copy()
    row = base.active_rows[0]
    col = int(np.argmax(bumped_table[row]))
    bumped_table[row, col] *= 1.05
    bumped = cs.SpectralModel(model.node_indices, bumped_table, 3)
    after = cs.evaluate(ObjectiveKind.AECS, bumped, point)
    if after.active_rows == base.active_rows:
        assert after.value <= base.value


def test_closed_form_examples():
    model = cs.heat_dirichlet_model([1, 2, 3, 4])
    aecs = cs.closed_form_optimum(ObjectiveKind.AECS, model)
    np.testing.assert_allclose(aecs.values, [0.1, 0.2, 0.3, 0.4], atol=1e-15)
    model6 = cs.heat_dirichlet_model([1, 2, 3, 6])
    aecs6 = cs.closed_form_optimum(ObjectiveKind.AECS, model6)
    np.testing.assert_allclose(aecs6.values, np.array([1, 2, 3, 6]) / 12.0,
                               atol=1e-15)
    for indices in ([1], [2, 5], [1, 2, 3, 4, 5]):
        vcs = cs.closed_form_optimum(ObjectiveKind.VCS,
                                     cs.heat_dirichlet_model(indices))
        np.testing.assert_allclose(vcs.values, 1.0 / len(indices), atol=1e-15)


def test_closed_form_validated_against_grid_oracle():
    model = cs.heat_dirichlet_model([1, 2])
    best, _ = cs.grid_oracle(ObjectiveKind.AECS, model, step=0.01)
    closed = cs.closed_form_optimum(ObjectiveKind.AECS, model)
    assert np.max(np.abs(best.values - closed.values)) <= 0.01 + 1e-12
    np.testing.assert_allclose(best.values, [0.33, 0.67], atol=1e-12)


def test_closed_form_errors():
    table = np.array([[1.0, 0.5], [0.0, 1.0]])
    model = cs.SpectralModel((1, 2), table, 2)
    with pytest.raises(cs.NotDiagonal):
        cs.closed_form_optimum(ObjectiveKind.AECS, model)
    heat = cs.heat_dirichlet_model([1, 2, 3, 4])
    with pytest.raises(cs.CapsBind):
        cs.closed_form_optimum(ObjectiveKind.AECS, heat, caps=[0.05, 1, 1, 1])


def test_finite_dim_scores_examples(rng):
    sym = cs.gramian_family(cs.check_stability(np.diag([-1.0, -1.0])), [1, 2])
    result = cs.finite_dim_scores(sym, ObjectiveKind.VCS)
    np.testing.assert_allclose(result.weights.values, [0.5, 0.5], atol=1e-8)

    family = cs.gramian_family(cs.check_stability(np.diag([-1.0, -2.0])), [1, 2])
    aecs = cs.finite_dim_scores(family, ObjectiveKind.AECS)
    root2 = math.sqrt(2.0)
    want = np.array([root2 / (root2 + 2.0), 2.0 / (root2 + 2.0)])
    np.testing.assert_allclose(aecs.weights.values, want, atol=1e-7)
    best, best_value = cs.grid_oracle(ObjectiveKind.AECS, family, step=0.01)
    assert aecs.objective <= best_value + 1e-9
    assert np.max(np.abs(aecs.weights.values - best.values)) <= 0.01

    vcs = cs.finite_dim_scores(family, ObjectiveKind.VCS)
    np.testing.assert_allclose(vcs.weights.values, [0.5, 0.5], atol=1e-7)
    assert not vcs.warnings or all("cross-check" not in w for w in vcs.warnings)
