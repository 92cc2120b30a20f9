import math

import numpy as np
import pytest

from frvkit.closed_models import (Circle, CueGue, CueSum, EllipseWithOptionalHole, cue_gue_border,
                                  cue_gue_cubic_residual, cue_gue_density, cue_gue_omega,
                                  cue_gue_outer_greens, cue_gue_solution, cue_sum_cdf,
                                  cue_sum_density, cue_sum_quantile, cue_sum_solution,
                                  model_border, model_density, model_solution, solve_model_grid,
                                  total_mass)
from frvkit.errors import PolePoint
from frvkit.green_blue import g_cue


def test_cue_sum_origin():
    point = cue_sum_solution(2, 1.0, 0j)
    assert point.inside
    assert point.greens == 0
    assert point.corr == pytest.approx(0.25)
    assert point.density == pytest.approx(0.0795775, abs=1e-7)


def test_cue_sum_inside_formulas():
    z = 0.6 - 0.8j
    point = cue_sum_solution(2, 1.0, z)
    assert point.greens == pytest.approx(z.conjugate() / 3.0)
    assert point.corr == pytest.approx(2.0 * 1.0 / 9.0)
    assert point.density == pytest.approx(4.0 / (9.0 * math.pi))


@pytest.mark.parametrize('m,expected', [(3, 0.21221), (5, 0.25465), (10, 0.28648)])
def test_diffusion_origin_density(m, expected):
    model = CueSum.diffusion(m)
    assert model.border_radius == pytest.approx(1.0)
    point = cue_sum_solution(model.m, model.scale, 0j)
    assert point.density == pytest.approx(expected, abs=1e-5)
    assert point.density == pytest.approx((1.0 - 1.0 / m) / math.pi)


def test_cue_sum_outside_and_pole():
    point = cue_sum_solution(2, 1.0, 1.5 + 0.1j)
    assert not point.inside
    assert point.source == 'holomorphic'
    assert point.greens == pytest.approx(1.0 / (1.5 + 0.1j))
    with pytest.raises(PolePoint):
        cue_sum_solution(2, 1.0, 2.0 + 0j)


def test_cue_sum_vectorized_density_matches_scalar():
    xs = np.array([0.0, 0.3, -1.0, 1.3, 1.9])
    ys = np.array([0.0, 0.4, 0.2, -0.2, 0.1])
    rho = cue_sum_density(2, 1.0, xs, ys)
    for x, y, value in zip(xs, ys, rho):
        assert value == pytest.approx(cue_sum_solution(2, 1.0, complex(x, y)).density)
    assert rho[-1] == 0.0


def test_cue_sum_cdf_and_quantile():
    assert cue_sum_cdf(2, 1.0, math.sqrt(2.0)) == pytest.approx(1.0)
    assert cue_sum_cdf(2, 1.0, 5.0) == pytest.approx(1.0)
    assert cue_sum_cdf(2, 1.0, 0.0) == 0.0
    fractions = np.linspace(0.0, 1.0, 11)
    radii = cue_sum_quantile(3, 0.5, fractions)
    assert np.allclose(cue_sum_cdf(3, 0.5, radii), fractions, atol=1e-12)


def test_model_validation():
    with pytest.raises(ValueError):
        CueSum(1)
    with pytest.raises(ValueError):
        CueSum(2, -1.0)
    with pytest.raises(ValueError):
        CueGue(-0.5)
    assert CueSum(2).label == 'cue+cue'
    assert CueSum(4).label == 'mcue:4'
    assert CueGue(0.75).label == 'cue+gue:0.75'


def test_cue_gue_border_shapes():
    small = cue_gue_border(0.5)
    assert small.hole_radius == pytest.approx(math.sqrt(0.75))
    assert small.a_coef == pytest.approx(1.25 / 2.25)
    assert small.b_coef == pytest.approx(1.25)
    assert cue_gue_border(1.0).hole_radius == 0.0
    assert cue_gue_border(2.0).hole_radius is None
    assert len(small.curves()) == 2
    assert len(cue_gue_border(2.0).curves()) == 1
    assert isinstance(model_border(CueSum(2)), Circle)
    assert isinstance(model_border(CueGue(0.5)), EllipseWithOptionalHole)


def test_cue_gue_worked_example():
    solution = cue_gue_omega(1.2, 0.0, 0.5)
    assert solution.branch == 'inside'
    assert solution.omega == pytest.approx(0.62524, abs=1e-4)
    assert solution.b_squared == pytest.approx(0.2082, abs=1e-3)
    assert abs(cue_gue_cubic_residual(solution.omega, 1.2, 0.0, 0.5)) < 1e-10


@pytest.mark.parametrize('p,y', [(0.5, 0.0), (0.5, 0.3), (2.0, 0.1)])
def test_border_value_solves_the_cubic(p, y):
    border = cue_gue_border(p)
    x = math.sqrt((1.0 - border.b_coef * y * y) / border.a_coef)
    omega = x / (1.0 + 2.0 * p * p)
    assert abs(cue_gue_cubic_residual(omega, x, y, p)) < 1e-10


def test_cue_gue_regions():
    hole = cue_gue_solution(0.1, 0.1, 0.5)
    assert hole.greens == 0 and hole.source == 'holomorphic' and not hole.inside

    outside = cue_gue_solution(3.0, 0.0, 0.5)
    g = outside.greens
    assert not outside.inside
    assert abs(0.25 * g * g - 3.0 * g + 1.0) < 1e-12
    assert abs(g - 1.0 / 3.0) < 0.05

    inside = cue_gue_solution(0.0, 0.88, 0.5)
    assert inside.inside
    assert inside.density > 0


def test_cue_gue_zero_weight_is_the_cue():
    assert cue_gue_solution(2.0, 0.0, 0.0).greens == pytest.approx(g_cue(2.0))
    assert np.all(cue_gue_density(0.0, [0.1, 2.0], [0.0, 0.0]) == 0.0)


def test_outer_greens_continues_to_infinity():
    z = 50.0 + 20.0j
    assert abs(z * cue_gue_outer_greens(z, 0.7) - 1.0) < 1e-3


def test_cue_gue_vectorized_density_matches_scalar():
    points = [(1.2, 0.0), (0.5, 0.8), (-0.9, -0.4), (1.0, 0.1)]
    for p in (0.5, 2.0):
        xs = np.array([pt[0] for pt in points])
        ys = np.array([pt[1] for pt in points])
        batch = cue_gue_density(p, xs, ys)
        for (x, y), value in zip(points, batch):
            assert value == pytest.approx(cue_gue_solution(x, y, p).density, abs=1e-10)


def test_cue_gue_analytic_density_matches_finite_differences():
    from frvkit.addition_engine import density_from_greens

    def greens(x, y):
        return cue_gue_solution(x, y, 2.0).greens

    analytic = cue_gue_solution(0.5, 0.3, 2.0).density
    assert density_from_greens(greens, 0.5, 0.3) == pytest.approx(analytic, abs=1e-6)


@pytest.mark.parametrize('x, y, p', [(0.5, 0.3, 2.0), (1.0, 0.3, 0.75), (-0.9, -0.4, 0.5)])
def test_cue_gue_density_matches_the_omega_derivative_formula(x, y, p):
    # rho = (1/2pi)(omega_x + x y omega_y / D^2 - omega / D), D = 2 p^2 omega - x
    h = 1e-5
    omega = cue_gue_omega(x, y, p).omega
    omega_x = (cue_gue_omega(x + h, y, p).omega - cue_gue_omega(x - h, y, p).omega) / (2.0 * h)
    omega_y = (cue_gue_omega(x, y + h, p).omega - cue_gue_omega(x, y - h, p).omega) / (2.0 * h)
    d = 2.0 * p * p * omega - x
    expected = (omega_x + x * y * omega_y / (d * d) - omega / d) / (2.0 * math.pi)
    assert cue_gue_solution(x, y, p).density == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize('y, p', [(0.88, 0.5), (0.73, 0.75), (0.2, 2.0), (-0.2, 2.0)])
def test_cue_gue_imaginary_axis(y, p):
    # the roots omega = +-sqrt((1 - 2p^2 - y^2) / 4p^4) are complex on the support
    assert 1.0 - 2.0 * p * p - y * y < 0
    on_axis = cue_gue_solution(0.0, y, p)
    assert on_axis.inside
    assert on_axis.greens.real == pytest.approx(0.0, abs=1e-9)
    nearby = cue_gue_solution(1e-5, y, p)
    assert on_axis.density == pytest.approx(nearby.density, abs=1e-4)
    assert on_axis.corr == pytest.approx(nearby.corr, abs=1e-4)


def test_vanishing_cubic_slope_falls_back_to_newton(monkeypatch):
    from frvkit import closed_models

    reference = cue_gue_solution(1.0, 0.3, 0.75).density
    calls = []
    newton_density_at = closed_models.newton_density_at

    def counting(bsum, z, seed=None):
        calls.append(z)
        return newton_density_at(bsum, z, seed=seed)

    monkeypatch.setattr(closed_models, 'newton_density_at', counting)
    monkeypatch.setattr(closed_models, '_generic_density', lambda x, y, p, omega, d: (0.0, float('nan')))
    point = cue_gue_solution(1.0, 0.3, 0.75)
    assert calls == [complex(1.0, 0.3)]
    assert point.inside
    assert point.density == pytest.approx(reference, abs=1e-5)


def test_cauchy_residual_is_small():
    point = cue_gue_solution(0.5, 0.3, 2.0, check_cauchy=True)
    assert point.cauchy_residual < 1e-6


@pytest.mark.parametrize('model', [CueSum(2), CueSum.diffusion(5), CueGue(2.0)])
def test_total_mass_is_one(model):
    assert total_mass(model) == pytest.approx(1.0, abs=1e-3)


def test_model_dispatch():
    z = 0.4 + 0.1j
    assert model_solution(CueSum(2), z).density == pytest.approx(cue_sum_solution(2, 1.0, z).density)
    assert model_density(CueGue(2.0), 0.5, 0.3) == pytest.approx(cue_gue_solution(0.5, 0.3, 2.0).density)


def test_solve_model_grid_pole_fallback():
    xs = np.linspace(-2.0, 2.0, 5)
    ys = np.linspace(-2.0, 2.0, 5)
    grid = solve_model_grid(CueSum(2), xs, ys, threads=2)
    assert grid.all_solved
    rows = grid.rows()
    assert len(rows) == 25
    edge = [r for r in rows if r['x'] == 2.0 and r['y'] == 0.0][0]
    assert edge['reG'] == pytest.approx(0.5)
    assert edge['inside'] is False
    centre = [r for r in rows if r['x'] == 0.0 and r['y'] == 0.0][0]
    assert centre['rho'] == pytest.approx(0.0795775, abs=1e-7)
