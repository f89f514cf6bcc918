"""Brute-force cone oracle: grid, NNLS feasibility, support extraction."""
import numpy as np
import pytest

from kolmo import (
    Atom,
    DomainError,
    ExponentVector,
    MomentVector,
    Representation,
    cone_membership,
    curve_point,
    make_grid,
    moments_of,
    nnls,
    t_max_heuristic,
)

K012 = ExponentVector((0, 1, 2), 2)


class TestMakeGrid:
    def test_small_geometric_grid(self):
        grid = make_grid(1.0, 3, include_zero=True)
        assert grid.nodes == pytest.approx((0.0, 1e-6, 1e-3, 1.0))

    def test_without_zero(self):
        grid = make_grid(1.0, 3, include_zero=False)
        assert grid.nodes == pytest.approx((1e-6, 1e-3, 1.0))

    def test_rejects_nonpositive_tmax(self):
        with pytest.raises(DomainError):
            make_grid(0.0, 10)

    def test_rejects_tiny_count(self):
        with pytest.raises(DomainError):
            make_grid(1.0, 1)


class TestTMaxHeuristic:
    def test_single_atom_bracketing(self):
        rep = Representation((Atom(3.0, 2.0),))
        c = moments_of(rep, K012)
        assert t_max_heuristic(c) == pytest.approx(30.0)

    def test_degenerate_input_falls_back(self):
        c = MomentVector((1.0, 0.0, 0.0), K012)
        assert t_max_heuristic(c) == pytest.approx(10.0)


class TestNnls:
    def test_negative_target_has_unit_relative_residual(self):
        cols = [curve_point(t, ExponentVector((0, 1), 2)) for t in (0.5, 1.0, 2.0)]
        target = MomentVector((-1.0, 0.0), ExponentVector((0, 1), 2))
        w, residual = nnls(cols, target)
        assert all(v >= 0 for v in w)
        assert residual == pytest.approx(1.0)

    def test_exact_combination_has_zero_residual(self):
        cols = [curve_point(t, K012) for t in (1.0, 2.0)]
        target = MomentVector((2.0, 3.0, 5.0), K012)
        w, residual = nnls(cols, target)
        assert residual < 1e-12
        assert w == pytest.approx([1.0, 1.0], abs=1e-10)

    def test_empty_columns_rejected(self):
        with pytest.raises(DomainError):
            nnls([], MomentVector((1.0,), ExponentVector((0,), 1)))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(DomainError):
            nnls(
                [curve_point(1.0, ExponentVector((0, 1), 2))],
                MomentVector((1.0,), ExponentVector((0,), 1)),
            )


class TestConeMembership:
    def test_feasible_point(self):
        report = cone_membership(MomentVector((2.0, 3.0, 5.0), K012))
        assert report.feasible
        assert report.residual <= 1e-7

    def test_infeasible_point(self):
        # c1^2 > c0 * c2 violates Cauchy-Schwarz for any measure.
        report = cone_membership(MomentVector((1.0, 2.0, 3.0), K012))
        assert not report.feasible
        assert report.residual > 1e-4

    def test_scaling_invariance_of_feasibility(self):
        base = (2.0, 3.0, 5.0)
        for s in (1e-4, 1.0, 1e4):
            scaled = MomentVector(tuple(v * s for v in base), K012)
            assert cone_membership(scaled).feasible

    def test_support_size_at_most_d_plus_1(self):
        rng = np.random.default_rng(7)
        k = ExponentVector((0, 1, 3, 5), 8)
        for _ in range(20):
            nodes = np.sort(rng.uniform(0.2, 5.0, 3))
            rep = Representation(
                tuple(Atom(float(t), float(rng.uniform(0.5, 2.0))) for t in nodes)
            )
            c = moments_of(rep, k)
            report = cone_membership(c)
            assert report.feasible
            assert len(report.support) <= k.d + 1

    def test_support_reproduces_moments(self):
        c = MomentVector((2.0, 3.0, 5.0), K012)
        report = cone_membership(c)
        back = moments_of(report.support, K012)
        for got, want in zip(back.values, c.values):
            assert got == pytest.approx(want, rel=1e-5, abs=1e-5)

    def test_rejects_nonpositive_tolerance(self):
        with pytest.raises(DomainError):
            cone_membership(MomentVector((2.0, 3.0, 5.0), K012), tol=0.0)
