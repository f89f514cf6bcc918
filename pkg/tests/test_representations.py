"""Exact structure solves: classification, principal and pinned representations."""
import numpy as np
import pytest

from kolmo import (
    Atom,
    DomainError,
    ExponentVector,
    MomentVector,
    NotInteriorError,
    PinnedNodeCoincidenceError,
    Representation,
    UnsupportedSystemError,
    canonical_representation,
    classify,
    interlace_hints,
    minimal_index,
    moments_of,
    newton_refine,
    principal_representation,
)
from kolmo.representations import ClassKind

K012 = ExponentVector((0, 1, 2), 2)
C235 = MomentVector((2.0, 3.0, 5.0), K012)


class TestClassify:
    def test_interior_example(self):
        result = classify(C235)
        assert result.kind is ClassKind.INTERIOR
        atoms = result.witness.atoms
        assert len(atoms) == 2
        assert atoms[0].node == 0.0
        assert atoms[0].weight == pytest.approx(0.2, rel=1e-8)
        assert atoms[1].node == pytest.approx(5.0 / 3.0, rel=1e-8)
        assert atoms[1].weight == pytest.approx(1.8, rel=1e-8)

    def test_exterior_example(self):
        assert classify(MomentVector((1.0, 2.0, 3.0), K012)).kind is ClassKind.EXTERIOR

    def test_boundary_single_atom(self):
        c = moments_of(Representation((Atom(1.5, 2.0),)), K012)
        result = classify(c)
        assert result.kind is ClassKind.BOUNDARY
        assert len(result.witness) == 1
        assert result.witness.atoms[0].node == pytest.approx(1.5, rel=1e-8)

    def test_zero_vector(self):
        assert classify(MomentVector((0.0, 0.0, 0.0), K012)).kind is ClassKind.ZERO

    def test_negative_component_is_exterior(self):
        assert classify(MomentVector((1.0, -1.0, 1.0), K012)).kind is ClassKind.EXTERIOR

    def test_requires_exponent_zero(self):
        c = MomentVector((1.0, 2.0), ExponentVector((1, 2), 2))
        with pytest.raises(UnsupportedSystemError):
            classify(c)


class TestMinimalIndex:
    def test_interior_has_index_d_halves(self):
        idx, rep = minimal_index(C235)
        assert idx.twice == 3
        assert len(rep) == 2

    def test_single_atom_has_index_one(self):
        c = moments_of(Representation((Atom(2.0, 1.0),)), K012)
        idx, rep = minimal_index(c)
        assert idx.twice == 2
        assert len(rep) == 1
        assert rep.atoms[0].node == pytest.approx(2.0, rel=1e-8)


class TestPrincipalRepresentation:
    def test_worked_example(self):
        rep = principal_representation(C235)
        assert len(rep) == 2
        assert rep.atoms[0].node == 0.0
        assert rep.atoms[0].weight == pytest.approx(0.2, rel=1e-10)
        assert rep.atoms[1].node == pytest.approx(5.0 / 3.0, rel=1e-10)
        assert rep.atoms[1].weight == pytest.approx(1.8, rel=1e-10)

    def test_recovers_random_measure(self):
        rng = np.random.default_rng(42)
        k = ExponentVector((0, 1, 3, 6), 8)
        target = Representation(
            (Atom(0.7, 1.3), Atom(2.9, 0.6))
        )
        c = moments_of(target, k)
        rep = principal_representation(c)
        for a, b in zip(rep.atoms, target.atoms):
            assert a.node == pytest.approx(b.node, rel=1e-8)
            assert a.weight == pytest.approx(b.weight, rel=1e-8)

    def test_node_scale_equivariance(self):
        k = ExponentVector((0, 1, 3, 6), 8)
        base = Representation((Atom(0.7, 1.3), Atom(2.9, 0.6)))
        s = 100.0
        scaled = Representation(
            tuple(Atom(a.node * s, a.weight) for a in base.atoms)
        )
        rep = principal_representation(moments_of(scaled, k))
        for a, b in zip(rep.atoms, base.atoms):
            assert a.node == pytest.approx(b.node * s, rel=1e-8)
            assert a.weight == pytest.approx(b.weight, rel=1e-8)

    def test_boundary_point_is_not_interior(self):
        c = moments_of(Representation((Atom(1.5, 2.0),)), K012)
        with pytest.raises(NotInteriorError):
            principal_representation(c)


class TestCanonicalRepresentation:
    def test_worked_example_pin_at_one(self):
        rep = canonical_representation(C235, 1.0)
        assert len(rep) == 2
        assert rep.atoms[0].node == 1.0  # pinned bit-exactly
        assert rep.atoms[0].weight == pytest.approx(1.0, abs=1e-8)
        assert rep.atoms[1].node == pytest.approx(2.0, abs=1e-8)
        assert rep.atoms[1].weight == pytest.approx(1.0, abs=1e-8)

    def test_moments_reproduced(self):
        rep = canonical_representation(C235, 1.0)
        back = moments_of(rep, K012)
        for got, want in zip(back.values, C235.values):
            assert got == pytest.approx(want, rel=1e-8)

    def test_pin_coinciding_with_principal_root_rejected(self):
        with pytest.raises(PinnedNodeCoincidenceError):
            canonical_representation(C235, 5.0 / 3.0)

    def test_nonpositive_pin_rejected(self):
        with pytest.raises(DomainError):
            canonical_representation(C235, 0.0)

    def test_requires_exponent_zero(self):
        c = MomentVector((1.0, 2.0), ExponentVector((1, 2), 2))
        with pytest.raises(UnsupportedSystemError):
            canonical_representation(c, 1.0)


class TestInterlaceHints:
    def test_one_hint_per_unoccupied_gap(self):
        principal = Representation((Atom(0.0, 0.2), Atom(5.0 / 3.0, 1.8)))
        hints = interlace_hints(principal, 1.0)
        # Pin occupies (0, 5/3); the remaining gap is (5/3, inf).
        assert len(hints) == 1
        assert hints[0] > 5.0 / 3.0

    def test_pin_below_smallest_root_without_zero_atom_rejected(self):
        principal = Representation((Atom(1.0, 1.0), Atom(2.0, 1.0)))
        with pytest.raises(DomainError):
            interlace_hints(principal, 0.5)

    def test_pin_between_roots_accepted(self):
        principal = Representation((Atom(1.0, 1.0), Atom(2.0, 1.0)))
        hints = interlace_hints(principal, 1.5)
        assert len(hints) == 1


class TestNewtonRefine:
    def test_refines_perturbed_guess(self):
        target = Representation((Atom(0.0, 0.2), Atom(5.0 / 3.0, 1.8)))
        guess = Representation((Atom(0.0, 0.21), Atom(1.7, 1.75)))
        refined = newton_refine(guess, [], C235)
        assert refined.atoms[0].weight == pytest.approx(0.2, rel=1e-9)
        assert refined.atoms[1].node == pytest.approx(5.0 / 3.0, rel=1e-9)

    def test_respects_pinned_nodes(self):
        k = ExponentVector((0, 1, 2), 2)
        c = MomentVector((2.0, 3.0, 5.0), k)
        guess = Representation((Atom(1.0, 1.05), Atom(2.1, 0.95)))
        refined = newton_refine(guess, [1.0], c)
        assert refined.atoms[0].node == 1.0
        assert refined.atoms[1].node == pytest.approx(2.0, rel=1e-9)

    def test_unknown_pin_rejected(self):
        guess = Representation((Atom(1.0, 1.0),))
        with pytest.raises(DomainError):
            newton_refine(guess, [3.0], C235)
