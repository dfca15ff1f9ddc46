from fractions import Fraction

import pytest

from squidcoupler.algebra import Scalar, apply_to_fock, apply_word, commutator
from squidcoupler.errors import UnknownIdentityError
from squidcoupler.identities import (
    FULL_SUITE,
    REGISTRY,
    S,
    atom_hamiltonian,
    verify_all,
    verify_identity,
    wick_single_contraction_bb,
)


@pytest.mark.parametrize("name", FULL_SUITE)
def test_registered_identity_holds(name):
    report = verify_identity(name)
    assert report.passed, report.difference
    assert set(report.difference.replace(",", " ").split()) <= {"0", "PP=0", "MM=0", "MP=0", "PM=0"}


def test_negative_control_fails_with_difference():
    report = verify_identity("negative-control")
    assert not report.passed
    assert report.difference == "-L*g2"
    assert "difference: -L*g2" in report.row()


def test_unknown_identity():
    with pytest.raises(UnknownIdentityError):
        verify_identity("no-such-identity")


def test_suite_excludes_negative_control():
    assert "negative-control" in REGISTRY
    assert "negative-control" not in FULL_SUITE
    assert all(r.passed for r in verify_all())


def test_generator_matches_raw_operator_words():
    """S built from normal-ordered algebra equals its quadrature form applied word by word."""
    P = [[("b", True)], [("b", False)]]
    M = [([("b", True)], 1), ([("b", False)], -1)]
    for n in range(5):
        state = {(0, n): Fraction(1)}
        target = {}
        # -(2/3) M³ + P² M - 2P expanded over words
        def add(word, weight):
            for k, v in apply_word(word, state).items():
                target[k] = target.get(k, 0) + weight * v
        for (w1, s1) in M:
            for (w2, s2) in M:
                for (w3, s3) in M:
                    add(w1 + w2 + w3, Fraction(-2, 3) * s1 * s2 * s3)
        for w1 in P:
            for w2 in P:
                for (w3, s3) in M:
                    add(w1 + w2 + w3, s3)
        for w1 in P:
            add(w1, -2)
        target = {k: v for k, v in target.items() if v}
        assert apply_to_fock(S, state) == target


def test_wick_paths_agree_on_ordering():
    # the single-contraction b†b coefficients of P·S and S·P differ by the commutator part
    diff = wick_single_contraction_bb("PS") - wick_single_contraction_bb("SP")
    assert not diff.is_zero()


def test_generator_removes_cubic_term_numerically():
    """[ω b†b, S] = ω P³ checked on Fock states with ω = 3."""
    H = atom_hamiltonian().subs({"X": Scalar(), "Y": Scalar()})
    C = commutator(H, S)
    values = {"w": Fraction(3)}
    for n in range(4):
        state = {(0, n): Fraction(1)}
        lhs = apply_to_fock(C, state, values)
        cube = apply_word([("b", True), ("b", True), ("b", True)], state)
        assert lhs.get((0, n + 3)) == 3 * cube[(0, n + 3)]
