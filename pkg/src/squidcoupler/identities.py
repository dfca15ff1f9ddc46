"""Registered operator identities behind the renormalized rates.

Every identity builds both sides exactly with :mod:`squidcoupler.algebra`
and reports the symbolic difference.  Coupling Hamiltonians use the sign
conventions of :mod:`squidcoupler.rates`: resonator mode ``a``, atom mode
``b``, and the atom cubic term eliminated by ``exp(-Λ S) H exp(Λ S)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .algebra import (
    OperatorPolynomial,
    Scalar,
    bch_second_order,
    commutator,
    contraction,
    cubic_generator,
    ladder_ops,
    symbols,
    wick_expand_exactly,
)
from .errors import UnknownIdentityError

Expr = Scalar | OperatorPolynomial


@dataclass(frozen=True)
class VerificationReport:
    name: str
    description: str
    passed: bool
    expected: str
    actual: str
    difference: str

    def row(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = f"{status}  {self.name:<22} {self.description}"
        if not self.passed:
            line += f"\n      difference: {self.difference}"
        return line


def _report(name: str, description: str, expected: Expr, actual: Expr) -> VerificationReport:
    diff = actual - expected
    return VerificationReport(name, description, diff.is_zero(), str(expected), str(actual), str(diff))


# common building blocks ----------------------------------------------------

L, X, Y, w, g1c, g1i, g2, G2, G3, K0 = symbols("L X Y w g1c g1i g2 G2 G3 K0")
_ops = ladder_ops()
a, ad, b, bd = _ops["a"], _ops["ad"], _ops["b"], _ops["bd"]
P, M = bd + b, bd - b
Pa, Ma = ad + a, ad - a
S = cubic_generator("b")
ONE = OperatorPolynomial.identity()


def atom_hamiltonian() -> OperatorPolynomial:
    """ω(b†b + ½) - X P³ - Y P⁴."""
    return (bd * b).scale(w) + ONE.scale(w / 2) - (P**3).scale(X) - (P**4).scale(Y)


def coupling_hamiltonian() -> OperatorPolynomial:
    """Dipolar, cross-Kerr and two-excitation couplings in quadratures."""
    return (-(Ma * M).scale(g1c) - (Pa * P).scale(g1i) - (Pa * Pa * P * P).scale(K0 / 4)
            - (Pa * Pa * P).scale(g2) - (Pa * P * P).scale(G2) - (Pa * P * P * P).scale(G3))


def _dressed_coupling() -> OperatorPolynomial:
    hc = coupling_hamiltonian()
    return hc + commutator(hc, S).scale(L)


def _atom_transformed() -> OperatorPolynomial:
    # substitute Λ = X/ω and keep terms up to second order in the nonlinearity
    out = bch_second_order(atom_hamiltonian(), S, L).subs({"L": X / w})
    return out.truncate({"X": 1, "Y": 2}, 2)


# identities ---------------------------------------------------------------

def _sa_form():
    return _report("sa-form", "S ladder form = -(2/3)M³ + P²M - 2P",
                   (M**3).scale(Fraction(-2, 3)) + P * P * M - P.scale(2), S)


def _generator():
    cubic = -(P**3).scale(X)
    first = commutator((bd * b).scale(w), S).scale(X / w)
    return _report("sw-generator", "Λ[ω b†b, S] cancels -X P³ for Λ = X/ω",
                   OperatorPolynomial(), cubic + first)


def _anharmonicity():
    T = _atom_transformed()
    xi = Scalar.const(60) * L * X + Scalar.const(12) * Y
    xi_sub = xi.subs({"L": X / w})
    expected = (OperatorPolynomial.monomial({"b": (2, 2)}, -xi_sub / 2)
                + OperatorPolynomial.monomial({"b": (1, 1)}, w - xi_sub))
    actual = (OperatorPolynomial.monomial({"b": (2, 2)}, T.coefficient({"b": (2, 2)}))
              + OperatorPolynomial.monomial({"b": (1, 1)}, T.coefficient({"b": (1, 1)})))
    return _report("anharmonicity", "b†²b² and b†b terms give Ξ_a = 60Λ_aX_a + 12Y_a",
                   expected, actual)


def _zero_point():
    T = _atom_transformed()
    expected = w / 2 - Scalar.const(11) * X * X / w - Scalar.const(3) * Y
    return _report("zero-point", "constant term = ω/2 - 11X²/ω - 3Y", expected, T.coefficient({}))


def _cross_kerr():
    I20 = (Pa * Pa * P).scale(g2)
    first = commutator(I20, S).scale(L)
    return _report("cross-kerr-24", "a†a b†b coefficient of Λ[I20, S] is 24 g2 Λ",
                   Scalar.const(24) * g2 * L, first.coefficient({"a": (1, 1), "b": (1, 1)}))


def _j_correction():
    T = _dressed_coupling().subs({"G3": Scalar()})
    J = G2 + Scalar.const(6) * L * g1i
    expected = (OperatorPolynomial.monomial({"a": (1, 0), "b": (1, 1)}, J * -2)
                + OperatorPolynomial.monomial({"a": (1, 0)}, -J))
    actual = (OperatorPolynomial.monomial({"a": (1, 0), "b": (1, 1)},
                                          T.coefficient({"a": (1, 0), "b": (1, 1)}))
              + OperatorPolynomial.monomial({"a": (1, 0)}, T.coefficient({"a": (1, 0)})))
    return _report("j-correction", "-J(2b†b + 1)a† with J = G2 + 6Λ g1i", expected, actual)


def _g2_tilde():
    T = _dressed_coupling().subs({"G3": Scalar()})
    Gm = G2 - Scalar.const(2) * L * (g1i - Scalar.const(2) * g1c)
    Gp = G2 - Scalar.const(2) * L * (g1i + Scalar.const(2) * g1c)
    expected = (OperatorPolynomial.monomial({"a": (1, 0), "b": (0, 2)}, -Gm)
                + OperatorPolynomial.monomial({"a": (1, 0), "b": (2, 0)}, -Gp))
    actual = (OperatorPolynomial.monomial({"a": (1, 0), "b": (0, 2)},
                                          T.coefficient({"a": (1, 0), "b": (0, 2)}))
              + OperatorPolynomial.monomial({"a": (1, 0), "b": (2, 0)},
                                            T.coefficient({"a": (1, 0), "b": (2, 0)})))
    return _report("g2-tilde-correction", "G̃2± = G2 - 2Λ(g1i ± 2g1c) on a†b² and a†b†²",
                   expected, actual)


def _f_correction():
    T = _dressed_coupling()
    F = Scalar.const(3) * G3 + Scalar.const(20) * L * G2
    expected = (OperatorPolynomial.monomial({"a": (1, 0), "b": (1, 2)}, -F)
                + OperatorPolynomial.monomial({"a": (1, 0), "b": (2, 1)}, -F))
    actual = (OperatorPolynomial.monomial({"a": (1, 0), "b": (1, 2)},
                                          T.coefficient({"a": (1, 0), "b": (1, 2)}))
              + OperatorPolynomial.monomial({"a": (1, 0), "b": (2, 1)},
                                            T.coefficient({"a": (1, 0), "b": (2, 1)})))
    return _report("f-correction", "F = 3G3 + 20Λ G2 on a†b†b² and a†b†²b", expected, actual)


def _g1i_dressing():
    # inductive part of the a†b and a†b† coefficients; G3 enters through the quartic term
    T = _dressed_coupling()
    g1i_t = g1i + Scalar.const(20) * L * G2 + Scalar.const(3) * G3
    expected = (OperatorPolynomial.monomial({"a": (1, 0), "b": (0, 1)}, g1c - g1i_t)
                + OperatorPolynomial.monomial({"a": (1, 0), "b": (1, 0)}, -g1c - g1i_t))
    actual = (OperatorPolynomial.monomial({"a": (1, 0), "b": (0, 1)},
                                          T.coefficient({"a": (1, 0), "b": (0, 1)}))
              + OperatorPolynomial.monomial({"a": (1, 0), "b": (1, 0)},
                                            T.coefficient({"a": (1, 0), "b": (1, 0)})))
    return _report("g1i-dressing", "first-order dressing of the dipolar terms: g1i + 20Λ G2 + 3G3",
                   expected, actual)


def _wick_table():
    actual = {"PP": contraction(P, P), "MM": contraction(M, M),
              "MP": contraction(M, P), "PM": contraction(P, M)}
    expected = {"PP": 1, "MM": -1, "MP": -1, "PM": 1}
    diffs = {k: actual[k] - expected[k] for k in expected}
    passed = all(d.is_zero() for d in diffs.values())
    fmt = lambda d: ", ".join(f"{k}={v}" for k, v in d.items())
    return VerificationReport("wick-table", "contractions P̄P = 1, M̄M = -1, M̄P = -1, P̄M = 1",
                              passed, fmt(expected), fmt(actual), fmt(diffs))


_S_TERMS = ((Fraction(-2, 3), (M, M, M)), (Fraction(1), (P, P, M)), (Fraction(-2), (P,)))


def wick_single_contraction_bb(order: str) -> Scalar:
    """b†b coefficient of P·S (``order="PS"``) or S·P from single contractions only."""
    total = Scalar()
    for coeff, factors in _S_TERMS:
        seq = (P,) + factors if order == "PS" else factors + (P,)
        if len(seq) < 2:
            continue
        part = wick_expand_exactly(list(seq), 1)
        total = total + part.coefficient({"b": (1, 1)}) * coeff
    return total


def _wick_cross_kerr():
    via_wick = (wick_single_contraction_bb("PS") - wick_single_contraction_bb("SP")) \
        * Scalar.const(2) * g2 * L
    brute = commutator((Pa * Pa * P).scale(g2), S).scale(L).coefficient({"a": (1, 1), "b": (1, 1)})
    return _report("wick-cross-kerr", "Wick single-contraction path reproduces the a†a b†b coefficient",
                   brute, via_wick)


def _negative_control():
    I20 = (Pa * Pa * P).scale(g2)
    first = commutator(I20, S).scale(L)
    return _report("negative-control", "deliberately wrong claim: coefficient 25 g2 Λ",
                   Scalar.const(25) * g2 * L, first.coefficient({"a": (1, 1), "b": (1, 1)}))


REGISTRY: dict[str, Callable[[], VerificationReport]] = {
    "sa-form": _sa_form,
    "sw-generator": _generator,
    "anharmonicity": _anharmonicity,
    "zero-point": _zero_point,
    "cross-kerr-24": _cross_kerr,
    "j-correction": _j_correction,
    "g2-tilde-correction": _g2_tilde,
    "f-correction": _f_correction,
    "g1i-dressing": _g1i_dressing,
    "wick-table": _wick_table,
    "wick-cross-kerr": _wick_cross_kerr,
    "negative-control": _negative_control,
}
FULL_SUITE = tuple(n for n in REGISTRY if n != "negative-control")


def verify_identity(name: str) -> VerificationReport:
    try:
        check = REGISTRY[name]
    except KeyError:
        raise UnknownIdentityError(f"unknown identity {name!r}; known: {', '.join(REGISTRY)}") from None
    return check()


def verify_all(names=FULL_SUITE) -> list[VerificationReport]:
    return [verify_identity(n) for n in names]
