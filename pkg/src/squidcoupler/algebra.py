"""Exact normal-ordered algebra of bosonic ladder operators.

Scalars are Laurent polynomials in opaque commuting symbols with rational
coefficients (:class:`Scalar`).  Operators are sums of normal-ordered
monomials ``a†^p a^q b†^r b^s ...`` with scalar coefficients
(:class:`OperatorPolynomial`).  Nothing in this module touches floating
point.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from math import comb, factorial
from numbers import Rational
from typing import Iterable, Mapping, Sequence, Union

DEFAULT_MODES = ("a", "b")
DEFAULT_MAX_DEGREE = 8

Monomial = tuple  # sorted tuple of (symbol, nonzero int exponent)
Signature = tuple  # per-mode (creation_power, annihilation_power)


class DegreeOverflowError(ArithmeticError):
    """Raised when a product exceeds the configured operator degree cap."""


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    raise TypeError(f"exact rational expected, got {type(value).__name__}")


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    powers = dict(m1)
    for name, exp in m2:
        new = powers.get(name, 0) + exp
        if new:
            powers[name] = new
        else:
            powers.pop(name, None)
    return tuple(sorted(powers.items()))


class Scalar:
    """Sum of rational coefficients times monomials of named symbols.

    Exponents may be negative so relations such as ``Lambda = X / omega``
    can be substituted explicitly.  Instances are immutable and kept in
    canonical form (like terms merged, zeros dropped).
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        clean = {}
        for mono, coeff in (terms or {}).items():
            coeff = _to_fraction(coeff)
            if coeff:
                clean[tuple(sorted(mono))] = coeff
        self._terms = dict(sorted(clean.items()))
        self._hash = None

    @classmethod
    def symbol(cls, name: str) -> "Scalar":
        return cls({((name, 1),): Fraction(1)})

    @classmethod
    def const(cls, value) -> "Scalar":
        return cls({(): _to_fraction(value)})

    @classmethod
    def coerce(cls, value) -> "Scalar":
        if isinstance(value, Scalar):
            return value
        return cls.const(value)

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def symbols(self) -> set[str]:
        return {name for mono in self._terms for name, _ in mono}

    def __add__(self, other):
        other = Scalar.coerce(other)
        out = dict(self._terms)
        for mono, coeff in other._terms.items():
            out[mono] = out.get(mono, Fraction(0)) + coeff
        return Scalar(out)

    __radd__ = __add__

    def __neg__(self):
        return Scalar({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-Scalar.coerce(other))

    def __rsub__(self, other):
        return Scalar.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, OperatorPolynomial):
            return NotImplemented
        other = Scalar.coerce(other)
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                mono = _mono_mul(m1, m2)
                out[mono] = out.get(mono, Fraction(0)) + c1 * c2
        return Scalar(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        # division only by a single monomial term keeps the Laurent form
        other = Scalar.coerce(other)
        if len(other._terms) != 1:
            raise ZeroDivisionError("can only divide by a single nonzero monomial")
        (mono, coeff), = other._terms.items()
        inverse = Scalar({tuple((n, -e) for n, e in mono): 1 / coeff})
        return self * inverse

    def __pow__(self, n: int):
        if n < 0:
            return Scalar.const(1) / self ** (-n)
        out = Scalar.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        try:
            other = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self._terms.items()))
        return self._hash

    def subs(self, mapping: Mapping[str, "Scalar"]) -> "Scalar":
        """Replace symbols by scalars (negative powers need monomial images)."""
        out = Scalar()
        for mono, coeff in self._terms.items():
            term = Scalar.const(coeff)
            for name, exp in mono:
                base = Scalar.coerce(mapping[name]) if name in mapping else Scalar.symbol(name)
                term = term * base**exp
            out = out + term
        return out

    def evaluate(self, values: Mapping[str, object]) -> Fraction:
        total = Fraction(0)
        for mono, coeff in self._terms.items():
            term = coeff
            for name, exp in mono:
                term *= _to_fraction(values[name]) ** exp
            total += term
        return total

    def truncate(self, grades: Mapping[str, int], max_degree: int) -> "Scalar":
        """Drop every term whose weighted degree exceeds ``max_degree``.

        Symbols absent from ``grades`` have weight zero.
        """
        keep = {}
        for mono, coeff in self._terms.items():
            degree = sum(grades.get(name, 0) * exp for name, exp in mono)
            if degree <= max_degree:
                keep[mono] = coeff
        return Scalar(keep)

    def __repr__(self):
        return f"Scalar({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for mono, coeff in self._terms.items():
            factors = [n if e == 1 else f"{n}^{e}" for n, e in mono]
            if not factors:
                parts.append(str(coeff))
            elif coeff == 1:
                parts.append("*".join(factors))
            elif coeff == -1:
                parts.append("-" + "*".join(factors))
            else:
                parts.append(f"{coeff}*" + "*".join(factors))
        return " + ".join(parts).replace("+ -", "- ")


ScalarLike = Union[Scalar, int, Fraction]


def symbols(names: str) -> tuple[Scalar, ...]:
    return tuple(Scalar.symbol(n) for n in names.split())


def _single_mode_product(left: tuple[int, int], right: tuple[int, int]):
    """(a†^p a^q)(a†^r a^s) = sum_k C(q,k) C(r,k) k! a†^(p+r-k) a^(q+s-k)."""
    p, q = left
    r, s = right
    for k in range(min(q, r) + 1):
        yield (p + r - k, q + s - k), comb(q, k) * comb(r, k) * factorial(k)


class OperatorPolynomial:
    """Normal-ordered polynomial in the ladder operators of several modes.

    Different modes commute; within a mode ``[c, c†] = 1``.  The map from
    signature to coefficient never stores zero coefficients, so equality is
    structural.
    """

    __slots__ = ("modes", "max_degree", "_terms")

    def __init__(self, terms: Mapping[Signature, ScalarLike] | None = None,
                 modes: Sequence[str] = DEFAULT_MODES,
                 max_degree: int = DEFAULT_MAX_DEGREE):
        self.modes = tuple(modes)
        self.max_degree = max_degree
        clean = {}
        for sig, coeff in (terms or {}).items():
            sig = tuple(tuple(x) for x in sig)
            if len(sig) != len(self.modes) or any(c < 0 or a < 0 for c, a in sig):
                raise ValueError(f"bad signature {sig!r} for modes {self.modes}")
            coeff = Scalar.coerce(coeff)
            if coeff.is_zero():
                continue
            if sum(c + a for c, a in sig) > max_degree:
                raise DegreeOverflowError(
                    f"term of degree {sum(c + a for c, a in sig)} exceeds cap {max_degree}")
            clean[sig] = coeff
        self._terms = dict(sorted(clean.items()))

    # constructors -------------------------------------------------------
    def _like(self, terms) -> "OperatorPolynomial":
        return OperatorPolynomial(terms, self.modes, self.max_degree)

    def _zero_sig(self) -> Signature:
        return tuple((0, 0) for _ in self.modes)

    @classmethod
    def identity(cls, coeff: ScalarLike = 1, modes=DEFAULT_MODES, max_degree=DEFAULT_MAX_DEGREE):
        return cls({tuple((0, 0) for _ in modes): coeff}, modes, max_degree)

    @classmethod
    def ladder(cls, mode: str, dagger: bool, modes=DEFAULT_MODES, max_degree=DEFAULT_MAX_DEGREE):
        idx = list(modes).index(mode)
        sig = [(0, 0)] * len(modes)
        sig[idx] = (1, 0) if dagger else (0, 1)
        return cls({tuple(sig): 1}, modes, max_degree)

    @classmethod
    def monomial(cls, powers: Mapping[str, tuple[int, int]], coeff: ScalarLike = 1,
                 modes=DEFAULT_MODES, max_degree=DEFAULT_MAX_DEGREE):
        sig = tuple(tuple(powers.get(m, (0, 0))) for m in modes)
        return cls({sig: coeff}, modes, max_degree)

    # inspection ---------------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((sum(c + a for c, a in sig) for sig in self._terms), default=0)

    def signature(self, powers: Mapping[str, tuple[int, int]]) -> Signature:
        unknown = set(powers) - set(self.modes)
        if unknown:
            raise KeyError(f"unknown modes {sorted(unknown)}")
        return tuple(tuple(powers.get(m, (0, 0))) for m in self.modes)

    def coefficient(self, powers: Mapping[str, tuple[int, int]] | Signature) -> Scalar:
        sig = self.signature(powers) if isinstance(powers, Mapping) else tuple(map(tuple, powers))
        return self._terms.get(sig, Scalar())

    def _check(self, other: "OperatorPolynomial"):
        if other.modes != self.modes:
            raise ValueError(f"mode mismatch: {self.modes} vs {other.modes}")

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, OperatorPolynomial):
            other = OperatorPolynomial.identity(Scalar.coerce(other), self.modes, self.max_degree)
        self._check(other)
        out = dict(self._terms)
        for sig, coeff in other._terms.items():
            out[sig] = out.get(sig, Scalar()) + coeff
        return self._like(out)

    __radd__ = __add__

    def __neg__(self):
        return self._like({s: -c for s, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor: ScalarLike) -> "OperatorPolynomial":
        factor = Scalar.coerce(factor)
        return self._like({s: c * factor for s, c in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, OperatorPolynomial):
            return self.scale(other)
        self._check(other)
        out: dict = {}
        for s1, c1 in self._terms.items():
            for s2, c2 in other._terms.items():
                coeff = c1 * c2
                partial = [((), 1)]
                for m1, m2 in zip(s1, s2):
                    partial = [(sig + (ms,), w * k)
                               for sig, w in partial
                               for ms, k in _single_mode_product(m1, m2)]
                for sig, weight in partial:
                    if sum(c + a for c, a in sig) > self.max_degree:
                        raise DegreeOverflowError(
                            f"product term of degree {sum(c + a for c, a in sig)} "
                            f"exceeds cap {self.max_degree}")
                    out[sig] = out.get(sig, Scalar()) + coeff * weight
        return self._like(out)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative operator power")
        out = OperatorPolynomial.identity(1, self.modes, self.max_degree)
        for _ in range(n):
            out = out * self
        return out

    def colon_product(self, other: "OperatorPolynomial") -> "OperatorPolynomial":
        """Normal-ordered product ``:pq:`` (operators treated as commuting)."""
        self._check(other)
        out: dict = {}
        for s1, c1 in self._terms.items():
            for s2, c2 in other._terms.items():
                sig = tuple((a1 + a2, b1 + b2) for (a1, b1), (a2, b2) in zip(s1, s2))
                out[sig] = out.get(sig, Scalar()) + c1 * c2
        return self._like(out)

    def dagger(self) -> "OperatorPolynomial":
        """Hermitian conjugate; symbols are treated as real."""
        return self._like({tuple((a, c) for c, a in sig): coeff
                           for sig, coeff in self._terms.items()})

    def map_coefficients(self, func) -> "OperatorPolynomial":
        return self._like({s: func(c) for s, c in self._terms.items()})

    def subs(self, mapping: Mapping[str, Scalar]) -> "OperatorPolynomial":
        return self.map_coefficients(lambda c: c.subs(mapping))

    def truncate(self, grades: Mapping[str, int], max_degree: int) -> "OperatorPolynomial":
        return self.map_coefficients(lambda c: c.truncate(grades, max_degree))

    def __eq__(self, other):
        if not isinstance(other, OperatorPolynomial):
            return NotImplemented
        return self.modes == other.modes and self._terms == other._terms

    def __hash__(self):
        return hash((self.modes, tuple(self._terms.items())))

    def __repr__(self):
        return f"OperatorPolynomial({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for sig, coeff in self._terms.items():
            ops = []
            for mode, (c, a) in zip(self.modes, sig):
                if c:
                    ops.append(f"{mode}†" + (f"^{c}" if c > 1 else ""))
                if a:
                    ops.append(mode + (f"^{a}" if a > 1 else ""))
            parts.append(f"({coeff})" + ("*" + " ".join(ops) if ops else ""))
        return " + ".join(parts)


def normal_order(p: OperatorPolynomial) -> OperatorPolynomial:
    """Identity on canonical polynomials; kept for symmetry with word input."""
    return p._like(p.terms)


def multiply(p: OperatorPolynomial, q: OperatorPolynomial) -> OperatorPolynomial:
    return p * q


def commutator(p: OperatorPolynomial, q: OperatorPolynomial) -> OperatorPolynomial:
    return p * q - q * p


def is_anti_hermitian(s: OperatorPolynomial) -> bool:
    return (s + s.dagger()).is_zero()


def bch_second_order(h: OperatorPolynomial, s: OperatorPolynomial,
                     lam: ScalarLike) -> OperatorPolynomial:
    """``exp(-lam S) H exp(lam S)`` through the second commutator."""
    if not is_anti_hermitian(s):
        raise ValueError("generator must be anti-Hermitian (S + S† != 0)")
    lam = Scalar.coerce(lam)
    first = commutator(h, s)
    second = commutator(first, s)
    return h + first.scale(lam) + second.scale(lam * lam * Fraction(1, 2))


def extract_coefficient(p: OperatorPolynomial, signature) -> Scalar:
    return p.coefficient(signature)


# convenience builders -----------------------------------------------------

def ladder_ops(modes: Sequence[str] = DEFAULT_MODES, max_degree: int = DEFAULT_MAX_DEGREE):
    """Return ``{name: op}`` with ``a``, ``ad`` (a†), ``b``, ``bd`` ... entries."""
    ops = {}
    for m in modes:
        ops[m] = OperatorPolynomial.ladder(m, False, modes, max_degree)
        ops[m + "d"] = OperatorPolynomial.ladder(m, True, modes, max_degree)
    return ops


def quadrature_p(mode: str = "b", **kw) -> OperatorPolynomial:
    """``c† + c``."""
    modes = kw.get("modes", DEFAULT_MODES)
    md = kw.get("max_degree", DEFAULT_MAX_DEGREE)
    return OperatorPolynomial.ladder(mode, True, modes, md) + OperatorPolynomial.ladder(mode, False, modes, md)


def quadrature_m(mode: str = "b", **kw) -> OperatorPolynomial:
    """``c† - c``."""
    modes = kw.get("modes", DEFAULT_MODES)
    md = kw.get("max_degree", DEFAULT_MAX_DEGREE)
    return OperatorPolynomial.ladder(mode, True, modes, md) - OperatorPolynomial.ladder(mode, False, modes, md)


def cubic_generator(mode: str = "b", **kw) -> OperatorPolynomial:
    """Anti-Hermitian generator that removes a ``(c† + c)^3`` perturbation.

    ``(c†^3 - c^3)/3 + 3(c†^2 c - c† c^2) + 3(c† - c)``.
    """
    modes = kw.get("modes", DEFAULT_MODES)
    md = kw.get("max_degree", DEFAULT_MAX_DEGREE)
    mono = lambda c, a, k: OperatorPolynomial.monomial({mode: (c, a)}, k, modes, md)
    return (mono(3, 0, Fraction(1, 3)) - mono(0, 3, Fraction(1, 3))
            + mono(2, 1, 3) - mono(1, 2, 3) + mono(1, 0, 3) - mono(0, 1, 3))


# Wick expansion -----------------------------------------------------------

def contraction(x: OperatorPolynomial, y: OperatorPolynomial) -> Scalar:
    """``xy - :xy:`` for linear factors; a c-number by construction."""
    diff = x * y - x.colon_product(y)
    if any(any(c or a for c, a in sig) for sig in diff.terms):
        raise ValueError("contraction of non-linear factors is not a scalar")
    return diff.coefficient(diff._zero_sig())


def _pairings(indices: tuple[int, ...], max_pairs: int | None):
    """Yield every set of disjoint ordered pairs (i < j), including the empty one."""
    def rec(rest, chosen):
        yield chosen
        if max_pairs is not None and len(chosen) >= max_pairs:
            return
        start_after = chosen[-1][0] if chosen else -1
        for i, j in combinations(rest, 2):
            if i <= start_after:
                continue
            remaining = tuple(k for k in rest if k not in (i, j))
            yield from rec(remaining, chosen + ((i, j),))
    yield from rec(indices, ())


def wick_expand(factors: Sequence[OperatorPolynomial],
                max_contractions: int | None = None) -> OperatorPolynomial:
    """Expand a product of linear factors by Wick's theorem.

    Sums ``:rest:`` times the product of contractions over every set of
    disjoint pairs.  With ``max_contractions=None`` the result equals the
    ordinary product exactly.
    """
    if not factors:
        raise ValueError("empty product")
    n = len(factors)
    table = {(i, j): contraction(factors[i], factors[j])
             for i in range(n) for j in range(i + 1, n)}
    total = OperatorPolynomial(None, factors[0].modes, factors[0].max_degree)
    for pairs in _pairings(tuple(range(n)), max_contractions):
        weight = Scalar.const(1)
        for pair in pairs:
            weight = weight * table[pair]
        if weight.is_zero():
            continue
        used = {k for pair in pairs for k in pair}
        rest = OperatorPolynomial.identity(1, factors[0].modes, factors[0].max_degree)
        for k in range(n):
            if k not in used:
                rest = rest.colon_product(factors[k])
        total = total + rest.scale(weight)
    return total


def wick_expand_exactly(factors: Sequence[OperatorPolynomial], n_contractions: int) -> OperatorPolynomial:
    """Terms of the Wick expansion with exactly ``n_contractions`` contractions."""
    upto = wick_expand(factors, n_contractions)
    if n_contractions == 0:
        return upto
    return upto - wick_expand(factors, n_contractions - 1)


# Fock-space action (unnormalized basis |n) = c†^n |0>) ------------------

FockState = dict  # occupation tuple -> Fraction


def _apply_monomial(sig: Signature, occupation: tuple[int, ...]):
    """Act with normal-ordered monomial; returns (new_occupation, weight) or None."""
    new = []
    weight = 1
    for (c, a), n in zip(sig, occupation):
        if a > n:
            return None
        # c^a |n) = n!/(n-a)! |n-a);  c†^c |m) = |m+c)
        weight *= factorial(n) // factorial(n - a)
        new.append(n - a + c)
    return tuple(new), weight


def apply_to_fock(p: OperatorPolynomial, state: FockState,
                  values: Mapping[str, object] | None = None) -> FockState:
    """Apply ``p`` to a state in the unnormalized occupation basis.

    Coefficients are evaluated with ``values``; all arithmetic stays rational.
    """
    values = values or {}
    out: dict = {}
    for occ, amp in state.items():
        for sig, coeff in p.terms.items():
            res = _apply_monomial(sig, occ)
            if res is None:
                continue
            new, weight = res
            out[new] = out.get(new, Fraction(0)) + Fraction(amp) * weight * coeff.evaluate(values)
    return {k: v for k, v in out.items() if v}


def apply_word(word: Iterable[tuple[str, bool]], state: FockState,
               modes: Sequence[str] = DEFAULT_MODES) -> FockState:
    """Apply a product of bare ladder operators right-to-left, e.g. ``[("b", False), ("b", True)]`` = b b†."""
    out = dict(state)
    for mode, dagger in reversed(list(word)):
        idx = list(modes).index(mode)
        nxt: dict = {}
        for occ, amp in out.items():
            n = occ[idx]
            if dagger:
                new, w = occ[:idx] + (n + 1,) + occ[idx + 1:], 1
            else:
                if n == 0:
                    continue
                new, w = occ[:idx] + (n - 1,) + occ[idx + 1:], n
            nxt[new] = nxt.get(new, Fraction(0)) + amp * w
        out = {k: v for k, v in nxt.items() if v}
    return out
