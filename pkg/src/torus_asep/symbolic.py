"""Exact arithmetic in the 2n hopping rates p_1..p_n, q_1..q_n.

Coefficients are `fractions.Fraction` throughout and polynomials are kept in
canonical form (no zero terms, one entry per monomial), so `==` is
mathematical equality. No floating point enters any identity computed here.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact scalar (int or Fraction), got {type(x).__name__}")


def parse_fraction(text: str) -> Fraction:
    """Parse 'a/b', an integer, or a decimal string into an exact Fraction."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return Fraction(int(num), int(den))
    if "." in text or "e" in text.lower():
        return Fraction(text)
    return Fraction(int(text))


@dataclass(frozen=True)
class RatePoint:
    """Exact nonnegative rates per row: forward p_k and backward q_k, k = 1..n."""

    p: tuple[Fraction, ...]
    q: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(_as_fraction(x) for x in self.p))
        object.__setattr__(self, "q", tuple(_as_fraction(x) for x in self.q))
        if len(self.p) != len(self.q) or not self.p:
            raise ValueError("p and q must be nonempty vectors of equal length")
        if any(x < 0 for x in self.p + self.q):
            raise ValueError("rates must be nonnegative")
        # A vanishing forward rate together with a vanishing backward rate
        # makes even the lumped ring chain reducible; reject outright.
        if any(x == 0 for x in self.p) and any(x == 0 for x in self.q):
            raise ValueError("some p_i and some q_j are both zero; chain is reducible")

    @property
    def n(self) -> int:
        return len(self.p)

    def all_positive(self) -> bool:
        return all(x > 0 for x in self.p + self.q)

    def zero_q_labels(self) -> frozenset[int]:
        """Row labels k (1-based) with q_k = 0."""
        return frozenset(k + 1 for k, x in enumerate(self.q) if x == 0)

    def rate(self, symbol: tuple[str, int]) -> Fraction:
        """Value of a rate symbol ('p', k) or ('q', k), k 1-based."""
        family, k = symbol
        vec = self.p if family == "p" else self.q
        return vec[k - 1]

    def scaled_to_integers(self) -> "RatePoint":
        """Multiply all rates by the lcm of their denominators.

        The generator is homogeneous of degree one in the rates, so this
        rescaling changes neither the stationary distribution nor any
        rate ratio.
        """
        denoms = [x.denominator for x in self.p + self.q]
        m = math.lcm(*denoms)
        return RatePoint(tuple(x * m for x in self.p), tuple(x * m for x in self.q))

    def as_floats(self) -> tuple[list[float], list[float]]:
        return [float(x) for x in self.p], [float(x) for x in self.q]

    @classmethod
    def parse(cls, text: str) -> "RatePoint":
        """Parse 'p1,..,pn;q1,..,qn' with entries 'a/b', integers, or decimals."""
        try:
            p_text, q_text = text.split(";")
            p = tuple(parse_fraction(t) for t in p_text.split(","))
            q = tuple(parse_fraction(t) for t in q_text.split(","))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse rate point {text!r}: {exc}") from exc
        return cls(p, q)

    def to_json_dict(self) -> dict:
        return {
            "p": [str(x) for x in self.p],
            "q": [str(x) for x in self.q],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "RatePoint":
        return cls(
            tuple(parse_fraction(str(x)) for x in data["p"]),
            tuple(parse_fraction(str(x)) for x in data["q"]),
        )


@dataclass(frozen=True)
class Monomial:
    """A product of rate variables: exponents of p_1..p_n followed by q_1..q_n."""

    n: int
    exponents: tuple[int, ...]

    def __post_init__(self):
        if len(self.exponents) != 2 * self.n:
            raise ValueError(f"need 2n = {2 * self.n} exponents, got {len(self.exponents)}")
        if any(e < 0 for e in self.exponents):
            raise ValueError("exponents must be nonnegative")

    @classmethod
    def unit(cls, n: int) -> "Monomial":
        return cls(n, (0,) * (2 * n))

    @classmethod
    def p(cls, n: int, k: int) -> "Monomial":
        _check_label(k, n)
        e = [0] * (2 * n)
        e[k - 1] = 1
        return cls(n, tuple(e))

    @classmethod
    def q(cls, n: int, k: int) -> "Monomial":
        _check_label(k, n)
        e = [0] * (2 * n)
        e[n + k - 1] = 1
        return cls(n, tuple(e))

    def degree(self) -> int:
        return sum(self.exponents)

    def p_exponent(self, k: int) -> int:
        return self.exponents[k - 1]

    def q_exponent(self, k: int) -> int:
        return self.exponents[self.n + k - 1]

    def __mul__(self, other: "Monomial") -> "Monomial":
        if self.n != other.n:
            raise ValueError("monomials over different variable sets")
        return Monomial(self.n, tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    def evaluate(self, rates: RatePoint) -> Fraction:
        if rates.n != self.n:
            raise ValueError("rate point has wrong number of rows")
        value = Fraction(1)
        for x, e in zip(rates.p + rates.q, self.exponents):
            if e:
                value *= x**e
        return value

    def shift_rows(self, s: int) -> "Monomial":
        """Substitute p_j -> p_{j+s}, q_j -> q_{j+s} (labels cyclic mod n)."""
        n = self.n
        e = [0] * (2 * n)
        for j in range(n):
            e[(j + s) % n] = self.exponents[j]
            e[n + (j + s) % n] = self.exponents[n + j]
        return Monomial(n, tuple(e))

    def uses_q_label(self, labels) -> bool:
        return any(self.q_exponent(k) > 0 for k in labels)

    def as_polynomial(self) -> "Polynomial":
        return Polynomial(self.n, {self.exponents: Fraction(1)})

    def __str__(self) -> str:
        return _render_term(self.n, self.exponents, Fraction(1), lead=True)


def _check_label(k: int, n: int) -> None:
    if not 1 <= k <= n:
        raise ValueError(f"label {k} out of range 1..{n}")


class Polynomial:
    """Multivariate polynomial in p_1..p_n, q_1..q_n with Fraction coefficients."""

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: dict[tuple[int, ...], Fraction] | None = None):
        self.n = n
        clean: dict[tuple[int, ...], Fraction] = {}
        for exps, coef in (terms or {}).items():
            coef = _as_fraction(coef)
            if coef:
                if len(exps) != 2 * n:
                    raise ValueError("exponent tuple has wrong length")
                clean[tuple(exps)] = coef
        self._terms = clean

    # -- constructors ----------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "Polynomial":
        return cls(n, {})

    @classmethod
    def one(cls, n: int) -> "Polynomial":
        return cls.constant(n, 1)

    @classmethod
    def constant(cls, n: int, c) -> "Polynomial":
        return cls(n, {(0,) * (2 * n): _as_fraction(c)})

    @classmethod
    def from_monomial(cls, mono: Monomial, coef=1) -> "Polynomial":
        return cls(mono.n, {mono.exponents: _as_fraction(coef)})

    # -- inspection -------------------------------------------------------

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def coefficient(self, mono: Monomial) -> Fraction:
        return self._terms.get(mono.exponents, Fraction(0))

    def sorted_terms(self) -> list[tuple[tuple[int, ...], Fraction]]:
        """Terms in graded lexicographic order on (p_1..p_n, q_1..q_n)."""
        return sorted(self._terms.items(), key=lambda item: (sum(item[0]), item[0]))

    def monomials(self) -> Iterator[tuple[Monomial, Fraction]]:
        for exps, coef in self.sorted_terms():
            yield Monomial(self.n, exps), coef

    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    def is_homogeneous(self, d: int | None = None) -> bool:
        degs = {sum(e) for e in self._terms}
        if not degs:
            return True
        if d is None:
            return len(degs) == 1
        return degs == {d}

    # -- ring operations --------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.n != self.n:
                raise ValueError("polynomials over different variable sets")
            return other
        if isinstance(other, Monomial):
            return Polynomial.from_monomial(other)
        return Polynomial.constant(self.n, other)

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        terms = dict(self._terms)
        for exps, coef in other._terms.items():
            terms[exps] = terms.get(exps, Fraction(0)) + coef
        return Polynomial(self.n, terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.n, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        other = self._coerce(other)
        terms: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, Fraction(0)) + c1 * c2
        return Polynomial(self.n, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = Polynomial.one(self.n)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, Monomial)):
            try:
                other = self._coerce(other)
            except ValueError:
                return False
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.n == other.n and self._terms == other._terms

    # -- evaluation and substitution ---------------------------------------

    def evaluate(self, rates: RatePoint) -> Fraction:
        if rates.n != self.n:
            raise ValueError("rate point has wrong number of rows")
        values = rates.p + rates.q
        total = Fraction(0)
        for exps, coef in self._terms.items():
            term = coef
            for x, e in zip(values, exps):
                if e:
                    term *= x**e
            total += term
        return total

    def shift_rows(self, s: int) -> "Polynomial":
        """Substitute p_j -> p_{j+s}, q_j -> q_{j+s} (labels cyclic mod n)."""
        n = self.n
        terms: dict[tuple[int, ...], Fraction] = {}
        for exps, coef in self._terms.items():
            e = [0] * (2 * n)
            for j in range(n):
                e[(j + s) % n] = exps[j]
                e[n + (j + s) % n] = exps[n + j]
            terms[tuple(e)] = terms.get(tuple(e), Fraction(0)) + coef
        return Polynomial(n, terms)

    def subs_identical(self) -> "Polynomial":
        """Set every p_i = p and q_i = q; the result is a polynomial in (p, q)."""
        terms: dict[tuple[int, ...], Fraction] = {}
        n = self.n
        for exps, coef in self._terms.items():
            e = (sum(exps[:n]), sum(exps[n:]))
            terms[e] = terms.get(e, Fraction(0)) + coef
        return Polynomial(1, terms)

    def subs_symmetric(self) -> "Polynomial":
        """Set q_i = p_i for every row."""
        terms: dict[tuple[int, ...], Fraction] = {}
        n = self.n
        for exps, coef in self._terms.items():
            e = tuple(exps[j] + exps[n + j] for j in range(n)) + (0,) * n
            terms[e] = terms.get(e, Fraction(0)) + coef
        return Polynomial(n, terms)

    def subs_zero_q(self) -> "Polynomial":
        """Set q_i = 0 for every row (terms containing any q drop out)."""
        n = self.n
        terms = {e: c for e, c in self._terms.items() if not any(e[n:])}
        return Polynomial(n, terms)

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "terms": [
                {
                    "p": list(exps[: self.n]),
                    "q": list(exps[self.n :]),
                    "coef": str(coef),
                }
                for exps, coef in self.sorted_terms()
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Polynomial":
        n = int(data["n"])
        terms: dict[tuple[int, ...], Fraction] = {}
        for term in data["terms"]:
            exps = tuple(int(x) for x in term["p"]) + tuple(int(x) for x in term["q"])
            terms[exps] = parse_fraction(str(term["coef"]))
        return cls(n, terms)

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for i, (exps, coef) in enumerate(self.sorted_terms()):
            parts.append(_render_term(self.n, exps, coef, lead=(i == 0)))
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"Polynomial({self})"


def _render_term(n: int, exps: tuple[int, ...], coef: Fraction, lead: bool) -> str:
    factors = []
    for j, e in enumerate(exps):
        if not e:
            continue
        name = f"p{j + 1}" if j < n else f"q{j - n + 1}"
        factors.append(name if e == 1 else f"{name}^{e}")
    body = "*".join(factors)
    mag = abs(coef)
    if not factors:
        core = str(mag)
    elif mag == 1:
        core = body
    else:
        core = f"{mag}*{body}"
    if lead:
        return core if coef >= 0 else f"-{core}"
    return f"+ {core}" if coef >= 0 else f"- {core}"


def p_var(n: int, k: int) -> Polynomial:
    return Monomial.p(n, k).as_polynomial()


def q_var(n: int, k: int) -> Polynomial:
    return Monomial.q(n, k).as_polynomial()


def rate_symbol_poly(n: int, symbol: tuple[str, int]) -> Polynomial:
    family, k = symbol
    return p_var(n, k) if family == "p" else q_var(n, k)


def rate_product(n: int, family: str) -> Monomial:
    """The monomial p_1..p_n (family 'p') or q_1..q_n (family 'q')."""
    e = [0] * (2 * n)
    off = 0 if family == "p" else n
    for j in range(n):
        e[off + j] = 1
    return Monomial(n, tuple(e))


# -- symmetric function bases --------------------------------------------


def elementary_symmetric(n: int, k: int) -> Polynomial:
    """e_k(p_1,..,p_n), 1 <= k <= n."""
    if not 1 <= k <= n:
        raise ValueError(f"elementary symmetric degree {k} out of range 1..{n}")
    terms: dict[tuple[int, ...], Fraction] = {}
    for subset in itertools.combinations(range(n), k):
        e = [0] * (2 * n)
        for j in subset:
            e[j] = 1
        terms[tuple(e)] = Fraction(1)
    return Polynomial(n, terms)


def homogeneous_symmetric(n: int, k: int) -> Polynomial:
    """h_k(p_1,..,p_n), k >= 0 (h_0 = 1)."""
    if k < 0:
        raise ValueError("homogeneous symmetric degree must be >= 0")
    terms: dict[tuple[int, ...], Fraction] = {}
    for combo in itertools.combinations_with_replacement(range(n), k):
        e = [0] * (2 * n)
        for j in combo:
            e[j] += 1
        terms[tuple(e)] = terms.get(tuple(e), Fraction(0)) + 1
    return Polynomial(n, terms)


def pq_integer(n: int) -> Polynomial:
    """The two-variable quantum integer p^{n-1} + p^{n-2} q + .. + q^{n-1}."""
    if n < 1:
        raise ValueError("need n >= 1")
    terms = {(n - 1 - i, i): Fraction(1) for i in range(n)}
    return Polynomial(1, terms)


def reflected_homogeneous(n: int, m: int) -> Polynomial:
    """(p_1..p_n)^m times h_m(1/p_1,..,1/p_n), with denominators cleared.

    Equals the sum over compositions (c_1,..,c_n) of m of the monomial
    prod_k p_k^{m - c_k}.
    """
    if m < 0:
        raise ValueError("degree must be >= 0")
    base = homogeneous_symmetric(n, m)
    terms: dict[tuple[int, ...], Fraction] = {}
    for exps, coef in base._terms.items():
        e = tuple(m - exps[j] for j in range(n)) + (0,) * n
        terms[e] = terms.get(e, Fraction(0)) + coef
    return Polynomial(n, terms)


def poly_det(matrix: list[list[Polynomial]]) -> Polynomial:
    """Determinant of a square matrix of polynomials (Laplace expansion)."""
    size = len(matrix)
    if size == 0:
        raise ValueError("empty matrix")
    n = matrix[0][0].n
    if any(len(row) != size for row in matrix):
        raise ValueError("matrix is not square")

    def expand(rows: tuple[int, ...], cols: tuple[int, ...]) -> Polynomial:
        if len(rows) == 1:
            return matrix[rows[0]][cols[0]]
        total = Polynomial.zero(n)
        r = rows[0]
        rest = rows[1:]
        for idx, c in enumerate(cols):
            sub = expand(rest, cols[:idx] + cols[idx + 1 :])
            term = matrix[r][c] * sub
            total = total + term if idx % 2 == 0 else total - term
        return total

    return expand(tuple(range(size)), tuple(range(size)))


def rect_schur(L: int, n: int) -> Polynomial:
    """Schur polynomial for the rectangle with n-1 rows of length L-n, in p_1..p_n.

    Computed from the determinant of the band of homogeneous symmetric
    polynomials h_{(L-n) - i + j}.
    """
    if not 1 <= n <= L:
        raise ValueError("need 1 <= n <= L")
    m = L - n
    rows = n - 1
    if rows == 0 or m == 0:
        return Polynomial.one(n)

    def h(k: int) -> Polynomial:
        return homogeneous_symmetric(n, k) if k >= 0 else Polynomial.zero(n)

    matrix = [[h(m - i + j) for j in range(rows)] for i in range(rows)]
    return poly_det(matrix)
