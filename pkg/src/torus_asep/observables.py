"""Closed-form partition functions, densities, and currents, with oracles.

Every closed form here is paired with an independent oracle computed from
the stationary ensemble: densities from occupation sums, currents from the
defining rate-weighted expectation (including, for box currents, the
crossing bookkeeping of the nonlocal moves via the displacement records).
All comparisons are exact; symbolic mode proves them as polynomial
identities in the 2n rates, numeric mode at one exact rate point.

All expectation numerators live over the common denominator L * Z(L, n);
reported values reduce that to Z(L, n) for whole-row totals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .dynamics import displacement_crossings, outgoing_transitions
from .model import ColoredWord, enumerate_full
from .stationary import box_weight, config_weight, total_box_weight
from .symbolic import (
    Monomial,
    Polynomial,
    RatePoint,
    elementary_symmetric,
    pq_integer,
    rate_product,
    rate_symbol_poly,
    rect_schur,
    reflected_homogeneous,
)


class ObservableMismatch(AssertionError):
    """A closed form disagrees with its brute-force oracle."""


def _check_dims(L: int, n: int) -> None:
    if not 1 <= n <= L:
        raise ValueError(f"need 1 <= n <= L, got n={n}, L={L}")


def compositions(total: int, parts: int):
    """All tuples of `parts` nonnegative integers summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def partition_function(L: int, n: int) -> Polynomial:
    """Restricted partition function: sum over gap compositions of the
    product of total box weights, homogeneous of degree (L-n)(n-1)."""
    _check_dims(L, n)
    m = L - n
    powers = []
    for k in range(1, n + 1):
        w = total_box_weight(k, n)
        pk = [Polynomial.one(n)]
        for _ in range(m):
            pk.append(pk[-1] * w)
        powers.append(pk)
    total = Polynomial.zero(n)
    for comp in compositions(m, n):
        term = Polynomial.one(n)
        for k, c in enumerate(comp):
            if c:
                term = term * powers[k][c]
        total = total + term
    return total


def brute_force_partition_function(L: int, n: int) -> Polynomial:
    """Independent oracle: sum of config weights over the restricted states."""
    from .model import iter_restricted

    total = Polynomial.zero(n)
    for w in iter_restricted(L, n):
        total = total + config_weight(w).as_polynomial()
    return total


def drift(n: int) -> Polynomial:
    """p_1..p_n - q_1..q_n, the factor carried by every current."""
    return rate_product(n, "p").as_polynomial() - rate_product(n, "q").as_polynomial()


# -- special-case partition functions ------------------------------------------


@dataclass
class SpecialCaseCertificate:
    L: int
    n: int
    case: str
    substituted: Polynomial
    closed_form: Polynomial
    extra: dict = field(default_factory=dict)

    @property
    def equal(self) -> bool:
        return self.substituted == self.closed_form and all(self.extra.values())


def partition_function_special(L: int, n: int, case: str) -> SpecialCaseCertificate:
    """Certify the substituted partition function against its closed form.

    Cases: 'identical' (all rows share p, q), 'symmetric' (q_i = p_i),
    'totally_asymmetric' (q_i = 0, with the rectangular Schur form as an
    extra certificate).
    """
    _check_dims(L, n)
    z = partition_function(L, n)
    m = L - n
    binom = math.comb(L - 1, n - 1)
    extra: dict = {}
    if case == "identical":
        substituted = z.subs_identical()
        closed = binom * pq_integer(n) ** m
    elif case == "symmetric":
        substituted = z.subs_symmetric()
        e = elementary_symmetric(n, n - 1) if n >= 2 else Polynomial.one(n)
        closed = binom * e**m
    elif case == "totally_asymmetric":
        substituted = z.subs_zero_q()
        closed = reflected_homogeneous(n, m)
        extra["schur_form"] = rect_schur(L, n) == closed
    else:
        raise ValueError(f"unknown special case {case!r}")
    cert = SpecialCaseCertificate(L, n, case, substituted, closed, extra)
    if not cert.equal:
        offending = _first_difference(substituted, closed)
        raise ObservableMismatch(
            f"special case {case} fails at ({L},{n}); first differing monomial: {offending}"
        )
    return cert


def _first_difference(a: Polynomial, b: Polynomial) -> str:
    diff = a - b
    for mono, coef in diff.monomials():
        return f"{mono} (coefficient {coef})"
    return "<none>"


# -- stationary ensemble ---------------------------------------------------------


@lru_cache(maxsize=None)
def _ensemble(L: int, n: int) -> tuple[tuple[ColoredWord, ...], tuple[Monomial, ...]]:
    states = tuple(enumerate_full(L, n))
    weights = tuple(config_weight(w) for w in states)
    return states, weights


@lru_cache(maxsize=None)
def _transitions_cache(L: int, n: int):
    states, _ = _ensemble(L, n)
    return tuple(tuple(outgoing_transitions(w)) for w in states)


def full_normalization(L: int, n: int) -> Polynomial:
    """L times the restricted partition function, verified against the brute sum."""
    _, weights = _ensemble(L, n)
    total = Polynomial.zero(n)
    for m in weights:
        total = total + m.as_polynomial()
    expected = L * partition_function(L, n)
    if total != expected:
        raise ObservableMismatch(f"sum of weights differs from L*Z at ({L},{n})")
    return total


# -- densities ----------------------------------------------------------------------


@lru_cache(maxsize=None)
def box_density_numerator(L: int, n: int, i: int) -> Polynomial:
    """Numerator of the box density at row i (any column) over L * Z(L, n).

    Row 1 uses the renewal sum over the distance to the nearest bullet on
    the left; deeper rows follow by the cyclic rate relabelling p_j -> p_{j+1},
    q_j -> q_{j+1} per row step.
    """
    _check_dims(L, n)
    if not 1 <= i <= n:
        raise ValueError(f"row {i} out of range 1..{n}")
    if i > 1:
        return box_density_numerator(L, n, 1).shift_rows(i - 1)
    total = Polynomial.zero(n)
    for a in range(1, n + 1):
        w1a = box_weight(1, a, n).as_polynomial()
        wa = total_box_weight(a, n)
        inner = Polynomial.zero(n)
        power = Polynomial.one(n)
        for j in range(1, L - n + 1):
            inner = inner + power * partition_function(L - j, n)
            power = power * wa
        total = total + w1a * inner
    return total


@dataclass(frozen=True)
class RationalValue:
    """A stationary observable as an exact ratio of polynomials."""

    num: Polynomial
    den: Polynomial

    def same_value(self, other: "RationalValue") -> bool:
        return self.num * other.den == other.num * self.den

    def evaluate(self, rates: RatePoint) -> Fraction:
        return self.num.evaluate(rates) / self.den.evaluate(rates)

    def __str__(self) -> str:
        return f"({self.num}) / ({self.den})"


@dataclass
class ObservableEntry:
    name: str
    index: tuple[int, ...]
    closed: RationalValue | Fraction
    oracle: RationalValue | Fraction
    equal: bool

    def to_json_dict(self) -> dict:
        return {
            "observable": self.name,
            "index": list(self.index),
            "closed_form": str(self.closed),
            "oracle": str(self.oracle),
            "equal": self.equal,
        }


def _entry(name, index, closed, oracle) -> ObservableEntry:
    if isinstance(closed, RationalValue):
        equal = closed.same_value(oracle)
    else:
        equal = closed == oracle
    return ObservableEntry(name, index, closed, oracle, equal)


@dataclass
class DensityReport:
    L: int
    n: int
    mode: str
    entries: list[ObservableEntry]

    def entry(self, name: str, *index: int) -> ObservableEntry:
        for e in self.entries:
            if e.name == name and e.index == tuple(index):
                return e
        raise KeyError((name, index))

    @property
    def ok(self) -> bool:
        return all(e.equal for e in self.entries)

    def to_json_rows(self) -> list[dict]:
        return [e.to_json_dict() for e in self.entries]

    def to_csv_rows(self) -> list[list[str]]:
        rows = [["observable", "index", "closed_form", "oracle", "equal"]]
        for e in self.entries:
            rows.append(
                [e.name, ":".join(map(str, e.index)), str(e.closed), str(e.oracle), str(e.equal)]
            )
        return rows


def densities(L: int, n: int, rates: RatePoint | None = None) -> DensityReport:
    """Bullet and box densities, closed form against occupation oracle.

    Bullet density is 1/L at every site; box densities are column
    independent and follow the renewal formula per row.  Raises
    ObservableMismatch if any entry disagrees.
    """
    _check_dims(L, n)
    states, weights = _ensemble(L, n)
    z = partition_function(L, n)
    total = full_normalization(L, n)

    if rates is None:
        wvals: list = [m.as_polynomial() for m in weights]
        zero: object = Polynomial.zero(n)
        den: object = total
        box_closed_num = [box_density_numerator(L, n, i) for i in range(1, n + 1)]
        bullet_closed_num = z

        def make_value(num):
            return RationalValue(num, den)

    else:
        wvals = [m.evaluate(rates) for m in weights]
        zero = Fraction(0)
        den = sum(wvals)
        if den == 0:
            raise ValueError("all weights vanish at this rate point")
        box_closed_num = [box_density_numerator(L, n, i).evaluate(rates) for i in range(1, n + 1)]
        bullet_closed_num = z.evaluate(rates)

        def make_value(num):
            return num / den

    bullet_num = [[zero] * L for _ in range(n)]
    box_num = [[zero] * L for _ in range(n)]
    for w, wv in zip(states, wvals):
        for x, letter in enumerate(w.letters):
            if letter > 0:
                bullet_num[letter - 1][x] = bullet_num[letter - 1][x] + wv
            else:
                box_num[-letter - 1][x] = box_num[-letter - 1][x] + wv

    entries = []
    for i in range(n):
        for j in range(L):
            entries.append(
                _entry("bullet_density", (i + 1, j + 1), make_value(bullet_closed_num), make_value(bullet_num[i][j]))
            )
            entries.append(
                _entry("box_density", (i + 1, j + 1), make_value(box_closed_num[i]), make_value(box_num[i][j]))
            )
    report = DensityReport(L, n, "symbolic" if rates is None else "numeric", entries)
    if not report.ok:
        bad = next(e for e in report.entries if not e.equal)
        raise ObservableMismatch(f"density mismatch at ({L},{n}), {bad.name}{bad.index}")
    return report


# -- currents -------------------------------------------------------------------------


@dataclass
class CurrentReport:
    L: int
    n: int
    mode: str
    entries: list[ObservableEntry]

    def entry(self, name: str, *index: int) -> ObservableEntry:
        for e in self.entries:
            if e.name == name and e.index == tuple(index):
                return e
        raise KeyError((name, index))

    @property
    def ok(self) -> bool:
        return all(e.equal for e in self.entries)

    def to_json_rows(self) -> list[dict]:
        return [e.to_json_dict() for e in self.entries]

    def to_csv_rows(self) -> list[list[str]]:
        rows = [["observable", "index", "closed_form", "oracle", "equal"]]
        for e in self.entries:
            rows.append(
                [e.name, ":".join(map(str, e.index)), str(e.closed), str(e.oracle), str(e.equal)]
            )
        return rows


def currents_exact(L: int, n: int, rates: RatePoint | None = None) -> CurrentReport:
    """All five current families, closed form against expectation oracle.

    Oracles: the bullet edge current from its rate-weighted occupation sum,
    the vertical box currents from the adjacency patterns that trigger the
    nonlocal moves, and both horizontal box currents from the signed
    boundary crossings of the displacement records (the per-row version
    counts only label-preserving crossings, whose row is well defined).
    Raises ObservableMismatch on any disagreement.
    """
    _check_dims(L, n)
    states, weights = _ensemble(L, n)
    transitions = _transitions_cache(L, n)
    z = partition_function(L, n)
    z_prev = partition_function(L - 1, n) if L - 1 >= n else None
    total = full_normalization(L, n)

    if rates is None:
        wvals: list = [m.as_polynomial() for m in weights]
        zero: object = Polynomial.zero(n)
        den = total

        def rate_val(symbol):
            return rate_symbol_poly(n, symbol)

        p_all: object = rate_product(n, "p").as_polynomial()
        q_all: object = rate_product(n, "q").as_polynomial()
        drift_val: object = drift(n)
        z_prev_val = z_prev
        prev_density = [box_density_numerator(L - 1, n, i) for i in range(1, n + 1)] if z_prev is not None else None
    else:
        wvals = [m.evaluate(rates) for m in weights]
        zero = Fraction(0)
        den = sum(wvals)

        def rate_val(symbol):
            return rates.rate(symbol)

        p_all = rate_product(n, "p").evaluate(rates)
        q_all = rate_product(n, "q").evaluate(rates)
        drift_val = p_all - q_all
        z_prev_val = z_prev.evaluate(rates) if z_prev is not None else None
        prev_density = (
            [box_density_numerator(L - 1, n, i).evaluate(rates) for i in range(1, n + 1)]
            if z_prev is not None
            else None
        )

    # Occupation-sum oracles.
    bullet_edge_num = [[zero] * L for _ in range(n)]
    v_up_num = [zero] * n
    v_down_num = [zero] * n
    # Crossing-sum oracles from displacement records.
    bullet_edge_cross = [[zero] * L for _ in range(n)]
    box_col_num = [zero] * L
    box_row_num = [[zero] * L for _ in range(n)]
    box_swap_num = [[zero] * L for _ in range(n)]

    for s_idx, (w, wv) in enumerate(zip(states, wvals)):
        letters = w.letters
        for x, letter in enumerate(letters):
            if letter <= 0:
                continue
            i = letter - 1
            right = letters[(x + 1) % L]
            left = letters[(x - 1) % L]
            if right < 0:
                term = wv * rate_val(("p", i + 1))
                bullet_edge_num[i][x] = bullet_edge_num[i][x] + term
                if right == -(i + 1):
                    v_up_num[i] = v_up_num[i] + term
            if left < 0:
                term = wv * rate_val(("q", i + 1))
                bullet_edge_num[i][(x - 1) % L] = bullet_edge_num[i][(x - 1) % L] - term
                if left == -(i + 1):
                    v_down_num[i] = v_down_num[i] + term
        for t in transitions[s_idx]:
            coef = wv * rate_val(t.rate_symbol)
            for d in t.displacements:
                for boundary, sign in displacement_crossings(d, L):
                    contrib = coef if sign > 0 else -coef
                    if d.species == "bullet":
                        row = d.label_from - 1
                        bullet_edge_cross[row][boundary] = bullet_edge_cross[row][boundary] + contrib
                    else:
                        box_col_num[boundary] = box_col_num[boundary] + contrib
                        if not d.jump:
                            row = d.label_from - 1
                            box_row_num[row][boundary] = box_row_num[row][boundary] + contrib
                            if t.kind in ("F1", "B1"):
                                box_swap_num[row][boundary] = box_swap_num[row][boundary] + contrib

    # The label-preserving swap part alone carries no net current; the whole
    # per-row horizontal box current comes from the shifting blocks.
    for i in range(n):
        for j in range(L):
            if box_swap_num[i][j] != zero:
                raise ObservableMismatch(
                    f"swap-only box crossings do not cancel at row {i + 1}, boundary {j + 1}"
                )
            if bullet_edge_cross[i][j] != bullet_edge_num[i][j]:
                raise ObservableMismatch(
                    f"bullet crossing rate differs from occupation oracle at ({i + 1},{j + 1})"
                )

    if z_prev_val is None:
        # No smaller torus exists (L = n); all currents vanish.
        closed_edge = closed_col = closed_up = closed_down = closed_net = zero
        closed_row = [zero] * n
    else:
        closed_edge = drift_val * z_prev_val
        closed_col = -n * drift_val * z_prev_val
        # whole-row totals, per unit Z rather than L * Z
        closed_up = p_all * z_prev_val
        closed_down = q_all * z_prev_val
        closed_net = drift_val * z_prev_val
        closed_row = [drift_val * prev_density[i] for i in range(n)]

    if rates is None:
        def over_full(num):
            return RationalValue(num, den)

        def over_z(num):
            return RationalValue(num, z)

    else:
        den_z = den / L

        def over_full(num):
            return num / den

        def over_z(num):
            return num / den_z

    # Oracle numerators sum over all L rotations, so they sit over the full
    # normalization L * Z; whole-row closed forms carry denominator Z.
    entries: list[ObservableEntry] = []
    for i in range(n):
        for j in range(L):
            entries.append(
                _entry("bullet_edge_current", (i + 1, j + 1), over_full(closed_edge), over_full(bullet_edge_num[i][j]))
            )
    for i in range(n):
        row_total = zero
        for j in range(L):
            row_total = row_total + bullet_edge_num[i][j]
        entries.append(
            _entry("bullet_row_current", (i + 1,), over_z(closed_net), over_full(row_total))
        )
    for j in range(L):
        entries.append(_entry("box_column_current", (j + 1,), over_full(closed_col), over_full(box_col_num[j])))
    for i in range(n):
        entries.append(_entry("box_vertical_up", (i + 1,), over_z(closed_up), over_full(v_up_num[i])))
        entries.append(_entry("box_vertical_down", (i + 1,), over_z(closed_down), over_full(v_down_num[i])))
        entries.append(
            _entry(
                "box_vertical_net",
                (i + 1,),
                over_z(closed_net),
                over_full(v_up_num[i] - v_down_num[i]),
            )
        )
    for i in range(n):
        for j in range(L):
            entries.append(
                _entry("box_row_current", (i + 1, j + 1), over_full(closed_row[i]), over_full(box_row_num[i][j]))
            )

    report = CurrentReport(L, n, "symbolic" if rates is None else "numeric", entries)
    if not report.ok:
        bad = next(e for e in report.entries if not e.equal)
        raise ObservableMismatch(f"current mismatch at ({L},{n}): {bad.name}{bad.index}")

    # Particle conservation across each column boundary: bullets and boxes
    # carry opposite net horizontal transport.
    for j in range(L):
        col_sum = box_col_num[j]
        for i in range(n):
            col_sum = col_sum + bullet_edge_num[i][j]
        if col_sum != zero:
            raise ObservableMismatch(f"flux balance fails across boundary {j + 1}")
    return report


def closed_currents(L: int, n: int, rates: RatePoint) -> dict[str, Fraction | list[Fraction]]:
    """Closed-form current values at a rate point, no ensemble enumeration.

    Cheap enough for lattices beyond exact-oracle reach; per-row horizontal
    box currents come back as a list indexed by row.
    """
    _check_dims(L, n)
    if L == n:
        zero = Fraction(0)
        return {
            "bullet_edge_current": zero,
            "bullet_row_current": zero,
            "box_column_current": zero,
            "box_vertical_up": zero,
            "box_vertical_down": zero,
            "box_vertical_net": zero,
            "box_row_current": [zero] * n,
        }
    z = partition_function(L, n).evaluate(rates)
    z_prev = partition_function(L - 1, n).evaluate(rates)
    p_all = rate_product(n, "p").evaluate(rates)
    q_all = rate_product(n, "q").evaluate(rates)
    d = p_all - q_all
    edge = d * z_prev / (L * z)
    row_currents = [
        d * box_density_numerator(L - 1, n, i).evaluate(rates) / (L * z)
        for i in range(1, n + 1)
    ]
    return {
        "bullet_edge_current": edge,
        "bullet_row_current": L * edge,
        "box_column_current": -n * edge,
        "box_vertical_up": p_all * z_prev / z,
        "box_vertical_down": q_all * z_prev / z,
        "box_vertical_net": d * z_prev / z,
        "box_row_current": row_currents,
    }


def closed_box_density(L: int, n: int, i: int, rates: RatePoint) -> Fraction:
    """Closed-form box density of row i at a rate point."""
    z = partition_function(L, n).evaluate(rates)
    return box_density_numerator(L, n, i).evaluate(rates) / (L * z)


@dataclass
class ScottRussellCertificate:
    L: int
    n: int
    rows: list[tuple[int, bool]]

    @property
    def ok(self) -> bool:
        return all(flag for _, flag in self.rows)


def scott_russell_check(L: int, n: int) -> ScottRussellCertificate:
    """Exact identity: the net vertical box current between adjacent rows
    equals the total horizontal bullet current of the row, both computed
    from their defining expectations (not from the closed forms)."""
    _check_dims(L, n)
    states, weights = _ensemble(L, n)
    wvals = [m.as_polynomial() for m in weights]
    zero = Polynomial.zero(n)
    vertical = [zero] * n
    bullet_total = [zero] * n
    for w, wv in zip(states, wvals):
        letters = w.letters
        for x, letter in enumerate(letters):
            if letter <= 0:
                continue
            i = letter - 1
            right = letters[(x + 1) % L]
            left = letters[(x - 1) % L]
            if right < 0:
                term = wv * rate_symbol_poly(n, ("p", i + 1))
                bullet_total[i] = bullet_total[i] + term
                if right == -(i + 1):
                    vertical[i] = vertical[i] + term
            if left < 0:
                term = wv * rate_symbol_poly(n, ("q", i + 1))
                bullet_total[i] = bullet_total[i] - term
                if left == -(i + 1):
                    vertical[i] = vertical[i] - term
    rows = [(i + 1, vertical[i] == bullet_total[i]) for i in range(n)]
    return ScottRussellCertificate(L, n, rows)
