from fractions import Fraction

import pytest

from conftest import random_rate_point
from torus_asep.observables import (
    box_density_numerator,
    brute_force_partition_function,
    closed_box_density,
    closed_currents,
    compositions,
    currents_exact,
    densities,
    drift,
    partition_function,
    partition_function_special,
    scott_russell_check,
)
from torus_asep.symbolic import (
    Monomial,
    Polynomial,
    RatePoint,
    p_var,
    pq_integer,
    q_var,
    rect_schur,
)


def _w(k):
    return [p_var(2, 2) + q_var(2, 1), p_var(2, 1) + q_var(2, 2)][k - 1]


def test_partition_function_displays():
    assert partition_function(4, 2) == _w(1) ** 2 + _w(1) * _w(2) + _w(2) ** 2
    assert partition_function(3, 2) == p_var(2, 1) + p_var(2, 2) + q_var(2, 1) + q_var(2, 2)
    assert partition_function(2, 2) == Polynomial.one(2)
    for n in (1, 2, 3):
        assert partition_function(n, n) == Polynomial.one(n)


def test_partition_function_degree_and_generating_series():
    z = partition_function(6, 3)
    assert z.is_homogeneous(3 * 2)
    assert len(list(compositions(3, 3))) == 10


@pytest.mark.parametrize("L,n", [(4, 2), (5, 2), (5, 3), (6, 2), (6, 4)])
def test_partition_function_matches_brute_force(L, n):
    assert partition_function(L, n) == brute_force_partition_function(L, n)


def test_special_case_identical_4_2():
    cert = partition_function_special(4, 2, "identical")
    assert cert.substituted == 3 * pq_integer(2) ** 2
    value = cert.substituted.evaluate(RatePoint((Fraction(2),), (Fraction(1),)))
    assert value == 27  # 3 (p + q)^2 at p=2, q=1


def test_special_case_symmetric_4_2():
    cert = partition_function_special(4, 2, "symmetric")
    assert cert.substituted == 3 * (p_var(2, 1) + p_var(2, 2)) ** 2


def test_special_case_no_boxes():
    for case in ("identical", "symmetric", "totally_asymmetric"):
        cert = partition_function_special(3, 3, case)
        assert cert.equal
        assert cert.substituted.degree() == 0


def test_special_case_totally_asymmetric_schur():
    cert = partition_function_special(5, 3, "totally_asymmetric")
    assert cert.extra["schur_form"]
    assert cert.closed_form == rect_schur(5, 3)


@pytest.mark.parametrize("L", [2, 3, 4, 5])
def test_special_cases_small(L):
    for n in range(1, min(L, 4) + 1):
        for case in ("identical", "symmetric", "totally_asymmetric"):
            assert partition_function_special(L, n, case).equal


def test_box_density_numerator_display_4_2():
    def mono(**kw):
        exps = [0] * 4
        for key, val in kw.items():
            exps[int(key[1]) - 1 + (0 if key[0] == "p" else 2)] = val
        return Monomial(2, tuple(exps)).as_polynomial()

    expected = (
        2 * mono(p2=2)
        + 2 * mono(p1=1, q2=1)
        + 2 * mono(p2=1, q1=1)
        + 2 * mono(p2=1, q2=1)
        + 2 * mono(q2=2)
        + mono(p1=1, p2=1)
        + mono(q1=1, q2=1)
    )
    assert box_density_numerator(4, 2, 1) == expected
    # and the same value from the recursion the closed form uses
    z32 = partition_function(3, 2)
    direct = (p_var(2, 2) + q_var(2, 2)) * z32 + (
        p_var(2, 2) * _w(1) + q_var(2, 2) * _w(2)
    )
    assert expected == direct


@pytest.mark.parametrize("L,n", [(3, 2), (4, 2), (4, 3), (5, 2), (5, 3)])
def test_densities_symbolic(L, n):
    report = densities(L, n)
    assert report.ok


def test_density_normalization_per_column(rng):
    rp = random_rate_point(3, rng)
    report = densities(5, 3, rp)
    for j in range(1, 6):
        total = Fraction(0)
        for i in range(1, 4):
            total += report.entry("bullet_density", i, j).oracle
            total += report.entry("box_density", i, j).oracle
        assert total == 1


def test_density_normalization_per_column_symbolic():
    report = densities(4, 2)
    for j in range(1, 5):
        total = Polynomial.zero(2)
        den = report.entry("bullet_density", 1, j).oracle.den
        for i in (1, 2):
            total = total + report.entry("bullet_density", i, j).oracle.num
            total = total + report.entry("box_density", i, j).oracle.num
        assert total == den


def test_density_row_shift_covariance():
    # pushing every rate label down one row moves the density one row up
    for i in (1, 2):
        assert box_density_numerator(5, 3, i).shift_rows(1) == box_density_numerator(5, 3, i + 1)


def test_density_numeric_matches_formula(rng):
    rp = random_rate_point(3, rng)
    report = densities(5, 3, rp)
    assert report.ok
    assert report.entry("bullet_density", 2, 3).closed == Fraction(1, 5)
    assert report.entry("box_density", 1, 1).closed == closed_box_density(5, 3, 1, rp)


@pytest.mark.parametrize("L,n", [(3, 2), (4, 2), (4, 3), (5, 2), (5, 3), (3, 3)])
def test_currents_symbolic(L, n):
    report = currents_exact(L, n)
    assert report.ok


def test_worked_current_numerator_4_2():
    report = currents_exact(4, 2)
    entry = report.entry("bullet_edge_current", 1, 1)
    z32 = p_var(2, 1) + p_var(2, 2) + q_var(2, 1) + q_var(2, 2)
    assert entry.closed.num == drift(2) * z32
    assert entry.closed.den == 4 * partition_function(4, 2)


def test_identical_rates_current_value():
    for L, n in [(4, 2), (5, 2), (5, 3), (6, 3)]:
        p, q = Fraction(7, 5), Fraction(1, 3)
        rp = RatePoint((p,) * n, (q,) * n)
        values = closed_currents(L, n, rp)
        assert values["bullet_edge_current"] == (p - q) * (L - n) / (L * (L - 1))


def test_identical_rates_current_symbolically():
    import math

    # cross-multiplied form of the constant-rate reduction of the edge current
    for L, n in [(4, 2), (5, 3), (6, 4)]:
        lhs = (
            math.comb(L - 2, n - 1)
            * (pq_integer(n) ** (L - n - 1))
            * (Polynomial(1, {(1, 0): Fraction(1)}) - Polynomial(1, {(0, 1): Fraction(1)}))
            * pq_integer(n)
            * L
            * (L - 1)
        )
        rhs = (
            (L - n)
            * L
            * math.comb(L - 1, n - 1)
            * (Polynomial(1, {(1, 0): Fraction(1)}) - Polynomial(1, {(0, 1): Fraction(1)}))
            * (pq_integer(n) ** (L - n))
        )
        assert lhs == rhs


def test_symmetric_rates_kill_currents(rng):
    rp3 = random_rate_point(3, rng)
    rp = RatePoint(rp3.p, rp3.p)
    values = closed_currents(5, 3, rp)
    assert values["bullet_edge_current"] == 0
    assert values["box_vertical_net"] == 0
    assert all(v == 0 for v in values["box_row_current"])
    assert values["box_vertical_up"] == values["box_vertical_down"] != 0


def test_currents_numeric_matches_closed(rng):
    rp = random_rate_point(3, rng)
    report = currents_exact(5, 3, rp)
    values = closed_currents(5, 3, rp)
    assert report.entry("bullet_edge_current", 2, 4).closed == values["bullet_edge_current"]
    assert report.entry("bullet_row_current", 1).closed == values["bullet_row_current"]
    assert report.entry("box_column_current", 3).closed == values["box_column_current"]
    assert report.entry("box_vertical_up", 2).closed == values["box_vertical_up"]
    assert report.entry("box_row_current", 2, 1).closed == values["box_row_current"][1]


def test_currents_no_boxes_all_zero():
    report = currents_exact(3, 3)
    for entry in report.entries:
        assert entry.oracle.num == Polynomial.zero(3)


@pytest.mark.parametrize("L,n", [(4, 2), (5, 2), (5, 3)])
def test_scott_russell(L, n):
    cert = scott_russell_check(L, n)
    assert cert.ok


def test_scott_russell_trivial():
    assert scott_russell_check(3, 3).ok


def test_report_serialization():
    report = currents_exact(3, 2)
    rows = report.to_json_rows()
    assert all(row["equal"] for row in rows)
    csv_rows = report.to_csv_rows()
    assert csv_rows[0] == ["observable", "index", "closed_form", "oracle", "equal"]
    dens = densities(3, 2)
    assert all(row["equal"] for row in dens.to_json_rows())


def test_vertical_current_contributions_4_2():
    """The restricted states feeding the upward (bullet-then-box, same row)
    and downward patterns of row 1 carry the displayed weight sums; each
    rotation contributes equally, giving the closed forms."""
    from torus_asep.model import iter_restricted
    from torus_asep.stationary import config_weight

    up = Polynomial.zero(2)
    down = Polynomial.zero(2)
    for w in iter_restricted(4, 2):
        letters = w.letters
        wt = config_weight(w).as_polynomial()
        for x, letter in enumerate(letters):
            if letter == 1:
                if letters[(x + 1) % 4] == -1:
                    up = up + wt
                if letters[(x - 1) % 4] == -1:
                    down = down + wt
    p1, p2, q1, q2 = p_var(2, 1), p_var(2, 2), q_var(2, 1), q_var(2, 2)
    assert p1 * up == p2 * (p1 * q2 + p1 * p1 + p1 * p2 + p1 * q1)
    assert q1 * down == q1 * (q2 * q2 + p1 * q2 + p2 * q2 + q1 * q2)
    z3 = partition_function(3, 2)
    assert p1 * up == p1 * p2 * z3
    assert q1 * down == q1 * q2 * z3
    # all four rotations contribute the same, recovering the closed totals
    report = currents_exact(4, 2)
    assert report.entry("box_vertical_up", 1).oracle.num == 4 * (p1 * up)
    assert report.entry("box_vertical_down", 1).oracle.num == 4 * (q1 * down)
