from fractions import Fraction

import pytest

from conftest import random_rate_point
from torus_asep.dynamics import build_generator, restrict_ta
from torus_asep.model import ColoredWord, iter_restricted
from torus_asep.stationary import (
    StationaryError,
    box_weight,
    config_weight,
    evans_product,
    exact_stationary,
    generator_rank_deficiency,
    lump,
    lumped_distribution,
    lumping_report,
    total_box_weight,
    verify_balance,
    weight_identities,
    weight_table,
)
from torus_asep.symbolic import Monomial, Polynomial, RatePoint, p_var, q_var

TAU = ColoredWord.from_text("B1 b3 b3 b4 B2 b2 B3 b3 B4 b1")


def _mono4(**kw):
    exps = [0] * 8
    for key, value in kw.items():
        exps[int(key[1]) - 1 + (0 if key[0] == "p" else 4)] = value
    return Monomial(4, tuple(exps))


def test_box_weight_displays():
    # n = 4, gap 1, summed over rows
    assert total_box_weight(1, 4) == (
        _mono4(p2=1, p3=1, p4=1).as_polynomial()
        + _mono4(q1=1, p2=1, p3=1).as_polynomial()
        + _mono4(q4=1, q1=1, p2=1).as_polynomial()
        + _mono4(q3=1, q4=1, q1=1).as_polynomial()
    )
    assert box_weight(1, 1, 1) == Monomial.unit(1)
    # row n in gap n keeps every forward rate but its own
    assert box_weight(3, 3, 3) == Monomial(3, (1, 1, 0, 0, 0, 0))
    assert total_box_weight(1, 2) == p_var(2, 2) + q_var(2, 1)
    assert total_box_weight(2, 2) == p_var(2, 1) + q_var(2, 2)


def test_box_weight_degree_and_shift():
    for n in (2, 3, 4, 5):
        for i in range(1, n + 1):
            for k in range(1, n + 1):
                assert box_weight(i, k, n).degree() == n - 1
        for k in range(1, n):
            assert total_box_weight(k, n).shift_rows(1) == total_box_weight(k + 1, n)


def test_box_weight_range_errors():
    with pytest.raises(ValueError):
        box_weight(0, 1, 2)
    with pytest.raises(ValueError):
        box_weight(1, 3, 2)


def test_config_weight_worked_example():
    assert config_weight(TAU) == _mono4(p1=2, p2=4, p3=2, p4=2, q1=3, q2=1, q3=1, q4=3)


def test_config_weight_degenerate_and_rotation_invariant():
    assert config_weight(ColoredWord(2, (1, 2))) == Monomial.unit(2)
    for w in iter_restricted(4, 2):
        weight = config_weight(w)
        for s in range(4):
            assert config_weight(w.rotate(s)) == weight


def test_weight_identities():
    for n in (1, 2, 3, 4):
        report = weight_identities(n)
        assert report.ok, (n, report.failures)


def test_determinant_identity_n2_display():
    from torus_asep.symbolic import poly_det, rate_product

    matrix = [[box_weight(i, k, 2).as_polynomial() for k in (1, 2)] for i in (1, 2)]
    drift = rate_product(2, "p").as_polynomial() - rate_product(2, "q").as_polynomial()
    assert poly_det(matrix) == drift


def test_exact_stationary_two_state():
    gen = build_generator(2, 1)
    table = exact_stationary(gen, RatePoint((Fraction(5),), (Fraction(2, 3),)))
    assert table.probabilities == [Fraction(1, 2), Fraction(1, 2)]


def test_exact_stationary_matches_weights_4_2():
    gen = build_generator(4, 2)
    rp = RatePoint((Fraction(1), Fraction(2)), (Fraction(3), Fraction(5)))
    table = exact_stationary(gen, rp)
    weights = [config_weight(w).evaluate(rp) for w in gen.states]
    total = sum(weights)
    assert sum(table.probabilities) == 1
    assert all(p * total == wv for p, wv in zip(table.probabilities, weights))
    assert generator_rank_deficiency(gen, rp) == 1


def test_exact_stationary_matches_weights_random(rng):
    gen = build_generator(5, 2)
    for _ in range(5):
        rp = random_rate_point(2, rng)
        table = exact_stationary(gen, rp)
        weights = [config_weight(w).evaluate(rp) for w in gen.states]
        total = sum(weights)
        assert all(p * total == wv for p, wv in zip(table.probabilities, weights))


def _gth_stationary(gen, rp):
    """Independent exact solver: state-censoring elimination on the jump
    rates (no subtraction on the diagonal, so no cancellation), then back
    substitution.  Dense Fractions; only usable for small chains."""
    size = gen.num_states
    rate = [[Fraction(0)] * size for _ in range(size)]
    for j, outs in enumerate(gen.transitions):
        for t in outs:
            rate[j][gen.index[t.target]] += rp.rate(t.rate_symbol)
    for s in range(size - 1, 0, -1):
        out_total = sum(rate[s][:s])
        for i in range(s):
            if rate[i][s]:
                scale = rate[i][s] / out_total
                for j in range(s):
                    if i != j and rate[s][j]:
                        rate[i][j] += scale * rate[s][j]
    x = [Fraction(0)] * size
    x[0] = Fraction(1)
    for s in range(1, size):
        out_total = sum(rate[s][:s])
        x[s] = sum(x[i] * rate[i][s] for i in range(s)) / out_total
    total = sum(x)
    return [v / total for v in x]


def test_exact_stationary_cross_checked_by_censoring(rng):
    for L, n in [(4, 2), (4, 3), (5, 2)]:
        gen = build_generator(L, n)
        rp = random_rate_point(n, rng)
        table = exact_stationary(gen, rp)
        assert table.probabilities == _gth_stationary(gen, rp)


def test_exact_stationary_requires_some_dynamics():
    gen = build_generator(3, 3)
    with pytest.raises(StationaryError):
        exact_stationary(gen, RatePoint((Fraction(1),) * 3, (Fraction(1),) * 3))


def test_exact_stationary_rejects_reducible_full_space():
    gen = build_generator(4, 2)
    with pytest.raises(StationaryError) as err:
        exact_stationary(gen, RatePoint((Fraction(1), Fraction(2)), (Fraction(0), Fraction(1))))
    assert "restrict" in str(err.value)


def test_exact_stationary_on_ta_restriction():
    rp = RatePoint((Fraction(2), Fraction(3)), (Fraction(0), Fraction(1)))
    states, cert = restrict_ta(4, 2, {1})
    assert cert.ok
    gen = build_generator(4, 2, rates=rp, states=states)
    table = exact_stationary(gen, rp)
    weights = [config_weight(w).evaluate(rp) for w in states]
    total = sum(weights)
    assert all(p * total == wv for p, wv in zip(table.probabilities, weights))


def test_symbolic_balance_small():
    for L, n in [(3, 2), (4, 2), (4, 3), (5, 2)]:
        report = verify_balance(L, n)
        assert report.ok, ((L, n), report.failures[:3])


def test_symbolic_balance_L6():
    for n in range(1, 7):
        report = verify_balance(6, n)
        assert report.ok, (6, n, report.failures[:3])


def test_numeric_balance(rng):
    rp = random_rate_point(3, rng)
    report = verify_balance(5, 3, rates=rp)
    assert report.ok and report.mode == "numeric"


def test_balance_trivial_no_boxes():
    report = verify_balance(3, 3)
    assert report.ok and report.num_states == 3


def test_balance_structure_of_adjacent_bullet_states():
    """Every (4,2) state with both bullets adjacent has exactly two incoming
    transitions, and their weighted inflow balances the (q1 + p2) outflow."""
    gen = build_generator(4, 2)
    incoming = {j: [] for j in range(gen.num_states)}
    for j, outs in enumerate(gen.transitions):
        for t in outs:
            incoming[gen.index[t.target]].append(t)
    weights = {w: config_weight(w).as_polynomial() for w in gen.states}
    checked = 0
    for j, w in enumerate(gen.states):
        if not w.is_restricted() or w.letters[1] != 2:
            continue
        checked += 1
        outs = gen.transitions[j]
        assert sorted(t.rate_symbol for t in outs) == [("p", 2), ("q", 1)]
        ins = incoming[j]
        assert len(ins) == 2
        from torus_asep.symbolic import rate_symbol_poly

        inflow = Polynomial.zero(2)
        for t in ins:
            inflow = inflow + weights[t.source] * rate_symbol_poly(2, t.rate_symbol)
        outflow = weights[w] * (q_var(2, 1) + p_var(2, 2))
        assert inflow == outflow
    assert checked == 4


def test_weight_table_normalization():
    table = weight_table(4, 2)
    from torus_asep.observables import partition_function

    assert table.normalization == 4 * partition_function(4, 2)
    rows = table.to_json_rows()
    assert len(rows) == 48 and "weight" in rows[0]


def test_stationary_table_export_and_lookup():
    gen = build_generator(3, 2)
    rp = RatePoint((Fraction(1), Fraction(2)), (Fraction(3), Fraction(5)))
    table = exact_stationary(gen, rp)
    rows = table.to_json_rows()
    assert len(rows) == 12
    assert sum(Fraction(row["probability"]) for row in rows) == 1
    word = ColoredWord.from_text("B1 B2 b1")
    # q2 / (L * Z) at these rates: 5 / (3 * 11)
    assert table.probability_of(word) == Fraction(5, 33)


def test_lump_gap_vector_example():
    # the ring configuration with gaps (3, 1, 2, 0) between consecutive bullets
    word = ColoredWord.from_text("B1 b1 b2 b3 B2 b4 B3 b1 b2 B4")
    psi = lump(word)
    assert psi.gap_vector() == (3, 1, 2, 0)
    assert psi.to_text() == "B1 . . . B2 . B3 . . B4"
    expected = (
        total_box_weight(1, 4) ** 3
        * total_box_weight(2, 4)
        * total_box_weight(3, 4) ** 2
    )
    assert evans_product(psi.gap_vector(), 4) == expected


def test_fiber_weight_sum_matches_product_form():
    """Summing state weights over one lumping fiber of the (10,4) system
    reproduces the product form for the gaps (3, 1, 2, 0)."""
    import itertools

    base = ColoredWord.from_text("B1 b1 b1 b1 B2 b1 B3 b1 b1 B4")
    box_positions = [x for x, c in enumerate(base.letters) if c < 0]
    total = Polynomial.zero(4)
    for labels in itertools.product((1, 2, 3, 4), repeat=len(box_positions)):
        letters = list(base.letters)
        for x, lab in zip(box_positions, labels):
            letters[x] = -lab
        total = total + config_weight(ColoredWord(4, tuple(letters))).as_polynomial()
    assert total == evans_product((3, 1, 2, 0), 4)


@pytest.mark.parametrize("L,n", [(4, 2), (5, 2), (4, 3)])
def test_lumping_report(L, n):
    import math

    report = lumping_report(L, n)
    assert report.ok
    assert report.num_fibers == L * math.comb(L - 1, n - 1)


def test_lumped_marginals_match_product_form():
    gen = build_generator(4, 2)
    rp = RatePoint((Fraction(1), Fraction(2)), (Fraction(3), Fraction(5)))
    table = exact_stationary(gen, rp)
    marginals = lumped_distribution(table)
    from torus_asep.observables import partition_function

    denom = 4 * partition_function(4, 2).evaluate(rp)
    for psi, prob in marginals.items():
        assert prob == evans_product(psi.gap_vector(), 2).evaluate(rp) / denom


def test_single_lumped_state_when_no_boxes():
    table = weight_table(3, 3)
    fibers = {lump(w) for w in table.states}
    assert len(fibers) == 3  # one per rotation; each fiber is a singleton
    report = lumping_report(3, 3)
    assert report.ok
