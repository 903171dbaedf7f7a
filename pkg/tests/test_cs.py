import random

import pytest

from zkgraph.cs import (
    Cell,
    CellRef,
    Const,
    ConstraintTable,
    build_running_product,
    next_pow2,
)
from zkgraph.errors import (
    BadArity,
    BadGate,
    ChallengesMissing,
    CommitmentsMissing,
    DivisionByZeroDenominator,
    RowsNotPowerOfTwo,
    TooManyRows,
    UnknownColumn,
)
from zkgraph.field import MODULUS

from helpers import fibonacci_table, permutation_table


# --- construction -----------------------------------------------------------

def test_rows_must_be_power_of_two():
    ConstraintTable(1)
    ConstraintTable(8)
    with pytest.raises(RowsNotPowerOfTwo):
        ConstraintTable(6)
    with pytest.raises(RowsNotPowerOfTwo):
        ConstraintTable(0)


def test_empty_table_satisfied():
    t = ConstraintTable(1)
    assert t.check_satisfied().satisfied


def test_lookup_arity_mismatch():
    t = ConstraintTable(4)
    a = t.add_advice()
    b = t.add_advice()
    c = t.add_advice()
    with pytest.raises(BadArity):
        t.add_lookup("bad", [Cell(a), Cell(b)], [a, b, c])


def test_unknown_column_rejected():
    t = ConstraintTable(4)
    other = ConstraintTable(4)
    foreign = other.add_advice()
    with pytest.raises(UnknownColumn):
        t.assign_column(foreign, [1])
    sel_foreign = other.add_fixed([1, 0, 0, 0])
    with pytest.raises(UnknownColumn):
        t.add_gate("g", sel_foreign, Const(1))


def test_assignment_limits():
    t = ConstraintTable(4)
    a = t.add_advice()
    with pytest.raises(TooManyRows):
        t.assign_column(a, [1, 2, 3, 4, 5])
    t.assign_column(a, [1, 2])
    assert t.columns[a] == [1, 2, 0, 0]


def test_gate_validation():
    t = ConstraintTable(8)
    a = t.add_advice()
    sel = t.add_fixed([1] * 8)
    with pytest.raises(BadGate):
        t.add_gate("rot", sel, Cell(a, 3))
    e = Cell(a) * Cell(a) * Cell(a) * Cell(a) * Cell(a)
    with pytest.raises(BadGate):
        t.add_gate("deg", sel, e)
    with pytest.raises(BadGate):
        t.add_gate("sel-not-fixed", a, Cell(a))


def test_fibonacci_table_shape():
    t = fibonacci_table()
    assert len(t.decl_order) == 5  # 3 advice + 1 selector + 1 instance
    assert len(t.gates) == 1


# --- fibonacci smoke circuit -------------------------------------------------

def test_fibonacci_honest():
    assert fibonacci_table(21).check_satisfied().satisfied


def test_fibonacci_forged_result():
    report = fibonacci_table(22).check_satisfied()
    assert not report.satisfied
    found = [f for f in report.failures if f.kind in ("copy", "instance") and f.row == 7]
    assert found, report.failures


def test_fibonacci_broken_wiring():
    t = fibonacci_table()
    b = t._fib_cols[1]
    t.set_cell(b, 3, 99)
    report = t.check_satisfied()
    assert not report.satisfied
    kinds = {f.kind for f in report.failures}
    assert "gate" in kinds or "copy" in kinds


def test_fibonacci_gate_violation_row():
    t = fibonacci_table()
    c = t._fib_cols[2]
    t.set_cell(c, 4, 999)
    report = t.check_satisfied()
    gate_rows = [f.row for f in report.failures if f.kind == "gate"]
    assert 4 in gate_rows


# --- running product ---------------------------------------------------------

def test_running_product_identical():
    z = build_running_product([4, 7], [4, 7], beta=12345)
    assert z[0] == 1 and z[2] == 1


def test_running_product_permuted():
    z = build_running_product([4, 7], [7, 4], beta=98765)
    assert z[2] == 1


def test_running_product_mismatch_all_betas():
    rng = random.Random(0xBEEF)
    for _ in range(1000):
        beta = rng.randrange(MODULUS)
        if (4 + beta) % MODULUS == 0 or (8 + beta) % MODULUS == 0:
            continue
        z = build_running_product([4, 7], [4, 8], beta)
        assert z[2] != 1


def test_running_product_zero_denominator():
    with pytest.raises(DivisionByZeroDenominator):
        build_running_product([1, 2], [3, MODULUS - 5], beta=5)


# --- commitments & challenges -------------------------------------------------

def test_commitments_deterministic():
    t1, t2 = fibonacci_table(), fibonacci_table()
    assert t1.commit_columns() == t2.commit_columns()


def test_commitments_differ_on_cell():
    t1, t2 = fibonacci_table(), fibonacci_table()
    a = t2._fib_cols[0]
    t2.set_cell(a, 5, 12345)
    c1, c2 = t1.commit_columns(), t2.commit_columns()
    assert c1[0] != c2[0]
    assert c1[1:] == c2[1:]


def test_empty_column_commitment_defined():
    t = ConstraintTable(1)
    t.add_advice()
    coms = t.commit_columns()
    assert len(coms) == 1 and len(coms[0]) == 32


def test_challenges_deterministic():
    t1, t2 = fibonacci_table(), fibonacci_table()
    assert t1.derive_challenges(t1.commit_columns()) == t2.derive_challenges(t2.commit_columns())


def test_challenges_need_all_commitments():
    t = fibonacci_table()
    with pytest.raises(CommitmentsMissing):
        t.derive_challenges(t.commit_columns()[:-1])


def test_challenges_change_on_witness_flip():
    rng = random.Random(7)
    base = fibonacci_table()
    ref = base.derive_challenges(base.commit_columns())
    for _ in range(100):
        t = fibonacci_table()
        col = t._fib_cols[rng.randrange(3)]
        row = rng.randrange(8)
        t.set_cell(col, row, (t.cell(col, row) + rng.randrange(1, MODULUS)) % MODULUS)
        assert t.derive_challenges(t.commit_columns()) != ref


def test_challenges_defined_for_empty_table():
    t = ConstraintTable(1)
    alpha, beta = t.derive_challenges([])
    assert 0 <= alpha < MODULUS and 0 <= beta < MODULUS


def test_check_requires_challenges_when_perm_present():
    t = ConstraintTable(4)
    cols = [t.add_advice() for _ in range(5)]
    t.add_permutation("p", (cols[0], cols[1]), (cols[2], cols[3]), cols[4])
    with pytest.raises(ChallengesMissing):
        t.check_satisfied()


# --- permutation argument -----------------------------------------------------

def test_perm_equal_pairs_accepted():
    t = permutation_table([(4, 7), (1, 2)], [(1, 2), (4, 7)])
    assert t.check_satisfied().satisfied


def test_perm_unequal_rejected():
    t = permutation_table([(4, 7), (1, 2)], [(1, 2), (4, 8)])
    report = t.check_satisfied()
    assert not report.satisfied
    assert any(f.kind == "perm" for f in report.failures)


def test_perm_count_mismatch_rejected():
    t = permutation_table([(4, 7)], [(4, 7), (4, 7)])
    report = t.check_satisfied()
    assert not report.satisfied
    assert any("counts differ" in f.detail for f in report.failures)


def test_perm_property_small():
    rng = random.Random(0xA11CE)
    for _ in range(100):
        n = rng.randrange(1, 16)
        pairs = [(rng.randrange(2**16), rng.randrange(2**16)) for _ in range(n)]
        shuffled = pairs[:]
        rng.shuffle(shuffled)
        assert permutation_table(pairs, shuffled).check_satisfied().satisfied
        tampered = shuffled[:]
        i = rng.randrange(n)
        tampered[i] = (tampered[i][0], (tampered[i][1] + 1) % 2**16)
        if sorted(tampered) == sorted(pairs):
            continue
        assert not permutation_table(pairs, tampered).check_satisfied().satisfied


def test_perm_full_table_wraparound():
    # accumulator occupies every row: the final step wraps virtually
    pairs = [(i, i + 1) for i in range(7)]
    t = permutation_table(pairs, list(reversed(pairs)))
    assert t.n_rows == 8
    assert t.check_satisfied().satisfied


def test_compression_collision_free():
    rng = random.Random(0xC0FFEE)
    for _ in range(100_000):
        alpha = rng.randrange(MODULUS)
        a, b = rng.randrange(2**16), rng.randrange(2**16)
        c, d = rng.randrange(2**16), rng.randrange(2**16)
        if (a, b) == (c, d):
            continue
        assert (a + alpha * b) % MODULUS != (c + alpha * d) % MODULUS


# --- lookups -------------------------------------------------------------------

def test_lookup_failure_names_index_and_row():
    t = ConstraintTable(4)
    x = t.add_advice()
    y = t.add_advice()
    ta = t.add_fixed([1, 3, 0, 0])
    tb = t.add_fixed([2, 4, 0, 0])
    sel = t.add_fixed([1, 0, 0, 0])
    t.assign_column(x, [9])
    t.assign_column(y, [9])
    t.add_lookup("pairs", [Cell(x), Cell(y)], [ta, tb], sel)
    report = t.check_satisfied()
    assert not report.satisfied
    f = report.failures[0]
    assert f.kind == "lookup" and f.index == 0 and f.row == 0
    assert "(9, 9)" in f.detail


def test_lookup_selector_gating():
    t = ConstraintTable(4)
    x = t.add_advice()
    ta = t.add_fixed([5, 6, 0, 0])
    sel = t.add_fixed([1, 1, 0, 0])
    t.assign_column(x, [5, 6, 99, 99])  # rows 2-3 unselected
    t.add_lookup("vals", [Cell(x)], [ta], sel)
    assert t.check_satisfied().satisfied


# --- misc checker behavior ------------------------------------------------------

def test_failures_monotone():
    t = fibonacci_table(22)
    before = {f.as_tuple() for f in t.check_satisfied().failures}
    sel = t._fib_cols[3]
    a = t._fib_cols[0]
    t.add_gate("always-broken", sel, Cell(a) + 1)
    after = {f.as_tuple() for f in t.check_satisfied().failures}
    assert before <= after
    assert len(after) > len(before)


def test_verdict_serialization_deterministic():
    r1 = fibonacci_table(22).check_satisfied()
    r2 = fibonacci_table(22).check_satisfied()
    assert r1.to_json() == r2.to_json()


def test_next_pow2():
    assert [next_pow2(n) for n in (0, 1, 2, 3, 8, 9)] == [1, 1, 2, 4, 8, 16]
