from fractions import Fraction

import pytest

from dlcheck.lang import parse_program, used_vars
from dlcheck.oracle import (
    ConcreteFrame,
    OracleError,
    alpha_dependencies,
    alpha_pointwise,
    check_lemma1,
    collapse_rows,
    concrete_run,
    deps_equal,
    enumerate_independence,
)

FOUR_ROWS = {"data.csv": ConcreteFrame.of([3, 9, 9, 3])}

SPLIT_FIRST = parse_program("""
    data = read("data.csv")
    a = data.select[[0 .. 1]][]
    b = data.select[[2 .. 3]][]
    tr = normalize(a)
    te = normalize(b)
    train(tr)
    test(te)
""")

NORMALIZE_FIRST = parse_program("""
    data = read("data.csv")
    n = normalize(data)
    tr = n.select[[0 .. 1]][]
    te = n.select[[2 .. 3]][]
    train(tr)
    test(te)
""")


def cells(*rows):
    return frozenset(("data.csv", r) for r in rows)


def test_read_dependencies_are_per_row():
    deps = concrete_run(parse_program('x = read("data.csv")\ntrain(x)'), FOUR_ROWS)
    assert deps["x"] == {r: cells(r) for r in range(4)}


def test_split_first_gives_disjoint_deps():
    deps = concrete_run(SPLIT_FIRST, FOUR_ROWS)
    assert deps["tr"] == {0: cells(0, 1), 1: cells(0, 1)}
    assert deps["te"] == {0: cells(2, 3), 1: cells(2, 3)}
    assert check_lemma1(deps, {"tr"}, {"te"}) is True


def test_normalize_first_couples_everything():
    deps = concrete_run(NORMALIZE_FIRST, FOUR_ROWS)
    allc = cells(0, 1, 2, 3)
    assert deps["tr"] == {0: allc, 1: allc}
    assert deps["te"] == {0: allc, 1: allc}
    assert check_lemma1(deps, {"tr"}, {"te"}) is False


def test_lemma1_vacuous_on_empty_side():
    deps = concrete_run(SPLIT_FIRST, FOUR_ROWS)
    assert check_lemma1(deps, set(), {"te"}) is True


def test_concat_shifts_right_operand():
    p = parse_program("""
        x = read("a.csv")
        y = read("b.csv")
        z = concat(x, y)
        train(z)
    """)
    deps = concrete_run(p, {"a.csv": ConcreteFrame.of([3, 9]),
                            "b.csv": ConcreteFrame.of([9])})
    assert deps["z"] == {0: frozenset({("a.csv", 0)}),
                        1: frozenset({("a.csv", 1)}),
                        2: frozenset({("b.csv", 0)})}


def test_join_matches_on_shared_key_values():
    p = parse_program("""
        x = read("a.csv")
        y = read("b.csv")
        z = join(x, y)
        train(z)
    """)
    a = ConcreteFrame.of([[3, 1], [9, 2]], labels=("k", "u"))
    b = ConcreteFrame.of([[3, 7], [3, 8]], labels=("k", "w"))
    deps = concrete_run(p, {"a.csv": a, "b.csv": b})
    # only the key value 3 matches: left row 0 against both right rows
    assert deps["z"] == {
        0: frozenset({("a.csv", 0), ("b.csv", 0)}),
        1: frozenset({("a.csv", 0), ("b.csv", 1)}),
    }


def test_join_requires_shared_label():
    p = parse_program('x = read("a.csv")\ny = read("b.csv")\nz = join(x, y)')
    with pytest.raises(OracleError):
        concrete_run(p, {"a.csv": ConcreteFrame.of([1], labels=("u",)),
                         "b.csv": ConcreteFrame.of([1], labels=("w",))})


def test_select_out_of_range():
    p = parse_program('x = read("a.csv")\ny = x.select[[5]][]')
    with pytest.raises(OracleError):
        concrete_run(p, {"a.csv": ConcreteFrame.of([1, 2])})


def test_missing_input_frame():
    with pytest.raises(OracleError):
        concrete_run(parse_program('x = read("a.csv")'), {})


def test_select_with_repeated_indices():
    p = parse_program('x = read("a.csv")\ny = x.select[[1, 1, 0]][]\ntrain(y)')
    deps = concrete_run(p, {"a.csv": ConcreteFrame.of([5, 6])})
    assert deps["y"] == {0: frozenset({("a.csv", 1)}),
                        1: frozenset({("a.csv", 1)}),
                        2: frozenset({("a.csv", 0)})}


def test_other_is_per_row_identity():
    p = parse_program('x = read("a.csv")\ny = scrub(x)\ntrain(y)')
    deps = concrete_run(p, {"a.csv": ConcreteFrame.of([5, 6])})
    assert deps["y"] == deps["x"]


def test_minmax_normalization_values():
    p = parse_program('x = read("a.csv")\ny = normalize(x)\ntrain(y)')
    ts, ind, _ = enumerate_independence(p, {3, 9}, {"a.csv": (2, 1)})
    key = (("a.csv", ((Fraction(3),), (Fraction(9),))),)
    assert ts.entries[key]["y"] == ((Fraction(0),), (Fraction(1),))
    # all-equal column collapses to zero
    key2 = (("a.csv", ((Fraction(9),), (Fraction(9),))),)
    assert ts.entries[key2]["y"] == ((Fraction(0),), (Fraction(0),))


def test_enumerate_budget():
    p = parse_program('x = read("a.csv")\ntrain(x)')
    with pytest.raises(OracleError):
        enumerate_independence(p, {3, 9}, {"a.csv": (20, 1)}, budget=100)


def test_enumerate_independence_verdicts():
    _, ind_bad, wit = enumerate_independence(NORMALIZE_FIRST, {3, 9},
                                             {"data.csv": (4, 1)})
    assert ind_bad is False and wit
    _, ind_ok, wit_ok = enumerate_independence(SPLIT_FIRST, {3, 9},
                                               {"data.csv": (4, 1)})
    assert ind_ok is True and not wit_ok


def test_enumerate_ignores_inputs_when_unused():
    p = parse_program('x = read("a.csv")\ny = read("b.csv")\ntrain(y)\ntest(y)')
    # x never reaches a use; changing it never changes outputs
    ts, ind, _ = enumerate_independence(p, {3, 9}, {"a.csv": (2, 1), "b.csv": (1, 1)})
    assert ind is False  # y feeds both sides
    deps = alpha_pointwise(alpha_dependencies(ts))
    assert "a.csv" not in {f for rows in deps.values() for r in rows.values()
                           for f, _ in r}


def test_alpha_dependencies_split_first():
    ts, _, _ = enumerate_independence(SPLIT_FIRST, {3, 9}, {"data.csv": (4, 1)})
    deps = alpha_dependencies(ts)
    assert deps == frozenset(
        ("data.csv", i, v, j)
        for (i, v) in [(0, "tr"), (1, "tr"), (2, "te"), (3, "te")]
        for j in (0, 1)
    )


def test_alpha_pointwise_shapes():
    assert alpha_pointwise(frozenset()) == {}
    single = alpha_pointwise({("f", 0, "o", 1)})
    assert single == {"o": {1: frozenset({("f", 0)})}}


def test_constant_outputs_have_no_dependencies():
    # a one-row min-max normalization is identically zero, so no flip can
    # be observed and the trace table yields the empty dependency set
    p = parse_program("""
        x = read("a.csv")
        n = normalize(x)
        m = scrub(n)
        train(n)
        test(m)
    """)
    ts, _, _ = enumerate_independence(p, {3, 9}, {"a.csv": (1, 1)})
    assert alpha_dependencies(ts) == frozenset()


def test_unused_inputs_make_independence_vacuous():
    p = parse_program('x = read("a.csv")\ny = normalize(x)')
    ts, ind, wit = enumerate_independence(p, {3, 9}, {"a.csv": (2, 1)})
    assert ind is True and not wit


def test_alpha_route_matches_constructive_on_paper_programs():
    for p in (SPLIT_FIRST, NORMALIZE_FIRST):
        ts, _, _ = enumerate_independence(p, {3, 9}, {"data.csv": (4, 1)})
        via_alpha = alpha_pointwise(alpha_dependencies(ts))
        direct = concrete_run(p, FOUR_ROWS)
        assert deps_equal(via_alpha, direct, ["tr", "te"])


def test_constructive_overapproximates_on_degenerate_inputs():
    """A single-row min-max normalization is constant, so flipping the input
    cannot be observed; the constructive map still records the dependency.
    This is the direction in which trace-derived and constructive
    dependencies legitimately diverge."""
    p = parse_program("""
        x = read("a.csv")
        n = normalize(x)
        train(n)
        test(x)
    """)
    inputs = {"a.csv": ConcreteFrame.of([3])}
    deps = concrete_run(p, inputs)
    assert check_lemma1(deps, {"n"}, {"x"}) is False
    _, ind, _ = enumerate_independence(p, {3, 9}, {"a.csv": (1, 1)})
    assert ind is True  # the train side is the constant 0, so only test moves
    p2 = parse_program("""
        x = read("a.csv")
        n = normalize(x)
        m = scrub(n)
        train(n)
        test(m)
    """)
    deps2 = concrete_run(p2, inputs)
    assert check_lemma1(deps2, {"n"}, {"m"}) is False
    _, ind2, _ = enumerate_independence(p2, {3, 9}, {"a.csv": (1, 1)})
    assert ind2 is True  # both sides are the constant 0


def test_collapse_rows():
    deps = concrete_run(SPLIT_FIRST, FOUR_ROWS)
    flat = collapse_rows(deps)
    assert flat["tr"] == cells(0, 1)
    assert used_vars(SPLIT_FIRST) == ({"tr"}, {"te"})
