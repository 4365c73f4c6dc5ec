import pytest
from hypothesis import given, settings, strategies as st

from dlcheck.domains import (
    BOT_ROWS,
    BOT_SOURCE,
    ColumnAbs,
    EnumerationError,
    SourceAbs,
    TOP_COLS,
    TOP_ROWS,
    col_join,
    col_leq,
    col_meet,
    columns,
    df_constrain,
    df_join,
    df_meet,
    df_overlap,
    frame,
    gamma_rows,
    gamma_source,
    is_canonical,
    row_contains,
    row_index,
    row_join,
    row_leq,
    row_meet,
    row_unindex,
    rows,
    set_constrain,
    set_join,
    set_leq,
    set_meet,
    set_reduce,
    source_covers,
    src_join,
    src_leq,
    src_meet,
)
from dlcheck.lang import RowExpr


# -- columns -------------------------------------------------------------------

def test_col_meet_with_top():
    assert col_meet(TOP_COLS, columns("id")) == columns("id")
    assert col_meet(columns("id"), TOP_COLS) == columns("id")


def test_col_join():
    assert col_join(columns("id", "city"), columns("country")) == \
        columns("id", "city", "country")
    assert col_join(TOP_COLS, columns("x")) == TOP_COLS


def test_col_leq_bottom():
    for x in (TOP_COLS, columns(), columns("a")):
        assert col_leq(columns(), x)
    assert not col_leq(TOP_COLS, columns("a"))


# -- row intervals ---------------------------------------------------------------

def test_row_meet_examples():
    assert row_meet(rows(10, 14), rows(12, 15)) == rows(12, 14)
    assert row_meet(BOT_ROWS, rows(0, 3)) == BOT_ROWS


def test_row_join_example():
    assert row_join(rows(1, 10), rows(9, 12)) == rows(1, 12)


def test_row_index():
    assert row_index(rows(10, 14)) == rows(0, 4)
    assert row_index(TOP_ROWS) == TOP_ROWS
    assert row_index(rows(5, 5)) == rows(0, 0)
    assert row_index(BOT_ROWS) == BOT_ROWS


def test_row_unindex():
    assert row_unindex(rows(10, 14), rows(1, 3)) == rows(11, 13)
    r = rows(3, 17)
    assert row_unindex(r, row_index(r)) == r
    # symbolic upper bound flows through
    got = row_unindex(TOP_ROWS, rows(0, RowExpr.symbol("k")))
    assert got == rows(0, RowExpr.symbol("k"))


def test_row_unindex_clips_out_of_range():
    assert row_unindex(rows(10, 14), rows(2, 9)) == rows(12, 14)


def test_row_unindex_matches_positional_selection():
    # brute force: selecting index window [i, j] of the concrete rows l..u
    # must land exactly on the surviving positions, shifted by l
    for l in range(0, 6):
        for u in range(l, 8):
            for i in range(0, 9):
                for j in range(i, 10):
                    got = row_unindex(rows(l, u), rows(i, j))
                    kept = [p for p in range(i, j + 1) if p <= u - l]
                    if not kept:
                        assert got.is_bot
                    else:
                        assert gamma_rows(got) == \
                            set(range(l + kept[0], l + kept[-1] + 1))


def test_symbolic_disjointness():
    s = RowExpr.symbol("s")
    assert row_meet(rows(s.shift(1), "inf"), rows(0, s)) == BOT_ROWS
    # different symbols cannot be separated
    assert row_meet(rows(RowExpr.symbol("a"), "inf"),
                    rows(0, RowExpr.symbol("b"))) != BOT_ROWS


# -- frames ---------------------------------------------------------------------

def test_overlap_verdicts():
    a = frame("file", {"id", "city"}, 10, 14)
    assert df_overlap(a, frame("file", {"country"}, 12, 15)) is False
    assert df_overlap(a, frame("file", {"id"}, 12, 15)) is True
    assert df_overlap(a, a) is True
    assert df_overlap(a, frame("other", {"id"}, 10, 14)) is False


def test_join_meet_constrain_goldens():
    a = frame("file", {"id", "city"}, 10, 14)
    b = frame("file", {"country"}, 12, 15)
    c = frame("file", {"id"}, 12, 15)
    j = df_join(a, b)
    assert j == frame("file", {"id", "city", "country"}, 10, 15)
    assert df_meet(a, c) == frame("file", {"id"}, 12, 14)
    assert df_constrain(j, columns("city"), rows(1, 2)) == frame("file", {"city"}, 11, 12)
    assert df_join(a, a) == a


def test_cross_file_join_rejected():
    from dlcheck.domains import DomainError
    with pytest.raises(DomainError):
        df_join(frame("a", None, 0, 1), frame("b", None, 0, 1))


def test_constrain_no_op():
    a = frame("f", {"x"}, 4, 9)
    assert df_constrain(a, TOP_COLS, row_index(a.rows)) == a


def test_constrain_empty_results():
    a = frame("f", {"x"}, 4, 9)
    assert df_constrain(a, columns("y"), rows(0, 2)) is None
    assert df_constrain(a, TOP_COLS, rows(20, 30)) is None


def test_constrain_symbolic():
    got = df_constrain(frame("f"), columns("y"), rows(0, RowExpr.symbol("s")))
    assert got == frame("f", {"y"}, 0, RowExpr.symbol("s"))


# -- canonical sets ---------------------------------------------------------------

def test_reduce_golden():
    s = {frame("file1", {"id"}, 1, 10), frame("file1", {"id"}, 9, 12),
         frame("file2", {"name"}, 0, 100), frame("file3", {"zip"}, 0, 100)}
    assert set_reduce(s, "join") == frozenset({
        frame("file1", {"id"}, 1, 12),
        frame("file2", {"name"}, 0, 100),
        frame("file3", {"zip"}, 0, 100),
    })


def test_reduce_fixpoint_on_canonical_set():
    s = frozenset({frame("a", None, 0, 3), frame("a", None, 5, 9)})
    assert set_reduce(s, "join") == s


def test_reduce_chained_overlaps_collapse():
    s = {frame("f", None, 0, 2), frame("f", None, 2, 4), frame("f", None, 4, 8)}
    assert set_reduce(s, "join") == frozenset({frame("f", None, 0, 8)})


def test_set_join_of_published_inputs():
    s1 = frozenset({frame("file1", {"id"}, 1, 10), frame("file2", {"name"}, 0, 100)})
    s2 = frozenset({frame("file1", {"id"}, 9, 12), frame("file3", {"zip"}, 0, 100)})
    assert set_join(s1, s2) == frozenset({
        frame("file1", {"id"}, 1, 12),
        frame("file2", {"name"}, 0, 100),
        frame("file3", {"zip"}, 0, 100),
    })


def test_set_join_neutral_element():
    s = frozenset({frame("f", {"a"}, 0, 5)})
    assert set_join(s, frozenset()) == s
    assert set_leq(s, set_join(s, frozenset({frame("g", None, 0, 1)})))


def test_set_meet_pairs_overlapping_frames():
    a = frozenset({frame("f", {"id"}, 0, 5)})
    b = frozenset({frame("f", {"id"}, 3, 9)})
    assert set_meet(a, b) == frozenset({frame("f", {"id"}, 3, 5)})


def test_set_constrain_drops_empties():
    s = frozenset({frame("f", {"a"}, 0, 3), frame("f", {"b"}, 10, 20)})
    got = set_constrain(s, columns("a"), TOP_ROWS)
    assert got == frozenset({frame("f", {"a"}, 0, 3)})


# -- sources ---------------------------------------------------------------------

def test_src_join_taint_or():
    a = SourceAbs(frozenset({frame("f", None, 0, 1)}), False)
    b = SourceAbs(frozenset({frame("g", None, 0, 1)}), True)
    j = src_join(a, b)
    assert j.tainted
    assert j.frames == a.frames | b.frames


def test_src_leq_bottom():
    x = SourceAbs(frozenset({frame("f", None, 0, 9)}), True)
    assert src_leq(BOT_SOURCE, x)
    assert src_meet(x, x) == x


def test_gamma_source():
    a = SourceAbs(frozenset({frame("f", None, 0, 1)}), False)
    assert gamma_source(a) == {("f", 0), ("f", 1)}
    assert gamma_source(BOT_SOURCE) == frozenset()
    b = SourceAbs(frozenset({frame("f", {"c"}, 2, 3), frame("g", None, 0, 0)}), True)
    assert gamma_source(b) == {("f", 2), ("f", 3), ("g", 0)}


def test_gamma_rejects_symbolic_and_infinite():
    with pytest.raises(EnumerationError):
        gamma_rows(TOP_ROWS)
    with pytest.raises(EnumerationError):
        gamma_rows(rows(0, RowExpr.symbol("s")))


def test_source_covers_infinite():
    a = SourceAbs(frozenset({frame("f", None, 0, "inf")}), False)
    assert source_covers(a, "f", 12345)
    assert not source_covers(a, "g", 0)


# -- randomized lattice laws ------------------------------------------------------

_exprs = st.one_of(
    st.integers(0, 12).map(RowExpr.const),
    st.tuples(st.sampled_from(["s", "t"]), st.integers(0, 6)).map(
        lambda p: RowExpr.symbol(*p)),
)


@st.composite
def _intervals(draw):
    if draw(st.integers(0, 9)) == 0:
        return BOT_ROWS
    lo = draw(_exprs)
    if draw(st.booleans()):
        hi = RowExpr(inf=True)
    else:
        from dlcheck.lang import expr_le
        hi = draw(_exprs)
        if expr_le(lo, hi) is False:
            lo, hi = hi, lo
    return rows(lo, hi)


_cols = st.one_of(
    st.just(TOP_COLS),
    st.sets(st.sampled_from(["a", "b", "c"])).map(lambda s: ColumnAbs(frozenset(s))),
)


@st.composite
def _frames(draw):
    from dlcheck.domains import AbsDataFrame
    cols = draw(_cols)
    iv = draw(_intervals())
    if cols.is_empty or iv.is_bot:
        return None
    return AbsDataFrame(draw(st.sampled_from(["f", "g"])), cols, iv)


_frame_sets = st.lists(_frames(), max_size=4).map(
    lambda fs: set_reduce([f for f in fs if f is not None], "join"))
_sources = st.tuples(_frame_sets, st.booleans()).map(lambda p: SourceAbs(*p))


@given(_frame_sets, _frame_sets)
def test_set_join_commutative_and_upper_bound(a, b):
    j = set_join(a, b)
    assert j == set_join(b, a)
    assert set_leq(a, j) and set_leq(b, j)
    assert is_canonical(j)


@given(_frame_sets)
def test_set_join_idempotent(a):
    assert set_join(a, a) == a


@settings(max_examples=60)
@given(_frame_sets, _frame_sets, _frame_sets)
def test_set_join_orderings_bound_all_operands(a, b, c):
    # With incomparable symbolic bounds the merge order can affect how far
    # the conservative hull widens, so the two orders need not coincide;
    # both must still sit above every operand.
    left = set_join(set_join(a, b), c)
    right = set_join(a, set_join(b, c))
    for s in (a, b, c):
        assert set_leq(s, left) and set_leq(s, right)


@settings(max_examples=60)
@given(_frame_sets, _frame_sets, _frame_sets)
def test_set_join_associative_on_concrete_bounds(a, b, c):
    def concrete(s):
        return all(f.rows.lo.is_const and (f.rows.hi.is_const or f.rows.hi.inf)
                   for f in s)
    if not (concrete(a) and concrete(b) and concrete(c)):
        return
    left = set_join(set_join(a, b), c)
    right = set_join(a, set_join(b, c))
    assert set_leq(left, right) and set_leq(right, left)


@given(_sources, _sources)
def test_src_join_is_least_upper_boundish(a, b):
    j = src_join(a, b)
    assert src_leq(a, j) and src_leq(b, j)


@given(_frame_sets)
def test_constrain_is_reductive(a):
    """Constraining never invents coverage: the result stays below the input."""
    assert set_leq(set_constrain(a, columns("a", "b"), rows(0, 5)), a)
    assert set_constrain(a, TOP_COLS, TOP_ROWS) == a


@given(_sources, _sources)
def test_gamma_monotone(a, b):
    try:
        ga, gb = gamma_source(a), gamma_source(b)
    except EnumerationError:
        return
    if src_leq(a, b):
        assert ga <= gb


@given(_intervals(), _intervals())
def test_row_meet_overapproximates_intersection(a, b):
    m = row_meet(a, b)
    for n in range(0, 25):
        if row_contains(a, n) and row_contains(b, n):
            assert row_contains(m, n)


@given(_intervals())
def test_unindex_index_identity(r):
    if r.is_bot:
        return
    assert row_unindex(r, row_index(r)) == r


@given(_intervals(), _intervals())
def test_row_leq_consistent_with_join(a, b):
    j = row_join(a, b)
    assert row_leq(a, j) and row_leq(b, j)
