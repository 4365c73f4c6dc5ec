"""Provenance lattices used by the analyzer.

The stack, bottom-up: column abstractions (finite label sets plus a top
element), row intervals over the naturals with possibly-symbolic bounds,
per-file abstract frames, canonical sets of pairwise non-overlapping
frames, and the source abstraction that pairs a frame set with a taint
flag.

Symbolic bounds make comparisons three-valued.  Unknown comparisons are
resolved conservatively: overlap tests answer "may overlap", join bounds
widen to the enclosing hull (0 below, infinity above), and meet bounds
keep either operand (both soundly over-approximate an intersection).
"""

from __future__ import annotations

from dataclasses import dataclass

from .lang import INF, RowExpr, expr_add, expr_le, expr_lt, expr_sub


class DomainError(Exception):
    """Misuse of a domain operation (e.g. join across different files)."""


class EnumerationError(DomainError):
    """Concretization was asked to enumerate a symbolic or infinite interval."""


# ---------------------------------------------------------------------------
# Columns
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ColumnAbs:
    """A set of column labels, or top (unknown columns)."""

    cols: frozenset[str] | None = None  # None is top

    @property
    def is_top(self) -> bool:
        return self.cols is None

    @property
    def is_empty(self) -> bool:
        return self.cols is not None and not self.cols

    def __str__(self) -> str:
        if self.is_top:
            return "T"
        return "{" + ",".join(sorted(self.cols)) + "}"


TOP_COLS = ColumnAbs(None)
EMPTY_COLS = ColumnAbs(frozenset())


def columns(*names: str) -> ColumnAbs:
    return ColumnAbs(frozenset(names))


def col_leq(a: ColumnAbs, b: ColumnAbs) -> bool:
    if b.is_top:
        return True
    if a.is_top:
        return False
    return a.cols <= b.cols


def col_join(a: ColumnAbs, b: ColumnAbs) -> ColumnAbs:
    if a.is_top or b.is_top:
        return TOP_COLS
    return ColumnAbs(a.cols | b.cols)


def col_meet(a: ColumnAbs, b: ColumnAbs) -> ColumnAbs:
    if b.is_top:
        return a
    if a.is_top:
        return b
    return ColumnAbs(a.cols & b.cols)


# ---------------------------------------------------------------------------
# Row intervals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RowInterval:
    """Inclusive interval of row indexes, or bottom (both bounds None)."""

    lo: RowExpr | None
    hi: RowExpr | None

    def __post_init__(self):
        if (self.lo is None) != (self.hi is None):
            raise ValueError("both bounds must be set, or neither")
        if self.lo is not None:
            if self.lo.inf:
                raise ValueError("lower bound cannot be inf")
            if expr_le(self.lo, self.hi) is False:
                raise ValueError(f"interval [{self.lo}, {self.hi}] is provably empty")

    @property
    def is_bot(self) -> bool:
        return self.lo is None

    def __str__(self) -> str:
        if self.is_bot:
            return "_|_"
        return f"[{self.lo}, {self.hi}]"


BOT_ROWS = RowInterval(None, None)
TOP_ROWS = RowInterval(RowExpr.const(0), INF)


def rows(lo, hi) -> RowInterval:
    """Convenience constructor accepting ints, symbol names, RowExprs or inf."""
    def conv(x):
        if isinstance(x, RowExpr):
            return x
        if isinstance(x, int):
            return RowExpr.const(x)
        if x == "inf":
            return INF
        return RowExpr.symbol(x)
    return RowInterval(conv(lo), conv(hi))


def _min_expr(a: RowExpr, b: RowExpr, unknown: RowExpr) -> RowExpr:
    if expr_le(a, b) is True:
        return a
    if expr_le(b, a) is True:
        return b
    return unknown


def _max_expr(a: RowExpr, b: RowExpr, unknown: RowExpr) -> RowExpr:
    if expr_le(b, a) is True:
        return a
    if expr_le(a, b) is True:
        return b
    return unknown


def row_leq(a: RowInterval, b: RowInterval) -> bool:
    """Definite containment; unknown comparisons count as not contained."""
    if a.is_bot:
        return True
    if b.is_bot:
        return False
    return expr_le(b.lo, a.lo) is True and expr_le(a.hi, b.hi) is True


def _floor(e: RowExpr) -> int:
    """Smallest value the position can take under admissible valuations."""
    return e.offset if e.sym is None else max(e.offset, 0)


def row_join(a: RowInterval, b: RowInterval) -> RowInterval:
    if a.is_bot:
        return b
    if b.is_bot:
        return a
    # When the lower bounds are incomparable, the tightest sound constant
    # is the smaller of their floors (not 0).
    hull_lo = RowExpr.const(min(_floor(a.lo), _floor(b.lo)))
    return RowInterval(
        _min_expr(a.lo, b.lo, hull_lo),
        _max_expr(a.hi, b.hi, INF),
    )


def row_disjoint(a: RowInterval, b: RowInterval) -> bool:
    """True only when the intervals provably share no index."""
    if a.is_bot or b.is_bot:
        return True
    return expr_lt(a.hi, b.lo) is True or expr_lt(b.hi, a.lo) is True


def _pick(a: RowExpr, b: RowExpr) -> RowExpr:
    """Deterministic order-insensitive choice between two sound candidates."""
    return min(a, b, key=str)


def row_meet(a: RowInterval, b: RowInterval) -> RowInterval:
    if row_disjoint(a, b):
        return BOT_ROWS
    # On unknown bound comparisons either operand's bound over-approximates
    # the exact intersection; pick one symmetrically.
    lo = _max_expr(a.lo, b.lo, _pick(a.lo, b.lo))
    hi = _min_expr(a.hi, b.hi, _pick(a.hi, b.hi))
    if expr_le(lo, hi) is False:
        # Incomparable pick made the pair contradictory; fall back to the hull.
        lo = _min_expr(a.lo, b.lo, RowExpr.const(0))
        hi = _max_expr(a.hi, b.hi, INF)
    return RowInterval(lo, hi)


def row_index(r: RowInterval) -> RowInterval:
    """The 0-based index interval of ``r``: [l,u] maps to [0, u-l]."""
    if r.is_bot:
        return BOT_ROWS
    width = expr_sub(r.hi, r.lo)
    if width is None:
        width = INF
    return RowInterval(RowExpr.const(0), width)


def row_unindex(r: RowInterval, ij: RowInterval) -> RowInterval:
    """The sub-interval of ``r`` between positional indices ``ij``.

    ``ij`` is first met with ``row_index(r)``, so out-of-range indices are
    clipped rather than rejected.
    """
    if r.is_bot:
        return BOT_ROWS
    ij = row_meet(row_index(r), ij)
    if ij.is_bot:
        return BOT_ROWS
    lo = expr_add(r.lo, ij.lo)
    if lo is None or lo.inf:
        lo = r.lo
    hi = expr_add(r.lo, ij.hi)
    if hi is None:
        hi = r.hi
    else:
        hi = _min_expr(hi, r.hi, r.hi)
    if expr_le(lo, hi) is False:
        return r
    return RowInterval(lo, hi)


def row_contains(r: RowInterval, n: int) -> bool:
    """Definite membership of a concrete index."""
    if r.is_bot:
        return False
    e = RowExpr.const(n)
    return expr_le(r.lo, e) is True and expr_le(e, r.hi) is True


def gamma_rows(r: RowInterval) -> frozenset[int]:
    if r.is_bot:
        return frozenset()
    if r.hi.inf or not (r.lo.is_const and r.hi.is_const):
        raise EnumerationError(f"cannot enumerate {r}")
    return frozenset(range(r.lo.offset, r.hi.offset + 1))


# ---------------------------------------------------------------------------
# Abstract frames
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AbsDataFrame:
    """Provenance triple: file name, column abstraction, row interval.

    Degenerate frames (empty columns or bottom rows) are never constructed;
    emptiness is encoded by absence from a set.
    """

    file: str
    cols: ColumnAbs
    rows: RowInterval

    def __post_init__(self):
        if self.rows.is_bot:
            raise ValueError("frame rows cannot be bottom")
        if self.cols.is_empty:
            raise ValueError("frame columns cannot be empty")

    def __str__(self) -> str:
        return f"{self.file}^{self.cols}_{self.rows}"


def frame(file: str, cols=None, lo=0, hi="inf") -> AbsDataFrame:
    c = TOP_COLS if cols is None else ColumnAbs(frozenset(cols))
    return AbsDataFrame(file, c, rows(lo, hi))


def df_leq(a: AbsDataFrame, b: AbsDataFrame) -> bool:
    return a.file == b.file and col_leq(a.cols, b.cols) and row_leq(a.rows, b.rows)


def df_overlap(a: AbsDataFrame, b: AbsDataFrame) -> bool:
    """May-overlap: false only when frames provably share no cell."""
    if a.file != b.file:
        return False
    if col_meet(a.cols, b.cols).is_empty:
        return False
    return not row_disjoint(a.rows, b.rows)


def df_join(a: AbsDataFrame, b: AbsDataFrame) -> AbsDataFrame:
    if a.file != b.file:
        raise DomainError(f"join across files {a.file!r} and {b.file!r}")
    return AbsDataFrame(a.file, col_join(a.cols, b.cols), row_join(a.rows, b.rows))


def df_meet(a: AbsDataFrame, b: AbsDataFrame) -> AbsDataFrame | None:
    """Componentwise meet; None when the result is empty."""
    if a.file != b.file:
        raise DomainError(f"meet across files {a.file!r} and {b.file!r}")
    cols = col_meet(a.cols, b.cols)
    rows_ = row_meet(a.rows, b.rows)
    if cols.is_empty or rows_.is_bot:
        return None
    return AbsDataFrame(a.file, cols, rows_)


def df_constrain(a: AbsDataFrame, c: ColumnAbs, ij: RowInterval) -> AbsDataFrame | None:
    """Restrict to the given columns and positional index window; None when
    the restriction is empty."""
    cols = col_meet(a.cols, c)
    if cols.is_empty:
        return None
    rows_ = row_unindex(a.rows, ij)
    if rows_.is_bot:
        return None
    return AbsDataFrame(a.file, cols, rows_)


# ---------------------------------------------------------------------------
# Canonical frame sets
# ---------------------------------------------------------------------------

def _frame_key(f: AbsDataFrame):
    cols = ("~top",) if f.cols.is_top else tuple(sorted(f.cols.cols))
    return (f.file, cols, str(f.rows.lo), str(f.rows.hi))


def ordered_frames(frames) -> tuple[AbsDataFrame, ...]:
    return tuple(sorted(frames, key=_frame_key))


def set_reduce(frames, mode: str = "join") -> frozenset[AbsDataFrame]:
    """Merge overlapping frames (by join or meet) until the set is canonical.

    Iterates to a fixpoint: a single merge pass can itself create new
    overlaps.  Terminates because every merge shrinks the set.
    """
    if mode not in ("join", "meet"):
        raise ValueError(f"unknown reduce mode {mode!r}")
    work = list(ordered_frames(frames))
    changed = True
    while changed:
        changed = False
        for i in range(len(work)):
            for j in range(i + 1, len(work)):
                if df_overlap(work[i], work[j]):
                    if mode == "join":
                        merged = df_join(work[i], work[j])
                    else:
                        merged = df_meet(work[i], work[j])
                    del work[j], work[i]
                    if merged is not None:
                        work.append(merged)
                    work = list(ordered_frames(work))
                    changed = True
                    break
            if changed:
                break
    return frozenset(work)


def is_canonical(frames) -> bool:
    fs = ordered_frames(frames)
    return all(
        not df_overlap(fs[i], fs[j])
        for i in range(len(fs))
        for j in range(i + 1, len(fs))
    )


def set_leq(a, b) -> bool:
    return all(any(df_leq(x, y) for y in b) for x in a)


def set_join(a, b) -> frozenset[AbsDataFrame]:
    return set_reduce(set(a) | set(b), "join")


def set_meet(a, b) -> frozenset[AbsDataFrame]:
    """Meet over same-file overlapping cross pairs.

    Literal set intersection would drop syntactically different triples that
    share cells, so the meet pairs up overlapping frames instead.
    """
    out = []
    for x in ordered_frames(a):
        for y in ordered_frames(b):
            if df_overlap(x, y):
                m = df_meet(x, y)
                if m is not None:
                    out.append(m)
    return set_reduce(out, "meet")


def set_constrain(frames, c: ColumnAbs, ij: RowInterval) -> frozenset[AbsDataFrame]:
    out = []
    for f in ordered_frames(frames):
        g = df_constrain(f, c, ij)
        if g is not None:
            out.append(g)
    return set_reduce(out, "join")


# ---------------------------------------------------------------------------
# Source abstraction (frame set + taint)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SourceAbs:
    frames: frozenset[AbsDataFrame] = frozenset()
    tainted: bool = False

    def __str__(self) -> str:
        inner = ", ".join(str(f) for f in ordered_frames(self.frames))
        flag = "maybe-tainted" if self.tainted else "untainted"
        return f"<{{{inner}}}, {flag}>"


BOT_SOURCE = SourceAbs()


def src_leq(a: SourceAbs, b: SourceAbs) -> bool:
    return set_leq(a.frames, b.frames) and a.tainted <= b.tainted


def src_join(a: SourceAbs, b: SourceAbs) -> SourceAbs:
    return SourceAbs(set_join(a.frames, b.frames), a.tainted or b.tainted)


def src_meet(a: SourceAbs, b: SourceAbs) -> SourceAbs:
    return SourceAbs(set_meet(a.frames, b.frames), a.tainted and b.tainted)


def source_covers(a: SourceAbs, file: str, row: int) -> bool:
    """Definite membership of a concrete source cell in the concretization."""
    return any(f.file == file and row_contains(f.rows, row) for f in a.frames)


def gamma_source(a: SourceAbs) -> frozenset[tuple[str, int]]:
    """Concrete source cells; only defined for finite symbol-free frames.

    Neither the taint flag nor column abstractions contribute cells; they
    exist to steer the transfer functions.
    """
    cells: set[tuple[str, int]] = set()
    for f in a.frames:
        for r in gamma_rows(f.rows):
            cells.add((f.file, r))
    return frozenset(cells)


# ---------------------------------------------------------------------------
# Debug serialization
# ---------------------------------------------------------------------------

def frame_to_json(f: AbsDataFrame) -> dict:
    return {
        "file": f.file,
        "cols": "top" if f.cols.is_top else sorted(f.cols.cols),
        "rows": [str(f.rows.lo), str(f.rows.hi)],
    }


def source_to_json(a: SourceAbs) -> dict:
    return {
        "sources": [frame_to_json(f) for f in ordered_frames(a.frames)],
        "tainted": a.tainted,
    }
