"""Abstract interpreter: per-statement transfer functions over provenance
states, the train/test leakage check, and the whole-program driver.

A state maps each variable to a source abstraction (canonical frame set +
taint flag) and records which variables reached train/test uses.  The
select rule only narrows row intervals when the source is untainted *and*
positionally aligned: a frame set is aligned when it is a single frame
whose interval tracks the source rows in order (reads, and contiguous
selections thereof).  Merges, gapped selections and normalization break
alignment, and narrowing through them would drop real dependencies.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from .domains import (
    BOT_ROWS,
    ColumnAbs,
    RowInterval,
    SourceAbs,
    TOP_COLS,
    TOP_ROWS,
    df_overlap,
    ordered_frames,
    set_constrain,
    set_join,
    set_reduce,
    src_join,
    src_leq,
)
from .lang import (
    INF,
    Apply,
    Branch,
    Loop,
    Merge,
    Phi,
    Program,
    Read,
    RowExpr,
    RowRange,
    Select,
    Statement,
    Use,
    expr_le,
    stmt_text,
)


class AnalysisError(Exception):
    def __init__(self, msg: str, var: str | None = None, site: str | None = None):
        super().__init__(f"{msg}" + (f" (at {site})" if site else ""))
        self.var = var
        self.site = site


@dataclass(frozen=True)
class AbstractState:
    env: dict[str, SourceAbs] = field(default_factory=dict)
    train_uses: tuple[tuple[str, str | None], ...] = ()
    test_uses: tuple[tuple[str, str | None], ...] = ()
    aligned: frozenset[str] = frozenset()

    def bind(self, var: str, value: SourceAbs, aligned: bool) -> "AbstractState":
        env = dict(self.env)
        env[var] = value
        al = self.aligned | {var} if aligned else self.aligned - {var}
        return replace(self, env=env, aligned=al)

    def record_use(self, kind: str, args, site) -> "AbstractState":
        uses = self.train_uses if kind == "train" else self.test_uses
        new = tuple(u for u in ((a, site) for a in args) if u not in uses)
        uses = uses + new
        if kind == "train":
            return replace(self, train_uses=uses)
        return replace(self, test_uses=uses)


BOT_STATE = AbstractState()


def state_leq(a: AbstractState, b: AbstractState) -> bool:
    """Pointwise order used for fixpoints and subsumption pruning.

    Requires b to be at least as wide and to narrow no more aggressively
    (fewer aligned variables), so analyses continued from b cover those
    continued from a.
    """
    for v, val in a.env.items():
        if v not in b.env or not src_leq(val, b.env[v]):
            return False
    return (
        set(a.train_uses) <= set(b.train_uses)
        and set(a.test_uses) <= set(b.test_uses)
        and b.aligned <= a.aligned | (b.env.keys() - a.env.keys())
    )


def state_join(a: AbstractState, b: AbstractState) -> AbstractState:
    env: dict[str, SourceAbs] = {}
    aligned = set()
    for v in itertools.chain(a.env, (x for x in b.env if x not in a.env)):
        ina, inb = v in a.env, v in b.env
        if ina and inb:
            env[v] = src_join(a.env[v], b.env[v])
            if v in a.aligned and v in b.aligned and a.env[v] == b.env[v]:
                aligned.add(v)
        elif ina:
            env[v] = a.env[v]
            if v in a.aligned:
                aligned.add(v)
        else:
            env[v] = b.env[v]
            if v in b.aligned:
                aligned.add(v)
    train = a.train_uses + tuple(u for u in b.train_uses if u not in a.train_uses)
    test = a.test_uses + tuple(u for u in b.test_uses if u not in a.test_uses)
    return AbstractState(env, train, test, frozenset(aligned))


def _widen_value(v: SourceAbs) -> SourceAbs:
    frames = [
        replace(f, rows=RowInterval(f.rows.lo, INF))
        for f in v.frames
    ]
    return SourceAbs(set_reduce(frames, "join"), v.tainted)


def widen_state(prev: AbstractState, nxt: AbstractState) -> AbstractState:
    env = dict(nxt.env)
    aligned = set(nxt.aligned)
    for v, val in nxt.env.items():
        if v in prev.env and not src_leq(val, prev.env[v]):
            env[v] = _widen_value(val)
            aligned.discard(v)
    return replace(nxt, env=env, aligned=frozenset(aligned))


# ---------------------------------------------------------------------------
# Transfer functions
# ---------------------------------------------------------------------------

def _selector_window(rows) -> tuple[RowInterval, bool]:
    """Positional index window of a row selector and whether the selection
    is contiguous (preserves positional alignment)."""
    if rows is None:
        return TOP_ROWS, True
    if isinstance(rows, RowRange):
        return RowInterval(rows.lo, rows.hi), True
    if not rows.items:
        return BOT_ROWS, True
    lo = rows.items[0]
    hi = rows.items[0]
    for e in rows.items[1:]:
        if expr_le(e, lo) is True:
            lo = e
        elif expr_le(lo, e) is not True:
            lo = RowExpr.const(0)
        if expr_le(hi, e) is True:
            hi = e
        elif expr_le(e, hi) is not True:
            hi = INF
    contiguous = (
        all(e.is_const for e in rows.items)
        and [e.offset for e in rows.items]
        == list(range(rows.items[0].offset, rows.items[0].offset + len(rows.items)))
    )
    return RowInterval(lo, hi), contiguous


def _require(state: AbstractState, var: str, site) -> SourceAbs:
    if var not in state.env:
        raise AnalysisError(f"unbound variable {var!r}", var=var, site=site)
    return state.env[var]


def transfer(s: Statement, m: AbstractState) -> AbstractState:
    """Abstract effect of one statement."""
    if isinstance(s, Read):
        from .domains import AbsDataFrame
        value = SourceAbs(frozenset({AbsDataFrame(s.file, TOP_COLS, TOP_ROWS)}), False)
        return m.bind(s.target, value, aligned=True)

    if isinstance(s, Select):
        src = _require(m, s.source, s.site)
        if src.tainted:
            # Tainted rows are cross-correlated; narrowing would pretend the
            # selection only depends on the picked rows.
            return m.bind(s.target, src, aligned=s.source in m.aligned)
        cols = TOP_COLS if s.cols is None else ColumnAbs(frozenset(s.cols))
        window, contiguous = _selector_window(s.rows)
        if s.source in m.aligned:
            frames = set_constrain(src.frames, cols, window)
            out_aligned = contiguous and len(frames) <= 1
        else:
            # Row positions no longer line up with the tracked intervals, so
            # only the column part may be constrained.
            frames = set_constrain(src.frames, cols, TOP_ROWS)
            out_aligned = False
        return m.bind(s.target, SourceAbs(frames, False), aligned=out_aligned)

    if isinstance(s, Merge):
        left = _require(m, s.left, s.site)
        right = _require(m, s.right, s.site)
        value = SourceAbs(set_join(left.frames, right.frames), left.tainted or right.tainted)
        return m.bind(s.target, value, aligned=False)

    if isinstance(s, Apply):
        src = _require(m, s.source, s.site)
        if s.is_normalize:
            return m.bind(s.target, SourceAbs(src.frames, True), aligned=False)
        return m.bind(s.target, src, aligned=s.source in m.aligned)

    if isinstance(s, Use):
        for a in s.args:
            _require(m, a, s.site)
        return m.record_use(s.kind, s.args, s.site)

    if isinstance(s, Phi):
        bound = [v for v in s.sources if v in m.env]
        if not bound:
            raise AnalysisError(
                f"no source of {s.target!r} is bound", var=s.target, site=s.site)
        value = m.env[bound[0]]
        for v in bound[1:]:
            value = src_join(value, m.env[v])
        aligned = all(v in m.aligned for v in bound) and all(
            m.env[v] == m.env[bound[0]] for v in bound)
        return m.bind(s.target, value, aligned=aligned)

    if isinstance(s, Branch):
        out = None
        for arm in s.arms:
            st = m
            for stmt in arm:
                st = transfer(stmt, st)
            out = st if out is None else state_join(out, st)
        return m if out is None else out

    if isinstance(s, Loop):
        state = m
        for i in range(100):
            st = state
            for stmt in s.body:
                st = transfer(stmt, st)
            nxt = state_join(state, st)
            if state_leq(nxt, state):
                return state
            state = widen_state(state, nxt) if i >= 3 else nxt
        raise AnalysisError("loop analysis did not stabilize", site=s.site)

    raise TypeError(f"not a statement: {s!r}")


# ---------------------------------------------------------------------------
# Leakage check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Finding:
    kind: str  # "taint" | "overlap"
    train_var: str
    test_var: str
    file: str
    witness: str
    train_site: str | None = field(default=None, compare=False)
    test_site: str | None = field(default=None, compare=False)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.kind, self.train_var, self.test_var)

    def __str__(self) -> str:
        return (f"{self.kind}: train {self.train_var!r} vs test {self.test_var!r}"
                f" via {self.file!r} ({self.witness})")


def _pair_finding(m: AbstractState, o1, o2) -> Finding | None:
    """Leakage finding for one (train var, test var) pair, or None.

    A pair leaks when some train frame may share cells with some test frame.
    The leak is classified as a taint leak when either side went through a
    whole-set transformation, and as a plain overlap otherwise.
    """
    (train_var, train_site), (test_var, test_site) = o1, o2
    a = m.env.get(train_var)
    b = m.env.get(test_var)
    if a is None or b is None:
        return None
    for fa in ordered_frames(a.frames):
        for fb in ordered_frames(b.frames):
            if df_overlap(fa, fb):
                kind = "taint" if (a.tainted or b.tainted) else "overlap"
                witness = f"{fa} overlaps {fb}"
                if kind == "taint":
                    flags = []
                    if a.tainted:
                        flags.append(train_var)
                    if b.tainted:
                        flags.append(test_var)
                    witness += f"; tainted: {', '.join(flags)}"
                return Finding(kind, train_var, test_var, fa.file, witness,
                               train_site, test_site)
    return None


def check_leakage(m: AbstractState) -> list[Finding]:
    """All leaking train/test pairs in the state, deduplicated per pair."""
    findings: list[Finding] = []
    seen = set()
    for o1 in m.train_uses:
        for o2 in m.test_uses:
            f = _pair_finding(m, o1, o2)
            if f is not None and f.key not in seen:
                seen.add(f.key)
                findings.append(f)
    return findings


def _eager_findings(m: AbstractState, use: Use, site) -> list[Finding]:
    """Check only the pairs contributed by one use statement."""
    new = [(a, site) for a in use.args]
    if use.kind == "train":
        pairs = [(o1, o2) for o1 in new for o2 in m.test_uses]
    else:
        pairs = [(o1, o2) for o1 in m.train_uses for o2 in new]
    out = []
    for o1, o2 in pairs:
        f = _pair_finding(m, o1, o2)
        if f is not None:
            out.append(f)
    return out


# ---------------------------------------------------------------------------
# Whole-program driver
# ---------------------------------------------------------------------------

@dataclass
class ProgramRun:
    statements: list[Statement]
    states: list[AbstractState]
    final: AbstractState
    findings: list[Finding]

    def state_dump(self) -> list[dict]:
        from .domains import source_to_json
        return [
            {
                "statement": stmt_text(s),
                "env": {v: source_to_json(val) for v, val in st.env.items()},
            }
            for s, st in zip(self.statements, self.states)
        ]


def run_program(p: Program, transfer_fn=None) -> ProgramRun:
    """Fold the transfer over the program from the empty state, checking
    eagerly after each use and sweeping once at the end."""
    tf = transfer_fn or transfer
    state = BOT_STATE
    states: list[AbstractState] = []
    findings: list[Finding] = []
    seen = set()
    for s in p.statements:
        state = tf(s, state)
        states.append(state)
        if isinstance(s, Use):
            for f in _eager_findings(state, s, s.site):
                if f.key not in seen:
                    seen.add(f.key)
                    findings.append(f)
    for f in check_leakage(state):
        if f.key not in seen:
            seen.add(f.key)
            findings.append(f)
    return ProgramRun(list(p.statements), states, state, findings)


def analyze_program(p: Program, transfer_fn=None) -> tuple[AbstractState, list[Finding]]:
    run = run_program(p, transfer_fn)
    return run.final, run.findings
