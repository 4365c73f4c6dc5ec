"""Notebook ingestion: extracts code cells from nbformat-4 JSON, translates
a recognized pandas/sklearn call subset into analyzer statements via an
editable knowledge base, and computes each cell's precondition (the
data-frame variables it reads but does not define).

The translation is deliberately name based: a method is classified by its
name (and, when resolvable, its module), not by the receiver's type.  That
mirrors how lightweight notebook linters behave and is a known false
positive source (two libraries sharing a method name).

Assignments are renamed to single-assignment form (x, x', x''); the latest
version of each user variable is exported for inter-cell propagation.
If/else bodies become alternative arms merged by the analyzer; for/while
bodies become fixpoint-iterated loop nodes, inside which renaming is
suspended so a later iteration reads the previous one's bindings.
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass, replace as dataclasses_replace
from importlib import resources

from .lang import (
    INF,
    Apply,
    Branch,
    Loop,
    Merge,
    Phi,
    Read,
    RowExpr,
    RowList,
    RowRange,
    Select,
    Statement,
    Use,
)


class NotebookError(Exception):
    """The notebook file itself could not be digested."""


# ---------------------------------------------------------------------------
# Knowledge base
# ---------------------------------------------------------------------------

KB_CLASSES = {
    "source", "select", "merge_concat", "merge_join",
    "normalize", "other", "train", "test", "split",
}


@dataclass(frozen=True)
class KnowledgeBase:
    """(namespace, function) -> statement class.

    Namespaces: a module path ("pandas", "sklearn.preprocessing"), "df" for
    data-frame methods, or "*" for match-by-name-only.  Lookup tries the
    given namespaces in order and falls back to "*".
    """

    entries: dict[tuple[str, str], str]

    @staticmethod
    def load(path=None) -> "KnowledgeBase":
        if path is None:
            raw = resources.files("dlcheck").joinpath("kb.json").read_text()
        else:
            with open(path, encoding="utf-8") as fh:
                raw = fh.read()
        data = json.loads(raw)
        entries = {}
        for e in data["entries"]:
            cls = e["class"]
            if cls not in KB_CLASSES:
                raise NotebookError(f"unknown knowledge-base class {cls!r}")
            entries[(e["namespace"], e["function"])] = cls
        return KnowledgeBase(entries)

    def lookup(self, namespaces, function: str) -> str:
        return self.lookup_entry(namespaces, function)[0]

    def lookup_entry(self, namespaces, function: str) -> tuple[str, str | None]:
        """The statement class and the namespace the match came from."""
        for ns in namespaces:
            cls = self.entries.get((ns, function))
            if cls is not None:
                return cls, ns
        cls = self.entries.get(("*", function))
        if cls is not None:
            return cls, "*"
        return "unknown", None


_DEFAULT_KB: KnowledgeBase | None = None


def default_kb() -> KnowledgeBase:
    global _DEFAULT_KB
    if _DEFAULT_KB is None:
        _DEFAULT_KB = KnowledgeBase.load()
    return _DEFAULT_KB


# ---------------------------------------------------------------------------
# Cell IR
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellIR:
    id: int
    source: str
    statements: tuple[Statement, ...]
    precondition: frozenset[str]
    exports: tuple[tuple[str, str], ...]  # (user name, final renamed name)
    warnings: tuple[str, ...]


@dataclass(frozen=True)
class Notebook:
    cells: tuple[CellIR, ...]
    warnings: tuple[str, ...] = ()

    def cell(self, cell_id: int) -> CellIR:
        for c in self.cells:
            if c.id == cell_id:
                return c
        raise KeyError(f"no cell {cell_id}")


def cell_precondition(statements) -> frozenset[str]:
    """Variables read before any assignment, over the translated statements
    (which only ever mention data-frame variables)."""
    pre: set[str] = set()
    defined: set[str] = set()

    def walk(stmts):
        from .lang import stmt_sources, stmt_target
        for s in stmts:
            if isinstance(s, Branch):
                snapshot = set(defined)
                arm_defs = []
                for arm in s.arms:
                    defined.clear()
                    defined.update(snapshot)
                    walk(arm)
                    arm_defs.append(set(defined))
                defined.clear()
                defined.update(snapshot.union(*arm_defs) if arm_defs else snapshot)
                continue
            if isinstance(s, Loop):
                walk(s.body)
                continue
            for v in stmt_sources(s):
                if v not in defined:
                    pre.add(v)
            t = stmt_target(s)
            if t is not None:
                defined.add(t)

    walk(statements)
    return frozenset(pre)


# ---------------------------------------------------------------------------
# Translation
# ---------------------------------------------------------------------------

_MAX_INLINE_DEPTH = 8


class _Translator:
    def __init__(self, kb: KnowledgeBase, defs, cell_id: int, imports=None):
        self.kb = kb
        self.defs = defs or {}
        self.cell_id = cell_id
        self.stmts: list[Statement] = []
        self.warnings: list[str] = []
        self.cur: dict[str, str] = {}          # user name -> current renamed name
        self.versions: dict[str, int] = {}     # user name -> next version number
        self.df_vars: set[str] = set()         # renamed names known to hold frames
        # Aliases from earlier cells carry over; notebooks import once up top.
        self.mod_aliases: dict[str, str] = dict((imports or ({}, {}))[0])
        self.from_imports: dict[str, tuple[str, str]] = dict((imports or ({}, {}))[1])
        self.bound_syms: dict[str, str] = {}   # expression text -> symbol name
        self.temps = 0
        self.symbols = 0
        self.site_idx = 0
        self.loop_depth = 0
        self.inline_stack: list[str] = []

    # -- naming -------------------------------------------------------------

    def warn(self, msg: str):
        self.warnings.append(msg)

    def fresh_temp(self) -> str:
        self.temps += 1
        return f"_t{self.temps - 1}"

    def fresh_symbol(self) -> str:
        self.symbols += 1
        return f"_s{self.symbols - 1}"

    def assign_name(self, base: str) -> str:
        if self.loop_depth and base in self.cur:
            return self.cur[base]  # rebind in place inside loops
        v = self.versions.get(base, 0)
        self.versions[base] = v + 1
        name = base + "'" * v
        self.cur[base] = name
        return name

    def read_name(self, base: str) -> str:
        if base in self.cur:
            return self.cur[base]
        # Unbound: the user name itself becomes the current binding (it will
        # resolve against an earlier cell) and is reserved so a later
        # assignment in this cell gets a fresh version.
        self.versions.setdefault(base, 1)
        self.cur[base] = base
        self.df_vars.add(base)
        return base

    def emit(self, s: Statement) -> Statement:
        self.stmts.append(s)
        self.site_idx += 1
        return s

    def site(self) -> str:
        return f"cell {self.cell_id}[{self.site_idx}]"

    # -- helpers ------------------------------------------------------------

    def resolve_module(self, node) -> str | None:
        parts = []
        while isinstance(node, ast.Attribute):
            parts.append(node.attr)
            node = node.value
        if isinstance(node, ast.Name) and node.id in self.mod_aliases \
                and node.id not in self.cur:
            parts.append(self.mod_aliases[node.id])
            return ".".join(reversed(parts))
        return None

    def is_df(self, name: str | None) -> bool:
        return name is not None and name in self.df_vars

    def df_args(self, call: ast.Call) -> list[str]:
        """Renamed names of the call's positional data-frame arguments,
        flattening a single list/tuple literal."""
        out = []
        args = call.args
        if len(args) == 1 and isinstance(args[0], (ast.List, ast.Tuple)):
            args = args[0].elts
        for a in args:
            v = self.eval_expr(a, allow_unbound_df=True)
            if self.is_df(v):
                out.append(v)
        return out

    def row_bound(self, node) -> RowExpr | None:
        """Row position of a slice bound; None when not representable."""
        if node is None:
            return None
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return RowExpr.const(node.value) if node.value >= 0 else None
        if isinstance(node, ast.Name) and node.id not in self.cur:
            return RowExpr.symbol(node.id)
        if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub)) \
                and isinstance(node.right, ast.Constant) \
                and isinstance(node.right.value, int):
            base = self.row_bound(node.left)
            if base is not None and not base.inf:
                k = node.right.value
                return base.shift(k if isinstance(node.op, ast.Add) else -k)
        # Anything richer is bound to a fresh symbol, one per distinct
        # expression text within the cell.
        text = ast.dump(node)
        if text not in self.bound_syms:
            self.bound_syms[text] = self.fresh_symbol()
        return RowExpr.symbol(self.bound_syms[text])

    def subscript_selector(self, sl, accessor: str) -> tuple:
        """(rows, cols, ok) interpretation of a subscript on a frame.

        For ``iloc`` (and ``loc`` on the default integer index) scalar and
        list subscripts are row positions; for plain ``[]`` they are column
        labels, so only string forms select columns and everything else
        keeps the whole frame.
        """
        positional = accessor in ("iloc", "loc")
        if isinstance(sl, ast.Tuple) and sl.elts:
            rows, _, ok = self.subscript_selector(sl.elts[0], accessor)
            cols = None
            if len(sl.elts) > 1:
                _, cols, ok2 = self.subscript_selector(sl.elts[1], accessor)
                ok = ok and ok2
            return rows, cols, ok
        if isinstance(sl, ast.Slice):
            if sl.step is not None:
                return None, None, False
            lo = self.row_bound(sl.lower) if sl.lower is not None else RowExpr.const(0)
            hi = self.row_bound(sl.upper) if sl.upper is not None else INF
            if lo is None or hi is None:
                return None, None, False
            try:
                return RowRange(lo, hi), None, True
            except ValueError:
                return None, None, False
        if isinstance(sl, ast.Constant):
            if isinstance(sl.value, str):
                return None, frozenset({sl.value}), True
            if positional and isinstance(sl.value, int) and sl.value >= 0:
                return RowList((RowExpr.const(sl.value),)), None, True
            return None, None, False
        if isinstance(sl, ast.List):
            if all(isinstance(e, ast.Constant) and isinstance(e.value, str)
                   for e in sl.elts):
                return None, frozenset(e.value for e in sl.elts), True
            if positional:
                items = [self.row_bound(e) for e in sl.elts]
                if all(it is not None and not it.inf for it in items):
                    return RowList(tuple(items)), None, True
            return None, None, False
        if positional and isinstance(sl, ast.Name) and sl.id not in self.cur:
            return RowList((RowExpr.symbol(sl.id),)), None, True
        return None, None, False

    # -- expressions ----------------------------------------------------------

    def eval_expr(self, node, target: str | None = None,
                  allow_unbound_df: bool = False) -> str | None:
        """Translate an expression; returns the renamed variable holding its
        value when it is data-frame shaped, else None.  ``target`` names the
        emitted statement's destination for the outermost call."""
        if isinstance(node, ast.Name):
            if node.id in self.cur:
                return self.cur[node.id]
            if allow_unbound_df:
                return self.read_name(node.id)
            return None

        if isinstance(node, ast.Call):
            return self.eval_call(node, target)

        if isinstance(node, ast.Subscript):
            return self.eval_subscript(node, target)

        if isinstance(node, ast.Attribute):
            # df.values, df.T and friends: per-row views of the same data.
            # Only known frame accessors may pull in an unbound receiver;
            # arbitrary attribute reads would turn models into frames.
            if self.resolve_module(node) is not None:
                return None
            known = self.kb.lookup_entry(["df"], node.attr)[1] == "df"
            recv = self.eval_expr(node.value, allow_unbound_df=known)
            if self.is_df(recv):
                out = target or self.fresh_temp()
                self.df_vars.add(out)
                self.emit(Apply(out, node.attr, recv, site=self.site()))
                return out
            return None

        if isinstance(node, ast.BinOp):
            left = self.eval_expr(node.left, allow_unbound_df=allow_unbound_df)
            right = self.eval_expr(node.right, allow_unbound_df=allow_unbound_df)
            dfs = [v for v in (left, right) if self.is_df(v)]
            if not dfs:
                return None
            out = target or self.fresh_temp()
            self.df_vars.add(out)
            if len(dfs) == 2:
                self.emit(Merge(out, "concat", dfs[0], dfs[1], site=self.site()))
            else:
                self.emit(Apply(out, "arith", dfs[0], site=self.site()))
            return out

        if isinstance(node, (ast.IfExp,)):
            a = self.eval_expr(node.body, allow_unbound_df=allow_unbound_df)
            b = self.eval_expr(node.orelse, allow_unbound_df=allow_unbound_df)
            dfs = [v for v in (a, b) if self.is_df(v)]
            if not dfs:
                return None
            out = target or self.fresh_temp()
            self.df_vars.add(out)
            if len(dfs) == 2:
                self.emit(Merge(out, "concat", dfs[0], dfs[1], site=self.site()))
            else:
                self.emit(Apply(out, "pick", dfs[0], site=self.site()))
            return out

        return None

    def eval_subscript(self, node: ast.Subscript, target=None) -> str | None:
        base = node.value
        accessor = "__getitem__"
        if isinstance(base, ast.Attribute) and base.attr in ("iloc", "loc"):
            accessor = base.attr
            base = base.value
        recv = self.eval_expr(base, allow_unbound_df=True)
        if not self.is_df(recv):
            return None
        if self.kb.lookup(["df"], accessor) != "select":
            out = target or self.fresh_temp()
            self.df_vars.add(out)
            self.emit(Apply(out, accessor, recv, site=self.site()))
            return out
        rows, cols, ok = self.subscript_selector(node.slice, accessor)
        if not ok:
            self.warn(f"opaque subscript on {recv!r}; keeping all rows")
        out = target or self.fresh_temp()
        self.df_vars.add(out)
        self.emit(Select(out, recv, rows=rows, cols=cols, site=self.site()))
        return out

    def eval_call(self, node: ast.Call, target=None) -> str | None:
        func = node.func
        fn = None
        namespaces = []
        recv_node = None

        if isinstance(func, ast.Attribute):
            fn = func.attr
            mod = self.resolve_module(func.value)
            if mod is not None:
                namespaces = [mod]
            else:
                namespaces = ["df"]
                recv_node = func.value
        elif isinstance(func, ast.Name):
            fn = func.id
            if fn in self.defs:
                return self.inline_call(fn, node, target)
            if fn in self.from_imports:
                namespaces = [self.from_imports[fn][0]]
                fn = self.from_imports[fn][1]
        if fn is None:
            return None

        cls, matched_ns = self.kb.lookup_entry(namespaces, fn)

        # A method receiver may be an unbound frame from an earlier cell only
        # when the knowledge base declares the method on frames; receivers of
        # name-only matches (fit, predict, transform, ...) are models and
        # scalers, never data.
        recv_df = None
        if recv_node is not None:
            recv = self.eval_expr(recv_node, allow_unbound_df=(matched_ns == "df"))
            if self.is_df(recv):
                recv_df = recv

        if cls == "source":
            file = None
            if node.args and isinstance(node.args[0], ast.Constant) \
                    and isinstance(node.args[0].value, str):
                file = node.args[0].value
            if file is None:
                file = f"<{fn}:cell{self.cell_id}:{self.site_idx}>"
                self.warn(f"non-constant file name in {fn}; using {file}")
            out = target or self.fresh_temp()
            self.df_vars.add(out)
            self.emit(Read(out, file, site=self.site()))
            return out

        if cls == "select":
            # drop() and other row/column complements: the removed part is
            # unknown, so keep the whole frame.
            src = recv_df if recv_df is not None else next(
                iter(self.df_args(node)), None)
            if src is None:
                return None
            out = target or self.fresh_temp()
            self.df_vars.add(out)
            self.emit(Select(out, src, rows=None, cols=None, site=self.site()))
            return out

        if cls in ("merge_concat", "merge_join"):
            op = "concat" if cls == "merge_concat" else "join"
            operands = ([recv_df] if recv_df else []) + self.df_args(node)
            if not operands:
                return None
            if len(operands) == 1:
                out = target or self.fresh_temp()
                self.df_vars.add(out)
                self.emit(Apply(out, fn, operands[0], site=self.site()))
                return out
            acc = operands[0]
            for nxt in operands[1:-1]:
                t = self.fresh_temp()
                self.df_vars.add(t)
                self.emit(Merge(t, op, acc, nxt, site=self.site()))
                acc = t
            out = target or self.fresh_temp()
            self.df_vars.add(out)
            self.emit(Merge(out, op, acc, operands[-1], site=self.site()))
            return out

        if cls == "normalize":
            operands = ([recv_df] if recv_df else []) + self.df_args(node)
            if not operands:
                return None
            out = target or self.fresh_temp()
            self.df_vars.add(out)
            self.emit(Apply(out, "normalize", operands[0], site=self.site()))
            return out

        if cls == "other":
            operands = ([recv_df] if recv_df else []) + self.df_args(node)
            if not operands:
                return None
            src = operands[0]
            if len(operands) > 1:
                for nxt in operands[1:]:
                    t = self.fresh_temp()
                    self.df_vars.add(t)
                    self.emit(Merge(t, "concat", src, nxt, site=self.site()))
                    src = t
            out = target or self.fresh_temp()
            self.df_vars.add(out)
            self.emit(Apply(out, fn, src, site=self.site()))
            return out

        if cls in ("train", "test"):
            args = ([recv_df] if recv_df else []) + self.df_args(node)
            if args:
                self.emit(Use(cls, tuple(dict.fromkeys(args)), site=self.site()))
            else:
                self.warn(f"{fn} call without data-frame arguments dropped")
            return None

        if cls == "split":
            # Only meaningful under a tuple assignment; handled there.
            return None

        # unknown
        operands = ([recv_df] if recv_df else []) + self.df_args(node)
        if operands:
            self.warn(f"unknown function {fn!r}; treating result as opaque transform")
            src = operands[0]
            if len(operands) > 1:
                for nxt in operands[1:]:
                    t = self.fresh_temp()
                    self.df_vars.add(t)
                    self.emit(Merge(t, "concat", src, nxt, site=self.site()))
                    src = t
            out = target or self.fresh_temp()
            self.df_vars.add(out)
            self.emit(Apply(out, "unknown", src, site=self.site()))
            return out
        return None

    def inline_call(self, name: str, node: ast.Call, target=None) -> str | None:
        if name in self.inline_stack or len(self.inline_stack) >= _MAX_INLINE_DEPTH:
            self.warn(f"recursive function {name!r} treated as unknown")
            operands = self.df_args(node)
            if operands:
                out = target or self.fresh_temp()
                self.df_vars.add(out)
                self.emit(Apply(out, "unknown", operands[0], site=self.site()))
                return out
            return None
        fdef = self.defs[name]
        arg_vals = [self.eval_expr(a, allow_unbound_df=True) for a in node.args]
        saved = dict(self.cur)
        self.inline_stack.append(name)
        self.cur = {}
        for p, v in zip(fdef.args.args, arg_vals):
            if v is not None:
                self.cur[p.arg] = v
        result = None
        for stmt in fdef.body:
            if isinstance(stmt, ast.Return):
                if stmt.value is not None:
                    result = self.eval_expr(stmt.value, target=target,
                                            allow_unbound_df=False)
                break
            self.translate_stmt(stmt)
        self.inline_stack.pop()
        self.cur = saved
        return result

    # -- statements -----------------------------------------------------------

    def translate_stmt(self, node):
        if isinstance(node, (ast.Import, ast.ImportFrom)):
            if isinstance(node, ast.Import):
                for alias in node.names:
                    self.mod_aliases[alias.asname or alias.name.split(".")[0]] = \
                        alias.name
            else:
                mod = node.module or ""
                for alias in node.names:
                    self.from_imports[alias.asname or alias.name] = (mod, alias.name)
            return

        if isinstance(node, ast.FunctionDef):
            self.defs[node.name] = node
            return

        if isinstance(node, (ast.Assign, ast.AnnAssign, ast.AugAssign)):
            self.translate_assign(node)
            return

        if isinstance(node, ast.Expr):
            before = len(self.stmts)
            self.eval_expr(node.value, allow_unbound_df=False)
            if len(self.stmts) == before:
                self.warn("non-dataframe statement dropped")
            return

        if isinstance(node, ast.If):
            self.translate_if(node)
            return

        if isinstance(node, (ast.For, ast.While)):
            self.translate_loop(node)
            return

        self.warn("non-dataframe statement dropped")

    def translate_assign(self, node):
        if isinstance(node, ast.AugAssign):
            targets = [node.target]
            value = ast.BinOp(left=ast.Name(id=node.target.id, ctx=ast.Load()),
                              op=node.op, right=node.value) \
                if isinstance(node.target, ast.Name) else None
            if value is None:
                self.warn("non-dataframe statement dropped")
                return
            ast.copy_location(value, node)
            ast.fix_missing_locations(value)
        elif isinstance(node, ast.AnnAssign):
            targets = [node.target]
            value = node.value
            if value is None:
                return
        else:
            targets = node.targets
            value = node.value

        if len(targets) == 1 and isinstance(targets[0], ast.Tuple):
            if self.translate_split(targets[0], value):
                return
            self.warn("unsupported tuple assignment dropped")
            return

        if len(targets) != 1 or not isinstance(targets[0], ast.Name):
            self.warn("unsupported assignment target dropped")
            return

        base = targets[0].id
        if isinstance(value, ast.Name):
            # Pure alias: point the user name at the existing binding.
            v = self.eval_expr(value, allow_unbound_df=True)
            if self.is_df(v):
                self.cur[base] = v
            else:
                self.cur[base] = self.assign_name(base)
            return

        # Evaluate the right side before rebinding so self-references
        # (x = scale(x)) read the previous version, then retarget the
        # emitted statement to the new name.
        placeholder = self.fresh_temp()
        out = self.eval_expr(value, target=placeholder, allow_unbound_df=False)
        if out is None:
            # Non-frame value (models, scalars): the binding exists but does
            # not participate in the analysis.
            self.cur[base] = self.assign_name(base)
            self.df_vars.discard(self.cur[base])
        elif out == placeholder:
            name = self.assign_name(base)
            self._retarget(placeholder, name)
        else:
            self.cur[base] = out

    def _retarget(self, old: str, new: str):
        for i in range(len(self.stmts) - 1, -1, -1):
            s = self.stmts[i]
            if getattr(s, "target", None) == old:
                self.stmts[i] = dataclasses_replace(s, target=new)
                self.df_vars.discard(old)
                self.df_vars.add(new)
                return
        raise AssertionError(f"no statement targets {old}")

    def translate_split(self, target_tuple: ast.Tuple, value) -> bool:
        """Lower ``a, b[, c, d] = train_test_split(...)`` into complementary
        selections around a fresh split point."""
        if not isinstance(value, ast.Call):
            return False
        func = value.func
        fn = func.attr if isinstance(func, ast.Attribute) else (
            func.id if isinstance(func, ast.Name) else None)
        if fn is None:
            return False
        if fn in self.from_imports:
            fn = self.from_imports[fn][1]
        if self.kb.lookup([], fn) != "split":
            return False
        names = [t.id if isinstance(t, ast.Name) else None for t in target_tuple.elts]
        if any(n is None for n in names):
            return False
        dfs = self.df_args(value)
        if not dfs or len(names) != 2 * len(dfs):
            self.warn(f"{fn} arity not understood; targets treated as opaque")
            for n in names:
                if dfs:
                    nm = self.assign_name(n)
                    self.df_vars.add(nm)
                    self.emit(Apply(nm, "unknown", dfs[0], site=self.site()))
            return True
        split = self.fresh_symbol()
        for i, src in enumerate(dfs):
            tr = self.assign_name(names[2 * i])
            self.df_vars.add(tr)
            self.emit(Select(tr, src,
                             rows=RowRange(RowExpr.const(0), RowExpr.symbol(split)),
                             site=self.site()))
            te = self.assign_name(names[2 * i + 1])
            self.df_vars.add(te)
            self.emit(Select(te, src,
                             rows=RowRange(RowExpr.symbol(split, 1), INF),
                             site=self.site()))
        return True

    def translate_if(self, node: ast.If):
        snapshot = dict(self.cur)
        outer = self.stmts

        def run_arm(body):
            self.stmts = []
            self.cur = dict(snapshot)
            for stmt in body:
                self.translate_stmt(stmt)
            arm, env = self.stmts, self.cur
            return tuple(arm), env

        arm_a, env_a = run_arm(node.body)
        arm_b, env_b = run_arm(node.orelse)
        self.stmts = outer
        self.cur = dict(snapshot)
        self.emit(Branch((arm_a, arm_b), site=self.site()))
        changed = {b for b in set(env_a) | set(env_b)
                   if env_a.get(b) != snapshot.get(b) or env_b.get(b) != snapshot.get(b)}
        for base in sorted(changed):
            versions = []
            for env in (env_a, env_b):
                v = env.get(base, snapshot.get(base))
                if v is not None and v not in versions:
                    versions.append(v)
            if not versions or not any(v in self.df_vars for v in versions):
                if versions:
                    self.cur[base] = versions[0]
                continue
            versions = [v for v in versions if v in self.df_vars]
            merged = self.assign_name(base)
            self.df_vars.add(merged)
            self.emit(Phi(merged, tuple(versions), site=self.site()))

    def translate_loop(self, node):
        outer = self.stmts
        self.stmts = []
        self.loop_depth += 1
        for stmt in node.body:
            self.translate_stmt(stmt)
        self.loop_depth -= 1
        body = tuple(self.stmts)
        self.stmts = outer
        if body:
            self.emit(Loop(body, site=self.site()))

    # -- entry ----------------------------------------------------------------

    def translate(self, source: str) -> CellIR:
        try:
            tree = ast.parse(source)
        except SyntaxError as e:
            return CellIR(self.cell_id, source, (), frozenset(),
                          (), (f"syntax error: {e.msg} (line {e.lineno})",))
        for stmt in tree.body:
            self.translate_stmt(stmt)
        statements = tuple(self.stmts)
        exports = tuple(
            (base, name) for base, name in self.cur.items()
            if name in self.df_vars and not base.startswith("_t")
        )
        return CellIR(
            self.cell_id, source, statements,
            cell_precondition(statements), exports, tuple(self.warnings),
        )


def translate_cell(source: str, kb: KnowledgeBase | None = None,
                   defs=None, cell_id: int = 1, imports=None) -> CellIR:
    """Translate one cell's Python source into analyzer statements."""
    return _Translator(kb or default_kb(), dict(defs or {}), cell_id,
                       imports).translate(source)


# ---------------------------------------------------------------------------
# Notebook loading
# ---------------------------------------------------------------------------

def _code_cells(data: bytes) -> list[str]:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise NotebookError(f"JSON decode error: {e}") from None
    if not isinstance(doc, dict) or "cells" not in doc:
        raise NotebookError("not a notebook document")
    if doc.get("nbformat") != 4:
        raise NotebookError(f"unsupported nbformat version {doc.get('nbformat')!r}")
    out = []
    for cell in doc["cells"]:
        if cell.get("cell_type") != "code":
            continue
        src = cell.get("source", "")
        if isinstance(src, list):
            src = "".join(src)
        out.append(src)
    return out


def _collect_defs(sources) -> list[dict]:
    """Function definitions visible to each cell: everything defined in the
    same or an earlier cell."""
    acc: dict[str, ast.FunctionDef] = {}
    per_cell = []
    for src in sources:
        try:
            tree = ast.parse(src)
        except SyntaxError:
            per_cell.append(dict(acc))
            continue
        for node in ast.walk(tree):
            if isinstance(node, ast.FunctionDef):
                acc[node.name] = node
        per_cell.append(dict(acc))
    return per_cell


def _collect_imports(sources) -> list[tuple[dict, dict]]:
    """Import aliases visible to each cell, cumulative over earlier cells."""
    mods: dict[str, str] = {}
    froms: dict[str, tuple[str, str]] = {}
    per_cell = []
    for src in sources:
        per_cell.append((dict(mods), dict(froms)))
        try:
            tree = ast.parse(src)
        except SyntaxError:
            continue
        for node in ast.walk(tree):
            if isinstance(node, ast.Import):
                for alias in node.names:
                    mods[alias.asname or alias.name.split(".")[0]] = alias.name
            elif isinstance(node, ast.ImportFrom):
                for alias in node.names:
                    froms[alias.asname or alias.name] = (node.module or "",
                                                         alias.name)
    return per_cell


def load_notebook(data: bytes, kb: KnowledgeBase | None = None,
                  inline: bool = True) -> Notebook:
    """Parse an .ipynb document and translate its code cells in order."""
    kb = kb or default_kb()
    sources = _code_cells(data)
    defs = _collect_defs(sources) if inline else [{} for _ in sources]
    imports = _collect_imports(sources)
    cells = tuple(
        translate_cell(src, kb, defs=d, cell_id=i, imports=imp)
        for i, (src, d, imp) in enumerate(zip(sources, defs, imports), start=1)
    )
    return Notebook(cells)


def inline_functions(nb: Notebook, kb: KnowledgeBase | None = None) -> Notebook:
    """Re-translate every cell with user function definitions from earlier
    cells inlined at their call sites."""
    kb = kb or default_kb()
    sources = [c.source for c in nb.cells]
    defs = _collect_defs(sources)
    imports = _collect_imports(sources)
    cells = tuple(
        translate_cell(src, kb, defs=d, cell_id=c.id, imports=imp)
        for c, (src, d, imp) in zip(nb.cells, zip(sources, defs, imports))
    )
    return Notebook(cells, nb.warnings)
