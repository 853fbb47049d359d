"""Concrete-state execution of a transition system.

Expressions are compiled to nested closures over value tuples, and the
transition relation is split into definitional assignments (conjuncts of the
form (= (next x) e) with a next-free right-hand side) plus a residual
predicate. Successor enumeration then only iterates over input valuations and
genuinely unconstrained next variables, which keeps explicit-state search
usable at the widths the benchmark families need.

Enumeration order contract, relied on for determinism everywhere: value
tuples follow variable declaration order, and enumeration is ascending with
the first declared variable most significant (itertools.product order).
Bool orders as false < true.
"""

from __future__ import annotations

from itertools import product
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence

from .errors import ConfigError, InternalError
from .ir import (
    Expr,
    Sort,
    State,
    TransitionSystem,
    Value,
    VarDecl,
    free_names,
    next_names,
)

EvalFn = Callable[..., Value]

DEFAULT_STATE_BIT_CAP = 20
DEFAULT_INPUT_BIT_CAP = 16


def _domain(sort: Sort) -> Sequence[Value]:
    if sort.is_bool:
        return (False, True)
    return range(sort.num_values())


def compile_expr(
    e: Expr,
    slots: Mapping[str, int],
    next_slots: Optional[Mapping[str, int]] = None,
) -> EvalFn:
    """Compile to a closure fn(env, nxt=None) over value tuples.

    slots maps plain variable names to indices in env; next_slots maps state
    variable names to indices in nxt. Same value conventions as eval_expr.
    """
    op = e.op
    if op == "const":
        v = e.value
        return lambda env, nxt=None: v
    if op == "var":
        i = slots[e.name]
        return lambda env, nxt=None: env[i]
    if op == "next":
        if next_slots is None:
            raise InternalError(f"next({e.name}) compiled without next slots")
        j = next_slots[e.name]
        return lambda env, nxt=None: nxt[j]
    fs = tuple(compile_expr(a, slots, next_slots) for a in e.args)
    if op == "not":
        (f0,) = fs
        return lambda env, nxt=None: not f0(env, nxt)
    if op == "and":
        return lambda env, nxt=None: all(f(env, nxt) for f in fs)
    if op == "or":
        return lambda env, nxt=None: any(f(env, nxt) for f in fs)
    if op == "implies":
        fa, fb = fs
        return lambda env, nxt=None: (not fa(env, nxt)) or bool(fb(env, nxt))
    if op == "iff":
        fa, fb = fs
        return lambda env, nxt=None: bool(fa(env, nxt)) == bool(fb(env, nxt))
    if op == "ite":
        fc, ft, fe = fs
        return lambda env, nxt=None: ft(env, nxt) if fc(env, nxt) else fe(env, nxt)
    if op == "=":
        fa, fb = fs
        return lambda env, nxt=None: fa(env, nxt) == fb(env, nxt)
    if op == "bvnot":
        (f0,) = fs
        mask = (1 << e.sort.width) - 1
        return lambda env, nxt=None: mask ^ f0(env, nxt)
    fa, fb = fs
    if op == "bvadd":
        mask = (1 << e.sort.width) - 1
        return lambda env, nxt=None: (fa(env, nxt) + fb(env, nxt)) & mask
    if op == "bvsub":
        mask = (1 << e.sort.width) - 1
        return lambda env, nxt=None: (fa(env, nxt) - fb(env, nxt)) & mask
    if op == "bvmul":
        mask = (1 << e.sort.width) - 1
        return lambda env, nxt=None: (fa(env, nxt) * fb(env, nxt)) & mask
    if op == "bvand":
        return lambda env, nxt=None: fa(env, nxt) & fb(env, nxt)
    if op == "bvor":
        return lambda env, nxt=None: fa(env, nxt) | fb(env, nxt)
    if op == "bvxor":
        return lambda env, nxt=None: fa(env, nxt) ^ fb(env, nxt)
    if op == "bvule":
        return lambda env, nxt=None: fa(env, nxt) <= fb(env, nxt)
    if op == "bvult":
        return lambda env, nxt=None: fa(env, nxt) < fb(env, nxt)
    if op == "bvuge":
        return lambda env, nxt=None: fa(env, nxt) >= fb(env, nxt)
    if op == "bvugt":
        return lambda env, nxt=None: fa(env, nxt) > fb(env, nxt)
    raise InternalError(f"unknown operator {op!r}")


def _flatten_and(e: Expr) -> list[Expr]:
    if e.op == "and":
        out: list[Expr] = []
        for a in e.args:
            out.extend(_flatten_and(a))
        return out
    if e.op == "const" and e.sort.is_bool and e.value:
        return []
    return [e]


def _as_definition(c: Expr, kind: str) -> Optional[tuple[str, Expr]]:
    """Match (= target rhs) or (= rhs target) where target is a next(x)
    reference (kind 'next') or a plain variable (kind 'var') and rhs has no
    next references."""
    if c.op != "=":
        return None
    l, r = c.args
    for lhs, rhs in ((l, r), (r, l)):
        if lhs.op == kind and not next_names(rhs):
            return lhs.name, rhs
    return None


class SystemExecutor:
    """Memoized concrete semantics for one system.

    State and input valuations are plain tuples in declaration order.
    """

    def __init__(
        self,
        sys: TransitionSystem,
        state_bit_cap: int = DEFAULT_STATE_BIT_CAP,
        input_bit_cap: int = DEFAULT_INPUT_BIT_CAP,
    ) -> None:
        sys.validate()
        if sys.state_bits > state_bit_cap:
            raise ConfigError(
                f"system has {sys.state_bits} state bits, cap is {state_bit_cap}"
            )
        if sys.input_bits > input_bit_cap:
            raise ConfigError(
                f"system has {sys.input_bits} input bits per step, cap is {input_bit_cap}"
            )
        self.system = sys
        self.state_decls: tuple[VarDecl, ...] = sys.state_vars
        self.input_decls: tuple[VarDecl, ...] = sys.input_vars
        self.state_names = tuple(v.name for v in self.state_decls)
        self.input_names = tuple(v.name for v in self.input_decls)
        self._state_slots = {n: i for i, n in enumerate(self.state_names)}
        nstate = len(self.state_names)
        # trans env = state values followed by input values
        self._step_slots = dict(self._state_slots)
        for i, n in enumerate(self.input_names):
            self._step_slots[n] = nstate + i
        self._state_domains = tuple(_domain(v.sort) for v in self.state_decls)
        self._input_space: tuple[tuple[Value, ...], ...] = tuple(
            product(*(_domain(v.sort) for v in self.input_decls))
        )

        defs, residual = self._split_trans()
        self._next_defs = tuple(
            (self._state_slots[name], compile_expr(rhs, self._step_slots))
            for name, rhs in defs
        )
        self._free_next = tuple(
            i for i, n in enumerate(self.state_names) if n not in dict(defs)
        )
        self._residual = tuple(
            compile_expr(c, self._step_slots, self._state_slots) for c in residual
        )

        self.halt_fn: EvalFn = compile_expr(sys.halt, self._state_slots)
        self.prop_fns: tuple[tuple[str, EvalFn], ...] = tuple(
            (p.name, compile_expr(p.expr, self._state_slots)) for p in sys.props
        )

        self._succ_memo: dict[tuple, tuple[tuple[tuple, tuple], ...]] = {}
        self._initial: Optional[tuple[tuple, ...]] = None

    # -- structure extraction

    def _split_trans(self) -> tuple[list[tuple[str, Expr]], list[Expr]]:
        defs: list[tuple[str, Expr]] = []
        have: set[str] = set()
        residual: list[Expr] = []
        for c in _flatten_and(self.system.trans):
            d = _as_definition(c, "next")
            if d is not None and d[0] not in have:
                have.add(d[0])
                defs.append(d)
            else:
                residual.append(c)
        return defs, residual

    def _split_init(self) -> tuple[list[tuple[str, Expr]], list[Expr], list[str]]:
        """Topologically ordered definitional init conjuncts, residual
        conjuncts, and the names left free (assigned by enumeration)."""
        pending = _flatten_and(self.system.init)
        candidates: dict[str, tuple[int, Expr]] = {}
        for idx, c in enumerate(pending):
            d = _as_definition(c, "var")
            if d is not None and d[0] in self._state_slots and d[0] not in candidates:
                candidates[d[0]] = (idx, d[1])
        # a dependency is resolvable once defined, or immediately if it can
        # never be defined (then enumeration assigns it before any defs run)
        never_defined = set(self.state_names) - candidates.keys()
        defs: list[tuple[str, Expr]] = []
        defined: set[str] = set()
        chosen: set[int] = set()
        changed = True
        while changed:
            changed = False
            for name, (idx, rhs) in candidates.items():
                if name in defined:
                    continue
                if free_names(rhs) <= defined | never_defined:
                    defs.append((name, rhs))
                    defined.add(name)
                    chosen.add(idx)
                    changed = True
        residual = [c for i, c in enumerate(pending) if i not in chosen]
        free = [n for n in self.state_names if n not in defined]
        return defs, residual, free

    # -- enumeration

    def initial_states(self) -> tuple[tuple, ...]:
        """All states satisfying init, in ascending declaration order."""
        if self._initial is not None:
            return self._initial
        defs, residual, free = self._split_init()
        free_idx = [self._state_slots[n] for n in free]
        domains = [self._state_domains[i] for i in free_idx]
        def_fns = [(self._state_slots[n], compile_expr(rhs, self._state_slots)) for n, rhs in defs]
        res_fns = [compile_expr(c, self._state_slots) for c in residual]
        init_fn = compile_expr(self.system.init, self._state_slots)
        found: list[tuple] = []
        scratch: list[Value] = [d[0] for d in self._state_domains]
        for combo in product(*domains) if domains else (tuple(),):
            for pos, v in zip(free_idx, combo):
                scratch[pos] = v
            ok = True
            # definitions may depend on each other; run in topological order
            for pos, fn in def_fns:
                scratch[pos] = fn(scratch)
            for fn in res_fns:
                if not fn(scratch):
                    ok = False
                    break
            if ok and init_fn(scratch):
                found.append(tuple(scratch))
        found.sort(key=self._order_key)
        self._initial = tuple(found)
        return self._initial

    def _order_key(self, t: tuple) -> tuple:
        return tuple(int(v) for v in t)

    def successors(self, s: tuple) -> tuple[tuple[tuple, tuple], ...]:
        """All (input valuation, next state) pairs reachable in one step."""
        hit = self._succ_memo.get(s)
        if hit is not None:
            return hit
        out: list[tuple[tuple, tuple]] = []
        free_domains = [self._state_domains[i] for i in self._free_next]
        for u in self._input_space:
            env = s + u
            base: list[Value] = list(s)
            for pos, fn in self._next_defs:
                base[pos] = fn(env)
            for combo in product(*free_domains) if free_domains else (tuple(),):
                for pos, v in zip(self._free_next, combo):
                    base[pos] = v
                nxt = tuple(base)
                if all(fn(env, nxt) for fn in self._residual):
                    out.append((u, nxt))
        result = tuple(out)
        self._succ_memo[s] = result
        return result

    # -- conversions

    def state_obj(self, t: tuple) -> State:
        return State(dict(zip(self.state_names, t)))

    def input_obj(self, t: tuple) -> State:
        return State(dict(zip(self.input_names, t)))

    def state_tuple(self, st: State) -> tuple:
        if st.names() != tuple(sorted(self.state_names)):
            raise InternalError(
                f"state binds {st.names()}, system declares {tuple(sorted(self.state_names))}"
            )
        return tuple(st[n] for n in self.state_names)

    def violated_prop(self, t: tuple) -> Optional[str]:
        """Name of the first declared property false at this state, if any."""
        for name, fn in self.prop_fns:
            if not fn(t):
                return name
        return None
