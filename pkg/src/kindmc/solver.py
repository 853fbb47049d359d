"""Satisfiability checking for encoded queries.

Two backends:

  enum      built-in search over the concrete state space. Each query kind
            has a structured plan (breadth-first reachability for base
            cases, fixed-length frontier expansion for the forward
            condition and the inductive step) backed by the memoized
            SystemExecutor. Systems whose per-step footprint exceeds the
            bit cap fall back to plain enumeration of the unrolled
            variables when that fits, otherwise the result is unknown.

  external  a one-shot SMT-LIB 2 process: the serialized query on stdin,
            sat/unsat/unknown plus a get-value response on stdout. Output
            parsing is lenient; a missing or unreadable verdict yields
            unknown with a diagnostic rather than an exception.

Every satisfiable answer carries a full model (timed variables plus the
auxiliary booleans), and the model is re-checked against the query's
assertion before it is returned. For the built-in backend a failed
re-check is a bug and raises; for an external process it downgrades the
answer to unknown.
"""

from __future__ import annotations

import os
import shlex
import subprocess
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Optional, Sequence, Union

from .concrete import SystemExecutor, _domain
from .encoder import Marker, Query, QueryKind, serialize_smtlib
from .errors import ConfigError, InternalError, ProtocolError
from .ir import State, Trace, Value, eval_expr

Model = dict[str, Value]


class SolverStatus(Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SolverVerdict:
    status: SolverStatus
    model: Optional[Model] = None
    diagnostic: str = ""


@dataclass(frozen=True)
class SolverConfig:
    backend: str = "enum"  # "enum" | "external"
    command: tuple[str, ...] = ()
    timeout_ms: int = 0
    enum_bit_cap: int = 24


def resolve_config(
    solver_arg: Optional[str] = None, timeout_ms: int = 0, enum_bit_cap: int = 24
) -> SolverConfig:
    """Build a SolverConfig from a --solver argument, falling back to the
    KINDMC_SOLVER environment variable, then to the built-in backend.
    Accepted forms: "enum", "external:<command line>", or (env only) a bare
    command line."""
    spec = solver_arg
    if spec is None:
        spec = os.environ.get("KINDMC_SOLVER") or None
    if spec is None or spec == "enum":
        return SolverConfig("enum", (), timeout_ms, enum_bit_cap)
    if spec.startswith("external:"):
        spec = spec[len("external:") :]
    cmd = tuple(shlex.split(spec))
    if not cmd:
        raise ConfigError("external solver command is empty")
    return SolverConfig("external", cmd, timeout_ms, enum_bit_cap)


# ---------------------------------------------------------------------------
# Session


class Solver:
    """A checking session. Reusing one session across iterations shares the
    per-system successor tables."""

    def __init__(self, cfg: SolverConfig) -> None:
        self.cfg = cfg
        self.calls = 0
        self._executors: dict[int, tuple[object, SystemExecutor]] = {}

    def check(self, q: Query) -> SolverVerdict:
        self.calls += 1
        if self.cfg.backend == "external":
            return _check_external(q, self.cfg)
        return self._check_enum(q)

    def _executor(self, q: Query) -> Optional[SystemExecutor]:
        key = id(q.system)
        hit = self._executors.get(key)
        if hit is not None:
            return hit[1]
        cap = self.cfg.enum_bit_cap
        if q.system.state_bits + q.system.input_bits > cap:
            return None
        try:
            ex = SystemExecutor(q.system, state_bit_cap=cap, input_bit_cap=cap)
        except ConfigError:
            return None
        self._executors[key] = (q.system, ex)
        return ex

    def _check_enum(self, q: Query) -> SolverVerdict:
        ex = self._executor(q)
        if ex is None:
            return _naive_check(q, self.cfg)
        if q.kind in (QueryKind.BASE, QueryKind.EXTENDED_BASE):
            return _search_reach(q, ex)
        if q.kind is QueryKind.FORWARD:
            return _search_forward(q, ex)
        if q.kind is QueryKind.INDUCTIVE:
            return _search_inductive(q, ex)
        raise InternalError(f"no plan for query kind {q.kind}")


def check(q: Query, cfg: Optional[SolverConfig] = None) -> SolverVerdict:
    return Solver(cfg or SolverConfig()).check(q)


# ---------------------------------------------------------------------------
# Model assembly (enum backend)


def _zero_inputs(ex: SystemExecutor) -> tuple[Value, ...]:
    return tuple(_domain(d.sort)[0] for d in ex.input_decls)


def _assemble_model(
    q: Query,
    ex: SystemExecutor,
    states: Sequence[tuple],
    inputs: Sequence[tuple],
) -> Model:
    """Timed-variable assignment from a concrete path, padded to length k by
    repeating the last state with the least inputs, plus the auxiliary
    booleans computed from their definitions."""
    k = q.k
    model: Model = {}
    pad_u = _zero_inputs(ex)
    for step in range(1, k + 1):
        s = states[step - 1] if step <= len(states) else states[-1]
        for i, name in enumerate(ex.state_names):
            model[f"{name}@{step}"] = s[i]
        if step < k:
            u = inputs[step - 1] if step - 1 < len(inputs) else pad_u
            for i, name in enumerate(ex.input_names):
                model[f"{name}@{step}"] = u[i]
    _finish_model(q, model, strict=True)
    return model


def _finish_model(q: Query, model: Model, strict: bool) -> Optional[str]:
    """Fill in auxiliary booleans from their definitions and re-check the
    main assertion. Returns a complaint (or raises when strict) if the
    model does not actually satisfy the query."""
    for name, defn in q.marker_defs:
        model[name] = eval_expr(defn, model)
    ok = eval_expr(q.assertion, model)
    if ok is not True:
        msg = f"model fails re-check for {q.kind.value} k={q.k}"
        if strict:
            raise InternalError(msg)
        return msg
    return None


# ---------------------------------------------------------------------------
# Structured searches


def _path_to(
    state: tuple, parent: dict[tuple, Optional[tuple[tuple, tuple]]]
) -> tuple[list[tuple], list[tuple]]:
    states = [state]
    inputs: list[tuple] = []
    cur = state
    while True:
        link = parent[cur]
        if link is None:
            break
        prev, u = link
        states.append(prev)
        inputs.append(u)
        cur = prev
    states.reverse()
    inputs.reverse()
    return states, inputs


def _search_reach(q: Query, ex: SystemExecutor) -> SolverVerdict:
    """Base case and extended base case: shortest event over initial paths,
    found by breadth-first search with a global visited set."""
    target_tuples = [(t, ex.state_tuple(t.first_state)) for t in q.targets]

    def event(s: tuple) -> bool:
        if q.include_violations and ex.violated_prop(s) is not None:
            return True
        return any(s == tt for _, tt in target_tuples)

    visited: set[tuple] = set()
    parent: dict[tuple, Optional[tuple[tuple, tuple]]] = {}
    queue: deque[tuple[tuple, int]] = deque()
    for s in ex.initial_states():
        if s not in visited:
            visited.add(s)
            parent[s] = None
            queue.append((s, 1))
    while queue:
        s, depth = queue.popleft()
        if event(s):
            states, inputs = _path_to(s, parent)
            return SolverVerdict(SolverStatus.SAT, _assemble_model(q, ex, states, inputs))
        if depth < q.k:
            for u, ns in ex.successors(s):
                if ns not in visited:
                    visited.add(ns)
                    parent[ns] = (s, u)
                    queue.append((ns, depth + 1))
    return SolverVerdict(SolverStatus.UNSAT)


def _search_forward(q: Query, ex: SystemExecutor) -> SolverVerdict:
    """Forward condition: a k-state initial path whose last state is not
    halting. Fixed length, so frontiers are per-depth with no global
    visited set."""
    frontier: list[tuple] = list(ex.initial_states())
    parents: list[dict[tuple, Optional[tuple[tuple, tuple]]]] = [
        {s: None for s in frontier}
    ]
    for _ in range(q.k - 1):
        nxt: list[tuple] = []
        pmap: dict[tuple, Optional[tuple[tuple, tuple]]] = {}
        for s in frontier:
            for u, ns in ex.successors(s):
                if ns not in pmap:
                    pmap[ns] = (s, u)
                    nxt.append(ns)
        frontier = nxt
        parents.append(pmap)
        if not frontier:
            return SolverVerdict(SolverStatus.UNSAT)
    for s in frontier:
        if not ex.halt_fn(s):
            states, inputs = _unwind(s, parents)
            return SolverVerdict(SolverStatus.SAT, _assemble_model(q, ex, states, inputs))
    return SolverVerdict(SolverStatus.UNSAT)


def _unwind(
    state: tuple, parents: list[dict[tuple, Optional[tuple[tuple, tuple]]]]
) -> tuple[list[tuple], list[tuple]]:
    states = [state]
    inputs: list[tuple] = []
    cur = state
    for pmap in reversed(parents[1:]):
        prev, u = pmap[cur]  # type: ignore[misc]
        states.append(prev)
        inputs.append(u)
        cur = prev
    states.reverse()
    inputs.reverse()
    return states, inputs


def _all_states(ex: SystemExecutor):
    return product(*ex._state_domains)


def _search_inductive(q: Query, ex: SystemExecutor) -> SolverVerdict:
    """Inductive step: a k-state path (any start) with all properties held
    on the first k-1 states and some property broken at state k."""
    k = q.k

    def holds(s: tuple) -> bool:
        return ex.violated_prop(s) is None

    if k == 1:
        for s in _all_states(ex):
            if not holds(s):
                return SolverVerdict(SolverStatus.SAT, _assemble_model(q, ex, [s], []))
        return SolverVerdict(SolverStatus.UNSAT)

    frontier: list[tuple] = [s for s in _all_states(ex) if holds(s)]
    parents: list[dict[tuple, Optional[tuple[tuple, tuple]]]] = [
        {s: None for s in frontier}
    ]
    for depth in range(2, k + 1):
        last = depth == k
        nxt: list[tuple] = []
        pmap: dict[tuple, Optional[tuple[tuple, tuple]]] = {}
        for s in frontier:
            for u, ns in ex.successors(s):
                if last:
                    if not holds(ns):
                        pmap[ns] = (s, u)
                        parents.append(pmap)
                        states, inputs = _unwind(ns, parents)
                        return SolverVerdict(
                            SolverStatus.SAT, _assemble_model(q, ex, states, inputs)
                        )
                elif ns not in pmap and holds(ns):
                    pmap[ns] = (s, u)
                    nxt.append(ns)
        if last:
            return SolverVerdict(SolverStatus.UNSAT)
        frontier = nxt
        parents.append(pmap)
        if not frontier:
            return SolverVerdict(SolverStatus.UNSAT)
    raise InternalError("inductive search fell through")


# ---------------------------------------------------------------------------
# Naive enumeration fallback


def _naive_check(q: Query, cfg: SolverConfig) -> SolverVerdict:
    total_bits = sum(tv.sort.bits for tv in q.decls)
    if total_bits > cfg.enum_bit_cap:
        return SolverVerdict(
            SolverStatus.UNKNOWN,
            diagnostic=(
                f"query needs {total_bits} bits, enumeration cap is"
                f" {cfg.enum_bit_cap}; use an external solver"
            ),
        )
    domains = [_domain(tv.sort) for tv in q.decls]
    names = [tv.name for tv in q.decls]
    for combo in product(*domains):
        model: Model = dict(zip(names, combo))
        for mname, defn in q.marker_defs:
            model[mname] = eval_expr(defn, model)
        if eval_expr(q.assertion, model) is True:
            return SolverVerdict(SolverStatus.SAT, model)
    return SolverVerdict(SolverStatus.UNSAT)


# ---------------------------------------------------------------------------
# External backend


def _check_external(q: Query, cfg: SolverConfig) -> SolverVerdict:
    doc = serialize_smtlib(q)
    timeout = cfg.timeout_ms / 1000.0 if cfg.timeout_ms > 0 else None
    try:
        proc = subprocess.run(
            list(cfg.command),
            input=doc,
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except FileNotFoundError:
        raise ConfigError(f"solver command not found: {cfg.command[0]}") from None
    except subprocess.TimeoutExpired:
        return SolverVerdict(
            SolverStatus.UNKNOWN, diagnostic=f"solver timed out after {cfg.timeout_ms}ms"
        )
    verdict = None
    rest_lines: list[str] = []
    for idx, line in enumerate(proc.stdout.splitlines()):
        t = line.strip()
        if t in ("sat", "unsat", "unknown"):
            verdict = t
            rest_lines = proc.stdout.splitlines()[idx + 1 :]
            break
    if verdict is None:
        excerpt = (proc.stdout + proc.stderr).strip().splitlines()
        return SolverVerdict(
            SolverStatus.UNKNOWN,
            diagnostic="no sat/unsat verdict from solver: "
            + ("; ".join(excerpt[:3]) if excerpt else "empty output"),
        )
    if verdict == "unsat":
        return SolverVerdict(SolverStatus.UNSAT)
    if verdict == "unknown":
        return SolverVerdict(SolverStatus.UNKNOWN, diagnostic="solver answered unknown")
    raw = _parse_value_response("\n".join(rest_lines))
    if raw is None:
        return SolverVerdict(
            SolverStatus.UNKNOWN, diagnostic="sat, but the model was unreadable"
        )
    model: Model = {}
    for tv in q.decls:
        if tv.name not in raw:
            return SolverVerdict(
                SolverStatus.UNKNOWN,
                diagnostic=f"sat, but the model has no value for {tv.name}",
            )
        v = raw[tv.name]
        if tv.sort.is_bool:
            if not isinstance(v, bool):
                return SolverVerdict(
                    SolverStatus.UNKNOWN,
                    diagnostic=f"sat, but {tv.name} has a non-boolean value",
                )
        else:
            if isinstance(v, bool) or not isinstance(v, int) or not tv.sort.contains(v):
                return SolverVerdict(
                    SolverStatus.UNKNOWN,
                    diagnostic=f"sat, but {tv.name} is out of range for {tv.sort}",
                )
        model[tv.name] = v
    complaint = _finish_model(q, model, strict=False)
    if complaint is not None:
        return SolverVerdict(SolverStatus.UNKNOWN, diagnostic=complaint)
    return SolverVerdict(SolverStatus.SAT, model)


def _parse_value_response(text: str) -> Optional[Model]:
    """Parse a get-value response: ((name value) ...). Returns None when the
    text is not in that shape."""
    from .errors import ParseError
    from .frontend import _read

    try:
        forms = _read(text)
    except ParseError:
        return None
    for form in forms:
        if form.is_atom or form.items is None:
            continue
        out: Model = {}
        ok = True
        for pair in form.items:
            if pair.is_atom or pair.items is None or len(pair.items) != 2:
                ok = False
                break
            name_node, val_node = pair.items
            if not name_node.is_atom:
                ok = False
                break
            val = _parse_value(val_node)
            if val is None:
                ok = False
                break
            out[name_node.text or ""] = val
        if ok and out:
            return out
    return None


def _parse_value(node) -> Optional[Value]:
    if node.is_atom:
        t = node.text or ""
        if t == "true":
            return True
        if t == "false":
            return False
        if t.startswith("#b") and len(t) > 2:
            try:
                return int(t[2:], 2)
            except ValueError:
                return None
        if t.startswith("#x") and len(t) > 2:
            try:
                return int(t[2:], 16)
            except ValueError:
                return None
        return None
    items = node.items or []
    # (_ bv<value> <width>)
    if (
        len(items) == 3
        and items[0].is_atom
        and items[0].text == "_"
        and items[1].is_atom
        and (items[1].text or "").startswith("bv")
    ):
        try:
            return int((items[1].text or "")[2:])
        except ValueError:
            return None
    return None


# ---------------------------------------------------------------------------
# Model decoding


@dataclass(frozen=True)
class DecodedModel:
    trace: Trace
    depth: int
    matched_target: Optional[int] = None


def _state_at(q: Query, model: Model, step: int) -> State:
    vals = {}
    for d in q.system.state_vars:
        key = f"{d.name}@{step}"
        if key not in model:
            raise ProtocolError(f"model has no value for {key}")
        vals[d.name] = model[key]
    return State(vals)


def _input_at(q: Query, model: Model, step: int) -> State:
    vals = {}
    for d in q.system.input_vars:
        key = f"{d.name}@{step}"
        if key not in model:
            raise ProtocolError(f"model has no value for {key}")
        vals[d.name] = model[key]
    return State(vals)


def _first_false_prop(q: Query, state: State) -> str:
    for p in q.system.props:
        if eval_expr(p.expr, state) is False:
            return p.name
    raise ProtocolError("final state violates no property")


def _marker_key(m: Marker) -> tuple[int, int, int]:
    return (m.depth, 0 if m.target_id is None else 1, m.target_id or 0)


def decode_model(q: Query, model: Model) -> DecodedModel:
    """Turn a satisfying assignment into a concrete trace.

    Base-case models name their event through the auxiliary booleans: the
    fired marker of least depth wins, property violations before target
    hits. Forward and inductive models decode to the full k-state path.
    """
    if q.kind in (QueryKind.BASE, QueryKind.EXTENDED_BASE):
        fired = [
            m
            for m in q.markers
            if model.get(m.name) is True and model.get(f"path@@{m.depth}") is True
        ]
        if not fired:
            raise ProtocolError("satisfiable base case but no fired marker")
        m = min(fired, key=_marker_key)
        states = tuple(_state_at(q, model, i) for i in range(1, m.depth + 1))
        inputs = tuple(_input_at(q, model, i) for i in range(1, m.depth))
        if m.target_id is None:
            violated = _first_false_prop(q, states[-1])
            return DecodedModel(Trace(states, inputs, violated), m.depth)
        return DecodedModel(Trace(states, inputs), m.depth, matched_target=m.target_id)

    states = tuple(_state_at(q, model, i) for i in range(1, q.k + 1))
    inputs = tuple(_input_at(q, model, i) for i in range(1, q.k))
    if q.kind is QueryKind.INDUCTIVE:
        violated = _first_false_prop(q, states[-1])
        return DecodedModel(Trace(states, inputs, violated), q.k)
    return DecodedModel(Trace(states, inputs), q.k)
