"""Ground-truth exploration, independent of the induction engine.

A plain breadth-first search over concrete states, usable as a reference
answer for anything the engine claims on systems small enough to explore
outright. Shares only the compiled executor with the rest of the package;
no unrolling, no solver, no induction.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .concrete import (
    DEFAULT_INPUT_BIT_CAP,
    DEFAULT_STATE_BIT_CAP,
    SystemExecutor,
)
from .ir import State, Trace, TransitionSystem


class OracleVerdict(Enum):
    UNSAFE = "unsafe"
    SAFE_WITHIN_EXPLORED = "safe-within-explored-space"


@dataclass(frozen=True)
class OracleResult:
    verdict: OracleVerdict
    trace: Optional[Trace]
    explored: int  # distinct states discovered
    depth: int  # states on the longest path considered


def bfs_check(
    sys: TransitionSystem,
    state_bit_cap: int = DEFAULT_STATE_BIT_CAP,
    input_bit_cap: int = DEFAULT_INPUT_BIT_CAP,
) -> OracleResult:
    """Explore the full reachable space breadth-first. Returns a shortest
    violating trace if any reachable state breaks a property, otherwise
    reports the space safe with the exploration statistics."""
    ex = SystemExecutor(sys, state_bit_cap, input_bit_cap)
    visited: set[tuple] = set()
    parent: dict[tuple, Optional[tuple[tuple, tuple]]] = {}
    queue: deque[tuple[tuple, int]] = deque()
    for s in ex.initial_states():
        if s not in visited:
            visited.add(s)
            parent[s] = None
            queue.append((s, 1))
    max_depth = 0
    while queue:
        s, depth = queue.popleft()
        max_depth = max(max_depth, depth)
        if ex.violated_prop(s) is not None:
            return OracleResult(
                OracleVerdict.UNSAFE, _trace_to(ex, s, parent), len(visited), depth
            )
        for u, ns in ex.successors(s):
            if ns not in visited:
                visited.add(ns)
                parent[ns] = (s, u)
                queue.append((ns, depth + 1))
    return OracleResult(OracleVerdict.SAFE_WITHIN_EXPLORED, None, len(visited), max_depth)


def reachable(
    sys: TransitionSystem,
    goal: State,
    state_bit_cap: int = DEFAULT_STATE_BIT_CAP,
    input_bit_cap: int = DEFAULT_INPUT_BIT_CAP,
) -> Optional[int]:
    """Depth (number of states on a shortest initial path) at which the
    goal state is reached, or None when it is unreachable."""
    ex = SystemExecutor(sys, state_bit_cap, input_bit_cap)
    goal_t = ex.state_tuple(goal)
    visited: set[tuple] = set()
    queue: deque[tuple[tuple, int]] = deque()
    for s in ex.initial_states():
        if s not in visited:
            visited.add(s)
            queue.append((s, 1))
    while queue:
        s, depth = queue.popleft()
        if s == goal_t:
            return depth
        for _, ns in ex.successors(s):
            if ns not in visited:
                visited.add(ns)
                queue.append((ns, depth + 1))
    return None


def _trace_to(
    ex: SystemExecutor,
    state: tuple,
    parent: dict[tuple, Optional[tuple[tuple, tuple]]],
) -> Trace:
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
    return Trace(
        tuple(ex.state_obj(s) for s in states),
        tuple(ex.input_obj(u) for u in inputs),
        ex.violated_prop(state),
    )
