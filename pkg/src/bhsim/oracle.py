"""Independent references used to check runs: static DFS, coverage, evidence and trace audits, game search."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from .engine import Agent, Engine, validate_decision
from .graph import Footprint

INF = float("inf")


class TraceError(ValueError):
    """The trace cannot be replayed."""


# -- static DFS -------------------------------------------------------------
def static_dfs_path(fp: Footprint, root: int = 0) -> list[tuple[int, int]]:
    """Moves ``(node, port)`` of one agent doing a port-order DFS on the static footprint.

    At a node entered through ``pin`` the agent tries ``pin+1, pin+2, ...``
    (mod degree) and finally leaves through ``pin``. Stepping onto a node
    already seen sends it straight back. At the root the order starts from 0
    and the walk ends when every root port has been used.
    """
    ports = fp.ports
    seen = {root}
    path: list[tuple[int, int]] = []

    def visit(v: int, pin: int) -> None:
        d = len(ports[v])
        first = 0 if pin < 0 else (pin + 1) % d
        order = [(first + k) % d for k in range(d if pin < 0 else d - 1)]
        for p in order:
            w, back, _ = ports[v][p]
            path.append((v, p))
            if w in seen:
                path.append((w, back))
                continue
            seen.add(w)
            visit(w, back)
        if pin >= 0:
            path.append((v, pin))

    if ports[root]:
        visit(root, -1)
    return path


def path_nodes(fp: Footprint, path: Iterable[tuple[int, int]], root: int) -> set[int]:
    out = {root}
    for v, p in path:
        out.add(fp.ports[v][p][0])
    return out


# -- trace replay -----------------------------------------------------------
def _lines(trace: Any) -> list[dict[str, Any]]:
    if hasattr(trace, "lines"):
        return list(trace.lines)
    if isinstance(trace, str):
        try:
            return [json.loads(ln) for ln in trace.splitlines() if ln.strip()]
        except json.JSONDecodeError as exc:
            raise TraceError(f"bad JSON line: {exc}") from None
    return list(trace)


def coverage(trace: Any) -> dict[int, set[int]]:
    """Nodes visited by each agent, replayed from a trace (text, list of events or sink)."""
    lines = _lines(trace)
    if not lines or "agents" not in lines[0]:
        raise TraceError("trace lacks a header line")
    try:
        visited = {int(a["id"]): {int(a["node"])} for a in lines[0]["agents"]}
        for ev in lines[1:]:
            if ev.get("kind") == "move-ok":
                visited[int(ev["agent"])].add(int(ev["to"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceError(f"malformed event: {exc!r}") from None
    return visited


def explored_by_one(fp: Footprint, visited: dict[int, set[int]]) -> bool:
    target = {v for v in range(fp.n) if v != fp.black_hole}
    return any(target <= s for s in visited.values())


def valid_evidence(fp: Footprint, node: int, port: int) -> bool:
    """True if ``port`` at ``node`` leads from a safe node into the black hole."""
    if fp.black_hole is None or not 0 <= node < fp.n or node == fp.black_hole:
        return False
    if not 0 <= port < len(fp.ports[node]):
        return False
    return fp.ports[node][port][0] == fp.black_hole


_ORDER = {"removal-set": 0, "write": 1, "move-ok": 2, "move-fail": 2, "death": 3,
          "detection": 4, "termination": 5}


def check_trace(trace: Any, fp: Footprint, f: int, capacity: int) -> list[str]:
    """Audit a full trace against the engine invariants; returns the violations found."""
    lines = _lines(trace)
    bad: list[str] = []
    if not lines or "agents" not in lines[0]:
        return ["missing header"]
    pos = {int(a["id"]): int(a["node"]) for a in lines[0]["agents"]}
    alive = {aid: True for aid in pos}
    boards: list[set[Any]] = [set() for _ in range(fp.n)]
    index = {(u, v): i for i, (u, v, _, _) in enumerate(fp.edges)}
    removed: set[int] = set()
    cur_round = -1
    last_rank = -1
    last_aid: dict[int, int] = {}
    terminated = False
    for ev in lines[1:]:
        kind = ev.get("kind")
        if kind == "summary":
            continue
        if terminated:
            bad.append("event after termination")
            break
        t = ev.get("round")
        if kind == "termination":
            terminated = True
            continue
        if t != cur_round:
            if kind != "removal-set":
                bad.append(f"round {t}: starts with {kind}")
            if cur_round >= 0 and t != cur_round + 1:
                bad.append(f"round {t}: expected {cur_round + 1}")
            for aid, v in pos.items():
                if alive[aid] and v == fp.black_hole:
                    bad.append(f"round {t}: agent {aid} alive on the black hole")
            cur_round, last_rank, last_aid = t, -1, {}
        rank = _ORDER.get(kind)
        if rank is None:
            bad.append(f"round {t}: unknown event {kind}")
            continue
        if rank < last_rank:
            bad.append(f"round {t}: {kind} out of order")
        last_rank = rank
        if rank in (1, 2, 3):
            aid = ev["agent"]
            if aid < last_aid.get(rank, -1):
                bad.append(f"round {t}: {kind} not in ascending id order")
            last_aid[rank] = aid
        if kind == "removal-set":
            try:
                removed = {index[tuple(sorted(pair))] for pair in ev["removed"]}
            except KeyError:
                bad.append(f"round {t}: removal of a non-edge")
                removed = set()
            why = validate_decision(fp, f, removed)
            if why is not None:
                bad.append(f"round {t}: {why}")
        elif kind == "write":
            aid, v = ev["agent"], ev["node"]
            if not alive[aid] or pos[aid] != v:
                bad.append(f"round {t}: agent {aid} wrote away from its node")
            if v == fp.black_hole:
                bad.append(f"round {t}: write on the black hole")
            boards[v].add(json.dumps(ev["key"]))
            if len(boards[v]) > capacity:
                bad.append(f"round {t}: whiteboard {v} over capacity")
        elif kind in ("move-ok", "move-fail"):
            aid = ev["agent"]
            if not alive[aid] or pos[aid] != ev["from"]:
                bad.append(f"round {t}: agent {aid} moved from the wrong place")
                continue
            nbr, pin, ei = fp.ports[ev["from"]][ev["port"]]
            if (kind == "move-ok") == (ei in removed):
                bad.append(f"round {t}: agent {aid} {kind} disagrees with the removal set")
            if kind == "move-ok":
                if ev["to"] != nbr or ev["pin"] != pin:
                    bad.append(f"round {t}: agent {aid} landed on the wrong port")
                pos[aid] = nbr
        elif kind == "death":
            aid = ev["agent"]
            if pos[aid] != fp.black_hole:
                bad.append(f"round {t}: agent {aid} died away from the black hole")
            alive[aid] = False
        elif kind == "detection":
            if not valid_evidence(fp, ev["node"], ev["port"]):
                bad.append(f"round {t}: detection evidence not incident to the black hole")
    for aid, v in pos.items():
        if alive[aid] and v == fp.black_hole:
            bad.append(f"agent {aid} survived on the black hole")
    return bad


# -- exhaustive adversary search --------------------------------------------
class _Choice:
    """Adversary slot used by the search: returns the preset removal set and remembers intents."""

    name = "search"
    seed = None

    def __init__(self, f: int) -> None:
        self.f = f
        self.choice: frozenset[int] = frozenset()
        self.intents: list[tuple[Agent, int, int]] = []

    def reset(self, engine: Engine) -> None:
        pass

    def decide(self, engine: Engine, intents: list[tuple[Agent, int, int]]) -> frozenset[int]:
        self.intents = list(intents)
        return self.choice


@dataclass
class SearchResult:
    """``worst`` is the latest detection round over all plays when every play detects.

    Otherwise ``script`` holds a replay (one row per round, unrolled to the
    depth) of a play without detection, and ``reason`` says why it counts:
    ``cycle`` (repeats forever), ``no-detection`` (run ended without one) or
    ``depth`` (only shown up to the depth limit).
    """

    worst: int | None
    script: list[dict[str, Any]] | None
    states: int
    complete: bool
    reason: str = ""
    choices: dict[Any, frozenset[int]] = field(default_factory=dict, repr=False)

    @property
    def counterexample(self) -> bool:
        return self.script is not None


def exhaustive_adversary_search(fp: Footprint, algorithm: Any, f: int = 1, depth: int | None = None,
                                root: int = 0, budget: int = 200_000,
                                placement: list | None = None) -> SearchResult:
    """Play every legal adversary against ``algorithm`` on ``fp``.

    Only removals of edges some agent wants to use matter, so each round
    branches over the legal subsets (size at most ``f``) of the intended
    edges. States are memoized on the engine's canonical key; revisiting a
    state on the current path means the adversary can repeat the loop forever.
    """
    if depth is None:
        depth = 4 * max(fp.m, 1) ** 2
    choice = _Choice(f)
    base = Engine(fp, algorithm, choice, root=root, placement=placement, stop_on_explored=False,
                  stuck_window=10 ** 9)
    memo: dict[Any, float] = {}
    best: dict[Any, frozenset[int]] = {}
    on_path: set[Any] = set()
    reason = {"why": ""}
    counter = {"n": 0, "over": False}
    legal_cache: dict[frozenset[int], bool] = {}

    def legal(s: frozenset[int]) -> bool:
        ok = legal_cache.get(s)
        if ok is None:
            ok = legal_cache[s] = validate_decision(fp, f, s) is None
        return ok

    def value(eng: Engine, d: int) -> float:
        """Rounds still needed for detection under the worst play from here."""
        key = eng.state_key()
        if key in on_path:
            reason["why"] = reason["why"] or "cycle"
            return INF
        if key in memo:
            return memo[key]
        if d >= depth:
            reason["why"] = reason["why"] or "depth"
            return INF
        counter["n"] += 1
        if counter["n"] > budget:
            counter["over"] = True
            return INF
        on_path.add(key)
        first = eng.clone(_Choice(f))
        first.adversary.choice = frozenset()
        out = first.step()
        wanted = sorted({ei for _, _, ei in first.adversary.intents})
        branches = [(frozenset(), first, out)]
        for k in range(1, min(f, len(wanted)) + 1):
            for combo in itertools.combinations(wanted, k):
                s = frozenset(combo)
                if not legal(s):
                    continue
                e2 = eng.clone(_Choice(f))
                e2.adversary.choice = s
                branches.append((s, e2, e2.step()))
        worst, pick = -1.0, frozenset()
        for s, e2, o in branches:
            if o is not None:
                v = 1.0 if o.kind == "detected" else INF
                if v == INF:
                    reason["why"] = reason["why"] or "no-detection"
            else:
                v = 1.0 + value(e2, d + 1)
            if v > worst:
                worst, pick = v, s
            if worst == INF:
                break
        on_path.discard(key)
        best[key] = pick
        if worst != INF or reason["why"] == "cycle":
            memo[key] = worst
        return worst

    v = value(base, 0)
    if counter["over"]:
        return SearchResult(None, None, counter["n"], False, "budget", best)
    if v != INF:
        return SearchResult(int(v), None, counter["n"], True, "", best)
    script = _unroll(base, best, depth, f)
    return SearchResult(None, script, counter["n"], True, reason["why"], best)


def _unroll(base: Engine, best: dict[Any, frozenset[int]], depth: int, f: int) -> list[dict[str, Any]]:
    eng = base.clone(_Choice(f))
    fp = eng.fp
    rows = []
    for t in range(depth):
        s = best.get(eng.state_key(), frozenset())
        eng.adversary.choice = s
        rows.append({"round": t, "removed": [[fp.edges[i][0], fp.edges[i][1]] for i in sorted(s)]})
        if eng.step() is not None:
            break
    return rows


def replay_rows_text(rows: list[dict[str, Any]]) -> str:
    return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in rows)


def run_checked(make: Callable[[], Any], fp: Footprint, adversary: Any, root: int, max_rounds: int):
    """Run with trace auditing; returns ``(outcome, engine, violations)``."""
    from .engine import TraceSink
    sink = TraceSink()
    alg = make()
    eng = Engine(fp, alg, adversary, root=root, trace=sink, check=True)
    out = eng.run(max_rounds)
    return out, eng, check_trace(sink, fp, adversary.f, alg.capacity)
