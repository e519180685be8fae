"""Synchronous Look-Compute-Move round scheduler with bounded whiteboards and JSONL traces."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import IO, Any, Callable, Iterable, Protocol

from .graph import Footprint, validate

FORMAT_VERSION = 1


class ConfigError(ValueError):
    """The run cannot start: roster, footprint or algorithm mismatch."""


class CapacityExceeded(RuntimeError):
    """A whiteboard write would exceed the per-node slot budget."""


class Agent:
    """Engine-side record of one agent.

    ``last_ok`` is the result of the agent's most recent move attempt (``None``
    before any attempt), ``pin`` the port through which it last entered a node.
    ``mind`` holds the algorithm-specific state.
    """

    __slots__ = ("id", "pos", "alive", "last_ok", "pin", "mind", "visited")

    def __init__(self, aid: int, pos: int, mind: Any) -> None:
        self.id = aid
        self.pos = pos
        self.alive = True
        self.last_ok: bool | None = None
        self.pin = -1
        self.mind = mind
        self.visited = 1 << pos

    def __repr__(self) -> str:
        return f"Agent({self.id}@{self.pos}{'' if self.alive else ' dead'})"


class NodeContext:
    """Everything an agent may look at on a node during one round.

    ``board`` is the round-start whiteboard snapshot; ``agents`` are the alive
    agents on the node sorted by id. Algorithms report their outputs through
    :meth:`move`, :meth:`write` and :meth:`detect`.
    """

    __slots__ = ("node", "degree", "board", "agents", "round", "_moves", "_writes", "_detections")

    def __init__(self) -> None:
        self._moves: list[tuple[Agent, int]] = []
        self._writes: list[tuple[int, int, Any, int, int]] = []
        self._detections: list[tuple[int, int, int, int]] = []

    def move(self, agent: Agent, port: int) -> None:
        if not 0 <= port < self.degree:
            raise ValueError(f"agent {agent.id}: port {port} invalid at degree {self.degree}")
        self._moves.append((agent, port))

    def write(self, agent: Agent, key: Any, parent: int, label: int) -> None:
        self._writes.append((agent.id, self.node, key, parent, label))

    def detect(self, agent: Agent, port: int, rank: int = 0) -> None:
        """Declare the edge at ``port`` black-hole incident; lowest ``rank`` wins ties."""
        self._detections.append((rank, agent.id, self.node, port))


class Algorithm(Protocol):
    name: str
    capacity: int
    needs_black_hole: bool

    def setup(self, fp: Footprint, root: int) -> list[tuple[int, int, Any]]: ...

    def decide(self, ctx: NodeContext) -> None: ...

    def signature(self, agent: Agent) -> Any: ...

    def bound(self, fp: Footprint) -> int: ...


class Adversary(Protocol):
    name: str
    f: int
    seed: int | None

    def reset(self, engine: "Engine") -> None: ...

    def decide(self, engine: "Engine", intents: list[tuple[Agent, int, int]]) -> frozenset[int]: ...


@dataclass
class Outcome:
    kind: str  # detected | explored | timeout | stuck | all-dead
    rounds: int
    deaths: list[int] = field(default_factory=list)
    detection: tuple[int, int, int] | None = None  # (survivor, node, port)

    def summary(self, fp: Footprint, seed: int | None) -> dict[str, Any]:
        det = self.detection
        return {
            "outcome": self.kind,
            "rounds": self.rounds,
            "deaths": list(self.deaths),
            "detected_node": det[1] if det else None,
            "detected_port": det[2] if det else None,
            "survivor": det[0] if det else None,
            "footprint_hash": fp.hash,
            "seed": seed,
        }


def detection_report(outcome: Outcome) -> tuple[int, int, int]:
    """Return ``(node, port, survivor)`` for a detected outcome."""
    if outcome.kind != "detected" or outcome.detection is None:
        raise ValueError(f"no detection in a {outcome.kind!r} outcome")
    survivor, node, port = outcome.detection
    return node, port, survivor


class TraceSink:
    """Collects trace lines in memory and/or streams them as JSONL."""

    def __init__(self, stream: IO[str] | None = None, keep: bool = True) -> None:
        self.stream = stream
        self.keep = keep
        self.lines: list[dict[str, Any]] = []

    def emit(self, obj: dict[str, Any]) -> None:
        if self.keep:
            self.lines.append(obj)
        if self.stream is not None:
            self.stream.write(json.dumps(obj, separators=(",", ":")) + "\n")

    def dumps(self) -> str:
        return "".join(json.dumps(o, separators=(",", ":")) + "\n" for o in self.lines)


class Engine:
    """One simulation run: footprint, roster, whiteboards, adversary and round loop."""

    def __init__(self, fp: Footprint, algorithm: Algorithm, adversary: Adversary, root: int = 0,
                 trace: TraceSink | None = None, stuck_window: int | None = None,
                 check: bool = False, placement: list[tuple[int, int, Any]] | None = None,
                 stop_on_explored: bool | None = None) -> None:
        report = validate(fp)
        if not report.ok:
            raise ConfigError("invalid footprint: " + "; ".join(report.violations))
        if algorithm.needs_black_hole and fp.black_hole is None:
            raise ConfigError(f"{algorithm.name} needs a footprint with a black hole")
        if placement is None:
            if not 0 <= root < fp.n or root == fp.black_hole:
                raise ConfigError(f"root {root} must be a safe node of the footprint")
        self.fp = fp
        self.algorithm = algorithm
        self.adversary = adversary
        self.ports = fp.ports
        self.bh = -1 if fp.black_hole is None else fp.black_hole
        self.boards: list[dict[Any, tuple[int, int]]] = [dict() for _ in range(fp.n)]
        self.capacity = algorithm.capacity
        roster = placement if placement is not None else algorithm.setup(fp, root)
        ids = [aid for aid, _, _ in roster]
        if len(set(ids)) != len(ids):
            raise ConfigError("agent ids must be distinct")
        for _, pos, _ in roster:
            if not 0 <= pos < fp.n or pos == fp.black_hole:
                raise ConfigError(f"agent placed on unsafe or missing node {pos}")
        self.agents = sorted((Agent(aid, pos, mind) for aid, pos, mind in roster), key=lambda a: a.id)
        self.round = 0
        self.deaths: list[int] = []
        self.trace = trace
        self.check = check
        m = fp.m
        self.stuck_window = stuck_window if stuck_window is not None else 4 * self.capacity * m * m + 16
        self._still = 0
        self._prev_sig: Any = None
        self.removed_last: frozenset[int] = frozenset()
        self.outcome: Outcome | None = None
        self.full_mask = (1 << fp.n) - 1
        if fp.black_hole is not None:
            self.full_mask &= ~(1 << fp.black_hole)
        if stop_on_explored is None:
            stop_on_explored = fp.black_hole is None
        self.stop_on_explored = stop_on_explored
        self.write_count = 0
        self.on_round: Callable[["Engine", dict[str, Any]], None] | None = None
        adversary.reset(self)
        if trace is not None:
            trace.emit({
                "format_version": FORMAT_VERSION,
                "footprint_hash": fp.hash,
                "algorithm": algorithm.name,
                "adversary": adversary.name,
                "seed": adversary.seed,
                "agents": [{"id": a.id, "node": a.pos} for a in self.agents],
            })

    # -- views -----------------------------------------------------------
    def alive_agents(self) -> list[Agent]:
        return [a for a in self.agents if a.alive]

    def explored(self) -> bool:
        full = self.full_mask
        return any(a.visited & full == full for a in self.agents)

    def look_view(self, agent: Agent) -> dict[str, Any]:
        """Round-start local view of an agent, as a plain dict (debugging and tests)."""
        here = [b for b in self.agents if b.alive and b.pos == agent.pos and b is not agent]
        return {
            "degree": len(self.ports[agent.pos]),
            "board": dict(self.boards[agent.pos]),
            "others": [readable(b) for b in here],
            "last_ok": agent.last_ok,
            "pin": agent.pin,
        }

    def write_whiteboard(self, node: int, key: Any, parent: int, label: int) -> None:
        if node == self.bh:
            raise ValueError("cannot write on the black hole")
        board = self.boards[node]
        if key not in board and len(board) >= self.capacity:
            raise CapacityExceeded(f"whiteboard at {node} full ({self.capacity} slots), key {key!r}")
        board[key] = (parent, label)

    # -- round loop ------------------------------------------------------
    def step(self) -> Outcome | None:
        """Execute one round; returns the outcome if the run ended in it."""
        if self.outcome is not None:
            return self.outcome
        t = self.round
        ports = self.ports
        by_node: dict[int, list[Agent]] = {}
        for a in self.agents:
            if a.alive:
                by_node.setdefault(a.pos, []).append(a)
        ctx = NodeContext()
        ctx.round = t
        decide = self.algorithm.decide
        boards = self.boards
        for node in sorted(by_node):
            ctx.node = node
            ctx.degree = len(ports[node])
            ctx.board = boards[node]
            ctx.agents = by_node[node]
            decide(ctx)
        trace = self.trace
        if ctx._detections:
            _, survivor, node, port = min(ctx._detections)
            self.round = t + 1
            out = Outcome("detected", t + 1, list(self.deaths), (survivor, node, port))
            if trace is not None:
                trace.emit({"round": t, "kind": "removal-set", "removed": []})
                trace.emit({"round": t, "kind": "detection", "survivor": survivor, "node": node, "port": port})
            return self._finish(out)

        intents = [(a, p, ports[a.pos][p][2]) for a, p in ctx._moves]
        removed = self.adversary.decide(self, intents) if intents or self.check else frozenset()
        if self.check:
            verdict = validate_decision(self.fp, self.adversary.f, removed)
            if verdict is not None:
                raise AssertionError(f"round {t}: adversary {self.adversary.name}: {verdict}")
        self.removed_last = removed
        if trace is not None:
            trace.emit({"round": t, "kind": "removal-set",
                        "removed": [[self.fp.edges[i][0], self.fp.edges[i][1]] for i in sorted(removed)]})

        writes = ctx._writes
        if writes:
            writes.sort(key=lambda w: w[0])
            for aid, node, key, parent, label in writes:
                self.write_whiteboard(node, key, parent, label)
                if trace is not None:
                    trace.emit({"round": t, "kind": "write", "agent": aid, "node": node,
                                "key": key, "parent": parent, "label": label})
            self.write_count += len(writes)

        moved_any = False
        dead_now: list[Agent] = []
        if intents:
            intents.sort(key=lambda x: x[0].id)
            bh = self.bh
            for a, p, ei in intents:
                src = a.pos
                if ei in removed:
                    a.last_ok = False
                    if trace is not None:
                        trace.emit({"round": t, "kind": "move-fail", "agent": a.id, "from": src, "port": p})
                    continue
                dst, pin, _ = ports[src][p]
                a.pos = dst
                a.pin = pin
                a.last_ok = True
                moved_any = True
                if trace is not None:
                    trace.emit({"round": t, "kind": "move-ok", "agent": a.id, "from": src, "port": p,
                                "to": dst, "pin": pin})
                if dst == bh:
                    dead_now.append(a)
                else:
                    a.visited |= 1 << dst
        for a in dead_now:
            a.alive = False
            self.deaths.append(a.id)
            if trace is not None:
                trace.emit({"round": t, "kind": "death", "agent": a.id, "node": a.pos})

        self.round = t + 1
        if self.on_round is not None:
            self.on_round(self, {"removed": removed, "intents": intents, "writes": writes})
        if self.stop_on_explored and self.explored():
            return self._finish(Outcome("explored", self.round, list(self.deaths)))
        if not any(a.alive for a in self.agents):
            return self._finish(Outcome("all-dead", self.round, list(self.deaths)))
        if moved_any or writes or dead_now:
            self._still = 0
            self._prev_sig = None
        else:
            sig = tuple(self.algorithm.signature(a) for a in self.agents if a.alive)
            if sig == self._prev_sig:
                self._still += 1
            else:
                self._still = 0
                self._prev_sig = sig
            if self._still >= self.stuck_window:
                return self._finish(Outcome("stuck", self.round, list(self.deaths)))
        return None

    def run(self, max_rounds: int) -> Outcome:
        if self.outcome is not None:
            return self.outcome
        if self.stop_on_explored and self.explored():
            return self._finish(Outcome("explored", self.round, list(self.deaths)))
        step = self.step
        while self.round < max_rounds:
            out = step()
            if out is not None:
                return out
        return self._finish(Outcome("timeout", self.round, list(self.deaths)))

    def _finish(self, out: Outcome) -> Outcome:
        self.outcome = out
        if self.trace is not None:
            self.trace.emit({"round": out.rounds, "kind": "termination", "outcome": out.kind})
            summary = out.summary(self.fp, self.adversary.seed)
            self.trace.emit({"kind": "summary", **summary})
        return out

    # -- search support ----------------------------------------------------
    def clone(self, adversary: Adversary | None = None) -> "Engine":
        """Independent copy of the mutable run state; footprint and algorithm are shared, tracing is off."""
        twin = copy.copy(self)
        twin.agents = copy.deepcopy(self.agents)
        twin.boards = [dict(b) for b in self.boards]
        twin.deaths = list(self.deaths)
        twin.trace = None
        twin.on_round = None
        if adversary is not None:
            twin.adversary = adversary
        return twin

    def state_key(self) -> tuple:
        agents = tuple((a.id, a.pos, a.alive, a.last_ok, a.pin, a.mind.key() if a.alive else None)
                       for a in self.agents)
        boards = tuple(tuple(sorted(b.items(), key=repr)) for b in self.boards)
        return agents, boards


def readable(agent: Agent) -> dict[str, Any]:
    """Parameters of ``agent`` visible to co-located agents."""
    m = agent.mind
    view = {"id": agent.id, "success": agent.last_ok}
    if hasattr(m, "readable"):
        view.update(m.readable())
    return view


def validate_decision(fp: Footprint, f: int, removed: Iterable[int]) -> str | None:
    """``None`` if the removal set is legal, otherwise a reason."""
    removed = set(removed)
    if len(removed) > f:
        return f"{len(removed)} removals exceed f={f}"
    if any(not 0 <= i < fp.m for i in removed):
        return "unknown edge in removal set"
    if not fp.connected_without(removed):
        return "removal disconnects the footprint"
    return None


def simulate(fp: Footprint, algorithm: Algorithm, adversary: Adversary, root: int = 0,
             max_rounds: int | None = None, trace: TraceSink | None = None,
             check: bool = False, **kw: Any) -> tuple[Outcome, Engine]:
    """Build an engine and run it; ``max_rounds`` defaults to four times the algorithm bound."""
    eng = Engine(fp, algorithm, adversary, root=root, trace=trace, check=check, **kw)
    if max_rounds is None:
        max_rounds = 4 * algorithm.bound(fp)
    return eng.run(max_rounds), eng
