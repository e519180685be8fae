"""Edge-removal strategies. Every decision removes at most ``f`` edges and keeps the footprint connected."""

from __future__ import annotations

import itertools
import json
import math
import random
from typing import TYPE_CHECKING, Any, Iterable

from .engine import Agent, ConfigError, validate_decision
from .graph import Footprint

if TYPE_CHECKING:
    from .engine import Engine

STRATEGIES = ("empty", "replay", "random", "block-min-id", "bridge-protect-bhs1", "rules-R1-R5")

Intents = list[tuple[Agent, int, int]]


class AdversaryBase:
    name = "base"

    def __init__(self, f: int = 1, seed: int | None = None) -> None:
        if f < 0:
            raise ConfigError("f must be non-negative")
        self.f = f
        self.seed = seed
        self.fp: Footprint | None = None

    def reset(self, engine: "Engine") -> None:
        self.fp = engine.fp

    def decide(self, engine: "Engine", intents: Intents) -> frozenset[int]:
        return frozenset()


class Empty(AdversaryBase):
    name = "empty"


class BridgeProtect(AdversaryBase):
    """Adversary of the one-black-hole gadget: bridges cannot go and nothing else is touched."""

    name = "bridge-protect-bhs1"


class Replay(AdversaryBase):
    """Scripted removals, one ``{"round": t, "removed": [[u, v], ...]}`` object per line."""

    name = "replay"

    def __init__(self, script: str | Iterable[dict[str, Any]], f: int = 1, check: bool = True) -> None:
        super().__init__(f)
        if isinstance(script, str):
            rows = [json.loads(ln) for ln in script.splitlines() if ln.strip()]
        else:
            rows = list(script)
        self.rows = rows
        self.check = check
        self.plan: dict[int, frozenset[int]] = {}

    @classmethod
    def from_file(cls, path: str, f: int = 1, check: bool = True) -> "Replay":
        with open(path, encoding="utf-8") as fh:
            return cls(fh.read(), f=f, check=check)

    def reset(self, engine: "Engine") -> None:
        super().reset(engine)
        self.plan = self.compile(engine.fp)

    def compile(self, fp: Footprint) -> dict[int, frozenset[int]]:
        plan: dict[int, frozenset[int]] = {}
        index = {(u, v): i for i, (u, v, _, _) in enumerate(fp.edges)}
        for row in self.rows:
            try:
                t = int(row["round"])
                pairs = row["removed"]
            except (KeyError, TypeError, ValueError):
                raise ConfigError(f"malformed replay row {row!r}") from None
            ids = set()
            for pair in pairs:
                u, v = sorted(int(x) for x in pair)
                if (u, v) not in index:
                    raise ConfigError(f"replay round {t}: ({u},{v}) is not a footprint edge")
                ids.add(index[(u, v)])
            if self.check:
                verdict = validate_decision(fp, self.f, ids)
                if verdict is not None:
                    raise ConfigError(f"replay round {t}: {verdict}")
            if t in plan:
                raise ConfigError(f"replay round {t} listed twice")
            plan[t] = frozenset(ids)
        return plan

    def decide(self, engine: "Engine", intents: Intents) -> frozenset[int]:
        return self.plan.get(engine.round, frozenset())


class RandomRemoval(AdversaryBase):
    """Uniformly random legal removal set of size at most ``f``, seeded."""

    name = "random"
    _ENUM_LIMIT = 20000

    def __init__(self, f: int = 1, seed: int | None = 0) -> None:
        super().__init__(f, seed)
        self.rng = random.Random(seed)
        self.options: list[frozenset[int]] | None = None
        self.weights: list[int] = []

    def reset(self, engine: "Engine") -> None:
        super().reset(engine)
        fp = engine.fp
        self.rng = random.Random(self.seed)
        m, f = fp.m, min(self.f, fp.m)
        self.weights = [math.comb(m, k) for k in range(f + 1)]
        if sum(self.weights) <= self._ENUM_LIMIT:
            if f == 1:
                self.options = [frozenset()] + [frozenset([i]) for i in range(m) if i not in fp.bridges]
            else:
                self.options = [frozenset(c) for k in range(f + 1)
                                for c in itertools.combinations(range(m), k)
                                if fp.connected_without(c)]
        else:
            self.options = None

    def decide(self, engine: "Engine", intents: Intents) -> frozenset[int]:
        rng = self.rng
        if self.options is not None:
            return self.options[rng.randrange(len(self.options))]
        fp = engine.fp
        sizes = list(range(len(self.weights)))
        while True:
            k = rng.choices(sizes, weights=self.weights)[0]
            pick = frozenset(rng.sample(range(fp.m), k))
            if fp.connected_without(pick):
                return pick


class BlockMinId(AdversaryBase):
    """Remove the edge that the lowest-id moving agent wants, when connectivity allows.

    With ``f > 1`` the next lowest ids are served greedily in the same way.
    """

    name = "block-min-id"

    def reset(self, engine: "Engine") -> None:
        super().reset(engine)
        self._ok: dict[frozenset[int], bool] = {}

    def _legal(self, fp: Footprint, s: frozenset[int]) -> bool:
        ok = self._ok.get(s)
        if ok is None:
            ok = self._ok[s] = fp.connected_without(s)
        return ok

    def decide(self, engine: "Engine", intents: Intents) -> frozenset[int]:
        if not intents or self.f == 0:
            return frozenset()
        fp = engine.fp
        if self.f == 1:
            ei = min(intents, key=lambda x: x[0].id)[2]
            return frozenset((ei,)) if ei not in fp.bridges else frozenset()
        chosen: frozenset[int] = frozenset()
        for _, _, ei in sorted(intents, key=lambda x: x[0].id):
            if len(chosen) >= self.f:
                break
            if ei in chosen:
                continue
            trial = chosen | {ei}
            if self._legal(fp, trial):
                chosen = trial
        return chosen


class RulesR1R5(AdversaryBase):
    """The clique adversary against ``2f+1`` agents on ``K_{f+2}`` with the black hole at node 0.

    Knowledge is over-approximated: an agent is informed about spoke ``e_i``
    once it shares a node with an agent or whiteboard that knows, or once it
    saw some agent leave through ``e_i``.
    """

    name = "rules-R1-R5"

    def reset(self, engine: "Engine") -> None:
        super().reset(engine)
        fp = engine.fp
        k = self.f + 2
        if fp.n != k or fp.m != k * (k - 1) // 2 or fp.black_hole != 0:
            raise ConfigError("rules-R1-R5 needs K_{f+2} with the black hole at node 0")
        # spoke[v] = edge index of e_v (between v and the black hole)
        self.spoke = {fp.edges[i][1]: i for i in range(fp.m) if fp.edges[i][0] == 0}
        self.known: dict[int, set[int]] = {a.id: set() for a in engine.agents}
        self.board_known: list[set[int]] = [set() for _ in range(fp.n)]
        self.log: list[tuple[int, str, int]] = []  # (round, rule, edge)

    def _spread(self, engine: "Engine") -> dict[int, list[Agent]]:
        by_node: dict[int, list[Agent]] = {}
        for a in engine.agents:
            if a.alive:
                by_node.setdefault(a.pos, []).append(a)
        for v, here in by_node.items():
            pool = set(self.board_known[v])
            for a in here:
                pool |= self.known[a.id]
            self.board_known[v] = set(pool)
            for a in here:
                self.known[a.id] = set(pool)
        return by_node

    def informed(self, aid: int, spoke_edge: int) -> bool:
        return spoke_edge in self.known.get(aid, ())

    def decide(self, engine: "Engine", intents: Intents) -> frozenset[int]:
        by_node = self._spread(engine)
        t = engine.round
        alive = sum(len(h) for h in by_node.values())
        if alive <= self.f:
            # R5: at most f agents left, so every intended edge can be blocked
            edges = frozenset(ei for _, _, ei in intents)
            for ei in sorted(edges):
                self.log.append((t, "R5", ei))
            return edges
        remove: list[int] = []
        kept_spokes: list[tuple[int, int]] = []  # (node, edge)
        spoke_movers: dict[int, list[Agent]] = {}
        for a, _, ei in intents:
            if ei == self.spoke.get(a.pos):
                spoke_movers.setdefault(a.pos, []).append(a)
        for v in sorted(spoke_movers):
            ei = self.spoke[v]
            movers = spoke_movers[v]
            if len(by_node.get(v, ())) >= 2:
                remove.append(ei)
                self.log.append((t, "R3", ei))
            elif self.informed(movers[0].id, ei):
                remove.append(ei)
                self.log.append((t, "R2", ei))
            else:
                kept_spokes.append((v, ei))
                self.log.append((t, "R1", ei))
        if len(remove) > self.f:
            for v, ei in [(engine.fp.edges[e][1], e) for e in remove[self.f:]]:
                kept_spokes.append((v, ei))
            remove = remove[: self.f]
        for v, ei in kept_spokes:
            # everyone who watched the departure, and the board, now knows e_v was used
            for a in by_node.get(v, ()):
                self.known[a.id].add(ei)
            self.board_known[v].add(ei)
        return frozenset(remove)


def make_adversary(name: str, f: int = 1, seed: int | None = None,
                   script: str | None = None, check: bool = True) -> AdversaryBase:
    if name == "empty":
        return Empty(f, seed)
    if name == "random":
        return RandomRemoval(f, 0 if seed is None else seed)
    if name == "block-min-id":
        return BlockMinId(f, seed)
    if name == "bridge-protect-bhs1":
        return BridgeProtect(f, seed)
    if name == "rules-R1-R5":
        return RulesR1R5(f, seed)
    if name == "replay":
        if script is None:
            raise ConfigError("replay needs a script")
        return Replay.from_file(script, f=f, check=check)
    raise ConfigError(f"unknown adversary {name!r}; expected one of {', '.join(STRATEGIES)}")
