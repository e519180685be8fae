"""DFS-based exploration of 1-bounded dynamic graphs by two or three agents.

The agent rules are the Movement / Test / DFS transition functions. Each
function mutates an :class:`ExplorerCore` and returns the whiteboard entry to
write, if any, as ``(parent, label)``.
"""

from __future__ import annotations

from typing import Any

from .engine import Agent, ConfigError, NodeContext
from .graph import Footprint

EXPLORE = "explore"
BACKTRACK = "backtrack"

Entry = tuple[int, int]  # (parent port, label)


class ExplorerCore:
    """DFS parameters of one explorer (an agent, or the virtual explorer of a group)."""

    __slots__ = ("label", "state", "pin", "pout")

    def __init__(self, label: int = -1, state: str = EXPLORE, pin: int = -1, pout: int = -1) -> None:
        self.label = label
        self.state = state
        self.pin = pin
        self.pout = pout

    def copy(self) -> "ExplorerCore":
        return ExplorerCore(self.label, self.state, self.pin, self.pout)

    def key(self) -> tuple:
        return (self.label, self.state, self.pin, self.pout)

    def __repr__(self) -> str:
        return f"Core(label={self.label}, {self.state}, pin={self.pin}, pout={self.pout})"


def dfs(core: ExplorerCore, entry: Entry | None, degree: int) -> Entry | None:
    """One DFS step after entering a node through ``core.pin``."""
    if core.state == EXPLORE:
        if entry is None or entry[1] != core.label:
            core.pout = (core.pin + 1) % degree
            if core.pout == core.pin:
                core.state = BACKTRACK
            return (core.pin, core.label)
        core.state = BACKTRACK
        core.pout = core.pin
        return None
    core.pout = (core.pin + 1) % degree
    parent = entry[0] if entry is not None else -1
    if parent == -1:
        core.state = EXPLORE
        if core.pout == 0:
            core.label += 1
            return (-1, core.label)
        return None
    core.state = EXPLORE if core.pout != parent else BACKTRACK
    return None


def deviate(core: ExplorerCore, entry: Entry | None, degree: int) -> Entry | None:
    """Higher-ID branch of Test: skip the blocked port, or start a fresh DFS here."""
    if core.state == EXPLORE:
        core.pout = (core.pout + 1) % degree
        parent = entry[0] if entry is not None else -1
        if parent == -1:
            if core.pout == 0:
                core.label += 1
                return (-1, core.label)
            return None
        if core.pout == parent:
            core.state = BACKTRACK
        return None
    core.label += 1
    core.state = EXPLORE
    if degree > 1:
        # smallest port other than the blocked one; degree 1 leaves nothing else to try
        core.pout = 1 if core.pout == 0 else 0
    return (-1, core.label)


def test(core: ExplorerCore, my_id: int, other_id: int, other_pout: int,
         entry: Entry | None, degree: int) -> Entry | None:
    """Test between two co-located agents that both failed their last move."""
    if core.pout != other_pout or my_id < other_id:
        return None
    return deviate(core, entry, degree)


def start(core: ExplorerCore) -> Entry:
    """Round-0 bootstrap at the root: label 1, parent -1, first port 0."""
    core.label = 1
    core.state = EXPLORE
    core.pout = 0
    return (-1, 1)


class ExplorerMind:
    """Agent state for the exploration algorithms."""

    __slots__ = ("core", "r", "success", "boot", "leader")

    def __init__(self, leader: bool = False) -> None:
        self.core = ExplorerCore()
        self.r = 0
        self.success = True
        self.boot = True
        self.leader = leader  # never deviates (two-agent strategy only)

    def readable(self) -> dict[str, Any]:
        return {"state": self.core.state, "pout": self.core.pout, "label": self.core.label,
                "role": "solo", "group": None}

    def key(self) -> tuple:
        return (self.core.key(), self.r, self.success, self.boot)


class Exploration:
    """Three-agent (``variant=3``) or two-agent (``variant=2``) dynamic exploration."""

    needs_black_hole = False

    def __init__(self, variant: int = 3, agents: int | None = None) -> None:
        if variant not in (2, 3):
            raise ConfigError("exploration variant must be 2 or 3")
        self.variant = variant
        self.count = variant if agents is None else agents
        self.name = f"explore{variant}"
        self.capacity = self.count

    def bound(self, fp: Footprint) -> int:
        m = max(fp.m, 1)
        return (256 if self.variant == 3 else 128) * m * m

    def setup(self, fp: Footprint, root: int) -> list[tuple[int, int, Any]]:
        if self.count != self.variant:
            raise ConfigError(f"{self.name} needs exactly {self.variant} agents, got {self.count}")
        return [(i, root, ExplorerMind(leader=(i == 1))) for i in range(1, self.count + 1)]

    def signature(self, agent: Agent) -> Any:
        c = agent.mind.core
        return (agent.pos, c.label, c.state, c.pout)

    def decide(self, ctx: NodeContext) -> None:
        degree = ctx.degree
        board = ctx.board
        agents = ctx.agents
        # round-start readable parameters of everyone here
        seen = [(a.id, a.mind.success, a.mind.core.pout) for a in agents] if len(agents) > 1 else ()
        for a in agents:
            m = a.mind
            core = m.core
            if m.boot:
                m.boot = False
                m.r = 1
                ctx.write(a, a.id, *start(core))
                if degree:
                    ctx.move(a, core.pout)
                continue
            if m.r == 1:
                m.r = 0
                m.success = bool(a.last_ok)
                if m.success:
                    core.pin = a.pin
                    w = dfs(core, board.get(a.id), degree)
                    if w is not None:
                        ctx.write(a, a.id, *w)
                continue
            m.r = 1
            if degree == 0:
                continue
            if not m.success:
                w = None
                if self.variant == 2:
                    if not m.leader:
                        w = deviate(core, board.get(a.id), degree)
                else:
                    lower = [oid for oid, ok, op in seen
                             if oid < a.id and not ok and op == core.pout]
                    if lower:
                        w = test(core, a.id, min(lower), core.pout, board.get(a.id), degree)
                if w is not None:
                    ctx.write(a, a.id, *w)
            ctx.move(a, core.pout)
