"""Cautious walk: a leader crosses an edge only after helpers have shown the far node is safe.

A crossing of port ``p`` from node ``u`` goes through these steps:

* the first helper (probe) retries ``p`` until it gets across;
* from then on the probe retries the way back while a second helper
  (witness) retries ``p``; both use the same edge, so in the first round the
  edge is present both succeed;
* the leader then sees the witness gone and either the probe back (the far
  node is safe) or not (the far node is the black hole, evidence ``(u, p)``);
* once safe, the leader and the near helpers retry ``p`` until across, where
  the witness waits for them.

Helpers far from their leader act on their own mode: a probe keeps trying to
return through the port it came in by, a witness waits.
"""

from __future__ import annotations

from typing import Any

from .engine import Agent, ConfigError, NodeContext
from .explore import ExplorerCore
from .graph import Footprint

LEADER, HELPER = "leader", "helper"
NEAR, PROBE, WITNESS = "near", "probe", "witness"


class Crossing:
    """A leader's pending move through ``port``.

    ``far`` maps helper ids on the far side to their mode. ``last`` is what was
    attempted in the previous round (``probe``, ``witness``, ``cross``,
    ``wait`` or ``None``) and ``sent`` the helper that attempted it. ``after``
    tags the legs of a regrouping walk (``return``, ``resume``).
    """

    __slots__ = ("port", "verified", "far", "last", "sent", "blocked", "hold", "after")

    def __init__(self, port: int, verified: bool = False, hold: bool = False,
                 after: str | None = None, far: dict[int, str] | None = None) -> None:
        self.port = port
        self.verified = verified
        self.far: dict[int, str] = dict(far or {})
        self.last: str | None = None
        self.sent = -1
        self.blocked = False
        self.hold = hold
        self.after = after

    def key(self) -> tuple:
        return (self.port, self.verified, tuple(sorted(self.far.items())), self.last, self.sent,
                self.blocked, self.hold, self.after)

    def far_probes(self) -> list[int]:
        return [h for h, m in self.far.items() if m == PROBE]

    def __repr__(self) -> str:
        return (f"Crossing(p={self.port}, ver={self.verified}, far={self.far}, last={self.last}, "
                f"blocked={self.blocked}, hold={self.hold}, after={self.after})")


class Carried:
    """What a helper remembers about its group when it leaves its leader."""

    __slots__ = ("group", "epoch", "core", "leader", "roster")

    def __init__(self, group: int, epoch: int, core: ExplorerCore, leader: int, roster: tuple[int, ...]) -> None:
        self.group = group
        self.epoch = epoch
        self.core = core
        self.leader = leader
        self.roster = roster

    def key(self) -> tuple:
        return (self.group, self.epoch, self.core.key(), self.leader, self.roster)


class GroupMind:
    """State of an agent taking part in group walks.

    Leaders own the group's virtual explorer (``core``), the ``roster`` of
    helper ids in role order and the pending ``crossing``. Helpers only keep
    their ``mode`` and the snapshot ``carried`` from their last departure.
    """

    __slots__ = ("role", "group", "epoch", "core", "roster", "crossing", "boot", "mode",
                 "carried", "claims", "finished")

    def __init__(self, role: str, group: int, roster: list[int] | None = None) -> None:
        self.role = role
        self.group = group
        self.epoch = 0
        self.core = ExplorerCore() if role == LEADER else None
        self.roster = list(roster or [])
        self.crossing: Crossing | None = None
        self.boot = role == LEADER
        self.mode = NEAR
        self.carried: Carried | None = None
        self.claims: set[int] = set()
        self.finished = False

    def readable(self) -> dict[str, Any]:
        core = self.core
        return {"state": core.state if core else None, "pout": core.pout if core else None,
                "role": self.role, "group": self.group, "mode": self.mode}

    def key(self) -> tuple:
        return (self.role, self.group, self.epoch, self.core.key() if self.core else None,
                tuple(self.roster), self.crossing.key() if self.crossing else None, self.boot,
                self.mode, self.carried.key() if self.carried else None, tuple(sorted(self.claims)),
                self.finished)

    def signature(self) -> tuple:
        c = self.crossing
        return (self.role, self.group, self.mode, self.core.key() if self.core else None,
                tuple(self.roster), (c.port, c.verified, tuple(sorted(c.far.items())), c.hold, c.after)
                if c else None)

    def become_helper(self, group: int) -> None:
        self.role = HELPER
        self.group = group
        self.core = None
        self.roster = []
        self.crossing = None
        self.boot = False
        self.mode = NEAR
        self.claims = set()


def observe(mind: GroupMind, agent: Agent, present: set[int]) -> str | None:
    """Fold last round's attempt into the crossing.

    Returns ``"arrived"`` when the leader got across, ``"bh"`` when the far
    node is proven to be the black hole, otherwise ``None``.
    """
    c = mind.crossing
    if c is None:
        return None
    last, c.last = c.last, None
    if last == "cross":
        if agent.last_ok:
            return "arrived"
        c.blocked = True
    elif last == "probe":
        if c.sent in present:
            c.blocked = True
        else:
            c.far[c.sent] = PROBE
            c.blocked = False
    elif last == "witness":
        if c.sent in present:
            c.blocked = True
            return None
        probes = c.far_probes()
        back = [h for h in probes if h in present]
        if probes and not back:
            return "bh"
        for h in back:
            del c.far[h]
        c.far[c.sent] = WITNESS
        c.verified = True
        c.blocked = False
    elif last == "wait":
        probes = c.far_probes()
        back = [h for h in probes if h in present]
        if back:
            for h in back:
                del c.far[h]
            c.verified = True
            c.blocked = False
        else:
            c.blocked = bool(probes)
    return None


def plan(mind: GroupMind, near: list[int], present: set[int], defer: bool = False
         ) -> tuple[bool, dict[int, str]]:
    """Decide this round's attempt.

    ``near`` are the co-located helpers in role order. Returns whether the
    leader moves and the orders ``{helper: mode}`` for helpers that move
    through the crossing port.
    """
    c = mind.crossing
    if c is None:
        return False, {}
    if c.hold:
        if any(h not in present for h in mind.roster):
            c.last = None
            return False, {}
        c.hold = False
    if not c.verified:
        if not c.far:
            if defer or not near:
                c.last = None
                return False, {}
            c.last, c.sent = "probe", near[0]
            return False, {near[0]: PROBE}
        if c.far_probes() and near:
            c.last, c.sent = "witness", near[0]
            return False, {near[0]: WITNESS}
        c.last = "wait"
        return False, {}
    if c.far_probes():
        c.last = "wait"
        return False, {}
    c.last = "cross"
    return True, {h: NEAR for h in near}


def far_behaviour(agent: Agent, ctx: NodeContext) -> None:
    """A helper away from its leader: a probe heads back, anything else waits."""
    m = agent.mind
    if m.mode == PROBE and agent.pin >= 0:
        ctx.move(agent, agent.pin)


def send(ctx: NodeContext, leader: Agent, orders: dict[int, str], by_id: dict[int, Agent], port: int) -> None:
    """Issue helper orders and record what each departing helper carries."""
    lm = leader.mind
    for hid, mode in orders.items():
        h = by_id[hid]
        hm = h.mind
        hm.mode = mode
        hm.group = lm.group
        if mode != NEAR:
            hm.carried = Carried(lm.group, lm.epoch, lm.core.copy(), leader.id, tuple(lm.roster))
        ctx.move(h, port)


class CautiousCrossing:
    """One group of three at the root crossing a single port once (unit harness).

    The leader stops after reaching the far node; ``verdict`` on its mind
    reports ``safe``. Detection ends the run through the engine.
    """

    needs_black_hole = False
    capacity = 1

    def __init__(self, port: int = 0, helpers: int = 2) -> None:
        self.port = port
        self.helpers = helpers
        self.name = "cautious-crossing"

    def bound(self, fp: Footprint) -> int:
        return 64

    def setup(self, fp: Footprint, root: int) -> list[tuple[int, int, Any]]:
        if not 0 <= self.port < fp.degree(root):
            raise ConfigError("crossing port not available at the root")
        hs = list(range(2, 2 + self.helpers))
        out: list[tuple[int, int, Any]] = [(1, root, GroupMind(LEADER, 1, hs))]
        out += [(h, root, GroupMind(HELPER, 1)) for h in hs]
        return out

    def signature(self, agent: Agent) -> Any:
        return (agent.pos, agent.mind.signature())

    def decide(self, ctx: NodeContext) -> None:
        by_id = {a.id: a for a in ctx.agents}
        followers: set[int] = set()
        for a in ctx.agents:
            m = a.mind
            if m.role != LEADER:
                continue
            present = {h for h in m.roster if h in by_id}
            followers |= present
            if m.boot:
                m.boot = False
                m.crossing = Crossing(self.port)
            res = observe(m, a, present)
            if res == "bh":
                ctx.detect(a, m.crossing.port, rank=m.group)
                return
            if res == "arrived":
                m.crossing = None
                m.finished = True
            if m.crossing is None:
                continue
            near = [h for h in m.roster if h in present]
            moves, orders = plan(m, near, present)
            if moves:
                ctx.move(a, m.crossing.port)
            send(ctx, a, orders, by_id, m.crossing.port)
            for h in near:
                if h not in orders:
                    by_id[h].mind.mode = NEAR
        for a in ctx.agents:
            if a.mind.role == HELPER and a.id not in followers:
                far_behaviour(a, ctx)
