"""Black-hole search with groups of three agents walking cautiously.

Each group's leader runs a virtual explorer (the DFS state of one exploring
agent) and replaces every edge move of that explorer by a cautious crossing.
What a group does when its crossing is blocked is delegated to a
:class:`Rule`:

* :class:`ThreeAgentRule`: the 9-agent algorithm. When blocked groups with the
  same pending port meet, the lowest group index keeps trying and the others
  deviate.
* :class:`TwoAgentRule`: the 6-agent algorithm and its ``2f``-group
  extension. The leader group never deviates and every other group deviates
  as soon as it is blocked.

A group that has to deviate while one of its helpers is across the edge
cannot leave that helper behind. With group changes enabled it trades helpers
with the co-located blocked group that stays (the stayer keeps the far
helpers and whatever it knows about the far node). In the two-agent scheme
a blocked leader group that finds a stranded helper of another group on the
far side takes over that group's exploration, and the stranded helper takes
over the leader group's.
"""

from __future__ import annotations

from typing import Any, Callable, Sequence

from .cautious import (HELPER, LEADER, NEAR, PROBE, WITNESS, Crossing, GroupMind, far_behaviour,
                       observe, plan, send)
from .engine import Agent, ConfigError, NodeContext, simulate
from .explore import BACKTRACK, Entry, ExplorerCore, deviate, dfs, start
from .graph import Footprint

Spec = tuple[int, list[int]]  # (leader id, helper ids in role order)


class Rule:
    """Exploration rule lifted to groups.

    ``arrive`` runs when the virtual explorer enters a node, ``turn`` when the
    group must leave its blocked port. ``blocked_deviates`` says whether a
    blocked group with no partner deviates on its own; ``leader_group``
    names the group that never deviates (``None`` for none).
    """

    name = "rule"
    leader_group: int | None = None
    group_changes = True
    pairwise = False  # deviation needs another blocked group on the same port

    def arrive(self, group: int, core: ExplorerCore, entry: Entry | None, degree: int) -> Entry | None:
        return dfs(core, entry, degree)

    def turn(self, group: int, core: ExplorerCore, entry: Entry | None, degree: int) -> Entry | None:
        return deviate(core, entry, degree)


class ThreeAgentRule(Rule):
    name = "three-agent"
    pairwise = True


class TwoAgentRule(Rule):
    name = "two-agent"
    leader_group = 1

    def __init__(self, group_changes: bool = True) -> None:
        self.group_changes = group_changes


class ScriptedRule(Rule):
    """Ports picked by a user callback ``pick(group, round_hint, degree) -> port``.

    Meant for plumbing checks: groups never deviate and never trade members.
    """

    name = "scripted"
    leader_group = 1
    group_changes = False

    def __init__(self, pick: Callable[[int, int, int], int]) -> None:
        self.pick = pick
        self._steps: dict[int, int] = {}

    def arrive(self, group: int, core: ExplorerCore, entry: Entry | None, degree: int) -> Entry | None:
        k = self._steps.get(group, 0)
        self._steps[group] = k + 1
        core.pout = self.pick(group, k, degree) % degree
        core.state = "explore"
        return None


class GroupBHS:
    """Cautious-walk groups driven by a :class:`Rule`."""

    needs_black_hole = True

    def __init__(self, name: str, groups: Sequence[Spec], rule: Rule,
                 bound: Callable[[Footprint], int] | None = None) -> None:
        if not groups:
            raise ConfigError("at least one group is required")
        self.name = name
        self.groups = [(lid, list(hs)) for lid, hs in groups]
        self.rule = rule
        self.capacity = len(self.groups)
        self._bound = bound
        self.count = sum(1 + len(hs) for _, hs in self.groups)

    def bound(self, fp: Footprint) -> int:
        if self._bound is not None:
            return self._bound(fp)
        m = max(fp.m, 1)
        return 1024 * m * m

    def minds(self) -> list[tuple[int, Any]]:
        out: list[tuple[int, Any]] = []
        for g, (lid, hs) in enumerate(self.groups, start=1):
            out.append((lid, GroupMind(LEADER, g, hs)))
            out += [(h, GroupMind(HELPER, g)) for h in hs]
        return out

    def setup(self, fp: Footprint, root: int) -> list[tuple[int, int, Any]]:
        return [(aid, root, mind) for aid, mind in self.minds()]

    def placement(self, nodes: Sequence[int]) -> list[tuple[int, int, Any]]:
        """Place group ``i`` (with its helpers) on ``nodes[i]``; for constructions not starting at a root."""
        if len(nodes) != len(self.groups):
            raise ConfigError("one node per group is required")
        where = {}
        for (lid, hs), v in zip(self.groups, nodes):
            for a in [lid, *hs]:
                where[a] = v
        return [(aid, where[aid], mind) for aid, mind in self.minds()]

    def signature(self, agent: Agent) -> Any:
        return (agent.pos, agent.mind.signature())

    # -- one node, one round ------------------------------------------------
    def decide(self, ctx: NodeContext) -> None:
        agents = ctx.agents
        by_id = {a.id: a for a in agents}
        leaders = [a for a in agents if a.mind.role == LEADER]

        # a leader claimed by another co-located leader joins it as a helper
        if len(leaders) > 1 and any(L.mind.claims for L in leaders):
            for L in leaders:
                for b in leaders:
                    if b is not L and b.id in L.mind.claims and b.mind.role == LEADER:
                        b.mind.become_helper(L.mind.group)
            leaders = [a for a in agents if a.mind.role == LEADER]
        for L in leaders:
            if L.mind.claims:
                L.mind.claims -= by_id.keys()

        present: dict[int, set[int]] = {}
        followers: set[int] = set()
        for L in leaders:
            here = {h for h in L.mind.roster if h in by_id}
            present[L.id] = here
            followers |= here

        for L in leaders:
            m = L.mind
            if m.boot:
                m.boot = False
                ctx.write(L, m.group, *start(m.core))
                self._open(m, ctx.degree, verified=False)
                continue
            res = observe(m, L, present[L.id])
            if res == "bh":
                ctx.detect(L, m.crossing.port, rank=m.group)
                continue
            if res == "arrived":
                self._arrive(L, ctx, present[L.id])
        if ctx._detections:
            return

        active = [L for L in leaders if self._active(L.mind)]
        defer = self._share(active)
        self._interact(ctx, active, by_id, present, followers)

        for L in agents:
            m = L.mind
            if m.role != LEADER or m.crossing is None:
                continue
            if L.id not in present:
                present[L.id] = {h for h in m.roster if h in by_id}
            near = [h for h in m.roster if h in present[L.id]]
            moves, orders = plan(m, near, present[L.id], defer=L.id in defer)
            port = m.crossing.port
            if moves:
                ctx.move(L, port)
            send(ctx, L, orders, by_id, port)
            for h in near:
                if h not in orders:
                    hm = by_id[h].mind
                    hm.mode = NEAR
                    hm.group = m.group

        for a in agents:
            if a.mind.role == HELPER and a.id not in followers:
                far_behaviour(a, ctx)

    # -- helpers ----------------------------------------------------------
    @staticmethod
    def _active(m: GroupMind) -> bool:
        c = m.crossing
        return c is not None and not c.hold and c.after is None

    @staticmethod
    def _open(m: GroupMind, degree: int, verified: bool, **kw: Any) -> None:
        if degree == 0:
            m.crossing = None
            return
        m.crossing = Crossing(m.core.pout, verified=verified, **kw)

    def _arrive(self, L: Agent, ctx: NodeContext, here: set[int]) -> None:
        m = L.mind
        c = m.crossing
        if c.after == "return":
            missing = [h for h in m.roster if h not in here]
            if missing:
                # back over the same edge to collect the members left there
                m.crossing = Crossing(L.pin, verified=True, after="resume",
                                      far={h: WITNESS for h in missing})
                return
        elif c.after == "resume":
            m.crossing = Crossing(m.core.pout, verified=True, hold=True)
            return
        m.core.pin = L.pin
        w = self.rule.arrive(m.group, m.core, ctx.board.get(m.group), ctx.degree)
        if w is not None:
            ctx.write(L, m.group, *w)
        self._open(m, ctx.degree, verified=m.core.state == BACKTRACK)

    @staticmethod
    def _share(active: list[Agent]) -> set[int]:
        """Serialize crossings of one port; returns the ids of leaders that defer this round."""
        defer: set[int] = set()
        if len(active) < 2:
            return defer
        by_port: dict[int, list[Agent]] = {}
        for L in active:
            by_port.setdefault(L.mind.crossing.port, []).append(L)
        for Ls in by_port.values():
            if len(Ls) < 2:
                continue
            owners = [L for L in Ls if L.mind.crossing.far] or Ls
            owner = min(owners, key=lambda L: L.mind.group)
            oc = owner.mind.crossing
            for L in Ls:
                c = L.mind.crossing
                if L is owner or c.far:
                    continue
                if oc.verified:
                    c.verified = True
                if not c.verified:
                    defer.add(L.id)
                    c.blocked = oc.blocked
        return defer

    def _interact(self, ctx: NodeContext, active: list[Agent], by_id: dict[int, Agent],
                  present: dict[int, set[int]], followers: set[int]) -> None:
        rule = self.rule
        blocked = [L for L in active if L.mind.crossing.blocked]
        if not blocked:
            return
        if rule.pairwise:
            by_port: dict[int, list[Agent]] = {}
            for L in blocked:
                by_port.setdefault(L.mind.crossing.port, []).append(L)
            for Ls in by_port.values():
                if len(Ls) < 2:
                    continue
                Ls.sort(key=lambda L: L.mind.group)
                stay = Ls[0]
                for D in Ls[1:]:
                    self._deviate(ctx, D, stay, present)
            return
        lead = rule.leader_group
        for L in blocked:
            g = L.mind.group
            if g == lead:
                continue
            stay = None
            if rule.group_changes:
                stay = next((S for S in blocked if S.mind.group == lead
                             and S.mind.crossing.port == L.mind.crossing.port), None)
            self._deviate(ctx, L, stay, present)
        if rule.group_changes:
            for L in blocked:
                if L.mind.group == lead and not L.mind.crossing.far and self._active(L.mind):
                    self._takeover(ctx, L, by_id, followers)

    def _deviate(self, ctx: NodeContext, D: Agent, S: Agent | None, present: dict[int, set[int]]) -> bool:
        dm = D.mind
        c = dm.crossing
        if c.far:
            if S is None or not self.rule.group_changes or not self._swap(D, S, present):
                return False
        w = self.rule.turn(dm.group, dm.core, ctx.board.get(dm.group), ctx.degree)
        if w is not None:
            ctx.write(D, dm.group, *w)
        self._open(dm, ctx.degree, verified=dm.core.state == BACKTRACK)
        return True

    @staticmethod
    def _swap(D: Agent, S: Agent, present: dict[int, set[int]]) -> bool:
        """Give ``D`` near helpers only; ``S`` keeps the rest plus everyone across the edge."""
        dm, sm = D.mind, S.mind
        dc, sc = dm.crossing, sm.crossing
        d_near = [h for h in dm.roster if h in present[D.id]]
        s_near = [h for h in sm.roster if h in present[S.id]]
        need = len(dm.roster)
        pool = d_near + s_near
        if len(pool) < need:
            return False
        take = pool[:need]
        rest = [h for h in pool if h not in take]
        far = {**sc.far, **dc.far}
        verified = sc.verified or dc.verified
        if not verified:
            probes = [h for h, mode in far.items() if mode == PROBE]
            if len(probes) > 1 or (probes and not rest) or len(far) > len(probes):
                return False
        s_roster = [h for h in sm.roster if h in rest or h in far]
        s_roster += [h for h in rest if h not in s_roster]
        s_roster += [h for h in far if h not in s_roster]
        dm.roster = take
        sm.roster = s_roster
        sc.far = far
        sc.verified = verified
        sc.blocked = True
        present[D.id] = set(take)
        present[S.id] = set(rest)
        dc.far = {}
        return True

    def _takeover(self, ctx: NodeContext, L: Agent, by_id: dict[int, Agent], followers: set[int]) -> None:
        """Blocked leader group meets a stranded helper that crossed the same edge the other way."""
        m = L.mind
        q = m.crossing.port
        cands = [a for a in ctx.agents if a.mind.role == HELPER and a.id not in followers
                 and a.mind.mode in (PROBE, WITNESS) and a.pin == q
                 and a.mind.carried is not None and a.mind.carried.group != m.group]
        if not cands:
            return
        x = cands[0]
        xm = x.mind
        car = xm.carried
        old_core, old_group = m.core, m.group
        # the leader group's members continue the stranded helper's group
        m.group = car.group
        m.epoch = car.epoch + 1
        m.core = car.core.copy()
        m.core.pin = q
        w = self.rule.arrive(m.group, m.core, ctx.board.get(m.group), ctx.degree)
        if w is not None:
            ctx.write(L, m.group, *w)
        self._open(m, ctx.degree, verified=m.core.state == BACKTRACK)
        for h in m.roster:
            by_id[h].mind.group = m.group
        # the stranded helper leads the old leader group back together
        was_probe = xm.mode == PROBE
        xm.role = LEADER
        xm.group = old_group
        xm.core = old_core
        xm.roster = [car.leader] + [h for h in car.roster if h != x.id]
        xm.claims = set(xm.roster)
        xm.mode = NEAR
        xm.carried = None
        xm.epoch = 0
        if was_probe:
            xm.crossing = Crossing(q, verified=True, after="return")
        else:
            xm.crossing = Crossing(q, verified=True, hold=True)
        followers.add(x.id)


def _layout(groups: int, size: int, agents: int | None, style: str) -> list[Spec]:
    total = groups * size if agents is None else agents
    if total < 1 or total > groups * size:
        raise ConfigError(f"between 1 and {groups * size} agents are supported, got {total}")
    if style == "role-major":
        # leaders 1..g, first helpers g+1..2g, second helpers 2g+1..3g
        full = [(g + 1, [g + 1 + groups * k for k in range(1, size)]) for g in range(groups)]
    else:
        full = [(size * g + 1, [size * g + 1 + k for k in range(1, size)]) for g in range(groups)]
    out: list[Spec] = []
    left = total
    for lid, hs in full:
        if left <= 0:
            break
        take = min(left, size)
        out.append((lid, hs[: take - 1]))
        left -= take
    return out


def bhs1_9(agents: int | None = None) -> GroupBHS:
    """Nine agents in three groups; ``agents`` below nine fills groups in order."""
    return GroupBHS("bhs1-9", _layout(3, 3, agents, "role-major"), ThreeAgentRule())


def bhs1_6(agents: int | None = None) -> GroupBHS:
    """Six agents in two groups; group 1 never deviates."""
    return GroupBHS("bhs1-6", _layout(2, 3, agents, "role-major"), TwoAgentRule())


def fbhs_cap(fp: Footprint, f: int) -> int:
    """Round cap ``3 Δ^n (Δ+1)^(2f+n) (n-1)^(2f)``."""
    return fbhs_cap_value(fp.max_degree, fp.n, f)


def bhsf(f: int, agents: int | None = None, rule: Rule | None = None) -> GroupBHS:
    """``6f`` agents in ``2f`` groups of three, ids ``3i-2, 3i-1, 3i`` for group ``i``."""
    if f < 1:
        raise ConfigError("bhsf needs f >= 1")
    if rule is None:
        rule = TwoAgentRule(group_changes=(f == 1))
    return GroupBHS("bhsf", _layout(2 * f, 3, agents, "group-major"), rule,
                    bound=lambda fp: fbhs_cap(fp, f))


def run_1bhs_9(fp: Footprint, adversary: Any, root: int = 0, **kw: Any):
    return simulate(fp, bhs1_9(), adversary, root=root, **kw)


def run_1bhs_6(fp: Footprint, adversary: Any, root: int = 0, **kw: Any):
    return simulate(fp, bhs1_6(), adversary, root=root, **kw)


def run_fbhs(fp: Footprint, f: int, adversary: Any, rule: Rule | None = None, root: int = 0, **kw: Any):
    return simulate(fp, bhsf(f, rule=rule), adversary, root=root, **kw)


def fbhs_cap_value(delta: int, n: int, f: int) -> int:
    return 3 * delta ** n * (delta + 1) ** (2 * f + n) * max(n - 1, 1) ** (2 * f)


__all__ = ["GroupBHS", "Rule", "ThreeAgentRule", "TwoAgentRule", "ScriptedRule", "bhs1_9", "bhs1_6",
           "bhsf", "fbhs_cap", "fbhs_cap_value", "run_1bhs_9", "run_1bhs_6", "run_fbhs"]
