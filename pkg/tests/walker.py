"""Scripted test algorithm: each agent follows a fixed list of ports."""

from bhsim.engine import NodeContext


class Walker:
    """Agents follow fixed port lists, one entry per round; optional writes."""

    needs_black_hole = False
    name = "walker"

    def __init__(self, plans, writes=None, capacity=2, start=None):
        self.plans = plans
        self.writes = writes or {}
        self.capacity = capacity
        self.start = start or {}
        self.looks = []

    def bound(self, fp):
        return 10

    def setup(self, fp, root):
        return [(aid, self.start.get(aid, root), None) for aid in self.plans]

    def signature(self, agent):
        return agent.pos

    def decide(self, ctx: NodeContext):
        for a in ctx.agents:
            self.looks.append((ctx.round, a.id, a.last_ok, a.pin, dict(ctx.board),
                               [b.id for b in ctx.agents if b is not a]))
            w = self.writes.get((ctx.round, a.id))
            if w is not None:
                ctx.write(a, *w)
            plan = self.plans[a.id]
            if ctx.round < len(plan) and plan[ctx.round] is not None:
                ctx.move(a, plan[ctx.round])
