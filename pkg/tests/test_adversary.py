import pytest

from bhsim.adversary import (BlockMinId, BridgeProtect, Empty, RandomRemoval, Replay, RulesR1R5, STRATEGIES,
                             make_adversary)
from bhsim.engine import ConfigError, Engine, TraceSink, simulate, validate_decision
from bhsim.explore import Exploration
from bhsim.graph import Footprint, generate
from walker import Walker

K5 = generate("kf2-clique", f=3)  # black hole 0; port 0 of every v_i is the spoke e_i


def rules_engine(plans, start, idle=3):
    # idle bystanders on v4 keep more than f agents alive, so R5 stays out of the way
    plans, start = dict(plans), dict(start)
    for k in range(idle):
        plans[10 + k], start[10 + k] = [], 4
    w = Walker(plans, start=start, capacity=4)
    adv = RulesR1R5(3)
    return Engine(K5, w, adv, root=1, stop_on_explored=False), adv


def test_r1_lone_uninformed_agent_dies():
    eng, adv = rules_engine({1: [0]}, {1: 1})
    eng.step()
    assert adv.log == [(0, "R1", 0)]
    assert eng.deaths == [1]


def test_r2_informed_agent_is_blocked():
    # agent 1 dies through e_1; agent 2 walks v2 -> v1, reads what happened there and tries e_1
    eng, adv = rules_engine({1: [0], 2: [1, 0]}, {1: 1, 2: 2})
    eng.step()
    eng.step()
    assert adv.log == [(0, "R1", 0), (1, "R2", 0)]
    assert eng.deaths == [1]
    assert eng.agents[1].pos == 1 and eng.agents[1].alive


def test_r3_two_agents_at_node():
    eng, adv = rules_engine({1: [0], 2: [None]}, {1: 1, 2: 1})
    eng.step()
    assert adv.log == [(0, "R3", 0)]
    assert eng.deaths == [] and eng.agents[0].pos == 1


def test_r4_intra_clique_edge_kept():
    eng, adv = rules_engine({1: [1], 2: [1]}, {1: 1, 2: 1})
    eng.step()
    assert eng.removed_last == frozenset()
    assert [a.pos for a in eng.agents[:2]] == [2, 2]


def test_r5_few_survivors_all_blocked():
    eng, adv = rules_engine({1: [1], 2: [3], 3: [3]}, {1: 1, 2: 2, 3: 3}, idle=0)
    eng.step()
    assert len(eng.removed_last) == 3
    assert [r for _, r, _ in adv.log] == ["R5"] * 3
    assert [a.pos for a in eng.agents] == [1, 2, 3]


def test_rules_need_clique():
    with pytest.raises(ConfigError):
        Engine(generate("ring", n=5).with_black_hole(0), Walker({1: []}), RulesR1R5(3), root=1)


# -- replay ------------------------------------------------------------------
P3 = generate("path", n=3)


@pytest.mark.parametrize("rows, needle", [
    ([{"round": 0, "removed": [[0, 2]]}], "not a footprint edge"),
    ([{"round": 0, "removed": [[0, 1]]}], "disconnect"),
    ([{"round": 1}], "malformed"),
    ([{"round": 0, "removed": []}, {"round": 0, "removed": []}], "twice"),
])
def test_replay_rejected_at_load(rows, needle):
    with pytest.raises(ConfigError, match=needle):
        Engine(P3, Exploration(3), Replay(rows))


def test_replay_too_many_edges(triangle):
    with pytest.raises(ConfigError, match="exceed"):
        Engine(triangle, Exploration(3), Replay([{"round": 0, "removed": [[0, 1], [1, 2]]}]))


def test_replay_text_and_file(tmp_path, triangle):
    text = '{"round": 0, "removed": [[1, 0]]}\n\n{"round": 2, "removed": []}\n'
    path = tmp_path / "r.jsonl"
    path.write_text(text)
    for adv in (Replay(text), Replay.from_file(str(path))):
        adv.reset(Engine(triangle, Exploration(3), Empty()))
        assert adv.plan == {0: frozenset({0}), 2: frozenset()}


# -- generic strategies ------------------------------------------------------
def removal_sets(sink):
    return [ev["removed"] for ev in sink.lines if ev.get("kind") == "removal-set"]


@pytest.mark.parametrize("f", [1, 2, 3])
def test_random_always_valid(f):
    fp = generate("random-connected", n=7, seed=3)
    index = {(u, v): i for i, (u, v, _, _) in enumerate(fp.edges)}
    for seed in range(5):
        sink = TraceSink()
        simulate(fp, Exploration(3), RandomRemoval(f, seed), trace=sink, max_rounds=300, stop_on_explored=False)
        sets = removal_sets(sink)
        assert sets
        for s in sets:
            assert validate_decision(fp, f, [index[tuple(p)] for p in s]) is None


def test_random_seeded_repeatable(triangle):
    runs = []
    for _ in range(2):
        sink = TraceSink()
        simulate(triangle, Exploration(3), RandomRemoval(1, 9), trace=sink)
        runs.append(removal_sets(sink))
    assert runs[0] == runs[1]


def test_block_min_id_never_removes_bridge():
    # triangle 0-1-2 with a tail 2-3-4: the tail edges are bridges
    fp = Footprint(5, ((0, 1, 0, 0), (0, 2, 1, 0), (1, 2, 1, 1), (2, 3, 2, 0), (3, 4, 1, 0)))
    bridges = {tuple(fp.edges[i][:2]) for i in fp.bridges}
    assert bridges == {(2, 3), (3, 4)}
    sink = TraceSink()
    out, _ = simulate(fp, Exploration(3), BlockMinId(1), trace=sink)
    assert out.kind == "explored"
    sets = removal_sets(sink)
    assert any(sets)
    assert all(tuple(p) not in bridges for s in sets for p in s)


def test_block_min_id_targets_lowest_id(triangle):
    w = Walker({2: [0], 1: [1]}, capacity=1)
    eng = Engine(triangle, w, BlockMinId(1), stop_on_explored=False)
    eng.step()
    # agent 1 at node 0 asked for port 1, the edge (0, 2)
    assert [triangle.edges[i][:2] for i in eng.removed_last] == [(0, 2)]


def test_block_min_id_greedy_for_larger_f():
    fp = generate("clique", n=5)
    w = Walker({1: [0], 2: [1], 3: [2]}, capacity=1)
    eng = Engine(fp, w, BlockMinId(2), stop_on_explored=False)
    eng.step()
    assert len(eng.removed_last) == 2


def test_bridge_protect_removes_nothing():
    fp = generate("bhs1-impossibility", n=10)
    w = Walker({1: [0, 1, 0]}, start={1: 1}, capacity=1)
    sink = TraceSink()
    Engine(fp, w, BridgeProtect(1), root=1, trace=sink, stop_on_explored=False).run(3)
    assert all(s == [] for s in removal_sets(sink))


def test_make_adversary(tmp_path):
    for name in STRATEGIES:
        if name != "replay":
            assert make_adversary(name, f=2, seed=1).name == name
    path = tmp_path / "s.jsonl"
    path.write_text("")
    assert isinstance(make_adversary("replay", script=str(path)), Replay)
    with pytest.raises(ConfigError):
        make_adversary("replay")
    with pytest.raises(ConfigError):
        make_adversary("chaos")
    with pytest.raises(ConfigError):
        Empty(-1)
