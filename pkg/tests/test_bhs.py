import pytest

from bhsim.adversary import BlockMinId, Empty, RandomRemoval
from bhsim.bhs import (GroupBHS, ScriptedRule, bhs1_6, bhs1_9, bhsf, fbhs_cap, fbhs_cap_value, run_1bhs_6,
                       run_1bhs_9, run_fbhs)
from bhsim.cautious import LEADER
from bhsim.engine import ConfigError, Engine, simulate
from bhsim.graph import Footprint, connected_graphs, generate
from conftest import bhs_jobs

P3 = generate("path", n=3).with_black_hole(2)
TRI = generate("clique", n=3).with_black_hole(0)


def survivors(eng):
    return sum(a.alive for a in eng.agents)


def test_path3_nine_agents():
    out, eng = run_1bhs_9(P3, Empty())
    assert out.kind == "detected"
    assert out.detection == (1, 1, 1)  # survivor 1 at the middle node, port toward node 2
    assert survivors(eng) >= 7


def test_path3_six_agents():
    out, eng = run_1bhs_6(P3, Empty())
    assert out.kind == "detected" and out.detection[1:] == (1, 1)
    assert survivors(eng) >= 4


def test_path3_fbhs_f1():
    out, _ = run_fbhs(P3, 1, Empty())
    assert out.kind == "detected" and out.detection[1:] == (1, 1)


@pytest.mark.parametrize("make", [bhs1_9, bhs1_6])
def test_triangle_two_deaths_same_group(make):
    out, eng = simulate(TRI, make(), Empty(), root=1)
    assert out.kind == "detected" and out.rounds <= 8 * 3 * TRI.m
    assert len(out.deaths) == 2
    by_id = {a.id: a for a in eng.agents}
    assert len({by_id[d].mind.group for d in out.deaths}) == 1


def test_fbhs_cap_formula():
    assert fbhs_cap_value(2, 3, 1) == 3 * 2 ** 3 * 3 ** 5 * 2 ** 2 == 23328
    assert fbhs_cap(TRI, 1) == 23328
    out, _ = run_fbhs(TRI, 1, Empty(), root=1)
    assert out.kind == "detected" and out.rounds < 23328


def test_fbhs_f2_scripted_smoke():
    k4 = generate("clique", n=4).with_black_hole(0)
    for seed in range(4):
        rule = ScriptedRule(lambda g, k, d: g + k)
        alg = bhsf(2, rule=rule)
        eng = Engine(k4, alg, RandomRemoval(2, seed), root=1)
        eng.run(600)
        assert len(eng.agents) == 12
        for a in eng.agents:
            if not a.alive:
                assert a.mind.role != LEADER
        groups = {}
        for a in eng.agents:
            groups.setdefault(a.mind.group, []).append(a)
        assert all(1 <= g <= 4 for g in groups)


def test_layouts():
    assert [s for s in bhs1_9().groups] == [(1, [4, 7]), (2, [5, 8]), (3, [6, 9])]
    assert [s for s in bhs1_6().groups] == [(1, [3, 5]), (2, [4, 6])]
    assert [s for s in bhsf(2).groups] == [(1, [2, 3]), (4, [5, 6]), (7, [8, 9]), (10, [11, 12])]
    assert bhs1_9(4).groups == [(1, [4, 7]), (2, [])]
    assert bhsf(1).capacity == 2 and bhs1_9().capacity == 3


@pytest.mark.parametrize("bad", [lambda: bhs1_9(10), lambda: bhs1_6(0), lambda: bhsf(0)])
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        bad()


def test_needs_black_hole():
    with pytest.raises(ConfigError):
        Engine(generate("path", n=3), bhs1_9(), Empty())


# -- group changes with six agents ---------------------------------------------
G4 = Footprint(4, ((0, 3, 0, 0), (1, 2, 0, 0), (1, 3, 1, 1), (2, 3, 1, 2)))


def roles(eng):
    return {a.id: (a.mind.role, a.mind.group) for a in eng.agents}


def run_until(eng, t):
    while eng.round < t:
        assert eng.step() is None


def test_helper_swap_case():
    # G1's helper on the blocked side trades places with the co-located helper of G2
    eng = Engine(G4.with_black_hole(3), bhs1_6(), RandomRemoval(1, 26), root=2)
    run_until(eng, 5)
    before = roles(eng)
    run_until(eng, 7)
    after = roles(eng)
    assert (before[3], before[4]) == (("helper", 1), ("helper", 2))
    # helper 4 was across the edge and is reassigned when it comes back
    assert (after[3], after[4]) == (("helper", 2), ("helper", 1))
    out = eng.run(200)
    assert out.kind == "detected" and out.detection[1:] == (1, 1)


def test_group_takeover_case():
    # a stranded G2 helper becomes the G1 leader; the old G1 leader now leads G2's walk
    eng = Engine(G4.with_black_hole(0), bhs1_6(), RandomRemoval(1, 1), root=2)
    run_until(eng, 8)
    assert roles(eng)[1] == ("leader", 1) and roles(eng)[6] == ("helper", 2)
    eng.step()
    after = roles(eng)
    assert after[6] == ("leader", 1)
    assert after[1] == ("leader", 2)
    out = eng.run(200)
    assert out.kind == "detected" and out.detection[1:] == (3, 0)


# -- small corpus sweep ----------------------------------------------------------
@pytest.mark.parametrize("make, keep", [(bhs1_9, 3), (bhs1_6, 2)])
def test_small_corpus(make, keep):
    for g in connected_graphs(4, min_n=2):
        for bh in range(g.n):
            fp = g.with_black_hole(bh)
            for adv, root in bhs_jobs(fp, seeds=5):
                out, eng = simulate(fp, make(), adv, root=root)
                assert out.kind == "detected", (fp, adv.name, root, out)
                _, node, port = out.detection
                assert fp.ports[node][port][0] == bh
                assert survivors(eng) >= keep
                assert all(a.mind.role != LEADER for a in eng.agents if not a.alive)
                assert out.rounds <= 1024 * fp.m ** 2


def test_block_min_id_worst_case_constant():
    worst = 0.0
    for g in connected_graphs(5, min_n=2):
        for bh in range(g.n):
            fp = g.with_black_hole(bh)
            root = 0 if bh else 1
            out, _ = run_1bhs_9(fp, BlockMinId(1), root=root)
            assert out.kind == "detected"
            worst = max(worst, out.rounds / fp.m ** 2)
    assert worst <= 8


def test_group_bhs_exported():
    assert isinstance(bhs1_9(), GroupBHS)
