"""Command-line front end: ``run``, ``validate``, ``search`` and ``demo-impossibility``.

Exit codes: 0 detection or exploration complete, 1 a demonstration that
failed (a detection happened), 2 timeout or search budget exhausted, 3 stuck,
blocked, all agents dead or a non-detecting play found, 4 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Sequence

from .adversary import STRATEGIES, BridgeProtect, RulesR1R5, make_adversary
from .bhs import GroupBHS, ThreeAgentRule, TwoAgentRule, bhs1_6, bhs1_9, bhsf
from .engine import ConfigError, Engine, TraceSink
from .explore import Exploration
from .graph import FAMILIES, Footprint, GraphError, gadget_cliques, generate, load, validate
from .oracle import exhaustive_adversary_search, replay_rows_text

ALGORITHMS = ("explore3", "explore2", "bhs1-9", "bhs1-6", "bhsf")
EXIT = {"detected": 0, "explored": 0, "timeout": 2, "stuck": 3, "blocked": 3, "all-dead": 3}


def make_algorithm(name: str, f: int = 1, agents: int | None = None) -> Any:
    if name == "explore3":
        return Exploration(3, agents)
    if name == "explore2":
        return Exploration(2, agents)
    if name == "bhs1-9":
        return bhs1_9(agents)
    if name == "bhs1-6":
        return bhs1_6(agents)
    if name == "bhsf":
        return bhsf(f, agents)
    raise ConfigError(f"unknown algorithm {name!r}; expected one of {', '.join(ALGORITHMS)}")


def load_graph(ns: argparse.Namespace) -> Footprint:
    if ns.graph:
        fp = load(ns.graph)
    elif ns.family:
        fp = generate(ns.family, n=ns.n, f=ns.f, seed=ns.seed or 0, p=ns.p)
    else:
        raise ConfigError("give --graph FILE or --family NAME")
    if ns.black_hole is not None:
        fp = fp.with_black_hole(None if ns.black_hole < 0 else ns.black_hole)
    report = validate(fp)
    if not report.ok:
        raise ConfigError("invalid graph: " + "; ".join(report.violations))
    return fp


def _graph_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--graph", help="graph file")
    src.add_argument("--family", choices=FAMILIES)
    p.add_argument("--n", type=int)
    p.add_argument("--f", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="graph and adversary seed")
    p.add_argument("--p", type=float, default=0.3, help="extra-edge probability (random-connected)")
    p.add_argument("--black-hole", type=int, default=None, help="override the black-hole node (-1: none)")
    p.add_argument("--root", type=int, default=None)
    p.add_argument("--agents", type=int, default=None, help="roster size (defaults to the algorithm's)")


def _default_root(fp: Footprint) -> int:
    return 1 if fp.black_hole == 0 and fp.n > 1 else 0


def run_config(ns: argparse.Namespace) -> tuple[int, dict[str, Any]]:
    fp = load_graph(ns)
    alg = make_algorithm(ns.algo, ns.f, ns.agents)
    adv = make_adversary(ns.adversary, ns.f, ns.seed, ns.script)
    root = _default_root(fp) if ns.root is None else ns.root
    max_rounds = ns.max_rounds if ns.max_rounds is not None else 4 * alg.bound(fp)
    fh = open(ns.trace, "w", encoding="utf-8") if ns.trace else None
    try:
        sink = TraceSink(fh, keep=False) if fh else None
        eng = Engine(fp, alg, adv, root=root, trace=sink)
        out = eng.run(max_rounds)
    finally:
        if fh:
            fh.close()
    summary = out.summary(fp, adv.seed)
    text = json.dumps(summary, separators=(",", ":"))
    if ns.summary:
        with open(ns.summary, "w", encoding="utf-8") as fh2:
            fh2.write(text + "\n")
    return EXIT[out.kind], summary


def _batch_one(cfg: dict[str, Any]) -> tuple[int, str]:
    try:
        ns = build_parser().parse_args(["run", *_cfg_argv(cfg)])
    except SystemExit:
        return 4, json.dumps({"error": f"bad configuration {cfg!r}"})
    try:
        code, summary = run_config(ns)
        return code, json.dumps(summary, separators=(",", ":"))
    except (ConfigError, GraphError, OSError) as exc:
        return 4, json.dumps({"error": str(exc)})


def _cfg_argv(cfg: dict[str, Any]) -> list[str]:
    argv: list[str] = []
    for k, v in cfg.items():
        if v is None or v is False:
            continue
        argv.append("--" + k.replace("_", "-"))
        if v is not True:
            argv.append(str(v))
    return argv


def cmd_run(ns: argparse.Namespace) -> int:
    if ns.batch:
        with open(ns.batch, encoding="utf-8") as fh:
            configs = [json.loads(ln) for ln in fh if ln.strip()]
        with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
            results = list(pool.map(_batch_one, configs))
        for code, line in results:
            print(line)
        return max((c for c, _ in results), default=0)
    code, summary = run_config(ns)
    print(json.dumps(summary, separators=(",", ":")))
    return code


def cmd_validate(ns: argparse.Namespace) -> int:
    try:
        fp = load(ns.file)
    except (GraphError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    report = validate(fp)
    if report.ok:
        print(f"ok: n={fp.n} m={fp.m} black_hole={fp.black_hole}")
        return 0
    for v in report.violations:
        print(f"violation: {v}", file=sys.stderr)
    return 4


def cmd_search(ns: argparse.Namespace) -> int:
    fp = load_graph(ns)
    alg = make_algorithm(ns.algo, ns.f, ns.agents)
    root = _default_root(fp) if ns.root is None else ns.root
    res = exhaustive_adversary_search(fp, alg, f=ns.f, depth=ns.depth, root=root, budget=ns.budget)
    if not res.complete:
        print(json.dumps({"result": "budget-exceeded", "states": res.states}))
        return 2
    if res.script is None:
        print(json.dumps({"result": "always-detected", "worst_round": res.worst, "states": res.states}))
        return 0
    if ns.out:
        with open(ns.out, "w", encoding="utf-8") as fh:
            fh.write(replay_rows_text(res.script))
    print(json.dumps({"result": "counterexample", "reason": res.reason, "rounds": len(res.script),
                      "states": res.states, "script": ns.out}))
    return 3


# -- impossibility demonstrations ---------------------------------------------
def run_blocked(eng: Engine, cap: int) -> str:
    """Run until an outcome, or until the black-hole edges have been sealed for a full stuck window.

    Sealed means: no agent got through an edge at the black hole, and every
    attempt at one was removed, for ``eng.stuck_window`` consecutive rounds.
    """
    fp = eng.fp
    bh_edges = {i for i, (u, v, _, _) in enumerate(fp.edges) if fp.black_hole in (u, v)}
    last = {"t": 0}

    def hook(e: Engine, info: dict[str, Any]) -> None:
        for _, _, ei in info["intents"]:
            if ei in bh_edges and ei not in info["removed"]:
                last["t"] = e.round

    eng.on_round = hook
    while eng.round < cap:
        out = eng.step()
        if out is not None:
            return out.kind
        if eng.round - last["t"] >= eng.stuck_window:
            return "blocked"
    return "timeout"


def demo_fbhs(f: int, cap: int = 100_000, search_depth: int | None = None) -> list[dict[str, Any]]:
    """Every BHS rule set with ``2f+1`` agents on ``K_{f+2}`` against the R1-R5 adversary."""
    fp = generate("kf2-clique", f=f)
    rows = []
    for name in ("bhs1-9", "bhs1-6", "bhsf"):
        try:
            make_algorithm(name, f, 2 * f + 1)
        except ConfigError as exc:
            rows.append({"algorithm": name, "f": f, "verdict": "n/a", "note": str(exc)})
            continue
        adv = RulesR1R5(f)
        eng = Engine(fp, make_algorithm(name, f, 2 * f + 1), adv, root=1)
        verdict = run_blocked(eng, cap)
        row = {"algorithm": name, "f": f, "verdict": verdict, "rounds": eng.round,
               "alive": sum(a.alive for a in eng.agents),
               "rules": sorted({r for _, r, _ in adv.log})}
        if f == 1:
            res = exhaustive_adversary_search(fp, make_algorithm(name, f, 3), f=1, root=1, depth=search_depth)
            row["search"] = "non-detecting play" if res.script is not None else (
                "always detected" if res.complete else "budget")
        rows.append(row)
    return rows


def demo_bhs1(n: int = 17, cap: int = 100_000) -> list[dict[str, Any]]:
    """Two agents per clique of the gadget, one pair per clique, under the bridge-keeping adversary."""
    fp = generate("bhs1-impossibility", n=n)
    cliques = gadget_cliques(fp)
    groups = [(2 * i + 1, [2 * i + 2]) for i in range(len(cliques))]
    rows = []
    for name, rule in (("bhs1-9", ThreeAgentRule()), ("bhs1-6", TwoAgentRule()),
                       ("bhsf", TwoAgentRule(group_changes=False))):
        alg = GroupBHS(name, groups, rule)
        eng = Engine(fp, alg, BridgeProtect(1), placement=alg.placement([c[0] for c in cliques]))
        out = eng.run(cap)
        rows.append({"algorithm": name, "verdict": out.kind, "rounds": out.rounds, "deaths": list(out.deaths),
                     "alive": sum(a.alive for a in eng.agents), "note": fp.effective_note})
    return rows


def cmd_demo(ns: argparse.Namespace) -> int:
    if ns.which == "fbhs":
        rows = demo_fbhs(ns.f, ns.max_rounds)
    else:
        rows = demo_bhs1(ns.n or 17, ns.max_rounds)
    for r in rows:
        print(json.dumps(r, separators=(",", ":")))
    verdicts = [r["verdict"] for r in rows if r["verdict"] != "n/a"]
    if any(v == "detected" for v in verdicts):
        return 1
    if any(v == "timeout" for v in verdicts):
        return 2
    return 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bhsim", description="Black-hole search simulator")
    sub = ap.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="simulate one configuration")
    _graph_args(r)
    r.add_argument("--algo", choices=ALGORITHMS, default="explore3")
    r.add_argument("--adversary", choices=STRATEGIES, default="empty")
    r.add_argument("--script", help="replay script (JSONL)")
    r.add_argument("--max-rounds", type=int, default=None)
    r.add_argument("--trace", help="write the JSONL trace here")
    r.add_argument("--summary", help="write the summary JSON here")
    r.add_argument("--batch", help="JSONL file of run configurations (flag names as keys)")
    r.add_argument("--jobs", type=int, default=None, help="parallel workers for --batch")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="check a graph file")
    v.add_argument("file")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("search", help="exhaustive adversary search on a tiny instance")
    _graph_args(s)
    s.add_argument("--algo", choices=ALGORITHMS, default="bhs1-9")
    s.add_argument("--depth", type=int, default=None)
    s.add_argument("--budget", type=int, default=200_000)
    s.add_argument("--out", help="write the counterexample replay script here")
    s.set_defaults(func=cmd_search)

    d = sub.add_parser("demo-impossibility", help="run the impossibility constructions")
    d.add_argument("--which", choices=("bhs1", "fbhs"), required=True)
    d.add_argument("--f", type=int, default=1)
    d.add_argument("--n", type=int, default=None, help="gadget size (bhs1)")
    d.add_argument("--max-rounds", type=int, default=100_000)
    d.set_defaults(func=cmd_demo)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        # usage errors share the config-error code; --help still exits 0
        return 0 if exc.code in (0, None) else 4
    try:
        return ns.func(ns)
    except (ConfigError, GraphError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
