import json
import subprocess
import sys

import pytest

from bhsim.cli import main
from bhsim.graph import generate, save


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ring_explore_block_min_id(capsys, tmp_path):
    summary = tmp_path / "s.json"
    code, out, _ = run(capsys, "run", "--family", "ring", "--n", "5", "--algo", "explore3", "--adversary",
                       "block-min-id", "--max-rounds", "100000", "--summary", str(summary))
    assert code == 0
    data = json.loads(summary.read_text())
    assert list(data) == ["outcome", "rounds", "deaths", "detected_node", "detected_port", "survivor",
                          "footprint_hash", "seed"]
    assert data["outcome"] == "explored" and data["rounds"] <= 256 * 25
    assert json.loads(out) == data


def test_detection_exit_zero(capsys):
    code, out, _ = run(capsys, "run", "--family", "path", "--n", "3", "--black-hole", "2", "--algo", "bhs1-9",
                       "--adversary", "random", "--seed", "4")
    data = json.loads(out)
    assert code == 0 and data["outcome"] == "detected"
    assert (data["detected_node"], data["detected_port"]) == (1, 1)


def test_timeout_exit_two(capsys):
    code, out, _ = run(capsys, "run", "--family", "ring", "--n", "6", "--algo", "explore3", "--max-rounds", "2")
    assert code == 2 and json.loads(out)["outcome"] == "timeout"


@pytest.mark.parametrize("argv", [
    ["run", "--family", "nope", "--n", "3"],
    ["run", "--family", "ring", "--n", "2"],
    ["run", "--family", "ring", "--n", "5", "--algo", "bhs1-9", "--black-hole", "9"],
    ["run", "--family", "ring", "--n", "5", "--adversary", "replay"],
    ["run", "--family", "ring", "--n", "5", "--algo", "explore3", "--agents", "5"],
    ["run", "--graph", "/nonexistent/g.txt"],
])
def test_config_errors_exit_four(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 4 and err.strip()


def test_validate(capsys, tmp_path):
    good = tmp_path / "good.txt"
    save(generate("clique", n=4), str(good))
    assert run(capsys, "validate", str(good))[0] == 0
    bad = tmp_path / "bad.txt"
    bad.write_text("3 2 -1\n0 1 0 0\n0 2 0 0\n")
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 4 and "duplicate port" in err


def test_trace_file_and_determinism(capsys, tmp_path):
    argv = ["run", "--family", "random-connected", "--n", "6", "--seed", "5", "--black-hole", "3", "--algo",
            "bhs1-6", "--adversary", "random"]
    texts = []
    for k in range(3):
        trace, summary = tmp_path / f"t{k}.jsonl", tmp_path / f"s{k}.json"
        run(capsys, *argv, "--trace", str(trace), "--summary", str(summary))
        texts.append((trace.read_bytes(), summary.read_bytes()))
    assert texts[0] == texts[1] == texts[2]
    head = json.loads(texts[0][0].splitlines()[0])
    assert head["format_version"] == 1 and head["algorithm"] == "bhs1-6"


def test_batch(capsys, tmp_path):
    cfgs = [{"family": "ring", "n": 5, "algo": "explore3", "adversary": "block-min-id"},
            {"family": "path", "n": 3, "black_hole": 2, "algo": "bhs1-9"},
            {"family": "ring", "n": 5, "algo": "explore3", "max_rounds": 1,
             "summary": str(tmp_path / "third.json")}]
    batch = tmp_path / "b.jsonl"
    batch.write_text("".join(json.dumps(c) + "\n" for c in cfgs))
    code, out, _ = run(capsys, "run", "--batch", str(batch), "--jobs", "2")
    rows = [json.loads(ln) for ln in out.splitlines()]
    assert [r["outcome"] for r in rows] == ["explored", "detected", "timeout"]
    assert code == 2
    assert json.loads((tmp_path / "third.json").read_text())["outcome"] == "timeout"


def test_search(capsys, tmp_path):
    code, out, _ = run(capsys, "search", "--family", "path", "--n", "3", "--black-hole", "2", "--algo", "bhs1-9",
                       "--depth", "200")
    assert code == 0 and "6" in out
    script = tmp_path / "cx.jsonl"
    code, _, _ = run(capsys, "search", "--family", "clique", "--n", "3", "--black-hole", "0", "--root", "1",
                     "--algo", "bhs1-9", "--agents", "3", "--out", str(script))
    assert code == 3
    assert script.read_text().strip()
    code, out, _ = run(capsys, "run", "--family", "clique", "--n", "3", "--black-hole", "0", "--root", "1",
                       "--algo", "bhs1-9", "--agents", "3", "--adversary", "replay", "--script", str(script),
                       "--max-rounds", "36")
    assert json.loads(out)["outcome"] != "detected"


def test_demo_fbhs_f1(capsys):
    code, out, _ = run(capsys, "demo-impossibility", "--which", "fbhs", "--f", "1")
    assert code == 3 and out


def test_demo_bhs1_small(capsys):
    code, out, _ = run(capsys, "demo-impossibility", "--which", "bhs1", "--n", "10")
    assert code == 3 and "stuck" in out


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "bhsim.cli", "validate", "/nonexistent"], capture_output=True,
                         text=True)
    assert res.returncode == 4


def test_batch_bad_entries(capsys, tmp_path):
    batch = tmp_path / "b.jsonl"
    batch.write_text('{"family": "ring", "n": 4}\n{"family": "moebius", "n": 4}\n')
    code, out, _ = run(capsys, "run", "--batch", str(batch))
    rows = [json.loads(ln) for ln in out.splitlines()]
    assert code == 4 and rows[0]["outcome"] == "explored" and "error" in rows[1]
    batch.write_text("{not json\n")
    assert run(capsys, "run", "--batch", str(batch))[0] == 4
