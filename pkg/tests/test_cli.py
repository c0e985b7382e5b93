import csv
import io
import json

import pytest

from tdrl.cli import EXIT_BUDGET, EXIT_INPUT, EXIT_OK, EXIT_USAGE, main, sweep_sizes
from tdrl.decomposition import parse_td, validate_td
from tdrl.evaluation import EntropyTrace
from tdrl.graph import ErConfig, complete_graph, generate_er, parse_gr, path_graph, write_gr
from tdrl.training import parse_log


def run(argv, capsys=None):
    try:
        code = main([str(a) for a in argv])
    except SystemExit as e:  # argparse
        code = e.code
    if capsys is not None:
        out = capsys.readouterr()
        return code, out.out, out.err
    return code


@pytest.fixture
def gdir(tmp_path):
    d = tmp_path / "graphs"
    d.mkdir()
    for s in range(3):
        (d / f"g{s}.gr").write_bytes(write_gr(generate_er(ErConfig(6 + s, None, s))))
    return d


def read_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# ---------------------------------------------------------------------------


def test_generate(tmp_path, capsys):
    code, out, _ = run(["generate", "--n", 50, "--count", 3, "--seed", 10, "--out-dir", tmp_path / "a"], capsys)
    assert code == EXIT_OK
    files = sorted((tmp_path / "a").glob("*.gr"))
    assert [f.name for f in files] == ["er_n50_s10.gr", "er_n50_s11.gr", "er_n50_s12.gr"]
    for f in files:
        assert parse_gr(f.read_bytes()).num_nodes() == 50
    run(["generate", "--n", 50, "--count", 3, "--seed", 10, "--out-dir", tmp_path / "b"])
    for f in files:
        assert (tmp_path / "b" / f.name).read_bytes() == f.read_bytes()


def test_sweep_sizes():
    sizes = sweep_sizes()
    assert len(sizes) == 100 and sizes[0] == 10 and sizes[-1] == 1000
    assert sizes == sorted(sizes)


def test_generate_requires_size(tmp_path):
    assert run(["generate", "--seed", 0, "--out-dir", tmp_path]) == EXIT_USAGE
    assert run(["generate", "--n", 5, "--out-dir", tmp_path]) == EXIT_USAGE


def test_solve_path_min_degree(tmp_path, capsys):
    f = tmp_path / "p.gr"
    f.write_bytes(write_gr(path_graph(6)))
    code, out, _ = run(["solve", f, "--method", "min-degree"], capsys)
    assert code == EXIT_OK
    rows = read_rows(out)
    assert rows[0]["width"] == "1" and rows[0]["method"] == "min-degree"
    assert sorted(map(int, rows[0]["order"].split())) == list(range(1, 7))


def test_solve_exact_k6_with_td(tmp_path, capsys):
    f = tmp_path / "k6.gr"
    f.write_bytes(write_gr(complete_graph(6)))
    td_path = tmp_path / "k6.td"
    code, out, _ = run(["solve", f, "--method", "exact", "--td-out", td_path], capsys)
    assert code == EXIT_OK
    assert read_rows(out)[0]["width"] == "5"
    assert read_rows(out)[0]["proven_optimal"] == "1"
    td, n = parse_td(td_path.read_text())
    assert n == 6 and validate_td(complete_graph(6), td).ok


def test_solve_multiple_with_jobs(gdir, tmp_path, capsys):
    files = sorted(gdir.glob("*.gr"))
    code, out, _ = run(["solve", *files, "--method", "bnb", "--jobs", 2, "--td-out", tmp_path / "tds"], capsys)
    assert code == EXIT_OK
    assert [r["graph"] for r in read_rows(out)] == [str(f) for f in files]
    assert len(list((tmp_path / "tds").glob("*.td"))) == 3
    serial = run(["solve", *files, "--method", "bnb"], capsys)[1]
    strip = lambda t: [(r["graph"], r["width"], r["order"]) for r in read_rows(t)]
    assert strip(serial) == strip(out)


def test_solve_budget_exit_code(tmp_path, capsys):
    f = tmp_path / "big.gr"
    f.write_bytes(write_gr(generate_er(ErConfig(60, 0.3, 1))))
    code, out, _ = run(["solve", f, "--method", "bnb", "--time-budget", 0.05], capsys)
    assert code == EXIT_BUDGET
    assert read_rows(out)[0]["proven_optimal"] == "0"


def test_solve_errors(tmp_path, capsys):
    f = tmp_path / "p.gr"
    f.write_bytes(write_gr(path_graph(3)))
    bad = tmp_path / "bad.gr"
    bad.write_text("p tw 2 1\n1 3\n")
    assert run(["solve", tmp_path / "missing.gr", "--method", "min-fill"]) == EXIT_INPUT
    code, _, err = run(["solve", bad, "--method", "min-fill"], capsys)
    assert code == EXIT_INPUT and "out of range" in err
    assert run(["solve", f, "--method", "quantum"]) == EXIT_USAGE
    assert run(["solve", f, "--method", "agent", "--seed", 1]) == EXIT_USAGE
    assert run(["solve", f, "--method", "random"]) == EXIT_USAGE
    garbage = tmp_path / "junk.ckpt"
    garbage.write_bytes(b"nope")
    assert run(["solve", f, "--method", "agent", "--seed", 1, "--checkpoint", garbage]) == EXIT_INPUT


def _train(tmp_path, name, *extra):
    out = tmp_path / f"{name}.ckpt"
    argv = ["train", "--er-n", 8, "--graph-seed", 3, "--seed", 4, "--epochs", 2, "--updates-per-epoch", 2,
            "--episodes-per-update", 2, "--no-timing", "--out", out, *extra]
    assert run(argv) == EXIT_OK
    return out


def test_train_is_bit_identical(tmp_path):
    a = _train(tmp_path, "a")
    b = _train(tmp_path, "b")
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.ckpt.csv").read_bytes() == (tmp_path / "b.ckpt.csv").read_bytes()
    rows = parse_log((tmp_path / "a.ckpt.csv").read_text())
    assert len(rows) == 2 * 2
    assert all(r["wall_ms"] == 0.0 for r in rows)


def test_train_config_file_defaults(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("hidden = 8\nepisodes_per_update = 2\n")
    out = tmp_path / "m.ckpt"
    assert run(["train", "--er-n", 6, "--seed", 0, "--config", cfg, "--epochs", 1, "--updates-per-epoch", 3, "--out", out]) == EXIT_OK
    assert json.loads((tmp_path / "m.ckpt.json").read_text())["hidden"] == 8
    assert len(parse_log((tmp_path / "m.ckpt.csv").read_text())) == 3
    bad = tmp_path / "bad.json"
    bad.write_text('{"nonsense": 1}')
    assert run(["train", "--er-n", 6, "--seed", 0, "--config", bad, "--out", out]) == EXIT_INPUT


def test_train_resume_matches_full_run(tmp_path):
    full = _train(tmp_path, "full")
    half = tmp_path / "half.ckpt"
    common = ["--er-n", 8, "--graph-seed", 3, "--seed", 4, "--updates-per-epoch", 2, "--episodes-per-update", 2, "--no-timing"]
    assert run(["train", *common, "--epochs", 1, "--out", half]) == EXIT_OK
    assert run(["train", *common, "--epochs", 1, "--resume", half, "--out", half]) == EXIT_OK
    assert half.read_bytes() == full.read_bytes()
    assert (tmp_path / "half.ckpt.csv").read_text() == (tmp_path / "full.ckpt.csv").read_text()


def test_train_sample_er(tmp_path):
    out = tmp_path / "s.ckpt"
    assert run(["train", "--sample-er", "5:9", "--seed", 1, "--epochs", 1, "--updates-per-epoch", 2,
                "--episodes-per-update", 1, "--out", out]) == EXIT_OK
    assert out.exists()


def test_train_requires_source(tmp_path):
    assert run(["train", "--seed", 0, "--out", tmp_path / "x.ckpt"]) == EXIT_USAGE


def test_eval_reference_against_itself(gdir, tmp_path, capsys):
    prefix = tmp_path / "rep" / "r"
    code, out, _ = run(["eval", gdir, "--methods", "exact,min-fill", "--reference", "exact", "--out", prefix], capsys)
    assert code == EXIT_OK
    rows = {r["method"]: r for r in read_rows(out)}
    assert float(rows["exact"]["approx_ratio"]) == 1.0
    assert float(rows["exact"]["ratio_max"]) == 1.0
    assert float(rows["min-fill"]["approx_ratio"]) >= 1.0
    assert list(rows["exact"]) == ["method", "approx_ratio", "approx_ratio_std", "ratio_max", "avg_time_sec"]
    data = json.loads((tmp_path / "rep" / "r.json").read_text())
    assert data["graph_ids"] == ["g0.gr", "g1.gr", "g2.gr"]
    assert (tmp_path / "rep" / "r.graphs.csv").exists()


def test_eval_with_agent(gdir, tmp_path, capsys):
    ckpt = _train(tmp_path, "agent")
    capsys.readouterr()
    code, out, _ = run(["eval", gdir, "--methods", "agent,random", "--checkpoint", ckpt, "--seed", 3, "--k", 2,
                        "--out", tmp_path / "e"], capsys)
    assert code == EXIT_OK
    assert {r["method"] for r in read_rows(out)} == {"agent", "random", "exact"}


def test_eval_errors(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert run(["eval", empty, "--out", tmp_path / "x"]) != EXIT_OK
    assert run(["eval", tmp_path / "nowhere", "--out", tmp_path / "x"]) != EXIT_OK


def test_entropy_command(tmp_path, capsys):
    ckpt = _train(tmp_path, "ent")
    capsys.readouterr()
    g = tmp_path / "k8.gr"
    g.write_bytes(write_gr(complete_graph(8)))
    code, out, _ = run(["entropy", "--checkpoint", ckpt, "--graph", g, "--seed", 0], capsys)
    assert code == EXIT_OK
    tr = EntropyTrace.from_csv(out)
    assert len(tr.steps) == 8
    assert all(abs(h - 1.0) <= 1e-6 for h in tr.normalized[:-1])
    assert tr.normalized[-1] == 0.0
    out_file = tmp_path / "t.csv"
    assert run(["entropy", "--checkpoint", ckpt, "--graph", g, "--seed", 0, "--out", out_file]) == EXIT_OK
    assert out_file.read_text() == out


def test_help_lists_commands(capsys):
    code, out, _ = run(["--help"], capsys)
    assert code == 0
    for cmd in ("generate", "solve", "train", "eval", "entropy"):
        assert cmd in out
