import subprocess
import sys

import pytest

from unicache import (ConfigError, RequestTrace, offline_fsp_hits, parse_config,
                      parse_csv, run_experiment, save_fsm, save_trace, summarize,
                      to_csv)
from unicache.harness import CSV_HEADER, ExperimentConfig, PolicySpec, parse_policy_spec
from unicache import bounds as bounds_mod
from util import worked_example


def test_parse_policy_specs():
    assert parse_policy_spec("sage") == PolicySpec("sage")
    assert parse_policy_spec("markov:3") == PolicySpec("markov", order=3)
    assert parse_policy_spec(" markov-oracle:2 ") == PolicySpec("markov-oracle", order=2)
    assert parse_policy_spec("fsp-oracle:m.fsm") == PolicySpec("fsp-oracle", path="m.fsm")
    for bad in ("markov", "markov:x", "markov:-1", "fsp-oracle:", "bogus"):
        with pytest.raises(ConfigError):
            parse_policy_spec(bad)


def _write_config(path, body):
    path.write_text(body)
    return parse_config(path)


def test_parse_config_generator(tmp_path):
    cfg = _write_config(tmp_path / "a.ini", """
[trace]
states = 10
files = 4
rounds = 500
seed = 3

[run]
cache_size = 2
policies = sage, markov:1
seeds = 0:3
eta = auto
""")
    assert cfg.gen_states == 10 and cfg.gen_files == 4 and cfg.gen_rounds == 500
    assert cfg.seeds == [0, 1, 2]
    assert cfg.eta is None and cfg.eta_mode == "doubling"


def test_parse_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "missing.ini")
    with pytest.raises(ConfigError, match=r"\[run\] cache_size"):
        _write_config(tmp_path / "b.ini", "[trace]\npath=x\n[run]\npolicies=sage\nseeds=1\n")
    with pytest.raises(ConfigError, match="policies"):
        _write_config(tmp_path / "c.ini", "[trace]\npath=x\n[run]\ncache_size=2\n")
    with pytest.raises(ConfigError, match=r"\[trace\] rounds"):
        _write_config(tmp_path / "d.ini",
                      "[trace]\nstates=2\nfiles=3\n[run]\ncache_size=2\npolicies=sage\n")
    with pytest.raises(ConfigError, match="eta_mode"):
        _write_config(tmp_path / "e.ini",
                      "[trace]\npath=x\n[run]\ncache_size=2\npolicies=sage\neta_mode=off\n")


def test_run_worked_example_oracle_row(tmp_path):
    spec, trace, _, _ = worked_example()
    fsm_path = tmp_path / "m.fsm"
    trace_path = tmp_path / "t.trace"
    save_fsm(spec, fsm_path)
    save_trace(trace, trace_path)
    cfg = _write_config(tmp_path / "exp.ini", f"""
[trace]
path = {trace_path}

[run]
cache_size = 2
policies = fsp-oracle:{fsm_path}
seeds = 0
""")
    rows = run_experiment(cfg)
    assert len(rows) == 1
    assert rows[0].hits == 11
    assert rows[0].hit_rate == pytest.approx(11 / 12, abs=1e-12)


def test_static_oracle_counts_best_single_file(tmp_path):
    trace_path = tmp_path / "t.trace"
    save_trace(RequestTrace(4, [1, 1, 2, 3]), trace_path)
    cfg = _write_config(tmp_path / "exp.ini", f"""
[trace]
path = {trace_path}

[run]
cache_size = 1
policies = static-oracle, sage
seeds = 0:2
""")
    rows = run_experiment(cfg)
    oracle = [r for r in rows if r.policy == "static-oracle"]
    assert all(r.hits == 2 for r in oracle)
    sage_rows = [r for r in rows if r.policy == "sage"]
    assert all(r.regret_static == 2 - r.hits for r in sage_rows)


def test_markov_oracle_rows_nondecreasing_in_k(tmp_path):
    cfg = _write_config(tmp_path / "exp.ini", """
[trace]
states = 10
files = 4
rounds = 3000
seed = 5

[run]
cache_size = 2
policies = markov-oracle:0, markov-oracle:1, markov-oracle:2, markov-oracle:3
seeds = 0
""")
    rows = run_experiment(cfg)
    rates = [r.hit_rate for r in rows]
    assert rates == sorted(rates)


def test_csv_deterministic_and_roundtrips(tmp_path):
    cfg_text = """
[trace]
states = 6
files = 4
rounds = 400
seed = 2

[run]
cache_size = 2
policies = sage, markov:1, lru, static-oracle, markov-oracle:1
seeds = 0:3
"""
    cfg1 = _write_config(tmp_path / "a.ini", cfg_text)
    cfg2 = _write_config(tmp_path / "b.ini", cfg_text)
    csv1 = to_csv(run_experiment(cfg1))
    csv2 = to_csv(run_experiment(cfg2))
    assert csv1 == csv2
    assert csv1.splitlines()[0] == CSV_HEADER
    rows = parse_csv(csv1)
    assert to_csv(rows) == csv1


def test_bound_column_matches_evaluators(tmp_path):
    cfg = _write_config(tmp_path / "exp.ini", """
[trace]
states = 6
files = 4
rounds = 600
seed = 9

[run]
cache_size = 2
policies = sage, markov:2, static-oracle, markov-oracle:2
seeds = 0:2
""")
    rows = run_experiment(cfg)
    static_hits = next(r.hits for r in rows if r.policy == "static-oracle")
    markov_hits = next(r.hits for r in rows if r.policy == "markov-oracle:2")
    horizon = rows[0].T
    for r in rows:
        if r.policy == "sage":
            expect = bounds_mod.static_regret_bound(horizon - static_hits, 4, 2)
            assert r.bound_value == pytest.approx(expect, rel=1e-12)
        if r.policy == "markov:2":
            expect = bounds_mod.markov_regret_bound(2, horizon - markov_hits, 4, 2)
            assert r.bound_value == pytest.approx(expect, rel=1e-12)


def test_report_dispatches_formats(tmp_path):
    cfg = _write_config(tmp_path / "exp.ini", """
[trace]
states = 4
files = 3
rounds = 150
seed = 8

[run]
cache_size = 1
policies = sage
seeds = 0:2
""")
    from unicache import report

    rows = run_experiment(cfg)
    assert report(rows, "csv") == to_csv(rows)
    assert report(rows, "summary") == summarize(rows)
    with pytest.raises(ConfigError):
        report(rows, "xml")


def test_summarize_recomputes_mean(tmp_path):
    cfg = _write_config(tmp_path / "exp.ini", """
[trace]
states = 4
files = 3
rounds = 200
seed = 1

[run]
cache_size = 1
policies = sage
seeds = 0:4
""")
    rows = run_experiment(cfg)
    text = summarize(rows)
    mean = sum(r.hit_rate for r in rows) / len(rows)
    assert f"{mean:.6f}" in text


def test_experiment_config_validates_cache_size(tmp_path):
    trace_path = tmp_path / "t.trace"
    save_trace(RequestTrace(2, [0, 1, 0]), trace_path)
    cfg = ExperimentConfig(cache_size=5, policies=[PolicySpec("sage")], seeds=[0],
                           trace_path=str(trace_path))
    with pytest.raises(ConfigError):
        run_experiment(cfg)


# ---------------------------------------------------------------------------
# CLI


def _cli(*args, cwd):
    return subprocess.run([sys.executable, "-m", "unicache.cli", *args],
                          capture_output=True, text=True, cwd=cwd)


def test_cli_gen_run_cycle(tmp_path):
    r = _cli("gen", "--states", "5", "--files", "3", "--cache", "2",
             "--rounds", "300", "--seed", "1", "--out-prefix", "demo", cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    (tmp_path / "exp.ini").write_text("""
[trace]
path = demo.trace

[run]
cache_size = 2
policies = sage, fsp-oracle:demo.fsm, static-oracle
seeds = 0:2
out = out.csv
""")
    r = _cli("run", "--config", "exp.ini", cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    body = (tmp_path / "out.csv").read_text()
    assert body.splitlines()[0] == CSV_HEADER
    oracle_rows = [ln for ln in body.splitlines() if ln.startswith("fsp-oracle")]
    assert oracle_rows and all(ln.split(",")[7] == "1" for ln in oracle_rows)  # zero-miss


def test_cli_runs_are_byte_identical_across_processes(tmp_path):
    save_trace(RequestTrace(4, [0, 1, 3, 2, 1] * 40), tmp_path / "t.trace")
    (tmp_path / "exp.ini").write_text("""
[trace]
path = t.trace

[run]
cache_size = 2
policies = sage, markov:1, static-oracle
seeds = 0:3
""")
    outputs = []
    for name in ("a.csv", "b.csv"):
        r = _cli("run", "--config", "exp.ini", "--out", name, "--quiet", cwd=tmp_path)
        assert r.returncode == 0, r.stderr
        outputs.append((tmp_path / name).read_bytes())
    assert outputs[0] == outputs[1]


def test_cli_exit_codes(tmp_path):
    r = _cli("bogus-command", cwd=tmp_path)
    assert r.returncode == 1
    r = _cli("run", "--config", "missing.ini", cwd=tmp_path)
    assert r.returncode == 2
    (tmp_path / "bad.ini").write_text("""
[trace]
path = nowhere.trace

[run]
cache_size = 2
policies = sage
seeds = 0
""")
    r = _cli("run", "--config", "bad.ini", cwd=tmp_path)
    assert r.returncode == 3
    r = _cli("bounds", "--files", "3", "--cache", "2", "--states", "50",
             "--rounds", "1000", "--max-order", "2", cwd=tmp_path)
    assert r.returncode == 0
    assert r.stdout.splitlines()[0].startswith("k,")


def test_cli_numeric_exit_code(monkeypatch):
    from unicache import NumericError, cli

    def boom(args):
        raise NumericError("synthetic")

    monkeypatch.setattr(cli, "_cmd_bounds", boom)
    code = cli.main(["bounds", "--files", "3", "--cache", "2",
                     "--states", "5", "--rounds", "10"])
    assert code == 4


def test_cli_parse_stats(tmp_path):
    save_trace(RequestTrace(2, [0, 1, 0, 0, 1, 1]), tmp_path / "t.trace")
    r = _cli("parse-stats", "--trace", "t.trace", "--dump", "tree.txt", cwd=tmp_path)
    assert r.returncode == 0
    assert "nodes           5" in r.stdout
    assert "phrases         4" in r.stdout
    dump = (tmp_path / "tree.txt").read_text().splitlines()
    assert len(dump) == 5


def test_cli_seed_base_shifts_rows(tmp_path):
    save_trace(RequestTrace(3, [0, 1, 2, 1] * 25), tmp_path / "t.trace")
    (tmp_path / "exp.ini").write_text("""
[trace]
path = t.trace

[run]
cache_size = 1
policies = sage
seeds = 0:2
""")
    r = _cli("run", "--config", "exp.ini", "--seed-base", "10", "--quiet", cwd=tmp_path)
    assert r.returncode == 0
    seeds = [ln.split(",")[2] for ln in r.stdout.splitlines()[1:] if ln]
    assert seeds == ["10", "11"]