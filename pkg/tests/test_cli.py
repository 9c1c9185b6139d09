import csv
import io
import subprocess
import sys

import pytest

from bdhlab import cli
from bdhlab.cli import ConfigError, VARIANCE_COLUMNS, emit_csv, eval_expr, main, parse_config, run_experiment

MINIMAL = "[sequence]\nkind = integers\nx = 1000\n[run]\nQ = 100\n"


def _write(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def test_parse_minimal():
    cfg = parse_config(MINIMAL)
    assert cfg.kind == "integers" and cfg.x == 1000 and cfg.Q == [100]
    assert cfg.run_count() == 1


def test_parse_bernoulli_needs_seed():
    with pytest.raises(ConfigError) as exc:
        parse_config("[sequence]\nkind = bernoulli\nalpha = 0.1\nx = 100\n[run]\nQ = 20\n")
    assert any("sequence.seed" in e for e in exc.value.errors)


def test_parse_sweep():
    cfg = parse_config("[sequence]\nx = 1000\n[run]\nQ = 100, 200, 400\n")
    assert cfg.Q == [100, 200, 400] and cfg.run_count() == 3


def test_parse_expressions():
    cfg = parse_config("[sequence]\nkind = smooth_indicator\nx = 10^4\ny = x^(1/3)\n[run]\nQ = x^0.8\n")
    assert cfg.x == 10000
    assert cfg.params["y"] == pytest.approx(10000 ** (1 / 3))
    assert cfg.Q[0] == pytest.approx(10000**0.8)


def test_parse_collects_all_errors():
    with pytest.raises(ConfigError) as exc:
        parse_config("[sequence]\nkind = nope\nbogus = 1\n[run]\nQ = abc\n")
    errs = exc.value.errors
    assert any("sequence.x" in e for e in errs)
    assert any("unknown kind" in e for e in errs)
    assert any("sequence.bogus" in e for e in errs)
    assert any("malformed number" in e for e in errs)


def test_eval_expr_rejects_calls():
    with pytest.raises(ValueError):
        eval_expr("__import__('os')")
    assert eval_expr("2^10 - x", {"x": 24}) == 1000


def test_emit_csv_lines():
    buf = io.StringIO()
    emit_csv([], VARIANCE_COLUMNS, buf)
    assert buf.getvalue() == ",".join(VARIANCE_COLUMNS) + "\r\n"
    rows, cols = run_experiment(parse_config("[sequence]\nx = 6\n[run]\nQ = 4\n"), "variance")
    buf = io.StringIO()
    emit_csv(rows, cols, buf)
    assert buf.getvalue().count("\r\n") == 2
    rows, cols = run_experiment(parse_config("[sequence]\nx = 100\n[run]\nQ = 15, 30, 60\n"), "variance")
    buf = io.StringIO()
    emit_csv(rows, cols, buf)
    assert buf.getvalue().count("\r\n") == 4


def test_integers_row():
    rows, _ = run_experiment(parse_config("[sequence]\nx = 6\n[run]\nQ = 4\n"), "variance")
    assert rows[0]["v_direct"] == rows[0]["v_expanded"] == rows[0]["v_switched"] == 0.5


def test_row_formatting():
    buf = io.StringIO()
    emit_csv([{"x": 0.1, "kind": "a,b", "Q": float("inf")}], ["x", "kind", "Q"], buf)
    rec = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rec[1] == ["0.10000000000000001", "a,b", "inf"]


def test_repeat_byte_identical(tmp_path):
    cfg = _write(tmp_path, "[sequence]\nkind = bernoulli\nalpha = 0.3\nseed = 4\nx = 2000\n"
                 "[run]\nQ = 300, 900\ndecomposition = yes\n[predict]\nmode = theorem1\n")
    outs = []
    for i, th in enumerate((1, 1, 4)):
        out = tmp_path / f"o{i}.csv"
        assert main(["sweep", "--config", cfg, "--out", str(out), "--threads", str(th)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    assert outs[0].count(b"\r\n") == 3


def test_subcommands(tmp_path, capsys):
    cfg = _write(tmp_path, "[sequence]\nkind = smooth_indicator\nx = 3000\ny = 14\n"
                 "[run]\nQ = 400\n[predict]\nmode = theorem2\nP = 3\nR = 5\n")
    for sub in ("variance", "conditions", "predict", "smooth", "sweep"):
        assert main([sub, "--config", cfg]) == 0
        out = capsys.readouterr().out
        assert out.count("\r\n") == 2
    base = _write(tmp_path, "[sequence]\nx = 1000\n[run]\nQ = 200\n", "b.ini")
    assert main(["baseline", "--config", base]) == 0
    assert capsys.readouterr().out.startswith("x,Q,v_exact,")


def test_seed_override(tmp_path, capsys):
    cfg = _write(tmp_path, "[sequence]\nkind = bernoulli\nalpha = 0.3\nseed = 4\nx = 500\n[run]\nQ = 100\n")
    main(["variance", "--config", cfg])
    a = capsys.readouterr().out
    main(["variance", "--config", cfg, "--seed", "5"])
    b = capsys.readouterr().out
    assert a != b and "seed=5" in b


def test_exit_config_error(tmp_path):
    cfg = _write(tmp_path, "[sequence]\nkind = bernoulli\nx = 100\n[run]\nQ = 20\n")
    assert main(["variance", "--config", cfg]) == 2
    assert main(["variance", "--config", str(tmp_path / "missing.ini")]) == 2
    bad_q = _write(tmp_path, "[sequence]\nx = 100\n[run]\nQ = 0\n", "q.ini")
    assert main(["variance", "--config", bad_q]) == 2


def test_exit_invariant(tmp_path, monkeypatch):
    cfg = _write(tmp_path, "[sequence]\nkind = smooth_indicator\nx = 500\ny = 7\n[run]\nQ = 100\n")
    real = cli.smooth_variance

    def broken(x, y, Q, t=None, method="structured"):
        v = real(x, y, Q, t, method)
        return v + 1 if method == "generic" else v

    monkeypatch.setattr(cli, "smooth_variance", broken)
    assert main(["smooth", "--config", cfg]) == 3


def test_exit_resource_limit(tmp_path):
    cfg = _write(tmp_path, "[sequence]\nx = 10^8\n[run]\nQ = 10^4\n")
    env = {"BDH_LAB_MAX_MEMORY_MB": "1", "PATH": "/usr/bin:/bin"}
    proc = subprocess.run([sys.executable, "-m", "bdhlab", "variance", "--config", cfg],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 4
    assert "BDH_LAB_MAX_MEMORY_MB" in proc.stderr
