import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from maxdet.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, Report, emit_csv, parse_csv, run

GOLDEN = Path(__file__).parent / "golden"


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


@pytest.mark.parametrize("name", ["table2", "table1", "example668"])
def test_golden_tables(name):
    code, out, _ = call(name, "--format", "csv")
    assert code == EXIT_OK
    assert out == (GOLDEN / f"{name}.csv").read_text(encoding="utf-8")


def test_table2_shape():
    _, out, _ = call("table2")
    rep = parse_csv(out)
    assert len(rep.rows) == 6 and all(len(r) == 5 for r in rep.rows)
    assert rep.rows[-1] == ("limit", "0.0000", "0.0000", "0.2342", "0.2342")


def test_example668_values():
    _, out, _ = call("example668")
    values = {r[0]: r[2] for r in parse_csv(out).rows}
    assert values == {"bordering": "4.88e-06", "minors": "2.60e-04", "thm1": "1.69e-02", "conjectured": "5.48e-02"}


COMMANDS = [
    ("bound", "--n", "98"),
    ("bound", "--n", "668", "--methods", "thm1,minors,bo-bordering,classic,thm2"),
    ("table1",),
    ("table2",),
    ("example668",),
    ("stats", "--h", "12"),
    ("simulate", "--h", "8", "--d", "2", "--trials", "3000", "--seed", "5"),
    ("simulate", "--h", "4", "--d", "2", "--exhaustive"),
    ("sample", "--h", "8", "--d", "3", "--trials", "50", "--seed", "2"),
    ("search", "--h", "12", "--d", "2", "--trials", "500", "--seed", "1"),
    ("oracle", "--n", "4"),
    ("verify", "stirling", "--m-max", "20", "--k", "3"),
]


@pytest.mark.parametrize("argv", COMMANDS, ids=lambda a: "-".join(a[:2]))
def test_csv_roundtrip_and_determinism(argv):
    code, out, _ = call(*argv, "--format", "csv")
    assert code == EXIT_OK
    assert out.startswith("# config: ")
    rep = parse_csv(out)
    assert emit_csv(rep) == out
    assert rep.command == argv[0]
    assert call(*argv, "--format", "csv")[1] == out


def test_seed_in_header():
    _, out, _ = call("sample", "--h", "4", "--d", "1", "--trials", "3", "--seed", "77")
    assert parse_csv(out).config["seed"] == 77


def test_roundtrip_with_awkward_cells():
    rep = Report("x", {"a": "1,2", "b": None}, ("c1", "c2"), (("a\"b", "line/1"), ("", "–")))
    assert parse_csv(emit_csv(rep)) == rep


def test_json_schema():
    for argv in (("table2",), ("simulate", "--h", "4", "--d", "1", "--exhaustive")):
        code, out, _ = call(*argv, "--format", "json")
        doc = json.loads(out)
        assert code == EXIT_OK and doc["schema"] == 1 and doc["command"] == argv[0]
    assert doc["result"]["mean_gii_exact"] == "5/2"
    assert doc["result"]["var_gii_exact"] == "1/4"


def test_sample_columns():
    _, out, _ = call("sample", "--h", "8", "--d", "2", "--trials", "20", "--seed", "0")
    rep = parse_csv(out)
    assert rep.columns == ("trial", "det_G_numerator", "det_G_denominator", "det_A_tilde", "good_flag")
    assert [r[0] for r in rep.rows] == [str(i) for i in range(20)]
    for r in rep.rows:
        # det A~ = det A * det(-G) with |det A| = 8^4
        assert abs(int(r[3])) * int(r[2]) == 8 ** 4 * abs(int(r[1]))
        assert r[4] in ("0", "1")


def test_simulate_log(tmp_path):
    log = tmp_path / "trials.csv"
    code, _, _ = call("simulate", "--h", "8", "--d", "2", "--trials", "100", "--log", str(log))
    assert code == EXIT_OK
    assert len(parse_csv(log.read_text()).rows) == 100


def test_verify_stirling_columns():
    _, out, _ = call("verify", "stirling", "--m-max", "5", "--k", "2")
    rep = parse_csv(out)
    assert rep.columns == ("m", "k", "lo", "exact", "hi", "pass")
    assert len(rep.rows) == 10 and all(r[-1] == "true" for r in rep.rows)


def test_verify_all_quick():
    code, out, _ = call("verify", "all", "--quick")
    assert code == EXIT_OK, out
    assert "FAIL" not in out


def test_oracle_text_output():
    code, out, _ = call("oracle", "--n", "3")
    assert code == EXIT_OK
    assert out == "dbar 4\n3 3\n+++\n++-\n+-+\n"


def test_usage_errors():
    assert call()[0] == EXIT_USAGE
    assert call("frobnicate")[0] == EXIT_USAGE
    code, _, err = call("bound")
    assert code == EXIT_USAGE and "--n" in err
    assert call("bound", "--n", "10", "--methods", "nope")[0] == EXIT_USAGE
    assert call("oracle", "--n", "9")[0] == EXIT_USAGE
    assert call("table2", "--format", "xml")[0] == EXIT_USAGE


def test_registry_env(tmp_path, monkeypatch):
    p = tmp_path / "orders.txt"
    p.write_text("# tiny\n4\n8\n")
    monkeypatch.setenv("MAXDET_REGISTRY", str(p))
    _, out, _ = call("bound", "--n", "14", "--methods", "thm1")
    (row,) = parse_csv(out).rows
    assert row[:3] == ("14", "8", "6")
    monkeypatch.delenv("MAXDET_REGISTRY")
    _, out, _ = call("bound", "--n", "14", "--methods", "thm1", "--registry", str(p))
    assert parse_csv(out).rows[0][:3] == ("14", "8", "6")


def test_search_failure_exit_code(monkeypatch):
    import maxdet.sampler as sampler

    real = sampler.best_det_search

    def failing(*args, **kwargs):
        r = real(*args, **kwargs)
        return type(r)(**{**r.__dict__, "meets_thm1": False})

    monkeypatch.setattr(sampler, "best_det_search", failing)
    assert call("search", "--h", "4", "--d", "1", "--exhaustive")[0] == EXIT_FAIL


def test_console_script_utf8_lf():
    res = subprocess.run([sys.executable, "-m", "maxdet", "table2", "--format", "text"],
                         capture_output=True, check=True)
    assert b"\r\n" not in res.stdout
    assert "–".encode("utf-8") in res.stdout
