"""End-to-end command-line checks.

Most tests drive cli.main in-process with --out into tmp_path so the
emitted bytes can be compared exactly; the selftest runs once as a real
subprocess to cover the console entry point.
"""

import json
import subprocess
import sys
import time

import pytest

from bewtc import bitchannel, cli, codes, secrecy


def run_cli(argv, tmp_path, name="out.txt"):
    out = tmp_path / name
    rc = cli.main(list(argv) + ["--out", str(out)])
    return rc, out.read_text() if out.exists() else ""


def body_lines(text):
    return [l for l in text.splitlines() if not l.startswith("#")]


def test_construct_g2(tmp_path):
    rc, text = run_cli(["construct", "--spec", "g2"], tmp_path)
    assert rc == 0
    assert body_lines(text) == ["10", "11"]
    assert "# rank: 2" in text
    assert "# invertible: true" in text
    assert "# row_weight_histogram: 1:1 2:1" in text


def test_construct_accepts_json_path_and_suffix(tmp_path):
    spec_file = tmp_path / "tiny.json"
    spec_file.write_text(json.dumps({
        "family": "pac",
        "kernels": ["G2", "G2"],
        "conv_poly": [1, 1],
    }))
    rc, text = run_cli(["construct", "--spec", str(spec_file)], tmp_path)
    assert rc == 0
    assert len(body_lines(text)) == 4
    rc2, text2 = run_cli(["construct", "--spec", "g2.json"], tmp_path, "b.txt")
    assert rc2 == 0
    assert body_lines(text2) == ["10", "11"]


def test_unknown_spec_exits_2(tmp_path, capsys):
    rc = cli.main(["construct", "--spec", "no_such_spec"])
    assert rc == 2
    assert "no_such_spec" in capsys.readouterr().err


def test_invalid_polynomial_exits_2(tmp_path, capsys):
    spec_file = tmp_path / "bad.json"
    spec_file.write_text(json.dumps({
        "family": "pac",
        "kernels": ["G2"],
        "conv_poly": [0, 1],
    }))
    rc = cli.main(["construct", "--spec", str(spec_file)])
    assert rc == 2
    assert "invalid polynomial" in capsys.readouterr().err


def test_bitchannels_exact_matches_recursion(tmp_path):
    spec_file = tmp_path / "p8.json"
    spec_file.write_text(json.dumps({
        "family": "polar",
        "kernels": ["G2", "G2", "G2"],
        "conv_poly": [1],
    }))
    rc, text = run_cli(
        ["bitchannels", "--spec", str(spec_file), "--p", "0.4", "--exact"],
        tmp_path,
    )
    assert rc == 0
    rows = body_lines(text)
    assert rows[0] == "index,erasure_prob,std_err,tvd"
    ref = bitchannel.polar_bec_recursion(0.4, 3)
    for line, want in zip(rows[1:], ref):
        idx, prob, se, tvd = line.split(",")
        assert float(prob) == pytest.approx(want, abs=1e-12)
        assert float(se) == 0.0
        assert float(tvd) == pytest.approx(0.5 * (1 - want), abs=1e-12)
    assert [r.split(",")[0] for r in rows[1:]] == [str(i) for i in range(1, 9)]


def test_bitchannels_sorted_by_tvd(tmp_path):
    rc, text = run_cli(
        ["bitchannels", "--spec", "n16_mkpac", "--p", "0.4", "--exact", "--sorted"],
        tmp_path,
    )
    assert rc == 0
    tvds = [float(r.split(",")[3]) for r in body_lines(text)[1:]]
    assert tvds == sorted(tvds)


def test_bitchannels_byte_determinism_across_threads(tmp_path):
    argv = ["bitchannels", "--spec", "n16_mkpac", "--p", "0.4",
            "--trials", "20000", "--seed", "5"]
    _, a = run_cli(argv, tmp_path, "a.csv")
    _, b = run_cli(["--threads", "1"] + argv, tmp_path, "b.csv")
    _, c = run_cli(["--threads", "64"] + argv, tmp_path, "c.csv")
    assert a == b == c
    _, d = run_cli(argv[:-1] + ["6"], tmp_path, "d.csv")
    assert d != a


def test_bitchannels_message_past_flag(tmp_path, capsys):
    argv = ["bitchannels", "--spec", "n16_mkpac", "--p", "0.4", "--exact",
            "--conditioning", "message-past", "--message-set", "1,16"]
    rc, text = run_cli(argv, tmp_path)
    assert rc == 0
    assert "message-past(A=[1,16])" in text
    rows = body_lines(text)[1:]
    assert [r.split(",")[0] for r in rows] == ["1", "16"]
    # message-set without the message-past mode is a usage error
    rc = cli.main(["bitchannels", "--spec", "g2", "--p", "0.4", "--exact",
                   "--message-set", "1"])
    assert rc == 2
    assert "message-past" in capsys.readouterr().err


def test_rates_csv(tmp_path):
    rc, text = run_cli(
        ["rates", "--spec", "g2", "--spec", "n16_mkpac", "--p", "0.4",
         "--delta", "0.2", "--exact"],
        tmp_path, "rates.csv",
    )
    assert rc == 0
    rows = body_lines(text)
    assert rows[0] == (
        "n,p,delta,rate_converse,rate_achiev_rc,rate_second_order,rate_code,"
        "k_converse,k_achiev_rc,k_code,leakage_bound"
    )
    assert len(rows) == 3
    first = rows[1].split(",")
    assert first[0] == "2" and first[7] == "1"
    assert rows[2].split(",")[0] == "16"


def test_leakage_exact_explicit_set(tmp_path):
    rc, text = run_cli(
        ["leakage-exact", "--spec", "n16_mkpac", "--p", "0.4",
         "--message-set", "16", "--enum-cap", "16"],
        tmp_path, "leak.csv",
    )
    assert rc == 0
    assert "# message_set: 16" in text
    rows = body_lines(text)
    assert rows[0] == "n,p,k,exact_leakage,leakage_bound"
    n, p, k, leak, bound = rows[1].split(",")
    assert (n, p, k, bound) == ("16", "0.4", "1", "")
    spec = codes.load_spec("n16_mkpac")
    code = codes.WiretapCode.from_spec(spec, [15])
    assert float(leak) == pytest.approx(secrecy.exact_leakage(code, 0.4, cap=16), abs=0)


def test_leakage_exact_greedy_selection(tmp_path):
    rc, text = run_cli(
        ["leakage-exact", "--spec", "n16_mkpac", "--p", "0.4", "--delta",
         "0.001", "--trials", "50000", "--seed", "1", "--enum-cap", "16"],
        tmp_path, "leak.csv",
    )
    assert rc == 0
    row = body_lines(text)[1].split(",")
    assert row[2] == "1"
    # the bound column is a Monte Carlo estimate, so only sanity-check it
    assert 0.0 < float(row[3]) < 0.001
    assert 0.0 <= float(row[4]) < 0.001


def test_bounds_gamma_mode(tmp_path):
    rc, text = run_cli(
        ["bounds", "--n", "16", "--p", "0.4", "--gamma", "1024.0"],
        tmp_path, "bounds.csv",
    )
    assert rc == 0
    rows = body_lines(text)
    assert rows[0] == "n,p,gamma,g_n,h_n"
    _, _, _, g, h = rows[1].split(",")
    assert float(g) == pytest.approx(secrecy.g_n(1024.0, 16, 0.4), abs=0)
    assert float(h) == pytest.approx(secrecy.h_n(1024.0, 16, 0.4), abs=0)


def test_bounds_delta_mode(tmp_path, capsys):
    rc, text = run_cli(
        ["bounds", "--n", "128", "--p", "0.4", "--delta", "0.001"],
        tmp_path, "bounds.csv",
    )
    assert rc == 0
    rows = body_lines(text)
    vals = rows[1].split(",")
    assert vals[6] == "35" and vals[7] == "24"
    assert float(vals[8]) == pytest.approx(0.2661890159631747, abs=1e-9)
    assert "# gamma_star:" in text
    rc = cli.main(["bounds", "--n", "16", "--p", "0.4"])
    assert rc == 2
    assert "--gamma or --delta" in capsys.readouterr().err


def test_selftest_quick_subprocess():
    t0 = time.monotonic()
    proc = subprocess.run(
        [sys.executable, "-m", "bewtc.cli", "selftest", "--quick"],
        capture_output=True, text=True, timeout=60,
    )
    elapsed = time.monotonic() - t0
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "6/6 checks passed" in proc.stdout
    assert elapsed < 10.0


def test_selftest_detects_corrupted_kernel(monkeypatch, capsys):
    real = codes.kernel_fixture_text

    def corrupted(name):
        text = real(name)
        return text.replace("1", "0", 1) if name == "G16" else text

    monkeypatch.setattr(codes, "kernel_fixture_text", corrupted)
    rc = cli.main(["selftest", "--quick"])
    assert rc == 1
    out = capsys.readouterr().out
    assert "kernel-checksum: FAIL" in out
