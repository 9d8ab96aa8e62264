import json
import subprocess
import sys
from pathlib import Path

import pytest

from decisive.cli import main

MODELS = Path(__file__).parent / "models"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestCheck:
    def test_net(self, capsys):
        code, out, _ = run(capsys, "check", MODELS / "choice.ppn")
        assert code == 0 and out.splitlines()[1] == "pPN: yes; safe-1-counter: no; pHM: no"

    def test_phm_matrix(self, capsys):
        code, out, _ = run(capsys, "check", MODELS / "phm.pcm", "--json")
        data = json.loads(out)
        assert code == 0 and data["pHM"] is True
        assert data["M_C"]["q"] == {"q1": "1/2", "q2": "1/2"}


class TestDecide:
    def test_symmetric(self, capsys):
        code, out, _ = run(capsys, "decide", MODELS / "symmetric.pcm")
        assert code == 0 and out.strip() == "Decisive (case: W(dec)=W(inc))"

    def test_net_probability(self, capsys):
        code, out, _ = run(capsys, "decide", MODELS / "choice.ppn", "--json")
        assert code == 0 and json.loads(out)["probability"] == "1/3"

    def test_unsupported(self, capsys):
        code, out, _ = run(capsys, "decide", MODELS / "hilbert.pcm")
        assert code == 3 and out.startswith("Unsupported")


class TestCrp:
    def test_width(self, capsys, tmp_path):
        trace = tmp_path / "trace.csv"
        code, out, _ = run(capsys, "crp", MODELS / "walk_down.pcm", "--theta", "1/100", "--json",
                           "--trace", trace)
        data = json.loads(out)
        assert code == 0 and data["complete"] and data["up"] == "1/1"
        low = [int(x) for x in data["low"].split("/")]
        assert 1 - low[0] / low[1] <= 0.01
        rows = trace.read_text().splitlines()
        assert rows[0] == "step,pmin,pmax,frontier_size,depth" and len(rows) == data["steps"] + 1

    def test_fractions_in_text(self, capsys):
        code, out, _ = run(capsys, "crp", MODELS / "walk_down.pcm", "--theta", "1/100")
        assert code == 0 and "/" in out and "(0.99" in out

    def test_bounded_oracle(self, capsys):
        code, out, _ = run(capsys, "crp", MODELS / "choice.ppn", "--theta", "1/10", "--oracle", "bounded:500",
                           "--json")
        data = json.loads(out)
        assert code == 0 and data["oracle"] == "bounded" and data["low"] == data["up"] == "1/3"

    def test_bad_oracle(self, capsys):
        code, _, err = run(capsys, "crp", MODELS / "choice.ppn", "--theta", "1/10", "--oracle", "magic")
        assert code == 1 and err == "decisive: unknown oracle 'magic' (expected auto or bounded:N)\n"

    def test_incomplete(self, capsys):
        code, out, _ = run(capsys, "crp", MODELS / "walk_up.pcm", "--theta", "1/100", "--step-cap", "50")
        assert code == 4 and out.startswith("incomplete (step cap reached)")


class TestOther:
    def test_rq(self, capsys):
        code, out, _ = run(capsys, "rq", MODELS / "walk_up.pcm")
        assert code == 0 and out.strip() == "r_q = inf"

    def test_recast_closes(self, capsys, tmp_path):
        edges = tmp_path / "e.txt"
        code, out, _ = run(capsys, "recast", MODELS / "choice.ppn", "--edges", edges)
        assert code == 0 and out.strip().endswith("recurrent (decisive)")
        assert edges.read_text().startswith("# states 2")

    def test_recast_budget(self, capsys):
        code, _, _ = run(capsys, "recast", MODELS / "walk_down.pcm", "--budget", "50")
        assert code == 4

    def test_simulate_csv(self, capsys, tmp_path):
        csv = tmp_path / "r.csv"
        code, out, _ = run(capsys, "simulate", MODELS / "walk_up.pcm", "--trials", "300",
                           "--seed", "7", "--csv", csv, "--json")
        data = json.loads(out)
        assert code == 0 and data["trials"] == 300 and data["generator"] == "PCG64"
        assert csv.read_text().splitlines()[0] == "seed,trials,hits,censored,low,high"

    def test_generate_round_trips(self, capsys, tmp_path):
        target = tmp_path / "net.ppn"
        code, _, _ = run(capsys, "generate", "ppn", MODELS / "countdown.prog", "--normalize", "-o", target)
        assert code == 0
        code, out, _ = run(capsys, "check", target)
        assert code == 0 and "16 counters" in out

    def test_generate_static_machine(self, capsys, tmp_path):
        target = tmp_path / "static.pcm"
        code, _, _ = run(capsys, "generate", "static-pcm", MODELS / "countdown.prog", "--normalize",
                         "-o", target)
        assert code == 0
        code, out, _ = run(capsys, "decide", target)
        assert code == 3 and out.startswith("Unsupported")

    def test_generate_normalize(self, capsys):
        code, out, _ = run(capsys, "generate", "normalize", MODELS / "countdown.prog")
        assert code == 0 and len(out.splitlines()) == 3 + 4 and out.startswith("0: test c1 then 0 else 1")

    def test_generate_hilbert(self, capsys):
        code, out, _ = run(capsys, "generate", "hilbert", "x1^2 + 1", "--start", "4")
        assert code == 0 and "opaque g = hilbert(x1^2 + 1);" in out and "init q(4);" in out


class TestErrors:
    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "check", "nope.pcm")
        assert code == 1 and err == "decisive: cannot read nope.pcm: No such file or directory\n"

    def test_parse_error(self, capsys, tmp_path):
        bad = tmp_path / "bad.pcm"
        bad.write_text("pcm { states q; counters c; t: q --[pre=(1,")
        code, _, err = run(capsys, "check", bad)
        assert code == 2 and err == "decisive: parse error at 1:44: expected a natural number\n"

    def test_bad_theta(self, capsys):
        code, _, err = run(capsys, "crp", MODELS / "walk_down.pcm", "--theta", "0")
        assert code == 1 and err == "decisive: theta must be positive\n"

    def test_domain(self, capsys):
        code, _, err = run(capsys, "rq", MODELS / "choice.ppn")
        assert code == 3 and err == "decisive: r_q tables are defined for safe one-counter machines only\n"

    def test_raw_program(self, capsys):
        code, _, err = run(capsys, "generate", "static-pcm", MODELS / "countdown.prog")
        assert code == 3 and err == "decisive: the construction needs a normalized program\n"

    def test_usage(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["bogus"])
        assert exc.value.code == 1
        assert "invalid choice: 'bogus'" in capsys.readouterr().err


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "decisive.cli", "check", str(MODELS / "symmetric.pcm")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("symmetric: 1 states")
