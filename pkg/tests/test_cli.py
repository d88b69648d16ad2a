import json
import math

import pytest

from croftonlab import cli


def strip_wall_time(csv_text: str) -> str:
    lines = csv_text.split("\r\n")
    return "\r\n".join(",".join(line.split(",")[:-1]) for line in lines if line)


class TestParsing:
    def test_unknown_scenario(self):
        with pytest.raises(SystemExit):
            cli.run_scenario("no_such_scenario", {}, 10, 0)

    def test_unknown_parameter(self):
        with pytest.raises(SystemExit):
            cli.run_scenario("crofton_euclid_circle", {"bogus": 1.0}, 10, 0)

    def test_bad_override_format(self):
        with pytest.raises(SystemExit):
            cli.main(["run", "crofton_euclid_circle", "r2.0"])


class TestRun:
    def test_run_csv(self, capsys):
        status = cli.main(["run", "crofton_euclid_circle", "--samples", "2000",
                           "--seed", "1"])
        assert status == 0
        out = capsys.readouterr().out
        lines = out.split("\r\n")
        assert lines[0].startswith("scenario,estimate,stderr,prediction")
        fields = lines[1].split(",")
        assert fields[0] == "crofton_euclid_circle"
        assert float(fields[1]) == pytest.approx(2.0 * math.pi, rel=1e-12)
        # 17 significant digits survive a round-trip
        assert float(fields[1]) == float(format(float(fields[1]), ".17g"))

    def test_run_json(self, capsys):
        status = cli.main(["run", "zeros_fourier", "k=2", "--samples", "1000",
                           "--seed", "3", "--format", "json"])
        assert status == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["config"]["params"] == {"k": "2"}
        run = payload["runs"][0]
        assert run["prediction"] == pytest.approx(4.0 * math.pi, rel=1e-8)
        assert abs(run["estimate"] - run["prediction"]) <= 4.0 * run["stderr"] + 1e-10

    def test_out_file(self, tmp_path, capsys):
        out = tmp_path / "report.csv"
        cli.main(["run", "crofton_euclid_circle", "--samples", "1000",
                  "--out", str(out)])
        raw = out.read_bytes()
        assert b"\r\n" in raw  # RFC 4180 line endings
        capsys.readouterr()

    def test_deterministic_across_threads(self, tmp_path):
        outs = []
        for threads in ("1", "4"):
            p = tmp_path / f"t{threads}.csv"
            cli.main(["run", "crofton_sphere_latitude", "--samples", "4096",
                      "--seed", "9", "--threads", threads, "--out", str(p)])
            outs.append(strip_wall_time(p.read_text()))
        assert outs[0] == outs[1]

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "exp.ini"
        cfg.write_text("[crofton_euclid_circle]\nr = 2.0\nn_samples = 500\nseed = 4\n")
        status = cli.main(["run", "crofton_euclid_circle", "--config", str(cfg),
                           "--format", "json"])
        assert status == 0
        payload = json.loads(capsys.readouterr().out)
        run = payload["runs"][0]
        assert run["n_samples"] == 500
        assert run["seed"] == 4
        assert run["prediction"] == pytest.approx(4.0 * math.pi, rel=1e-10)


class TestSweep:
    def test_sweep_over_samples(self, capsys):
        status = cli.main(["sweep", "zeros_fourier", "--parameter", "n_samples",
                           "--values", "1000,4000", "--seed", "2"])
        assert status == 0
        lines = [ln for ln in capsys.readouterr().out.split("\r\n") if ln]
        assert len(lines) == 3  # header + 2 runs

    def test_sweep_over_parameter(self, capsys):
        status = cli.main(["sweep", "zeros_fourier", "--parameter", "k",
                           "--values", "1,3", "--samples", "1000"])
        assert status == 0
        lines = [ln for ln in capsys.readouterr().out.split("\r\n") if ln]
        preds = [float(ln.split(",")[3]) for ln in lines[1:]]
        assert preds[0] == pytest.approx(2.0 * math.pi, rel=1e-8)
        assert preds[1] == pytest.approx(6.0 * math.pi, rel=1e-8)


class TestListScenarios:
    def test_lists_all(self, capsys):
        assert cli.main(["list-scenarios"]) == 0
        out = capsys.readouterr().out
        for name in cli.SCENARIOS:
            assert name in out
