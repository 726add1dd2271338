import json
import math
import os

import jsonschema
import numpy as np
import pytest

from frontlab import schemas
from frontlab.cli import main
from frontlab.errors import ScenarioError
from frontlab.scenario import load_scenario

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "..", "scenarios")


def write_scenario(tmp_path, body, name="scn.toml"):
    path = tmp_path / name
    path.write_text(body)
    return str(path)


SMALL_NAGUMO = """
name = "small_nagumo"
potential = '{"builtin": "nagumo", "params": {"a": 0.25}}'
alpha = 1.0
domain = [-60.0, 60.0]
dx = 0.05
dt = 0.01
t_final = 60.0
seed = 3

[initial_condition]
plateaus = [[1.0], [0.0]]
interfaces = [0.0]
width = 1.0

[snapshots]
count = 21

[diagnostics]
track_minimum = [0.0]
x_hom_offset = 6.0
hook_interval = 20
eps = [0.05]
"""


class TestScenarioFile:
    def test_bundled_scenarios_parse(self):
        for name in os.listdir(SCENARIO_DIR):
            sc = load_scenario(os.path.join(SCENARIO_DIR, name))
            assert sc.t_final > 0
            assert sc.potential.n == 1
            sc.validate(lam_max=10.0)

    def test_values(self, tmp_path):
        sc = load_scenario(write_scenario(tmp_path, SMALL_NAGUMO))
        assert sc.alpha == 1.0
        assert sc.domain == (-60.0, 60.0)
        assert sc.ic.plateaus == [[1.0], [0.0]]
        assert len(sc.snapshot_times) == 21
        assert sc.seed == 3

    def test_auto_dt(self, tmp_path):
        body = SMALL_NAGUMO.replace("dt = 0.01", 'dt = "auto"')
        sc = load_scenario(write_scenario(tmp_path, body))
        dt = sc.resolve_dt(lam_max=0.75)
        assert dt == pytest.approx(0.9 * min(0.9 * 0.05, 0.2 / 0.75))
        # parabolic branch
        body0 = body.replace("alpha = 1.0", "alpha = 0.0")
        sc0 = load_scenario(write_scenario(tmp_path, body0, "p.toml"))
        assert sc0.resolve_dt() == pytest.approx(0.9 * 0.45 * 0.05 ** 2)

    def test_cfl_violation_rejected(self, tmp_path):
        body = SMALL_NAGUMO.replace("dt = 0.01", "dt = 0.2")
        sc = load_scenario(write_scenario(tmp_path, body))
        with pytest.raises(ScenarioError):
            sc.validate()

    def test_domain_too_small_rejected(self, tmp_path):
        body = SMALL_NAGUMO.replace("interfaces = [0.0]", "interfaces = [55.0]")
        sc = load_scenario(write_scenario(tmp_path, body))
        with pytest.raises(ScenarioError):
            sc.validate()

    def test_snapshot_beyond_t_final_rejected(self, tmp_path):
        body = SMALL_NAGUMO.replace("count = 21", "times = [100.0]")
        sc = load_scenario(write_scenario(tmp_path, body))
        with pytest.raises(ScenarioError):
            sc.validate()

    def test_bad_toml_and_bad_potential(self, tmp_path):
        with pytest.raises(ScenarioError):
            load_scenario(write_scenario(tmp_path, "this is { not toml"))
        with pytest.raises(ScenarioError):
            load_scenario(write_scenario(
                tmp_path, SMALL_NAGUMO.replace(
                    """potential = '{"builtin": "nagumo", "params": {"a": 0.25}}'""",
                    "potential = 'not json'"), "bad.toml"))

    def test_noise_injection_deterministic(self, tmp_path):
        body = SMALL_NAGUMO + "\nnoise_amplitude = 0.01\n"
        sc1 = load_scenario(write_scenario(tmp_path, body, "a.toml"))
        sc2 = load_scenario(write_scenario(tmp_path, body, "b.toml"))
        assert np.array_equal(sc1.build_state().u, sc2.build_state().u)


@pytest.fixture(scope="module")
def cli_pipeline(tmp_path_factory):
    """analyze -> solve-front -> simulate once; shared by the CLI tests."""
    base = tmp_path_factory.mktemp("cli")
    scn = base / "scn.toml"
    scn.write_text(SMALL_NAGUMO)
    out = base / "out"
    fronts = out / "fronts"
    assert main(["analyze-potential", "--scenario", str(scn),
                 "--out", str(out)]) == 0
    assert main(["solve-front", "--scenario", str(scn),
                 "--out", str(fronts)]) == 0
    assert main(["simulate", "--scenario", str(scn), "--out", str(out)]) == 0
    return scn, out, fronts


class TestCli:
    def test_analysis_output(self, cli_pipeline):
        _, out, _ = cli_pipeline
        doc = json.loads((out / "analysis.json").read_text())
        jsonschema.validate(doc, schemas.ANALYSIS)
        assert doc["delta_v"] == pytest.approx(1 / 24)

    def test_front_archive(self, cli_pipeline):
        _, _, fronts = cli_pipeline
        index = json.loads((fronts / "fronts.json").read_text())
        jsonschema.validate(index, schemas.FRONT_INDEX)
        assert len(index) == 1
        assert index[0]["c"] == pytest.approx(0.25 * math.sqrt(2), abs=1e-6)
        assert index[0]["s"] == pytest.approx(1 / 3, abs=1e-6)

    def test_simulate_outputs(self, cli_pipeline):
        _, out, _ = cli_pipeline
        assert (out / "snapshots.ndjson").exists()
        series = (out / "series.csv").read_text().splitlines()
        header = series[0].split(",")
        assert header[0] == "t"
        for col in ("E", "D", "x_Esc", "x_esc"):
            assert col in header
        diag = (out / "diagnostics.csv").read_text().splitlines()
        assert diag[0] == "t,E,D,F0_at_xesc,Q0_at_xesc,x_Esc,x_esc,s_fit,delta_dissip"
        run_meta = json.loads((out / "run.json").read_text())
        jsonschema.validate(run_meta, schemas.RUN)
        assert run_meta["aborted"] == ""

    def test_fit_terrace_outputs(self, cli_pipeline):
        scn, out, fronts = cli_pipeline
        rc = main(["fit-terrace", "--scenario", str(scn), "--out", str(out),
                   "--library", str(fronts)])
        assert rc == 0
        fit = json.loads((out / "terrace_right.json").read_text())
        jsonschema.validate(fit, schemas.TERRACE_FIT)
        assert fit["terrace"]["q"] == 1
        assert fit["passed"] is True
        assert fit["measured_speeds"][0] == pytest.approx(1 / 3, rel=0.01)
        center = json.loads((out / "center.json").read_text())
        jsonschema.validate(center, schemas.CENTER)
        assert center["h"] == pytest.approx(-1 / 24)

    def test_determinism_bit_identical(self, cli_pipeline, tmp_path):
        scn, out, _ = cli_pipeline
        out2 = tmp_path / "again"
        assert main(["simulate", "--scenario", str(scn),
                     "--out", str(out2)]) == 0
        for name in ("snapshots.ndjson", "series.csv", "diagnostics.csv"):
            assert (out / name).read_bytes() == (out2 / name).read_bytes()

    def test_invalid_scenario_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("not toml at all {{{")
        rc = main(["simulate", "--scenario", str(bad), "--out",
                   str(tmp_path / "o")])
        assert rc == 2
        err = capsys.readouterr().err
        report = json.loads(err.strip().splitlines()[-1])
        assert report["module"] == "scenario"

    def test_missing_scenario_exit_2(self, tmp_path):
        rc = main(["simulate", "--scenario", str(tmp_path / "nope.toml"),
                   "--out", str(tmp_path / "o")])
        assert rc == 2

    def test_frame_reports(self, tmp_path):
        body = SMALL_NAGUMO + """
[[diagnostics.frames]]
c = 0.3535533906
z_init = 15.0
"""
        scn = write_scenario(tmp_path, body, "frames.toml")
        out = tmp_path / "out"
        assert main(["simulate", "--scenario", scn, "--out", str(out)]) == 0
        frames = json.loads((out / "frames.json").read_text())
        jsonschema.validate(frames, schemas.FRAMES)
        assert len(frames) == 1
        key = next(iter(frames))
        assert key.startswith("c=0.3535533906")


class TestTZero:
    def test_simulate_t_final_zero(self, tmp_path):
        body = SMALL_NAGUMO.replace("t_final = 60.0", "t_final = 0.0") \
                           .replace("count = 21", "times = [0.0]")
        scn = write_scenario(tmp_path, body, "t0.toml")
        out = tmp_path / "out"
        assert main(["simulate", "--scenario", scn, "--out", str(out)]) == 0
        from frontlab.pdesim import read_snapshots_ndjson
        snaps = read_snapshots_ndjson(out / "snapshots.ndjson")
        assert len(snaps) == 1 and snaps[0].t == 0.0


class TestSnapshotTriples:
    def test_triples_schedule(self, tmp_path):
        body = SMALL_NAGUMO.replace("count = 21",
                                    "times = [10.0, 20.0]\ntriples = true")
        scn = write_scenario(tmp_path, body, "triples.toml")
        out = tmp_path / "out"
        assert main(["simulate", "--scenario", scn, "--out", str(out)]) == 0
        from frontlab.pdesim import read_snapshots_ndjson
        snaps = read_snapshots_ndjson(out / "snapshots.ndjson")
        times = [round(s.t, 6) for s in snaps]
        assert times == [9.99, 10.0, 10.01, 19.99, 20.0, 20.01]
