import csv
import io
import json

import numpy as np
import pytest

from tasep_hydro import cli
from tasep_hydro.experiments import (
    SCENARIOS,
    BufferAuditError,
    ExperimentSpec,
    ObservationWindowError,
    ResultReport,
    SpecError,
    buffer_audit,
    default_spec,
    emit_report,
    report_csv,
    run,
    run_batch,
)


def small(scenario, **kw):
    base = dict(replicas=3, horizon=20.0)
    base.update(kw)
    return default_spec(scenario).replace(**base)


class TestSpec:
    def test_window_and_buffer(self):
        s = ExperimentSpec("tagged-lln", rho=0.5, horizon=10.5, obs_halfwidth=30)
        assert s.buffer == 32
        assert s.window == (-62, 62)
        assert s.observation == (-30, 30)

    @pytest.mark.parametrize("kw", [
        dict(scenario="nope"),
        dict(scenario="tagged-lln", rho=1.5),
        dict(scenario="tagged-lln", rho=0.5, replicas=0),
        dict(scenario="tagged-lln", rho=0.5, horizon=0.0),
        dict(scenario="tagged-lln"),
        dict(scenario="second-class-tagged", lam=0.6, rho=0.4),
        dict(scenario="shock", lam=0.8, rho=0.2, shifts=(0.5,), sets=((0,),)),
        dict(scenario="shock", lam=0.2, rho=0.8, shifts=(0.05,), sets=((0,),)),
        dict(scenario="rost-fan", lam=0.0, rho=1.0, shifts=(0.0,), sets=((0,),)),
        dict(scenario="second-class-isolated", alpha=1.0),
        dict(scenario="flux-lln", rho=0.5),
        dict(scenario="flux-lln", rho=0.5, speeds=(5.0,), horizon=100.0, obs_halfwidth=50),
        dict(scenario="buffer-audit"),
        dict(scenario="pathwise-identities", lam=0.2, rho=0.6),
    ])
    def test_invalid(self, kw):
        with pytest.raises(SpecError):
            ExperimentSpec(**kw).validate()

    @pytest.mark.parametrize("scenario", SCENARIOS)
    def test_defaults_valid(self, scenario):
        default_spec(scenario).validate()

    @pytest.mark.parametrize("scenario", SCENARIOS)
    def test_text_round_trip(self, scenario):
        s = default_spec(scenario).replace(seed=17, max_stderr=0.01)
        assert ExperimentSpec.from_text(s.to_text()) == s

    def test_text_overrides_and_comments(self):
        text = "scenario = flux-lln  # stationary\nrho = 0.3\nspeeds = -0.5, 0.5\n\n"
        s = ExperimentSpec.from_text(text, replicas=7)
        assert s.rho == 0.3 and s.speeds == (-0.5, 0.5) and s.replicas == 7

    @pytest.mark.parametrize("text", ["rho = 0.3\n", "scenario = flux-lln\nwhat = 1\n",
                                      "scenario = flux-lln\nrho 0.3\n", "scenario = flux-lln\nrho = x\n"])
    def test_bad_text(self, text):
        with pytest.raises(SpecError):
            ExperimentSpec.from_text(text)


class TestRun:
    def test_statistics_name_targets(self):
        rep = run(small("flux-lln"))
        for o in rep.observables:
            st = rep.stats[o.name]
            assert st.target == o.target and st.n == 3
        assert rep.metadata["timing"]["effective_arrows"] > 0

    def test_batch_matches_single_runs(self):
        specs = [small("tagged-lln", rho=0.3), small("flux-lln", replicas=2),
                 small("second-class-tagged"), small("second-class-isolated", replicas=4)]
        specs = [s.replace(obs_halfwidth=150) for s in specs]
        together = run_batch(specs)
        for s, rep in zip(specs, together):
            alone = run(s)
            assert alone.to_dict(timing=False) == rep.to_dict(timing=False)

    def test_replicas_differ(self):
        rep = run(small("tagged-lln"))
        assert len(set(rep.digests)) == 3

    def test_seed_changes_results(self):
        a = run(small("tagged-lln"))
        b = run(small("tagged-lln", seed=2))
        assert a.digests != b.digests

    def test_rost_at_time_zero_counts_initial_step(self):
        rep = run(default_spec("rost-fan").replace(horizon=0.0, replicas=2))
        for o in rep.observables:
            if o.name.startswith("density"):
                a, b = (float(v) for v in o.name[8:-1].split(","))
                want = sum(1 for x in range(-400, 401) if a <= x <= b and x <= 0)
                assert rep.values[o.name] == [want, want]
        assert rep.passed

    def test_pathwise_small(self):
        rep = run(default_spec("pathwise-identities").replace(replicas=5, horizon=10.0, obs_halfwidth=60))
        assert rep.passed
        assert all(lam >= alpha >= rho for lam, alpha, rho in rep.metadata["densities"])

    def test_pathwise_fixed_densities(self):
        rep = run(default_spec("pathwise-identities").replace(lam=0.9, rho=0.1, replicas=3,
                                                               horizon=10.0, obs_halfwidth=60))
        assert rep.passed
        assert all(d[0] == 0.9 and d[2] == 0.1 for d in rep.metadata["densities"])

    def test_expected_position_outside_observation_window(self):
        with pytest.raises(SpecError):
            small("tagged-lln", rho=0.0, obs_halfwidth=5).validate()
        with pytest.raises(SpecError):
            small("second-class-isolated", alpha=0.1, obs_halfwidth=10).validate()

    def test_tracker_leaving_observation_window(self):
        # expected position 10 fits, fluctuations carry the particle out
        spec = small("tagged-lln", rho=0.5, horizon=20.0, obs_halfwidth=10, replicas=20)
        with pytest.raises(ObservationWindowError):
            run(spec)


class TestBufferAudit:
    def test_default_target(self):
        rep = buffer_audit(default_spec("buffer-audit").replace(replicas=2))
        assert rep.passed and rep.values["mismatches"] == [0, 0]

    def test_tiny_buffer_detected(self):
        spec = ExperimentSpec("buffer-audit", target="tagged-lln", buffer_mult=0.02, replicas=3)
        with pytest.raises(BufferAuditError):
            buffer_audit(spec)


class TestReports:
    def test_csv_rows(self):
        rep = run(small("flux-lln", speeds=(0.0, 0.5)))
        rows = list(csv.reader(io.StringIO(report_csv(rep))))
        assert rows[0] == ["scenario", "replica", "observable", "value", "target", "stderr", "pass"]
        assert len(rows) == 1 + 6

    def test_empty_csv(self):
        rep = ResultReport(small("tagged-lln"), [], {}, [], {}, {}, {})
        assert report_csv(rep) == "scenario,replica,observable,value,target,stderr,pass\n"

    def test_json_deterministic(self):
        s = small("second-class-isolated")
        a = json.dumps(run(s).to_dict(timing=False), sort_keys=True)
        b = json.dumps(run(s).to_dict(timing=False), sort_keys=True)
        assert a == b

    def test_emit_to_file(self, tmp_path):
        rep = run(small("tagged-lln"))
        path = tmp_path / "r.json"
        text = emit_report(rep, str(path))
        assert path.read_text() == text
        d = json.loads(text)
        assert d["spec"]["scenario"] == "tagged-lln" and len(d["replicas"]) == 3
        assert "timing" in d["metadata"]

    def test_emit_unwritable(self, tmp_path):
        with pytest.raises(OSError):
            emit_report(run(small("tagged-lln")), str(tmp_path / "missing" / "r.csv"), "csv")

    def test_emit_bad_format(self):
        with pytest.raises(ValueError):
            emit_report(run(small("tagged-lln")), None, "xml")


class TestCli:
    def test_list(self, capsys):
        assert cli.main(["list-scenarios"]) == 0
        assert capsys.readouterr().out.split() == list(SCENARIOS)

    def test_burgers_eval(self, capsys):
        assert cli.main(["burgers", "eval", "--lambda", "1", "--rho", "0", "--r", "0.5", "--t", "1"]) == 0
        assert float(capsys.readouterr().out) == 0.25

    def test_burgers_bad_time(self, capsys):
        assert cli.main(["burgers", "eval", "--lambda", "1", "--rho", "0", "--r", "0", "--t", "-1"]) == 2

    def test_run_csv(self, tmp_path, capsys):
        out = tmp_path / "flux.csv"
        code = cli.main(["run", "flux-lln", "--rho", "0.3", "--horizon", "20", "--replicas", "3",
                         "--speeds", "0,0.5", "--out", str(out), "--format", "csv"])
        assert code in (0, 1)
        assert len(out.read_text().splitlines()) == 7

    def test_run_stdout_json(self, capsys):
        code = cli.main(["run", "second-class-isolated", "--alpha", "0.25", "--horizon", "20", "--replicas", "3"])
        d = json.loads(capsys.readouterr().out)
        assert d["spec"]["alpha"] == 0.25
        assert code == (0 if d["passed"] else 1)

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "s.cfg"
        cfg.write_text(small("tagged-lln").to_text())
        assert cli.main(["run", "tagged-lln", "--config", str(cfg), "--replicas", "2"]) in (0, 1)
        d = json.loads(capsys.readouterr().out)
        assert d["spec"]["replicas"] == 2 and d["spec"]["horizon"] == 20.0

    def test_config_scenario_mismatch(self, tmp_path, capsys):
        cfg = tmp_path / "s.cfg"
        cfg.write_text(small("tagged-lln").to_text())
        assert cli.main(["run", "flux-lln", "--config", str(cfg)]) == 2

    def test_io_errors_exit_code(self, tmp_path, capsys):
        assert cli.main(["run", "tagged-lln", "--config", str(tmp_path / "none.cfg")]) == 2
        assert cli.main(["run", "tagged-lln", "--horizon", "20", "--replicas", "2",
                         "--out", str(tmp_path / "no" / "r.json")]) == 2

    def test_invalid_spec_exit_code(self, capsys):
        assert cli.main(["run", "second-class-tagged", "--lambda", "0.9", "--rho", "0.1"]) == 2

    def test_window_error_exit_code(self, capsys):
        code = cli.main(["run", "tagged-lln", "--rho", "0.5", "--horizon", "20", "--obs-halfwidth", "10",
                         "--replicas", "20"])
        assert code == 2 and "observation window" in capsys.readouterr().err

    def test_audit_failure_exit_code(self, capsys):
        code = cli.main(["run", "buffer-audit", "--target", "tagged-lln", "--buffer-mult", "0.02",
                         "--replicas", "2"])
        assert code == 3
