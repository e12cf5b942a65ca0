import math

import numpy as np
import pytest

from discrete_cs import harness
from discrete_cs.harness import ExperimentConfig, SerCurve, SerPoint


def tiny(**kw):
    base = dict(L=24, K=12, s=3, noise_levels_db=[14.0, 20.0], trials=6, algorithms=["ims", "iht"], master_seed=5)
    base.update(kw)
    return ExperimentConfig(**base)


class TestSer:
    def test_identical(self, rng):
        x = rng.choice((-1.0, 0.0, 1.0), 258)
        assert harness.ser(x, x) == (0, 258)

    def test_negated(self):
        x = np.zeros(258)
        x[:20] = 1.0
        assert harness.ser(-x, x) == (20, 258)

    def test_single_error(self):
        x = np.zeros(258)
        y = x.copy()
        y[7] = 1.0
        errors, total = harness.ser(y, x)
        assert errors / total == pytest.approx(1 / 258)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            harness.ser(np.zeros(3), np.zeros(4))

    def test_ci_contains_estimate(self):
        p = SerPoint("ims", 15.0, 10, 3, 1000)
        low, high = p.ci
        assert low < p.ser < high
        assert SerPoint("ims", 15.0, 10, 0, 1000).ci[0] == 0.0


def test_omp_iteration_table():
    assert harness.omp_iterations(15) == 23
    assert harness.omp_iterations(21) == 33
    assert harness.omp_iterations(18) == 28
    assert harness.omp_iterations(5) == 23
    assert harness.omp_iterations(30) == 33
    assert all(23 <= harness.omp_iterations(db) <= 33 for db in range(15, 22))


def test_ist_grid():
    assert len(harness.IST_GRID) == 40
    assert harness.IST_GRID[0] == pytest.approx(0.05)
    assert harness.IST_GRID[-1] == pytest.approx(2.0)


class TestConfig:
    def test_roundtrip(self):
        cfg = tiny(recovery={"ims": {"max_iters": 30}}, ist_tau={14.0: 0.1 / 3})
        again = harness.parse_config(harness.format_config(cfg))
        assert again == cfg

    def test_parse(self):
        text = "\n".join([
            harness.CONFIG_HEADER,
            "L = 40  # comment",
            "K = 20",
            "s = 4",
            "noise_levels_db = 15, 16.5",
            "algorithms = ims, tsr",
            "tsr.tsr_variance = printed",
            "ims.final_quantizer = sparsity_matched",
            "ist_tau.15 = 0.2",
        ])
        cfg = harness.parse_config(text)
        assert (cfg.L, cfg.K, cfg.s) == (40, 20, 4)
        assert cfg.noise_levels_db == [15.0, 16.5]
        assert cfg.recovery_config("tsr").tsr_variance == "printed"
        assert cfg.recovery_config("ims").final_quantizer == "sparsity_matched"
        assert cfg.ist_tau == {15.0: 0.2}

    def test_genie_inherits_ims_options(self):
        cfg = tiny(recovery={"ims": {"max_iters": 7}})
        assert cfg.recovery_config("ims_genie_both").max_iters == 7

    @pytest.mark.parametrize("text", [
        "L = 10",
        harness.CONFIG_HEADER + "\nnonsense",
        harness.CONFIG_HEADER + "\nbogus = 1",
        harness.CONFIG_HEADER + "\nalgorithms = ims, lasso",
        harness.CONFIG_HEADER + "\ntrials = 0",
        harness.CONFIG_HEADER + "\nnoise_levels_db = 15, nan",
    ])
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            harness.parse_config(text)

    def test_default_output_dir(self, monkeypatch, tmp_path):
        monkeypatch.setenv(harness.OUTPUT_ENV, str(tmp_path))
        assert harness.default_output_dir() == tmp_path
        monkeypatch.delenv(harness.OUTPUT_ENV)
        assert harness.default_output_dir().name == "results"


class TestRunCurve:
    def test_counters(self):
        cfg = tiny()
        curve = harness.run_curve(cfg)
        assert len(curve.points) == 4
        for p in curve.points:
            assert p.trials + p.failures == cfg.trials
            assert p.total == p.trials * cfg.L

    def test_reproducible_csv(self, tmp_path):
        a = harness.emit_csv(harness.run_curve(tiny()), tmp_path / "a.csv")
        b = harness.emit_csv(harness.run_curve(tiny()), tmp_path / "b.csv")
        assert a.read_bytes() == b.read_bytes()

    def test_seed_matters(self):
        a = harness.run_curve(tiny(noise_levels_db=[8.0], trials=10))
        b = harness.run_curve(tiny(noise_levels_db=[8.0], trials=10, master_seed=6))
        assert [p.errors for p in a.points] != [p.errors for p in b.points]

    def test_parallel_matches_serial(self):
        serial = harness.run_curve(tiny(trials=5))
        parallel = harness.run_curve(tiny(trials=5, workers=2))
        assert serial.points == parallel.points

    def test_trial_replay(self):
        cfg = tiny(noise_levels_db=[10.0], trials=4)
        total = sum(p.errors for t in range(4) for p in harness.run_trial(cfg, t) if p.algorithm == "ims")
        assert total == harness.run_curve(cfg).get("ims", 10.0).errors

    def test_fixed_ensemble(self):
        cfg = tiny(ensemble_mode="fixed")
        ens = harness.fixed_ensemble(cfg)
        e0, _, _ = harness.draw_trial(cfg, 0, ens)
        e1, _, _ = harness.draw_trial(cfg, 1, ens)
        assert e0 is e1
        assert harness.fixed_ensemble(tiny()) is None
        assert harness.run_curve(cfg).points

    def test_common_noise_across_levels(self):
        cfg = tiny()
        _, x, noise = harness.draw_trial(cfg, 3)
        _, x2, noise2 = harness.draw_trial(cfg, 3)
        np.testing.assert_array_equal(noise, noise2)
        np.testing.assert_array_equal(x, x2)

    def test_single_trial_high_snr(self):
        cfg = tiny(noise_levels_db=[60.0], trials=1, L=16, K=16, algorithms=["ims", "tsr", "iht", "omp"])
        for p in harness.run_curve(cfg).points:
            assert p.ser == 0.0

    def test_dct_ensemble(self):
        curve = harness.run_curve(tiny(ensemble_kind="dct", trials=2))
        assert all(p.trials == 2 for p in curve.points)

    def test_ist_tuned_when_missing(self):
        cfg = tiny(algorithms=["ist"], trials=2, tuning_trials=3)
        curve = harness.run_curve(cfg)
        assert set(curve.ist_tau) == {14.0, 20.0}

    def test_failures_are_counted(self, monkeypatch):
        def boom(*args, **kwargs):
            raise FloatingPointError("forced")

        monkeypatch.setattr(harness.alg, "iht_q", boom)
        curve = harness.run_curve(tiny(trials=3))
        assert curve.get("iht", 14.0).failures == 3
        assert curve.get("iht", 14.0).total == 0
        assert curve.get("ims", 14.0).trials == 3


class TestTuning:
    def test_single_candidate(self):
        cfg = tiny(tuning_trials=3)
        table = harness.tune_ist_tau(cfg, grid=(0.7,))
        for db, tau in table.items():
            assert tau == pytest.approx(0.7 * math.sqrt(harness.noise_level_db_to_variance(db)))

    def test_deterministic(self):
        cfg = tiny(tuning_trials=4)
        grid = (0.2, 0.6, 1.0)
        assert harness.tune_ist_tau(cfg, grid) == harness.tune_ist_tau(cfg, grid)


class TestOutput:
    def test_empty_csv_is_header(self, tmp_path):
        path = harness.emit_csv(SerCurve(), tmp_path / "empty.csv")
        assert path.read_text() == ",".join(harness.CSV_COLUMNS) + "\n"

    def test_csv_roundtrip(self, tmp_path):
        curve = SerCurve([SerPoint("ims", 15.0, 10, 3, 2580, 1, 0), SerPoint("omp", 16.0, 9, 0, 2322, 0, 1)])
        back = harness.read_csv(harness.emit_csv(curve, tmp_path / "c.csv"))
        assert back.points == curve.points

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(OSError):
            harness.emit_csv(SerCurve(), blocker / "x.csv")

    def test_svg(self, tmp_path):
        curve = SerCurve([SerPoint("ims", 15.0, 10, 0, 2580), SerPoint("ims", 16.0, 10, 5, 2580)])
        path = harness.emit_svg(curve, tmp_path / "c.svg", title="demo")
        text = path.read_text()
        assert text.lstrip().startswith("<?xml") and "</svg>" in text

    def test_manifest(self, tmp_path):
        import json

        cfg = tiny()
        path = harness.write_manifest(cfg, SerCurve(ist_tau={14.0: 0.1}), tmp_path / "m.json")
        data = json.loads(path.read_text())
        assert data["config"]["L"] == 24
        assert data["omp_iters"] == {"14": 23, "20": 31}


class TestCrossing:
    def series(self, values, start=15.0):
        return [SerPoint("a", start + i, 1, e, 1000) for i, e in enumerate(values)]

    def test_interpolates_in_log(self):
        assert harness.crossing_db(self.series([100, 1]), 1e-2) == pytest.approx(16.0 - 0.5)

    def test_on_grid(self):
        assert harness.crossing_db(self.series([100, 10, 1]), 1e-2) == pytest.approx(16.0)

    def test_never(self):
        assert harness.crossing_db(self.series([100, 90]), 1e-3) == math.inf

    def test_starts_below(self):
        assert harness.crossing_db(self.series([0, 0]), 1e-3) == 15.0

    def test_zero_uses_floor(self):
        assert harness.crossing_db(self.series([10, 0]), 1e-3, floor=1e-4) == pytest.approx(15.5)


def test_ser_non_increasing_within_ci():
    cfg = ExperimentConfig(L=60, K=30, s=6, noise_levels_db=[6.0, 9.0, 12.0, 15.0], trials=40,
                           algorithms=["ims", "iht", "omp"], master_seed=9)
    curve = harness.run_curve(cfg)
    for name in cfg.algorithms:
        series = curve.series(name)
        for lo, hi in zip(series, series[1:]):
            assert hi.ser <= lo.ser or hi.ci[0] <= lo.ci[1]


def test_tuned_threshold_shrinks_with_noise():
    cfg = tiny(L=60, K=30, s=6, noise_levels_db=[8.0, 14.0, 20.0], tuning_trials=20)
    table = harness.tune_ist_tau(cfg, grid=harness.IST_GRID[::4])
    taus = [table[db] for db in cfg.noise_levels_db]
    assert taus[0] >= taus[1] >= taus[2]
