import csv
import dataclasses

import numpy as np
import pytest

from daclab import harness as hz
from daclab import rate_alloc as ra
from daclab.corr_models import CorrelationModel, TrialSeed, apply_bsc, gen_source
from daclab.dac_codec import decode, encode
from daclab.harness import ConfigError, ExperimentConfig


def fixed(**kw):
    base = dict(p0=0.5, h_cond=0.25, rate=0.5, blocks=40, m=256)
    return ExperimentConfig(**(base | kw))


class TestConfig:
    @pytest.mark.parametrize("kw", [
        dict(crossover=0.1, h_cond=0.2, rate=0.5),
        dict(rate=0.5),
        dict(h_cond=0.2),
        dict(h_cond=0.2, rate=0.5, variable=True),
        dict(h_cond=0.2, rate=0.5, bits=10, blocks=10),
        dict(h_cond=0.2, rate=0.5, blocks=0),
        dict(h_cond=0.2, rate=0.5, rule="bogus"),
        dict(h_cond=0.2, rate=0.5, t=300),
    ])
    def test_rejects(self, kw):
        with pytest.raises(ConfigError):
            ExperimentConfig(**kw)

    def test_crossover_resolution(self):
        assert ra.cond_entropy_bsc(0.5, fixed().p) == pytest.approx(0.25, abs=1e-9)
        c = ExperimentConfig(p0=0.9, h_joint=1.0, variable=True)
        assert ra.joint_entropy_bsc(0.9, c.p) == pytest.approx(1.0, abs=1e-9)

    def test_budgets(self):
        assert ExperimentConfig(h_cond=0.2, rate=0.5).n_blocks == 5000
        assert ExperimentConfig(h_cond=0.2, rate=0.5, bits=1001).n_blocks == 6
        assert ExperimentConfig(h_cond=0.2, variable=True).n_blocks == 300


def test_budget_accounting():
    s = hz.run_fixed_rate(fixed(bits=3000, blocks=None))
    assert s.blocks == 15 and s.bits == s.blocks * 200


def test_lossless_when_rate_is_entropy():
    s = hz.run_fixed_rate(fixed(rate=1.0, m=1, blocks=30))
    assert s.ber == 0 and s.fer == 0
    assert s.achieved_rate_mean == pytest.approx(1.0, abs=0.02)


def test_symmetric_classical_pair():
    cfg = ExperimentConfig(kind="symmetric", p0=0.5, crossover=0.1, split=(1.0, 1.0),
                           blocks=10, m=1)
    s = hz.run_symmetric(cfg)
    assert s.fer == 0 and s.bits == 2 * 200 * 10 and s.role_violations == 0


def test_determinism_and_parallel_invariance(tmp_path):
    a = hz.run_fixed_rate(fixed(h_cond=0.35))
    b = hz.run_fixed_rate(fixed(h_cond=0.35))
    c = hz.run_fixed_rate(fixed(h_cond=0.35, workers=2))
    for s in (b, c):
        for name in ("bits", "bit_errors", "blocks", "block_errors", "rate_mean",
                     "first_error_mean", "first_error_std", "achieved_rate_mean"):
            assert repr(getattr(s, name)) == repr(getattr(a, name)), name
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for s, p in zip((a, b), paths):
        s.elapsed = 0.0
        hz.emit_csv([s], p)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_errors_cluster_without_termination():
    s = hz.run_fixed_rate(fixed(t=0, min_error_blocks=25, blocks=None, max_blocks=2000))
    assert s.block_errors >= 25
    assert s.first_error_mean > 100


def test_until_errors_respects_cap():
    s = hz.run_fixed_rate(fixed(h_cond=0.05, min_error_blocks=50, blocks=None, max_blocks=250))
    assert s.blocks == 250


def test_variable_rate_minimality():
    cfg = ExperimentConfig(p0=0.5, h_cond=0.5, variable=True, blocks=10, m=512)
    corr = CorrelationModel(0.5, cfg.p)
    start = ra.cond_entropy_bsc(0.5, cfg.p)
    for trial in range(10):
        s = hz._variable_range(cfg, [trial])
        r = s.rate_mean
        seed = TrialSeed(cfg.seed, trial)
        x = gen_source(cfg.n, 0.5, seed)
        y = apply_bsc(x, cfg.p, seed)

        def ok(rate):
            cw = encode(x, hz._asym_schedule(cfg, rate))
            return np.array_equal(decode(cw, y, corr, cfg.m), x)

        assert ok(r)
        if r - 0.01 >= start - 1e-12:
            assert not ok(round(r - 0.01, 10))


def test_variable_rate_ceiling_counted():
    cfg = ExperimentConfig(p0=0.5, h_cond=0.9, variable=True, blocks=3, m=1, rate_step=0.05)
    s = hz.run_variable_rate(cfg)
    assert s.blocks == 3 and s.rate_mean <= 1.0 + 1e-12


def test_termination_sweep_shapes():
    out = hz.run_termination_sweep(fixed(blocks=4), (0, 5, 10))
    assert [t for t, _ in out] == [0, 5, 10]
    with pytest.raises(ra.Infeasible):
        hz.run_termination_sweep(fixed(), (200,))


def test_m_sweep_monotone_time():
    out = hz.run_m_sweep(fixed(blocks=20, h_cond=0.3), (1, 64))
    assert [m for m, _ in out] == [1, 64]
    assert out[1][1].elapsed > out[0][1].elapsed


def test_stats_merge_and_summary():
    a = hz.run_fixed_rate(fixed(blocks=5))
    b = dataclasses.replace(a)
    b.merge(a)
    assert b.blocks == 10 and b.bits == 2 * a.bits
    assert "BER=" in a.summary()


class TestCsv:
    def test_empty_is_header_only(self, tmp_path):
        p = tmp_path / "e.csv"
        hz.emit_csv([], p)
        assert p.read_text().splitlines() == [",".join(hz.CSV_COLUMNS)]

    def test_row_format(self, tmp_path):
        p = tmp_path / "r.csv"
        hz.emit_csv([hz.run_fixed_rate(fixed(blocks=3))], p)
        rows = list(csv.DictReader(p.open()))
        assert len(rows) == 1 and list(rows[0]) == hz.CSV_COLUMNS
        assert rows[0]["crossover"] == f"{fixed().p:.6g}"
        assert rows[0]["bits"] == "600" and rows[0]["blocks"] == "3"

    def test_io_error_mentions_path(self, tmp_path):
        bad = tmp_path / "missing" / "x.csv"
        with pytest.raises(OSError, match="missing"):
            hz.emit_csv([], bad)


class TestPresets:
    @pytest.mark.parametrize("name,rows", [("table1", 3), ("table3", 5), ("fig3", 5),
                                           ("fig4", 8), ("fig5", 10), ("fig6", 8),
                                           ("fig7", 7), ("fig8", 10)])
    def test_row_counts(self, name, rows):
        assert len(hz.preset(name, trials=1, m=16)) == rows

    def test_variable_presets(self):
        assert len(hz.preset("table2", trials=1, m=16)) == 2
        assert len(hz.preset("fig9", trials=1, m=16)) == 2

    def test_balanced_sweep_abscissa(self):
        joint = [round(ra.joint_entropy_bsc(0.5, s.config.p), 6)
                 for s in hz.preset("fig4", trials=1, m=4)]
        assert joint == [1.15, 1.2, 1.25, 1.3, 1.35, 1.4, 1.45, 1.5]

    def test_unknown(self):
        with pytest.raises(KeyError):
            hz.preset("fig99")
