import json
import os

import numpy as np
import pytest

from symdisc import ConfigError
from symdisc.campaign import (CampaignConfig, CampaignEntry, DiscriminationReport, aggregate,
                              emit_reports, enumerate_sets, load_reports, reference_campaign_config,
                              rmsd, run_campaign, run_set)
from symdisc.optics import NoiseModel
from symdisc.qudit_core import CascadeParams, SymmetricSetSpec, cascade_coeffs, random_coeffs

from conftest import random_spec


def entry(D, N, **param):
    return CampaignEntry(D, N, param)


class TestEnumeration:
    def test_reference_campaign_counts(self):
        tasks = enumerate_sets(reference_campaign_config())
        assert len(tasks) == 1851
        d2 = [t for t in tasks if t.spec.D == 2]
        assert len(d2) == 45 and sum(t.spec.N for t in d2) == 180
        assert sum(t.spec.N for t in tasks if t.spec.D <= 9) == 13320
        per_d = {}
        for t in tasks:
            per_d[t.spec.D] = per_d.get(t.spec.D, 0) + t.spec.N
        assert [per_d[D] for D in range(2, 10)] == [180, 1800, 600, 960, 1300, 2160, 2800, 3520]
        assert all(sum(1 for t in tasks if t.spec.D == D) == 3 for D in range(10, 22))
        assert [t.index for t in tasks] == list(range(1851))

    def test_deterministic(self):
        a = enumerate_sets(reference_campaign_config())
        b = enumerate_sets(reference_campaign_config())
        assert all(x.spec == y.spec and x.label == y.label for x, y in zip(a, b))

    def test_empty_alpha_grid(self):
        cfg = CampaignConfig([entry(5, 5, kind="cascade", alpha=[])])
        with pytest.raises(ConfigError):
            enumerate_sets(cfg)
        with pytest.raises(ConfigError):
            enumerate_sets(CampaignConfig([entry(5, 5, kind="cascade", alpha_points=0)]))

    @pytest.mark.parametrize("param", [
        {"kind": "hyperspherical", "angles": []},
        {"kind": "cascade", "j0": []},
        {"kind": "cascade", "j0": [7]},
        {"kind": "random", "count": 0},
        {"kind": "explicit", "coefficients": []},
        {"kind": "spiral"},
    ])
    def test_malformed(self, param):
        with pytest.raises(ConfigError):
            enumerate_sets(CampaignConfig([CampaignEntry(5, 5, param)]))

    def test_entry_validation(self):
        with pytest.raises(ConfigError):
            CampaignEntry(4, 3, {"kind": "random"})
        with pytest.raises(ConfigError):
            CampaignEntry(2, 3, {"kind": "random"}, mode="analog")
        with pytest.raises(ConfigError):
            CampaignConfig.from_dict({"master_seed": 1})

    def test_config_roundtrip(self):
        cfg = reference_campaign_config(mode="optical-point", noise=NoiseModel.calibrated())
        again = CampaignConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again.to_dict() == cfg.to_dict()


class TestRunSet:
    def test_ideal_zero(self):
        report = run_set(random_spec(1))
        assert report.rmsd == 0 and report.p_corr_expt == pytest.approx(report.p_corr_theory)

    def test_optical_point_exact(self):
        spec = SymmetricSetSpec(3, 5, random_coeffs(3, 42))
        assert run_set(spec, "optical-point").rmsd < 1e-6

    def test_noise_band(self):
        values = []
        for i in range(50):
            spec = random_spec(70_000 + i)
            values.append(run_set(spec, "optical-pixel", noise=NoiseModel.calibrated(),
                                  seed=i).rmsd)
        assert 0.001 <= min(values) and max(values) <= 0.05

    def test_self_consistency(self):
        spec = random_spec(4)
        r = run_set(spec, "optical-pixel", noise=NoiseModel.calibrated(), seed=9)
        assert r.rmsd == pytest.approx(rmsd(r.residuals), abs=1e-12)
        assert r.p_corr_expt == pytest.approx(np.trace(r.experiment) / spec.N, abs=1e-12)
        np.testing.assert_allclose(r.experiment.sum(axis=0), 1, atol=1e-9)
        assert 0 <= r.p_corr_expt <= 1
        back = DiscriminationReport.from_dict(json.loads(json.dumps(r.to_dict())))
        np.testing.assert_array_equal(back.residuals, r.residuals)
        assert back.spec == r.spec

    def test_truth_fidelities(self):
        r = run_set(random_spec(5), "optical-point", noise=NoiseModel(prep_phase_sigma=0.1),
                    seed=2, tomography="truth")
        assert len(r.fidelities) == r.spec.N
        assert 0.8 < r.mean_fidelity < 1


class TestAggregate:
    def test_single_ideal_first_bin(self):
        s = aggregate([run_set(random_spec(2))])
        assert s["histogram"]["counts"][0] == 1 and sum(s["histogram"]["counts"]) == 1

    def test_empty(self, tmp_path):
        s = aggregate([])
        assert s["n_sets"] == 0
        emit_reports(s, [], str(tmp_path))
        assert os.listdir(tmp_path / "sets") == []
        assert json.loads((tmp_path / "summary.json").read_text())["n_sets"] == 0

    def test_surface_corners(self):
        cfg = CampaignConfig([entry(5, 5, kind="cascade", alpha=[0.0, 1.0])])
        s = aggregate(run_campaign(cfg))
        rows = s["series"]["D05_N05_cascade"]
        assert len(rows) == 8
        for j0, alpha, p_th, p_ex in rows:
            if alpha == 0:
                assert p_th == pytest.approx(1, abs=1e-12)
        j0_1 = [r for r in rows if r[0] == 1 and r[1] == 1][0]
        c = cascade_coeffs(5, CascadeParams(1, 1.0))
        assert j0_1[2] == pytest.approx(np.sum(c) ** 2 / 5, abs=1e-12)


class TestEmit:
    def test_theta_sweep_plot(self, tmp_path):
        thetas = np.linspace(0, np.pi, 181)
        cfg = CampaignConfig([entry(2, 2, kind="hyperspherical", angles=thetas.tolist())])
        reports = run_campaign(cfg)
        emit_reports(aggregate(reports), reports, str(tmp_path))
        data = np.loadtxt(tmp_path / "plots" / "pcorr_D02_N02_hyperspherical.dat")
        np.testing.assert_allclose(data[:, 0], thetas)
        np.testing.assert_allclose(data[:, 1], (1 + np.sin(thetas)) / 2, atol=1e-12)
        assert len(os.listdir(tmp_path / "sets")) == 181
        assert (tmp_path / "tables" / "D02_N02_hyperspherical_00000_theory.csv").exists()

    def test_byte_identical_reruns(self, tmp_path):
        cfg = CampaignConfig([entry(3, 5, kind="random", count=4, seed=3),
                              entry(2, 3, kind="hyperspherical", points=3)], master_seed=77)
        cfg.entries[0].mode = "optical-pixel"
        cfg.entries[0].noise = NoiseModel.calibrated()
        outs = []
        for tag, workers in (("a", None), ("b", 2)):
            reports = run_campaign(cfg, workers=workers)
            emit_reports(aggregate(reports), reports, str(tmp_path / tag))
            outs.append(tmp_path / tag)
        files = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file())
        assert len(files) > 10
        for rel in files:
            assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes(), rel

    def test_load_and_recheck(self, tmp_path):
        cfg = CampaignConfig([entry(4, 6, kind="random", count=3, seed=1)], master_seed=5)
        cfg.entries[0].mode = "optical-pixel"
        cfg.entries[0].noise = NoiseModel.calibrated()
        reports = run_campaign(cfg)
        emit_reports(aggregate(reports), reports, str(tmp_path))
        for r in load_reports(str(tmp_path)):
            assert r.rmsd == pytest.approx(rmsd(r.residuals), abs=1e-12)
            assert r.p_corr_expt == pytest.approx(np.trace(r.experiment) / r.spec.N, abs=1e-12)
            np.testing.assert_allclose(r.experiment.sum(axis=0), 1, atol=1e-9)

    def test_load_missing(self, tmp_path):
        with pytest.raises(ConfigError):
            load_reports(str(tmp_path))

    def test_write_failure_has_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError, match="file"):
            emit_reports(aggregate([]), [], str(blocker))


@pytest.mark.slow
def test_optical_point_small_rows_scale():
    import time
    cfg = reference_campaign_config(mode="optical-point")
    cfg.entries = [e for e in cfg.entries if e.D <= 9]
    start = time.perf_counter()
    reports = run_campaign(cfg)
    assert time.perf_counter() - start < 600
    assert max(r.rmsd for r in reports) < 1e-6
