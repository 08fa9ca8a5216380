import json

import numpy as np
import pytest

from ifsm_bm.generators import FixedStream, GaussianStream, ZeroStream, euler_bm, kac_siegert_bm
from ifsm_bm.maps import wavelet_family, wavelet_level, wavelet_map
from ifsm_bm.operator import IfsmSystem, contractivity_factor, fixed_point
from ifsm_bm.path import SampledPath, l2_distance, to_csv_string
from ifsm_bm.pipeline import (
    BaseSpec,
    FixedPointOptions,
    RunManifest,
    SolverOptions,
    diagnostics,
    fit_ifsm,
    generate,
    ifsm_bm,
    invert,
    replay,
    run_pipeline,
    self_similarity_by_level,
    self_similarity_check,
)


def identity(n):
    return SampledPath.from_function(lambda t: t, n)


def test_zero_base_gives_zero_fixed_point():
    run = run_pipeline(M=3, n=64, stream=ZeroStream())
    assert np.all(run.report.x_star == 0)
    assert np.all(run.path.values == 0)
    assert run.manifest.base == {"method": "supplied"}


def test_identity_base_level_one():
    n = 1024
    v = identity(n)
    path, manifest = ifsm_bm(M=1, n=n, base_path=v)
    # cell-wise collage residual of the exact self-affine system is 1/(4n)
    assert manifest.summary["delta2"] <= 1 / (16 * n**2) + 1e-15
    assert l2_distance(path, v) <= 1 / n


def test_collage_bound_holds_end_to_end():
    for seed in range(3):
        for base in (BaseSpec("euler", 16), BaseSpec("kac-siegert", m_terms=25)):
            run = run_pipeline(seed, M=4, n=256, base=base)
            s = run.manifest.summary
            assert s["l2_distance"] <= np.sqrt(s["delta2"]) / (1 - s["contractivity"]) + 1e-6


def test_delta2_monotone_in_M():
    v = kac_siegert_bm(25, 256, GaussianStream(5))
    d = [fit_ifsm(v, wavelet_family(M))[1].delta2 for M in range(1, 7)]
    assert all(b <= a + 1e-12 for a, b in zip(d, d[1:]))


def test_refined_output_grid():
    run = run_pipeline(1, M=3, n=64, refine=4)
    assert run.path.n == 256 and run.base.n == 64
    assert run.manifest.refine == 4


def test_pipeline_argument_checks():
    with pytest.raises(ValueError):
        run_pipeline(M=8, n=128)
    with pytest.raises(ValueError):
        run_pipeline(M=0, n=128)
    with pytest.raises(ValueError):
        run_pipeline(M=2, n=64, base_path=SampledPath.zeros(32))
    with pytest.raises(ValueError):
        BaseSpec("brownian")


def test_self_similarity_constant_grey():
    sys = IfsmSystem.from_pairs([(wavelet_map(1, 1), (0, 5)), (wavelet_map(1, 2), (0, -3))])
    fp, _ = fixed_point(sys, n=64)
    assert self_similarity_check(sys, fp).residual == 0


def test_self_similarity_identity_system():
    sys = IfsmSystem.from_pairs([(wavelet_map(1, 1), (0.5, 0)), (wavelet_map(1, 2), (0.5, 0.5))])
    tol = 1e-12
    fp, _ = fixed_point(sys, n=256, tol=tol, max_iter=1000)
    rep = self_similarity_check(sys, fp, tol=tol)
    assert rep.ok and rep.residual <= tol


def test_self_similarity_solved_level_three():
    tol = 1e-12
    for seed in range(3):
        v = kac_siegert_bm(25, 512, GaussianStream(seed))
        sys, _, _ = fit_ifsm(v, wavelet_level(3))
        fp, _ = fixed_point(sys, v, tol=tol, max_iter=10_000)
        rep = self_similarity_check(sys, fp, tol=tol)
        assert rep.ok, (rep.residual, rep.bound)


def test_self_similarity_rejects_overlap_and_gaps():
    fp = SampledPath.zeros(16)
    with pytest.raises(ValueError):
        self_similarity_check(IfsmSystem(wavelet_family(2), np.zeros(6), np.zeros(6)), fp)
    with pytest.raises(ValueError):
        self_similarity_check(IfsmSystem([wavelet_map(1, 1)], [0.1], [0]), fp)


def test_per_level_diagnostic():
    run = run_pipeline(2, M=3, n=64)
    levels = self_similarity_by_level(run.system, run.path)
    assert sorted(levels) == [1, 2, 3]
    assert all(r >= 0 for r in levels.values())


def test_diagnostics_examples():
    z = diagnostics(SampledPath.zeros(64))
    assert z.max_increment == 0 and not any(z.quadratic_variation) and not any(z.total_variation)
    n = 1024
    d = diagnostics(identity(n))
    assert d.mesh[0] == 1 / n and d.mesh[-1] == 1.0
    assert d.quadratic_variation[0] == pytest.approx(1 / n, rel=1e-12)
    assert d.total_variation[0] == pytest.approx(1.0, rel=1e-12)


def test_euler_quadratic_variation_at_knot_mesh():
    z = GaussianStream(9).normal(64)
    p = euler_bm(64, 1024, FixedStream(z))
    d = diagnostics(p)
    k = d.mesh.index(1 / 64)
    assert d.quadratic_variation[k] == pytest.approx(np.sum(z**2) / 64, rel=1e-12)


def test_manifest_json_round_trip():
    run = run_pipeline(3, M=2, n=64)
    text = run.manifest.to_json()
    back = RunManifest.from_json(text)
    assert back.to_json() == text
    assert json.loads(text)["format"] == "ifsm-bm-manifest/1"
    with pytest.raises(ValueError):
        RunManifest.from_dict({"format": "other", "kind": "x", "n": 2})


def test_pipeline_replay_is_byte_identical(tmp_path):
    run = run_pipeline(4, M=3, n=128, base=BaseSpec("kac-siegert", m_terms=10))
    out = run.output()
    out.write(tmp_path)
    again = replay(RunManifest.read(tmp_path / "manifest.json"))
    assert again.files == out.files
    assert again.manifest.to_json() == out.manifest.to_json()


def test_supplied_base_cannot_be_replayed():
    run = run_pipeline(M=1, n=8, base_path=SampledPath.zeros(8))
    with pytest.raises(ValueError):
        replay(run.manifest)


def test_generate_and_replay():
    out = generate(5, 64, BaseSpec("euler", 8))
    assert out.files["path.csv"] == to_csv_string(euler_bm(8, 64, GaussianStream(5)))
    assert replay(out.manifest).files == out.files


def test_invert_and_replay(tmp_path):
    src = tmp_path / "in.csv"
    src.write_text(to_csv_string(identity(1024)))
    from ifsm_bm.path import read_csv

    out, sys, rep = invert(read_csv(src), 1, fixed=FixedPointOptions(), source=str(src))
    assert rep.delta2 <= 1e-6
    assert "fixed_point.csv" in out.files
    assert replay(out.manifest).files == out.files
    src.write_text(to_csv_string(SampledPath.zeros(64)))
    with pytest.raises(ValueError):
        replay(out.manifest)


def test_invert_zero_path():
    out, sys, rep = invert(SampledPath.zeros(32), 2)
    assert np.all(sys.alpha == 0) and np.all(sys.beta == 0) and rep.delta2 == 0


def test_solver_options_reach_the_solver():
    v = kac_siegert_bm(25, 128, GaussianStream(6))
    sys, rep, _ = fit_ifsm(v, wavelet_family(4), SolverOptions(max_contractivity=0.4))
    assert contractivity_factor(sys) <= 0.4 + 1e-9
