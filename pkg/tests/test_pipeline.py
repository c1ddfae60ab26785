"""Pipeline wiring: config validation, nested-grid synthesis, noise staging."""
import numpy as np
import pytest

from aet2d.errors import NumericalError, ParameterError
from aet2d.fem import ScalarField
from aet2d.forward import PowerDensity
from aet2d.mesh import GAMMA_MEDIUM, build_disk_mesh, tag_boundary
from aet2d.noise import NoiseSpec
from aet2d.pipeline import (
    ForwardData,
    RunConfig,
    apply_noise,
    forward_stage,
    recon_stage,
    run_pipeline,
)


def n_edges(mesh):
    pairs = mesh.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    return len({tuple(sorted(p)) for p in pairs})


class TestRunConfig:
    def test_defaults_valid(self):
        cfg = RunConfig()
        assert cfg.boundary_spec() is GAMMA_MEDIUM
        assert cfg.conductivity().label == "case1"

    def test_constant_case(self):
        cfg = RunConfig(case="constant", constant_value=3.0)
        case = cfg.conductivity()
        assert case.evaluate(np.array([0.2]), np.array([0.1]))[0] == 3.0

    @pytest.mark.parametrize("kwargs", [
        {"case": "case3"},
        {"case": "constant", "constant_value": 0.0},
        {"gamma": "huge"},
        {"target_h": 0.0},
        {"target_h": 1.5},
        {"refine_levels": -1},
        {"refine_levels": 7},
        {"eps_d": 0.0},
        {"tol": 0.0},
        {"max_iter": 0},
        {"noise": 0.05},
    ])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ParameterError):
            RunConfig(**kwargs)

    def test_explicit_arcs_override_preset_name(self):
        cfg = RunConfig(gamma="custom", gamma_arcs=((0.0, np.pi),))
        assert cfg.boundary_spec().arcs == ((0.0, np.pi),)


class TestForwardStage:
    def test_constant_case_exact_data(self):
        cfg = RunConfig(case="constant", constant_value=2.0, gamma="full", target_h=0.3)
        fwd = forward_stage(cfg)
        # u1 = x and u2 = y are exact P1 solutions, so H = 2 I up to solver tolerance
        assert np.abs(fwd.H.h11.values - 2.0).max() <= 1e-9
        assert np.abs(fwd.H.h12.values).max() <= 1e-9
        assert np.abs(fwd.H.h22.values - 2.0).max() <= 1e-9
        assert np.abs(fwd.theta_true.values).max() <= 1e-7
        assert np.all(fwd.sigma_true.values == 2.0)
        assert fwd.theta_flagged.size == 0

    def test_data_mesh_is_one_refinement_finer(self):
        cfg = RunConfig(case="constant", gamma="full", target_h=0.3)
        fwd = forward_stage(cfg)
        # uniform refinement adds one node per edge
        assert fwd.n_data == fwd.recon_mesh.n_vertices + n_edges(fwd.recon_mesh)

    def test_refine_levels_chain_like_the_mesh_sweep(self):
        base = forward_stage(RunConfig(case="constant", gamma="full", target_h=0.4))
        finer = forward_stage(RunConfig(case="constant", gamma="full", target_h=0.4,
                                        refine_levels=1))
        assert finer.recon_mesh.n_vertices == base.n_data

    def test_fields_live_on_recon_mesh(self):
        cfg = RunConfig(case="case1", gamma="large", target_h=0.25, eps_d=1e-12)
        fwd = forward_stage(cfg)
        assert fwd.H.mesh is fwd.recon_mesh
        assert fwd.sigma_true.mesh is fwd.recon_mesh
        assert fwd.theta_true.mesh is fwd.recon_mesh
        assert fwd.H.eps_d == 1e-12
        assert fwd.H.d.values.min() > 0.0

    def test_forward_is_deterministic(self):
        cfg = RunConfig(case="case1", gamma="medium", target_h=0.3)
        a = forward_stage(cfg)
        b = forward_stage(cfg)
        assert a.H.h11.values.tobytes() == b.H.h11.values.tobytes()
        assert a.theta_true.values.tobytes() == b.theta_true.values.tobytes()


def identity_data(target_h=0.5):
    mesh = tag_boundary(build_disk_mesh(target_h), GAMMA_MEDIUM)
    ones = np.ones(mesh.n_vertices)
    H = PowerDensity(ScalarField(mesh, ones), ScalarField(mesh, 0.0 * ones),
                     ScalarField(mesh, ones))
    return ForwardData(recon_mesh=mesh, n_data=4 * mesh.n_vertices,
                       sigma_true=ScalarField(mesh, ones),
                       theta_true=ScalarField(mesh, 0.0 * ones), H=H)


class TestApplyNoise:
    def test_noiseless_passes_through(self):
        fwd = identity_data()
        assert apply_noise(fwd.H, NoiseSpec()) is fwd.H

    def test_zero_floor_skips_clamp(self):
        fwd = identity_data()
        noisy = apply_noise(fwd.H, NoiseSpec(alpha_percent=5.0, seed=1, eig_floor=0.0))
        assert noisy is not fwd.H
        assert noisy.eig_floor_nodes.size == 0

    def test_high_floor_clamps_everywhere(self):
        fwd = identity_data()
        noisy = apply_noise(fwd.H, NoiseSpec(alpha_percent=1.0, seed=1, eig_floor=2.0))
        assert noisy.eig_floor_nodes.size == fwd.H.mesh.n_vertices


class TestReconStage:
    def test_flagged_boundary_node_rejected(self):
        fwd = identity_data()
        flagged = ForwardData(recon_mesh=fwd.recon_mesh, n_data=fwd.n_data,
                              sigma_true=fwd.sigma_true, theta_true=fwd.theta_true,
                              H=fwd.H,
                              theta_flagged=fwd.recon_mesh.boundary_nodes[:1].copy())
        with pytest.raises(NumericalError, match="boundary"):
            recon_stage(RunConfig(), flagged)

    def test_explicit_empty_unwrap_matches_auto(self):
        cfg_auto = RunConfig(case="constant", gamma="full", target_h=0.3)
        cfg_none = RunConfig(case="constant", gamma="full", target_h=0.3,
                             unwrap_arcs=())
        a = run_pipeline(cfg_auto).recon.sigma.values
        b = run_pipeline(cfg_none).recon.sigma.values
        assert a.tobytes() == b.tobytes()


class TestRunPipeline:
    def test_constant_case_recovers_exactly(self):
        cfg = RunConfig(case="constant", constant_value=2.0, gamma="full", target_h=0.3)
        out = run_pipeline(cfg)
        assert out.recon.metrics.sigma_error <= 1e-6
        assert out.recon.metrics.cos2theta_error <= 1e-6
        assert out.recon.metrics.sin2theta_error <= 1e-6
        assert abs(out.recon.diagnostics.min_det - 4.0) <= 1e-8
        assert out.forward_seconds >= 0.0 and out.recon_seconds >= 0.0

    def test_case1_coarse_run_is_sane(self):
        out = run_pipeline(RunConfig(case="case1", gamma="large", target_h=0.15))
        assert out.recon.sigma.values.min() > 0.0
        assert 0.0 < out.recon.metrics.sigma_error < 1.0
        assert out.recon.metrics.cos2theta_error < 0.5

    def test_large_arc_survives_rim_stagnation(self):
        # at this resolution a rim node straddles the tangential extremum of
        # u1 inside the no-flux arc; a sign slip there once derailed the
        # boundary unwrap and blew the angle errors up by two decades
        out = run_pipeline(RunConfig(case="case1", gamma="large", target_h=0.12))
        assert out.recon.metrics.cos2theta_error <= 0.05
        assert out.recon.metrics.sin2theta_error <= 0.10
        assert out.recon.metrics.sigma_error <= 0.40

    def test_noisy_run_is_reproducible(self):
        cfg = RunConfig(case="case2", gamma="medium", target_h=0.25,
                        noise=NoiseSpec(alpha_percent=5.0, seed=3, eig_floor=1e-5))
        a = run_pipeline(cfg).recon.sigma.values
        b = run_pipeline(cfg).recon.sigma.values
        assert a.tobytes() == b.tobytes()
        assert a.min() > 0.0
        other = RunConfig(case="case2", gamma="medium", target_h=0.25,
                          noise=NoiseSpec(alpha_percent=5.0, seed=4, eig_floor=1e-5))
        c = run_pipeline(other).recon.sigma.values
        assert a.tobytes() != c.tobytes()
