import numpy as np
import pytest
from dataclasses import replace

import fedminimax as fm
from fedminimax.algorithms import HyperParams
from fedminimax.theory import (
    CONSTRAINT_NAMES,
    ConstantSet,
    estimate_constants,
    grad_check,
    pl_slack,
    probe_lipschitz,
    probe_pl,
    validate_theorem1,
    validate_theorem2,
)


@pytest.fixture(scope="module")
def synth_constants():
    return ConstantSet(L_f=10.0, mu=1.0, sigma=0.5, delta_x=1.0, delta_y=5.0, rho=1.0, rho_u=1.0)


@pytest.fixture(scope="module")
def passing_hp():
    # solved numerically against L_f=10, mu=1, K=10, q=20, rho=rho_u=1
    return HyperParams(
        variant="fgda", gamma=7e-5, lam=0.13, eta_n=1.0, eta_m=1.0e9,
        c1=451.0, c2=4.6, q=20, T=100, rho=1.0, rho_u=1.0, seed=0,
    )


class TestValidator:
    def test_exactly_ten_named_constraints(self, passing_hp, synth_constants):
        report = validate_theorem1(passing_hp, synth_constants, K=10)
        assert len(report.constraints) == 10
        assert [c.name for c in report.constraints] == list(CONSTRAINT_NAMES)

    def test_passing_configuration(self, passing_hp, synth_constants):
        report = validate_theorem1(passing_hp, synth_constants, K=10)
        assert report.all_satisfied, report.render()

    def test_passing_theorem1_at_unit_floors_passes_theorem2(self, passing_hp, synth_constants):
        assert validate_theorem2(passing_hp, synth_constants, K=10).all_satisfied

    def test_gamma_violation_reported_independently(self, passing_hp, synth_constants):
        report = validate_theorem1(passing_hp, synth_constants, K=10)
        bound = report.by_name("gamma_upper").rhs
        bad = replace(passing_hp, gamma=10.0 * bound)
        rep = validate_theorem1(bad, synth_constants, K=10)
        assert not rep.by_name("gamma_upper").satisfied
        # the other upper bounds are still evaluated on their own terms
        assert rep.by_name("lambda_upper").satisfied
        assert rep.by_name("rho_range").satisfied

    def test_rho_u_boundary_equality(self, passing_hp, synth_constants):
        c = replace(synth_constants, rho_u=135.0 / 64.0)
        rep = validate_theorem1(passing_hp, c, K=10)
        rec = rep.by_name("rho_u_range")
        assert rec.satisfied and rec.lhs == pytest.approx(rec.rhs)

    def test_lambda_bound_violation(self, passing_hp, synth_constants):
        bad = replace(passing_hp, lam=100.0)
        rep = validate_theorem2(bad, synth_constants, K=10)
        assert not rep.by_name("lambda_upper").satisfied

    @pytest.mark.parametrize(
        "name,mutate",
        [
            ("m_min_two", dict(eta_m=1.9, eta_n=0.1)),
            ("m_lower", dict(eta_m=2.0, eta_n=2.0)),
            ("c_square_upper", dict(c1=1e6)),
            ("c1_lower", dict(c1=0.1)),
            ("c2_lower", dict(c2=1.0)),
            ("tau_coupling", dict(gamma=0.13)),
            ("gamma_upper", dict(gamma=0.01)),
            ("lambda_upper", dict(lam=100.0)),
            ("rho_range", dict(rho=2.0)),
            ("rho_u_range", dict(rho_u=3.0, rho=1.0)),
        ],
    )
    def test_each_constraint_individually_falsifiable(self, passing_hp, synth_constants, name, mutate):
        hp = replace(passing_hp, **mutate)
        c = synth_constants
        if "rho_u" in mutate:
            c = replace(c, rho_u=mutate["rho_u"])
        rep = validate_theorem1(hp, c, K=10)
        assert not rep.by_name(name).satisfied, rep.render()

    def test_shrinking_step_sizes_preserves_upper_bounds(self, passing_hp, synth_constants):
        rep = validate_theorem1(passing_hp, synth_constants, K=10)
        assert rep.by_name("gamma_upper").satisfied
        assert rep.by_name("lambda_upper").satisfied
        for c in (0.5, 0.1, 0.01):
            hp = replace(passing_hp, gamma=passing_hp.gamma * c, lam=passing_hp.lam * c)
            rep_c = validate_theorem1(hp, synth_constants, K=10)
            assert rep_c.by_name("gamma_upper").satisfied
            assert rep_c.by_name("lambda_upper").satisfied
            assert rep_c.by_name("tau_coupling").satisfied

    def test_report_rendering(self, passing_hp, synth_constants):
        rep = validate_theorem1(passing_hp, synth_constants, K=10)
        text = rep.render()
        machine = rep.machine_lines()
        for name in CONSTRAINT_NAMES:
            assert name in text
            assert f"{name}=satisfied|" in machine

    def test_momentum_clamp_never_triggers_under_validated_params(self, passing_hp, synth_constants):
        rep = validate_theorem1(passing_hp, synth_constants, K=10)
        assert rep.all_satisfied
        K = 10
        for t in range(0, passing_hp.T + 1):
            eta = fm.eta_schedule(passing_hp.eta_n, K, passing_hp.eta_m, t)
            assert passing_hp.c1 * eta**2 <= 1.0
            assert passing_hp.c2 * eta**2 <= 1.0


class TestBoundConstant:
    def test_finite_and_positive_for_passing_config(self, passing_hp, synth_constants):
        from fedminimax.theory import bound_constant_G

        G = bound_constant_G(passing_hp, synth_constants, K=10,
                             F_init=120.0, f_init=70.0, F_star=0.0)
        assert np.isfinite(G) and G > 0


class TestConstantSet:
    def test_derived_quantities(self):
        c = ConstantSet(L_f=10.0, mu=1.0, sigma=0.0, delta_x=0.0, delta_y=0.0)
        assert c.kappa == 10.0
        assert c.L == 110.0

    def test_invariants(self):
        with pytest.raises(ValueError):
            ConstantSet(L_f=0.5, mu=1.0, sigma=0.0, delta_x=0.0, delta_y=0.0)

    def test_safety_margin_touches_only_estimated_fields(self):
        c = ConstantSet(L_f=10.0, mu=1.0, sigma=2.0, delta_x=1.0, delta_y=1.0,
                        provenance={"L_f": "analytic", "mu": "analytic",
                                    "sigma": "estimated", "delta_x": "estimated",
                                    "delta_y": "estimated"})
        m = c.with_safety_margin(1.1)
        assert m.L_f == 10.0 and m.mu == 1.0
        assert m.sigma == pytest.approx(2.2)
        assert m.delta_x == pytest.approx(1.1)


class TestProbePl:
    def test_synthetic_slack_nonnegative(self, synthetic_small):
        assert probe_pl(synthetic_small, n_points=300, seed=0) >= -1e-9

    def test_auc_slack_nonnegative(self, auc_inst):
        assert probe_pl(auc_inst, n_points=300, seed=0) >= -1e-9

    def test_slack_zero_at_inner_maximizer(self, synthetic_small):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(synthetic_small.d)
        y = synthetic_small.y_star(x)
        assert abs(pl_slack(synthetic_small, x, y)) < 1e-9

    def test_doubled_mu_fails(self, synthetic_small):
        assert probe_pl(synthetic_small, n_points=300, seed=0, mu=2.0) < -1e-9

    def test_unsupported_family_errors(self, robust_inst):
        with pytest.raises(ValueError):
            probe_pl(robust_inst, n_points=10, seed=0)


class TestProbeLipschitz:
    def test_synthetic_ratios_within_bounds(self, synthetic_small):
        rep = probe_lipschitz(synthetic_small, n_pairs=300, seed=0)
        assert rep.ok
        # the inner maximizer moves at most as fast as the mean coupling
        assert rep.max_ratio_y_star <= synthetic_small.t_bar + 1e-12
        assert rep.max_ratio_y_star <= 0.1
        assert rep.max_ratio_grad_F <= synthetic_small.tau + synthetic_small.t_bar**2 + 1e-9

    def test_degenerate_pair_skipped(self, synthetic_small):
        rep = probe_lipschitz(synthetic_small, n_pairs=1, seed=0)
        assert np.isfinite(rep.max_ratio_y_star)

    def test_unsupported_family_errors(self, robust_inst):
        with pytest.raises(ValueError):
            probe_lipschitz(robust_inst, n_pairs=10, seed=0)


class TestGradCheck:
    def test_synthetic_nearly_exact(self, synthetic_small):
        rng = np.random.default_rng(0)
        for _ in range(5):
            err = grad_check(synthetic_small, 0, rng.standard_normal(synthetic_small.d),
                             rng.standard_normal(synthetic_small.p))
            assert err < 1e-7

    def test_auc_and_robust_within_tolerance(self, auc_inst, robust_inst):
        rng = np.random.default_rng(1)
        for inst in (auc_inst, robust_inst):
            for _ in range(5):
                err = grad_check(inst, int(rng.integers(inst.K)),
                                 rng.standard_normal(inst.d), rng.standard_normal(inst.p))
                assert err < 1e-5

    def test_h_range_enforced(self, synthetic_small):
        with pytest.raises(ValueError):
            grad_check(synthetic_small, 0, np.ones(synthetic_small.d), np.ones(synthetic_small.p), h=1e-2)


class TestEstimateConstants:
    def test_synthetic_mu_exact(self, synthetic_small):
        c = estimate_constants(synthetic_small, n_samples=20, seed=0)
        assert c.mu == 1.0
        assert c.provenance["mu"] == "analytic"
        assert c.L_f == synthetic_small.tau  # couplings below 0.1 never dominate

    def test_auc_mu_from_imbalance(self):
        inst = fm.make_auc(K=3, dim=5, n_per_client=20, pos_ratio=0.05, seed=2)
        c = estimate_constants(inst, n_samples=10, seed=0)
        assert c.mu == pytest.approx(0.095)

    def test_noiseless_synthetic_sigma_vanishes(self):
        inst = fm.make_synthetic(K=3, dim=4, s=1.0, tau=10.0, seed=3, noise_sigma=0.0)
        c = estimate_constants(inst, n_samples=10, seed=0)
        assert c.sigma < 1e-12

    def test_robust_everything_estimated(self, robust_inst):
        c = estimate_constants(robust_inst, n_samples=10, seed=0)
        assert c.provenance["L_f"] == "estimated"
        assert c.provenance["mu"] == "estimated"
        assert c.L_f > 0 and c.mu > 0
