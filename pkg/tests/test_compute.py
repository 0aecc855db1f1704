import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentcl.compute import (BACKWARD_MULTIPLIER, CostModel, TaskLoad,
                              end2end_er_cost, latent_er_cost,
                              metric_classifier_cost, mlp_flops_per_sample)


class TestMLPFlops:
    def test_hand_example(self):
        forward, step = mlp_flops_per_sample(512, 1024, 100)
        assert forward == 2 * (524288 + 102400) == 1_253_376
        assert step == 3 * forward

    def test_backward_multiplier(self):
        assert BACKWARD_MULTIPLIER == 2

    @given(st.integers(1, 4096), st.integers(1, 4096), st.integers(1, 1000))
    @settings(max_examples=30, deadline=None)
    def test_formula(self, d, h, C):
        forward, step = mlp_flops_per_sample(d, h, C)
        assert forward == 2 * (d * h + h * C)
        assert step == forward * (1 + BACKWARD_MULTIPLIER)


def uniform_schedule(n_tasks=5, classes=20, spc=100):
    return [TaskLoad(classes, spc) for _ in range(n_tasks)]


class TestLatentCost:
    def test_single_task_hand_computation(self):
        cost = CostModel(c_enc=1000.0, n_z=8, hidden=4)
        per, cum = latent_er_cost([TaskLoad(2, 10)], epochs_per_task=3, er_size=0, cost=cost)
        # encode 20 samples once + 3 epochs x 20 balanced samples x train step
        _, step = mlp_flops_per_sample(8, 4, 2)
        assert per == [1000.0 * 20 + 3 * 20 * step]
        assert cum == per

    def test_epoch_size_grows_with_seen_classes(self):
        cost = CostModel(c_enc=0.0, n_z=8, hidden=4)
        per, _ = latent_er_cost(uniform_schedule(3, 2, 10), 1, 20, cost)
        # head widens as classes accrue, so normalize by the per-task step cost
        sizes = [
            p / mlp_flops_per_sample(8, 4, 2 * (t + 1))[1]
            for t, p in enumerate(per)
        ]
        assert sizes == [20, 40, 60]

    def test_cumulative_is_running_sum(self):
        cost = CostModel(c_enc=10.0, n_z=16, hidden=8)
        per, cum = latent_er_cost(uniform_schedule(4), 2, 10, cost)
        np.testing.assert_allclose(cum, np.cumsum(per))

    def test_er_size_does_not_change_cost(self):
        cost = CostModel(c_enc=10.0, n_z=16, hidden=8)
        a = latent_er_cost(uniform_schedule(), 2, 2, cost)
        b = latent_er_cost(uniform_schedule(), 2, 500, cost)
        assert a == b


class TestEnd2EndCost:
    def test_every_epoch_pays_encoder(self):
        cost = CostModel(c_enc=1e6, n_z=8, hidden=4)
        per, _ = end2end_er_cost([TaskLoad(2, 10)], epochs_per_task=3, er_size=0, cost=cost)
        _, step = mlp_flops_per_sample(8, 4, 2)
        assert per == [3 * 20 * (1e6 * 3 + step)]

    def test_dominates_latent_with_expensive_encoder(self):
        sched = uniform_schedule()
        _, forward = mlp_flops_per_sample(768, 1024, 100)
        cost = CostModel(c_enc=1e6 * forward, n_z=768, hidden=1024)
        _, lat = latent_er_cost(sched, 10, 20, cost)
        _, e2e = end2end_er_cost(sched, 10, 20, cost)
        assert all(e > l for e, l in zip(e2e, lat))

    def test_vit_scale_ratio_exceeds_fifty(self):
        sched = uniform_schedule(5, 20, 100)
        cost = CostModel(c_enc=1.76e10, n_z=768, hidden=1024)
        _, lat = latent_er_cost(sched, 10, 20, cost)
        _, e2e = end2end_er_cost(sched, 10, 20, cost)
        assert e2e[-1] / lat[-1] >= 50


class TestMetricClassifierCost:
    def test_nmc_hand_example(self):
        cost = CostModel(c_enc=100.0, n_z=4)
        assert metric_classifier_cost("nmc", 10, 2, cost) == 1048.0

    def test_nmc_zero_samples(self):
        cost = CostModel(c_enc=100.0, n_z=4)
        assert metric_classifier_cost("nmc", 0, 0, cost) == 0.0

    def test_slda_inversion_term_scale(self):
        cost = CostModel(c_enc=0.0, n_z=8192)
        val = metric_classifier_cost("slda", 0, 0, cost)
        # with no samples only the N_z^3 inversion survives
        assert val == pytest.approx(5.5e11, rel=0.01)

    def test_slda_literal_vs_corrected_covariance(self):
        cost = CostModel(c_enc=0.0, n_z=16)
        literal = metric_classifier_cost("slda", 100, 2, cost)
        corrected = metric_classifier_cost("slda", 100, 2, cost,
                                           corrected_covariance_term=True)
        base = 100 * 16 + 16 * 2 + 16.0**3
        assert literal == base + (3 * 16 * 100) ** 2
        assert corrected == base + 9 * 16 * 16 * 100

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            metric_classifier_cost("svm", 1, 1, CostModel(0.0, 4))

    @given(st.integers(1, 10_000), st.integers(1, 100))
    @settings(max_examples=30, deadline=None)
    def test_slda_at_least_nmc(self, n, c):
        cost = CostModel(c_enc=50.0, n_z=32)
        assert (metric_classifier_cost("slda", n, c, cost)
                >= metric_classifier_cost("nmc", n, c, cost))
