import numpy as np
import pytest

from mmllab import (
    AdversaryPair,
    FunctionClassHandle,
    LossContext,
    LossKind,
    Policy,
    ValueFunction,
    WeightFunction,
    enumerate_adversaries,
    evaluate_policy,
    exact_adversary_pair,
    generate_dataset,
    minimize_finite,
    misspec_gap,
    mml_loss,
    mml_loss_exact,
    random_mdp,
    random_model,
    random_policy,
)
from mmllab.rkhs import KernelSpec


def pair(w, v):
    return AdversaryPair(WeightFunction(np.asarray(w, float)),
                         ValueFunction(np.asarray(v, float)))


class TestMinimizeFinite:
    def test_true_model_wins_with_zero_inner_max(self):
        mdp = random_mdp(3, 2, 0.9, seed=0)
        grid = [mdp.true_model()] + [random_model(3, 2, s) for s in range(3)]
        ctx = LossContext.exact(mdp, Policy.uniform(3, 2))
        adv = FunctionClassHandle.tabular_ball(1.0, 3, 2)
        sel = minimize_finite(ctx, grid, adv, LossKind.MML)
        assert sel.chosen_index == 0
        assert sel.inner_max <= 1e-13

    def test_singleton_grid(self):
        mdp = random_mdp(2, 2, 0.8, seed=1)
        data = generate_dataset(mdp, Policy.uniform(2, 2), 50, 5, seed=2)
        model = random_model(2, 2, 3)
        ctx = LossContext.empirical(data)
        adv = FunctionClassHandle.tabular_ball(1.0, 2, 2)
        sel = minimize_finite(ctx, [model], adv, LossKind.MML)
        assert sel.chosen_model is model

    def test_inner_max_matches_nested_loop_oracle(self):
        mdp = random_mdp(2, 2, 0.9, seed=4)
        data = generate_dataset(mdp, Policy.uniform(2, 2), 80, 8, seed=5)
        grid = [random_model(2, 2, s + 10) for s in range(4)]
        adv = FunctionClassHandle.tabular_ball(1.0, 2, 2)
        ctx = LossContext.empirical(data)
        sel = minimize_finite(ctx, grid, adv, LossKind.MML, resolution=2)
        pairs = enumerate_adversaries(adv, 2)
        for idx, value in sel.per_model_inner_max:
            oracle = max(abs(mml_loss(data, p, grid[idx]).value) for p in pairs)
            assert value == pytest.approx(oracle, abs=0.0)

    def test_mle_has_no_adversary(self):
        mdp = random_mdp(2, 2, 0.9, seed=6)
        data = generate_dataset(mdp, Policy.uniform(2, 2), 60, 6, seed=7)
        grid = [random_model(2, 2, s + 20) for s in range(3)]
        adv = FunctionClassHandle.tabular_ball(1.0, 2, 2)
        sel = minimize_finite(LossContext.empirical(data), grid, adv, LossKind.MLE)
        assert sel.adversary_argmax is None

    def test_rkhs_inner_max_is_sqrt_of_closed_form(self):
        from mmllab.rkhs import rkhs_max_mml_sq

        mdp = random_mdp(3, 2, 0.9, seed=8)
        data = generate_dataset(mdp, Policy.uniform(3, 2), 40, 5, seed=9)
        grid = [random_model(3, 2, 30)]
        kernel = KernelSpec.identity(3, 2)
        adv = FunctionClassHandle.rkhs_unit_ball(kernel)
        sel = minimize_finite(LossContext.empirical(data), grid, adv, LossKind.MML)
        assert sel.inner_max == pytest.approx(
            np.sqrt(rkhs_max_mml_sq(data, kernel, grid[0])), abs=1e-14
        )

    def test_enlarging_class_never_shrinks_inner_max(self):
        mdp = random_mdp(2, 2, 0.9, seed=10)
        data = generate_dataset(mdp, Policy.uniform(2, 2), 70, 7, seed=11)
        grid = [random_model(2, 2, s + 40) for s in range(3)]
        adv = FunctionClassHandle.tabular_ball(1.0, 2, 2)
        ctx = LossContext.empirical(data)
        small = minimize_finite(ctx, grid, adv, LossKind.MML, resolution=1)
        large = minimize_finite(ctx, grid, adv, LossKind.MML, resolution=3)
        for (i, a), (j, b) in zip(small.per_model_inner_max, large.per_model_inner_max):
            assert b >= a - 1e-15

    def test_deterministic(self):
        mdp = random_mdp(3, 2, 0.9, seed=12)
        data = generate_dataset(mdp, Policy.uniform(3, 2), 90, 9, seed=13)
        grid = [random_model(3, 2, s + 50) for s in range(4)]
        adv = FunctionClassHandle.tabular_ball(1.0, 3, 2)
        ctx = LossContext.empirical(data)
        a = minimize_finite(ctx, grid, adv, LossKind.MML)
        b = minimize_finite(ctx, grid, adv, LossKind.MML)
        assert a.chosen_index == b.chosen_index
        assert a.per_model_inner_max == b.per_model_inner_max

    def test_empty_grid_raises(self):
        mdp = random_mdp(2, 2, 0.9, seed=14)
        adv = FunctionClassHandle.tabular_ball(1.0, 2, 2)
        with pytest.raises(ValueError, match="non-empty"):
            minimize_finite(LossContext.exact(mdp, Policy.uniform(2, 2)), [], adv, LossKind.MML)


class TestMisspecGap:
    def test_target_in_class_gives_zero(self):
        mdp = random_mdp(3, 2, 0.9, seed=15)
        target = pair(np.random.default_rng(0).uniform(size=(3, 2)), np.arange(3.0))
        grid = [random_model(3, 2, s + 60) for s in range(3)]
        handle = FunctionClassHandle.finite_grid([target])
        ctx = LossContext.exact(mdp, Policy.uniform(3, 2))
        assert misspec_gap(ctx, grid, handle, [target]) == pytest.approx(0.0, abs=1e-15)

    def test_zero_class_gives_max_target_loss(self):
        from mmllab import IdentityVariant

        mdp = random_mdp(3, 2, 0.9, seed=16)
        behavior = Policy.uniform(3, 2)
        target_policy = random_policy(3, 2, 17)
        grid = [random_model(3, 2, s + 70) for s in range(4)]
        zero = FunctionClassHandle.finite_grid([pair(np.zeros((3, 2)), np.zeros(3))])
        ctx = LossContext.exact(mdp, behavior)
        targets = [
            [exact_adversary_pair(mdp, target_policy, behavior, m, IdentityVariant.WSTAR_VP)]
            for m in grid
        ]
        eps = misspec_gap(ctx, grid, zero, targets)
        oracle = max(
            abs(mml_loss_exact(mdp, behavior, targets[i][0], grid[i]).value)
            for i in range(len(grid))
        )
        assert eps == pytest.approx(oracle, abs=1e-14)

    def test_bound_with_impoverished_class(self):
        # |J(pi, P_hat) - J(pi, P*)| <= gamma * (minmax + eps) with the
        # restricted class and per-model exact targets
        from mmllab import IdentityVariant

        for seed in range(5):
            mdp = random_mdp(4, 2, 0.9, seed=seed + 80, min_prob=0.02)
            behavior = Policy.uniform(4, 2)
            target_policy = random_policy(4, 2, seed + 90)
            grid = [random_model(4, 2, seed * 10 + s) for s in range(4)]
            restricted = FunctionClassHandle.finite_grid(
                [pair(np.ones((4, 2)), np.linspace(0, 1, 4))]
            )
            ctx = LossContext.exact(mdp, behavior)
            sel = minimize_finite(ctx, grid, restricted, LossKind.MML)
            targets = [
                [exact_adversary_pair(mdp, target_policy, behavior, m, IdentityVariant.WSTAR_VP)]
                for m in grid
            ]
            eps = misspec_gap(ctx, grid, restricted, targets)
            j_true = evaluate_policy(mdp, target_policy)
            j_model = evaluate_policy(mdp, target_policy, sel.chosen_model)
            assert abs(j_model - j_true) <= mdp.gamma * (sel.inner_max + eps) + 1e-8
