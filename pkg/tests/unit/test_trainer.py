"""Unit tests for the optimizer, the batch streams, the training loop and evaluation."""

import dataclasses
import json

import numpy as np
import pytest

from tests.mocks.mock_models import ConstantPredictor
from varda.errors import ConfigError, ContractViolation, NumericalAbort
from varda.networks import NetConfig, ParameterSet, init_params, load_checkpoint
from varda.objectives import read_loss_curve
from varda.tensor import Tensor
from varda.trainer import (
    AdamState,
    BatchStream,
    EpochSampler,
    LabelOracle,
    TrainConfig,
    adam_step,
    clip_grad_norm,
    draw_noise,
    evaluate,
    evaluate_predictions,
    lr_at,
    train,
)


def single_param(value, grad=None):
    params = ParameterSet(NetConfig())
    params.add("w", "encoder_S", Tensor(np.array(value, dtype=np.float64)))
    if grad is not None:
        params["w"].grad = np.array(grad, dtype=np.float64)
    return params


@pytest.fixture
def quick_config():
    return TrainConfig(batch_size=2, iterations=4, log_every=1, checkpoint_every=2, seed=5)


class TestSchedule:
    """Tests for the stepped learning-rate decay."""

    @pytest.mark.parametrize("iteration, expected", [(0, 1e-4), (149, 1e-4), (150, 9e-5)])
    def test_steps(self, iteration, expected):
        """Test that the rate drops by 0.9 every 150 iterations."""
        assert lr_at(iteration, TrainConfig()) == pytest.approx(expected, rel=1e-12)

    def test_iteration_300(self):
        """Test lr0·0.9² at iteration 300."""
        assert lr_at(300, TrainConfig()) == pytest.approx(8.1e-5, rel=1e-12)

    def test_negative_iteration(self):
        """Test that negative iterations are rejected."""
        with pytest.raises(ContractViolation):
            lr_at(-1, TrainConfig())


class TestAdam:
    """Tests for the bias-corrected Adam update and gradient clipping."""

    def test_first_step_is_lr_times_sign(self):
        """Test that the first step moves each coordinate by about lr."""
        params = single_param([0.0, 0.0], grad=[2.0, -0.5])
        state = AdamState.for_params(params)
        adam_step(params, state, 1e-4)
        np.testing.assert_allclose(params["w"].data, [-1e-4, 1e-4], rtol=1e-6)
        assert state.t == 1
        assert params["w"].grad is None

    def test_zero_gradient_leaves_parameter(self):
        """Test that a zero gradient does not move the parameter."""
        params = single_param([1.5], grad=[0.0])
        adam_step(params, AdamState.for_params(params), 1e-3)
        assert params["w"].data[0] == 1.5

    def test_missing_gradient(self):
        """Test that a parameter without a gradient is an error."""
        params = single_param([1.0])
        with pytest.raises(ContractViolation):
            adam_step(params, AdamState.for_params(params), 1e-3)

    def test_state_arrays_round_trip(self):
        """Test that optimizer moments survive to_arrays/from_arrays."""
        params = single_param([0.0, 1.0], grad=[1.0, 2.0])
        state = AdamState.for_params(params)
        adam_step(params, state, 1e-3)
        again = AdamState.from_arrays(state.to_arrays(), params)
        assert again.t == 1
        np.testing.assert_array_equal(again.m["w"], state.m["w"])
        np.testing.assert_array_equal(again.v["w"], state.v["w"])

    def test_clip_scales_to_max_norm(self):
        """Test that a norm-20 gradient is scaled to norm 10."""
        params = single_param([0.0, 0.0], grad=[12.0, 16.0])
        assert clip_grad_norm(params, 10.0) == pytest.approx(20.0)
        np.testing.assert_allclose(params["w"].grad, [6.0, 8.0])

    def test_clip_keeps_small_gradients(self):
        """Test that gradients under the limit are untouched."""
        params = single_param([0.0], grad=[3.0])
        clip_grad_norm(params, 10.0)
        assert params["w"].grad[0] == 3.0


class TestSampling:
    """Tests for epoch sampling, noise draws and the batch stream."""

    def test_epoch_covers_every_item_once(self):
        """Test without-replacement sampling within one epoch."""
        sampler = EpochSampler(10, seed=1, stream=1)
        seen = np.concatenate([sampler.batch(i, 2) for i in range(5)])
        assert sorted(seen.tolist()) == list(range(10))

    def test_epochs_reshuffle(self):
        """Test that consecutive epochs use different orders."""
        sampler = EpochSampler(20, seed=1, stream=1)
        assert not np.array_equal(sampler.permutation(0), sampler.permutation(1))

    def test_batches_are_pure_functions(self):
        """Test that a fresh sampler reproduces any batch directly."""
        a = EpochSampler(7, seed=3, stream=2)
        walked = [a.batch(i, 3) for i in range(6)]
        b = EpochSampler(7, seed=3, stream=2)
        np.testing.assert_array_equal(b.batch(5, 3), walked[5])

    def test_streams_are_independent(self):
        """Test that source and target streams differ for one seed."""
        s = EpochSampler(30, seed=3, stream=1).permutation(0)
        t = EpochSampler(30, seed=3, stream=2).permutation(0)
        assert not np.array_equal(s, t)

    def test_noise_is_seeded_per_iteration(self):
        """Test that noise depends only on (seed, iteration)."""
        a_s, a_t = draw_noise(1, 4, 2, 1, 8)
        b_s, _ = draw_noise(1, 4, 2, 1, 8)
        assert a_s.shape == (2, 1, 8)
        np.testing.assert_array_equal(a_s, b_s)
        assert not np.array_equal(a_s, a_t)

    def test_empty_split(self):
        """Test that an empty split cannot be sampled."""
        with pytest.raises(ContractViolation):
            EpochSampler(0, seed=0, stream=1)

    def test_prefetch_matches_sequential(self, small_dataset):
        """Test that the prefetch thread yields exactly the sequential batches."""

        def stream(prefetch):
            return BatchStream(
                small_dataset.source,
                small_dataset.target_train,
                seed=2,
                batch_size=3,
                samples=1,
                latent_dim=16,
                dtype=np.float64,
                prefetch=prefetch,
            )

        plain = list(stream(0).iterate(0, 6))
        ahead = list(stream(2).iterate(0, 6))
        assert [b.iteration for b in ahead] == list(range(6))
        for a, b in zip(plain, ahead):
            np.testing.assert_array_equal(a.source_indices, b.source_indices)
            np.testing.assert_array_equal(a.target_images, b.target_images)
            np.testing.assert_array_equal(a.eps_target, b.eps_target)

    def test_unlabeled_source_rejected(self, small_dataset):
        """Test that the source split must carry labels."""
        with pytest.raises(ContractViolation):
            BatchStream(
                small_dataset.target_train,
                small_dataset.target_train,
                seed=0,
                batch_size=2,
                samples=1,
                latent_dim=16,
                dtype=np.float64,
            )


class TestTrainLoop:
    """Tests for train(): logging, checkpoints, resume and aborts."""

    def test_short_run_writes_curve_and_checkpoints(
        self, small_dataset, small_net_config, quick_config, tmp_path
    ):
        """Test that every iteration is logged and checkpoints land on disk."""
        result = train(
            quick_config,
            small_dataset.source,
            small_dataset.target_train,
            net_config=small_net_config,
            out_dir=tmp_path,
            manifest={"run.manifest_id": "feedface"},
        )
        assert result.iterations_done == 4
        rows = read_loss_curve(result.curve_path)
        assert [r["iter"] for r in rows] == [0, 1, 2, 3]
        assert [r["total"] for r in rows] == [b.total for b in result.history]
        assert (tmp_path / "ckpt-000002.vckp").exists()
        ckpt = load_checkpoint(result.checkpoint_path)
        assert ckpt.manifest["run.manifest_id"] == "feedface"
        assert ckpt.manifest["train.batch_size"] == "2"
        assert int(ckpt.state["trainer.iteration"]) == 4

    def test_same_seed_same_losses(self, small_dataset, small_net_config, quick_config):
        """Test that two runs with one seed produce identical loss sequences."""
        runs = [
            train(
                quick_config,
                small_dataset.source,
                small_dataset.target_train,
                net_config=small_net_config,
            )
            for _ in range(2)
        ]
        assert [b.total for b in runs[0].history] == [b.total for b in runs[1].history]

    def test_resume_matches_uninterrupted(
        self, small_dataset, small_net_config, quick_config, tmp_path
    ):
        """Test that resuming from iteration 2 reproduces the uninterrupted run."""
        full = train(
            quick_config,
            small_dataset.source,
            small_dataset.target_train,
            net_config=small_net_config,
            out_dir=tmp_path / "full",
        )
        ckpt = load_checkpoint(tmp_path / "full" / "ckpt-000002.vckp")
        resumed = train(
            quick_config,
            small_dataset.source,
            small_dataset.target_train,
            resume=ckpt,
            out_dir=tmp_path / "resumed",
        )
        assert resumed.iterations_done == 4
        assert [b.total for b in resumed.history] == [b.total for b in full.history[2:]]
        for name, tensor in full.params.items():
            np.testing.assert_array_equal(resumed.params[name].data, tensor.data)

    def test_resume_rejects_changed_weights(
        self, small_dataset, small_net_config, quick_config, tmp_path
    ):
        """Test that a resumed run may not change the loss weights."""
        train(
            quick_config,
            small_dataset.source,
            small_dataset.target_train,
            net_config=small_net_config,
            out_dir=tmp_path,
        )
        changed = dataclasses.replace(quick_config, iterations=6)
        changed.weights = dataclasses.replace(changed.weights, alpha3=0.5)
        with pytest.raises(ConfigError) as info:
            train(
                changed,
                small_dataset.source,
                small_dataset.target_train,
                resume=load_checkpoint(tmp_path / "final.vckp"),
            )
        assert any("alpha3" in line for line in info.value.diff)

    def test_non_finite_loss_aborts(
        self, small_dataset, small_net_config, quick_config, tmp_path
    ):
        """Test that NaN parameters abort with diagnostics and a dump file."""
        params = init_params(small_net_config)
        params.fill(float("nan"))
        with pytest.raises(NumericalAbort) as info:
            train(
                quick_config,
                small_dataset.source,
                small_dataset.target_train,
                params=params,
                out_dir=tmp_path,
            )
        diagnostics = info.value.diagnostics
        assert diagnostics["iteration"] == 0
        assert len(diagnostics["source_indices"]) == 2
        dump = json.loads((tmp_path / "abort_diagnostics.json").read_text())
        assert dump["iteration"] == 0

    def test_zero_budget(self, small_dataset, small_net_config):
        """Test that zero iterations return the initial parameters."""
        config = TrainConfig(batch_size=2, iterations=0)
        result = train(
            config, small_dataset.source, small_dataset.target_train, net_config=small_net_config
        )
        assert result.iterations_done == 0
        assert result.history == []

    def test_invalid_config(self, small_dataset, small_net_config):
        """Test that a zero batch size is rejected before training."""
        with pytest.raises(ContractViolation):
            train(
                TrainConfig(batch_size=0),
                small_dataset.source,
                small_dataset.target_train,
                net_config=small_net_config,
            )


class TestEvaluate:
    """Tests for per-class Dice/ASSD evaluation."""

    def test_oracle_is_perfect(self, small_dataset):
        """Test that the label oracle scores Dice 1 and ASSD 0 on every class."""
        report = evaluate(LabelOracle(small_dataset.target_test), small_dataset.target_test)
        assert [c.name for c in report.classes] == ["ring", "disk", "lobe"]
        for c in report.classes:
            assert c.dice_mean == 1.0
            assert c.assd_mean == 0.0
        assert report.mean_dice == 1.0
        assert report.n_undefined == 0

    def test_background_predictor(self, small_dataset):
        """Test that an all-background predictor scores Dice 0 and undefined ASSD."""
        model = ConstantPredictor(0)
        report = evaluate(model, small_dataset.target_test, chunk=2)
        assert model.calls == 2
        for c in report.classes:
            assert c.dice_mean == 0.0
            assert c.assd_mean is None
            assert c.n_undefined == 4
        rows = report.rows()
        assert rows[-1]["class"] == "mean"
        assert rows[-1]["n_undefined"] == 12

    def test_thread_count_does_not_change_results(self, small_dataset, small_net_config):
        """Test that 1 and 3 workers give identical reports."""
        params = init_params(small_net_config)
        one = evaluate(params, small_dataset.target_test, threads=1, chunk=1)
        three = evaluate(params, small_dataset.target_test, threads=3, chunk=1)
        assert _same_rows(one.rows(), three.rows())

    def test_unlabeled_split(self, small_dataset):
        """Test that a split without labels cannot be scored."""
        with pytest.raises(ContractViolation):
            evaluate(ConstantPredictor(), small_dataset.target_train)

    def test_vacuous_dice_is_counted_not_averaged(self):
        """Test that empty-vs-empty classes are excluded from Dice means."""
        truth = np.zeros((2, 4, 4), dtype=np.int64)
        truth[0, :2] = 1
        pred = truth.copy()
        report = evaluate_predictions(pred, truth, 4)
        ring = report.classes[0]
        assert ring.dice == [1.0]
        assert ring.vacuous == 1
        disk = report.classes[1]
        assert disk.dice == []
        assert disk.vacuous == 2

    def test_oracle_rejects_unknown_images(self, small_dataset):
        """Test that the oracle refuses images outside its split."""
        oracle = LabelOracle(small_dataset.target_test)
        with pytest.raises(ContractViolation):
            oracle.predict_labels(small_dataset.source.images([0]))


def _same_rows(a, b):
    """Row equality that treats NaN as equal to NaN."""
    if len(a) != len(b):
        return False
    for ra, rb in zip(a, b):
        for key in ra:
            va, vb = ra[key], rb[key]
            if isinstance(va, float) and isinstance(vb, float) and np.isnan(va) and np.isnan(vb):
                continue
            if va != vb:
                return False
    return True
