import csv
import json

import numpy as np
import pytest

from sgdr.config import DataConfig, ModelConfig, OptimizerConfig, ScheduleConfig, TrainConfig
from sgdr.data import BatchPlan, batches, make_blobs, train_test_split
from sgdr.model import MlpModel, MlpSpec, backward, init, load_snapshot, n_params
from sgdr.optimizer import sgd_step
from sgdr.trainer import DivergenceError, Trainer, evaluate, incumbent_errors, run_training, train
from sgdr.data import Dataset

SMALL = DataConfig(kind="blobs", num_classes=3, per_class=20, dim=2, spread=2.0)


def cfg(**kw):
    base = dict(
        schedule=ScheduleConfig(kind="cosine", t0=10, t_mult=2),
        model=ModelConfig(hidden=(8,)),
        data=SMALL,
        total_epochs=20,
        batch_size=16,
    )
    base.update(kw)
    return TrainConfig(**base)


def test_snapshots_at_restart_boundaries():
    result = train(cfg(total_epochs=150, batch_size=48))
    assert [s.epoch for s in result.snapshots] == [10, 30, 70, 150]
    assert result.restart_epochs == [10, 30, 70, 150]
    assert not result.partial
    assert result.incumbent.epoch == 150
    np.testing.assert_array_equal(result.incumbent.params, result.snapshots[-1].params)


def test_last_m_keeps_period_ends_plus_partial_terminal():
    result = train(cfg(schedule=ScheduleConfig(kind="cosine", t0=1, t_mult=2), total_epochs=20, snapshot_policy="last_m:2"))
    assert [(s.epoch, s.partial) for s in result.snapshots] == [(7, False), (15, False), (20, True)]
    assert result.partial
    assert result.incumbent.epoch == 15


def test_policy_none_keeps_nothing():
    assert train(cfg(snapshot_policy="none")).snapshots == []


def test_step_schedule_terminal_snapshot_is_complete():
    result = train(cfg(schedule=ScheduleConfig(kind="step", eta0=0.05, milestones=(5,)), total_epochs=8))
    assert [(s.epoch, s.partial) for s in result.snapshots] == [(8, False)]
    assert result.incumbent.epoch == 8
    assert all(r.is_incumbent_update for r in result.records)


def test_single_constant_step_equals_sgd_step():
    config = cfg(
        schedule=ScheduleConfig(kind="const", value=0.1),
        optimizer=OptimizerConfig(momentum=0.0, weight_decay=0.0),
        total_epochs=1,
        batch_size=1000,
    )
    data = make_blobs(3, 20, 2, 2.0, seed=0)
    tr, te = train_test_split(data, 0.2, seed=1)
    trainer = Trainer(config, tr, te)
    x0 = trainer.model.params.copy()
    # The single batch is still a permutation of the training rows.
    (xb, yb), = batches(tr, BatchPlan(len(tr), trainer.batch_seed, 0))
    _, grad = backward(MlpModel(trainer.spec, x0), xb, yb)
    trainer.run_epoch()
    assert trainer.model.params.tobytes() == sgd_step(x0, grad, 0.1).tobytes()


def test_first_batch_uses_eta_max():
    result = train(cfg(total_epochs=1, batch_size=48))
    # one batch per epoch: the only rate used is the one at t_cur = 0
    assert result.records[0].mean_lr == 0.05


def test_deterministic():
    a, b = train(cfg()), train(cfg())
    assert a.records == b.records
    assert all(x.params.tobytes() == y.params.tobytes() for x, y in zip(a.snapshots, b.snapshots))


def test_epoch_and_schedule_stay_in_sync():
    config = cfg(schedule=ScheduleConfig(kind="cosine", t0=3, t_mult=1), batch_size=7, total_epochs=12)
    data = config.data.load(config.master_seed)
    trainer = Trainer(config, *train_test_split(data, 0.2, seed=0))
    for epoch in range(1, 13):
        trainer.run_epoch()
        s = trainer.schedule
        completed = sum(s.t0 * s.t_mult**k for k in range(s.restart_index))
        assert abs(completed + s.t_cur - epoch) < 1e-9
        assert trainer.elapsed == epoch


def test_incumbent_flags_and_curve():
    result = train(cfg(schedule=ScheduleConfig(kind="cosine", t0=2, t_mult=2), total_epochs=9))
    flags = [r.is_incumbent_update for r in result.records]
    assert flags == [True, True, False, False, False, True, False, False, False]
    inc = incumbent_errors(result.records)
    assert inc[4] == result.records[1].test_error
    assert inc[8] == result.records[5].test_error
    epochs_at_updates = [r.epoch for r in result.records if r.is_incumbent_update]
    assert epochs_at_updates == sorted(epochs_at_updates)


def test_recommend_semantics():
    config = cfg(schedule=ScheduleConfig(kind="cosine", t0=10, t_mult=1), total_epochs=35)
    data = config.data.load(config.master_seed)
    trainer = Trainer(config, *train_test_split(data, 0.2, seed=0))
    with pytest.raises(RuntimeError):
        trainer.recommend()
    saved = {}
    for epoch in range(1, 36):
        trainer.run_epoch()
        saved[epoch] = trainer.model.params.copy()
        inc = trainer.recommend()
        if epoch < 10:
            assert inc.epoch == epoch and inc.params.tobytes() == saved[epoch].tobytes()
        else:
            boundary = 10 * (epoch // 10)
            assert inc.epoch == boundary
            assert inc.params.tobytes() == saved[boundary].tobytes()


def test_reset_velocity_on_restart_changes_trajectory():
    keep = train(cfg(schedule=ScheduleConfig(kind="cosine", t0=2, t_mult=1), total_epochs=6))
    reset = train(cfg(schedule=ScheduleConfig(kind="cosine", t0=2, t_mult=1), total_epochs=6, reset_velocity_on_restart=True))
    assert keep.records[:2] == reset.records[:2]
    assert keep.records[2] != reset.records[2]


class TestEvaluate:
    def test_perfect_predictions(self):
        # Huge logits on the true class via a hand-built linear layer.
        spec = MlpSpec((2, 2))
        params = np.array([50.0, -50.0, -50.0, 50.0, 0.0, 0.0])
        data = Dataset(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([0, 1]), 2)
        loss, err = evaluate(MlpModel(spec, params), data)
        assert err == 0.0 and loss < 1e-30

    def test_uniform_model_ties_go_to_class_zero(self):
        model = MlpModel(MlpSpec((2, 3, 2)), np.zeros(n_params((2, 3, 2))))
        data = make_blobs(2, 25, 2, 1.0, seed=4)
        loss, err = evaluate(model, data)
        assert err == 0.5
        assert loss == pytest.approx(np.log(2))

    def test_side_effect_free(self):
        model = init(MlpSpec((2, 4, 3), seed=1))
        before = model.params.copy()
        evaluate(model, make_blobs(3, 5, 2, 1.0, seed=0))
        assert model.params.tobytes() == before.tobytes()

    def test_class_mismatch(self):
        with pytest.raises(ValueError):
            evaluate(init(MlpSpec((2, 3, 2))), make_blobs(3, 5, 2, 1.0))


def test_run_training_outputs(tmp_path):
    config = cfg(schedule=ScheduleConfig(kind="cosine", t0=2, t_mult=2), total_epochs=8)
    result = run_training(config, tmp_path)
    with open(tmp_path / "records.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 8 and rows[1]["restarted_this_epoch"] == "1"
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["restart_epochs"] == [2, 6]
    assert meta["partial"] is True
    assert [s["file"] for s in meta["snapshots"]] == ["snapshot_2.txt", "snapshot_6.txt", "snapshot_8.txt"]
    assert meta["config"]["schedule.t0"] == 2
    inc = load_snapshot(tmp_path / "incumbent.txt")
    assert inc.params.tobytes() == result.incumbent.params.tobytes()
    assert result.incumbent.epoch == 6


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_keeps_valid_records(tmp_path):
    config = cfg(
        # lr * weight_decay >> 2: the decay term alone grows the weights geometrically.
        schedule=ScheduleConfig(kind="const", value=1e5),
        optimizer=OptimizerConfig(momentum=0.0, weight_decay=0.1),
        total_epochs=100,
    )
    with pytest.raises(DivergenceError) as info:
        run_training(config, tmp_path)
    with open(tmp_path / "records.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "epoch"
    assert info.value.epoch > 2
    assert len(rows) - 1 == info.value.epoch - 1
    assert all(len(r) == 8 for r in rows)

    # A scripted divergence: a model whose parameters overflow produces no record.
    bad = cfg(total_epochs=1)
    trainer = Trainer(bad, *train_test_split(bad.data.load(0), 0.2, seed=0))
    trainer.model.params[:] = np.inf
    with pytest.raises(DivergenceError, match="epoch 1, batch 0"):
        trainer.run_epoch()
