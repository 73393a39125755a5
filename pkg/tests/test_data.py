import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgdr.config import DataConfig, ModelConfig, OptimizerConfig, ScheduleConfig, TrainConfig
from sgdr.data import (
    BatchPlan,
    Dataset,
    batches,
    load_csv,
    make_blobs,
    make_spirals,
    save_csv,
    train_test_split,
)
from sgdr.trainer import train


def same(a: Dataset, b: Dataset) -> bool:
    return a.inputs.tobytes() == b.inputs.tobytes() and a.labels.tobytes() == b.labels.tobytes()


def fit(dataset, hidden, epochs, activation="tanh", lr=0.05):
    cfg = TrainConfig(
        schedule=ScheduleConfig(kind="cosine", eta_max=lr, t0=epochs, t_mult=1),
        optimizer=OptimizerConfig(weight_decay=0.0),
        model=ModelConfig(hidden=hidden, activation=activation),
        total_epochs=epochs,
        batch_size=32,
        snapshot_policy="none",
    )
    # Evaluate on the training set itself: this is a capacity check.
    return train(cfg, datasets=(dataset, dataset)).records[-1].test_error


class TestGenerators:
    def test_blobs_counts_and_determinism(self):
        d = make_blobs(3, 100, 2, 1.0, seed=5)
        assert len(d) == 300
        assert np.bincount(d.labels).tolist() == [100, 100, 100]
        assert same(d, make_blobs(3, 100, 2, 1.0, seed=5))
        assert not same(d, make_blobs(3, 100, 2, 1.0, seed=6))

    def test_tight_blobs_are_linearly_separable(self):
        d = make_blobs(3, 50, 2, 1e-6, seed=2)
        assert fit(d, (), 50) == 0.0

    def test_spirals_counts_and_determinism(self):
        d = make_spirals(2, 50, 0.1, seed=1)
        assert len(d) == 100 and d.num_classes == 2
        assert same(d, make_spirals(2, 50, 0.1, seed=1))

    def test_spirals_need_a_nonlinear_model(self):
        d = make_spirals(2, 200, 0.0, seed=3)
        assert fit(d, (), 100, lr=0.1) > 0.2
        assert fit(d, (32, 32), 150, activation="relu") < 0.05

    def test_spirals_reject_one_arm(self):
        with pytest.raises(ValueError):
            make_spirals(1, 10)

    def test_dataset_validation(self):
        with pytest.raises(ValueError):
            Dataset(np.array([[np.nan]]), np.array([0]), 2)
        with pytest.raises(ValueError):
            Dataset(np.zeros((2, 1)), np.array([0, 2]), 2)


class TestBatches:
    def test_sizes(self):
        d = Dataset(np.arange(10.0).reshape(-1, 1), np.zeros(10, dtype=int), 2)
        sizes = [len(y) for _, y in batches(d, BatchPlan(3, seed=0))]
        assert sizes == [3, 3, 3, 1]

    @settings(max_examples=40)
    @given(st.integers(1, 200), st.integers(1, 64), st.integers(0, 2**31), st.integers(0, 500))
    def test_each_index_exactly_once(self, n, bs, seed, epoch):
        bs = min(bs, n)
        d = Dataset(np.arange(n, dtype=float).reshape(-1, 1), np.zeros(n, dtype=int), 1)
        seen = np.concatenate([x[:, 0] for x, _ in batches(d, BatchPlan(bs, seed, epoch))])
        assert sorted(seen.astype(int).tolist()) == list(range(n))

    def test_epochs_reshuffle(self):
        d = Dataset(np.arange(50.0).reshape(-1, 1), np.zeros(50, dtype=int), 1)
        e0 = np.concatenate([x[:, 0] for x, _ in batches(d, BatchPlan(7, 1, 0))])
        e1 = np.concatenate([x[:, 0] for x, _ in batches(d, BatchPlan(7, 1, 1))])
        again = np.concatenate([x[:, 0] for x, _ in batches(d, BatchPlan(7, 1, 0))])
        assert not np.array_equal(e0, e1)
        assert np.array_equal(np.sort(e0), np.sort(e1))
        assert np.array_equal(e0, again)

    def test_batch_larger_than_dataset(self):
        d = Dataset(np.zeros((3, 1)), np.zeros(3, dtype=int), 1)
        with pytest.raises(ValueError):
            list(batches(d, BatchPlan(4)))


def test_train_test_split_partitions():
    d = make_spirals(2, 50, 0.1, seed=0)
    tr, te = train_test_split(d, 0.2, seed=9)
    assert len(tr) == 80 and len(te) == 20
    both = np.vstack([tr.inputs, te.inputs])
    assert sorted(map(tuple, both)) == sorted(map(tuple, d.inputs))


class TestCsv:
    def test_round_trip(self, tmp_path):
        d = make_blobs(3, 10, 4, 2.0, seed=1)
        back = load_csv(save_csv(d, tmp_path / "d.csv"))
        np.testing.assert_allclose(back.inputs, d.inputs, atol=1e-12, rtol=0)
        assert back.labels.tolist() == d.labels.tolist() and back.num_classes == 3

    def test_header_is_optional(self, tmp_path):
        body = "1.5,2.0,0\n-1.0,0.25,1\n3,4,1\n"
        (tmp_path / "a.csv").write_text("f1,f2,label\n" + body)
        (tmp_path / "b.csv").write_text(body)
        assert same(load_csv(tmp_path / "a.csv"), load_csv(tmp_path / "b.csv"))

    def test_single_class_rejected(self, tmp_path):
        (tmp_path / "one.csv").write_text("1.0,2.0,0\n1.0,2.0,0\n1.0,2.0,0\n")
        with pytest.raises(ValueError, match="need >= 2 classes"):
            load_csv(tmp_path / "one.csv")

    def test_malformed_row_names_line(self, tmp_path):
        (tmp_path / "bad.csv").write_text("x,y,label\n1,2,0\n1,oops,1\n")
        with pytest.raises(ValueError, match="line 3"):
            load_csv(tmp_path / "bad.csv")
        (tmp_path / "ragged.csv").write_text("1,2,0\n1,1\n")
        with pytest.raises(ValueError, match="line 2"):
            load_csv(tmp_path / "ragged.csv")

    def test_empty_file(self, tmp_path):
        (tmp_path / "empty.csv").write_text("")
        with pytest.raises(ValueError):
            load_csv(tmp_path / "empty.csv")


def test_data_config_seed_derivation():
    a = DataConfig().load(master_seed=1)
    b = DataConfig().load(master_seed=1)
    c = DataConfig(seed=77).load(master_seed=1)
    assert same(a, b) and not same(a, c)
