"""Dataset assembly: split arithmetic, balance, reproducibility, disk format."""

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from radarprune.dataset import (
    SPLIT_NAMES,
    SPLIT_RATIO,
    DatasetConfig,
    build_dataset,
    export_pgms,
    load_dataset,
    save_dataset,
    split_allocation,
    split_totals,
    write_pgm,
)
from radarprune.radar import ClassLabel


class TestSplitArithmetic:
    def test_frozen_totals(self):
        assert split_totals(1200) == (591, 261, 348)
        assert split_totals(360) == (178, 78, 104)

    @given(st.integers(min_value=1, max_value=20000))
    def test_totals_sum_and_track_exact_shares(self, total):
        counts = split_totals(total)
        assert sum(counts) == total
        denom = sum(SPLIT_RATIO)
        for count, ratio in zip(counts, SPLIT_RATIO):
            exact = total * ratio / denom
            assert exact - 1 < count < exact + 1

    def test_allocation_balanced_within_one(self):
        alloc = split_allocation(60)
        assert alloc["train"] == [30, 30, 30, 30, 29, 29]
        assert alloc["val"] == [13] * 6
        assert alloc["test"] == [17, 17, 17, 17, 18, 18]

    @given(st.integers(min_value=1, max_value=500))
    def test_allocation_conserves_examples(self, per_class):
        alloc = split_allocation(per_class)
        per_label = [sum(alloc[name][c] for name in SPLIT_NAMES) for c in range(6)]
        assert per_label == [per_class] * 6
        for name, total in zip(SPLIT_NAMES, split_totals(per_class * 6)):
            counts = alloc[name]
            assert sum(counts) == total
            assert max(counts) - min(counts) <= 1


class TestBuild:
    def test_shapes_and_balance(self, small_dataset):
        ds = small_dataset
        totals = split_totals(36)
        for name, total in zip(SPLIT_NAMES, totals):
            split = ds.splits[name]
            assert split.x.shape == (total, 3, 128, 128)
            assert split.x.dtype == np.float32
            assert split.y.shape == (total,)
            assert split.y.dtype == np.int64
            assert len(split.index) == total
            hist = np.bincount(split.y, minlength=6)
            assert hist.max() - hist.min() <= 1

    def test_rebuild_is_bit_identical(self, small_dataset):
        again = build_dataset(DatasetConfig(per_class=6, seed=0))
        for name in SPLIT_NAMES:
            assert np.array_equal(small_dataset.splits[name].x, again.splits[name].x)
            assert np.array_equal(small_dataset.splits[name].y, again.splits[name].y)
            assert small_dataset.splits[name].index == again.splits[name].index

    def test_seed_changes_data(self, small_dataset):
        other = build_dataset(DatasetConfig(per_class=6, seed=1))
        assert not np.array_equal(small_dataset.train.x, other.train.x)

    def test_examples_unique_across_splits(self, small_dataset):
        seen = set()
        for name in SPLIT_NAMES:
            for row in small_dataset.splits[name].index:
                key = tuple(row["seed"])
                assert key not in seen  # no example appears twice
                seen.add(key)
        assert len(seen) == 36

    def test_snr_cycling_recorded_in_index(self):
        ds = build_dataset(DatasetConfig(per_class=4, snr_db=(10.0, 20.0), seed=0))
        snrs = {
            row["seed"][2]: row["spec"]["snr_db"]
            for name in SPLIT_NAMES
            for row in ds.splits[name].index
            if row["label"] == 0
        }
        assert snrs == {0: 10.0, 1: 20.0, 2: 10.0, 3: 20.0}

    def test_class_overrides_reach_the_spec(self):
        cfg = DatasetConfig(
            per_class=2,
            seed=0,
            freq_jitter_hz=0.0,
            class_overrides={"P0N1": {"pulse_width_s": 12.8e-6, "pulse_repetition_hz": 0.2 / 12.8e-6}},
        )
        ds = build_dataset(cfg)
        rows = [
            row for name in SPLIT_NAMES for row in ds.splits[name].index if row["label"] == 0
        ]
        assert all(row["spec"]["pulse_width_s"] == 12.8e-6 for row in rows)

    def test_bad_config_rejected(self):
        with pytest.raises(ValueError):
            build_dataset(DatasetConfig(per_class=0))
        with pytest.raises(ValueError):
            build_dataset(DatasetConfig(per_class=2, snr_db=()))

    def test_pixels_in_unit_range(self, small_dataset):
        assert float(small_dataset.train.x.min()) >= 0.0
        assert float(small_dataset.train.x.max()) <= 1.0


class TestPersistence:
    def test_round_trip_bit_exact(self, small_dataset, tmp_path):
        save_dataset(tmp_path, small_dataset)
        loaded = load_dataset(tmp_path)
        for name in SPLIT_NAMES:
            assert np.array_equal(small_dataset.splits[name].x, loaded.splits[name].x)
            assert np.array_equal(small_dataset.splits[name].y, loaded.splits[name].y)

    def test_save_is_byte_deterministic(self, small_dataset, tmp_path):
        save_dataset(tmp_path / "a", small_dataset)
        save_dataset(tmp_path / "b", small_dataset)
        for name in SPLIT_NAMES:
            ia = (tmp_path / "a" / name / "index.json").read_bytes()
            ib = (tmp_path / "b" / name / "index.json").read_bytes()
            assert ia == ib
            ea = (tmp_path / "a" / name / "ex00000.rpz").read_bytes()
            eb = (tmp_path / "b" / name / "ex00000.rpz").read_bytes()
            assert ea == eb

    def test_index_names_every_file(self, small_dataset, tmp_path):
        save_dataset(tmp_path, small_dataset)
        for name in SPLIT_NAMES:
            index = json.loads((tmp_path / name / "index.json").read_text())
            for row in index:
                assert (tmp_path / name / row["file"]).exists()
                assert row["class"] == ClassLabel(row["label"]).name


class TestPgm:
    def test_header_and_payload(self, tmp_path):
        img = np.linspace(0.0, 1.0, 12).reshape(3, 4)
        path = tmp_path / "x.pgm"
        write_pgm(path, img)
        blob = path.read_bytes()
        assert blob.startswith(b"P5\n4 3\n255\n")
        assert len(blob) == len(b"P5\n4 3\n255\n") + 12
        assert blob[-1] == 255 and blob[len(b"P5\n4 3\n255\n")] == 0

    def test_rejects_non_2d(self, tmp_path):
        with pytest.raises(ValueError):
            write_pgm(tmp_path / "x.pgm", np.zeros((2, 2, 2)))

    def test_export_count_and_files(self, small_dataset, tmp_path):
        written = export_pgms(tmp_path, small_dataset, limit_per_split=2)
        assert written == 6
        for name in SPLIT_NAMES:
            files = sorted((tmp_path / name / "pgm").glob("*.pgm"))
            assert len(files) == 2


class TestSeparability:
    def test_nearest_centroid_beats_chance_comfortably(self):
        # the six classes must be recoverable from channel 0 alone for the
        # downstream classifier to have signal worth pruning
        ds = build_dataset(DatasetConfig(per_class=48, seed=7))
        train, test = ds.train, ds.test
        feats = lambda x: x[:, 0].reshape(x.shape[0], -1)
        centroids = np.stack(
            [feats(train.x)[train.y == c].mean(axis=0) for c in range(6)]
        )
        d = ((feats(test.x)[:, None, :] - centroids[None]) ** 2).sum(axis=2)
        acc = float(np.mean(np.argmin(d, axis=1) == test.y))
        assert acc >= 0.667
