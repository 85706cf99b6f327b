import math

import numpy as np
import pytest

import garnet


@pytest.fixture(scope="module")
def dataset():
    return garnet.synth_generate(seed=1)


@pytest.fixture(scope="module")
def model(dataset):
    _, train, _ = garnet.loocv_splits(dataset)[0]
    return garnet.fit_model(dataset, garnet.Task.shape, iterations=300, seed=3, train=train)


def test_dataset_geometry(dataset):
    assert len(dataset) == 200
    assert dataset.frame_count() == 12000
    frames = dataset.frames(0)
    assert frames.shape == (60, 64)
    assert frames.dtype == np.float32
    assert dataset.sequence(0)["group"] in (1, 2, 3, 4)


def test_splits_partition(dataset):
    folds = garnet.loocv_splits(dataset)
    assert [g for g, _, _ in folds] == [1, 2, 3, 4]
    tested = sorted(i for _, _, test in folds for i in test)
    assert tested == list(range(200))


def test_model_embeds_and_streams(model, dataset):
    assert model.labels == dataset.shapes
    points = model.embed(dataset.frames(0))
    assert points.shape == (60, 2)
    result = model.stream(dataset.frames(0))
    assert 1 <= result["frames_used"] <= 60
    assert len(result["votes"]) == result["frames_used"]
    assert result["prediction"] is None or result["prediction"] in model.labels


def test_round_trip_bytes(model, dataset, tmp_path):
    again = garnet.Model.from_bytes(model.to_bytes())
    assert again.to_bytes() == model.to_bytes()
    np.testing.assert_array_equal(again.embed(dataset.frames(5)), model.embed(dataset.frames(5)))
    model.save(str(tmp_path / "m.ckpt"))
    assert garnet.Model.load(str(tmp_path / "m.ckpt")).to_bytes() == model.to_bytes()


def test_kde_peak():
    value = garnet.kde_density(np.zeros((1, 2)), 1.0, 0.0, 0.0)
    assert value == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-15)
    with pytest.raises(garnet.InputError):
        garnet.kde_density(np.zeros((1, 2)), 0.0, 0.0, 0.0)


def test_triplet_loss():
    assert garnet.triplet_loss(1.5, 2.0, 1.0) == pytest.approx(0.5)
    assert garnet.triplet_loss(0.5, 2.0, 1.0) == 0.0


def test_errors_are_typed(tmp_path):
    with pytest.raises(garnet.ConfigError):
        garnet.ingest(str(tmp_path / "missing.txt"))
    with pytest.raises(garnet.GarnetError):
        garnet.Model.from_bytes(b"not a checkpoint")


def test_cli_in_process(tmp_path):
    code, out, _ = garnet.run_cli(["synth", "--out-dir", str(tmp_path)])
    assert code == 0
    assert "200 sequences" in out
    code, _, err = garnet.run_cli(["stream", "--checkpoint", str(tmp_path / "none.ckpt"),
                                   "--sequence", str(tmp_path / "x.gfr")])
    assert code == 1
    assert "none.ckpt" in err
