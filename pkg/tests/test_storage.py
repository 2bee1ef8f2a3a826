import json
import struct

import numpy as np
import pandas as pd
import pytest

from gtseg.engine.tensor import Tensor, no_grad
from gtseg.metrics.segmentation import report
from gtseg.model.gt_unet import GTUNet
from gtseg.storage.checkpoint import (
    MAGIC,
    CheckpointError,
    decode_state,
    encode_state,
    load_checkpoint,
    save_checkpoint,
)
from gtseg.storage.reports import write_metrics_reports


def _model(config):
    model = GTUNet(config)
    rng = np.random.default_rng(100)
    for param in model.parameters():
        param.data[...] = rng.normal(scale=0.1, size=param.shape)
    return model


def _forward(model, image):
    model.eval()
    with no_grad():
        return model(Tensor(image)).data


def test_checkpoint_round_trip_is_bit_identical(tmp_path, tiny_config):
    model = _model(tiny_config)
    path = save_checkpoint(tmp_path / "fold0.ckpt", model, {"fold": 0, "val_dice": 0.5})
    restored, meta = load_checkpoint(path)
    assert meta == {"fold": 0, "val_dice": 0.5}
    assert restored.config == model.config
    assert not restored.training

    original_state, restored_state = model.state_dict(), restored.state_dict()
    assert sorted(original_state) == sorted(restored_state)
    for name, value in original_state.items():
        assert restored_state[name].tobytes() == value.tobytes()

    image = np.random.default_rng(1).uniform(size=(2, 1, 32, 32))
    assert _forward(restored, image).tobytes() == _forward(model, image).tobytes()

    save_checkpoint(tmp_path / "again.ckpt", restored, meta)
    assert (tmp_path / "again.ckpt").read_bytes() == path.read_bytes()
    assert not (tmp_path / "fold0.ckpt.tmp").exists()


def test_encoding_layout():
    raw = encode_state({"b": np.ones((2,)), "a": np.zeros((1, 2))}, {"k": 1})
    assert raw[:4] == MAGIC
    assert struct.unpack("<BI", raw[4:9]) == (1, 2)
    assert struct.unpack("<H", raw[9:11]) == (1,)
    assert raw[11:12] == b"a"
    state, header = decode_state(raw)
    assert header == {"k": 1}
    np.testing.assert_array_equal(state["a"], np.zeros((1, 2)))
    assert raw.endswith(json.dumps({"k": 1}, separators=(",", ":")).encode())


def test_scalar_entries_survive():
    state, _ = decode_state(encode_state({"s": np.array(3.5)}, {}))
    assert state["s"].shape == () and float(state["s"]) == 3.5


@pytest.mark.parametrize(
    "mutate",
    [
        lambda raw: b"XXXX" + raw[4:],
        lambda raw: raw[:4] + bytes([9]) + raw[5:],
        lambda raw: raw[:-10],
        lambda raw: raw + b"\x00",
        lambda raw: raw[:-2] + b"\xff\xff",
    ],
)
def test_corrupt_checkpoints_are_rejected(tmp_path, mutate, tiny_config):
    raw = (save_checkpoint(tmp_path / "ok.ckpt", _model(tiny_config))).read_bytes()
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(mutate(raw))
    with pytest.raises(CheckpointError):
        load_checkpoint(bad)


def test_missing_file_and_state_mismatch(tmp_path, tiny_config):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "missing.ckpt")
    model = _model(tiny_config)
    state = model.state_dict()
    state.pop(sorted(state)[0])
    path = tmp_path / "partial.ckpt"
    path.write_bytes(encode_state(state, {"config": model.config.model_dump(mode="json"), "meta": {}}))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_invalid_stored_config(tmp_path, tiny_config):
    model = _model(tiny_config)
    config = model.config.model_dump(mode="json")
    config["heads"] = 3
    path = tmp_path / "cfg.ckpt"
    path.write_bytes(encode_state(model.state_dict(), {"config": config, "meta": {}}))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_metrics_reports_are_written(tmp_path):
    reports = [report((3, 1, 5, 1)), report((4, 0, 6, 0)), report((2, 2, 4, 2))]
    paths = write_metrics_reports(tmp_path, "folds", ["0", "1", "2"], reports, "fold", {"seed": 3})
    frame = pd.read_csv(paths["csv"], dtype={"fold": str})
    assert list(frame["fold"]) == ["0", "1", "2", "mean±std"]
    payload = json.loads(paths["json"].read_text(encoding="utf-8"))
    assert payload["meta"] == {"seed": 3}
    assert len(payload["rows"]) == 3
    assert payload["aggregate"]["dice"]["mean"] == pytest.approx(np.mean([r.dice for r in reports]))
