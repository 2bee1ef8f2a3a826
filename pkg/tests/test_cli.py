import json

import numpy as np
import pandas as pd
import pytest

from gtseg.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from gtseg.data.pgm import save_mask

TINY_MODEL = [
    "model.levels=2",
    "model.channels_per_level=[8,16]",
    "model.group_h=4",
    "model.group_w=4",
    "model.heads=2",
]


def _fields(text):
    return dict(line.split(None, 1) for line in text.strip().splitlines() if line.strip())


def _sets(items):
    return [arg for item in items for arg in ("--set", item)]


def _disk(size, radius):
    yy, xx = np.mgrid[0:size, 0:size]
    return (((yy - size / 2) ** 2 + (xx - size / 2) ** 2) <= radius ** 2).astype(np.uint8)


# -----------------------------
# complexity
# -----------------------------
def test_complexity_prints_closed_form(capsys):
    assert main(["complexity", "16", "16", "16", "8", "8", "2"]) == EXIT_OK
    fields = _fields(capsys.readouterr().out)
    assert int(fields["omega_mhsa"]) == 2359296
    assert int(fields["omega_gt_per_group"]) == 81920
    assert int(fields["omega_gt_total"]) == 327680
    assert int(fields["num_groups"]) == 4
    assert float(fields["ratio"]) == pytest.approx(0.138889, abs=1e-6)


def test_complexity_verify_reports_counted_macs(capsys):
    assert main(["complexity", "16", "16", "16", "8", "8", "2", "--verify"]) == EXIT_OK
    captured = capsys.readouterr()
    fields = _fields(captured.out)
    assert int(fields["measured_projection"]) + int(fields["measured_attention"]) == 327680
    assert "[✓]" in captured.err


def test_complexity_sweep_lists_each_phi(capsys):
    assert main(["complexity", "16", "16", "16", "8", "8", "1", "--sweep-phi", "1,2,4"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "phi" in out and out.count("\n") >= 8


@pytest.mark.parametrize(
    "argv",
    [
        ["complexity", "16", "16", "16", "5", "8", "2"],
        ["complexity", "16", "16", "15", "8", "8", "2"],
        ["complexity", "16", "16", "16", "8", "8", "0"],
        ["complexity", "16", "16", "16", "8", "8", "2", "--sweep-phi", "a,b"],
        ["complexity", "16", "16"],
        ["complexity", "x", "16", "16", "8", "8", "2"],
        ["nonsense"],
    ],
)
def test_bad_arguments_exit_with_usage_code(argv):
    assert main(argv) == EXIT_USAGE


# -----------------------------
# fd
# -----------------------------
def test_fd_of_identical_masks(tmp_path, capsys):
    save_mask(tmp_path / "a.pgm", _disk(32, 9))
    save_mask(tmp_path / "b.pgm", _disk(32, 9))
    assert main(["fd", str(tmp_path / "a.pgm"), str(tmp_path / "b.pgm")]) == EXIT_OK
    fields = _fields(capsys.readouterr().out)
    assert float(fields["delta_z"]) == 0.0
    assert float(fields["factor"]) == pytest.approx(0.5)
    assert len(fields["descriptor_a"].split()) == 16
    assert int(fields["contour_points_a"]) == int(fields["contour_points_b"]) > 0


def test_fd_of_a_circle_and_its_scaled_shifted_copy(tmp_path, capsys):
    def circle(size, cy, cx, radius):
        yy, xx = np.mgrid[0:size, 0:size]
        return (((yy - cy) ** 2 + (xx - cx) ** 2) <= radius ** 2).astype(np.uint8)

    save_mask(tmp_path / "a.pgm", circle(200, 100.4, 99.7, 80))
    save_mask(tmp_path / "b.pgm", circle(280, 131.2, 147.6, 120))
    assert main(["fd", str(tmp_path / "a.pgm"), str(tmp_path / "b.pgm")]) == EXIT_OK
    fields = _fields(capsys.readouterr().out)
    assert float(fields["delta_z"]) < 1e-3


def test_fd_with_empty_prediction_is_degenerate(tmp_path, capsys):
    save_mask(tmp_path / "a.pgm", np.zeros((32, 32), dtype=np.uint8))
    save_mask(tmp_path / "b.pgm", _disk(32, 9))
    assert main(["fd", str(tmp_path / "a.pgm"), str(tmp_path / "b.pgm"), "--beta", "2"]) == EXIT_OK
    fields = _fields(capsys.readouterr().out)
    assert float(fields["penalty_delta_z"]) == 1.0
    assert float(fields["factor"]) == pytest.approx(1 / (1 + np.exp(-2.0)), abs=1e-6)


def test_fd_reports_unreadable_files(tmp_path):
    (tmp_path / "a.pgm").write_bytes(b"P2\n1 1\n255\n0")
    save_mask(tmp_path / "b.pgm", _disk(16, 4))
    assert main(["fd", str(tmp_path / "a.pgm"), str(tmp_path / "b.pgm")]) == EXIT_FAILURE
    assert main(["fd", str(tmp_path / "missing.pgm"), str(tmp_path / "b.pgm")]) == EXIT_FAILURE


# -----------------------------
# synth
# -----------------------------
def test_synth_writes_a_deterministic_dataset(tmp_path):
    for name in ("one", "two"):
        assert main(["synth", "--seed", "3", "--count", "6", "--size", "32", "--out", str(tmp_path / name)]) == EXIT_OK
    for name in ("images", "masks"):
        files = sorted(p.name for p in (tmp_path / "one" / name).glob("*.pgm"))
        assert files == [f"s{i:04d}.pgm" for i in range(6)]
        for file in files:
            assert (tmp_path / "one" / name / file).read_bytes() == (tmp_path / "two" / name / file).read_bytes()
    folds = (tmp_path / "one" / "folds.txt").read_text().split()
    assert sorted(int(f) for f in folds[1::2]) == [0, 0, 1, 1, 2, 2]


def test_synth_warns_about_sizes_the_default_model_rejects(tmp_path, capsys):
    assert main(["synth", "--count", "1", "--size", "250", "--out", str(tmp_path / "odd")]) == EXIT_OK
    err = capsys.readouterr().err
    assert "does not fit the default model" in err
    assert "folds.txt not written" in err
    assert not (tmp_path / "odd" / "folds.txt").exists()


# -----------------------------
# train / eval
# -----------------------------
def test_train_without_epochs_then_eval(tmp_path, capsys):
    run = tmp_path / "run"
    argv = ["train", "--data", "synth", "--out", str(run), "--seed", "1"] + _sets(
        TINY_MODEL + ["data.size=32", "data.count=6", "training.epochs=0"]
    )
    assert main(argv) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert [f["fold"] for f in summary["folds"]] == [0, 1, 2]
    assert all(f["best_val_dice"] is None for f in summary["folds"])
    for fold in range(3):
        assert (run / f"fold{fold}.ckpt").exists()
    log = pd.read_csv(run / "train_log.csv")
    assert list(log.columns) == ["fold", "epoch", "train_loss", "train_bce", "val_dice"]
    assert log.empty
    stored = json.loads((run / "summary.json").read_text())
    assert stored["seed"] == 1 and stored["config"]["model"]["input_size"] == [32, 32]

    out = tmp_path / "eval"
    argv = ["eval", "--checkpoint", str(run / "fold0.ckpt"), "--count", "4", "--out", str(out), "--dump-masks"]
    assert main(argv) == EXIT_OK
    frame = pd.read_csv(out / "eval.csv")
    assert len(frame) == 5
    assert frame["sample"].iloc[-1] == "mean±std"
    for column in ("acc", "se", "sp", "dice", "auc"):
        assert pd.to_numeric(frame[column].iloc[:-1]).between(0.0, 1.0).all()
    assert len(list((out / "pred_masks").glob("*.pgm"))) == 4
    payload = json.loads((out / "eval.json").read_text())
    assert payload["meta"]["samples"] == 4


def test_eval_of_the_validation_fold_matches_the_logged_dice(tmp_path, capsys):
    run = tmp_path / "run"
    argv = ["train", "--out", str(run), "--seed", "2"] + _sets(
        TINY_MODEL + ["data.size=32", "data.count=6", "training.epochs=2", "training.batch_size=4"]
    )
    assert main(argv) == EXIT_OK
    logged = json.loads(capsys.readouterr().out)["folds"][0]["best_val_dice"]

    out = tmp_path / "eval"
    argv = [
        "eval", "--checkpoint", str(run / "fold0.ckpt"), "--count", "6", "--seed", "2",
        "--folds", "3", "--fold", "0", "--out", str(out),
    ]
    assert main(argv) == EXIT_OK
    rows = pd.read_csv(out / "eval.csv").iloc[:-1]
    tp, fp, fn = (pd.to_numeric(rows[c]).sum() for c in ("tp", "fp", "fn"))
    pooled = 2 * tp / (2 * tp + fp + fn) if tp + fp + fn else 1.0
    assert pooled >= logged - 0.05


def test_eval_rejects_incompatible_sizes(tmp_path, capsys):
    run = tmp_path / "run"
    argv = ["train", "--out", str(run)] + _sets(TINY_MODEL + ["data.size=32", "data.count=3", "training.epochs=0"])
    assert main(argv) == EXIT_OK
    argv = ["eval", "--checkpoint", str(run / "fold0.ckpt"), "--size", "20", "--count", "1", "--out", str(tmp_path / "e")]
    assert main(argv) == EXIT_FAILURE
    assert "does not fit the checkpoint" in capsys.readouterr().err


def test_eval_with_missing_checkpoint(tmp_path):
    assert main(["eval", "--checkpoint", str(tmp_path / "none.ckpt"), "--out", str(tmp_path)]) == EXIT_FAILURE


def test_train_with_invalid_config_is_a_usage_error(tmp_path):
    argv = ["train", "--out", str(tmp_path), "--set", "training.loss=dice"]
    assert main(argv) == EXIT_USAGE
    assert main(["train", "--out", str(tmp_path), "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE


# -----------------------------
# selftest
# -----------------------------
@pytest.mark.parametrize("name", ["complexity", "descriptor", "attention"])
def test_selftest_sections_pass(name, capsys):
    assert main(["selftest", "--test", name]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["ok"] is True and payload["failed"] == 0
    assert payload["test"] == name


def test_selftest_gradients_name_the_worst_entry(capsys):
    assert main(["selftest", "--test", "gradients"]) == EXIT_OK
    (check,) = json.loads(capsys.readouterr().out)["checks"]
    assert set(check["value"]) == {"matmul", "softmax", "conv2d", "mhsa"}
    for case in check["value"].values():
        assert case["relative"] < 1e-5
        assert case["max_element"] < 1e-4
        assert isinstance(case["at"], list) and case["at"][0] >= 0
