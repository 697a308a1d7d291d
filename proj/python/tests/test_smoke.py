import json
import math

import pytest

import naon


def test_metric_anchors():
    assert naon.kendall_tau([0, 1, 2, 3], [0, 1, 2, 3]) == 1.0
    assert naon.kendall_tau([3, 2, 1, 0], [0, 1, 2, 3]) == -1.0
    assert naon.kendall_tau([1, 0, 2, 3], [0, 1, 2, 3]) == pytest.approx(2 / 3)
    assert naon.accuracy([1, 2, 3, 0], [0, 1, 2, 3]) == 0.0
    prr, msrr = naon.repetition_ratios([[1, 1, 2], [0, 1, 2]])
    assert prr == 50.0
    assert msrr == pytest.approx(100 / 6)


def test_decoders_disagree_on_the_classic_case():
    p = [[0.9, 0.85], [0.8, 0.1]]
    assert naon.greedy_assign(p) == [0, 1]
    assert naon.hungarian_assign(p) == [1, 0]
    assert naon.brute_force_assign(p) == [1, 0]
    assert naon.raw_argmax([[0.9, 0.1], [0.8, 0.2]]) == [0, 0]
    with pytest.raises(ValueError):
        naon.greedy_assign([[1.0, 0.0], [0.0, 1.0]])


def test_losses_and_positions():
    uniform = [[0.0] * 5 for _ in range(5)]
    assert naon.pointer_loss(uniform, [0, 1, 2, 3, 4]) == pytest.approx(math.log(5), abs=1e-12)
    assert naon.exclusive_loss(uniform, [4, 3, 2, 1, 0]) == pytest.approx(2 * math.log(5), abs=1e-12)
    pe = naon.positional_encoding(3, 4)
    assert pe[0] == [0.0, 1.0, 0.0, 1.0]
    assert pe[1][0] == pytest.approx(math.sin(1.0))
    with pytest.raises(ValueError):
        naon.positional_encoding(3, 5)


def test_synth_and_shuffle():
    corpus = naon.synth({"paragraph_count": 20, "n_range": (3, 5), "seed": 4})
    assert len(corpus) == 20
    assert all(3 <= len(p["sentences"]) <= 5 for p in corpus)
    assert naon.synth({"paragraph_count": 20, "n_range": (3, 5), "seed": 4}) == corpus
    shuffled = naon.shuffle_paragraph([[1], [2], [3]], [0, 1, 2], 9)
    assert [shuffled["sentences"][i] for i in shuffled["gold_order"]] == [[1], [2], [3]]
    with pytest.raises(ValueError, match="vocab too small"):
        naon.synth({"vocab_size": 1})


def test_model_forward_and_order():
    model = naon.Model({"vocab_size": 16, "d_model": 8, "heads": 2}, seed=3)
    out = model.forward([[1, 2], [3], [4, 5, 6]])
    assert len(out["omega"]) == 3
    for row in out["row_probs"]:
        assert sum(row) == pytest.approx(1.0, abs=1e-12)
    order = model.order([[1, 2], [3], [4, 5, 6]])
    assert sorted(order) == [0, 1, 2]


def test_train_evaluate_roundtrip(tmp_path):
    cfg = {"paragraph_count": 24, "n_range": (2, 4), "vocab_size": 16}
    naon.write_synth(cfg, tmp_path / "train.jsonl")
    naon.write_synth({**cfg, "seed": 1, "paragraph_count": 8}, tmp_path / "valid.jsonl")
    train_cfg = {
        "vocab_size": 16, "d_model": 8, "heads": 2, "encoder_blocks": 1, "decoder_blocks": 1,
        "ffn_dim": 16, "batch_size": 4, "max_epochs": 2, "lr": 1e-2,
    }
    model, history = naon.train(train_cfg, tmp_path / "train.jsonl", tmp_path / "valid.jsonl", tmp_path / "run")
    assert [h["epoch"] for h in history] == [1, 2]
    assert all(h["train_lex"] >= h["train_lc"] for h in history)
    report = naon.evaluate(tmp_path / "run" / "best.ckpt", tmp_path / "valid.jsonl", "greedy")
    assert report == model.evaluate(tmp_path / "valid.jsonl")
    assert report["prr"] == 0.0 and report["msrr"] == 0.0
    lines = (tmp_path / "run" / "history.jsonl").read_text().splitlines()
    assert json.loads(lines[0])["epoch"] == 1
    loaded = naon.Model.load(tmp_path / "run" / "best.ckpt")
    assert "d_model = 8" in loaded.config_text
