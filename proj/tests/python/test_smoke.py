import math

import numpy as np
import pytest

import sentpool as sp


def test_tokenizer():
    assert sp.tokenize("I don't think it's BAD...") == [
        "i", "do", "n't", "think", "it", "'s", "bad", ".", ".", ".",
    ]
    assert sp.TOKENIZER_VERSION == "tok-v1"


def test_uniform_init_statistics():
    w = sp.uniform_init(400, 300, seed=5)
    assert w.shape == (400, 300)
    assert np.abs(w).max() <= sp.INIT_BOUND
    assert abs(w.std() - 0.08) < 0.002
    assert np.array_equal(w, sp.uniform_init(400, 300, seed=5))


def test_adagrad_matches_numpy():
    p = sp.Parameter("w", np.array([[1.0, -2.0]]))
    g = np.array([[0.5, 0.25]])
    p.grad = g
    p.adagrad_step(0.1)
    expected = np.array([[1.0, -2.0]]) - 0.1 * g / (np.sqrt(g * g) + 1e-8)
    np.testing.assert_allclose(p.value, expected, rtol=0, atol=1e-15)
    np.testing.assert_allclose(p.accum, g * g)


def test_param_counts():
    assert sp.lstm_param_count(300, 300) == 721200
    assert sp.blstm_param_count(300, 185) == 719280
    assert sp.feature_dim(sp.Head.HYBRID_MAX, sp.Body.BLSTM, 185) == 740


def test_softmax_and_cross_entropy():
    logits = np.log(np.array([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(sp.softmax(logits), [1 / 6, 2 / 6, 3 / 6], rtol=1e-12)
    np.testing.assert_allclose(sp.softmax(logits + 700.0), [1 / 6, 2 / 6, 3 / 6], rtol=1e-12)


def test_dropout_is_inverted():
    h = np.ones(10000)
    values, mask = sp.dropout(h, 0.5, True, seed=3)
    assert set(np.unique(mask)) <= {0.0, 2.0}
    assert abs(values.mean() - 1.0) < 0.05
    same, _ = sp.dropout(h, 0.5, False)
    np.testing.assert_array_equal(same, h)


def test_embeddings_round_trip(tmp_path):
    table = sp.EmbeddingTable(["cat", "dog"], np.array([[0.5, -1.0, 2.0], [0.25, 0.0, -0.125]]))
    path = tmp_path / "vec.bin"
    table.save_binary(path)
    back = sp.load_word2vec_binary(path, expected_dim=3)
    assert back.tokens == ["cat", "dog"]
    np.testing.assert_array_equal(back.lookup("dog"), [0.25, 0.0, -0.125])
    oov = back.lookup("zebra")
    assert np.abs(oov).max() <= 0.25
    np.testing.assert_array_equal(oov, back.lookup("zebra"))
    with pytest.raises(sp.DimensionError):
        sp.load_word2vec_binary(path, expected_dim=300)
    with pytest.raises(sp.IoError):
        sp.load_word2vec_binary(tmp_path / "missing.bin")


def test_heads_against_numpy():
    cfg = sp.ModelConfig()
    cfg.body = sp.Body.BLSTM
    cfg.head = sp.Head.HYBRID_MAX
    cfg.input_dim = 4
    cfg.hidden_dim = 3
    model = sp.Model(cfg, 2)
    xs = np.random.default_rng(0).uniform(-1, 1, size=(5, 4))
    seq = model.encode(xs)
    states = seq.states
    assert states.shape == (5, 6)
    tail = np.concatenate([states[-1, :3], states[0, 3:]])
    for head, expected in [
        (sp.Head.TAIL, tail),
        (sp.Head.MEAN_POOL, states.mean(axis=0)),
        (sp.Head.MAX_POOL, states.max(axis=0)),
        (sp.Head.HYBRID_MEAN, np.concatenate([tail, states.mean(axis=0)])),
        (sp.Head.HYBRID_MAX, np.concatenate([tail, states.max(axis=0)])),
    ]:
        f = sp.feature(head, seq)
        np.testing.assert_allclose(f.values, expected, rtol=0, atol=1e-12)
    trace = sp.feature(sp.Head.MAX_POOL, seq).argmax_trace
    assert list(trace) == list(states.argmax(axis=0))


def test_train_evaluate_save_load(tmp_path):
    words = ["alpha", "bravo", "charlie", "golf", "hotel", "india"]
    rng = np.random.default_rng(1)
    emb = sp.EmbeddingTable(words, rng.uniform(-0.25, 0.25, size=(6, 8)))
    examples = [sp.Example(" ".join(words[3 * (i % 2) + j] for j in range(3)), i % 2) for i in range(12)]
    cfg = sp.ModelConfig()
    cfg.input_dim = 8
    cfg.hidden_dim = 4
    cfg.max_epochs = 15
    cfg.patience = 15
    trained = sp.train(sp.Model(cfg, 2), examples, examples, emb)
    assert 1 <= trained.epoch_selected <= 15
    result = sp.evaluate(trained.model, examples, emb)
    assert result.accuracy == max(trained.dev_accuracy_history)
    path = tmp_path / "m.ckpt"
    trained.model.save(path)
    assert sp.Model.load(path).checksum() == trained.model.checksum()


def test_report_formatting():
    assert sp.format_percent(0.8235) == "82.4%"
    assert sp.format_improvement(0.80, 0.82) == "+2.50%"
    assert sp.winner_letter(0.9, 0.91) == "B"
    assert sp.winner_letter(0.9, 0.9) == "="
    assert sp.model_name(sp.Body.LSTM, sp.Head.MAX_POOL) == "LSTM_MaxPool"
    assert math.isclose(sp.softmax(np.zeros(4)).sum(), 1.0)
