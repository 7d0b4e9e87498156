from __future__ import annotations

import math
import random
from collections import Counter

import numpy as np
import pytest
import torch

from bugdetect.eval.synthetic import random_function_source
from bugdetect.graph import extract_graph, node_location_map
from bugdetect.graph.samples import CorpusFunction
from bugdetect.lang import parse, parse_function
from bugdetect.model import (
    MAX_SUBTOKENS,
    OPERATOR_PAYLOADS,
    PAD,
    UNK,
    BugModel,
    CheckpointError,
    EmptyCandidatesError,
    GroundTruthError,
    ModelConfig,
    NonFiniteGradientError,
    OptimizerConfig,
    Vocabulary,
    collate,
    detector_loss,
    detector_objective,
    directional_check,
    embed_entities,
    encode_graph,
    gnn_forward,
    learning_rate,
    load_checkpoint,
    localize,
    make_optimizer,
    optimizer_step,
    predict_graphs,
    sample_rewrite,
    save_checkpoint,
    score_rewrites,
    selector_loss,
    selector_objective,
    subtokenize,
)
from bugdetect.model.network import Prediction


def corpus_graphs(n: int, seed: int):
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        cf = CorpusFunction(parse(random_function_source(rng)), 0)
        out.append(cf.clean_graph)
        if cf.candidates:
            out.append(cf.variant(rng.choice(cf.candidates)))
    return out[:n]


def setup(graphs, hidden=16, dtype=torch.float32, seed=0):
    torch.manual_seed(seed)
    vocab = Vocabulary.build(n.label for g in graphs for n in g.nodes)
    model = BugModel(ModelConfig(vocab_size=len(vocab), hidden=hidden)).to(dtype).eval()
    return vocab, model


# -- vocabulary and embedding ----------------------------------------------

def test_subtokenize():
    assert subtokenize("fooBar_baz") == ["foo", "bar", "baz"]
    assert subtokenize("HTTPServer") == ["http", "server"]
    assert subtokenize("-1") == ["-1"]


def test_vocabulary_round_trip(tmp_path):
    v = Vocabulary.build(["foo_bar", "foo", "baz"])
    assert v.tokens[:2] == ["<pad>", "<unk>"] and v.tokens[2] == "foo"
    v.save(tmp_path / "v.txt")
    assert Vocabulary.load(tmp_path / "v.txt").tokens == v.tokens
    assert v.encode("zzz") == [UNK] + [PAD] * (MAX_SUBTOKENS - 1)
    assert v.encode("") == [UNK] + [PAD] * (MAX_SUBTOKENS - 1)
    assert len(Vocabulary.build(("w%d" % i for i in range(100)), size=10)) == 10


def _embed(model, vocab, labels):
    subt = torch.tensor([vocab.encode(x) for x in labels])
    return model.embed(subt)


def test_embedding_max_pool():
    vocab = Vocabulary.build(["foo_bar", "a_b_c_d_e_f_g"])
    model = BugModel(ModelConfig(vocab_size=len(vocab), hidden=8))
    foo_bar, foo, bar = _embed(model, vocab, ["foo_bar", "foo", "bar"])
    assert torch.equal(foo_bar, torch.maximum(foo, bar))


def test_embedding_uses_six_subtokens():
    vocab = Vocabulary.build(["a_b_c_d_e_f_g"])
    assert len(subtokenize("a_b_c_d_e_f_g")) == 7
    model = BugModel(ModelConfig(vocab_size=len(vocab), hidden=8))
    seven, six = _embed(model, vocab, ["a_b_c_d_e_f_g", "a_b_c_d_e_f"])
    assert torch.equal(seven, six)


def test_equal_labels_equal_rows():
    g = extract_graph(parse_function("def f(a, b):\n  return a + a * b\n"))
    vocab, model = setup([g])
    h0 = embed_entities(model, collate([encode_graph(g, vocab)]))
    rows = [i for i, n in enumerate(g.nodes) if n.label == "a"]
    assert len(rows) >= 3
    assert all(torch.equal(h0[rows[0]], h0[r]) for r in rows)


# -- message passing --------------------------------------------------------

def test_isolated_node_gets_zero_message():
    from bugdetect.model.network import MessagePassingLayer, NUM_EDGE_TYPES

    layer = MessagePassingLayer(4, 4).double()
    h = torch.randn(3, 4, dtype=torch.float64)
    edges = [torch.zeros((2, 0), dtype=torch.int64) for _ in range(NUM_EDGE_TYPES // 2)]
    edges[0] = torch.tensor([[0], [1]])
    out = layer(h, edges)
    expect = torch.tanh(layer.update(layer.norm(torch.zeros(4, dtype=torch.float64))))
    assert torch.allclose(out[2], expect)
    assert not torch.allclose(out[0], expect)


def test_permutation_equivariance():
    g = corpus_graphs(1, 3)[0]
    vocab, model = setup([g], dtype=torch.float64)
    e = encode_graph(g, vocab)
    b = collate([e])
    n = e.num_nodes
    perm = torch.randperm(n, generator=torch.Generator().manual_seed(1))
    inv = torch.empty_like(perm)
    inv[perm] = torch.arange(n)
    # node i of the permuted graph is node perm[i] of the original
    pb = collate([e])
    pb.subtokens = b.subtokens[perm]
    pb.edges = [inv[x] for x in b.edges]
    h = gnn_forward(model, b, embed_entities(model, b))
    ph = gnn_forward(model, pb, embed_entities(model, pb))
    assert torch.allclose(ph, h[perm], atol=1e-12)


def test_eval_determinism_and_finite_states():
    graphs = corpus_graphs(6, 4)
    vocab, model = setup(graphs)
    b = collate([encode_graph(g, vocab) for g in graphs])
    h1, h2 = model.encode(b), model.encode(b)
    assert torch.equal(h1, h2) and bool(torch.isfinite(h1).all())
    assert h1.shape == (b.num_nodes, 16)
    with pytest.raises(ValueError):
        gnn_forward(model, b, torch.zeros(b.num_nodes, 5))


def test_parameter_count_reported():
    m = BugModel(ModelConfig(vocab_size=50, hidden=8))
    assert m.parameter_count() == sum(p.numel() for p in m.parameters()) > 0


# -- heads ------------------------------------------------------------------

def test_normalization():
    graphs = corpus_graphs(20, 5)
    vocab, model = setup(graphs)
    b = collate([encode_graph(g, vocab) for g in graphs])
    pred = model(b)
    loc = torch.cat([pred.loc_logp, pred.nobug_logp]).exp()
    seg = torch.cat([b.loc_graph, torch.arange(b.num_graphs)])
    per_graph = torch.zeros(b.num_graphs).index_add(0, seg, loc)
    assert torch.allclose(per_graph, torch.ones(b.num_graphs), atol=1e-6)
    per_loc = torch.zeros(len(b.loc_nodes)).index_add(0, b.cand_loc, pred.rew_logp.exp())
    assert torch.allclose(per_loc, torch.ones(len(b.loc_nodes)), atol=1e-6)


def test_localize_symmetry_and_sum():
    g = corpus_graphs(1, 6)[0]
    vocab, model = setup([g])
    states = torch.randn(10, 16)
    states[4] = states[7]
    p = localize(model, states, [4, 7, 2]).detach()
    assert p.shape == (4,)
    assert math.isclose(float(p.sum()), 1.0, abs_tol=1e-6)
    assert math.isclose(float(p[0]), float(p[1]), rel_tol=1e-6)
    with pytest.raises(EmptyCandidatesError):
        localize(model, states, [])


def test_location_softmax_monotone_and_shift_invariant():
    g = corpus_graphs(1, 7)[0]
    vocab, model = setup([g])
    states = torch.randn(6, 16)
    loc_s, nob_s = model.location_scores(states, torch.zeros(6, dtype=torch.int64), 1)
    logits = torch.cat([loc_s, nob_s]).detach()
    p = torch.softmax(logits, 0)
    bumped = logits.clone()
    bumped[2] += 0.7
    q = torch.softmax(bumped, 0)
    assert q[2] > p[2]
    assert all(q[i] < p[i] for i in range(len(p)) if i != 2)
    assert int(torch.softmax(logits + 3.0, 0).argmax()) == int(p.argmax())


def test_single_rewrite_has_probability_one():
    fn = parse_function("def f(a, b):\n  return a and b\n")
    g = extract_graph(fn)
    vocab, model = setup([g])
    b = collate([encode_graph(g, vocab)])
    ids = node_location_map(fn)
    loc = [int(x) for x in b.loc_nodes].index(ids[(4, 1, 1, 2)])
    p = score_rewrites(model, model.encode(b), b, loc)
    assert p.tolist() == [1.0]


def test_var_misuse_symmetry():
    fn = parse_function("def f(a, b, c):\n  return a\n")
    g = extract_graph(fn)
    vocab, model = setup([g])
    b = collate([encode_graph(g, vocab)])
    h = model.encode(b).detach().clone()
    var = [i for i, c in enumerate(g.candidates) if c.kind == "VarMisuse"]
    assert len(var) == 2
    h[g.candidates[var[0]].meta[0]] = h[g.candidates[var[1]].meta[0]]
    p = score_rewrites(model, h, b, int(b.cand_loc[var[0]]))
    assert p.shape == (2,) and math.isclose(float(p[0]), float(p[1]), rel_tol=1e-6)


def test_operator_score_matches_hand_computation():
    fn = parse_function("def f(a, b):\n  return a < b\n")
    g = extract_graph(fn)
    vocab = Vocabulary.build(n.label for n in g.nodes)
    model = BugModel(ModelConfig(vocab_size=len(vocab), hidden=3)).double()
    b = collate([encode_graph(g, vocab)])
    ids = node_location_map(fn)
    op_node = ids[(4, 1, 1, 2)]
    payloads = [c.payload for c in g.candidates if c.node_id == op_node]
    assert sorted(payloads) == sorted(["<=", ">", ">=", "==", "!="])
    r = [1.0, -2.0, 0.5]
    table = {"<=": [0.2, 0.1, 0.0], ">": [1.0, 0.0, 2.0], ">=": [0.0, -1.0, 0.0], "==": [0.3, 0.3, 0.3], "!=": [-1.0, 0.0, 4.0]}
    with torch.no_grad():
        for p, vec in table.items():
            model.op_embedding[OPERATOR_PAYLOADS.index(p)] = torch.tensor(vec, dtype=torch.float64)
    h = torch.zeros(b.num_nodes, 3, dtype=torch.float64)
    h[op_node] = torch.tensor(r, dtype=torch.float64)
    loc = [int(x) for x in b.loc_nodes].index(op_node)
    got = score_rewrites(model, h, b, loc).detach()
    # r.r_op worked out by hand
    by_payload = {"<=": 0.0, ">": 2.0, ">=": 2.0, "==": -0.15, "!=": 1.0}
    scores = [by_payload[p] for p in payloads]
    z = sum(math.exp(s) for s in scores)
    assert np.allclose(got.numpy(), [math.exp(s) / z for s in scores], atol=1e-12)


# -- losses -----------------------------------------------------------------

def _fake_prediction(joint, nobug):
    joint = torch.tensor(joint, dtype=torch.float64)
    nobug = torch.tensor(nobug, dtype=torch.float64)
    return Prediction(joint, nobug, joint * 0, joint, joint, nobug)


def test_perfect_prediction_has_zero_loss():
    unit = parse("def f(a, b):\n  return a < b\n")
    cf = CorpusFunction(unit, 0)
    buggy = cf.variant(cf.candidates[0])
    vocab, _ = setup([cf.clean_graph])
    b = collate([encode_graph(cf.clean_graph, vocab), encode_graph(buggy, vocab)])
    C = len(buggy.candidates)
    t = buggy.target_index()
    joint = [-50.0] * (2 * C)
    joint[C + t] = 0.0
    pred = _fake_prediction(joint, [0.0, -50.0])
    assert float(detector_loss(pred, b)) == 0.0


def test_uniform_location_loss():
    g = extract_graph(parse_function("def f(a, b):\n  x = a + b\n  return x < a\n"))
    vocab, model = setup([g])
    with torch.no_grad():
        model.loc_out.weight.zero_()
    b = collate([encode_graph(g, vocab)])
    n = len(b.loc_nodes)
    assert math.isclose(float(detector_loss(model(b), b).detach()), math.log(n + 1), rel_tol=1e-6)


def test_ground_truth_checks():
    g = corpus_graphs(1, 8)[0]
    vocab, model = setup([g])
    b = collate([encode_graph(g, vocab)])
    b.targets = torch.tensor([10_000])
    with pytest.raises(GroundTruthError):
        detector_loss(model(b), b)
    C = b.cand_offsets[-1]
    observed = torch.zeros(C + 1, dtype=torch.bool)
    observed[C] = True
    with pytest.raises(GroundTruthError):
        selector_loss(model(b), b, observed, torch.tensor([0]))


def test_selector_loss_ignores_unobserved():
    unit = parse("def f(a, b):\n  return a < b\n")
    g = CorpusFunction(unit, 0).clean_graph
    vocab, model = setup([g])
    b = collate([encode_graph(g, vocab)])
    pred = model(b)
    C = b.cand_offsets[-1]
    observed = torch.zeros(C + 1, dtype=torch.bool)
    observed[[0, 2]] = True
    loss = float(selector_loss(pred, b, observed, torch.tensor([2])).detach())
    j = pred.joint_logp.detach()
    expect = -(j[2] - torch.logsumexp(j[[0, 2]], 0))
    assert math.isclose(loss, float(expect), rel_tol=1e-5)


def _check_graphs():
    unit = parse(
        "def helper(x, y):\n  return x - y\n\n"
        "def caller(a, b):\n  total = 0\n  while a < b:\n    total += helper(a, b) * 2\n    a += 1\n"
        "  if total > 1 and not a:\n    return total\n  return -1\n"
    )
    cf = CorpusFunction(unit, 1)
    by_kind = {}
    for c in cf.candidates:
        by_kind.setdefault(c.kind, c)
    return [cf.clean_graph] + [cf.variant(c) for c in by_kind.values()]


def test_gradients_match_finite_differences():
    graphs = _check_graphs()
    assert len(graphs) >= 5
    vocab, model = setup(graphs, hidden=8, dtype=torch.float64)
    b = collate([encode_graph(g, vocab) for g in graphs])
    for obj in (detector_objective(b), selector_objective(b, torch.Generator().manual_seed(0))):
        results = directional_check(model, obj)
        assert {r.name for r in results} == {n for n, _ in model.named_parameters()}
        worst = max(results, key=lambda r: r.rel_error)
        assert worst.rel_error < 1e-4, worst


def test_every_parameter_receives_gradient():
    graphs = _check_graphs()
    vocab, model = setup(graphs, hidden=8, dtype=torch.float64)
    b = collate([encode_graph(g, vocab) for g in graphs])
    model.zero_grad()
    (detector_loss(model(b), b)).backward()
    missing = [n for n, p in model.named_parameters() if p.grad is None or float(p.grad.abs().sum()) == 0]
    assert missing == []


def test_gradient_check_detects_wrong_gradient():
    graphs = _check_graphs()
    vocab, model = setup(graphs, hidden=8, dtype=torch.float64)
    b = collate([encode_graph(g, vocab) for g in graphs])

    def skewed(m):
        # same value, gradient scaled by 1.1
        loss = detector_loss(m(b), b)
        return loss + 0.1 * (loss - loss.detach())

    worst = max(r.rel_error for r in directional_check(model, skewed))
    assert worst > 1e-2


# -- sampling ---------------------------------------------------------------

def test_epsilon_one_is_uniform():
    rng = random.Random(0)
    probs = [0.9, 0.05, 0.03, 0.01, 0.01]
    n = 10_000
    counts = Counter(sample_rewrite(probs, 1.0, rng) for _ in range(n))
    p = 1 / len(probs)
    sigma = math.sqrt(n * p * (1 - p))
    assert all(abs(counts[i] - n * p) < 3 * sigma for i in range(len(probs)))


def test_one_hot_always_chosen():
    rng = random.Random(1)
    assert {sample_rewrite([0.0, 0.0, 1.0, 0.0], 0.0, rng) for _ in range(500)} == {2}


def test_sampling_seeded():
    probs = [0.2, 0.3, 0.5]
    r1, r2 = random.Random(9), random.Random(9)
    assert [sample_rewrite(probs, 0.1, r1) for _ in range(200)] == [sample_rewrite(probs, 0.1, r2) for _ in range(200)]
    with pytest.raises(EmptyCandidatesError):
        sample_rewrite([], 0.5, random.Random(0))


# -- optimization -----------------------------------------------------------

def test_warmup_rate():
    cfg = OptimizerConfig()
    assert (cfg.lr, cfg.warmup, cfg.clip) == (1e-4, 800, 0.5)
    assert math.isclose(learning_rate(400, cfg), 0.5e-4)
    assert learning_rate(800, cfg) == learning_rate(5000, cfg) == 1e-4


def _tiny():
    torch.manual_seed(0)
    return BugModel(ModelConfig(vocab_size=10, hidden=4, layers=4))


def test_clipping_scales_norm_five_by_tenth():
    model = _tiny()
    opt = make_optimizer(model, OptimizerConfig())
    params = list(model.parameters())
    total = sum(p.numel() for p in params)
    for p in params:
        p.grad = torch.full_like(p, 5.0 / math.sqrt(total))
    before = [p.grad.clone() for p in params]
    norm = optimizer_step(model, opt, 1, OptimizerConfig())
    assert math.isclose(norm, 5.0, rel_tol=1e-5)
    for p, g in zip(params, before):
        assert torch.allclose(p.grad, 0.1 * g, rtol=1e-5)
    assert opt.param_groups[0]["lr"] == learning_rate(1, OptimizerConfig())


def test_zero_gradients_leave_parameters():
    model = _tiny()
    opt = make_optimizer(model, OptimizerConfig())
    before = {n: p.detach().clone() for n, p in model.named_parameters()}
    for p in model.parameters():
        p.grad = torch.zeros_like(p)
    optimizer_step(model, opt, 100, OptimizerConfig())
    assert all(torch.equal(p, before[n]) for n, p in model.named_parameters())


def test_non_finite_gradient_reported():
    model = _tiny()
    opt = make_optimizer(model, OptimizerConfig())
    before = {n: p.detach().clone() for n, p in model.named_parameters()}
    for p in model.parameters():
        p.grad = torch.zeros_like(p)
    model.nobug.grad[0] = float("nan")
    with pytest.raises(NonFiniteGradientError) as err:
        optimizer_step(model, opt, 1, OptimizerConfig())
    assert err.value.parameter == "nobug"
    assert all(torch.equal(p, before[n]) for n, p in model.named_parameters())


# -- checkpoints and prediction ---------------------------------------------

def test_checkpoint_round_trip(tmp_path):
    graphs = corpus_graphs(4, 9)
    vocab, model = setup(graphs)
    path = tmp_path / "m.npz"
    save_checkpoint(path, {"detector": model}, {"note": 1})
    models, extra = load_checkpoint(path)
    assert extra == {"note": 1}
    enc = [encode_graph(g, vocab) for g in graphs]
    a, b = predict_graphs(model, enc), predict_graphs(models["detector"], enc)
    assert all(np.array_equal(x.candidates, y.candidates) and x.nobug == y.nobug for x, y in zip(a, b))
    for x in a:
        assert math.isclose(x.nobug + float(x.candidates.sum()), 1.0, abs_tol=1e-5)


def test_checkpoint_mismatch(tmp_path):
    import json

    model = _tiny()
    path = tmp_path / "m.npz"
    save_checkpoint(path, {"detector": model})
    with np.load(path) as data:
        arrays = {k: data[k] for k in data.files}
    meta = json.loads(bytes(arrays["__meta__"]).decode())
    meta["models"]["detector"]["hidden"] = 8
    arrays["__meta__"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    np.savez(tmp_path / "bad.npz", **arrays)
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "bad.npz")
    del arrays["__meta__"]
    np.savez(tmp_path / "nometa.npz", **arrays)
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "nometa.npz")
