"""Acceptance suite: eight end-to-end criteria over the bundled synthetic
corpus and independent brute-force oracles. Each test prints exactly one
PASS/FAIL line (run with `pytest tests/test_acceptance.py -s` to see them
on success).
"""

import itertools
import math
import statistics
import time

import numpy as np
import pytest

from tpselect.config import DEFAULT_SWEEP_GRID, RunConfig, save_config
from tpselect.corpus import build_index
from tpselect.evaluation import evaluate_policy, ndcg, average_precision, proportion_curve
from tpselect.neural import NetConfig, forward, gradient_check, train
from tpselect.pipeline import REPORT_COLUMNS, MEASURED_COLUMNS, run_pipeline
from tpselect.rankers import (
    Bm25Params,
    BlendParams,
    MrfParams,
    RANKER_KINDS,
    score_bm25,
    score_bm25tp,
    score_exp,
    score_mrf,
)
from tpselect.selector import (
    HIDDEN_NODES,
    MOMENTUM,
    QUERY_LENGTHS,
    label_queries,
    split_train_test,
    train_selector,
)
from tpselect.synth import make_synthetic, write_synthetic


def _report(criterion, passed, detail):
    print(f"\n[acceptance] criterion {criterion}: "
          f"{'PASS' if passed else 'FAIL'} - {detail}")
    assert passed, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def corpus_data():
    documents, queries, qrels = make_synthetic()
    index = build_index(documents)
    from tpselect.corpus import normalize

    parsed = [(qid, normalize(text)) for qid, text in queries]
    return documents, index, parsed, qrels


@pytest.fixture(scope="module")
def labeled_by_ranker(corpus_data):
    _, index, queries, qrels = corpus_data
    return {kind: label_queries(index, queries, qrels, kind)
            for kind in RANKER_KINDS}


@pytest.fixture(scope="module")
def policy_maps(corpus_data, labeled_by_ranker):
    """(ranker -> policy -> MAP) over the full query set."""
    _, index, queries, qrels = corpus_data
    maps = {}
    for kind in RANKER_KINDS:
        labels = {lq.query_id: lq.label for lq in labeled_by_ranker[kind]}
        maps[kind] = {
            policy: evaluate_policy(index, queries, qrels, kind, policy,
                                    labels=labels).map
            for policy in ("tpNo", "tpAll", "oracle")
        }
    return maps


def test_criterion_1_oracle_dominance():
    started = time.perf_counter()
    documents, queries, qrels = make_synthetic()
    index = build_index(documents)
    from tpselect.corpus import normalize

    parsed = [(qid, normalize(text)) for qid, text in queries]

    ok = len(documents) >= 200 and len(parsed) >= 60
    lengths = {len(terms) for _, terms in parsed}
    ok = ok and lengths == set(QUERY_LENGTHS)

    details = []
    for kind in RANKER_KINDS:
        labeled = label_queries(index, parsed, qrels, kind)
        labels = {lq.query_id: lq.label for lq in labeled}
        maps = {policy: evaluate_policy(index, parsed, qrels, kind, policy,
                                        labels=labels).map
                for policy in ("tpNo", "tpAll", "oracle")}
        ok = ok and maps["oracle"] >= max(maps["tpAll"], maps["tpNo"])
        details.append(f"{kind} oracle={maps['oracle']:.4f} "
                       f"tpAll={maps['tpAll']:.4f} tpNo={maps['tpNo']:.4f}")
    elapsed = time.perf_counter() - started
    ok = ok and elapsed < 30.0
    _report(1, ok, f"oracle MAP dominates per ranker "
                   f"({'; '.join(details)}) in {elapsed:.1f}s "
                   f"on {len(documents)} docs / {len(parsed)} queries")


def test_criterion_2_tp_usefulness(labeled_by_ranker, policy_maps):
    ok = True
    details = []
    for kind in RANKER_KINDS:
        labeled = labeled_by_ranker[kind]
        helped = sum(lq.ap_tp > lq.ap_base for lq in labeled)
        hurt = sum(lq.ap_tp < lq.ap_base for lq in labeled)
        ok = ok and helped >= 1 and hurt >= 1

        curve = proportion_curve([(lq.ap_base, lq.ap_tp) for lq in labeled])
        maps = policy_maps[kind]
        ok = ok and abs(curve[0][1] - maps["tpNo"]) < 1e-12
        ok = ok and abs(curve[-1][1] - maps["tpAll"]) < 1e-12
        curve_max = max(v for _, v in curve)
        ok = ok and abs(curve_max - maps["oracle"]) < 1e-12
        details.append(f"{kind}: {helped} helped / {hurt} hurt, "
                       f"curve max {curve_max:.4f}")
    _report(2, ok, f"proximity helps and hurts; curve endpoints/max match "
                   f"policy MAPs to 1e-12 ({'; '.join(details)})")


def test_criterion_3_selective_quality(corpus_data, labeled_by_ranker):
    _, index, _, qrels = corpus_data
    ok = True
    details = []
    for kind in RANKER_KINDS:
        train_set, test_set = split_train_test(labeled_by_ranker[kind], 0.7, seed=0)
        model = train_selector(train_set, kind, seed=0)
        test_queries = [(lq.query_id, lq.terms) for lq in test_set]

        tp_s = evaluate_policy(index, test_queries, qrels, kind, "tpS", model=model)
        tp_no = evaluate_policy(index, test_queries, qrels, kind, "tpNo")
        ok = ok and tp_s.map >= tp_no.map

        tps_qps = statistics.median(
            evaluate_policy(index, test_queries, qrels, kind, "tpS",
                            model=model).throughput_qps
            for _ in range(5))
        tpall_qps = statistics.median(
            evaluate_policy(index, test_queries, qrels, kind,
                            "tpAll").throughput_qps
            for _ in range(5))
        ok = ok and tps_qps >= 0.9 * tpall_qps
        details.append(f"{kind}: MAP tpS={tp_s.map:.4f} >= tpNo={tp_no.map:.4f}, "
                       f"qps tpS={tps_qps:.0f} vs tpAll={tpall_qps:.0f}")
    _report(3, ok, f"selective policy beats tpNo and keeps >=90% of tpAll "
                   f"throughput ({'; '.join(details)})")


# --- criterion 4: independent scoring oracles over a toy corpus -----------

TOY_TEXTS = {
    1: "alpha beta gamma pad pad alpha pad beta pad pad",
    2: "alpha pad pad pad beta pad pad gamma alpha beta",
    3: "beta alpha pad gamma pad pad pad alpha pad pad",
    4: "pad pad pad alpha pad pad beta pad gamma pad",
}
TOY_TOKENS = {d: t.split() for d, t in TOY_TEXTS.items()}


def _toy_positions(doc_id, term):
    return [i + 1 for i, tok in enumerate(TOY_TOKENS[doc_id]) if tok == term]


def _toy_idf(term):
    n = len(TOY_TOKENS)
    df = sum(1 for d in TOY_TOKENS if term in TOY_TOKENS[d])
    return math.log(1.0 + (n - df + 0.5) / (df + 0.5))


def _toy_norm(doc_id, k1=1.2, b=0.75):
    avg = sum(len(t) for t in TOY_TOKENS.values()) / len(TOY_TOKENS)
    return k1 * (1 - b + b * len(TOY_TOKENS[doc_id]) / avg)


def _toy_bm25(doc_id, terms, k1=1.2, b=0.75):
    total = 0.0
    for t in terms:
        f = len(_toy_positions(doc_id, t))
        if f:
            total += _toy_idf(t) * f * (k1 + 1) / (f + _toy_norm(doc_id, k1, b))
    return total


def _toy_tpi(doc_id, t, s):
    total = 0.0
    for p in _toy_positions(doc_id, t):
        preceding = [q for q in _toy_positions(doc_id, s) if q < p]
        if preceding:
            total += (p - max(preceding)) ** -2
    return total


def _toy_bm25tp(doc_id, terms, beta=0.5, k1=1.2, b=0.75):
    tp = 0.0
    norm = _toy_norm(doc_id, k1, b)
    for t in terms:
        acc = sum(_toy_idf(t) * _toy_tpi(doc_id, t, s) for s in terms if s != t)
        if acc:
            tp += min(1.0, _toy_idf(t)) * acc * (k1 + 1) / (acc + norm)
    return beta * tp + (1 - beta) * _toy_bm25(doc_id, terms, k1, b)


def _toy_min_dist(doc_id, terms):
    best = math.inf
    for t, s in itertools.combinations(terms, 2):
        for p in _toy_positions(doc_id, t):
            for q in _toy_positions(doc_id, s):
                best = min(best, abs(p - q))
    return best


def _toy_exp(doc_id, terms, epsilon=0.5, alpha=0.3):
    md = _toy_min_dist(doc_id, terms)
    tp = math.log(alpha + (0.0 if math.isinf(md) else math.exp(-md)))
    return epsilon * tp + (1 - epsilon) * _toy_bm25(doc_id, terms)


def _toy_mrf(doc_id, terms, lams=(0.85, 0.10, 0.05), window=8, mu=2500.0):
    coll_len = sum(len(t) for t in TOY_TOKENS.values())
    doc_len = len(TOY_TOKENS[doc_id])

    def smoothed(count, coll_count):
        cf = coll_count if coll_count > 0 else 0.5
        return math.log((count + mu * cf / coll_len) / (doc_len + mu))

    def ordered(d, a, b):
        return sum(1 for p in _toy_positions(d, a)
                   if p + 1 in _toy_positions(d, b))

    def windowed(d, a, b):
        return sum(1 for p in _toy_positions(d, a)
                   for q in _toy_positions(d, b) if abs(p - q) <= window - 1)

    score = 0.0
    for t in terms:
        coll_count = sum(len(_toy_positions(d, t)) for d in TOY_TOKENS)
        score += lams[0] * smoothed(len(_toy_positions(doc_id, t)), coll_count)
    for a, b in zip(terms, terms[1:]):
        coll_o = sum(ordered(d, a, b) for d in TOY_TOKENS)
        coll_u = sum(windowed(d, a, b) for d in TOY_TOKENS)
        score += lams[1] * smoothed(ordered(doc_id, a, b), coll_o)
        score += lams[2] * smoothed(windowed(doc_id, a, b), coll_u)
    return score


def test_criterion_4_scoring_oracles():
    index = build_index(sorted(TOY_TEXTS.items()), use_stemming=False)
    terms = ["alpha", "beta", "gamma"]
    worst = 0.0

    for ranked, oracle in (
        (score_bm25(index, terms), _toy_bm25),
        (score_bm25tp(index, terms), _toy_bm25tp),
        (score_exp(index, terms), _toy_exp),
        (score_mrf(index, terms), _toy_mrf),
    ):
        assert ranked.doc_ids(), "toy candidates must be non-empty"
        for doc_id, score in ranked.entries:
            worst = max(worst, abs(score - oracle(doc_id, terms)))

    # pair of terms exercises the two-term paths too
    for ranked, oracle in (
        (score_bm25tp(index, ["beta", "alpha"]), _toy_bm25tp),
        (score_exp(index, ["gamma", "beta"]), _toy_exp),
        (score_mrf(index, ["alpha", "gamma"]), _toy_mrf),
    ):
        for doc_id, score in ranked.entries:
            q = {id(_toy_bm25tp): ["beta", "alpha"],
                 id(_toy_exp): ["gamma", "beta"],
                 id(_toy_mrf): ["alpha", "gamma"]}[id(oracle)]
            worst = max(worst, abs(score - oracle(doc_id, q)))

    _report(4, worst < 1e-9,
            f"BM25/BM25TP/EXP/MRF match brute-force oracles "
            f"(worst abs diff {worst:.2e} < 1e-9)")


def test_criterion_5_metric_oracles():
    def ap_oracle(ranking, relevant):
        hits, total = 0, 0.0
        for i, d in enumerate(ranking, start=1):
            if d in relevant:
                hits += 1
                total += hits / i
        return total / len(relevant)

    def ndcg_oracle(ranking, grades, cutoff=10):
        def gain(seq):
            return sum((2 ** g - 1) / math.log2(i + 2)
                       for i, g in enumerate(seq[:cutoff]))

        ideal = gain(sorted(grades.values(), reverse=True))
        return gain([grades.get(d, 0) for d in ranking]) / ideal if ideal else 0.0

    docs = ["a", "b", "c", "d", "e", "f"]
    relevant = {"a", "c", "f"}
    grades = {"a": 3, "b": 0, "c": 1, "d": 2, "e": 0, "f": 1}
    worst = 0.0
    checked = 0
    for perm in itertools.permutations(docs):
        ranking = list(perm)
        worst = max(worst,
                    abs(average_precision(ranking, relevant)
                        - ap_oracle(ranking, relevant)),
                    abs(ndcg(ranking, grades) - ndcg_oracle(ranking, grades)))
        checked += 1
    _report(5, worst < 1e-12,
            f"AP and NDCG match brute force on all {checked} permutations "
            f"of 6 docs (worst abs diff {worst:.2e} < 1e-12)")


def test_criterion_6_neural_correctness():
    from tpselect.neural import NeuralNet

    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        net = NeuralNet(
            w1=rng.normal(size=(4, 3)), b1=rng.normal(size=4),
            w2=rng.normal(size=4), b2=float(rng.normal()),
            input_mean=rng.normal(size=3),
            input_std=np.abs(rng.normal(size=3)) + 0.5,
        )
        samples = [(rng.normal(size=3), float(i % 2)) for i in range(10)]
        worst = max(worst, gradient_check(net, samples, pos_class_weight=2.0))

    rng = np.random.default_rng(0)
    pos = rng.normal(loc=1.5, scale=0.4, size=(25, 2))
    neg = rng.normal(loc=-1.5, scale=0.4, size=(25, 2))
    samples = [(p, 1.0) for p in pos] + [(n, 0.0) for n in neg]
    config = NetConfig(num_inputs=2, num_hidden=5, learning_rate=0.01,
                       max_iterations=1000, momentum=0.9, seed=0)
    net, log = train(config, samples)
    predictions = [(forward(net, x) >= 0.5, y == 1.0) for x, y in samples]
    accuracy = sum(p == t for p, t in predictions) / len(samples)
    recall = (sum(p for p, t in predictions if t)
              / sum(1 for _, t in predictions if t))

    ok = worst < 1e-6 and accuracy == 1.0 and recall == 1.0 and len(log) <= 1000
    _report(6, ok, f"gradient check worst {worst:.2e} < 1e-6 over 20 nets; "
                   f"separable-set accuracy {accuracy:.2f} and label-1 recall "
                   f"{recall:.2f} within {len(log)} iterations at lr 0.01")


def test_criterion_7_default_constants():
    config = RunConfig()
    ok = (config.alpha == 0.3
          and config.learning_rate == 0.01
          and config.max_iterations == 1000
          and config.train_fraction == 0.7
          and config.sweep_grid == tuple(round(0.1 * i, 1) for i in range(1, 10))
          and DEFAULT_SWEEP_GRID == config.sweep_grid
          and config.hidden_nodes == dict(HIDDEN_NODES)
          and config.momentum == dict(MOMENTUM))
    expected_hidden = {
        ("exp", 3): 43, ("exp", 4): 58, ("exp", 5): 47,
        ("mrf", 3): 45, ("mrf", 4): 39, ("mrf", 5): 47,
        ("bm25tp", 3): 52, ("bm25tp", 4): 10, ("bm25tp", 5): 20,
    }
    expected_momentum = {
        ("exp", 3): 1.0, ("exp", 4): 0.85, ("exp", 5): 0.85,
        ("mrf", 3): 0.35, ("mrf", 4): 0.9, ("mrf", 5): 0.85,
        ("bm25tp", 3): 0.95, ("bm25tp", 4): 0.25, ("bm25tp", 5): 0.75,
    }
    ok = ok and config.hidden_nodes == expected_hidden
    ok = ok and config.momentum == expected_momentum
    _report(7, ok, "default config carries alpha 0.3, lr 0.01, 1000 iterations, "
                   "70/30 split, 0.1-0.9 grid, and the per-length net defaults")


def _pipeline_outputs(root, seed_dir):
    out = root / seed_dir
    out.mkdir()
    corpus = root / "corpus.tsv"
    config = RunConfig(
        corpus_path=str(corpus),
        queries_path=str(root / "queries.tsv"),
        qrels_path=str(root / "qrels.txt"),
        model_dir=str(out / "models"),
        report_dir=str(out / "reports"),
    )
    result = run_pipeline(config)
    return result.files


def _strip_measured(report_path):
    lines = open(report_path).read().splitlines()
    header = lines[0].split("\t")
    keep = [i for i, col in enumerate(header) if col not in MEASURED_COLUMNS]
    return "\n".join("\t".join(line.split("\t")[i] for i in keep)
                     for line in lines)


def test_criterion_8_determinism(tmp_path):
    write_synthetic(tmp_path / "corpus.tsv", tmp_path / "queries.tsv",
                    tmp_path / "qrels.txt")
    files_a = _pipeline_outputs(tmp_path, "run_a")
    files_b = _pipeline_outputs(tmp_path, "run_b")

    ok = len(files_a) == len(files_b)
    compared = 0
    for a, b in zip(files_a, files_b):
        if a.endswith("_report.tsv"):
            ok = ok and _strip_measured(a) == _strip_measured(b)
        else:
            ok = ok and open(a, "rb").read() == open(b, "rb").read()
        compared += 1
    _report(8, ok, f"two same-seed pipeline runs byte-identical across "
                   f"{compared} output files (throughput column excluded)")
