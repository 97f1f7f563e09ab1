"""HTTP service wrapping the ranking pipeline.

Endpoints mirror the pipeline stages: build an index, run ad-hoc searches
with routing, label queries, score features, train routers, evaluate
policies, sweep blend parameters, and run the whole protocol. Request and
response bodies are pydantic models; errors surface as HTTP 400 with the
failing stage named.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import corpus as corpus_mod
from .config import load_config
from .corpus import IndexFormatError, build_index, load_index, read_corpus_file, save_index
from .neural import load_net
from .pipeline import (POLICIES, label_stage, load_or_build_index,
                       load_queries_as_terms, run_pipeline, sweep_blend,
                       feature_selection_stage, report_dir_for)
from .features import FEATURE_MASKS, read_feature_file, write_feature_file
from .rankers import RANKER_KINDS, score_query
from .selector import SelectorModel, read_qrels_file, split_train_test, train_selector
from .evaluation import evaluate_policy

app = FastAPI(title="tpselect", description="Selective term-proximity ranking service")


def _fail(stage, exc):
    raise HTTPException(status_code=400, detail=f"{stage}: {exc}") from exc


def _load_config(path):
    try:
        return load_config(path)
    except (OSError, ValueError) as exc:
        _fail("config", exc)


class HealthResponse(BaseModel):
    status: str = "ok"


@app.get("/health", response_model=HealthResponse)
def health():
    return HealthResponse()


class IndexRequest(BaseModel):
    corpus_path: str
    index_path: str
    use_stemming: bool = True


class IndexResponse(BaseModel):
    doc_count: int
    avg_doc_length: float
    vocabulary_size: int
    index_path: str


@app.post("/index", response_model=IndexResponse)
def index_endpoint(request: IndexRequest):
    try:
        documents = read_corpus_file(request.corpus_path)
        index = build_index(documents, request.use_stemming)
        save_index(index, request.index_path)
    except (OSError, ValueError) as exc:
        _fail("index", exc)
    return IndexResponse(
        doc_count=index.doc_count,
        avg_doc_length=index.avg_doc_length,
        vocabulary_size=len(index.postings),
        index_path=request.index_path,
    )


class SearchRequest(BaseModel):
    index_path: str
    query: str
    k: int = Field(default=10, ge=1)
    ranker_kind: str = "exp"
    model_dir: str | None = None
    use_stemming: bool = True
    threshold: float = 0.5
    epsilon: float = 0.5
    beta: float = 0.5
    alpha: float = 0.3


class SearchHit(BaseModel):
    doc_id: int
    score: float


class SearchResponse(BaseModel):
    decision: str
    probability: float | None
    results: list[SearchHit]


def load_selector_model(model_dir, ranker_kind, threshold=0.5, lengths=(3, 4, 5)):
    nets = {}
    for length in lengths:
        path = os.path.join(model_dir, f"{ranker_kind}_len{length}.net")
        if os.path.exists(path):
            nets[length] = load_net(path)
    if not nets:
        raise FileNotFoundError(f"no {ranker_kind} networks found in {model_dir}")
    return SelectorModel(ranker_kind=ranker_kind, nets=nets,
                         feature_mask=FEATURE_MASKS[ranker_kind], threshold=threshold)


@app.post("/search", response_model=SearchResponse)
def search_endpoint(request: SearchRequest):
    if request.ranker_kind not in RANKER_KINDS:
        _fail("search", ValueError(f"unknown ranker kind {request.ranker_kind!r}"))
    try:
        index = load_index(request.index_path)
    except (OSError, IndexFormatError) as exc:
        _fail("search", exc)
    terms = corpus_mod.normalize(request.query, request.use_stemming)
    if not terms:
        _fail("search", ValueError("query has no terms after normalization"))

    decision, probability = "BASE", None
    if request.model_dir:
        try:
            model = load_selector_model(request.model_dir, request.ranker_kind,
                                        request.threshold)
        except (OSError, ValueError) as exc:
            _fail("search", exc)
        decision, probability = model.route(index, terms)

    from .rankers import BlendParams
    blend = BlendParams(request.epsilon, request.beta, request.alpha)
    ranked = score_query(index, terms, request.ranker_kind, decision == "TP",
                         blend=blend)
    hits = [SearchHit(doc_id=d, score=s) for d, s in ranked.entries[: request.k]]
    return SearchResponse(decision=decision, probability=probability, results=hits)


class LabelRequest(BaseModel):
    config_path: str
    ranker_kind: str | None = None
    output_path: str | None = None


class LabelResponse(BaseModel):
    num_labeled: int
    num_positive: int
    labeled_path: str


@app.post("/label", response_model=LabelResponse)
def label_endpoint(request: LabelRequest):
    config = _load_config(request.config_path)
    ranker_kind = request.ranker_kind or config.ranker_kind
    try:
        index = load_or_build_index(config)
        labeled = label_stage(index, config, ranker_kind)
        out = request.output_path or os.path.join(
            report_dir_for(config), f"{ranker_kind}_labeled.tsv")
        os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
        write_feature_file([lq.features for lq in labeled], out)
    except (OSError, ValueError, KeyError) as exc:
        _fail("label", exc)
    return LabelResponse(
        num_labeled=len(labeled),
        num_positive=sum(lq.label for lq in labeled),
        labeled_path=out,
    )


class FeatSelectRequest(BaseModel):
    config_path: str
    ranker_kind: str | None = None
    output_path: str | None = None


class FeatSelectResponse(BaseModel):
    scores_path: str
    ranking: list[str]


@app.post("/featselect", response_model=FeatSelectResponse)
def featselect_endpoint(request: FeatSelectRequest):
    from .featselect import combined_ranking

    config = _load_config(request.config_path)
    ranker_kind = request.ranker_kind or config.ranker_kind
    try:
        index = load_or_build_index(config)
        labeled = label_stage(index, config, ranker_kind)
        out = request.output_path or os.path.join(
            report_dir_for(config), f"{ranker_kind}_feature_scores.tsv")
        os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
        table = feature_selection_stage(labeled, out, seed=config.seed)
    except (OSError, ValueError, KeyError) as exc:
        _fail("featselect", exc)
    return FeatSelectResponse(scores_path=out, ranking=combined_ranking(table))


class TrainRequest(BaseModel):
    config_path: str
    ranker_kind: str | None = None


class TrainResponse(BaseModel):
    model_paths: dict[int, str]
    train_size: int
    test_size: int


@app.post("/train", response_model=TrainResponse)
def train_endpoint(request: TrainRequest):
    from .neural import save_net

    config = _load_config(request.config_path)
    ranker_kind = request.ranker_kind or config.ranker_kind
    if not config.model_dir:
        _fail("train", ValueError("config has no model_dir"))
    try:
        index = load_or_build_index(config)
        labeled = label_stage(index, config, ranker_kind)
        train_set, test_set = split_train_test(labeled, config.train_fraction, config.seed)
        model = train_selector(
            train_set, ranker_kind,
            lengths=config.lengths,
            learning_rate=config.learning_rate,
            max_iterations=config.max_iterations,
            pos_class_weight=config.pos_class_weight,
            seed=config.seed,
            threshold=config.threshold,
            hidden_overrides={ln: config.hidden_nodes[(ranker_kind, ln)]
                              for ln in config.lengths},
            momentum_overrides={ln: config.momentum[(ranker_kind, ln)]
                                for ln in config.lengths},
        )
        os.makedirs(config.model_dir, exist_ok=True)
        paths = {}
        for length, net in model.nets.items():
            path = os.path.join(config.model_dir, f"{ranker_kind}_len{length}.net")
            save_net(net, path)
            paths[length] = path
    except (OSError, ValueError, KeyError) as exc:
        _fail("train", exc)
    return TrainResponse(model_paths=paths, train_size=len(train_set),
                         test_size=len(test_set))


class EvaluateRequest(BaseModel):
    config_path: str
    ranker_kind: str | None = None
    policy: str = "tpNo"


class PolicyMetrics(BaseModel):
    policy: str
    num_queries: int
    map: float
    mean_ndcg: float
    p_at_1: float
    p_at_3: float
    p_at_10: float
    tp_query_count: int
    throughput_qps: float


@app.post("/evaluate", response_model=PolicyMetrics)
def evaluate_endpoint(request: EvaluateRequest):
    if request.policy not in POLICIES:
        _fail("evaluate", ValueError(f"unknown policy {request.policy!r}"))
    config = _load_config(request.config_path)
    ranker_kind = request.ranker_kind or config.ranker_kind
    try:
        index = load_or_build_index(config)
        qrels = read_qrels_file(config.qrels_path)
        queries = [(qid, terms) for qid, terms in load_queries_as_terms(config)
                   if any(g >= 1 for g in qrels.get(qid, {}).values())]
        model = None
        labels = None
        if request.policy == "tpS":
            model = load_selector_model(config.model_dir, ranker_kind,
                                        config.threshold, config.lengths)
        elif request.policy == "oracle":
            labeled = label_stage(index, config, ranker_kind)
            labels = {lq.query_id: lq.label for lq in labeled}
            queries = [(lq.query_id, lq.terms) for lq in labeled]
        report = evaluate_policy(
            index, queries, qrels, ranker_kind, request.policy,
            bm25_params=config.bm25_params(), blend=config.blend_params(),
            mrf_params=config.mrf_params(), model=model, labels=labels)
    except (OSError, ValueError, KeyError) as exc:
        _fail("evaluate", exc)
    return PolicyMetrics(
        policy=report.policy, num_queries=report.num_queries, map=report.map,
        mean_ndcg=report.mean_ndcg, p_at_1=report.p_at[1], p_at_3=report.p_at[3],
        p_at_10=report.p_at[10], tp_query_count=report.tp_query_count,
        throughput_qps=report.throughput_qps)


class SweepRequest(BaseModel):
    config_path: str
    ranker_kind: str | None = None
    grid: list[float] | None = None


class SweepResponse(BaseModel):
    best_value: float
    map_by_value: dict[float, float]


@app.post("/sweep", response_model=SweepResponse)
def sweep_endpoint(request: SweepRequest):
    config = _load_config(request.config_path)
    try:
        best, table = sweep_blend(config, grid=request.grid,
                                  ranker_kind=request.ranker_kind)
    except (OSError, ValueError, KeyError) as exc:
        _fail("sweep", exc)
    return SweepResponse(best_value=best, map_by_value=table)


class PipelineRequest(BaseModel):
    config_path: str
    ranker_kind: str | None = None


class PipelineResponse(BaseModel):
    ranker_kind: str
    num_labeled: int
    num_positive: int
    test_size: int
    files: list[str]
    map_by_policy: dict[str, float]


@app.post("/pipeline", response_model=PipelineResponse)
def pipeline_endpoint(request: PipelineRequest):
    config = _load_config(request.config_path)
    try:
        result = run_pipeline(config, ranker_kind=request.ranker_kind)
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        _fail("pipeline", exc)
    return PipelineResponse(
        ranker_kind=result.ranker_kind,
        num_labeled=result.num_labeled,
        num_positive=result.num_positive,
        test_size=result.test_size,
        files=result.files,
        map_by_policy={policy: result.reports[(policy, "all")].map
                       for policy in POLICIES},
    )
