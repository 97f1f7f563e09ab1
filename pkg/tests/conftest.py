import pytest

from tpselect.config import RunConfig, save_config
from tpselect.corpus import build_index, normalize
from tpselect.synth import make_synthetic, write_synthetic


@pytest.fixture(scope="session")
def synthetic():
    """(documents, queries, qrels) for the bundled desk-scale corpus."""
    return make_synthetic()


@pytest.fixture(scope="session")
def synthetic_index(synthetic):
    documents, _, _ = synthetic
    return build_index(documents)


@pytest.fixture(scope="session")
def synthetic_queries(synthetic):
    _, queries, _ = synthetic
    return [(qid, normalize(text)) for qid, text in queries]


@pytest.fixture(scope="session")
def synthetic_qrels(synthetic):
    _, _, qrels = synthetic
    return qrels


@pytest.fixture(scope="session")
def workspace(tmp_path_factory):
    """On-disk corpus/queries/qrels plus a ready-to-run config file.

    max_iterations is reduced to keep service/CLI round trips fast; the
    synthetic labels are separable well before 1000 iterations.
    """
    root = tmp_path_factory.mktemp("workspace")
    corpus = root / "corpus.tsv"
    queries = root / "queries.tsv"
    qrels = root / "qrels.txt"
    write_synthetic(corpus, queries, qrels)
    config = RunConfig(
        corpus_path=str(corpus),
        index_path=str(root / "corpus.idx"),
        queries_path=str(queries),
        qrels_path=str(qrels),
        model_dir=str(root / "models"),
        report_dir=str(root / "reports"),
        max_iterations=200,
    )
    config_path = root / "run.conf"
    save_config(config, config_path)
    return root, config, str(config_path)
