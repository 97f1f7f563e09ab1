"""Run configuration: line-oriented `key = value` text with one section per
module, defaults pre-filled so a bare config reproduces the standard
protocol (alpha 0.3, learning rate 0.01, 1000 iterations, 70/30 split,
blend grid 0.1..0.9, per-length network defaults)."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

from .rankers import Bm25Params, BlendParams, MrfParams, RANKER_KINDS
from .selector import HIDDEN_NODES, MOMENTUM, QUERY_LENGTHS

DEFAULT_SWEEP_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))


@dataclass
class RunConfig:
    # paths
    corpus_path: str = ""
    index_path: str = ""
    queries_path: str = ""
    qrels_path: str = ""
    model_dir: str = ""
    report_dir: str = ""
    # corpus
    use_stemming: bool = True
    # rankers
    ranker_kind: str = "exp"
    k1: float = 1.2
    b: float = 0.75
    epsilon: float = 0.5
    beta: float = 0.5
    alpha: float = 0.3
    lambda_t: float = 0.85
    lambda_o: float = 0.10
    lambda_u: float = 0.05
    window_size: int = 8
    mu: float = 2500.0
    # selector / training
    train_fraction: float = 0.7
    threshold: float = 0.5
    lengths: tuple = QUERY_LENGTHS
    learning_rate: float = 0.01
    max_iterations: int = 1000
    pos_class_weight: float = 2.0
    seed: int = 7
    hidden_nodes: dict = field(default_factory=lambda: dict(HIDDEN_NODES))
    momentum: dict = field(default_factory=lambda: dict(MOMENTUM))
    # sweep
    sweep_grid: tuple = DEFAULT_SWEEP_GRID

    def __post_init__(self):
        if self.ranker_kind not in RANKER_KINDS:
            raise ValueError(f"unknown ranker kind {self.ranker_kind!r}")

    def bm25_params(self):
        return Bm25Params(self.k1, self.b)

    def blend_params(self):
        return BlendParams(self.epsilon, self.beta, self.alpha)

    def mrf_params(self):
        return MrfParams(self.lambda_t, self.lambda_o, self.lambda_u,
                         self.window_size, self.mu)


_PATH_KEYS = ("corpus_path", "index_path", "queries_path", "qrels_path",
              "model_dir", "report_dir")
_SECTIONS = {
    "paths": _PATH_KEYS,
    "corpus": ("use_stemming",),
    "rankers": ("ranker_kind", "k1", "b", "epsilon", "beta", "alpha",
                "lambda_t", "lambda_o", "lambda_u", "window_size", "mu"),
    "selector": ("train_fraction", "threshold", "lengths"),
    "net": ("learning_rate", "max_iterations", "pos_class_weight", "seed"),
    "sweep": ("sweep_grid",),
}


def serialize_config(config):
    lines = []
    for section, keys in _SECTIONS.items():
        lines.append(f"[{section}]")
        for key in keys:
            value = getattr(config, key)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            lines.append(f"{key} = {value}")
        lines.append("")
    for kind in RANKER_KINDS:
        lines.append(f"[net.{kind}]")
        for length in config.lengths:
            lines.append(f"hidden_{length} = {config.hidden_nodes[(kind, length)]}")
            lines.append(f"momentum_{length} = {config.momentum[(kind, length)]}")
        lines.append("")
    return "\n".join(lines)


_BOOL_KEYS = {"use_stemming"}
_INT_KEYS = {"window_size", "max_iterations", "seed"}
_STR_KEYS = set(_PATH_KEYS) | {"ranker_kind"}


def _parse_value(key, raw):
    if key in _STR_KEYS:
        return raw
    if key in _BOOL_KEYS:
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"bad boolean for {key}: {raw!r}")
    if key == "lengths":
        return tuple(int(v) for v in raw.split(",") if v)
    if key == "sweep_grid":
        return tuple(float(v) for v in raw.split(",") if v)
    if key in _INT_KEYS:
        return int(raw)
    return float(raw)


def parse_config(text):
    config = RunConfig()
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if section and section.startswith("net.") and section[4:] in RANKER_KINDS:
            kind = section[4:]
            field_name, length = key.rsplit("_", 1)
            length = int(length)
            if field_name == "hidden":
                config.hidden_nodes[(kind, length)] = int(raw)
            elif field_name == "momentum":
                config.momentum[(kind, length)] = float(raw)
            else:
                raise ValueError(f"line {lineno}: unknown key {key!r} in [{section}]")
            continue
        if not hasattr(config, key):
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        setattr(config, key, _parse_value(key, raw))
    config.__post_init__()
    return config


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def save_config(config, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_config(config))
