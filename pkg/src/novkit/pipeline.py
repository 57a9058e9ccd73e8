"""End-to-end pipeline: config, staged execution, artifacts, run manifest.

Stage order: ingest -> normalize -> classify -> vectors -> distances ->
threshold -> scores -> ns_top -> filter -> variables -> models -> reports.
Every artifact lands in the output directory and is digested into
manifest.json; the manifest's own digest covers only deterministic content
(inputs, config, outputs), never timings.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import affiliation, corpus as corpus_mod, embed, normalize, novelty, reports, stats
from .errors import ConfigError, DataError

STAGES = ("ingest", "normalize", "classify", "vectors", "distances", "threshold",
          "scores", "ns_top", "filter", "variables", "models", "reports")

SCOPE_PER_TYPE = "per_type"
SCOPE_POOLED = "pooled"


@dataclass
class PipelineConfig:
    corpus_path: Path
    output_dir: Path
    seed: int
    vector_store_path: Optional[Path] = None
    embed_endpoint: Optional[str] = None
    lexicon_path: Optional[Path] = None
    model_spec_path: Optional[Path] = None
    normalization_threshold: float = 0.1
    novelty_quantile: float = 0.9
    threshold_scope: str = SCOPE_PER_TYPE
    missing_vector_policy: str = novelty.POLICY_SKIP
    year_range: Optional[tuple[int, int]] = corpus_mod.DEFAULT_YEAR_RANGE
    min_entities: int = 5
    histogram_bin_width: float = 0.05
    figures: bool = True

    def validate(self) -> None:
        if self.vector_store_path is None and self.embed_endpoint is None:
            raise ConfigError("one of vector_store_path or embed_endpoint is required")
        if not 0.0 < self.novelty_quantile < 1.0:
            raise ConfigError(f"novelty_quantile must be in (0, 1), got {self.novelty_quantile}")
        if not 0.0 <= self.normalization_threshold <= 1.0:
            raise ConfigError(f"normalization_threshold must be in [0, 1], got {self.normalization_threshold}")
        if self.threshold_scope not in (SCOPE_PER_TYPE, SCOPE_POOLED):
            raise ConfigError(f"threshold_scope must be per_type or pooled, got {self.threshold_scope!r}")
        if self.missing_vector_policy not in (novelty.POLICY_SKIP, novelty.POLICY_ERROR):
            raise ConfigError(f"missing_vector_policy must be skip or error, got {self.missing_vector_policy!r}")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        if self.min_entities < 0:
            raise ConfigError("min_entities must be non-negative")
        if self.histogram_bin_width <= 0:
            raise ConfigError("histogram_bin_width must be positive")
        if self.year_range is not None and self.year_range[0] > self.year_range[1]:
            raise ConfigError(f"invalid year_range {self.year_range}")


def load_config(path, output_override=None, seed_override: Optional[int] = None) -> PipelineConfig:
    """Read a config JSON file; relative paths resolve against its directory."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc

    known = set(PipelineConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    base = path.parent

    def resolve(key):
        if raw.get(key) is not None:
            raw[key] = (base / raw[key]).resolve()

    for key in ("corpus_path", "vector_store_path", "lexicon_path", "model_spec_path", "output_dir"):
        resolve(key)
    if "corpus_path" not in raw:
        raise ConfigError("corpus_path is required")
    if "seed" not in raw and seed_override is None:
        raise ConfigError("seed is required (bootstrap standard errors are stochastic)")
    if raw.get("year_range") is not None:
        raw["year_range"] = tuple(raw["year_range"])
    if output_override is not None:
        raw["output_dir"] = Path(output_override).resolve()
    elif "output_dir" not in raw:
        raw["output_dir"] = (base / "out").resolve()
    if seed_override is not None:
        raw["seed"] = seed_override

    config = PipelineConfig(**raw)
    config.validate()
    return config


@dataclass
class RunManifest:
    config: dict
    inputs: dict
    counts: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    outputs: dict = field(default_factory=dict)
    timing_seconds: dict = field(default_factory=dict)
    stages_run: list = field(default_factory=list)
    complete: bool = False
    failed_stage: Optional[str] = None
    error: Optional[str] = None
    digest: str = ""

    # location fields are excluded from the digest so identical runs hash
    # identically regardless of where inputs and outputs live
    _LOCATION_FIELDS = ("corpus_path", "vector_store_path", "lexicon_path",
                        "model_spec_path", "output_dir", "embed_endpoint")

    def compute_digest(self) -> str:
        knobs = {k: v for k, v in self.config.items() if k not in self._LOCATION_FIELDS}
        payload = json.dumps(
            {"config": knobs,
             "inputs": {name: meta["sha256"] for name, meta in self.inputs.items()},
             "counts": self.counts, "outputs": self.outputs},
            sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def write(self, path: Path) -> None:
        self.digest = self.compute_digest()
        body = {"tool": "novkit", "version": "0.1.0", **asdict(self)}
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(body, handle, indent=2, sort_keys=True, ensure_ascii=False)
            handle.write("\n")


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _config_echo(config: PipelineConfig) -> dict:
    echo = asdict(config)
    for key, value in echo.items():
        if isinstance(value, Path):
            echo[key] = str(value)
    if echo.get("year_range") is not None:
        echo["year_range"] = list(echo["year_range"])
    return echo


class PipelineState:
    """Mutable bag of stage products; reports consume it at the end."""

    def __init__(self):
        self.corpus: Optional[corpus_mod.Corpus] = None
        self.normalization: dict = {}
        self.frequencies: dict = {}
        self.institution_details: list = []
        self.store: Optional[embed.VectorStore] = None
        self.tables: dict[str, novelty.PairDistanceTable] = {}
        self.results: dict[str, novelty.NoveltyResult] = {}
        self.filtered: Optional[corpus_mod.Corpus] = None
        self.analysis: Optional[corpus_mod.AnalysisTable] = None
        self.models: list = []


def _resolve_store(config: PipelineConfig, needed: list[str], manifest: RunManifest) -> embed.VectorStore:
    store = None
    if config.vector_store_path is not None and config.vector_store_path.exists():
        store = embed.load_vector_store(config.vector_store_path)
    if config.embed_endpoint is None:
        if store is None:
            raise DataError(f"vector store not found: {config.vector_store_path}")
        return store

    missing = sorted(set(needed) - set(store.keys() if store else ()))
    if not missing:
        if store is None:
            raise DataError("embedding endpoint configured but no entities to fetch")
        return store
    fetched = embed.fetch_remote(config.embed_endpoint, missing,
                                 expected_dim=store.dim if store else None)
    entries = {key: store.get_vector(key).values for key in store.keys()} if store else {}
    for vec in fetched:
        entries[vec.key] = vec.values
    merged = embed.VectorStore(dim=fetched[0].dim if store is None else store.dim,
                               entries=entries, source="remote")
    if config.vector_store_path is not None:
        embed.write_vector_store(merged, config.vector_store_path)
        manifest.warnings.append(f"vector cache updated with {len(missing)} fetched entities")
    return merged


def _export_novelty_results(state: PipelineState, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["doc_id", "doc_type", "year", "total_pairs", "novel_pairs",
                         "score", "ns_top", "z_score"])
        for doc in state.corpus:
            res = state.results[doc.id]
            writer.writerow([
                doc.id, doc.doc_type, doc.year, res.total_pairs, res.novel_pairs,
                repr(res.score) if res.score is not None else "",
                int(res.ns_top),
                repr(res.z_score) if res.z_score is not None else "",
            ])


def _export_pair_table(table: novelty.PairDistanceTable, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["entity_a", "entity_b", "type_a", "type_b", "distance", "novel_flag"])
        for a, b, ta, tb, dist, flag in table.rows():
            writer.writerow([a, b, ta, tb, repr(dist), int(flag)])


def _export_analysis_table(analysis: corpus_mod.AnalysisTable, path: Path) -> None:
    columns = ["doc_id", "doc_type", "year", "novelty_score", "z_novelty", "ns_top",
               "academia", "cooperation", "ln_authors", "ln_institutions", "ln_entities",
               "ln_ipc", "ln_family"]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in analysis.rows:
            values = []
            for col in columns:
                value = getattr(row, col)
                values.append(repr(value) if isinstance(value, float) else ("" if value is None else value))
            writer.writerow(values)


def _export_institution_classes(details, path: Path) -> None:
    seen: dict[str, tuple[str, str, int]] = {}
    for item in details:
        if item.name in seen:
            value, provenance, count = seen[item.name]
            seen[item.name] = (value, provenance, count + 1)
        else:
            seen[item.name] = (item.value, item.provenance, 1)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["name", "resolved_class", "provenance", "count"])
        for name in sorted(seen):
            value, provenance, count = seen[name]
            writer.writerow([name, value, provenance, count])


def run_pipeline(config: PipelineConfig, until: str = "reports", threads: int = 1) -> RunManifest:
    """Execute stages through ``until`` and write artifacts plus manifest.

    Raises the underlying error after recording the failed stage; outputs
    present at that point are still digested into the (incomplete) manifest.
    """
    if until not in STAGES:
        raise ConfigError(f"unknown stage {until!r}")
    config.validate()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    manifest = RunManifest(config=_config_echo(config), inputs={})
    manifest.inputs["corpus"] = {"path": str(config.corpus_path),
                                 "sha256": _sha256_file(config.corpus_path)}
    for name, path in (("lexicon", config.lexicon_path), ("model_spec", config.model_spec_path)):
        if path is not None:
            manifest.inputs[name] = {"path": str(path), "sha256": _sha256_file(path)}
    if config.vector_store_path is not None and config.vector_store_path.exists():
        manifest.inputs["vector_store"] = {"path": str(config.vector_store_path),
                                           "sha256": _sha256_file(config.vector_store_path)}

    state = PipelineState()
    stop_index = STAGES.index(until)

    def record(path: Path) -> None:
        manifest.outputs[str(path.relative_to(out))] = _sha256_file(path)

    def stage(name: str):
        return STAGES.index(name) <= stop_index

    try:
        started = time.perf_counter()
        state.corpus = corpus_mod.load_corpus(config.corpus_path, year_range=config.year_range)
        manifest.counts["documents"] = len(state.corpus)
        manifest.counts["papers"] = len(state.corpus.subset(corpus_mod.PAPER))
        manifest.counts["patents"] = len(state.corpus.subset(corpus_mod.PATENT))
        for doc_type in (corpus_mod.PAPER, corpus_mod.PATENT):
            if manifest.counts[f"{doc_type}s"] == 0:
                manifest.warnings.append(f"corpus contains no {doc_type}s; {doc_type} tables omitted")
        manifest.timing_seconds["ingest"] = time.perf_counter() - started
        manifest.stages_run.append("ingest")

        if stage("normalize"):
            started = time.perf_counter()
            state.frequencies = normalize.corpus_surface_frequencies(state.corpus)
            state.normalization = normalize.build_normalization(state.corpus, config.normalization_threshold)
            state.corpus = normalize.apply_normalization(state.corpus, state.normalization)
            path = out / "normalization_map.csv"
            normalize.export_normalization_csv(state.normalization, state.frequencies, path)
            record(path)
            manifest.counts["canonical_entities"] = sum(m.cluster_count for m in state.normalization.values())
            manifest.timing_seconds["normalize"] = time.perf_counter() - started
            manifest.stages_run.append("normalize")

        if stage("classify"):
            started = time.perf_counter()
            lexicon = (affiliation.load_lexicon(config.lexicon_path)
                       if config.lexicon_path else affiliation.AffiliationLexicon.default())
            state.corpus, state.institution_details = affiliation.classify_corpus(state.corpus, lexicon)
            path = out / "institution_classes.csv"
            _export_institution_classes(state.institution_details, path)
            record(path)
            path = out / "document_classes.csv"
            with open(path, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle)
                writer.writerow(["doc_id", "doc_class"])
                for doc in state.corpus:
                    writer.writerow([doc.id, doc.doc_class])
            record(path)
            path = out / "review_list.csv"
            affiliation.export_review_list(affiliation.review_candidates(state.institution_details), path)
            record(path)
            manifest.timing_seconds["classify"] = time.perf_counter() - started
            manifest.stages_run.append("classify")

        if stage("vectors"):
            started = time.perf_counter()
            needed = sorted({e for doc in state.corpus for e in doc.canonical_entities()})
            state.store = _resolve_store(config, needed, manifest)
            if config.vector_store_path is not None and config.vector_store_path.exists():
                manifest.inputs["vector_store"] = {"path": str(config.vector_store_path),
                                                   "sha256": _sha256_file(config.vector_store_path)}
            manifest.counts["store_entries"] = len(state.store)
            manifest.timing_seconds["vectors"] = time.perf_counter() - started
            manifest.stages_run.append("vectors")

        if stage("distances"):
            started = time.perf_counter()
            if config.threshold_scope == SCOPE_POOLED:
                scopes = {novelty.SCOPE_POOLED: state.corpus}
            else:
                scopes = {doc_type: state.corpus.subset(doc_type)
                          for doc_type in (corpus_mod.PAPER, corpus_mod.PATENT)
                          if len(state.corpus.subset(doc_type))}
            for scope, subset in scopes.items():
                state.tables[scope] = novelty.corpus_pair_distances(
                    subset, state.store, missing_policy=config.missing_vector_policy, scope=scope)
            missing_total = sum(len(t.missing_keys) for t in state.tables.values())
            if missing_total:
                manifest.warnings.append(
                    f"{missing_total} entities lack vectors; "
                    f"{sum(t.skipped_pairs for t in state.tables.values())} document pairs skipped")
            manifest.counts["unique_pairs"] = {s: len(t) for s, t in sorted(state.tables.items())}
            manifest.timing_seconds["distances"] = time.perf_counter() - started
            manifest.stages_run.append("distances")

        if stage("threshold"):
            started = time.perf_counter()
            for scope in sorted(state.tables):
                threshold = novelty.novelty_threshold(state.tables[scope], config.novelty_quantile)
                state.tables[scope] = state.tables[scope].with_threshold(threshold)
                path = out / f"pair_distances_{scope}.csv"
                _export_pair_table(state.tables[scope], path)
                record(path)
            manifest.counts["thresholds"] = {s: state.tables[s].threshold for s in sorted(state.tables)}
            manifest.timing_seconds["threshold"] = time.perf_counter() - started
            manifest.stages_run.append("threshold")

        if stage("scores"):
            started = time.perf_counter()
            docs = list(state.corpus)
            if threads > 1:
                def score_one(doc):
                    table = state.tables.get(doc.doc_type) or state.tables.get(novelty.SCOPE_POOLED)
                    if table is None:
                        raise DataError(f"no distance table covers doc_type {doc.doc_type!r}")
                    return doc.id, novelty.document_novelty(doc, table)
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    state.results = dict(pool.map(score_one, docs))
            else:
                state.results = novelty.score_corpus(state.corpus, state.tables)
            manifest.timing_seconds["scores"] = time.perf_counter() - started
            manifest.stages_run.append("scores")

        if stage("ns_top"):
            started = time.perf_counter()
            state.results = novelty.annual_top_flags(state.results, state.corpus, config.novelty_quantile)
            manifest.timing_seconds["ns_top"] = time.perf_counter() - started
            manifest.stages_run.append("ns_top")

        if stage("filter"):
            started = time.perf_counter()
            state.filtered = corpus_mod.filter_for_regression(
                state.corpus, state.results, min_entities=config.min_entities)
            manifest.counts["filtered_documents"] = len(state.filtered)
            manifest.timing_seconds["filter"] = time.perf_counter() - started
            manifest.stages_run.append("filter")

        if stage("variables"):
            started = time.perf_counter()
            state.results = novelty.zscore_novelty(state.results, state.filtered)
            state.analysis = corpus_mod.build_variables(state.filtered, state.results)
            path = out / "novelty_results.csv"
            _export_novelty_results(state, path)
            record(path)
            path = out / "analysis_table.csv"
            _export_analysis_table(state.analysis, path)
            record(path)
            manifest.timing_seconds["variables"] = time.perf_counter() - started
            manifest.stages_run.append("variables")

        if stage("models"):
            started = time.perf_counter()
            if config.model_spec_path is not None:
                suite_spec = stats.ModelSuiteSpec.from_json(config.model_spec_path)
            else:
                suite_spec = stats.ModelSuiteSpec(seed=config.seed)
            state.models = stats.run_model_suite(state.analysis, suite_spec)
            path = out / "models.csv"
            stats.export_model_results(state.models, path)
            record(path)
            manifest.counts["models"] = len(state.models)
            manifest.timing_seconds["models"] = time.perf_counter() - started
            manifest.stages_run.append("models")

        if stage("reports"):
            started = time.perf_counter()
            inputs = reports.ReportInputs(
                corpus_full=state.corpus,
                corpus_filtered=state.filtered,
                results=state.results,
                tables=state.tables,
                analysis=state.analysis,
                models=state.models,
            )
            written = reports.emit_reports(inputs, out, bin_width=config.histogram_bin_width,
                                           figures=config.figures, quantile_q=config.novelty_quantile)
            for path in written.values():
                record(path)
            manifest.timing_seconds["reports"] = time.perf_counter() - started
            manifest.stages_run.append("reports")

        manifest.complete = True
    except Exception as exc:
        manifest.failed_stage = STAGES[len(manifest.stages_run)] if len(manifest.stages_run) < len(STAGES) else None
        manifest.error = f"{type(exc).__name__}: {exc}"
        manifest.write(out / "manifest.json")
        raise

    manifest.write(out / "manifest.json")
    return manifest
