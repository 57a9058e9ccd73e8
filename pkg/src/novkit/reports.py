"""Report emission: tidy CSV tables plus rendered matplotlib figures.

Every table the pipeline reports on disk is delimited text; the report step
also renders the corresponding figures (PNG, Agg backend) next to the CSVs.
All emissions are deterministic for fixed inputs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .corpus import (ACADEMIA, COOPERATION, DOC_CLASSES, PAPER, PATENT,
                     REGRESSION_CLASSES, AnalysisTable, Corpus)
from .errors import DataError
from .novelty import (CombinationStats, NoveltyResult, PairDistanceTable,
                      combination_type_stats, interpolated_quantile)
from .stats import (RegressionResult, export_model_results, mann_whitney_u,
                    pearson_matrix, vif)

FIGURE_DPI = 120


@dataclass
class ReportInputs:
    corpus_full: Corpus
    corpus_filtered: Corpus
    results: Mapping[str, NoveltyResult]
    tables: Mapping[str, PairDistanceTable]
    analysis: AnalysisTable
    models: Sequence[tuple[str, RegressionResult]]


def _write_csv(path: Path, header: Sequence[str], rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _save_figure(fig, path: Path) -> Path:
    fig.savefig(path, dpi=FIGURE_DPI)
    plt.close(fig)
    return path


# ---------------------------------------------------------------------------
# Tables

def institution_distribution(corpus: Corpus) -> list[tuple]:
    rows = []
    for doc_type in (PAPER, PATENT):
        docs = [d for d in corpus if d.doc_type == doc_type]
        if not docs:
            continue
        for cls in DOC_CLASSES:
            count = sum(1 for d in docs if d.doc_class == cls)
            rows.append((doc_type, cls, count, f"{100.0 * count / len(docs):.2f}"))
    return rows


def variable_summary(corpus_filtered: Corpus, results: Mapping[str, NoveltyResult]) -> list[tuple]:
    rows = []
    for doc_type in (PAPER, PATENT):
        docs = [d for d in corpus_filtered if d.doc_type == doc_type]
        if not docs:
            continue
        series: dict[str, list[float]] = {
            "novelty_score": [results[d.id].score for d in docs],
            "ns_top": [float(results[d.id].ns_top) for d in docs],
            "au_in_num": [float(d.author_count) for d in docs],
            "institutions_num": [float(len(d.institutions)) for d in docs],
            "entity_num": [float(d.distinct_entity_count()) for d in docs],
            "academia": [float(d.doc_class == ACADEMIA) for d in docs],
            "cooperation": [float(d.doc_class == COOPERATION) for d in docs],
        }
        if doc_type == PATENT:
            series["ipc_num"] = [float(d.patent_controls.ipc_num) for d in docs]
            series["family_size"] = [float(d.patent_controls.family_size) for d in docs]
        for name, values in series.items():
            arr = np.asarray(values)
            sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
            rows.append((doc_type, name, _fmt(float(arr.mean())), _fmt(sd),
                         _fmt(float(arr.min())), _fmt(float(arr.max()))))
    return rows


def annual_volume(corpus: Corpus) -> list[tuple]:
    counts: dict[tuple[str, int], int] = {}
    for doc in corpus:
        counts[(doc.doc_type, doc.year)] = counts.get((doc.doc_type, doc.year), 0) + 1
    return [(t, y, counts[(t, y)]) for t, y in sorted(counts)]


def distance_histogram(tables: Mapping[str, PairDistanceTable], bin_width: float = 0.05) -> list[tuple]:
    if bin_width <= 0:
        raise DataError("bin width must be positive")
    rows = []
    for scope in sorted(tables):
        distances = tables[scope].distances
        if not len(distances):
            continue
        first = math.floor(float(distances.min()) / bin_width)
        last = math.floor(float(distances.max()) / bin_width)
        counts = {i: 0 for i in range(first, last + 1)}
        for d in distances:
            counts[math.floor(float(d) / bin_width)] += 1
        for i in range(first, last + 1):
            rows.append((scope, _fmt(i * bin_width), _fmt((i + 1) * bin_width), counts[i]))
    return rows


def novelty_distribution(corpus_filtered: Corpus, results: Mapping[str, NoveltyResult]) -> list[tuple]:
    rows = []
    for doc_type in (PAPER, PATENT):
        for cls in REGRESSION_CLASSES:
            scores = [results[d.id].score for d in corpus_filtered
                      if d.doc_type == doc_type and d.doc_class == cls]
            if not scores:
                continue
            rows.append((
                doc_type, cls, len(scores),
                _fmt(float(np.mean(scores))),
                _fmt(float(min(scores))),
                _fmt(interpolated_quantile(scores, 0.25)),
                _fmt(interpolated_quantile(scores, 0.50)),
                _fmt(interpolated_quantile(scores, 0.75)),
                _fmt(float(max(scores))),
            ))
    return rows


def novelty_density(corpus_filtered: Corpus, results: Mapping[str, NoveltyResult],
                    grid_points: int = 64) -> list[tuple]:
    """Gaussian KDE sample points per (doc_type, class) for violin-style plots."""
    from scipy.stats import gaussian_kde

    rows = []
    for doc_type in (PAPER, PATENT):
        for cls in REGRESSION_CLASSES:
            scores = [results[d.id].score for d in corpus_filtered
                      if d.doc_type == doc_type and d.doc_class == cls]
            if len(scores) < 3 or len(set(scores)) < 2:
                continue
            kde = gaussian_kde(scores)
            xs = np.linspace(min(scores), max(scores), grid_points)
            for x, dens in zip(xs, kde(xs)):
                rows.append((doc_type, cls, _fmt(float(x)), _fmt(float(dens))))
    return rows


def combination_rows(stats: CombinationStats, doc_type: str) -> tuple[list[tuple], list[tuple]]:
    trend = [(doc_type, pair, cls, year, _fmt(mean), n)
             for (pair, cls, year), (mean, n) in stats.by_class_year.items()]
    overall = [(doc_type, pair, _fmt(mean), n) for pair, (mean, n) in stats.overall.items()]
    return trend, overall


def citation_comparison(corpus_filtered: Corpus, results: Mapping[str, NoveltyResult]) -> list[tuple]:
    """Mann-Whitney comparison of 5-year citations, high-novelty vs common."""
    rows = []
    for doc_type in (PAPER, PATENT):
        docs = [d for d in corpus_filtered
                if d.doc_type == doc_type and d.citations_5y is not None]
        if not docs:
            continue
        for subgroup in ("all",) + REGRESSION_CLASSES:
            members = docs if subgroup == "all" else [d for d in docs if d.doc_class == subgroup]
            high = [float(d.citations_5y) for d in members if results[d.id].ns_top]
            common = [float(d.citations_5y) for d in members if not results[d.id].ns_top]
            if not high or not common:
                continue
            test = mann_whitney_u(high, common)
            rows.append((
                doc_type, subgroup, len(high), len(common),
                _fmt(float(np.median(high))), _fmt(float(np.median(common))),
                _fmt(test.u_a), _fmt(test.z), _fmt(test.p_two_sided), test.method,
            ))
    return rows


def regression_variable_series(analysis: AnalysisTable, doc_type: str) -> dict[str, list[float]]:
    subset = analysis.subset(doc_type)
    if not len(subset):
        return {}
    series = {
        "novelty_score": subset.column("novelty_score"),
        "ns_top": [float(v) for v in subset.column("ns_top")],
        "academia": [float(v) for v in subset.column("academia")],
        "cooperation": [float(v) for v in subset.column("cooperation")],
        "ln_authors": subset.column("ln_authors"),
        "ln_institutions": subset.column("ln_institutions"),
        "ln_entities": subset.column("ln_entities"),
    }
    if doc_type == PATENT:
        series["ln_ipc"] = subset.column("ln_ipc")
        series["ln_family"] = subset.column("ln_family")
    return series


# ---------------------------------------------------------------------------
# Figures

def _figure_annual_volume(rows: list[tuple], path: Path) -> Optional[Path]:
    doc_types = sorted({r[0] for r in rows})
    if not doc_types:
        return None
    fig, axes = plt.subplots(1, len(doc_types), figsize=(5 * len(doc_types), 3.2), squeeze=False)
    for ax, doc_type in zip(axes[0], doc_types):
        series = [(r[1], r[2]) for r in rows if r[0] == doc_type]
        ax.bar([y for y, _ in series], [c for _, c in series], color="tab:blue")
        ax.set_title(f"{doc_type} volume by year")
        ax.set_xlabel("year")
        ax.set_ylabel("documents")
    fig.tight_layout()
    return _save_figure(fig, path)


def _figure_distance_histogram(tables: Mapping[str, PairDistanceTable], path: Path) -> Optional[Path]:
    scopes = [s for s in sorted(tables) if len(tables[s])]
    if not scopes:
        return None
    fig, axes = plt.subplots(1, len(scopes), figsize=(5 * len(scopes), 3.2), squeeze=False)
    for ax, scope in zip(axes[0], scopes):
        table = tables[scope]
        ax.hist(table.distances, bins=40, color="tab:purple")
        if table.threshold is not None:
            ax.axvline(table.threshold, color="tab:red", linestyle="--", label="novelty threshold")
            ax.legend()
        ax.set_title(f"pair distance distribution ({scope})")
        ax.set_xlabel("semantic distance")
        ax.set_ylabel("pairs")
    fig.tight_layout()
    return _save_figure(fig, path)


def _figure_novelty_violin(corpus_filtered: Corpus, results: Mapping[str, NoveltyResult],
                           path: Path) -> Optional[Path]:
    panels = []
    for doc_type in (PAPER, PATENT):
        data, labels = [], []
        for cls in REGRESSION_CLASSES:
            scores = [results[d.id].score for d in corpus_filtered
                      if d.doc_type == doc_type and d.doc_class == cls]
            if len(scores) >= 2 and len(set(scores)) > 1:
                data.append(scores)
                labels.append(cls)
        if data:
            panels.append((doc_type, data, labels))
    if not panels:
        return None
    fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 3.4), squeeze=False)
    for ax, (doc_type, data, labels) in zip(axes[0], panels):
        ax.violinplot(data, showmedians=True)
        ax.set_xticks(range(1, len(labels) + 1), labels)
        ax.set_title(f"novelty by class ({doc_type})")
        ax.set_ylabel("novelty score")
    fig.tight_layout()
    return _save_figure(fig, path)


def _figure_combination_trends(trend_rows: list[tuple], path: Path) -> Optional[Path]:
    doc_types = sorted({r[0] for r in trend_rows})
    if not doc_types:
        return None
    fig, axes = plt.subplots(1, len(doc_types), figsize=(6 * len(doc_types), 3.6), squeeze=False)
    for ax, doc_type in zip(axes[0], doc_types):
        # aggregate classes: weighted mean distance per (pair, year)
        sums: dict[tuple[str, int], float] = {}
        counts: dict[tuple[str, int], int] = {}
        for dt, pair, _cls, year, mean, n in trend_rows:
            if dt != doc_type:
                continue
            key = (pair, year)
            sums[key] = sums.get(key, 0.0) + float(mean) * n
            counts[key] = counts.get(key, 0) + n
        pairs = sorted({p for p, _ in sums})
        for pair in pairs:
            years = sorted(y for p, y in sums if p == pair)
            ax.plot(years, [sums[(pair, y)] / counts[(pair, y)] for y in years],
                    marker="o", label=pair)
        ax.set_title(f"combination-type distance trends ({doc_type})")
        ax.set_xlabel("year")
        ax.set_ylabel("mean distance")
        if pairs:
            ax.legend(fontsize="x-small")
    fig.tight_layout()
    return _save_figure(fig, path)


def _figure_correlation(names: Sequence[str], matrix: np.ndarray, doc_type: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(0.7 * len(names) + 2, 0.7 * len(names) + 1.5))
    im = ax.imshow(matrix, vmin=-1.0, vmax=1.0, cmap="RdBu_r")
    ax.set_xticks(range(len(names)), names, rotation=45, ha="right", fontsize="x-small")
    ax.set_yticks(range(len(names)), names, fontsize="x-small")
    for i in range(len(names)):
        for j in range(len(names)):
            ax.text(j, i, f"{matrix[i, j]:.2f}", ha="center", va="center", fontsize="xx-small")
    fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_title(f"variable correlations ({doc_type})")
    fig.tight_layout()
    return _save_figure(fig, path)


def _figure_citations(corpus_filtered: Corpus, results: Mapping[str, NoveltyResult],
                      path: Path) -> Optional[Path]:
    panels = []
    for doc_type in (PAPER, PATENT):
        docs = [d for d in corpus_filtered
                if d.doc_type == doc_type and d.citations_5y is not None]
        high = [float(d.citations_5y) for d in docs if results[d.id].ns_top]
        common = [float(d.citations_5y) for d in docs if not results[d.id].ns_top]
        if high and common:
            panels.append((doc_type, high, common))
    if not panels:
        return None
    fig, axes = plt.subplots(1, len(panels), figsize=(4.5 * len(panels), 3.4), squeeze=False)
    for ax, (doc_type, high, common) in zip(axes[0], panels):
        ax.boxplot([high, common], tick_labels=["high novelty", "common"])
        ax.set_title(f"5-year citations ({doc_type})")
        ax.set_ylabel("citations")
    fig.tight_layout()
    return _save_figure(fig, path)


# ---------------------------------------------------------------------------
# Orchestration

def emit_reports(inputs: ReportInputs, out_dir, bin_width: float = 0.05,
                 figures: bool = True, quantile_q: float = 0.90) -> dict[str, Path]:
    """Write every report table (and figure) into ``out_dir``.

    Returns a name -> path map of everything written.  Patent-only tables
    are omitted when the corpus has no patents (and vice versa).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    def emit(name: str, header: Sequence[str], rows) -> None:
        written[name] = _write_csv(out / f"{name}.csv", header, rows)

    dist_rows = institution_distribution(inputs.corpus_full)
    emit("institution_distribution", ["doc_type", "doc_class", "count", "ratio_pct"], dist_rows)

    emit("variable_summary", ["doc_type", "variable", "mean", "sd", "min", "max"],
         variable_summary(inputs.corpus_filtered, inputs.results))

    volume_rows = annual_volume(inputs.corpus_full)
    emit("annual_volume", ["doc_type", "year", "count"], volume_rows)

    hist_rows = distance_histogram(inputs.tables, bin_width)
    emit("distance_histogram", ["scope", "bin_left", "bin_right", "count"], hist_rows)

    emit("novelty_by_class",
         ["doc_type", "doc_class", "n", "mean", "min", "q1", "median", "q3", "max"],
         novelty_distribution(inputs.corpus_filtered, inputs.results))
    emit("novelty_density", ["doc_type", "doc_class", "x", "density"],
         novelty_density(inputs.corpus_filtered, inputs.results))

    trend_rows: list[tuple] = []
    overall_rows: list[tuple] = []
    top_rows: list[tuple] = []
    for doc_type in (PAPER, PATENT):
        subset = inputs.corpus_full.subset(doc_type)
        if not len(subset):
            continue
        stats_all = combination_type_stats(subset, inputs.tables)
        trend, overall = combination_rows(stats_all, doc_type)
        trend_rows.extend(trend)
        overall_rows.extend(overall)
        stats_top = combination_type_stats(subset, inputs.tables, inputs.results,
                                           top_decile_only=True, q=quantile_q)
        top_rows.extend(combination_rows(stats_top, doc_type)[1])
    emit("combination_trends",
         ["doc_type", "type_pair", "doc_class", "year", "mean_distance", "n_pairs"], trend_rows)
    emit("combination_means", ["doc_type", "type_pair", "mean_distance", "n_pairs"], overall_rows)
    emit("combination_means_top_decile",
         ["doc_type", "type_pair", "mean_distance", "n_pairs"], top_rows)

    export_model_results(inputs.models, out / "models.csv")
    written["models"] = out / "models.csv"

    vif_rows: list[tuple] = []
    corr_matrices: dict[str, tuple] = {}
    for doc_type in (PAPER, PATENT):
        series = regression_variable_series(inputs.analysis, doc_type)
        if not series:
            continue
        explanatory = {k: v for k, v in series.items()
                       if k not in ("novelty_score", "ns_top")
                       and len(set(v)) > 1}
        # VIF needs spare degrees of freedom beyond the auxiliary regressions
        if len(explanatory) >= 2 and len(inputs.analysis.subset(doc_type)) > len(explanatory) + 1:
            matrix = np.column_stack([explanatory[k] for k in explanatory])
            result = vif(matrix, list(explanatory))
            for name in explanatory:
                vif_rows.append((doc_type, name, _fmt(result.per_column[name])))
            vif_rows.append((doc_type, "mean_vif", _fmt(result.mean_vif)))
        correlatable = {k: v for k, v in series.items() if len(set(v)) > 1}
        if len(correlatable) >= 2:
            corr_matrices[doc_type] = pearson_matrix(correlatable)
    emit("vif", ["doc_type", "variable", "vif"], vif_rows)

    corr_rows: list[tuple] = []
    for doc_type, (names, matrix) in corr_matrices.items():
        for i, name in enumerate(names):
            corr_rows.append((doc_type, name) + tuple(_fmt(float(v)) for v in matrix[i]))
    emit("correlation_matrix", ["doc_type", "variable", "values..."], corr_rows)

    emit("citation_comparison",
         ["doc_type", "subgroup", "n_high", "n_common", "median_high", "median_common",
          "u", "z", "p", "method"],
         citation_comparison(inputs.corpus_filtered, inputs.results))

    if figures:
        figure_paths = {
            "fig_annual_volume": _figure_annual_volume(volume_rows, out / "fig_annual_volume.png"),
            "fig_distance_distribution": _figure_distance_histogram(inputs.tables, out / "fig_distance_distribution.png"),
            "fig_novelty_violin": _figure_novelty_violin(inputs.corpus_filtered, inputs.results, out / "fig_novelty_violin.png"),
            "fig_combination_trends": _figure_combination_trends(trend_rows, out / "fig_combination_trends.png"),
            "fig_citation_comparison": _figure_citations(inputs.corpus_filtered, inputs.results, out / "fig_citation_comparison.png"),
        }
        for doc_type, (names, matrix) in corr_matrices.items():
            figure_paths[f"fig_correlation_{doc_type}"] = _figure_correlation(
                names, matrix, doc_type, out / f"fig_correlation_{doc_type}.png")
        written.update({k: v for k, v in figure_paths.items() if v is not None})

    return written
