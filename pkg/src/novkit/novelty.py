"""Entity-pair semantic distances and per-document novelty scores.

Distance between two entities is 1 minus the cosine of their embedding
vectors, so the range is [0, 2].  Unique unordered pairs across a corpus
form the distance table; pairs strictly above the top-decile threshold are
"novel" and a document's score is the fraction of its pairs that are novel.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import Corpus, Document
from .embed import VectorStore
from .errors import DataError, DegenerateGroupError, MissingVectorError, NumericError

log = logging.getLogger(__name__)

POLICY_ERROR = "error"
POLICY_SKIP = "skip"

SCOPE_PAPER = "paper"
SCOPE_PATENT = "patent"
SCOPE_POOLED = "pooled"


def cosine_similarity(u, v) -> float:
    """Cosine of two vectors in float64, clamped to [-1, 1] against rounding."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise NumericError(f"vector shapes differ: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise NumericError("cosine similarity is undefined for a zero-norm vector")
    return float(np.clip(float(np.dot(u, v)) / (nu * nv), -1.0, 1.0))


def semantic_distance(u, v) -> float:
    """1 - cosine(u, v); zero iff the vectors are positive scalar multiples."""
    return 1.0 - cosine_similarity(u, v)


@dataclass(frozen=True)
class EntityPair:
    a: str
    b: str
    a_type: str
    b_type: str

    def __post_init__(self):
        if self.a >= self.b:
            raise DataError(f"pair must be ordered with a < b, got ({self.a!r}, {self.b!r})")


def make_pair(e1: str, t1: str, e2: str, t2: str) -> EntityPair:
    if e1 == e2:
        raise DataError(f"self-pair for entity {e1!r}")
    if e1 < e2:
        return EntityPair(a=e1, b=e2, a_type=t1, b_type=t2)
    return EntityPair(a=e2, b=e1, a_type=t2, b_type=t1)


def enumerate_pairs(doc: Document) -> list[EntityPair]:
    """All unordered pairs of the document's distinct canonical entities,
    ordered deterministically; repeated mentions contribute once."""
    typed = sorted(doc.canonical_entities().items())
    pairs = []
    for i in range(len(typed)):
        for j in range(i + 1, len(typed)):
            pairs.append(EntityPair(a=typed[i][0], b=typed[j][0],
                                    a_type=typed[i][1], b_type=typed[j][1]))
    return pairs


def interpolated_quantile(values: Sequence[float], q: float) -> float:
    """Quantile by linear interpolation between closest order statistics."""
    if not 0.0 < q < 1.0:
        raise DataError(f"quantile must be in (0, 1), got {q}")
    data = sorted(values)
    if not data:
        raise DataError("quantile of an empty sample")
    pos = (len(data) - 1) * q
    lo = math.floor(pos)
    frac = pos - lo
    if frac == 0.0:
        return float(data[lo])
    return float(data[lo] + frac * (data[lo + 1] - data[lo]))


class PairDistanceTable:
    """Distances for the unique unordered entity pairs of one corpus scope.

    Pairs are keyed by canonical strings; the type labels attached to each
    row are the entities' corpus-wide labels (order-independent), while
    per-document combination statistics use each document's own labels.
    """

    def __init__(self, scope: str, entities: Sequence[str], entity_types: Sequence[str],
                 codes: np.ndarray, distances: np.ndarray,
                 threshold: Optional[float] = None, flags: Optional[np.ndarray] = None,
                 missing_keys: tuple[str, ...] = (), skipped_pairs: int = 0):
        self.scope = scope
        self.entities = tuple(entities)
        self.entity_types = tuple(entity_types)
        self._id_of = {e: i for i, e in enumerate(self.entities)}
        self._n = len(self.entities)
        self._codes = codes            # sorted int64, a_idx * n + b_idx with a_idx < b_idx
        self._distances = distances    # float64, aligned with codes
        self.threshold = threshold
        self._flags = flags if flags is not None else np.zeros(len(codes), dtype=bool)
        self.missing_keys = missing_keys
        self.skipped_pairs = skipped_pairs
        self._distances.setflags(write=False)
        self._codes.setflags(write=False)
        self._flags.setflags(write=False)

    def __len__(self) -> int:
        return len(self._codes)

    @property
    def distances(self) -> np.ndarray:
        return self._distances

    @property
    def flags(self) -> np.ndarray:
        return self._flags

    def _code(self, a: str, b: str) -> Optional[int]:
        ia = self._id_of.get(a)
        ib = self._id_of.get(b)
        if ia is None or ib is None:
            return None
        if ia > ib:
            ia, ib = ib, ia
        return ia * self._n + ib

    def _row(self, a: str, b: str) -> Optional[int]:
        code = self._code(a, b)
        if code is None:
            return None
        pos = int(np.searchsorted(self._codes, code))
        if pos >= len(self._codes) or self._codes[pos] != code:
            return None
        return pos

    def distance(self, a: str, b: str) -> Optional[float]:
        row = self._row(a, b)
        return None if row is None else float(self._distances[row])

    def is_novel(self, a: str, b: str) -> Optional[bool]:
        row = self._row(a, b)
        return None if row is None else bool(self._flags[row])

    def with_threshold(self, threshold: float) -> "PairDistanceTable":
        """Flag pairs strictly above the threshold; returns a new table."""
        flags = self._distances > threshold
        return PairDistanceTable(self.scope, self.entities, self.entity_types,
                                 self._codes, self._distances, threshold, flags,
                                 self.missing_keys, self.skipped_pairs)

    def doc_pair_rows(self, doc: Document) -> np.ndarray:
        """Table row indices of the document's pairs that have a distance."""
        ids = sorted(self._id_of[e] for e in doc.canonical_entities() if e in self._id_of)
        k = len(ids)
        if k < 2:
            return np.empty(0, dtype=np.int64)
        arr = np.asarray(ids, dtype=np.int64)
        iu, ju = np.triu_indices(k, 1)
        codes = arr[iu] * self._n + arr[ju]
        pos = np.searchsorted(self._codes, codes)
        valid = (pos < len(self._codes))
        valid[valid] &= self._codes[pos[valid]] == codes[valid]
        return pos[valid]

    def rows(self):
        """Yield (a, b, type_a, type_b, distance, flag) in (a, b) order."""
        for idx in range(len(self._codes)):
            code = int(self._codes[idx])
            ia, ib = divmod(code, self._n)
            yield (self.entities[ia], self.entities[ib],
                   self.entity_types[ia], self.entity_types[ib],
                   float(self._distances[idx]), bool(self._flags[idx]))


def corpus_pair_distances(corpus: Corpus, store: VectorStore,
                          missing_policy: str = POLICY_SKIP,
                          scope: str = SCOPE_POOLED) -> PairDistanceTable:
    """Compute the distance for every unique within-document entity pair.

    Each unique pair is computed once regardless of how many documents
    contain it; rows and values do not depend on document order.  Entities
    without a vector are dropped under the skip policy (with a logged
    summary) or raised under the error policy.
    """
    if missing_policy not in (POLICY_ERROR, POLICY_SKIP):
        raise DataError(f"unknown missing-vector policy {missing_policy!r}")

    corpus_types: dict[str, str] = {}
    for doc in corpus:
        for entity, etype in doc.canonical_entities().items():
            prev = corpus_types.get(entity)
            if prev is None or etype < prev:
                corpus_types[entity] = etype

    missing = sorted(e for e in corpus_types if e not in store)
    if missing and missing_policy == POLICY_ERROR:
        raise MissingVectorError(missing)

    entities = sorted(e for e in corpus_types if e in store)
    entity_types = [corpus_types[e] for e in entities]
    id_of = {e: i for i, e in enumerate(entities)}
    n = len(entities)

    code_chunks = []
    skipped_pairs = 0
    for doc in corpus:
        doc_entities = doc.canonical_entities()
        ids = sorted(id_of[e] for e in doc_entities if e in id_of)
        k_all = len(doc_entities)
        k = len(ids)
        skipped_pairs += k_all * (k_all - 1) // 2 - k * (k - 1) // 2
        if k < 2:
            continue
        arr = np.asarray(ids, dtype=np.int64)
        iu, ju = np.triu_indices(k, 1)
        code_chunks.append(arr[iu] * n + arr[ju])

    codes = (np.unique(np.concatenate(code_chunks)) if code_chunks
             else np.empty(0, dtype=np.int64))

    if missing:
        log.warning("%s scope: %d entities lack vectors (%d document pairs skipped)",
                    scope, len(missing), skipped_pairs)

    if len(codes):
        matrix = store.matrix(entities)
        norms = np.linalg.norm(matrix, axis=1)
        zero = np.nonzero(norms == 0.0)[0]
        if len(zero):
            raise NumericError(f"zero-norm vectors for entities: {[entities[i] for i in zero[:10]]}")
        ia, ib = np.divmod(codes, n)
        dots = np.einsum("ij,ij->i", matrix[ia], matrix[ib])
        cos = np.clip(dots / (norms[ia] * norms[ib]), -1.0, 1.0)
        distances = 1.0 - cos
    else:
        distances = np.empty(0, dtype=np.float64)

    return PairDistanceTable(scope=scope, entities=entities, entity_types=entity_types,
                             codes=codes, distances=distances,
                             missing_keys=tuple(missing), skipped_pairs=skipped_pairs)


def novelty_threshold(table: PairDistanceTable, q: float = 0.90) -> float:
    """The q-quantile of the unique-pair distances (linear interpolation)."""
    if len(table) == 0:
        raise DataError("cannot derive a threshold from an empty distance table")
    return interpolated_quantile(table.distances, q)


@dataclass(frozen=True)
class NoveltyResult:
    doc_id: str
    total_pairs: int
    novel_pairs: int
    score: Optional[float]
    ns_top: bool = False
    z_score: Optional[float] = None


def document_novelty(doc: Document, table: PairDistanceTable) -> NoveltyResult:
    """Fraction of the document's scored pairs that are flagged novel.

    Only pairs with a computed distance count; a document with no scored
    pairs gets an undefined score and is excluded downstream.
    """
    rows = table.doc_pair_rows(doc)
    total = int(len(rows))
    novel = int(table.flags[rows].sum()) if total else 0
    score = (novel / total) if total else None
    return NoveltyResult(doc_id=doc.id, total_pairs=total, novel_pairs=novel, score=score)


def score_corpus(corpus: Corpus, tables: Mapping[str, PairDistanceTable]) -> dict[str, NoveltyResult]:
    """Score every document against the table matching its scope
    (per-doc-type tables, or a single pooled table)."""
    results = {}
    for doc in corpus:
        table = tables.get(doc.doc_type) or tables.get(SCOPE_POOLED)
        if table is None:
            raise DataError(f"no distance table covers doc_type {doc.doc_type!r}")
        results[doc.id] = document_novelty(doc, table)
    return results


def annual_top_flags(results: Mapping[str, NoveltyResult], corpus: Corpus,
                     q: float = 0.90) -> dict[str, NoveltyResult]:
    """Flag documents strictly above their (year, doc_type) group's
    q-quantile of scores; ties at the quantile are not flagged."""
    groups: dict[tuple[int, str], list[str]] = {}
    for doc in corpus:
        result = results.get(doc.id)
        if result is not None and result.score is not None:
            groups.setdefault((doc.year, doc.doc_type), []).append(doc.id)

    updated = dict(results)
    for ids in groups.values():
        cutoff = interpolated_quantile([results[i].score for i in ids], q)
        for doc_id in ids:
            result = results[doc_id]
            updated[doc_id] = replace(result, ns_top=result.score > cutoff)
    return updated


def zscore_novelty(results: Mapping[str, NoveltyResult], corpus: Corpus) -> dict[str, NoveltyResult]:
    """Standardize scores to mean 0, population SD 1 within each doc_type.

    Papers and patents are standardized separately so the pooled response is
    scale-free.
    """
    groups: dict[str, list[str]] = {}
    for doc in corpus:
        result = results.get(doc.id)
        if result is not None and result.score is not None:
            groups.setdefault(doc.doc_type, []).append(doc.id)

    updated = dict(results)
    for doc_type, ids in sorted(groups.items()):
        scores = np.array([results[i].score for i in ids], dtype=np.float64)
        if len(scores) < 2:
            raise DegenerateGroupError(f"{doc_type} group has {len(scores)} document(s), cannot standardize")
        mu = float(scores.mean())
        sigma = float(scores.std())  # population SD
        if sigma == 0.0:
            raise DegenerateGroupError(f"{doc_type} novelty scores are constant, cannot standardize")
        for doc_id, score in zip(ids, scores):
            updated[doc_id] = replace(results[doc_id], z_score=float((score - mu) / sigma))
    return updated


def _pair_label(t1: str, t2: str) -> str:
    lo, hi = sorted((t1, t2))
    return f"{lo}-{hi}"


@dataclass(frozen=True)
class CombinationStats:
    """Mean pair distance per combination type, instance-weighted over
    documents."""
    by_class_year: dict  # (type_pair, doc_class, year) -> (mean, n)
    overall: dict        # type_pair -> (mean, n)


def combination_type_stats(corpus: Corpus, tables: Mapping[str, PairDistanceTable],
                           results: Optional[Mapping[str, NoveltyResult]] = None,
                           top_decile_only: bool = False, q: float = 0.90) -> CombinationStats:
    """Average semantic distance per (combination type, document class, year)
    and per combination type overall.

    With ``top_decile_only`` the averages are restricted to the documents
    strictly above the q-quantile of novelty scores within their doc_type.
    """
    docs = list(corpus)
    if top_decile_only:
        if results is None:
            raise DataError("top-decile combination stats require novelty results")
        cutoffs = {}
        for doc_type in sorted({d.doc_type for d in docs}):
            scores = [results[d.id].score for d in docs
                      if d.doc_type == doc_type and results.get(d.id) and results[d.id].score is not None]
            if scores:
                cutoffs[doc_type] = interpolated_quantile(scores, q)
        docs = [d for d in docs
                if results.get(d.id) and results[d.id].score is not None
                and d.doc_type in cutoffs and results[d.id].score > cutoffs[d.doc_type]]

    sums_cy: dict[tuple, float] = {}
    counts_cy: dict[tuple, int] = {}
    sums_all: dict[str, float] = {}
    counts_all: dict[str, int] = {}
    for doc in docs:
        table = tables.get(doc.doc_type) or tables.get(SCOPE_POOLED)
        if table is None:
            raise DataError(f"no distance table covers doc_type {doc.doc_type!r}")
        for pair in enumerate_pairs(doc):
            dist = table.distance(pair.a, pair.b)
            if dist is None:
                continue
            label = _pair_label(pair.a_type, pair.b_type)
            key = (label, doc.doc_class, doc.year)
            sums_cy[key] = sums_cy.get(key, 0.0) + dist
            counts_cy[key] = counts_cy.get(key, 0) + 1
            sums_all[label] = sums_all.get(label, 0.0) + dist
            counts_all[label] = counts_all.get(label, 0) + 1

    return CombinationStats(
        by_class_year={k: (sums_cy[k] / counts_cy[k], counts_cy[k]) for k in sorted(sums_cy)},
        overall={k: (sums_all[k] / counts_all[k], counts_all[k]) for k in sorted(sums_all)},
    )
