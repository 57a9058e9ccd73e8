"""Entity normalization: preprocessing, edit distance, and greedy clustering.

Surface forms are clustered per entity type so that e.g. a Method and a
Dataset sharing a string are never merged.
"""

from __future__ import annotations

import csv
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import DataError


def preprocess_entity(surface: str) -> str:
    """NFKC-normalize, case-fold, trim, and collapse internal whitespace."""
    cleaned = " ".join(unicodedata.normalize("NFKC", surface).casefold().split())
    if not cleaned:
        raise DataError(f"entity surface {surface!r} is empty after preprocessing")
    return cleaned


def levenshtein(a: str, b: str) -> int:
    """Minimum number of single-character edits turning ``a`` into ``b``.

    Classic two-row dynamic program over Unicode scalar values.
    """
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a):
        current = [i + 1]
        for j, cb in enumerate(b):
            current.append(min(
                previous[j + 1] + 1,      # deletion
                current[j] + 1,           # insertion
                previous[j] + (ca != cb),  # substitution
            ))
        previous = current
    return previous[-1]


def normalized_distance(a: str, b: str) -> float:
    """Levenshtein distance divided by the longer length; in [0, 1]."""
    longest = max(len(a), len(b))
    if longest == 0:
        raise DataError("normalized distance is undefined for two empty strings")
    return levenshtein(a, b) / longest


@dataclass(frozen=True)
class NormalizationMap:
    """Surface form -> canonical form for one entity type.

    Every canonical form maps to itself; ``cluster_count`` is the number of
    distinct canonical forms.
    """

    entries: Mapping[str, str]
    threshold: float
    cluster_count: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, "cluster_count", len(set(self.entries.values())))

    def canonical(self, surface: str) -> str:
        try:
            return self.entries[surface]
        except KeyError:
            raise DataError(f"surface form {surface!r} is not covered by the normalization map") from None


def cluster_entities(surfaces: Counter | Iterable[str], threshold: float) -> NormalizationMap:
    """Greedy frequency-ordered clustering of preprocessed surface forms.

    Surfaces are visited by descending corpus frequency (ties broken
    lexicographically).  Each joins the first existing cluster whose
    canonical form is within ``threshold`` normalized distance, otherwise it
    founds a new cluster with itself as canonical.  Deterministic for a
    fixed input multiset.
    """
    if not 0.0 <= threshold <= 1.0:
        raise DataError(f"clustering threshold must be in [0, 1], got {threshold}")
    counts = surfaces if isinstance(surfaces, Counter) else Counter(surfaces)
    if not counts:
        raise DataError("cannot cluster an empty set of surfaces")

    ordered = sorted(counts, key=lambda s: (-counts[s], s))
    canonicals: list[str] = []
    entries: dict[str, str] = {}
    for surface in ordered:
        for canon in canonicals:
            if normalized_distance(surface, canon) <= threshold:
                entries[surface] = canon
                break
        else:
            canonicals.append(surface)
            entries[surface] = surface
    return NormalizationMap(entries=entries, threshold=threshold)


def build_normalization(corpus, threshold: float) -> dict:
    """Cluster each entity type of a corpus independently.

    Returns etype -> NormalizationMap covering every preprocessed surface of
    that type.
    """
    per_type: dict[str, Counter] = {}
    for doc in corpus.documents:
        for mention in doc.entities:
            per_type.setdefault(mention.etype, Counter())[preprocess_entity(mention.surface)] += 1
    return {etype: cluster_entities(counts, threshold) for etype, counts in sorted(per_type.items())}


def apply_normalization(corpus, maps: Mapping[str, NormalizationMap]):
    """Return a copy of the corpus with every mention's canonical form set.

    Mention counts and entity types are untouched; an unmapped surface is an
    error naming the offending form.
    """
    documents = []
    for doc in corpus.documents:
        mentions = []
        for mention in doc.entities:
            surface = preprocess_entity(mention.surface)
            if mention.etype not in maps:
                raise DataError(f"no normalization map for entity type {mention.etype!r}")
            mentions.append(mention.with_canonical(maps[mention.etype].canonical(surface)))
        documents.append(doc.with_entities(mentions))
    return corpus.with_documents(documents)


def export_normalization_csv(maps: Mapping[str, NormalizationMap], frequencies: Mapping[str, Counter], path) -> None:
    """Audit CSV: surface,canonical,etype,frequency, sorted for determinism."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["surface", "canonical", "etype", "frequency"])
        for etype in sorted(maps):
            counts = frequencies.get(etype, Counter())
            for surface in sorted(maps[etype].entries):
                writer.writerow([surface, maps[etype].entries[surface], etype, counts.get(surface, 0)])


def corpus_surface_frequencies(corpus) -> dict[str, Counter]:
    """Preprocessed surface-form frequencies per entity type."""
    per_type: dict[str, Counter] = {}
    for doc in corpus.documents:
        for mention in doc.entities:
            per_type.setdefault(mention.etype, Counter())[preprocess_entity(mention.surface)] += 1
    return per_type
