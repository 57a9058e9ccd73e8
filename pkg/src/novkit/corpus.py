"""Corpus loading, validation, filtering, and analysis-variable construction.

The corpus file is UTF-8 JSONL, one document per line:

    {"id": str, "doc_type": "paper"|"patent", "year": int, "author_count": int,
     "institutions": [{"name": str, "declared_type": str|null}],
     "entities": [{"surface": str, "etype": "Method"|"Tool"|"Dataset"|"Metric"}],
     "ipc_num": int|null, "family_size": int|null, "citations_5y": int|null}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

from .errors import CorpusFormatError, DataError

PAPER = "paper"
PATENT = "patent"
DOC_TYPES = (PAPER, PATENT)

ENTITY_TYPES = ("Dataset", "Method", "Metric", "Tool")

DECLARED_TYPES = ("education", "company", "facility", "nonprofit",
                  "government", "healthcare", "archive", "other")

# Document-level classes assigned by the affiliation module.
ACADEMIA = "Academia"
INDUSTRY = "Industry"
COOPERATION = "Cooperation"
INDIVIDUAL = "Individual"
OTHER = "Other"
DOC_CLASSES = (ACADEMIA, INDUSTRY, COOPERATION, INDIVIDUAL, OTHER)
REGRESSION_CLASSES = (ACADEMIA, INDUSTRY, COOPERATION)

DEFAULT_YEAR_RANGE = (2000, 2022)


@dataclass(frozen=True)
class EntityMention:
    surface: str
    etype: str
    canonical: Optional[str] = None

    def with_canonical(self, canonical: str) -> "EntityMention":
        if not canonical:
            raise DataError("canonical form must be non-empty")
        return replace(self, canonical=canonical)


@dataclass(frozen=True)
class InstitutionRecord:
    name: str
    declared_type: Optional[str] = None
    resolved_class: Optional[str] = None

    def with_resolved_class(self, resolved_class: str) -> "InstitutionRecord":
        return replace(self, resolved_class=resolved_class)


@dataclass(frozen=True)
class PatentControls:
    ipc_num: int
    family_size: int


@dataclass(frozen=True)
class Document:
    id: str
    doc_type: str
    year: int
    author_count: int
    entities: tuple[EntityMention, ...]
    institutions: tuple[InstitutionRecord, ...]
    patent_controls: Optional[PatentControls] = None
    citations_5y: Optional[int] = None
    doc_class: Optional[str] = None

    def with_entities(self, entities: Sequence[EntityMention]) -> "Document":
        return replace(self, entities=tuple(entities))

    def with_institutions(self, institutions: Sequence[InstitutionRecord]) -> "Document":
        return replace(self, institutions=tuple(institutions))

    def with_doc_class(self, doc_class: str) -> "Document":
        if doc_class not in DOC_CLASSES:
            raise DataError(f"unknown document class {doc_class!r}")
        return replace(self, doc_class=doc_class)

    def canonical_entities(self) -> dict[str, str]:
        """Distinct canonical entities of this document, mapped to an entity
        type label (the lexicographically smallest type among the mentions
        sharing the canonical form, so labels are deterministic)."""
        out: dict[str, str] = {}
        for mention in self.entities:
            if mention.canonical is None:
                raise DataError(f"document {self.id!r} has unnormalized mention {mention.surface!r}")
            prev = out.get(mention.canonical)
            if prev is None or mention.etype < prev:
                out[mention.canonical] = mention.etype
        return out

    def distinct_entity_count(self) -> int:
        return len(self.canonical_entities())


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {doc.id: doc for doc in self.documents})

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def get(self, doc_id: str) -> Document:
        return self._by_id[doc_id]

    def with_documents(self, documents: Sequence[Document]) -> "Corpus":
        return Corpus(documents=tuple(documents))

    def subset(self, doc_type: str) -> "Corpus":
        return Corpus(tuple(d for d in self.documents if d.doc_type == doc_type))


def _require(record: dict, key: str, line: int):
    if key not in record or record[key] is None:
        raise CorpusFormatError(line, f"missing required field {key!r}")
    return record[key]


def _parse_document(record: dict, line: int, year_range) -> Document:
    doc_id = _require(record, "id", line)
    if not isinstance(doc_id, str) or not doc_id:
        raise CorpusFormatError(line, "id must be a non-empty string")

    doc_type = _require(record, "doc_type", line)
    if doc_type not in DOC_TYPES:
        raise CorpusFormatError(line, f"unknown doc_type {doc_type!r}")

    year = _require(record, "year", line)
    if not isinstance(year, int):
        raise CorpusFormatError(line, "year must be an integer")
    if year_range is not None and not year_range[0] <= year <= year_range[1]:
        raise CorpusFormatError(line, f"year {year} outside configured range {year_range[0]}-{year_range[1]}")

    author_count = _require(record, "author_count", line)
    if not isinstance(author_count, int) or author_count < 1:
        raise CorpusFormatError(line, f"author_count must be a positive integer, got {author_count!r}")

    institutions = []
    for inst in _require(record, "institutions", line):
        name = inst.get("name")
        if not name:
            raise CorpusFormatError(line, "institution name must be non-empty")
        declared = inst.get("declared_type")
        if declared is not None:
            declared = declared.lower()
            if declared not in DECLARED_TYPES:
                raise CorpusFormatError(line, f"unknown declared_type {inst['declared_type']!r}")
        institutions.append(InstitutionRecord(name=name, declared_type=declared))

    entities = []
    for ent in _require(record, "entities", line):
        surface = ent.get("surface")
        if not surface:
            raise CorpusFormatError(line, "entity surface must be non-empty")
        etype = ent.get("etype")
        if etype not in ENTITY_TYPES:
            raise CorpusFormatError(line, f"unknown etype {etype!r}")
        entities.append(EntityMention(surface=surface, etype=etype))

    ipc_num = record.get("ipc_num")
    family_size = record.get("family_size")
    if doc_type == PATENT:
        if ipc_num is None or family_size is None:
            raise CorpusFormatError(line, "patents require ipc_num and family_size")
        if not (isinstance(ipc_num, int) and ipc_num >= 1):
            raise CorpusFormatError(line, f"ipc_num must be a positive integer, got {ipc_num!r}")
        if not (isinstance(family_size, int) and family_size >= 1):
            raise CorpusFormatError(line, f"family_size must be a positive integer, got {family_size!r}")
        controls = PatentControls(ipc_num=ipc_num, family_size=family_size)
    else:
        if ipc_num is not None or family_size is not None:
            raise CorpusFormatError(line, "papers must not carry ipc_num or family_size")
        controls = None

    citations = record.get("citations_5y")
    if citations is not None and (not isinstance(citations, int) or citations < 0):
        raise CorpusFormatError(line, f"citations_5y must be a non-negative integer, got {citations!r}")

    return Document(
        id=doc_id,
        doc_type=doc_type,
        year=year,
        author_count=author_count,
        entities=tuple(entities),
        institutions=tuple(institutions),
        patent_controls=controls,
        citations_5y=citations,
    )


def load_corpus(path, year_range=DEFAULT_YEAR_RANGE) -> Corpus:
    """Parse a JSONL corpus file; documents come back ordered by id.

    Pass ``year_range=None`` to disable the year-window check.
    """
    documents: dict[str, Document] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(line_number, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise CorpusFormatError(line_number, "document record must be a JSON object")
            doc = _parse_document(record, line_number, year_range)
            if doc.id in documents:
                raise CorpusFormatError(line_number, f"duplicate id {doc.id!r}")
            documents[doc.id] = doc
    return Corpus(tuple(documents[k] for k in sorted(documents)))


def document_to_record(doc: Document) -> dict:
    controls = doc.patent_controls
    return {
        "id": doc.id,
        "doc_type": doc.doc_type,
        "year": doc.year,
        "author_count": doc.author_count,
        "institutions": [{"name": i.name, "declared_type": i.declared_type} for i in doc.institutions],
        "entities": [{"surface": e.surface, "etype": e.etype} for e in doc.entities],
        "ipc_num": controls.ipc_num if controls else None,
        "family_size": controls.family_size if controls else None,
        "citations_5y": doc.citations_5y,
    }


def write_corpus(corpus: Corpus, path) -> None:
    """Serialize back to the JSONL schema (load -> write -> load is identity)."""
    with open(path, "w", encoding="utf-8") as handle:
        for doc in corpus.documents:
            handle.write(json.dumps(document_to_record(doc), ensure_ascii=False, sort_keys=True) + "\n")


def filter_for_regression(corpus: Corpus, novelty: Mapping[str, "NoveltyResult"],
                          min_entities: int = 5, require_positive_score: bool = True) -> Corpus:
    """Drop documents outside the regression sample.

    Retained documents have at least ``min_entities`` distinct canonical
    entities, a strictly positive novelty score, and a document class in
    {Academia, Industry, Cooperation}.  Order-preserving and idempotent.
    """
    missing = [doc.id for doc in corpus if doc.id not in novelty or doc.doc_class is None]
    if missing:
        raise DataError(f"documents missing novelty result or document class: {missing}")

    retained = []
    for doc in corpus:
        result = novelty[doc.id]
        if doc.distinct_entity_count() < min_entities:
            continue
        score = result.score
        if require_positive_score and not (score is not None and score > 0.0):
            continue
        if doc.doc_class not in REGRESSION_CLASSES:
            continue
        retained.append(doc)
    return corpus.with_documents(retained)


@dataclass(frozen=True)
class AnalysisRow:
    doc_id: str
    doc_type: str
    year: int
    novelty_score: float
    z_novelty: Optional[float]
    ns_top: int
    academia: int
    cooperation: int
    ln_authors: float
    ln_institutions: float
    ln_entities: float
    ln_ipc: Optional[float] = None
    ln_family: Optional[float] = None


@dataclass(frozen=True)
class AnalysisTable:
    rows: tuple[AnalysisRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def subset(self, doc_type: str) -> "AnalysisTable":
        return AnalysisTable(tuple(r for r in self.rows if r.doc_type == doc_type))

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]


def _ln(value: int, what: str, doc_id: str) -> float:
    if value < 1:
        raise DataError(f"document {doc_id!r}: {what} = {value} < 1, log transform undefined")
    return math.log(value)


def build_variables(corpus: Corpus, novelty: Mapping[str, "NoveltyResult"]) -> AnalysisTable:
    """One regression row per document; continuous controls are natural logs.

    Expects ``filter_for_regression`` to have been applied, so every document
    carries a class in {Academia, Industry, Cooperation} and a defined score.
    """
    rows = []
    for doc in corpus:
        result = novelty[doc.id]
        if result.score is None:
            raise DataError(f"document {doc.id!r} has an undefined novelty score")
        if doc.doc_class not in REGRESSION_CLASSES:
            raise DataError(f"document {doc.id!r} has class {doc.doc_class!r}, outside the regression sample")
        ln_ipc = ln_family = None
        if doc.doc_type == PATENT:
            ln_ipc = _ln(doc.patent_controls.ipc_num, "ipc_num", doc.id)
            ln_family = _ln(doc.patent_controls.family_size, "family_size", doc.id)
        rows.append(AnalysisRow(
            doc_id=doc.id,
            doc_type=doc.doc_type,
            year=doc.year,
            novelty_score=result.score,
            z_novelty=result.z_score,
            ns_top=int(result.ns_top),
            academia=int(doc.doc_class == ACADEMIA),
            cooperation=int(doc.doc_class == COOPERATION),
            ln_authors=_ln(doc.author_count, "author_count", doc.id),
            ln_institutions=_ln(len(doc.institutions), "institution count", doc.id),
            ln_entities=_ln(doc.distinct_entity_count(), "entity count", doc.id),
            ln_ipc=ln_ipc,
            ln_family=ln_family,
        ))
    return AnalysisTable(tuple(rows))
