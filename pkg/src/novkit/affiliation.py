"""Institution classification and document composition rules.

Institutions resolve to Academic / Industrial / Individual / Other through a
fixed stage order: local dictionary (exact or fuzzy), academic keywords,
industry keywords, person-name heuristic, then Other as the sink.  Documents
combine their institutions' classes into Academia / Industry / Cooperation /
Individual / Other.
"""

from __future__ import annotations

import csv
import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .corpus import (ACADEMIA, COOPERATION, INDIVIDUAL, INDUSTRY, OTHER,
                     PATENT, Corpus, Document)
from .errors import DataError
from .normalize import normalized_distance

ACADEMIC = "Academic"
INDUSTRIAL = "Industrial"
PERSON = "Individual"
OTHER_INSTITUTION = "Other"
INSTITUTION_CLASSES = (ACADEMIC, INDUSTRIAL, PERSON, OTHER_INSTITUTION)

# Keyword semantics: academic keywords match as token prefixes ("univer"
# covers "university", "universidad"); industry keywords must equal a whole
# token so "inc" never fires inside "incremental".  A trailing "*" forces
# prefix matching for an extension keyword; keywords containing CJK
# characters match as plain substrings since those names have no token
# boundaries.
BASE_ACADEMIC_KEYWORDS = ("edu", "univer")
BASE_INDUSTRY_KEYWORDS = ("inc", "ltd", "lp")

EXTENSION_ACADEMIC_KEYWORDS = (
    "academy", "college", "escuela", "hochschule", "hospital", "institut",
    "laborator", "polytechni", "research", "school", "universi",
    "大学", "学院", "研究所", "研究院", "医院",
)
EXTENSION_INDUSTRY_KEYWORDS = (
    "ag", "bv", "co", "company", "corp", "corporation", "gmbh",
    "holdings", "incorporated", "kk", "limited", "llc", "llp", "nv",
    "oy", "plc", "pte", "sa", "sarl", "srl", "technologies",
    "公司", "集团", "株式会社",
)

# Extra vetoes for the person-name heuristic beyond the lexicon keywords.
PERSON_VETO_WORDS = frozenset({
    "administration", "agency", "alliance", "association", "authority",
    "bureau", "business", "center", "centre", "committee", "consortium",
    "consulting", "council", "department", "enterprises", "federation",
    "foundation", "fund", "group", "industries", "international", "labs",
    "laboratories", "machines", "ministry", "network", "office",
    "organisation", "organization", "partners", "society", "software",
    "solutions", "systems", "trust", "ventures",
})

_TOKEN_SPLIT = re.compile(r"[^0-9a-z一-鿿]+")
_PERSON_TOKEN = re.compile(r"^[A-Z][A-Za-z'’-]*\.?$")


def _fold(name: str) -> str:
    return " ".join(unicodedata.normalize("NFKC", name).casefold().split())


def _tokens(name: str) -> list[str]:
    return [t for t in _TOKEN_SPLIT.split(_fold(name)) if t]


def _contains_cjk(keyword: str) -> bool:
    return any("一" <= ch <= "鿿" for ch in keyword)


def _keyword_matches(name_folded: str, tokens: Sequence[str], keyword: str, prefix_default: bool) -> bool:
    prefix = prefix_default
    if keyword.endswith("*"):
        keyword, prefix = keyword[:-1], True
    if _contains_cjk(keyword):
        return keyword in name_folded
    if prefix:
        return any(t.startswith(keyword) for t in tokens)
    return keyword in tokens


@dataclass(frozen=True)
class AffiliationLexicon:
    academic_keywords: tuple[str, ...]
    industry_keywords: tuple[str, ...]
    local_dictionary: dict[str, str] = field(default_factory=dict)
    dictionary_match_threshold: float = 0.1

    def __post_init__(self):
        if not self.academic_keywords or not self.industry_keywords:
            raise DataError("keyword lists must be non-empty")
        overlap = set(self.academic_keywords) & set(self.industry_keywords)
        if overlap:
            raise DataError(f"keywords cannot be both academic and industrial: {sorted(overlap)}")
        for value in self.local_dictionary.values():
            if value not in INSTITUTION_CLASSES:
                raise DataError(f"dictionary class must be one of {INSTITUTION_CLASSES}, got {value!r}")
        if not 0.0 <= self.dictionary_match_threshold <= 1.0:
            raise DataError("dictionary_match_threshold must be in [0, 1]")

    @classmethod
    def default(cls) -> "AffiliationLexicon":
        return cls(
            academic_keywords=BASE_ACADEMIC_KEYWORDS + EXTENSION_ACADEMIC_KEYWORDS,
            industry_keywords=BASE_INDUSTRY_KEYWORDS + EXTENSION_INDUSTRY_KEYWORDS,
        )


def load_lexicon(path) -> AffiliationLexicon:
    """Read a lexicon JSON file and merge it over the built-in keyword lists.

    User entries extend the built-ins; the base keywords are always kept.
    Format: {"academic": [...], "industry": [...],
             "dictionary": {"name": "class"}, "dictionary_threshold": 0.1}
    """
    with open(path, "r", encoding="utf-8") as handle:
        raw = json.load(handle)
    base = AffiliationLexicon.default()

    def merged(base_list, extra):
        extra = tuple(k for k in extra if k not in base_list)
        return base_list + extra

    return AffiliationLexicon(
        academic_keywords=merged(base.academic_keywords, raw.get("academic", ())),
        industry_keywords=merged(base.industry_keywords, raw.get("industry", ())),
        local_dictionary={_fold(k): v for k, v in raw.get("dictionary", {}).items()},
        dictionary_match_threshold=raw.get("dictionary_threshold", 0.1),
    )


@dataclass(frozen=True)
class ClassifiedInstitution:
    name: str
    value: str
    provenance: str


def _dictionary_lookup(folded: str, lexicon: AffiliationLexicon) -> Optional[tuple[str, str]]:
    if folded in lexicon.local_dictionary:
        return lexicon.local_dictionary[folded], f"dictionary:{folded}"
    if lexicon.dictionary_match_threshold > 0:
        best = None
        for key in sorted(lexicon.local_dictionary):
            dist = normalized_distance(folded, key)
            if dist <= lexicon.dictionary_match_threshold and (best is None or dist < best[0]):
                best = (dist, key)
        if best is not None:
            key = best[1]
            return lexicon.local_dictionary[key], f"dictionary:{key}"
    return None


def detect_person_name(name: str, extra_veto: frozenset = PERSON_VETO_WORDS,
                       lexicon: Optional[AffiliationLexicon] = None) -> bool:
    """Heuristic stand-in for NER over applicant names.

    True for 2-4 capitalized tokens (middle initials allowed) with no
    organizational keyword; digits or lexicon keywords veto the match.
    """
    raw_tokens = name.replace(",", " ").split()
    if not 2 <= len(raw_tokens) <= 4:
        return False
    if any(ch.isdigit() for ch in name):
        return False
    if not all(_PERSON_TOKEN.match(t) for t in raw_tokens):
        return False
    folded = _fold(name)
    tokens = _tokens(name)
    if any(t in extra_veto for t in tokens):
        return False
    lex = lexicon or AffiliationLexicon.default()
    for keyword in lex.academic_keywords:
        if _keyword_matches(folded, tokens, keyword, prefix_default=True):
            return False
    for keyword in lex.industry_keywords:
        if _keyword_matches(folded, tokens, keyword, prefix_default=False):
            return False
    return True


def classify_institution(name: str, lexicon: AffiliationLexicon) -> ClassifiedInstitution:
    """Resolve one institution name; the provenance records the stage that fired."""
    if not name or not name.strip():
        raise DataError("institution name must be non-empty")
    folded = _fold(name)
    tokens = _tokens(name)

    hit = _dictionary_lookup(folded, lexicon)
    if hit is not None:
        return ClassifiedInstitution(name, hit[0], hit[1])
    for keyword in lexicon.academic_keywords:
        if _keyword_matches(folded, tokens, keyword, prefix_default=True):
            return ClassifiedInstitution(name, ACADEMIC, f"academic_keyword:{keyword}")
    for keyword in lexicon.industry_keywords:
        if _keyword_matches(folded, tokens, keyword, prefix_default=False):
            return ClassifiedInstitution(name, INDUSTRIAL, f"industry_keyword:{keyword}")
    if detect_person_name(name, lexicon=lexicon):
        return ClassifiedInstitution(name, PERSON, "person_name")
    return ClassifiedInstitution(name, OTHER_INSTITUTION, "fallback")


def classify_paper_author_institution(declared_type: str) -> str:
    """Map a GRID/ROR category onto the two sectors of interest.

    Education and healthcare count as academic; companies as industrial;
    everything else is outside the comparison and lands in Other.
    """
    declared = declared_type.lower()
    if declared in ("education", "healthcare"):
        return ACADEMIC
    if declared == "company":
        return INDUSTRIAL
    return OTHER_INSTITUTION


def classify_document(doc: Document, classes: Sequence[str]) -> str:
    """Combine per-institution classes into the document class.

    Both sectors present -> Cooperation; one sector present -> that sector
    (Other and Individual institutions never veto); a patent whose assignees
    are all Individuals -> Individual; otherwise Other.
    """
    if not classes:
        raise DataError(f"document {doc.id!r} has no institutions to classify")
    has_academic = ACADEMIC in classes
    has_industrial = INDUSTRIAL in classes
    if has_academic and has_industrial:
        return COOPERATION
    if has_academic:
        return ACADEMIA
    if has_industrial:
        return INDUSTRY
    if doc.doc_type == PATENT and classes and all(c == PERSON for c in classes):
        return INDIVIDUAL
    return OTHER


def resolve_institution(record, lexicon: AffiliationLexicon) -> ClassifiedInstitution:
    """Dispatch on declared type when present, otherwise on the name."""
    if record.declared_type is not None:
        value = classify_paper_author_institution(record.declared_type)
        return ClassifiedInstitution(record.name, value, f"declared:{record.declared_type}")
    return classify_institution(record.name, lexicon)


def classify_corpus(corpus: Corpus, lexicon: AffiliationLexicon) -> tuple[Corpus, list[ClassifiedInstitution]]:
    """Classify every institution and document; returns the annotated corpus
    plus the flat list of per-institution results (for audits and the review
    list)."""
    documents = []
    details: list[ClassifiedInstitution] = []
    for doc in corpus:
        resolved = [resolve_institution(record, lexicon) for record in doc.institutions]
        details.extend(resolved)
        institutions = [record.with_resolved_class(r.value)
                        for record, r in zip(doc.institutions, resolved)]
        doc_class = classify_document(doc, [r.value for r in resolved])
        documents.append(doc.with_institutions(institutions).with_doc_class(doc_class))
    return corpus.with_documents(documents), details


def review_candidates(details: Sequence[ClassifiedInstitution], min_count: int = 2) -> list[tuple[str, int, str]]:
    """Names resolved to Individual or Other that recur at least ``min_count``
    times; these go to a human reviewer."""
    counts: Counter = Counter()
    assigned: dict[str, str] = {}
    for item in details:
        if item.value in (PERSON, OTHER_INSTITUTION):
            counts[item.name] += 1
            assigned[item.name] = item.value
    return [(name, counts[name], assigned[name])
            for name in sorted(counts) if counts[name] >= min_count]


def export_review_list(candidates: Sequence[tuple[str, int, str]], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["name", "count", "assigned_class"])
        for name, count, assigned_class in candidates:
            writer.writerow([name, count, assigned_class])
