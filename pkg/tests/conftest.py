import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable

from novkit.corpus import (Document, EntityMention, InstitutionRecord,
                           PatentControls)
from novkit.embed import VectorStore


def make_doc(doc_id="D1", doc_type="paper", year=2010, author_count=2,
             entities=(), institutions=("Example University",), doc_class=None,
             ipc_num=None, family_size=None, citations=None):
    """Document factory; ``entities`` is a list of (surface, etype[, canonical])."""
    mentions = []
    for spec in entities:
        surface, etype = spec[0], spec[1]
        canonical = spec[2] if len(spec) > 2 else surface.lower()
        mentions.append(EntityMention(surface=surface, etype=etype, canonical=canonical))
    controls = None
    if doc_type == "patent":
        controls = PatentControls(ipc_num=ipc_num or 1, family_size=family_size or 1)
    return Document(
        id=doc_id, doc_type=doc_type, year=year, author_count=author_count,
        entities=tuple(mentions),
        institutions=tuple(InstitutionRecord(name=n) for n in institutions),
        patent_controls=controls, citations_5y=citations, doc_class=doc_class,
    )


def make_store(vectors: dict, dim=None) -> VectorStore:
    arrays = {k: np.asarray(v, dtype=np.float32) for k, v in vectors.items()}
    if dim is None:
        dim = len(next(iter(arrays.values())))
    return VectorStore(dim=dim, entries=arrays)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_unit_vectors(rng, n, dim):
    v = rng.normal(size=(n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
