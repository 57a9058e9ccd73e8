"""File-mode export: entity list in, binary vector store out."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .encoder import EntityEncoder
from .store import write_store


class ExportError(Exception):
    pass


@dataclass
class ExportJob:
    entities_path: Path
    model_id: str
    output_path: Path
    batch_size: int = 32

    def __post_init__(self):
        if self.batch_size < 1:
            raise ExportError("batch size must be >= 1")


def read_entity_file(path) -> list[str]:
    """One canonical entity per line; entries must be non-empty and unique."""
    entities: list[str] = []
    seen: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            entity = line.rstrip("\n")
            if not entity.strip():
                raise ExportError(f"line {line_number}: empty entity")
            if entity in seen:
                raise ExportError(
                    f"line {line_number}: duplicate entity {entity!r} (first at line {seen[entity]})")
            seen[entity] = line_number
            entities.append(entity)
    if not entities:
        raise ExportError("entity file is empty")
    return entities


def export_vectors(job: ExportJob, encoder: EntityEncoder | None = None) -> int:
    """Encode every entity and write the store; returns the entity count."""
    entities = read_entity_file(job.entities_path)
    encoder = encoder or EntityEncoder(job.model_id)
    matrix = encoder.encode(entities, batch_size=job.batch_size)
    vectors = {entity: matrix[i] for i, entity in enumerate(entities)}
    write_store(vectors, encoder.hidden_size, job.output_path)
    return len(entities)
