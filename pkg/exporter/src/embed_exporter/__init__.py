from .encoder import EntityEncoder
from .export import ExportError, ExportJob, export_vectors, read_entity_file
from .server import create_app
from .store import write_store

__version__ = "0.1.0"
