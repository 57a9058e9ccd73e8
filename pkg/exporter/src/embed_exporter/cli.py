import sys
from pathlib import Path

import click

from .encoder import EntityEncoder
from .export import ExportError, ExportJob, export_vectors


@click.group()
def main():
    """Export entity embeddings to a vector-store file or serve them."""


@main.command()
@click.option("--entities", "entities_path", required=True, type=click.Path(exists=True),
              help="UTF-8 file with one canonical entity per line.")
@click.option("--model", "model_id", required=True, help="Model identifier or local path.")
@click.option("--out", "output_path", required=True, type=click.Path(),
              help="Output vector-store path.")
@click.option("--batch", "batch_size", default=32, show_default=True, type=int)
def export(entities_path, model_id, output_path, batch_size):
    """Encode an entity list into the binary vector store."""
    job = ExportJob(entities_path=Path(entities_path), model_id=model_id,
                    output_path=Path(output_path), batch_size=batch_size)
    try:
        count = export_vectors(job)
    except ExportError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"wrote {count} vectors to {output_path}")


@main.command()
@click.option("--model", "model_id", required=True, help="Model identifier or local path.")
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--batch", "batch_size", default=32, show_default=True, type=int)
def serve(model_id, port, batch_size):
    """Serve the /embed endpoint for the configured model."""
    import uvicorn

    from .server import create_app

    app = create_app(EntityEncoder(model_id), batch_size=batch_size)
    uvicorn.run(app, host="127.0.0.1", port=port)


if __name__ == "__main__":
    main()
