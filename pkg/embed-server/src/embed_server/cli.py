"""Command-line entry points: serve the API, or encode a file offline."""

from __future__ import annotations

import functools

import click
import uvicorn

from .app import ServerConfig, create_app
from .encoder import DEFAULT_MODEL
from .files import embed_file


def _friendly(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (ValueError, RuntimeError, OSError) as exc:
            raise click.ClickException(str(exc))

    return wrapper


@click.group()
def main():
    """Sentence-embedding HTTP server and batch encoder."""


@main.command()
@click.option("--model", default=DEFAULT_MODEL, show_default=True,
              help="Encoder id: hashed-<dim> or st:<checkpoint>.")
@click.option("--port", type=int, default=8100, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--max-batch", type=int, default=256, show_default=True,
              help="Largest accepted texts list; larger requests get 413.")
@click.option("--max-text-length", type=int, default=8192, show_default=True,
              help="Longest accepted text; longer requests get 413.")
@_friendly
def serve(model, port, host, max_batch, max_text_length):
    """Run the embedding service until interrupted."""
    config = ServerConfig(model=model, port=port, max_batch=max_batch,
                          max_text_length=max_text_length)
    app = create_app(config)
    click.echo(f"serving {model} on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command(name="embed-file")
@click.option("--in", "in_path", required=True, type=click.Path(),
              help="Corpus file: CSV with id,text header, or JSONL.")
@click.option("--out", required=True, type=click.Path(), help="Output TBEM path.")
@click.option("--model", default=DEFAULT_MODEL, show_default=True)
@_friendly
def embed_file_cmd(in_path, out, model):
    """Encode every document in a corpus file to a TBEM matrix."""
    rows, dim = embed_file(in_path, out, model=model)
    click.echo(f"wrote {out} ({rows} rows, dim {dim})")


if __name__ == "__main__":
    main()
