"""Slice-embedding exporter: runs a pretrained code transformer over
tokenized slices and writes the embedding interchange file."""

__version__ = "0.1.0"

from .export import ExportJob, export_embeddings

__all__ = ["ExportJob", "export_embeddings", "__version__"]
