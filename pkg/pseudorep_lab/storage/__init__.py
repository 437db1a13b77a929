"""Storage module exports"""

from .artifact_store import ArtifactStore, resolve_output_dir
from .golden_store import GoldenStore

__all__ = ["ArtifactStore", "GoldenStore", "resolve_output_dir"]
