"""Compositionality probes: treebank phrases, embedding stores, probes and statistics."""

from ._compprobe import *  # noqa: F401,F403
from ._compprobe import Error

__all__ = [name for name in dir() if not name.startswith("_")]
