"""deltacommit: commit message generation from code property graph deltas.

The package parses a small Java-like language into code property graphs,
computes delta graphs between program versions by set algebra, generates
candidate commit messages (template or LLM backends), ranks them with a
trainable graph scorer, and evaluates messages with n-gram overlap,
longest-common-subsequence, and unigram-alignment metrics.
"""

from .errors import DeltaCommitError

__version__ = "0.1.0"

__all__ = ["DeltaCommitError", "__version__"]
