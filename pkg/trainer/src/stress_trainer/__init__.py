"""Two-stage adapter finetune runner.

Consumes the plan file and task manifests emitted by the dataset
toolkit (file contracts only; no code dependency) and executes the
staged schedule: full data first, then the verified subset, with one
continuous learning-rate scheduler across the boundary. The default mode
is a dry run that exercises scheduling, batching and loss masking
without touching model weights.
"""

__version__ = "0.1.0"
