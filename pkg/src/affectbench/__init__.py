"""Event-centered multimodal physiology workbench.

Subpackages cover the full chain: onset-annotation capture (HTTP service),
signal conditioning, event epoching, spectral and autonomic validation
statistics, and a labeling-strategy classification benchmark over a
deterministic synthetic corpus.
"""

__version__ = "0.1.0"
