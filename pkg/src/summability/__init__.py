"""Source-side summarization difficulty toolkit.

Estimates how well summarization systems will do on a document before any
summary exists: surface features, feature-based score predictors, rank
correlation against multi-system gold scores, and downstream selection /
ordering / perturbation experiments.
"""

__version__ = "0.1.0"
