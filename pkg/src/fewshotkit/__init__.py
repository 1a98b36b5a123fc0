"""Few-shot classification toolkit over precomputed embeddings.

Samples K-way N-shot episodes from embedding datasets, classifies queries
with five inference heads (prototype softmax, nearest class mean,
Laplacian-regularized transduction, optimal-transport grid matching,
double-centered channel-covariance matching) and benchmarks them over
thousands of episodes with 95% confidence intervals.
"""

__version__ = "0.1.0"
