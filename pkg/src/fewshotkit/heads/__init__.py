"""Few-shot inference heads operating on precomputed embeddings."""
