"""Input data: MNIST IDX files and synthetic generators."""
