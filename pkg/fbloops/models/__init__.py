"""Domain models and data structures."""
