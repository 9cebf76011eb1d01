"""Output records and run configuration schemas."""
