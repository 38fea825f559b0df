"""Core modules: data model, distances, graphs, builders, search and storage."""
