"""Command implementations and the benchmark harness."""
