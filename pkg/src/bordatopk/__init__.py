"""Top-k selection from probabilistic m-wise partial rankings by Borda counting."""

__version__ = "0.1.0"
