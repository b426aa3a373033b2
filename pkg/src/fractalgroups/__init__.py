"""Self-similar groups given by Mealy automata, their Schreier graphs and
spectra, and the rational maps produced by Schur complements of pencils."""

__version__ = "0.1.0"
