"""Chromosome-shuffle Markov chains: spectral gaps, comparison inequalities and witnesses."""

__version__ = "0.1.0"
