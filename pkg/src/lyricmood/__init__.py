"""Mood tagging for Chinese song lyrics.

Pipeline: clean and segment lyrics, train CBOW word embeddings, then
classify into 4 moods (happiness, catharsis, sadness, quiet) with either
an RBF-SVM over tf-idf / category-lexicon features or a CNN/RNN/LSTM
over frozen embedding matrices. Every numerical component is verified by
brute-force oracles or finite-difference gradient checks.
"""

from .corpus import MoodLabel

__version__ = "0.1.0"
__all__ = ["MoodLabel", "__version__"]
