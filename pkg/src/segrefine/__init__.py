"""segrefine: two-stage word segmentation.

A perceptron/lattice baseline segments raw text into words; a refiner
re-splits that output into BPE subwords, tags each subword with an
augmented positional label set, and decodes the tags back into words,
fixing a large share of the baseline's boundary errors.
"""

__version__ = "0.1.0"
