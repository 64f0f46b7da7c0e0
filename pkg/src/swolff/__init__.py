"""Schrieffer-Wolff transformations: exact direct rotation, perturbative series, tree
diagrams, local transformation on spin lattices and linked-cluster checks."""

__version__ = "0.1.0"
