"""Longest significant runs in Bernoulli nets and pseudo-tree lattices."""

__version__ = "0.1.0"
