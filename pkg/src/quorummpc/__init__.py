"""Quorum-based secure multiparty computation at desk scale.

The package computes an arithmetic circuit among n simulated players split
into logarithmic-size quorums, each hosting one or more circuit nodes.
Node values travel as (public masked value, secret-shared mask) pairs;
small BGW-style MPC sessions between neighbouring quorums compute each
gate without any player learning an unmasked intermediate value.
"""

from .field import Field, FieldElement, Polynomial, DEFAULT_PRIME

__all__ = ["Field", "FieldElement", "Polynomial", "DEFAULT_PRIME"]
__version__ = "0.1.0"
