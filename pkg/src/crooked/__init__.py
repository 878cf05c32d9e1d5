"""Desk-scale continuum machinery: finite lattice model checking, Wallman
spaces, exact-rational metric graphs, and the two witness surgeries that
drive hereditarily-indecomposable inverse limits."""

__version__ = "0.1.0"
