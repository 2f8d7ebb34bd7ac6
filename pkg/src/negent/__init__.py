"""Negative entanglement entropy of non-Hermitian free-fermion lattices."""
__version__ = "0.1.0"
