"""Disordered mean-field diffusions on lattices with singular spatial weights."""
