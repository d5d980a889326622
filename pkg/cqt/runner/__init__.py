"""Sweep and convergence runners."""
