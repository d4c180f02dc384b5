"""Resonant emitter dynamics on chiral flat-band lattices."""
