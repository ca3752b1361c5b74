"""Quadrature errors and sampling numbers on spheres."""
