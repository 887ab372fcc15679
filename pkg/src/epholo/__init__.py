"""Exceptional points and mode holonomy of small non-Hermitian matrices."""
