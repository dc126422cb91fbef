"""Pointwise affine spaces: frames, discrete and infinitesimal curvature, derivatives, applications."""
