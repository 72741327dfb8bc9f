"""Regularized conical-geodesic solver and a priori estimate auditor."""
