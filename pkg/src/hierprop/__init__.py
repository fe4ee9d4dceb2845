"""Hierarchy-aware graph-based label propagation for multilabel prediction."""
