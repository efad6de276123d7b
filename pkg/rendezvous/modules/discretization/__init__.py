"""Discrete LTV model on a uniform true-anomaly grid."""
