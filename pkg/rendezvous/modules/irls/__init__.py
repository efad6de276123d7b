"""Iteratively reweighted least squares for l1 and l2/l1 control sparsity."""
