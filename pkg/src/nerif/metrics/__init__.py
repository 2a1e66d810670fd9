"""Agreement metrics: confusion matrices, macro scores, and quadratic-weighted kappa."""
