"""Numerical tolerances, in one place."""

# validity checks on constructed objects
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
NORM_TOL = 1e-10
POVM_SUM_TOL = 1e-9

# eigenvalues below SUPPORT_RTOL * max eigenvalue are treated as zero
SUPPORT_RTOL = 1e-12

# slack allowed on the inequalities being certified
INEQUALITY_SLACK = 1e-9
MIRROR_TOL = 1e-8

# enumeration budgets
CLASSICAL_ENUM_BUDGET = 10**7
EXACT_BRANCH_BUDGET = 10**7
EXACT_ENTRY_BUDGET = 5 * 10**7
HASH_EXHAUSTIVE_BUDGET = 10**10
