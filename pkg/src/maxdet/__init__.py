"""Lower bounds for the maximal determinant of {+1,-1} matrices by bordering Hadamard matrices."""

__version__ = "0.1.0"

from .bounds import LogScalar, table2, thm1_dbar, thm2_dbar
from .exact_stats import mu_exact, sigma2_exact
from .hadamard import default_registry, paley_i, paley_ii, sylvester
from .signmatrix import SignMatrix

__all__ = [
    "LogScalar", "SignMatrix", "default_registry", "mu_exact", "paley_i", "paley_ii",
    "sigma2_exact", "sylvester", "table2", "thm1_dbar", "thm2_dbar",
]
