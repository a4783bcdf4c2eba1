"""Adaptive finite sections for pseudoergodic tridiagonal operators."""

from ._core import BACKEND
from .errors import *  # noqa: F401,F403
from .fredholm import (FredholmClassification, classify_sets, classify_triple,
                       delta_certificate, dominance_certificate)
from .fsm import (SolveReport, full_fsm, inverse_norm, plan_windows_bi, plan_windows_semi,
                  solve_adaptive_bi, solve_adaptive_semi, solve_window, stability_cap)
from .operator import (BandedSystem, circulant_spectrum, laurent_spectrum, materialize,
                       reflect, toeplitz_inverse_norm_triangular)
from .pseudoergodic import (DiagonalField, constant_field, explicit_field, sample_iid,
                            verify_pseudoergodic, word_field)
from .spectra import (GridSpec, SpectralCloud, convergence_study, eigenvalues, hausdorff,
                      pseudospectrum_grid, singular_values)
from .symbol_sets import (SymbolSet, TriSymbolSet, ellipse, ellipse_eval, load_sets,
                          lower_spectral_bound, selfadjoint_spectrum,
                          upper_spectral_bound_contains)

__version__ = "0.1.0"
