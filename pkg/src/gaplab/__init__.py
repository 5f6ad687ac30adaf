"""gaplab: a numerical laboratory for eigenvalue gaps, eigenvector
structure, and nodal domains of sparse random symmetric matrices."""

__version__ = "0.1.0"

from .ensemble import (
    EnsembleSpec,
    EntryDistribution,
    SymMatrix,
    derive_stream_rng,
    gen_er_adjacency,
    gen_sparse_symmetric,
)
from .eigensolver import Spectrum, eig_sym, interlacing_check, operator_norm

__all__ = [
    "EnsembleSpec",
    "EntryDistribution",
    "SymMatrix",
    "Spectrum",
    "derive_stream_rng",
    "eig_sym",
    "gen_er_adjacency",
    "gen_sparse_symmetric",
    "interlacing_check",
    "operator_norm",
    "__version__",
]
