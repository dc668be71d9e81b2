"""Hidden antiunitary symmetries behind degeneracies of Hermitian Hamiltonians."""
from .hastheory import (
    AntiunitaryOperator,
    DegenerateSubspace,
    apply,
    certify_from_symmetry,
    construct_nfold_operators,
    construct_pair_operator,
    detect_degenerate_subspaces,
    verify_has,
)
from .kernels import BACKEND
from .numkernel import eigh, random_unitary, svd_rank

__version__ = "0.1.0"
