"""Variable projection for structured low-rank fits.

Fits A ~ B(sigma) C^H by eliminating C and minimizing the projected residual
f = ||A - Q Q^H A||_F over sigma, with the gradient over B computed by a
reverse sweep through modified Gram-Schmidt.
"""
from .adjoint import (
    GradientResult,
    account_words,
    evaluate_mgs,
    gradient_ags,
    gradient_amgs,
    gradient_fd,
    model_flops,
)
from .blocksystem import gradient_blocksystem
from .errors import ObjectiveNearZero, RankDeficient, SizeCap, VarproError
from .matcore import (
    cgs_orthonormalize,
    mgs_orthonormalize,
    mgs_qr,
    objective_value,
    orthogonality_defect,
    projection_residual,
    recover_c,
)
from .problems import ProblemSpec, generate, start_point
from .solve import SolveOptions, SolveReport, Termination, broyden_minimize
from .structure import (
    ExponentialModel,
    FreeModel,
    KroneckerModel,
    ParamModel,
    adjoint_sigma,
    make_model,
    value_and_gradient,
)

__version__ = "0.1.0"
