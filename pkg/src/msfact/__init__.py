"""Matrix spectral factorization on the unit circle.

Two drivers are provided: :func:`classic_factorize`, which repairs analyticity
of leading principal submatrices one row at a time, and
:func:`doubling_factorize`, which repairs diagonal blocks of sizes 2, 4, 8, ...
with independent (parallelisable) block completions at each level.
"""

__version__ = "0.1.0"

from .laurent import (  # noqa: E402
    GridSamples,
    LaurentMatrixPoly,
    adjoint,
    block_hermitian,
    block_transpose,
    from_grid,
    is_paraunitary,
    max_abs,
    multiply,
    project_minus,
    project_plus,
    to_grid,
)
from .scalar import ScalarFactor, paley_wiener_check, scalar_factorize  # noqa: E402
from .seed import TriangularSeed, seed  # noqa: E402
from .completion import CompletionInput, ParaunitaryFactor, complete  # noqa: E402
from .report import FactorConfig, FactorReport  # noqa: E402
from .classic import classic_factorize, tail_order  # noqa: E402
from .doubling import doubling_factorize, equivalence_to_classic, pad_to_pow2  # noqa: E402
from .metrics import constant_unitary_gap, metric_c1, metric_c2, outer_check  # noqa: E402
from .bench import GeneratorConfig, benchmark, generate_density  # noqa: E402
