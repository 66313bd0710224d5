"""Maximally multipartite entangled states: purity potentials, optimizers, reference states."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CapacityError,
    InvalidConfigError,
    InvalidInputError,
    InvalidStateError,
    MMESError,
    NumericalFailure,
)
from .state import (  # noqa: E402
    Bipartition,
    PureState,
    enumerate_balanced,
    merge_index,
    purity,
    purity_oracle,
    split_index,
)
from .potential import (  # noqa: E402
    DeltaKernel,
    PurityReport,
    cost,
    g_coeff,
    phase_purity,
    potential_me,
    potential_via_delta,
)
