"""Exception types shared across the package.

Validation problems raise plain ``ValueError``. Numerical failures that
signal a degenerate configuration (tied order statistics, a kernel matrix
that is not positive semidefinite, a singular optimisation system) derive
from :class:`NumericalError` so callers, the CLI in particular, can tell
the two apart.
"""


class NumericalError(Exception):
    """Base class for numerical failures."""

    kind = "numerical"


class TieError(NumericalError):
    """Order-statistic spacings vanish or have mixed signs, or rank floors collide."""

    kind = "tie"


class KernelNotPSDError(NumericalError):
    kind = "kernel_not_psd"


class SingularSystemError(NumericalError):
    kind = "singular_system"
