"""metricdiff: a numerical lab for metric differentials of maps into metric spaces."""

__version__ = "0.1.0"

from ._kernels import BACKEND as kernel_backend  # noqa: F401
