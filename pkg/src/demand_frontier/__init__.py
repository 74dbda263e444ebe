"""Portfolios of residential electricity demand with minimal forecast error.

Pipeline: seasonal-trend decomposition of hourly smart-meter panels,
density forecasting of the remainder (ARMA-GARCH with skew-GED innovations,
gated against unconditional KDE by a chi-squared fit test), CRPS/MAE
scoring over rolling windows, and genetic-algorithm selection of household
portfolios per target-demand partition.
"""

from demand_frontier._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
