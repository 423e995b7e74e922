"""U-statistics, median-of-means estimators and their deviation bounds."""
from .bounds import (
    BoundQuery,
    BoundResult,
    arcones_gine_threshold_bounded,
    arcones_gine_threshold_variance,
    bernstein_mgf_bound,
    bernstein_tail,
    bernstein_threshold,
    hoeffding_mgf_bound,
    hoeffding_tail,
    hoeffding_threshold,
)
from .core import (
    BlockEstimate,
    Sample,
    block_estimator,
    k3_statistic,
    permutation_average,
    u_statistic,
)
from .kernels import (
    Kernel,
    bounded_wrap,
    constant_kernel,
    kernel_from_name,
    make_kernel,
    mean_kernel,
    product_kernel,
    variance_kernel,
)
from .robust import MoMConfig, blocks_from_delta, median_of_means, mom_u_statistic

__version__ = "0.1.0"
