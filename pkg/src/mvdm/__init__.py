"""Multi-view diffusion maps."""

from ._accel import BACKEND
from .exceptions import DataError, MVDMError, NumericalError
from .kernels import (KernelMatrix, bandwidth_scan, correlation_kernel, gaussian_kernel,
                      laplacian_kernel, make_kernel, max_min_bandwidth)
from .operators import (MultiViewOperator, StochasticOperator, alternating_diffusion,
                        assemble_multiview, desa_operator, generalized_multiview, kcca,
                        kernel_product, kernel_sum, single_view_operator, transition_probability)
from .spectral import (SpectralModel, coupled_mapping_objective, decay_report, decompose,
                       decompose_svd_route)
from .embedding import (Embedding, cross_view_distance, inner_view_distance, multiview_distance,
                        multiview_embed, single_view_cross_distance, single_view_embed)
from .extension import ExtensionModel, extend_x, extend_y, fit_extension

__version__ = "0.1.0"
