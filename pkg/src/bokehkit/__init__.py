"""bokehkit: physically-based depth-of-field rendering and dataset synthesis.

Library surface, one module per concern:

- :mod:`bokehkit.image`     raster types, sRGB <-> linear, resize, file I/O
- :mod:`bokehkit.defocus`   disparity -> defocus radius -> focus masks
- :mod:`bokehkit.render`    scatter bokeh + occlusion-aware layered rendering
- :mod:`bokehkit.degrade`   seeded LQ/HQ degradation chain with replayable traces
- :mod:`bokehkit.attention` focus-masked attention reference implementation
- :mod:`bokehkit.metrics`   PSNR / SSIM and corpus reports
- :mod:`bokehkit.synth`     scene sampling, dataset + benchmark factories
- :mod:`bokehkit.service`   interactive refocus HTTP service
- :mod:`bokehkit.cli`       the `bokehkit` command
"""

__version__ = "0.1.0"

from .defocus import (DEFAULT_FOCUS_THRESHOLD, FocusMask, LensParams, binarize_focus,
                      compute_defocus, downsample_mask)
from .degrade import DegradationConfig, DegradationTrace, degrade, replay
from .metrics import psnr, ssim
from .render import (LayeredScene, RenderConfig, SceneLayer, render_ground_truth,
                     render_layer_blur, render_layered, render_scatter)

__all__ = [
    "__version__",
    "DEFAULT_FOCUS_THRESHOLD", "FocusMask", "LensParams",
    "binarize_focus", "compute_defocus", "downsample_mask",
    "DegradationConfig", "DegradationTrace", "degrade", "replay",
    "psnr", "ssim",
    "LayeredScene", "RenderConfig", "SceneLayer",
    "render_ground_truth", "render_layer_blur", "render_layered", "render_scatter",
]
