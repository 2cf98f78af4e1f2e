"""te_maxwell: numerical spectral-analysis toolkit for Maxwell transmission eigenvalues.

Subpackages map one-to-one onto the computation stages:

* :mod:`te_maxwell.media`     media parameters, wedge regions, admissibility
* :mod:`te_maxwell.halfspace` exact Fourier-symbol half-space Cauchy solver
* :mod:`te_maxwell.certify`   boundary-symbol lower-bound certifier
* :mod:`te_maxwell.ball`      ball-geometry transmission-eigenvalue oracle
* :mod:`te_maxwell.radial`    radial solution operator and its spectrum
* :mod:`te_maxwell.slab`      interior-decay probe on a 1D slab
* :mod:`te_maxwell.cli`       batch command-line front end

Hot kernels are numba-jitted with a pure-numpy fallback; select with the
``TE_MAXWELL_BACKEND`` environment variable ("numba" or "numpy").
"""

from ._kernels import active_backend, set_backend
from .media import MediaQuad, RadialMedia, Wavenumber, WedgeSpec

__version__ = "0.1.0"

__all__ = [
    "MediaQuad",
    "RadialMedia",
    "Wavenumber",
    "WedgeSpec",
    "active_backend",
    "set_backend",
    "__version__",
]
