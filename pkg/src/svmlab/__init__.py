"""Hinge-loss learning over kernel balls with calibrated penalties.

Subpackage map:

* :mod:`svmlab.kernels`       kernel families, Gram matrices, representers
* :mod:`svmlab.spectra`       operator eigenvalues and certified tail sums
* :mod:`svmlab.subroot`       sub-root functions and their fixed points
* :mod:`svmlab.complexity`    capacity functions, localized bounds, Rademacher oracles
* :mod:`svmlab.losses`        hinge / 0-1 losses and exact relative risks
* :mod:`svmlab.distributions` synthetic circle distributions with known Bayes rule
* :mod:`svmlab.solver`        constrained and regularized hinge training
* :mod:`svmlab.selection`     penalty calibration and model selection
* :mod:`svmlab.cli`           experiment runner (``svmlab`` entry point)

The solver hot loops use the compiled extension ``svmlab._fastloops`` when
built; a NumPy implementation is selected automatically otherwise (set
``SVMLAB_PURE=1`` to force it).
"""

from ._qp import default_backend, have_compiled

__version__ = "0.1.0"

__all__ = ["default_backend", "have_compiled", "__version__"]
