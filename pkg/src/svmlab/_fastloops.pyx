# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the hinge solvers.

Only the genuinely sequential kernels live here; everything else in the
package is vectorized NumPy.  A NumPy fallback with identical semantics is
selected at import time when this module is not built.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def cd_sweeps(double[:, ::1] Q, double[::1] a, double[::1] s, double ub,
              double mu, int sweeps):
    """Cyclic coordinate ascent on max sum(a) - a'Qa/(4 mu), a in [0, ub]^n.

    ``s`` must hold Q @ a on entry and is kept in sync; the exact coordinate
    maximizer is a_i + (2 mu - s_i)/Q_ii clipped to the box.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, t
    cdef double qii, ai, new, delta, slope
    cdef double twomu = 2.0 * mu
    for t in range(sweeps):
        for i in range(n):
            qii = Q[i, i]
            ai = a[i]
            if qii > 0.0:
                new = ai + (twomu - s[i]) / qii
                if new < 0.0:
                    new = 0.0
                elif new > ub:
                    new = ub
            else:
                slope = 1.0 - s[i] / twomu
                if slope > 0.0:
                    new = ub
                elif slope < 0.0:
                    new = 0.0
                else:
                    new = ai
            delta = new - ai
            if delta != 0.0:
                a[i] = new
                for j in range(n):
                    s[j] += delta * Q[i, j]
