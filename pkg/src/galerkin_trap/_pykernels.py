"""Pure numpy triad sums; same signatures as the compiled ``_ckernels``."""

import numpy as np


def _scatter(out, vals, n_out):
    return np.bincount(out, vals.real, n_out) + 1j * np.bincount(out, vals.imag, n_out)


def triad_2d(w, out, i1, i2, coef, n_out):
    return _scatter(out, coef * (w[i1] * w[i2]), n_out)


def triad_3d(u, w, kout, out, i1, i2, n_out):
    k = kout[out]
    ua, wa = u[i1], w[i1]
    uk = np.einsum("ij,ij->i", ua, k)
    wk = np.einsum("ij,ij->i", wa, k)
    vals = uk[:, None] * w[i2] - wk[:, None] * u[i2]
    acc = np.empty((n_out, 3), dtype=np.complex128)
    for c in range(3):
        acc[:, c] = _scatter(out, vals[:, c], n_out)
    return acc
