"""Pure Python fallback for the compiled relaxation kernels.

Same sweep semantics as the compiled versions, only slower.  Row partial
sums use numpy dot products, so results can differ from the compiled
kernels at roundoff level but nowhere beyond.
"""

import numpy as np


def psor_sweep(indptr, indices, data, diag, w, q, omega):
    n = len(w)
    for i in range(n):
        a, b = indptr[i], indptr[i + 1]
        s = np.dot(data[a:b], w[indices[a:b]]) - diag[i] * w[i]
        wnew = w[i] + omega * ((q[i] - s) / diag[i] - w[i])
        w[i] = wnew if wnew > 0.0 else 0.0


def forward_subst(indptr, indices, data, diag, b, out):
    n = len(b)
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        js = indices[lo:hi]
        cut = np.searchsorted(js, i)
        out[i] = (b[i] - np.dot(data[lo:lo + cut], out[js[:cut]])) / diag[i]


def backward_subst(indptr, indices, data, diag, b, out):
    n = len(b)
    for i in range(n - 1, -1, -1):
        lo, hi = indptr[i], indptr[i + 1]
        js = indices[lo:hi]
        cut = np.searchsorted(js, i, side="right")
        out[i] = (b[i] - np.dot(data[lo + cut:hi], out[js[cut:]])) / diag[i]
