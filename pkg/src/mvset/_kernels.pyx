# cython: boundscheck=False, wraparound=False, cdivision=True
"""Hot relaxation sweeps over CSR matrices.

Lexicographic projected SOR and the triangular substitutions behind the
symmetric Gauss-Seidel preconditioner.  Loops release the GIL so callers
may run independent solves in threads.
"""


def psor_sweep(const int[::1] indptr, const int[::1] indices,
               const double[::1] data, const double[::1] diag,
               double[::1] w, const double[::1] q, double omega):
    """One in-place projected SOR sweep for w >= 0, A w >= q, w (Aw - q) = 0."""
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t i
    cdef int k
    cdef double s, wnew
    with nogil:
        for i in range(n):
            s = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                s += data[k] * w[indices[k]]
            s -= diag[i] * w[i]
            wnew = w[i] + omega * ((q[i] - s) / diag[i] - w[i])
            w[i] = wnew if wnew > 0.0 else 0.0


def forward_subst(const int[::1] indptr, const int[::1] indices,
                  const double[::1] data, const double[::1] diag,
                  const double[::1] b, double[::1] out):
    """Solve (D + L) x = b with L the strict lower triangle of the CSR matrix."""
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t i
    cdef int k, j
    cdef double s
    with nogil:
        for i in range(n):
            s = b[i]
            for k in range(indptr[i], indptr[i + 1]):
                j = indices[k]
                if j < i:
                    s -= data[k] * out[j]
            out[i] = s / diag[i]


def backward_subst(const int[::1] indptr, const int[::1] indices,
                   const double[::1] data, const double[::1] diag,
                   const double[::1] b, double[::1] out):
    """Solve (D + U) x = b with U the strict upper triangle of the CSR matrix."""
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t i
    cdef int k, j
    cdef double s
    with nogil:
        for i in range(n - 1, -1, -1):
            s = b[i]
            for k in range(indptr[i], indptr[i + 1]):
                j = indices[k]
                if j > i:
                    s -= data[k] * out[j]
            out[i] = s / diag[i]
