# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolution kernels over typed memoryviews (float32/float64).

Parallel loops are arranged so every output cell has exactly one writer with
a fixed-order inner accumulation, keeping results bit-identical regardless
of thread count or scheduling.
"""

from cython.parallel cimport prange
from cython cimport floating


def conv1d_forward(const floating[:, :, ::1] x_pad,
                   const floating[:, :, ::1] weight,
                   const floating[::1] bias,
                   Py_ssize_t stride,
                   floating[:, :, ::1] out):
    cdef Py_ssize_t batch = x_pad.shape[0]
    cdef Py_ssize_t ci_n = x_pad.shape[1]
    cdef Py_ssize_t co_n = weight.shape[0]
    cdef Py_ssize_t kernel = weight.shape[2]
    cdef Py_ssize_t out_len = out.shape[2]
    cdef Py_ssize_t bc, b, co, ci, o, k
    cdef floating w
    for bc in prange(batch * co_n, nogil=True, schedule="static"):
        b = bc // co_n
        co = bc % co_n
        for o in range(out_len):
            out[b, co, o] = bias[co]
        for ci in range(ci_n):
            for k in range(kernel):
                w = weight[co, ci, k]
                if stride == 1:
                    for o in range(out_len):
                        out[b, co, o] = out[b, co, o] + w * x_pad[b, ci, o + k]
                else:
                    for o in range(out_len):
                        out[b, co, o] = out[b, co, o] + w * x_pad[b, ci, o * stride + k]


def conv1d_grad_input(const floating[:, :, ::1] grad_out,
                      const floating[:, :, ::1] weight,
                      Py_ssize_t stride,
                      floating[:, :, ::1] grad_pad):
    cdef Py_ssize_t batch = grad_out.shape[0]
    cdef Py_ssize_t co_n = weight.shape[0]
    cdef Py_ssize_t ci_n = weight.shape[1]
    cdef Py_ssize_t kernel = weight.shape[2]
    cdef Py_ssize_t out_len = grad_out.shape[2]
    cdef Py_ssize_t bc, b, co, ci, o, k
    cdef floating w
    for bc in prange(batch * ci_n, nogil=True, schedule="static"):
        b = bc // ci_n
        ci = bc % ci_n
        for co in range(co_n):
            for k in range(kernel):
                w = weight[co, ci, k]
                if stride == 1:
                    for o in range(out_len):
                        grad_pad[b, ci, o + k] = grad_pad[b, ci, o + k] + w * grad_out[b, co, o]
                else:
                    for o in range(out_len):
                        grad_pad[b, ci, o * stride + k] = grad_pad[b, ci, o * stride + k] + w * grad_out[b, co, o]


def conv1d_grad_weight(const floating[:, :, ::1] grad_out,
                       const floating[:, :, ::1] x_pad,
                       Py_ssize_t stride,
                       floating[:, :, ::1] grad_w,
                       floating[::1] grad_b):
    cdef Py_ssize_t batch = grad_out.shape[0]
    cdef Py_ssize_t co_n = grad_out.shape[1]
    cdef Py_ssize_t ci_n = x_pad.shape[1]
    cdef Py_ssize_t kernel = grad_w.shape[2]
    cdef Py_ssize_t out_len = grad_out.shape[2]
    cdef Py_ssize_t cc, b, co, ci, o, k
    cdef floating acc
    for co in prange(co_n, nogil=True, schedule="static"):
        for b in range(batch):
            acc = 0
            for o in range(out_len):
                acc = acc + grad_out[b, co, o]
            grad_b[co] = grad_b[co] + acc
    cdef Py_ssize_t o4
    cdef floating acc1, acc2, acc3
    for cc in prange(co_n * ci_n, nogil=True, schedule="static"):
        co = cc // ci_n
        ci = cc % ci_n
        for b in range(batch):
            for k in range(kernel):
                # four fixed-order partial sums: deterministic, lets the
                # compiler pipeline the loads and multiplies
                acc = 0
                acc1 = 0
                acc2 = 0
                acc3 = 0
                o4 = out_len - (out_len % 4)
                if stride == 1:
                    for o in range(0, o4, 4):
                        acc = acc + grad_out[b, co, o] * x_pad[b, ci, o + k]
                        acc1 = acc1 + grad_out[b, co, o + 1] * x_pad[b, ci, o + 1 + k]
                        acc2 = acc2 + grad_out[b, co, o + 2] * x_pad[b, ci, o + 2 + k]
                        acc3 = acc3 + grad_out[b, co, o + 3] * x_pad[b, ci, o + 3 + k]
                    for o in range(o4, out_len):
                        acc = acc + grad_out[b, co, o] * x_pad[b, ci, o + k]
                else:
                    for o in range(0, o4, 4):
                        acc = acc + grad_out[b, co, o] * x_pad[b, ci, o * stride + k]
                        acc1 = acc1 + grad_out[b, co, o + 1] * x_pad[b, ci, (o + 1) * stride + k]
                        acc2 = acc2 + grad_out[b, co, o + 2] * x_pad[b, ci, (o + 2) * stride + k]
                        acc3 = acc3 + grad_out[b, co, o + 3] * x_pad[b, ci, (o + 3) * stride + k]
                    for o in range(o4, out_len):
                        acc = acc + grad_out[b, co, o] * x_pad[b, ci, o * stride + k]
                grad_w[co, ci, k] = grad_w[co, ci, k] + ((acc + acc1) + (acc2 + acc3))
