# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled scoring kernels; per-sample semantics mirror vge._kernels.

Loops run sequentially per (sample, class), so results are deterministic
and independent of worker counts. Small last-bit differences from the
numpy kernels can arise from summation order only.
"""

import numpy as np

from libc.math cimport exp, log, sqrt

cdef double LOG_FLOOR = 1e-12
cdef double NEG_INF = -float("inf")


def moments_batch(double[:, :, ::1] p, double epsilon):
    """Per-class mean and raw Bessel-corrected std; returns (mean, spread_raw)."""
    cdef Py_ssize_t nb = p.shape[0], nm = p.shape[1], nc = p.shape[2]
    mean = np.empty((nb, nc), dtype=np.float64)
    spread = np.empty((nb, nc), dtype=np.float64)
    cdef double[:, ::1] mv = mean
    cdef double[:, ::1] sv = spread
    cdef Py_ssize_t b, m, c
    cdef double acc, d
    for b in range(nb):
        for c in range(nc):
            acc = 0.0
            for m in range(nm):
                acc += p[b, m, c]
            mv[b, c] = acc / nm
        for c in range(nc):
            acc = 0.0
            for m in range(nm):
                d = p[b, m, c] - mv[b, c]
                acc += d * d
            sv[b, c] = sqrt(acc / (nm - 1))
    return mean, spread


def decompose_batch(
    double[:, :, ::1] p,
    double[::1] k,
    double epsilon,
    double gamma_min,
    double z_floor,
    bint apply_gate,
):
    """Per-sample (tu, au, eu) in nats, optionally on gated members."""
    cdef Py_ssize_t nb = p.shape[0], nm = p.shape[1], nc = p.shape[2]
    tu = np.empty(nb, dtype=np.float64)
    au = np.empty(nb, dtype=np.float64)
    eu = np.empty(nb, dtype=np.float64)
    cdef double[::1] tuv = tu
    cdef double[::1] auv = au
    cdef double[::1] euv = eu
    work = np.empty((4, nc), dtype=np.float64)
    cdef double[:, ::1] w = work
    # rows of w: 0 = class mean, 1 = gate, 2 = mixture accumulator, 3 = member q
    cdef Py_ssize_t b, m, c
    cdef double acc, d, s, z, ent, q, au_acc
    for b in range(nb):
        if apply_gate:
            for c in range(nc):
                acc = 0.0
                for m in range(nm):
                    acc += p[b, m, c]
                w[0, c] = acc / nm
            for c in range(nc):
                acc = 0.0
                for m in range(nm):
                    d = p[b, m, c] - w[0, c]
                    acc += d * d
                s = sqrt(acc / (nm - 1)) + epsilon
                d = 1.0 - exp(-w[0, c] / (k[c] * s))
                w[1, c] = d if d > gamma_min else gamma_min
        for c in range(nc):
            w[2, c] = 0.0
        au_acc = 0.0
        for m in range(nm):
            if apply_gate:
                z = 0.0
                for c in range(nc):
                    z += p[b, m, c] * w[1, c]
                if z < z_floor:
                    z = z_floor
                for c in range(nc):
                    w[3, c] = p[b, m, c] * w[1, c] / z
            else:
                for c in range(nc):
                    w[3, c] = p[b, m, c]
            ent = 0.0
            for c in range(nc):
                q = w[3, c]
                w[2, c] += q
                d = q if q > LOG_FLOOR else LOG_FLOOR
                ent -= q * log(d)
            au_acc += ent
        ent = 0.0
        for c in range(nc):
            q = w[2, c] / nm
            d = q if q > LOG_FLOOR else LOG_FLOOR
            ent -= q * log(d)
        tuv[b] = ent
        auv[b] = au_acc / nm
        euv[b] = tuv[b] - auv[b]
    return tu, au, eu


def epkl_batch(double[:, :, ::1] p):
    """Per-sample expected pairwise KL over ordered member pairs."""
    cdef Py_ssize_t nb = p.shape[0], nm = p.shape[1], nc = p.shape[2]
    out = np.empty(nb, dtype=np.float64)
    cdef double[::1] ov = out
    logs = np.empty((nm, nc), dtype=np.float64)
    selfs = np.empty(nm, dtype=np.float64)
    cdef double[:, ::1] lp = logs
    cdef double[::1] a = selfs
    cdef Py_ssize_t b, m, i, j, c
    cdef double acc, total, d
    for b in range(nb):
        for m in range(nm):
            acc = 0.0
            for c in range(nc):
                d = p[b, m, c]
                lp[m, c] = log(d if d > LOG_FLOOR else LOG_FLOOR)
                acc += p[b, m, c] * lp[m, c]
            a[m] = acc
        total = 0.0
        for i in range(nm):
            for j in range(nm):
                if i == j:
                    continue
                acc = 0.0
                for c in range(nc):
                    acc += p[b, i, c] * lp[j, c]
                total += a[i] - acc
        ov[b] = total / (nm * (nm - 1))
    return out


def epjs_batch(double[:, :, ::1] p):
    """Per-sample expected pairwise Jensen-Shannon divergence."""
    cdef Py_ssize_t nb = p.shape[0], nm = p.shape[1], nc = p.shape[2]
    out = np.empty(nb, dtype=np.float64)
    cdef double[::1] ov = out
    logs = np.empty((nm, nc), dtype=np.float64)
    selfs = np.empty(nm, dtype=np.float64)
    cdef double[:, ::1] lp = logs
    cdef double[::1] a = selfs
    cdef Py_ssize_t b, m, i, j, c
    cdef double acc, total, d, mid, lmid, cross_i, cross_j
    for b in range(nb):
        for m in range(nm):
            acc = 0.0
            for c in range(nc):
                d = p[b, m, c]
                lp[m, c] = log(d if d > LOG_FLOOR else LOG_FLOOR)
                acc += p[b, m, c] * lp[m, c]
            a[m] = acc
        total = 0.0
        for i in range(nm):
            for j in range(i + 1, nm):
                cross_i = 0.0
                cross_j = 0.0
                for c in range(nc):
                    mid = 0.5 * (p[b, i, c] + p[b, j, c])
                    lmid = log(mid if mid > LOG_FLOOR else LOG_FLOOR)
                    cross_i += p[b, i, c] * lmid
                    cross_j += p[b, j, c] * lmid
                total += 0.5 * (a[i] - cross_i) + 0.5 * (a[j] - cross_j)
        ov[b] = 2.0 * total / (nm * (nm - 1))
    return out


def vgmu_batch(double[:, ::1] mean, double[:, ::1] spread_raw, double epsilon):
    """Top-2 SNR and VGMU from moments; ties break to the lower index."""
    cdef Py_ssize_t nb = mean.shape[0], nc = mean.shape[1]
    snr = np.empty(nb, dtype=np.float64)
    vgmu = np.empty(nb, dtype=np.float64)
    top1 = np.empty(nb, dtype=np.int64)
    cdef double[::1] snrv = snr
    cdef double[::1] vgv = vgmu
    cdef long long[::1] t1 = top1
    cdef Py_ssize_t b, c, i1, i2
    cdef double best, second, ratio
    for b in range(nb):
        i1 = 0
        best = mean[b, 0]
        for c in range(1, nc):
            if mean[b, c] > best:
                best = mean[b, c]
                i1 = c
        i2 = -1
        second = NEG_INF
        for c in range(nc):
            if c == i1:
                continue
            if mean[b, c] > second:
                second = mean[b, c]
                i2 = c
        ratio = (best - second) / (spread_raw[b, i1] + spread_raw[b, i2] + epsilon)
        snrv[b] = ratio
        vgv[b] = 1.0 - (1.0 - exp(-ratio)) * best
        t1[b] = i1
    return snr, vgmu, top1
