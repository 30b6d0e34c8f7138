# Compiled twins of the kernels in _ref.py. Same coordinate convention:
# pixel (i, j) samples at (j + 0.5, i + 0.5).
import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, fabs, floor

cnp.import_array()

ctypedef fused pixel_t:
    cnp.uint8_t
    cnp.float64_t


cdef inline double _cubic(double d) noexcept nogil:
    # Catmull-Rom (a = -0.5), d = |distance to tap| in [0, 2)
    cdef double a = -0.5
    if d <= 1.0:
        return (a + 2.0) * d * d * d - (a + 3.0) * d * d + 1.0
    if d < 2.0:
        return a * (d * d * d - 5.0 * d * d + 8.0 * d - 4.0)
    return 0.0


cdef inline Py_ssize_t _clampi(Py_ssize_t v, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


cdef void _axis_taps(double lo_edge, double hi_edge, Py_ssize_t n_samples,
                     Py_ssize_t extent, Py_ssize_t[:, ::1] taps,
                     double[:, ::1] weights) noexcept nogil:
    cdef double span = hi_edge - lo_edge
    cdef double scale = span / n_samples
    cdef Py_ssize_t lo = <Py_ssize_t>ceil(lo_edge - 0.5)
    cdef Py_ssize_t hi = <Py_ssize_t>ceil(hi_edge - 0.5) - 1
    cdef Py_ssize_t j, k, base
    cdef double u, frac, mid
    if lo < 0:
        lo = 0
    if hi > extent - 1:
        hi = extent - 1
    if lo > hi:
        mid = (lo_edge + hi_edge) / 2.0 - 0.5
        base = <Py_ssize_t>floor(mid + 0.5)
        lo = hi = _clampi(base, 0, extent - 1)
    for j in range(n_samples):
        u = lo_edge + (j + 0.5) * scale - 0.5
        base = <Py_ssize_t>floor(u)
        frac = u - base
        for k in range(4):
            taps[j, k] = _clampi(base + k - 1, lo, hi)
            weights[j, k] = _cubic(fabs(frac - (k - 1)))


def bicubic_crop(const pixel_t[:, :, ::1] frame, double x0, double y0,
                 double x1, double y1, Py_ssize_t out_h=64, Py_ssize_t out_w=64):
    cdef Py_ssize_t h = frame.shape[0]
    cdef Py_ssize_t w = frame.shape[1]
    tx_arr = np.empty((out_w, 4), dtype=np.intp)
    ty_arr = np.empty((out_h, 4), dtype=np.intp)
    wx_arr = np.empty((out_w, 4), dtype=np.float64)
    wy_arr = np.empty((out_h, 4), dtype=np.float64)
    out_arr = np.empty((out_h, out_w, 3), dtype=np.float64)
    cdef Py_ssize_t[:, ::1] tx = tx_arr
    cdef Py_ssize_t[:, ::1] ty = ty_arr
    cdef double[:, ::1] wx = wx_arr
    cdef double[:, ::1] wy = wy_arr
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, k, m, c
    cdef double acc_r, acc_g, acc_b, wgt, row_r, row_g, row_b
    cdef Py_ssize_t sy, sx

    with nogil:
        _axis_taps(x0, x1, out_w, w, tx, wx)
        _axis_taps(y0, y1, out_h, h, ty, wy)
        for i in range(out_h):
            for j in range(out_w):
                acc_r = 0.0
                acc_g = 0.0
                acc_b = 0.0
                for k in range(4):
                    sy = ty[i, k]
                    row_r = 0.0
                    row_g = 0.0
                    row_b = 0.0
                    for m in range(4):
                        sx = tx[j, m]
                        wgt = wx[j, m]
                        row_r += wgt * <double>frame[sy, sx, 0]
                        row_g += wgt * <double>frame[sy, sx, 1]
                        row_b += wgt * <double>frame[sy, sx, 2]
                    acc_r += wy[i, k] * row_r
                    acc_g += wy[i, k] * row_g
                    acc_b += wy[i, k] * row_b
                if acc_r < 0.0: acc_r = 0.0
                if acc_r > 255.0: acc_r = 255.0
                if acc_g < 0.0: acc_g = 0.0
                if acc_g > 255.0: acc_g = 255.0
                if acc_b < 0.0: acc_b = 0.0
                if acc_b > 255.0: acc_b = 255.0
                out[i, j, 0] = acc_r
                out[i, j, 1] = acc_g
                out[i, j, 2] = acc_b
    return out_arr


def fill_polygon(const double[:, ::1] pts, Py_ssize_t height, Py_ssize_t width):
    out_arr = np.zeros((height, width), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t k = pts.shape[0]
    cdef Py_ssize_t e, i, j
    cdef double x1, y1, x2, y2, yc, xint
    with nogil:
        for e in range(k):
            x1 = pts[e, 0]
            y1 = pts[e, 1]
            x2 = pts[(e + 1) % k, 0]
            y2 = pts[(e + 1) % k, 1]
            if y1 == y2:
                continue
            for i in range(height):
                yc = i + 0.5
                if (y1 > yc) != (y2 > yc):
                    xint = x1 + (yc - y1) * (x2 - x1) / (y2 - y1)
                    for j in range(width):
                        if (j + 0.5) < xint:
                            out[i, j] ^= 1
    return out_arr.astype(bool)


def sample_bilinear(const double[:, :, ::1] img, const double[::1] xs, const double[::1] ys):
    cdef Py_ssize_t h = img.shape[0]
    cdef Py_ssize_t w = img.shape[1]
    cdef Py_ssize_t n = xs.shape[0]
    out_arr = np.empty((n, 3), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t t, c, i0, j0, i1, j1
    cdef double p, q, fx, fy, top, bot
    with nogil:
        for t in range(n):
            p = xs[t] - 0.5
            q = ys[t] - 0.5
            if p < 0.0: p = 0.0
            if p > w - 1.0: p = w - 1.0
            if q < 0.0: q = 0.0
            if q > h - 1.0: q = h - 1.0
            j0 = <Py_ssize_t>floor(p)
            i0 = <Py_ssize_t>floor(q)
            if w > 1 and j0 > w - 2: j0 = w - 2
            if h > 1 and i0 > h - 2: i0 = h - 2
            fx = p - j0 if w > 1 else 0.0
            fy = q - i0 if h > 1 else 0.0
            j1 = j0 + 1 if j0 + 1 < w else w - 1
            i1 = i0 + 1 if i0 + 1 < h else h - 1
            for c in range(3):
                top = img[i0, j0, c] * (1.0 - fx) + img[i0, j1, c] * fx
                bot = img[i1, j0, c] * (1.0 - fx) + img[i1, j1, c] * fx
                out[t, c] = top * (1.0 - fy) + bot * fy
    return out_arr
