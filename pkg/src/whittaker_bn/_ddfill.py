"""Compiled kernels for the factorial-scaled coefficient recurrence.

The graded fill is a sequential data dependency, so the vectorized-numpy
shell walk pays heavy per-shell overhead and needs large index plans.  These
kernels run the recurrence as a flat C-order scan (every predecessor of a
multi-index precedes it in C order) at C speed via numba.

Two precision levels:

* ``fill_scaled`` works in double-double (~31 digits) and stores the table;
  it backs every rank <= 2 evaluation and all grid work.
* ``fill_contract_qd`` works in quad-double (~62 digits) and contracts the
  table against per-axis power vectors on the fly.  The rank-3 Weyl sum
  cancels through ~37 digits at unit radius, so its terms must carry more
  than double-double can hold.  Quad-double values travel as 4-tuples of
  floats; the algorithms are the standard renormalized expansions.

Falls back silently when numba is unavailable; coefficients.py then uses the
pure-numpy shell path (rank 3 evaluation refuses rather than degrade).
"""

from __future__ import annotations

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except Exception:  # pragma: no cover - environment without numba
    numba = None
    HAS_NUMBA = False


if HAS_NUMBA:

    @numba.njit(inline="always", cache=True, error_model="numpy")
    def _two_sum(a, b):
        s = a + b
        bb = s - a
        return s, (a - (s - bb)) + (b - bb)

    @numba.njit(inline="always", cache=True, error_model="numpy")
    def _quick_two_sum(a, b):
        s = a + b
        return s, b - (s - a)

    @numba.njit(inline="always", cache=True, error_model="numpy")
    def _two_prod(a, b):
        p = a * b
        t = 134217729.0 * a
        ahi = t - (t - a)
        alo = a - ahi
        t = 134217729.0 * b
        bhi = t - (t - b)
        blo = b - bhi
        return p, ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo

    @numba.njit(inline="always", cache=True, error_model="numpy")
    def _dd_add(xh, xl, yh, yl):
        s1, s2 = _two_sum(xh, yh)
        t1, t2 = _two_sum(xl, yl)
        s2 += t1
        s1, s2 = _quick_two_sum(s1, s2)
        s2 += t2
        return _quick_two_sum(s1, s2)

    @numba.njit(inline="always", cache=True, error_model="numpy")
    def _dd_mul(xh, xl, yh, yl):
        p1, p2 = _two_prod(xh, yh)
        p2 += xh * yl + xl * yh
        return _quick_two_sum(p1, p2)

    @numba.njit(inline="always", cache=True, error_model="numpy")
    def _dd_div(xh, xl, yh, yl):
        q1 = xh / yh
        mh, ml = _dd_mul(q1, 0.0, yh, yl)
        rh, rl = _dd_add(xh, xl, -mh, -ml)
        q2 = (rh + rl) / yh
        return _quick_two_sum(q1, q2)

    @numba.njit(cache=True, error_model="numpy")
    def fill_scaled(re_hi, re_lo, im_hi, im_lo,
                    lin_re_hi, lin_re_lo, lin_im_hi, lin_im_lo, n, box):
        """Graded C-order scan; q(m) is formed per entry in dd from the
        exact integer part plus the precomputed dd linear coefficients
        (nu_i - nu_{i+1} for i < n, nu_n last).  Returns min |q| over the
        nonzero box so the caller can enforce the division guard."""
        b1 = box + 1
        size = re_hi.shape[0]
        stride = np.ones(n, dtype=np.int64)
        for i in range(n - 2, -1, -1):
            stride[i] = stride[i + 1] * b1
        re_hi[0] = 1.0
        qmin = 1e308
        m = np.zeros(n, dtype=np.int64)
        for f in range(1, size):
            arh = 0.0
            arl = 0.0
            aih = 0.0
            ail = 0.0
            for i in range(n):
                m[i] = (f // stride[i]) % b1
            # q(m): exact integer part, then dd linear terms
            ip = 0.5 * m[n - 1] * m[n - 1]
            for i in range(n - 1):
                ip += m[i] * m[i] - m[i] * m[i + 1]
            qrh, qrl = ip, 0.0
            qih, qil = 0.0, 0.0
            for i in range(n):
                mi = float(m[i])
                if mi != 0.0:
                    th, tl = _dd_mul(lin_re_hi[i], lin_re_lo[i], mi, 0.0)
                    qrh, qrl = _dd_add(qrh, qrl, th, tl)
                    th, tl = _dd_mul(lin_im_hi[i], lin_im_lo[i], mi, 0.0)
                    qih, qil = _dd_add(qih, qil, th, tl)
            aq = (qrh * qrh + qih * qih) ** 0.5
            if aq < qmin:
                qmin = aq
            for i in range(n):
                if m[i] > 0:
                    p = f - stride[i]
                    w = 0.5 * m[i] if i == n - 1 else float(m[i])
                    gh, gl = _dd_mul(re_hi[p], re_lo[p], w, 0.0)
                    arh, arl = _dd_add(arh, arl, gh, gl)
                    gh, gl = _dd_mul(im_hi[p], im_lo[p], w, 0.0)
                    aih, ail = _dd_add(aih, ail, gh, gl)
            d1h, d1l = _dd_mul(qrh, qrl, qrh, qrl)
            d2h, d2l = _dd_mul(qih, qil, qih, qil)
            dh, dl = _dd_add(d1h, d1l, d2h, d2l)
            t1h, t1l = _dd_mul(arh, arl, qrh, qrl)
            t2h, t2l = _dd_mul(aih, ail, qih, qil)
            nh, nl = _dd_add(t1h, t1l, t2h, t2l)
            re_hi[f], re_lo[f] = _dd_div(nh, nl, dh, dl)
            t1h, t1l = _dd_mul(aih, ail, qrh, qrl)
            t2h, t2l = _dd_mul(arh, arl, qih, qil)
            nh, nl = _dd_add(t1h, t1l, -t2h, -t2l)
            im_hi[f], im_lo[f] = _dd_div(nh, nl, dh, dl)
        return qmin


if HAS_NUMBA:

    @numba.njit(inline="always", cache=True, error_model="numpy")
    def _qd_renorm(a0, a1, a2, a3, a4):
        s, t4 = _quick_two_sum(a3, a4)
        s, t3 = _quick_two_sum(a2, s)
        s, t2 = _quick_two_sum(a1, s)
        b0, t1 = _quick_two_sum(a0, s)
        s, t4 = _quick_two_sum(t3, t4)
        s, t3 = _quick_two_sum(t2, s)
        b1, t2 = _quick_two_sum(t1, s)
        s, t4 = _quick_two_sum(t3, t4)
        b2, t3 = _quick_two_sum(t2, s)
        return b0, b1, b2, t3 + t4

    @numba.njit(inline="always", cache=True, error_model="numpy")
    def _qd_add(a, b):
        # sloppy quad-double addition (error ~ eps_qd * (|a|+|b|)); ample here
        s0, e0 = _two_sum(a[0], b[0])
        s1, e1 = _two_sum(a[1], b[1])
        s2, e2 = _two_sum(a[2], b[2])
        s3 = a[3] + b[3]
        s1, t0 = _two_sum(s1, e0)
        s2, t1a = _two_sum(s2, e1)
        s2, t1b = _two_sum(s2, t0)
        s3 = s3 + e2 + t1a + t1b
        return _qd_renorm(s0, s1, s2, s3, 0.0)

    @numba.njit(inline="always", cache=True, error_model="numpy")
    def _qd_neg(a):
        return -a[0], -a[1], -a[2], -a[3]

    @numba.njit(inline="always", cache=True, error_model="numpy")
    def _qd_mul(a, b):
        p00, q00 = _two_prod(a[0], b[0])
        p01, q01 = _two_prod(a[0], b[1])
        p10, q10 = _two_prod(a[1], b[0])
        p02, q02 = _two_prod(a[0], b[2])
        p11, q11 = _two_prod(a[1], b[1])
        p20, q20 = _two_prod(a[2], b[0])
        t3 = a[0] * b[3] + a[1] * b[2] + a[2] * b[1] + a[3] * b[0]
        s1, e1a = _two_sum(p01, p10)
        s1, e1b = _two_sum(s1, q00)
        s2, e2a = _two_sum(p02, p11)
        s2, e2b = _two_sum(s2, p20)
        s2, e2c = _two_sum(s2, q01)
        s2, e2d = _two_sum(s2, q10)
        s2, e2e = _two_sum(s2, e1a)
        s2, e2f = _two_sum(s2, e1b)
        t3 = t3 + q02 + q11 + q20 + e2a + e2b + e2c + e2d + e2e + e2f
        return _qd_renorm(p00, s1, s2, t3, 0.0)

    @numba.njit(inline="always", cache=True, error_model="numpy")
    def _qd_mul_d(a, b):
        p0, q0 = _two_prod(a[0], b)
        p1, q1 = _two_prod(a[1], b)
        p2, q2 = _two_prod(a[2], b)
        p3 = a[3] * b
        s1, e1 = _two_sum(p1, q0)
        s2, e2a = _two_sum(p2, q1)
        s2, e2b = _two_sum(s2, e1)
        s3 = p3 + q2 + e2a + e2b
        return _qd_renorm(p0, s1, s2, s3, 0.0)

    @numba.njit(inline="always", cache=True, error_model="numpy")
    def _qd_div(a, b):
        q0 = a[0] / b[0]
        r = _qd_add(a, _qd_neg(_qd_mul_d(b, q0)))
        q1 = r[0] / b[0]
        r = _qd_add(r, _qd_neg(_qd_mul_d(b, q1)))
        q2 = r[0] / b[0]
        r = _qd_add(r, _qd_neg(_qd_mul_d(b, q2)))
        q3 = r[0] / b[0]
        r = _qd_add(r, _qd_neg(_qd_mul_d(b, q3)))
        q4 = r[0] / b[0]
        return _qd_renorm(q0, q1, q2, q3, q4)

    @numba.njit(inline="always", cache=True, error_model="numpy")
    def _cqd_mul(ar, ai, br, bi):
        re = _qd_add(_qd_mul(ar, br), _qd_neg(_qd_mul(ai, bi)))
        im = _qd_add(_qd_mul(ar, bi), _qd_mul(ai, br))
        return re, im

    @numba.njit(inline="always", cache=True, error_model="numpy")
    def _qd_add_d(a, b):
        s0, e0 = _two_sum(a[0], b)
        s1, e1 = _two_sum(a[1], e0)
        s2, e2 = _two_sum(a[2], e1)
        return _qd_renorm(s0, s1, s2, a[3] + e2, 0.0)

    @numba.njit(cache=True, error_model="numpy")
    def fill_contract_qd3(box, lin_re, lin_im, px_re, px_im, lpx, lf, lgam, tab):
        """Rank-3 quad-double fill + contraction over the simplex |m| <= box.

        The certified tail bound controls total degree, so the simplex holds
        every term the bound does not cover, at a sixth of the box's cost.

        lin_re/lin_im: (3, 4) quad components of the q-form linear terms.
        px_re/px_im: (3, box+1, 4) quads of pre_i x_i^m / m!; lpx: their log
        moduli. lf/lgam: log factorials. tab: scratch of shape (N, 8) with
        N >= C(box+3, 3), layout [re0..re3, im0..im3].
        Returns (sum_re[4], sum_im[4], min |q|, log max |term|, fit log).
        """
        b1 = box + 1
        # compact simplex offsets: entry (m1, m2, m3) -> off[m1, m2] + m3
        off = np.zeros((b1, b1), dtype=np.int64)
        pos = 0
        for m1 in range(b1):
            for m2 in range(b1 - m1):
                off[m1, m2] = pos
                pos += b1 - m1 - m2
        acc_re = (0.0, 0.0, 0.0, 0.0)
        acc_im = (0.0, 0.0, 0.0, 0.0)
        qmin = 1e308
        maxlog = -1e308
        fitlog = -1e308
        half_deg = max(box // 2, 1)
        l3r = (lin_re[2, 0], lin_re[2, 1], lin_re[2, 2], lin_re[2, 3])
        l3i = (lin_im[2, 0], lin_im[2, 1], lin_im[2, 2], lin_im[2, 3])
        for m1 in range(b1):
            acc1_re = (0.0, 0.0, 0.0, 0.0)
            acc1_im = (0.0, 0.0, 0.0, 0.0)
            for m2 in range(b1 - m1):
                base = off[m1, m2]
                basep1 = off[m1 - 1, m2] if m1 > 0 else -1
                basep2 = off[m1, m2 - 1] if m2 > 0 else -1
                # q at (m1, m2, 0), then incremental along m3
                ipart = float(m1 * m1 + m2 * m2 - m1 * m2)
                qr = (ipart, 0.0, 0.0, 0.0)
                qi = (0.0, 0.0, 0.0, 0.0)
                if m1 > 0:
                    lr = (lin_re[0, 0], lin_re[0, 1], lin_re[0, 2], lin_re[0, 3])
                    li = (lin_im[0, 0], lin_im[0, 1], lin_im[0, 2], lin_im[0, 3])
                    qr = _qd_add(qr, _qd_mul_d(lr, float(m1)))
                    qi = _qd_add(qi, _qd_mul_d(li, float(m1)))
                if m2 > 0:
                    lr = (lin_re[1, 0], lin_re[1, 1], lin_re[1, 2], lin_re[1, 3])
                    li = (lin_im[1, 0], lin_im[1, 1], lin_im[1, 2], lin_im[1, 3])
                    qr = _qd_add(qr, _qd_mul_d(lr, float(m2)))
                    qi = _qd_add(qi, _qd_mul_d(li, float(m2)))
                acc2_re = (0.0, 0.0, 0.0, 0.0)
                acc2_im = (0.0, 0.0, 0.0, 0.0)
                for m3 in range(b1 - m1 - m2):
                    f = base + m3
                    if m1 == 0 and m2 == 0 and m3 == 0:
                        cr = (1.0, 0.0, 0.0, 0.0)
                        ci = (0.0, 0.0, 0.0, 0.0)
                    else:
                        if m3 > 0:
                            # q += (m3 - 1/2 - m2) + nu_3-linear step
                            qr = _qd_add(_qd_add_d(qr, m3 - 0.5 - m2), l3r)
                            qi = _qd_add(qi, l3i)
                        aq = (qr[0] * qr[0] + qi[0] * qi[0]) ** 0.5
                        if aq < qmin:
                            qmin = aq
                        ar = (0.0, 0.0, 0.0, 0.0)
                        ai = (0.0, 0.0, 0.0, 0.0)
                        if m1 > 0:
                            p = basep1 + m3
                            tp = (tab[p, 0], tab[p, 1], tab[p, 2], tab[p, 3])
                            ar = _qd_add(ar, _qd_mul_d(tp, float(m1)))
                            tp = (tab[p, 4], tab[p, 5], tab[p, 6], tab[p, 7])
                            ai = _qd_add(ai, _qd_mul_d(tp, float(m1)))
                        if m2 > 0:
                            p = basep2 + m3
                            tp = (tab[p, 0], tab[p, 1], tab[p, 2], tab[p, 3])
                            ar = _qd_add(ar, _qd_mul_d(tp, float(m2)))
                            tp = (tab[p, 4], tab[p, 5], tab[p, 6], tab[p, 7])
                            ai = _qd_add(ai, _qd_mul_d(tp, float(m2)))
                        if m3 > 0:
                            p = f - 1
                            tp = (tab[p, 0], tab[p, 1], tab[p, 2], tab[p, 3])
                            ar = _qd_add(ar, _qd_mul_d(tp, 0.5 * m3))
                            tp = (tab[p, 4], tab[p, 5], tab[p, 6], tab[p, 7])
                            ai = _qd_add(ai, _qd_mul_d(tp, 0.5 * m3))
                        den = _qd_add(_qd_mul(qr, qr), _qd_mul(qi, qi))
                        nr = _qd_add(_qd_mul(ar, qr), _qd_mul(ai, qi))
                        ni = _qd_add(_qd_mul(ai, qr), _qd_neg(_qd_mul(ar, qi)))
                        cr = _qd_div(nr, den)
                        ci = _qd_div(ni, den)
                    tab[f, 0], tab[f, 1], tab[f, 2], tab[f, 3] = cr
                    tab[f, 4], tab[f, 5], tab[f, 6], tab[f, 7] = ci
                    # contract with the m3 power, defer the m1/m2 powers
                    pr = (px_re[2, m3, 0], px_re[2, m3, 1], px_re[2, m3, 2], px_re[2, m3, 3])
                    pi = (px_im[2, m3, 0], px_im[2, m3, 1], px_im[2, m3, 2], px_im[2, m3, 3])
                    tr, ti = _cqd_mul(cr, ci, pr, pi)
                    acc2_re = _qd_add(acc2_re, tr)
                    acc2_im = _qd_add(acc2_im, ti)
                    # diagnostics
                    logc = 0.5 * np.log(cr[0] * cr[0] + ci[0] * ci[0] + 1e-320)
                    tl = logc + lpx[0, m1] + lpx[1, m2] + lpx[2, m3]
                    if tl > maxlog:
                        maxlog = tl
                    deg = m1 + m2 + m3
                    if deg >= half_deg:
                        fl = (logc - lf[m1] - lf[m2] - lf[m3] + lgam[deg]) / deg
                        if fl > fitlog:
                            fitlog = fl
                pr = (px_re[1, m2, 0], px_re[1, m2, 1], px_re[1, m2, 2], px_re[1, m2, 3])
                pi = (px_im[1, m2, 0], px_im[1, m2, 1], px_im[1, m2, 2], px_im[1, m2, 3])
                tr, ti = _cqd_mul(acc2_re, acc2_im, pr, pi)
                acc1_re = _qd_add(acc1_re, tr)
                acc1_im = _qd_add(acc1_im, ti)
            pr = (px_re[0, m1, 0], px_re[0, m1, 1], px_re[0, m1, 2], px_re[0, m1, 3])
            pi = (px_im[0, m1, 0], px_im[0, m1, 1], px_im[0, m1, 2], px_im[0, m1, 3])
            tr, ti = _cqd_mul(acc1_re, acc1_im, pr, pi)
            acc_re = _qd_add(acc_re, tr)
            acc_im = _qd_add(acc_im, ti)
        out_re = np.array([acc_re[0], acc_re[1], acc_re[2], acc_re[3]])
        out_im = np.array([acc_im[0], acc_im[1], acc_im[2], acc_im[3]])
        return out_re, out_im, qmin, maxlog, fitlog
