"""Pure-numpy fallback for the kernels in ``_numba.py``.

Same signatures, same operation order, whole-array instead of per-element.
"""

import numpy as np

from ._codes import CLAMPED_SIGMA, FROZEN_VEGA, INVALID_PRICE, NON_FINITE, OK

INV_SQRT2 = 0.7071067811865476
INV_SQRT_2PI = 0.3989422804014327
INV_SQRT_PI = 0.5641895835477563
TINY = 1e-280

_A = (3.16112374387056560e00, 1.13864154151050156e02, 3.77485237685302021e02)
_B = (2.36012909523441209e01, 2.44024637934444173e02, 1.28261652607737228e03)
_C = (5.64188496988670089e-1, 8.88314979438837594e00, 6.61191906371416295e01,
      2.98635138197400131e02, 8.81952221241769090e02, 1.71204761263407058e03,
      2.05107837782607147e03)
_D = (1.57449261107098347e01, 1.17693950891312499e02, 5.37181101862009858e02,
      1.62138957456669019e03, 3.29079923573345963e03, 4.36261909014324716e03,
      3.43936767414372164e03)
_P = (3.05326634961232344e-1, 3.60344899949804439e-1, 1.25781726111229246e-1,
      1.60837851487422766e-2)
_Q = (2.56852019228982242e00, 1.87295284992346725e00, 5.27905102951428412e-1,
      6.05183413124413191e-2)


def _rnd(x, single):
    if single:
        return np.asarray(x, dtype=np.float64).astype(np.float32).astype(np.float64)
    return x


def erfc_scaled(x, emx2):
    """erfc(x) given ``emx2 == exp(-x*x)``; each region is evaluated on its own subset."""
    x = np.asarray(x, dtype=np.float64)
    emx2 = np.asarray(emx2, dtype=np.float64)
    x, emx2 = np.broadcast_arrays(x, emx2)
    y = np.abs(x)
    out = np.full(x.shape, np.nan)
    with np.errstate(all="ignore"):
        m = y <= 0.46875
        if m.any():
            xs = x[m]
            ysq = xs * xs
            xnum = 1.85777706184603153e-1 * ysq
            xden = ysq
            for a, b in zip(_A, _B):
                xnum = (xnum + a) * ysq
                xden = (xden + b) * ysq
            out[m] = 1.0 - xs * (xnum + 3.20937758913846947e03) / (xden + 2.84423683343917062e03)
        m = (y > 0.46875) & (y <= 4.0)
        if m.any():
            ys = y[m]
            xnum = 2.15311535474403846e-8 * ys
            xden = ys
            for c, d in zip(_C, _D):
                xnum = (xnum + c) * ys
                xden = (xden + d) * ys
            out[m] = (xnum + 1.23033935479799725e03) / (xden + 1.23033935480374942e03) * emx2[m]
        m = (y > 4.0) & (y < 26.543)
        if m.any():
            ys = y[m]
            ysq = 1.0 / (ys * ys)
            xnum = 1.63153871373020978e-2 * ysq
            xden = ysq
            for a, b in zip(_P, _Q):
                xnum = (xnum + a) * ysq
                xden = (xden + b) * ysq
            res = ysq * (xnum + 6.58749161529837803e-4) / (xden + 2.33520497626869185e-3)
            out[m] = (INV_SQRT_PI - res) / ys * emx2[m]
        out[y >= 26.543] = 0.0
        neg = (x < 0.0) & (y > 0.46875)
        out[neg] = 2.0 - out[neg]
    return out


def _ncdf(d, e):
    return 0.5 * erfc_scaled(-d * INV_SQRT2, e)


def norm_cdf(x):
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(under="ignore", over="ignore"):
        return _ncdf(x, np.exp(-0.5 * x * x))


def norm_pdf(x):
    return INV_SQRT_2PI * np.exp(-0.5 * x * x)


def _price_vega(lnk, r, tau, sqrt_tau, disc_k, kexp, is_call, sigma):
    sst = sigma * sqrt_tau
    d1 = (lnk + (r + 0.5 * sigma * sigma) * tau) / sst
    d2 = d1 - sst
    e1 = np.exp(-0.5 * d1 * d1)
    e2 = e1 * kexp
    tiny = ~(e1 > TINY)
    if tiny.any():
        e2[tiny] = np.exp(-0.5 * d2[tiny] * d2[tiny])
    # Calls need N(d1), N(d2); puts N(-d1), N(-d2). Same exponentials either way.
    sgn = np.where(is_call, 1.0, -1.0)
    n1 = _ncdf(sgn * d1, e1)
    n2 = _ncdf(sgn * d2, e2)
    p = np.where(is_call, n1 - disc_k * n2, disc_k * n2 - n1)
    return p, INV_SQRT_2PI * e1 * sqrt_tau


def _sigma_c(lnk, r, tau):
    return np.sqrt(np.abs(2.0 / tau * (lnk + r * tau)))


def _layer(sigma, lnk, r, tau, sqrt_tau, disc_k, kexp, is_call, c, single, floor, vega_floor):
    p, v = _price_vega(lnk, r, tau, sqrt_tau, disc_k, kexp, is_call, sigma)
    diff = _rnd(p - c, single)
    v = _rnd(v, single)
    nxt = _rnd(sigma - _rnd(diff / v, single), single)
    flag = np.full(sigma.shape, OK, dtype=np.uint8)
    frozen = v < vega_floor
    bad = ~(np.isfinite(diff) & np.isfinite(v)) | (~frozen & ~np.isfinite(nxt))

    clamped = nxt < floor
    nxt = np.where(clamped, floor, nxt)
    flag[clamped] = CLAMPED_SIGMA

    nxt = np.where(frozen, sigma, nxt)
    flag[frozen] = FROZEN_VEGA

    nxt = np.where(bad, np.nan, nxt)
    flag[bad] = NON_FINITE
    return nxt, flag


def _prepare(k, r, tau, c, is_call, single):
    k, r, tau, c = (_rnd(np.asarray(a, dtype=np.float64), single) for a in (k, r, tau, c))
    status = np.full(k.shape, OK, dtype=np.uint8)
    finite = np.isfinite(k) & np.isfinite(r) & np.isfinite(tau) & np.isfinite(c)
    domain = finite & (k > 0.0) & (tau > 0.0)
    # Placeholders keep the transcendentals quiet on rejected rows.
    ks = np.where(domain, k, 1.0)
    ts = np.where(domain, tau, 1.0)
    rs = np.where(domain, r, 0.0)
    lnk = np.log(ks)
    sqrt_tau = np.sqrt(ts)
    disc_k = np.exp(-rs * ts) / ks
    kexp = ks * np.exp(rs * ts)
    lo = np.where(is_call, np.maximum(1.0 - disc_k, 0.0), np.maximum(disc_k - 1.0, 0.0))
    hi = np.where(is_call, 1.0, disc_k)
    inside = (_rnd(lo, single) < c) & (c < _rnd(hi, single))
    status[~(domain & inside)] = INVALID_PRICE
    status[~finite] = NON_FINITE
    return rs, ts, np.where(domain, c, 0.5), lnk, sqrt_tau, disc_k, kexp, status


def solve_into(k, r, tau, c, is_call, depth, single, sigma_floor, vega_floor,
               sigma_out, status_out, resid_out, trace_out):
    tracing = trace_out.shape[0] > 0
    floor = _rnd(sigma_floor, single)
    r, tau, c, lnk, sqrt_tau, disc_k, kexp, status = _prepare(k, r, tau, c, is_call, single)
    rejected = status != OK

    with np.errstate(all="ignore"):
        sigma = _rnd(_sigma_c(lnk, r, tau), single)
        sigma = np.where(sigma < floor, floor, sigma)
        # Rejected rows ride along at the floor and are blanked at the end.
        sigma[rejected] = floor
        if tracing:
            trace_out[0] = sigma
        dead = rejected.copy()
        for n in range(depth):
            sigma, flag = _layer(sigma, lnk, r, tau, sqrt_tau, disc_k, kexp, is_call, c,
                                 single, floor, vega_floor)
            flag[dead] = OK
            np.maximum(status, flag, out=status)
            newly = (status == NON_FINITE) & ~dead
            dead |= newly
            sigma[dead] = floor
            if tracing:
                row = sigma.copy()
                row[status == NON_FINITE] = np.nan
                trace_out[n + 1] = row
        p, _ = _price_vega(lnk, r, tau, sqrt_tau, disc_k, kexp, is_call, sigma)
        resid = np.abs(_rnd(p - c, single))

    failed = status >= INVALID_PRICE
    sigma_out[:] = np.where(failed, np.nan, sigma)
    resid_out[:] = np.where(failed, np.nan, resid)
    status_out[:] = status
    if tracing:
        trace_out[:, rejected] = np.nan


def step_into(sigma, k, r, tau, c, is_call, single, sigma_floor, vega_floor, sigma_out, flag_out):
    floor = _rnd(sigma_floor, single)
    r, tau, c, lnk, sqrt_tau, disc_k, kexp, status = _prepare(k, r, tau, c, is_call, single)
    s = _rnd(np.asarray(sigma, dtype=np.float64), single)
    rejected = status != OK
    with np.errstate(all="ignore"):
        nxt, flag = _layer(np.where(rejected, floor, s), lnk, r, tau, sqrt_tau, disc_k, kexp,
                           is_call, c, single, floor, vega_floor)
    sigma_out[:] = np.where(rejected, np.nan, nxt)
    flag_out[:] = np.where(rejected, status, flag)


def initial_into(k, r, tau, single, sigma_floor, sigma_out):
    floor = _rnd(sigma_floor, single)
    k = _rnd(np.asarray(k, dtype=np.float64), single)
    r = _rnd(np.asarray(r, dtype=np.float64), single)
    tau = _rnd(np.asarray(tau, dtype=np.float64), single)
    with np.errstate(all="ignore"):
        s = _rnd(_sigma_c(np.log(k), r, tau), single)
    sigma_out[:] = np.where(s < floor, floor, s)


def norm_cdf_into(x, out):
    out[:] = norm_cdf(np.asarray(x, dtype=np.float64))
