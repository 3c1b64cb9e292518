"""numba kernels for the unrolled Newton-Raphson pipeline.

Every function here mirrors one in ``_numpy.py`` operation for operation, so
both backends perform the same float64 arithmetic and the same float32
roundings. Only the libm behind ``exp``/``log`` differs.

The normal CDF uses Cody's rational approximation of erfc, which factors as
``R(x) * exp(-x*x)``. One layer needs N(d1), N(d2) and phi(d1). They share a
single exponential, because exp(-d2^2/2) = exp(-d1^2/2) * k * exp(r*tau).
"""

import math

import numpy as np
from numba import njit

from ._codes import CLAMPED_SIGMA, FROZEN_VEGA, INVALID_PRICE, NON_FINITE, OK

INV_SQRT2 = 0.7071067811865476
INV_SQRT_2PI = 0.3989422804014327
INV_SQRT_PI = 0.5641895835477563
# Below this exp(-d1^2/2) may be subnormal, so exp(-d2^2/2) is taken directly.
TINY = 1e-280
BLOCK = 64


@njit(cache=True, nogil=True)
def _rnd(x, single):
    if single:
        return np.float64(np.float32(x))
    return x


@njit(cache=True, nogil=True)
def erfc_scaled(x, emx2):
    """erfc(x) given ``emx2 == exp(-x*x)``."""
    y = abs(x)
    if y <= 0.46875:
        ysq = y * y
        xnum = 1.85777706184603153e-1 * ysq
        xden = ysq
        xnum = (xnum + 3.16112374387056560e00) * ysq
        xden = (xden + 2.36012909523441209e01) * ysq
        xnum = (xnum + 1.13864154151050156e02) * ysq
        xden = (xden + 2.44024637934444173e02) * ysq
        xnum = (xnum + 3.77485237685302021e02) * ysq
        xden = (xden + 1.28261652607737228e03) * ysq
        return 1.0 - x * (xnum + 3.20937758913846947e03) / (xden + 2.84423683343917062e03)
    if y <= 4.0:
        xnum = 2.15311535474403846e-8 * y
        xden = y
        xnum = (xnum + 5.64188496988670089e-1) * y
        xden = (xden + 1.57449261107098347e01) * y
        xnum = (xnum + 8.88314979438837594e00) * y
        xden = (xden + 1.17693950891312499e02) * y
        xnum = (xnum + 6.61191906371416295e01) * y
        xden = (xden + 5.37181101862009858e02) * y
        xnum = (xnum + 2.98635138197400131e02) * y
        xden = (xden + 1.62138957456669019e03) * y
        xnum = (xnum + 8.81952221241769090e02) * y
        xden = (xden + 3.29079923573345963e03) * y
        xnum = (xnum + 1.71204761263407058e03) * y
        xden = (xden + 4.36261909014324716e03) * y
        xnum = (xnum + 2.05107837782607147e03) * y
        xden = (xden + 3.43936767414372164e03) * y
        res = (xnum + 1.23033935479799725e03) / (xden + 1.23033935480374942e03) * emx2
    elif y < 26.543:
        ysq = 1.0 / (y * y)
        xnum = 1.63153871373020978e-2 * ysq
        xden = ysq
        xnum = (xnum + 3.05326634961232344e-1) * ysq
        xden = (xden + 2.56852019228982242e00) * ysq
        xnum = (xnum + 3.60344899949804439e-1) * ysq
        xden = (xden + 1.87295284992346725e00) * ysq
        xnum = (xnum + 1.25781726111229246e-1) * ysq
        xden = (xden + 5.27905102951428412e-1) * ysq
        xnum = (xnum + 1.60837851487422766e-2) * ysq
        xden = (xden + 6.05183413124413191e-2) * ysq
        res = ysq * (xnum + 6.58749161529837803e-4) / (xden + 2.33520497626869185e-3)
        res = (INV_SQRT_PI - res) / y * emx2
    elif y == y:
        res = 0.0
    else:
        return np.nan
    return 2.0 - res if x < 0.0 else res


@njit(cache=True, nogil=True)
def _ncdf(d, e):
    # N(d) with e == exp(-d*d/2)
    return 0.5 * erfc_scaled(-d * INV_SQRT2, e)


@njit(cache=True, nogil=True)
def norm_cdf(x):
    return _ncdf(x, math.exp(-0.5 * x * x))


@njit(cache=True, nogil=True)
def norm_pdf(x):
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


@njit(cache=True, nogil=True)
def _price_vega(lnk, r, tau, sqrt_tau, disc_k, kexp, is_call, sigma):
    sst = sigma * sqrt_tau
    d1 = (lnk + (r + 0.5 * sigma * sigma) * tau) / sst
    d2 = d1 - sst
    e1 = math.exp(-0.5 * d1 * d1)
    e2 = e1 * kexp if e1 > TINY else math.exp(-0.5 * d2 * d2)
    if is_call:
        p = _ncdf(d1, e1) - disc_k * _ncdf(d2, e2)
    else:
        p = disc_k * _ncdf(-d2, e2) - _ncdf(-d1, e1)
    return p, INV_SQRT_2PI * e1 * sqrt_tau


@njit(cache=True, nogil=True)
def _bounds(disc_k, is_call):
    if is_call:
        return max(1.0 - disc_k, 0.0), 1.0
    return max(disc_k - 1.0, 0.0), disc_k


@njit(cache=True, nogil=True)
def _sigma_c(lnk, r, tau):
    return math.sqrt(abs(2.0 / tau * (lnk + r * tau)))


@njit(cache=True, nogil=True)
def _layer(sigma, lnk, r, tau, sqrt_tau, disc_k, kexp, is_call, c, single, floor, vega_floor):
    p, v = _price_vega(lnk, r, tau, sqrt_tau, disc_k, kexp, is_call, sigma)
    diff = _rnd(p - c, single)
    v = _rnd(v, single)
    if not (math.isfinite(diff) and math.isfinite(v)):
        return np.nan, NON_FINITE
    if v < vega_floor:
        return sigma, FROZEN_VEGA
    nxt = _rnd(sigma - _rnd(diff / v, single), single)
    if not math.isfinite(nxt):
        return np.nan, NON_FINITE
    if nxt < floor:
        return floor, CLAMPED_SIGMA
    return nxt, OK


@njit(cache=True, nogil=True)
def _prepare(k, r, tau, c, is_call, single):
    """Rounded inputs plus per-element constants; status is OK or a failure code."""
    k = _rnd(k, single)
    r = _rnd(r, single)
    tau = _rnd(tau, single)
    c = _rnd(c, single)
    if not (math.isfinite(k) and math.isfinite(r) and math.isfinite(tau) and math.isfinite(c)):
        return r, tau, c, 0.0, 0.0, 0.0, 0.0, NON_FINITE
    if k <= 0.0 or tau <= 0.0:
        return r, tau, c, 0.0, 0.0, 0.0, 0.0, INVALID_PRICE
    lnk = math.log(k)
    sqrt_tau = math.sqrt(tau)
    disc_k = math.exp(-r * tau) / k
    kexp = k * math.exp(r * tau)
    lo, hi = _bounds(disc_k, is_call)
    if not (_rnd(lo, single) < c < _rnd(hi, single)):
        return r, tau, c, lnk, sqrt_tau, disc_k, kexp, INVALID_PRICE
    return r, tau, c, lnk, sqrt_tau, disc_k, kexp, OK


@njit(cache=True, nogil=True)
def solve_into(k, r, tau, c, is_call, depth, single, sigma_floor, vega_floor,
               sigma_out, status_out, resid_out, trace_out):
    # Layer-major over small blocks: one element's layers form a serial
    # dependency chain, so interleaving BLOCK independent chains keeps the
    # pipeline busy.
    tracing = trace_out.shape[0] > 0
    floor = _rnd(sigma_floor, single)
    n_all = k.shape[0]
    b_r = np.empty(BLOCK)
    b_tau = np.empty(BLOCK)
    b_c = np.empty(BLOCK)
    b_lnk = np.empty(BLOCK)
    b_st = np.empty(BLOCK)
    b_dk = np.empty(BLOCK)
    b_ke = np.empty(BLOCK)
    b_sig = np.empty(BLOCK)
    b_status = np.empty(BLOCK, dtype=np.uint8)
    for start in range(0, n_all, BLOCK):
        m = min(BLOCK, n_all - start)
        for j in range(m):
            i = start + j
            (b_r[j], b_tau[j], b_c[j], b_lnk[j], b_st[j], b_dk[j], b_ke[j],
             b_status[j]) = _prepare(k[i], r[i], tau[i], c[i], is_call[i], single)
            if b_status[j] == OK:
                sigma = _rnd(_sigma_c(b_lnk[j], b_r[j], b_tau[j]), single)
                b_sig[j] = floor if sigma < floor else sigma
            else:
                b_sig[j] = np.nan
            if tracing:
                trace_out[0, i] = b_sig[j]
        for n in range(depth):
            for j in range(m):
                st = b_status[j]
                if st < INVALID_PRICE:
                    sigma, flag = _layer(b_sig[j], b_lnk[j], b_r[j], b_tau[j], b_st[j], b_dk[j],
                                         b_ke[j], is_call[start + j], b_c[j], single, floor,
                                         vega_floor)
                    b_sig[j] = sigma
                    if flag > st:
                        b_status[j] = flag
                if tracing:
                    trace_out[n + 1, start + j] = b_sig[j]
        for j in range(m):
            i = start + j
            st = b_status[j]
            status_out[i] = st
            if st >= INVALID_PRICE:
                sigma_out[i] = np.nan
                resid_out[i] = np.nan
            else:
                sigma_out[i] = b_sig[j]
                p, _ = _price_vega(b_lnk[j], b_r[j], b_tau[j], b_st[j], b_dk[j], b_ke[j],
                                   is_call[i], b_sig[j])
                resid_out[i] = abs(_rnd(p - b_c[j], single))


@njit(cache=True, nogil=True)
def step_into(sigma, k, r, tau, c, is_call, single, sigma_floor, vega_floor, sigma_out, flag_out):
    floor = _rnd(sigma_floor, single)
    for i in range(k.shape[0]):
        ri, ti, ci, lnk, sqrt_tau, disc_k, kexp, status = _prepare(
            k[i], r[i], tau[i], c[i], is_call[i], single)
        if status != OK:
            sigma_out[i] = np.nan
            flag_out[i] = status
            continue
        s = _rnd(sigma[i], single)
        sigma_out[i], flag_out[i] = _layer(s, lnk, ri, ti, sqrt_tau, disc_k, kexp, is_call[i], ci,
                                           single, floor, vega_floor)


@njit(cache=True, nogil=True)
def initial_into(k, r, tau, single, sigma_floor, sigma_out):
    floor = _rnd(sigma_floor, single)
    for i in range(k.shape[0]):
        ki = _rnd(k[i], single)
        ti = _rnd(tau[i], single)
        s = _rnd(_sigma_c(math.log(ki), _rnd(r[i], single), ti), single)
        sigma_out[i] = floor if s < floor else s


@njit(cache=True, nogil=True)
def norm_cdf_into(x, out):
    for i in range(x.shape[0]):
        out[i] = norm_cdf(x[i])
