"""Compiled GF(2^b) kernels used by the sketch codec.

Field elements are split into two uint64 words (lo, hi) so fields up to 120
bits are supported. Polynomials are 2-D arrays of shape (n, 2), lowest
coefficient first, with no trailing zero rows.

Constraints: bits <= 60 or 64 <= bits <= 120, and the low part of the modulus
must have degree <= min(bits, 64) - 4 so a 4-bit overflow folds into the low
word without a second reduction.
"""

import numpy as np
from numba import njit

_U1 = np.uint64(1)
_U4 = np.uint64(4)
_U15 = np.uint64(15)


@njit(cache=True, inline="always")
def _shl4(l, h, bits):
    # (l, h) * x^4 mod f, where bits above 4 of the top nibble are already 0
    if bits >= 64:
        hb = np.uint64(bits - 64)
        if bits == 64:
            top = l >> np.uint64(60)
            h = np.uint64(0)
        else:
            top = (h >> (hb - _U4)) & _U15
            h = ((h << _U4) | (l >> np.uint64(60))) & ((_U1 << hb) - _U1)
        l = l << _U4
    else:
        b = np.uint64(bits)
        top = (l >> (b - _U4)) & _U15
        l = (l << _U4) & ((_U1 << b) - _U1)
        h = np.uint64(0)
    return l, h, top


@njit(cache=True)
def fold_table(modl):
    """t(x) * x^bits mod f for every 4-bit t."""
    red = np.zeros(16, np.uint64)
    for t in range(16):
        acc = np.uint64(0)
        for j in range(4):
            if (t >> j) & 1:
                acc ^= modl << np.uint64(j)
        red[t] = acc
    return red


@njit(cache=True)
def mul_table(al, ah, bits, red):
    """Multiples a * t for every 4-bit polynomial t."""
    tl = np.zeros(16, np.uint64)
    th = np.zeros(16, np.uint64)
    tl[1] = al
    th[1] = ah
    for i in range(2, 16, 2):
        l = tl[i >> 1]
        h = th[i >> 1]
        # multiply by x
        if bits >= 64:
            hb = np.uint64(bits - 64)
            if bits == 64:
                top = l >> np.uint64(63)
                h = np.uint64(0)
            else:
                top = (h >> (hb - _U1)) & _U1
                h = ((h << _U1) | (l >> np.uint64(63))) & ((_U1 << hb) - _U1)
            l = l << _U1
        else:
            b = np.uint64(bits)
            top = (l >> (b - _U1)) & _U1
            l = (l << _U1) & ((_U1 << b) - _U1)
        if top:
            l ^= red[1]
        tl[i] = l
        th[i] = h
        tl[i + 1] = l ^ al
        th[i + 1] = h ^ ah
    return tl, th


@njit(cache=True)
def mul_by_table(tl, th, bl, bh, bits, red):
    rl = np.uint64(0)
    rh = np.uint64(0)
    nibbles = (bits + 3) // 4
    for k in range(nibbles - 1, -1, -1):
        rl, rh, top = _shl4(rl, rh, bits)
        rl ^= red[top]
        if k >= 16:
            nib = (bh >> np.uint64(4 * (k - 16))) & _U15
        else:
            nib = (bl >> np.uint64(4 * k)) & _U15
        rl ^= tl[nib]
        rh ^= th[nib]
    return rl, rh


@njit(cache=True)
def mul(al, ah, bl, bh, bits, red):
    tl, th = mul_table(al, ah, bits, red)
    return mul_by_table(tl, th, bl, bh, bits, red)


@njit(cache=True)
def _mulx(l, h, bits, red):
    """(l, h) * x mod f."""
    if bits >= 64:
        hb = np.uint64(bits - 64)
        if bits == 64:
            top = l >> np.uint64(63)
            h = np.uint64(0)
        else:
            top = (h >> (hb - _U1)) & _U1
            h = ((h << _U1) | (l >> np.uint64(63))) & ((_U1 << hb) - _U1)
        l = l << _U1
    else:
        b = np.uint64(bits)
        top = (l >> (b - _U1)) & _U1
        l = (l << _U1) & ((_U1 << b) - _U1)
    if top:
        l ^= red[1]
    return l, h


@njit(cache=True)
def square_table(bits, red):
    """sqt[k, v] = (v * x^(8k))^2; squaring is linear, so a square is one lookup per byte."""
    chunks = bits // 8
    sqt = np.zeros((chunks, 256, 2), np.uint64)
    l = np.uint64(1)
    h = np.uint64(0)
    for k in range(chunks):
        for t in range(8):
            # l, h = x^(2(8k + t))
            sqt[k, 1 << t, 0] = l
            sqt[k, 1 << t, 1] = h
            l, h = _mulx(l, h, bits, red)
            l, h = _mulx(l, h, bits, red)
        for v in range(3, 256):
            low = v & -v
            if low != v:
                sqt[k, v, 0] = sqt[k, v ^ low, 0] ^ sqt[k, low, 0]
                sqt[k, v, 1] = sqt[k, v ^ low, 1] ^ sqt[k, low, 1]
    return sqt


@njit(cache=True, inline="always")
def sqr(al, ah, sqt):
    rl = np.uint64(0)
    rh = np.uint64(0)
    for k in range(sqt.shape[0]):
        if k < 8:
            v = (al >> np.uint64(8 * k)) & np.uint64(255)
        else:
            v = (ah >> np.uint64(8 * (k - 8))) & np.uint64(255)
        rl ^= sqt[k, v, 0]
        rh ^= sqt[k, v, 1]
    return rl, rh


@njit(cache=True)
def inv_fast(al, ah, bits, red, sqt):
    """Itoh-Tsujii inverse: a^(2^bits - 2) = (a^(2^(bits-1) - 1))^2."""
    m = bits - 1
    top = 0
    while (m >> (top + 1)) > 0:
        top += 1
    bl, bh = al, ah  # a^(2^k - 1)
    k = 1
    for i in range(top - 1, -1, -1):
        tl, th = bl, bh
        for _ in range(k):
            tl, th = sqr(tl, th, sqt)
        bl, bh = mul(tl, th, bl, bh, bits, red)
        k *= 2
        if (m >> i) & 1:
            bl, bh = sqr(bl, bh, sqt)
            bl, bh = mul(bl, bh, al, ah, bits, red)
            k += 1
    return sqr(bl, bh, sqt)


@njit(cache=True)
def mul_many(a, b, bits, red):
    out = np.empty_like(a)
    for i in range(a.shape[0]):
        out[i, 0], out[i, 1] = mul(a[i, 0], a[i, 1], b[i, 0], b[i, 1], bits, red)
    return out


@njit(cache=True)
def sketch_add(syndromes, elems, bits, red):
    """Accumulate odd power sums e, e^3, ..., e^(2c-1) in place."""
    cap = syndromes.shape[0]
    for i in range(elems.shape[0]):
        el = elems[i, 0]
        eh = elems[i, 1]
        sl, sh = mul(el, eh, el, eh, bits, red)
        tl, th = mul_table(sl, sh, bits, red)
        cl, ch = el, eh
        for pos in range(cap):
            syndromes[pos, 0] ^= cl
            syndromes[pos, 1] ^= ch
            cl, ch = mul_by_table(tl, th, cl, ch, bits, red)


@njit(cache=True)
def _trim(p, n):
    while n > 0 and p[n - 1, 0] == 0 and p[n - 1, 1] == 0:
        n -= 1
    return p[:n].copy()


@njit(cache=True)
def berlekamp_massey(s, bits, red, sqt):
    n = s.shape[0]
    cur = np.zeros((n + 2, 2), np.uint64)
    prev = np.zeros((n + 2, 2), np.uint64)
    tmp = np.zeros((n + 2, 2), np.uint64)
    cur[0, 0] = 1
    prev[0, 0] = 1
    lc = 1  # length of cur
    lp = 1
    bl = np.uint64(1)
    bh = np.uint64(0)
    for k in range(n):
        dl = s[k, 0]
        dh = s[k, 1]
        for i in range(1, lc):
            pl, ph = mul(s[k - i, 0], s[k - i, 1], cur[i, 0], cur[i, 1], bits, red)
            dl ^= pl
            dh ^= ph
        if dl == 0 and dh == 0:
            continue
        x = k + 1 - (lc - 1) - (lp - 1)
        ml, mh = mul(dl, dh, bl, bh, bits, red)
        tl, th = mul_table(ml, mh, bits, red)
        if 2 * (lc - 1) <= k:
            tmp[:lc] = cur[:lc]
            lt = lc
            need = lp + x
            if need > lc:
                cur[lc:need] = 0
                lc = need
            for i in range(lp):
                pl, ph = mul_by_table(tl, th, prev[i, 0], prev[i, 1], bits, red)
                cur[i + x, 0] ^= pl
                cur[i + x, 1] ^= ph
            prev[:lt] = tmp[:lt]
            lp = lt
            bl, bh = inv_fast(dl, dh, bits, red, sqt)
        else:
            for i in range(lp):
                pl, ph = mul_by_table(tl, th, prev[i, 0], prev[i, 1], bits, red)
                cur[i + x, 0] ^= pl
                cur[i + x, 1] ^= ph
    # BM keeps the register length, which may exceed the true degree
    return cur[:lc].copy()


@njit(cache=True)
def poly_monic(p, bits, red, sqt):
    il, ih = inv_fast(p[-1, 0], p[-1, 1], bits, red, sqt)
    tl, th = mul_table(il, ih, bits, red)
    out = np.empty_like(p)
    for i in range(p.shape[0]):
        out[i, 0], out[i, 1] = mul_by_table(tl, th, p[i, 0], p[i, 1], bits, red)
    return out


@njit(cache=True)
def poly_divmod(p, m, bits, red):
    """Quotient and remainder of p by a monic m."""
    lm = m.shape[0]
    lp = p.shape[0]
    if lp < lm:
        return np.zeros((0, 2), np.uint64), p.copy()
    val = p.copy()
    quo = np.zeros((lp - lm + 1, 2), np.uint64)
    for top in range(lp - 1, lm - 2, -1):
        tl0 = val[top, 0]
        th0 = val[top, 1]
        q = top - (lm - 1)
        quo[q, 0] = tl0
        quo[q, 1] = th0
        if tl0 == 0 and th0 == 0:
            continue
        tl, th = mul_table(tl0, th0, bits, red)
        for j in range(lm - 1):
            pl, ph = mul_by_table(tl, th, m[j, 0], m[j, 1], bits, red)
            val[q + j, 0] ^= pl
            val[q + j, 1] ^= ph
        val[top, 0] = 0
        val[top, 1] = 0
    return quo, _trim(val, lm - 1)


@njit(cache=True)
def poly_gcd(a, b, bits, red, sqt):
    if a.shape[0] < b.shape[0]:
        a, b = b, a
    while b.shape[0] > 0:
        b = poly_monic(b, bits, red, sqt)
        _, r = poly_divmod(a, b, bits, red)
        a = b
        b = r
    return a


@njit(cache=True)
def fixed_tables(p, bits, red):
    """Byte-chunk product tables for the coefficients of p.

    out[k, v, i] = p[i] * v * x^(8k), so the row t * p is the XOR of one
    contiguous slice per byte of t.
    """
    chunks = bits // 8
    n = p.shape[0]
    out = np.zeros((chunks, 256, n, 2), np.uint64)
    for i in range(n):
        l = p[i, 0]
        h = p[i, 1]
        for k in range(chunks):
            for t in range(8):
                out[k, 1 << t, i, 0] = l
                out[k, 1 << t, i, 1] = h
                l, h = _mulx(l, h, bits, red)
    for k in range(chunks):
        for v in range(3, 256):
            low = v & -v
            if low != v:
                for i in range(n):
                    out[k, v, i, 0] = out[k, v ^ low, i, 0] ^ out[k, low, i, 0]
                    out[k, v, i, 1] = out[k, v ^ low, i, 1] ^ out[k, low, i, 1]
    return out


@njit(cache=True)
def _reduce_fixed(val, n, lm, tab, chunks):
    """Reduce val[:n] in place by the monic polynomial whose tables are ``tab``."""
    deg = lm - 1
    for top in range(n - 1, deg - 1, -1):
        tl0 = val[top, 0]
        th0 = val[top, 1]
        if tl0 == 0 and th0 == 0:
            continue
        q = top - deg
        for k in range(chunks):
            if k < 8:
                v = (tl0 >> np.uint64(8 * k)) & np.uint64(255)
            else:
                v = (th0 >> np.uint64(8 * (k - 8))) & np.uint64(255)
            if v == 0:
                continue
            for j in range(deg):
                val[q + j, 0] ^= tab[k, v, j, 0]
                val[q + j, 1] ^= tab[k, v, j, 1]
        val[top, 0] = 0
        val[top, 1] = 0


@njit(cache=True)
def frobenius_powers(f, bits, red, sqt):
    """x^(2^k) mod f for k < bits, for a monic f of degree >= 2."""
    lm = f.shape[0]
    deg = lm - 1
    tab = fixed_tables(f[:deg], bits, red)
    chunks = bits // 8
    out = np.zeros((bits, deg, 2), np.uint64)
    out[0, 1, 0] = 1
    work = np.zeros((2 * deg, 2), np.uint64)
    for k in range(1, bits):
        work[:] = 0
        for i in range(deg):
            work[2 * i, 0], work[2 * i, 1] = sqr(out[k - 1, i, 0], out[k - 1, i, 1], sqt)
        _reduce_fixed(work, 2 * deg - 1, lm, tab, chunks)
        out[k] = work[:deg]
    return out


@njit(cache=True)
def trace_from_powers(pw, bl, bh, bits, red, sqt):
    """sum_k (beta x)^(2^k) mod f, given pw[k] = x^(2^k) mod f."""
    deg = pw.shape[1]
    acc = np.zeros((deg, 2), np.uint64)
    for k in range(pw.shape[0]):
        tl, th = mul_table(bl, bh, bits, red)
        for i in range(deg):
            pl, ph = mul_by_table(tl, th, pw[k, i, 0], pw[k, i, 1], bits, red)
            acc[i, 0] ^= pl
            acc[i, 1] ^= ph
        bl, bh = sqr(bl, bh, sqt)
    return acc


@njit(cache=True)
def find_roots(poly, bits, red, sqt):
    """Roots of poly if it splits into distinct linear factors.

    Returns (ok, roots). Splits with the Berlekamp trace algorithm using the
    deterministic basis beta = x^i; a factor that no basis element separates
    is either a repeated root or irreducible of degree > 1.
    """
    roots = np.zeros((poly.shape[0], 2), np.uint64)
    nroots = 0
    top = poly_monic(poly, bits, red, sqt)
    if top.shape[0] == 2:
        roots[0, 0] = top[0, 0]
        roots[0, 1] = top[0, 1]
        return True, roots[:1]
    if top.shape[0] < 2:
        return True, roots[:0]
    # traces mod the top polynomial, reduced mod each factor on demand
    pw = frobenius_powers(top, bits, red, sqt)
    deg = top.shape[0] - 1
    traces = np.zeros((bits, deg, 2), np.uint64)
    have = np.zeros(bits, np.bool_)
    stack = [top]
    starts = [0]
    while len(stack) > 0:
        f = stack.pop()
        start = starts.pop()
        found = False
        for i in range(start, bits):
            if not have[i]:
                bl = np.uint64(0)
                bh = np.uint64(0)
                if i < 64:
                    bl = _U1 << np.uint64(i)
                else:
                    bh = _U1 << np.uint64(i - 64)
                traces[i] = trace_from_powers(pw, bl, bh, bits, red, sqt)
                have[i] = True
            _, tr = poly_divmod(_trim(traces[i], deg), f, bits, red)
            if tr.shape[0] < 2:
                continue
            g = poly_gcd(tr, f, bits, red, sqt)
            if g.shape[0] > 1 and g.shape[0] < f.shape[0]:
                g = poly_monic(g, bits, red, sqt)
                q, _ = poly_divmod(f, g, bits, red)
                for h in (g, q):
                    if h.shape[0] == 2:
                        roots[nroots, 0] = h[0, 0]
                        roots[nroots, 1] = h[0, 1]
                        nroots += 1
                    else:
                        stack.append(h)
                        starts.append(i + 1)
                found = True
                break
        if not found:
            return False, roots[:0]
    return True, roots[:nroots]


@njit(cache=True)
def decode(odd, bits, red):
    """Recover the elements encoded by odd power sums. Returns (ok, elems)."""
    cap = odd.shape[0]
    sqt = square_table(bits, red)
    syn = np.zeros((2 * cap, 2), np.uint64)
    for i in range(cap):
        syn[2 * i, 0] = odd[i, 0]
        syn[2 * i, 1] = odd[i, 1]
        syn[2 * i + 1, 0], syn[2 * i + 1, 1] = sqr(syn[i, 0], syn[i, 1], sqt)
    loc = berlekamp_massey(syn, bits, red, sqt)
    n = loc.shape[0]
    if n == 1:
        return True, np.zeros((0, 2), np.uint64)
    # locator prod(1 - m x): its reversal has the elements themselves as roots
    if loc[n - 1, 0] == 0 and loc[n - 1, 1] == 0:
        return False, np.zeros((0, 2), np.uint64)
    rev = np.empty_like(loc)
    for i in range(n):
        rev[i] = loc[n - 1 - i]
    ok, roots = find_roots(rev, bits, red, sqt)
    if not ok or roots.shape[0] != n - 1:
        return False, np.zeros((0, 2), np.uint64)
    return True, roots
