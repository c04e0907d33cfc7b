"""Numba kernels for the lattice field operators.

Internal layout is component-major: a connection is (n, C, S) with S = N**n sites
flattened in C order, curvature is (P, C, S) over the pairs mu < nu.  C is 3 for
su(2) and 1 for the abelian reduction, where bracket terms are skipped.  Sites are
swept in lines along the last axis so that every stencil offset is a constant for
the inner loop except at the two wrapped ends, which use a small table.

Stencils are centered: D f = c1 (f[+1] - f[-1]) + c2 (f[+2] - f[-2]) with the
coefficients already divided by h; second order passes c2 = 0.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def line_offsets(N, n):
    """Neighbour shifts (+1, -1, +2, -2) per line for axes 0..n-2, and per
    position for the last axis."""
    R = N ** (n - 1)
    st = np.empty(n, np.int64)
    acc = 1
    for j in range(n - 1, -1, -1):
        st[j] = acc
        acc *= N
    off = np.empty((R, n - 1, 4), np.int64)
    coord = np.zeros(n - 1, np.int64)
    for r in range(R):
        for j in range(n - 1):
            c = coord[j]
            off[r, j, 0] = ((c + 1) % N - c) * st[j]
            off[r, j, 1] = ((c - 1) % N - c) * st[j]
            off[r, j, 2] = ((c + 2) % N - c) * st[j]
            off[r, j, 3] = ((c - 2) % N - c) * st[j]
        j = n - 2
        while j >= 0:
            coord[j] += 1
            if coord[j] < N:
                break
            coord[j] = 0
            j -= 1
    last = np.empty((N, 4), np.int64)
    for i in range(N):
        last[i, 0] = (i + 1) % N - i
        last[i, 1] = (i - 1) % N - i
        last[i, 2] = (i + 2) % N - i
        last[i, 3] = (i - 2) % N - i
    return off, last


@njit(cache=True, fastmath=True)
def _diff_line(src, dst, base, N, axis, n, r, off, last, c1, c2, scale, accumulate):
    """dst[s] (+)= scale * D_axis src over one line."""
    if axis < n - 1:
        o1 = off[r, axis, 0]
        o2 = off[r, axis, 1]
        o3 = off[r, axis, 2]
        o4 = off[r, axis, 3]
        if accumulate:
            for s in range(base, base + N):
                dst[s] += scale * (c1 * (src[s + o1] - src[s + o2]) + c2 * (src[s + o3] - src[s + o4]))
        else:
            for s in range(base, base + N):
                dst[s] = scale * (c1 * (src[s + o1] - src[s + o2]) + c2 * (src[s + o3] - src[s + o4]))
    else:
        for i in range(N):
            s = base + i
            v = scale * (c1 * (src[s + last[i, 0]] - src[s + last[i, 1]])
                         + c2 * (src[s + last[i, 2]] - src[s + last[i, 3]]))
            if accumulate:
                dst[s] += v
            else:
                dst[s] = v


@njit(cache=True, fastmath=True)
def _curl_line(anu, amu, dst, base, N, mu, nu, n, r, off, last, c1, c2):
    """dst = D_mu anu - D_nu amu over one line (mu < nu)."""
    m1 = off[r, mu, 0]
    m2 = off[r, mu, 1]
    m3 = off[r, mu, 2]
    m4 = off[r, mu, 3]
    if nu < n - 1:
        q1 = off[r, nu, 0]
        q2 = off[r, nu, 1]
        q3 = off[r, nu, 2]
        q4 = off[r, nu, 3]
        for s in range(base, base + N):
            dst[s] = (c1 * (anu[s + m1] - anu[s + m2] - amu[s + q1] + amu[s + q2])
                      + c2 * (anu[s + m3] - anu[s + m4] - amu[s + q3] + amu[s + q4]))
    else:
        for i in range(N):
            s = base + i
            dst[s] = (c1 * (anu[s + m1] - anu[s + m2] - amu[s + last[i, 0]] + amu[s + last[i, 1]])
                      + c2 * (anu[s + m3] - anu[s + m4] - amu[s + last[i, 2]] + amu[s + last[i, 3]]))


@njit(cache=True, fastmath=True)
def curvature_cm(a, N, c1, c2, pmu, pnu, bracket, f):
    n, C, S = a.shape
    P = pmu.shape[0]
    off, last = line_offsets(N, n)
    for c in range(C):
        for r in range(S // N):
            base = r * N
            for p in range(P):
                mu = pmu[p]
                nu = pnu[p]
                _curl_line(a[nu, c], a[mu, c], f[p, c], base, N, mu, nu, n, r, off, last, c1, c2)
    if bracket:
        for p in range(P):
            x0 = a[pmu[p], 0]
            x1 = a[pmu[p], 1]
            x2 = a[pmu[p], 2]
            y0 = a[pnu[p], 0]
            y1 = a[pnu[p], 1]
            y2 = a[pnu[p], 2]
            f0 = f[p, 0]
            f1 = f[p, 1]
            f2 = f[p, 2]
            for s in range(S):
                f0[s] += x1[s] * y2[s] - x2[s] * y1[s]
                f1[s] += x2[s] * y0[s] - x0[s] * y2[s]
                f2[s] += x0[s] * y1[s] - x1[s] * y0[s]


@njit(cache=True, fastmath=True)
def dstar_cm(a, f, N, c1, c2, pidx, psgn, bracket, out):
    """out_nu = -sum_mu (D_mu F_mu,nu + [A_mu, F_mu,nu])."""
    n, C, S = a.shape
    off, last = line_offsets(N, n)
    for c in range(C):
        for r in range(S // N):
            base = r * N
            for nu in range(n):
                first = True
                for mu in range(n):
                    if mu == nu:
                        continue
                    _diff_line(f[pidx[mu, nu], c], out[nu, c], base, N, mu, n, r, off, last,
                               c1, c2, -psgn[mu, nu], not first)
                    first = False
    if bracket:
        for nu in range(n):
            o0 = out[nu, 0]
            o1 = out[nu, 1]
            o2 = out[nu, 2]
            for mu in range(n):
                if mu == nu:
                    continue
                p = pidx[mu, nu]
                sg = psgn[mu, nu]
                x0 = a[mu, 0]
                x1 = a[mu, 1]
                x2 = a[mu, 2]
                y0 = f[p, 0]
                y1 = f[p, 1]
                y2 = f[p, 2]
                for s in range(S):
                    o0[s] -= sg * (x1[s] * y2[s] - x2[s] * y1[s])
                    o1[s] -= sg * (x2[s] * y0[s] - x0[s] * y2[s])
                    o2[s] -= sg * (x0[s] * y1[s] - x1[s] * y0[s])


@njit(cache=True)
def sqnorm_cm(x, out):
    """out[s] = sum over the two leading axes of x**2 (no fastmath: fixed order)."""
    A, C, S = x.shape
    for s in range(S):
        out[s] = 0.0
    for i in range(A):
        for c in range(C):
            row = x[i, c]
            for s in range(S):
                out[s] += row[s] * row[s]


@njit(cache=True, fastmath=True)
def rk_stage(k, acc, y, a0, w, cdt, first):
    """With k = D*F (so the velocity is -k): acc (+)= w*(-k), y = a0 + cdt*(-k)."""
    kf = k.ravel()
    af = acc.ravel()
    yf = y.ravel()
    a0f = a0.ravel()
    if first:
        for i in range(kf.shape[0]):
            af[i] = -w * kf[i]
            yf[i] = a0f[i] - cdt * kf[i]
    else:
        for i in range(kf.shape[0]):
            af[i] -= w * kf[i]
            yf[i] = a0f[i] - cdt * kf[i]


@njit(cache=True, fastmath=True)
def rk_final(k, acc, a0, dt6):
    """a0 <- a0 + dt/6 (acc - k) in place; returns max |entry| for the overflow guard."""
    kf = k.ravel()
    af = acc.ravel()
    a0f = a0.ravel()
    big = 0.0
    for i in range(kf.shape[0]):
        v = a0f[i] + dt6 * (af[i] - kf[i])
        a0f[i] = v
        av = abs(v)
        if not av <= big:
            big = av
    return big


@njit(cache=True)
def neighbor_table(N, n):
    """nbr[mu, q, s]: site index of s shifted along mu by (+1, -1, +2, -2)."""
    S = N ** n
    st = np.empty(n, np.int64)
    acc = 1
    for j in range(n - 1, -1, -1):
        st[j] = acc
        acc *= N
    nbr = np.empty((n, 4, S), np.int64)
    shifts = (1, -1, 2, -2)
    for s in range(S):
        for mu in range(n):
            c = (s // st[mu]) % N
            for q in range(4):
                nbr[mu, q, s] = s + ((c + shifts[q]) % N - c) * st[mu]
    return nbr


@njit(cache=True, fastmath=True)
def gauge_action_sm(a, q, nbr, c1, c2, idx, out):
    """out_mu = Ad_q a_mu - 2 vec((D_mu q) q^*) at the sites idx; site-major a (S, n, 3), q (S, 4)."""
    n = a.shape[1]
    d = np.empty(4)
    for s in idx:
        w = q[s, 0]
        v0 = q[s, 1]
        v1 = q[s, 2]
        v2 = q[s, 3]
        for mu in range(n):
            x0 = a[s, mu, 0]
            x1 = a[s, mu, 1]
            x2 = a[s, mu, 2]
            # rotation x + 2w (v x x) + 2 v x (v x x)
            t0 = v1 * x2 - v2 * x1
            t1 = v2 * x0 - v0 * x2
            t2 = v0 * x1 - v1 * x0
            r0 = x0 + 2 * w * t0 + 2 * (v1 * t2 - v2 * t1)
            r1 = x1 + 2 * w * t1 + 2 * (v2 * t0 - v0 * t2)
            r2 = x2 + 2 * w * t2 + 2 * (v0 * t1 - v1 * t0)
            p1 = nbr[mu, 0, s]
            m1 = nbr[mu, 1, s]
            p2 = nbr[mu, 2, s]
            m2 = nbr[mu, 3, s]
            for c in range(4):
                d[c] = c1 * (q[p1, c] - q[m1, c]) + c2 * (q[p2, c] - q[m2, c])
            # vector part of d * conj(q): -d_w v + w d_v - d_v x v
            e0 = -d[0] * v0 + w * d[1] - (d[2] * v2 - d[3] * v1)
            e1 = -d[0] * v1 + w * d[2] - (d[3] * v0 - d[1] * v2)
            e2 = -d[0] * v2 + w * d[3] - (d[1] * v1 - d[2] * v0)
            out[s, mu, 0] = r0 - 2 * e0
            out[s, mu, 1] = r1 - 2 * e1
            out[s, mu, 2] = r2 - 2 * e2


@njit(cache=True, fastmath=True)
def divergence_sm(a, nbr, c1, c2, idx, out):
    """out = sum_mu D_mu a_mu at the sites idx, site-major a (S, n, 3)."""
    n = a.shape[1]
    for s in idx:
        for c in range(3):
            t = 0.0
            for mu in range(n):
                t += (c1 * (a[nbr[mu, 0, s], mu, c] - a[nbr[mu, 1, s], mu, c])
                      + c2 * (a[nbr[mu, 2, s], mu, c] - a[nbr[mu, 3, s], mu, c]))
            out[s, c] = t


@njit(cache=True)
def relax_update(q, div, lam, idx):
    """q <- exp(-lam div) q at the sites idx, renormalized."""
    for s in idx:
        x0 = -lam * div[s, 0]
        x1 = -lam * div[s, 1]
        x2 = -lam * div[s, 2]
        th = np.sqrt(x0 * x0 + x1 * x1 + x2 * x2)
        c = np.cos(0.5 * th)
        f = 0.5 if th == 0.0 else np.sin(0.5 * th) / th
        bw, b0, b1, b2 = c, f * x0, f * x1, f * x2
        w, v0, v1, v2 = q[s, 0], q[s, 1], q[s, 2], q[s, 3]
        nw = bw * w - b0 * v0 - b1 * v1 - b2 * v2
        n0 = bw * v0 + b0 * w + b1 * v2 - b2 * v1
        n1 = bw * v1 + b1 * w + b2 * v0 - b0 * v2
        n2 = bw * v2 + b2 * w + b0 * v1 - b1 * v0
        r = 1.0 / np.sqrt(nw * nw + n0 * n0 + n1 * n1 + n2 * n2)
        q[s, 0] = nw * r
        q[s, 1] = n0 * r
        q[s, 2] = n1 * r
        q[s, 3] = n2 * r
