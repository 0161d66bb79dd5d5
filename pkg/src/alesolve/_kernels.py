"""Numba kernels for the split-form volume contributions.

The flux-differencing volume term couples every node pair along each
reference line, which is too hot for vectorized numpy at production sizes;
everything else in the package stays in numpy.  The arithmetic here mirrors
`alesolve.fluxes` expression by expression so the two paths agree to
rounding; a cross-consistency test guards the transcription.
"""

import numpy as np
from numba import njit, prange

VARIANT_CHANDRASHEKAR = 0
VARIANT_RANOCHA = 1

DISS_NONE = 0
DISS_ROE = 1
DISS_RUSANOV = 2
DISS_BLEND = 3

_SERIES_CUT = 1e-4


@njit(cache=True, inline="always")
def _logmean(a, b):
    lo = min(a, b)
    hi = max(a, b)
    zeta = lo / hi
    f = (zeta - 1.0) / (zeta + 1.0)
    usq = f * f
    if (zeta - 1.0) ** 2 >= _SERIES_CUT:
        fac = np.log(zeta) / (2.0 * f)
    else:
        fac = 1.0 + usq * (1.0 / 3.0 + usq * (1.0 / 5.0 + usq / 7.0))
    return (lo + hi) / (2.0 * fac)


@njit(cache=True, inline="always")
def _euler_pair_flux(
    rm, u1m, u2m, u3m, pm, bm,
    rp, u1p, u2p, u3p, pp, bp,
    n1m, n2m, n3m, n1p, n2p, n3p,
    ja0, ja1, ja2, gamma, variant, gt,
):
    """Metric-contracted moving-mesh EC flux of one node pair.

    gt accumulates sum_c avgJa_c * G_c with G_c = F_c - avg(nu_c) U#.
    """
    rho_log = _logmean(rm, rp)
    beta_log = _logmean(bm, bp)
    rho_avg = 0.5 * (rm + rp)
    beta_avg = 0.5 * (bm + bp)
    u1 = 0.5 * (u1m + u1p)
    u2 = 0.5 * (u2m + u2p)
    u3 = 0.5 * (u3m + u3p)
    usq_avg = (
        0.5 * (u1m * u1m + u1p * u1p)
        + 0.5 * (u2m * u2m + u2p * u2p)
        + 0.5 * (u3m * u3m + u3p * u3p)
    )
    usq_bar = 2.0 * (u1 * u1 + u2 * u2 + u3 * u3) - usq_avg
    nu1 = 0.5 * (n1m + n1p)
    nu2 = 0.5 * (n2m + n2p)
    nu3 = 0.5 * (n3m + n3p)

    inv_e = 1.0 / (2.0 * (gamma - 1.0) * beta_log)
    # state function U#
    s0 = rho_log
    s1 = rho_log * u1
    s2 = rho_log * u2
    s3 = rho_log * u3
    s4 = rho_log * inv_e + 0.5 * rho_log * usq_bar

    if variant == VARIANT_CHANDRASHEKAR:
        p_tilde = rho_avg / (2.0 * beta_avg)
        pen1 = p_tilde
        pen2 = 0.0
    else:
        p_avg = 0.5 * (pm + pp)
        pen1 = p_avg
        pen2 = 1.0

    for c in range(3):
        if c == 0:
            un = u1
            nuc = nu1
            ja = ja0
        elif c == 1:
            un = u2
            nuc = nu2
            ja = ja1
        else:
            un = u3
            nuc = nu3
            ja = ja2
        mass = rho_log * un
        f0 = mass
        f1 = mass * u1
        f2 = mass * u2
        f3 = mass * u3
        if c == 0:
            f1 += pen1
        elif c == 1:
            f2 += pen1
        else:
            f3 += pen1
        if pen2 == 0.0:
            f4 = mass * inv_e + 0.5 * mass * usq_bar + pen1 * un
        else:
            if c == 0:
                pu = 0.5 * (pm * u1m + pp * u1p)
            elif c == 1:
                pu = 0.5 * (pm * u2m + pp * u2p)
            else:
                pu = 0.5 * (pm * u3m + pp * u3p)
            f4 = mass * inv_e + 0.5 * mass * usq_bar + 2.0 * pen1 * un - pu
        gt[0] += ja * (f0 - nuc * s0)
        gt[1] += ja * (f1 - nuc * s1)
        gt[2] += ja * (f2 - nuc * s2)
        gt[3] += ja * (f3 - nuc * s3)
        gt[4] += ja * (f4 - nuc * s4)


@njit(cache=True, parallel=True)
def euler_volume_divergence(prim, nu, ja, d, gamma, variant, out):
    """Split-form divergence of the contravariant EC flux, all elements.

    prim: (K, 6, n, n, n) nodal (rho, u1, u2, u3, p, beta)
    nu:   (K, 3, n, n, n) grid velocity
    ja:   (K, 3, 3, n, n, n) contravariant metrics [ref dir, cart comp]
    d:    (n, n) derivative matrix
    out:  (K, 5, n, n, n), overwritten with the divergence
    """
    kk = prim.shape[0]
    n = prim.shape[2]
    for e in prange(kk):
        gt = np.empty(5)
        res = np.zeros((5, n, n, n))
        for j in range(n):
            for k in range(n):
                # direction 1: pairs (i, m) along the first index
                for i in range(n):
                    for m in range(i, n):
                        for q in range(5):
                            gt[q] = 0.0
                        _euler_pair_flux(
                            prim[e, 0, i, j, k], prim[e, 1, i, j, k],
                            prim[e, 2, i, j, k], prim[e, 3, i, j, k],
                            prim[e, 4, i, j, k], prim[e, 5, i, j, k],
                            prim[e, 0, m, j, k], prim[e, 1, m, j, k],
                            prim[e, 2, m, j, k], prim[e, 3, m, j, k],
                            prim[e, 4, m, j, k], prim[e, 5, m, j, k],
                            nu[e, 0, i, j, k], nu[e, 1, i, j, k],
                            nu[e, 2, i, j, k],
                            nu[e, 0, m, j, k], nu[e, 1, m, j, k],
                            nu[e, 2, m, j, k],
                            0.5 * (ja[e, 0, 0, i, j, k] + ja[e, 0, 0, m, j, k]),
                            0.5 * (ja[e, 0, 1, i, j, k] + ja[e, 0, 1, m, j, k]),
                            0.5 * (ja[e, 0, 2, i, j, k] + ja[e, 0, 2, m, j, k]),
                            gamma, variant, gt,
                        )
                        for q in range(5):
                            res[q, i, j, k] += 2.0 * d[i, m] * gt[q]
                        if m > i:
                            for q in range(5):
                                res[q, m, j, k] += 2.0 * d[m, i] * gt[q]
                # direction 2: pairs along the second index (i<->j roles)
                for i in range(n):
                    for m in range(i, n):
                        for q in range(5):
                            gt[q] = 0.0
                        _euler_pair_flux(
                            prim[e, 0, j, i, k], prim[e, 1, j, i, k],
                            prim[e, 2, j, i, k], prim[e, 3, j, i, k],
                            prim[e, 4, j, i, k], prim[e, 5, j, i, k],
                            prim[e, 0, j, m, k], prim[e, 1, j, m, k],
                            prim[e, 2, j, m, k], prim[e, 3, j, m, k],
                            prim[e, 4, j, m, k], prim[e, 5, j, m, k],
                            nu[e, 0, j, i, k], nu[e, 1, j, i, k],
                            nu[e, 2, j, i, k],
                            nu[e, 0, j, m, k], nu[e, 1, j, m, k],
                            nu[e, 2, j, m, k],
                            0.5 * (ja[e, 1, 0, j, i, k] + ja[e, 1, 0, j, m, k]),
                            0.5 * (ja[e, 1, 1, j, i, k] + ja[e, 1, 1, j, m, k]),
                            0.5 * (ja[e, 1, 2, j, i, k] + ja[e, 1, 2, j, m, k]),
                            gamma, variant, gt,
                        )
                        for q in range(5):
                            res[q, j, i, k] += 2.0 * d[i, m] * gt[q]
                        if m > i:
                            for q in range(5):
                                res[q, j, m, k] += 2.0 * d[m, i] * gt[q]
                # direction 3: pairs along the third index
                for i in range(n):
                    for m in range(i, n):
                        for q in range(5):
                            gt[q] = 0.0
                        _euler_pair_flux(
                            prim[e, 0, j, k, i], prim[e, 1, j, k, i],
                            prim[e, 2, j, k, i], prim[e, 3, j, k, i],
                            prim[e, 4, j, k, i], prim[e, 5, j, k, i],
                            prim[e, 0, j, k, m], prim[e, 1, j, k, m],
                            prim[e, 2, j, k, m], prim[e, 3, j, k, m],
                            prim[e, 4, j, k, m], prim[e, 5, j, k, m],
                            nu[e, 0, j, k, i], nu[e, 1, j, k, i],
                            nu[e, 2, j, k, i],
                            nu[e, 0, j, k, m], nu[e, 1, j, k, m],
                            nu[e, 2, j, k, m],
                            0.5 * (ja[e, 2, 0, j, k, i] + ja[e, 2, 0, j, k, m]),
                            0.5 * (ja[e, 2, 1, j, k, i] + ja[e, 2, 1, j, k, m]),
                            0.5 * (ja[e, 2, 2, j, k, i] + ja[e, 2, 2, j, k, m]),
                            gamma, variant, gt,
                        )
                        for q in range(5):
                            res[q, j, k, i] += 2.0 * d[i, m] * gt[q]
                        if m > i:
                            for q in range(5):
                                res[q, j, k, m] += 2.0 * d[m, i] * gt[q]
        for q in range(5):
            for i in range(n):
                for j2 in range(n):
                    for k2 in range(n):
                        out[e, q, i, j2, k2] = res[q, i, j2, k2]


@njit(cache=True, inline="always")
def _euler_entropy_vars(rho, u1, u2, u3, p, beta, gamma, w):
    sigma = np.log(p) - gamma * np.log(rho)
    vsq = u1 * u1 + u2 * u2 + u3 * u3
    w[0] = (gamma - sigma) / (gamma - 1.0) - beta * vsq
    w[1] = 2.0 * beta * u1
    w[2] = 2.0 * beta * u2
    w[3] = 2.0 * beta * u3
    w[4] = -2.0 * beta


@njit(cache=True)
def euler_face_fluxes(prim_m, prim_p, nu_m, nu_p, sn, gamma, variant,
                      diss_mode, alpha, g_star, gtr_m, gtr_p):
    """Surface fluxes of every face node: single-valued numerical flux and
    the two interior-trace contravariant fluxes.

    prim_*: (F, 6, a, b) traces (rho, u1, u2, u3, p, beta)
    nu_*:   (F, 3, a, b);  sn: (F, 3, a, b) scaled minus-side normal
    outputs (F, 5, a, b): g_star, gtr_m, gtr_p (overwritten)
    """
    nf = prim_m.shape[0]
    na = prim_m.shape[2]
    nb = prim_m.shape[3]
    for f in prange(nf):
        w_m = np.empty(5)
        w_p = np.empty(5)
        jw = np.empty(5)
        rhat = np.empty((5, 5))
        lam = np.empty(5)
        z = np.empty(5)
        gc = np.empty(5)
        for ia in range(na):
            for ib in range(nb):
                rm = prim_m[f, 0, ia, ib]
                u1m = prim_m[f, 1, ia, ib]
                u2m = prim_m[f, 2, ia, ib]
                u3m = prim_m[f, 3, ia, ib]
                pm = prim_m[f, 4, ia, ib]
                bm = prim_m[f, 5, ia, ib]
                rp = prim_p[f, 0, ia, ib]
                u1p = prim_p[f, 1, ia, ib]
                u2p = prim_p[f, 2, ia, ib]
                u3p = prim_p[f, 3, ia, ib]
                pp = prim_p[f, 4, ia, ib]
                bp = prim_p[f, 5, ia, ib]
                n1m = nu_m[f, 0, ia, ib]
                n2m = nu_m[f, 1, ia, ib]
                n3m = nu_m[f, 2, ia, ib]
                n1p = nu_p[f, 0, ia, ib]
                n2p = nu_p[f, 1, ia, ib]
                n3p = nu_p[f, 2, ia, ib]

                rho_log = _logmean(rm, rp)
                beta_log = _logmean(bm, bp)
                rho_avg = 0.5 * (rm + rp)
                beta_avg = 0.5 * (bm + bp)
                u1 = 0.5 * (u1m + u1p)
                u2 = 0.5 * (u2m + u2p)
                u3 = 0.5 * (u3m + u3p)
                usq_avg = (
                    0.5 * (u1m * u1m + u1p * u1p)
                    + 0.5 * (u2m * u2m + u2p * u2p)
                    + 0.5 * (u3m * u3m + u3p * u3p)
                )
                usq_bar = 2.0 * (u1 * u1 + u2 * u2 + u3 * u3) - usq_avg
                inv_e = 1.0 / (2.0 * (gamma - 1.0) * beta_log)
                s0 = rho_log
                s1 = rho_log * u1
                s2 = rho_log * u2
                s3 = rho_log * u3
                s4 = rho_log * inv_e + 0.5 * rho_log * usq_bar
                p_avg = 0.5 * (pm + pp)
                if variant == VARIANT_CHANDRASHEKAR:
                    pen = rho_avg / (2.0 * beta_avg)
                else:
                    pen = p_avg

                if diss_mode != DISS_NONE:
                    _euler_entropy_vars(rm, u1m, u2m, u3m, pm, bm, gamma, w_m)
                    _euler_entropy_vars(rp, u1p, u2p, u3p, pp, bp, gamma, w_p)
                    for q in range(5):
                        jw[q] = w_p[q] - w_m[q]
                    cbar = np.sqrt(
                        gamma * rho_avg / (2.0 * rho_log * beta_avg)
                    )
                    hbar = gamma / (2.0 * (gamma - 1.0) * beta_log) + 0.5 * usq_bar
                    c_m = np.sqrt(gamma * pm / rm)
                    c_p = np.sqrt(gamma * pp / rp)
                    ac_scale = np.sqrt(rho_log / (2.0 * gamma))
                    ent_scale = np.sqrt((gamma - 1.0) / gamma * rho_log)
                    sh_scale = np.sqrt(rho_avg / (2.0 * beta_avg))

                for q in range(5):
                    g_star[f, q, ia, ib] = 0.0
                    gtr_m[f, q, ia, ib] = 0.0
                    gtr_p[f, q, ia, ib] = 0.0

                for c in range(3):
                    snc = sn[f, c, ia, ib]
                    if c == 0:
                        un = u1
                        nuc = 0.5 * (n1m + n1p)
                        unm, unp = u1m, u1p
                        ncm, ncp = n1m, n1p
                    elif c == 1:
                        un = u2
                        nuc = 0.5 * (n2m + n2p)
                        unm, unp = u2m, u2p
                        ncm, ncp = n2m, n2p
                    else:
                        un = u3
                        nuc = 0.5 * (n3m + n3p)
                        unm, unp = u3m, u3p
                        ncm, ncp = n3m, n3p

                    # EC flux (static part minus avg(nu_c) U#)
                    mass = rho_log * un
                    gc[0] = mass
                    gc[1] = mass * u1
                    gc[2] = mass * u2
                    gc[3] = mass * u3
                    gc[1 + c] += pen
                    if variant == VARIANT_CHANDRASHEKAR:
                        gc[4] = mass * inv_e + 0.5 * mass * usq_bar + pen * un
                    else:
                        if c == 0:
                            pu = 0.5 * (pm * u1m + pp * u1p)
                        elif c == 1:
                            pu = 0.5 * (pm * u2m + pp * u2p)
                        else:
                            pu = 0.5 * (pm * u3m + pp * u3p)
                        gc[4] = (
                            mass * inv_e + 0.5 * mass * usq_bar
                            + 2.0 * pen * un - pu
                        )
                    gc[0] -= nuc * s0
                    gc[1] -= nuc * s1
                    gc[2] -= nuc * s2
                    gc[3] -= nuc * s3
                    gc[4] -= nuc * s4

                    if diss_mode != DISS_NONE:
                        # Rhat = R* T* for direction c
                        for q in range(5):
                            for r in range(5):
                                rhat[q, r] = 0.0
                        for col, sgn in ((0, -1.0), (4, 1.0)):
                            rhat[0, col] = 1.0
                            rhat[1, col] = u1
                            rhat[2, col] = u2
                            rhat[3, col] = u3
                            rhat[1 + c, col] = un + sgn * cbar
                            rhat[4, col] = hbar + sgn * un * cbar
                        ent_col = 1 + c
                        rhat[0, ent_col] = 1.0
                        rhat[1, ent_col] = u1
                        rhat[2, ent_col] = u2
                        rhat[3, ent_col] = u3
                        rhat[4, ent_col] = 0.5 * usq_bar
                        for jj in range(3):
                            col = 1 + jj
                            if col == ent_col:
                                continue
                            rhat[1 + jj, col] = 1.0
                            if jj == 0:
                                rhat[4, col] = u1
                            elif jj == 1:
                                rhat[4, col] = u2
                            else:
                                rhat[4, col] = u3
                        for q in range(5):
                            rhat[q, 0] *= ac_scale
                            rhat[q, 4] *= ac_scale
                            rhat[q, ent_col] *= ent_scale
                        for jj in range(3):
                            col = 1 + jj
                            if col != ent_col:
                                for q in range(5):
                                    rhat[q, col] *= sh_scale

                        rel = un - nuc
                        if diss_mode == DISS_ROE or diss_mode == DISS_BLEND:
                            lam[0] = abs(rel - cbar)
                            lam[1] = abs(rel)
                            lam[2] = abs(rel)
                            lam[3] = abs(rel)
                            lam[4] = abs(rel + cbar)
                        if diss_mode != DISS_ROE:
                            rus = max(abs(unm - ncm) + c_m, abs(unp - ncp) + c_p)
                            if diss_mode == DISS_RUSANOV:
                                for q in range(5):
                                    lam[q] = rus
                            else:
                                for q in range(5):
                                    lam[q] = alpha * rus + (1.0 - alpha) * lam[q]

                        for r in range(5):
                            acc = 0.0
                            for q in range(5):
                                acc += rhat[q, r] * jw[q]
                            z[r] = lam[r] * acc
                        for q in range(5):
                            acc = 0.0
                            for r in range(5):
                                acc += rhat[q, r] * z[r]
                            gc[q] -= 0.5 * acc

                    for q in range(5):
                        g_star[f, q, ia, ib] += snc * gc[q]

                    # interior traces of the contravariant flux
                    relm = unm - ncm
                    gtr_m[f, 0, ia, ib] += snc * (rm * unm - ncm * rm)
                    gtr_m[f, 1, ia, ib] += snc * (rm * u1m * unm - ncm * rm * u1m)
                    gtr_m[f, 2, ia, ib] += snc * (rm * u2m * unm - ncm * rm * u2m)
                    gtr_m[f, 3, ia, ib] += snc * (rm * u3m * unm - ncm * rm * u3m)
                    relp = unp - ncp
                    gtr_p[f, 0, ia, ib] += snc * (rp * unp - ncp * rp)
                    gtr_p[f, 1, ia, ib] += snc * (rp * u1p * unp - ncp * rp * u1p)
                    gtr_p[f, 2, ia, ib] += snc * (rp * u2p * unp - ncp * rp * u2p)
                    gtr_p[f, 3, ia, ib] += snc * (rp * u3p * unp - ncp * rp * u3p)
                    em = pm / (gamma - 1.0) + 0.5 * rm * (
                        u1m * u1m + u2m * u2m + u3m * u3m
                    )
                    ep = pp / (gamma - 1.0) + 0.5 * rp * (
                        u1p * u1p + u2p * u2p + u3p * u3p
                    )
                    if c == 0:
                        gtr_m[f, 1, ia, ib] += snc * pm
                        gtr_p[f, 1, ia, ib] += snc * pp
                    elif c == 1:
                        gtr_m[f, 2, ia, ib] += snc * pm
                        gtr_p[f, 2, ia, ib] += snc * pp
                    else:
                        gtr_m[f, 3, ia, ib] += snc * pm
                        gtr_p[f, 3, ia, ib] += snc * pp
                    gtr_m[f, 4, ia, ib] += snc * ((em + pm) * unm - ncm * em)
                    gtr_p[f, 4, ia, ib] += snc * ((ep + pp) * unp - ncp * ep)


@njit(cache=True, parallel=True)
def apply_d_batch(values, d, axis, out):
    """Nodal derivative along one reference axis for a batch of fields.

    values, out: (B, n, n, n); d: (n, n).
    """
    bsz = values.shape[0]
    n = values.shape[1]
    for b in prange(bsz):
        if axis == 0:
            for j in range(n):
                for k in range(n):
                    for i in range(n):
                        acc = 0.0
                        for m in range(n):
                            acc += d[i, m] * values[b, m, j, k]
                        out[b, i, j, k] = acc
        elif axis == 1:
            for i in range(n):
                for k in range(n):
                    for j in range(n):
                        acc = 0.0
                        for m in range(n):
                            acc += d[j, m] * values[b, i, m, k]
                        out[b, i, j, k] = acc
        else:
            for i in range(n):
                for j in range(n):
                    for k in range(n):
                        acc = 0.0
                        for m in range(n):
                            acc += d[k, m] * values[b, i, j, m]
                        out[b, i, j, k] = acc


@njit(cache=True, parallel=True)
def gcl_volume_divergence(nu, ja, d, out):
    """Split-form divergence of the contravariant grid velocity.

    Literal two-point form: sum over reference directions of
    sum_m 2 D_im avg(nu) . avg(Ja^a) along each line.
    nu: (K, 3, n, n, n); ja: (K, 3, 3, n, n, n); out: (K, n, n, n).
    """
    kk = nu.shape[0]
    n = nu.shape[2]
    for e in prange(kk):
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    acc = 0.0
                    for m in range(n):
                        dot = 0.0
                        for c in range(3):
                            dot += (
                                (nu[e, c, i, j, k] + nu[e, c, m, j, k])
                                * (ja[e, 0, c, i, j, k] + ja[e, 0, c, m, j, k])
                            )
                        acc += 0.5 * d[i, m] * dot
                        dot = 0.0
                        for c in range(3):
                            dot += (
                                (nu[e, c, i, j, k] + nu[e, c, i, m, k])
                                * (ja[e, 1, c, i, j, k] + ja[e, 1, c, i, m, k])
                            )
                        acc += 0.5 * d[j, m] * dot
                        dot = 0.0
                        for c in range(3):
                            dot += (
                                (nu[e, c, i, j, k] + nu[e, c, i, j, m])
                                * (ja[e, 2, c, i, j, k] + ja[e, 2, c, i, j, m])
                            )
                        acc += 0.5 * d[k, m] * dot
                    out[e, i, j, k] = acc
