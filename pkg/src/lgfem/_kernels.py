"""Numba kernels for the exact composite integral.

The upwind map restricted to an element is affine (the transport velocity
is P1), so the image of each triangle is a triangle.  The kernel clips
every image triangle against the unit square and against the candidate
mesh triangles, integrates the polynomial integrand over each
intersection polygon with a fan triangulation and a Gauss rule, and
accumulates the load vector.  Integration is carried out in image
coordinates; the pullback Jacobian is the constant 1/det per element.
"""

import numpy as np
from numba import njit

MAX_POLY = 16


@njit(cache=True)
def _basis(k, l0, l1, l2, out):
    if k == 1:
        out[0] = l0
        out[1] = l1
        out[2] = l2
        return 3
    out[0] = l0 * (2.0 * l0 - 1.0)
    out[1] = l1 * (2.0 * l1 - 1.0)
    out[2] = l2 * (2.0 * l2 - 1.0)
    out[3] = 4.0 * l1 * l2
    out[4] = 4.0 * l2 * l0
    out[5] = 4.0 * l0 * l1
    return 6


@njit(cache=True)
def _clip_edge(poly, n, px, py, qx, qy, eps, out):
    """Sutherland-Hodgman step: keep the side left of the edge p->q."""
    if n == 0:
        return 0
    ex = qx - px
    ey = qy - py
    m = 0
    jx = poly[n - 1, 0]
    jy = poly[n - 1, 1]
    dj = ex * (jy - py) - ey * (jx - px)
    for i in range(n):
        ix = poly[i, 0]
        iy = poly[i, 1]
        di = ex * (iy - py) - ey * (ix - px)
        ins_i = di >= -eps
        ins_j = dj >= -eps
        if ins_i != ins_j:
            t = dj / (dj - di)
            out[m, 0] = jx + t * (ix - jx)
            out[m, 1] = jy + t * (iy - jy)
            m += 1
        if ins_i:
            out[m, 0] = ix
            out[m, 1] = iy
            m += 1
        jx = ix
        jy = iy
        dj = di
    return m


@njit(cache=True)
def _poly_area(poly, n):
    s = 0.0
    for i in range(n):
        j = (i + 1) % n
        s += poly[i, 0] * poly[j, 1] - poly[j, 0] * poly[i, 1]
    return 0.5 * s


@njit(cache=True)
def composite_exact_kernel(
    verts,
    elems,
    areas,
    h_elem,
    dofs_u,
    k_u,
    coeffs_u,
    dofs_v,
    k_v,
    wstar,
    dt,
    grid_n,
    bin_ptr,
    bin_elems,
    qb,
    qw,
    out,
    covered,
):
    """Accumulate entries int (u_prev o X1) . phi_i dx into out (2, ndof_v).

    covered[e] receives the pullback area recovered by clipping for
    element e (equals areas[e] when the image lies inside the domain).
    Returns (status, detmin, detmax); status is -1 on success or the id
    of an element whose affine map is degenerate.
    """
    ne = elems.shape[0]
    nq = qw.shape[0]
    poly = np.empty((MAX_POLY, 2))
    buf1 = np.empty((MAX_POLY, 2))
    buf2 = np.empty((MAX_POLY, 2))
    phi_u = np.empty(6)
    phi_v = np.empty(6)
    visited = np.full(ne, -1, dtype=np.int64)
    img = np.empty((3, 2))
    detmin = 1.0e300
    detmax = -1.0e300

    for e in range(ne):
        for j in range(3):
            v = elems[e, j]
            img[j, 0] = verts[v, 0] - dt * wstar[v, 0]
            img[j, 1] = verts[v, 1] - dt * wstar[v, 1]
        ax, ay = img[0, 0], img[0, 1]
        bx, by = img[1, 0], img[1, 1]
        cx, cy = img[2, 0], img[2, 1]
        det_img = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        det_e = 0.5 * det_img / areas[e]
        if det_e < detmin:
            detmin = det_e
        if det_e > detmax:
            detmax = det_e
        if det_e <= 1e-12:
            return e, detmin, detmax

        # clip the image triangle to the unit square
        n = 3
        for j in range(3):
            poly[j, 0] = img[j, 0]
            poly[j, 1] = img[j, 1]
        n = _clip_edge(poly, n, 0.0, 0.0, 1.0, 0.0, 1e-12, buf1)
        n = _clip_edge(buf1, n, 1.0, 0.0, 1.0, 1.0, 1e-12, buf2)
        n = _clip_edge(buf2, n, 1.0, 1.0, 0.0, 1.0, 1e-12, buf1)
        n = _clip_edge(buf1, n, 0.0, 1.0, 0.0, 0.0, 1e-12, poly)
        if n < 3:
            continue

        xmin = 1.0e300
        xmax = -1.0e300
        ymin = 1.0e300
        ymax = -1.0e300
        for j in range(n):
            if poly[j, 0] < xmin:
                xmin = poly[j, 0]
            if poly[j, 0] > xmax:
                xmax = poly[j, 0]
            if poly[j, 1] < ymin:
                ymin = poly[j, 1]
            if poly[j, 1] > ymax:
                ymax = poly[j, 1]
        i0 = int(xmin * grid_n)
        i1 = int(xmax * grid_n)
        j0 = int(ymin * grid_n)
        j1 = int(ymax * grid_n)
        if i0 < 0:
            i0 = 0
        if j0 < 0:
            j0 = 0
        if i1 > grid_n - 1:
            i1 = grid_n - 1
        if j1 > grid_n - 1:
            j1 = grid_n - 1

        eps = 1e-12 * h_elem[e]
        inv_det_img = 1.0 / det_img

        for gi in range(i0, i1 + 1):
            for gj in range(j0, j1 + 1):
                b = gi * grid_n + gj
                for t in range(bin_ptr[b], bin_ptr[b + 1]):
                    c = bin_elems[t]
                    if visited[c] == e:
                        continue
                    visited[c] = e

                    w0 = elems[c, 0]
                    w1 = elems[c, 1]
                    w2 = elems[c, 2]
                    x0, y0 = verts[w0, 0], verts[w0, 1]
                    x1, y1 = verts[w1, 0], verts[w1, 1]
                    x2, y2 = verts[w2, 0], verts[w2, 1]

                    m = _clip_edge(poly, n, x0, y0, x1, y1, eps, buf1)
                    m = _clip_edge(buf1, m, x1, y1, x2, y2, eps, buf2)
                    m = _clip_edge(buf2, m, x2, y2, x0, y0, eps, buf1)
                    if m < 3:
                        continue
                    area_p = _poly_area(buf1, m)
                    if area_p / det_e < 1e-14 * areas[e]:
                        continue
                    covered[e] += area_p / det_e

                    det_c = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
                    inv_det_c = 1.0 / det_c

                    # fan triangulation of the clipped polygon
                    for s in range(1, m - 1):
                        p0x, p0y = buf1[0, 0], buf1[0, 1]
                        p1x, p1y = buf1[s, 0], buf1[s, 1]
                        p2x, p2y = buf1[s + 1, 0], buf1[s + 1, 1]
                        a_sub = 0.5 * (
                            (p1x - p0x) * (p2y - p0y) - (p1y - p0y) * (p2x - p0x)
                        )
                        if a_sub <= 0.0:
                            continue
                        scale = a_sub / det_e
                        for q in range(nq):
                            l0 = qb[q, 0]
                            l1 = qb[q, 1]
                            l2 = qb[q, 2]
                            yx = l0 * p0x + l1 * p1x + l2 * p2x
                            yy = l0 * p0y + l1 * p1y + l2 * p2y

                            # barycentric w.r.t. the image triangle = test point
                            mu1 = ((yx - ax) * (cy - ay) - (yy - ay) * (cx - ax)) * inv_det_img
                            mu2 = ((bx - ax) * (yy - ay) - (by - ay) * (yx - ax)) * inv_det_img
                            mu0 = 1.0 - mu1 - mu2
                            nb_v = _basis(k_v, mu0, mu1, mu2, phi_v)

                            # barycentric w.r.t. the candidate element = u point
                            be1 = ((yx - x0) * (y2 - y0) - (yy - y0) * (x2 - x0)) * inv_det_c
                            be2 = ((x1 - x0) * (yy - y0) - (y1 - y0) * (yx - x0)) * inv_det_c
                            be0 = 1.0 - be1 - be2
                            nb_u = _basis(k_u, be0, be1, be2, phi_u)

                            uval0 = 0.0
                            uval1 = 0.0
                            for bu in range(nb_u):
                                d = dofs_u[c, bu]
                                uval0 += coeffs_u[0, d] * phi_u[bu]
                                uval1 += coeffs_u[1, d] * phi_u[bu]

                            wq = qw[q] * scale
                            for bv in range(nb_v):
                                d = dofs_v[e, bv]
                                out[0, d] += wq * phi_v[bv] * uval0
                                out[1, d] += wq * phi_v[bv] * uval1
    return -1, detmin, detmax
