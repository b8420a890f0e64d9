# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled plant/inverter stepper. Mirrors ``_kernel_py.advance``."""

from libc.math cimport cos, sin, fmod, fabs, sqrt, M_PI

cdef double TWO_PI = 2.0 * M_PI
cdef double HALF_PI = 0.5 * M_PI
cdef double TWO_PI_3 = 2.0 * M_PI / 3.0
cdef double SQRT3 = sqrt(3.0)


cdef inline int _level(const double[::1] angles, int nang, double theta) noexcept nogil:
    cdef double x = fmod(theta, TWO_PI)
    cdef int sign = 1
    cdef int toggles = 0
    cdef int j
    if x < 0.0:
        x += TWO_PI
    if x >= M_PI:
        x -= M_PI
        sign = -1
    if x > HALF_PI:
        x = M_PI - x
    for j in range(nang):
        if x >= angles[j]:
            toggles += 1
        else:
            break
    if toggles & 1:
        return sign
    return -sign


def advance(double[::1] x, const double[::1] p, int mode, double m_a, double theta,
            double u_dc, double load, double dt, long long k0, int spc,
            const double[::1] angles, long long n_steps, double angle_limit,
            long long[::1] sw, double[::1] acc, double[:, ::1] rec_i,
            signed char[:, ::1] rec_s, double[::1] rec_w, long long rec_off):
    cdef double r_s = p[0], l_d = p[1], l_q = p[2], psi = p[3], pp = p[4]
    cdef double inertia = p[5], k_f = p[6], k_w = p[7]
    cdef double i_d = x[0], i_q = x[1], w = x[2], g = x[3]
    cdef int nang = angles.shape[0]
    cdef bint record = rec_i.shape[0] > 0
    cdef int half = spc // 2
    cdef double ra = 0.0, rb = 0.0, rc = 0.0
    cdef long long sa = sw[0], sb = sw[1], sc = sw[2]
    cdef long long na, nb, nc
    cdef double advanced = acc[2]
    cdef double e_el = acc[0], q_dc = acc[1], toggles = acc[3], e_cu = acc[4], w_int = acc[5]
    cdef long long done = 0, j, r, row
    cdef double alpha, c, base, hv, v_al, v_be, cg, sg, i_al0, i_be0, ia0, ib0, ic0, cu0, w0, g0
    cdef double vd, vq, we, td, tq, tw, tg, c2, s2, c3, s3, c4, s4
    cdef double k1d, k1q, k1w, k1g, k2d, k2q, k2w, k2g, k3d, k3q, k3w, k3g, k4d, k4q, k4w, k4g
    cdef double dg, i_al1, i_be1, ia1, ib1, ic1

    with nogil:
        for j in range(n_steps):
            if angle_limit > 0.0 and advanced >= angle_limit:
                break
            r = (k0 + j) % spc
            if mode == 0:
                if j == 0 or r == 0 or r == half:
                    alpha = theta + g
                    ra = m_a * cos(alpha)
                    rb = m_a * cos(alpha - TWO_PI_3)
                    rc = m_a * cos(alpha + TWO_PI_3)
                c = 1.0 - 4.0 * fabs((r + 0.5) / spc - 0.5)
                na = 1 if ra > c else -1
                nb = 1 if rb > c else -1
                nc = 1 if rc > c else -1
            else:
                base = theta + g + HALF_PI
                na = _level(angles, nang, base)
                nb = _level(angles, nang, base - TWO_PI_3)
                nc = _level(angles, nang, base + TWO_PI_3)
            if na != sa:
                toggles += 1.0
            if nb != sb:
                toggles += 1.0
            if nc != sc:
                toggles += 1.0
            sa = na
            sb = nb
            sc = nc
            hv = 0.5 * u_dc
            v_al = (2.0 / 3.0) * hv * (sa - 0.5 * (sb + sc))
            v_be = hv * (sb - sc) / SQRT3

            cg = cos(g)
            sg = sin(g)
            i_al0 = i_d * cg - i_q * sg
            i_be0 = i_d * sg + i_q * cg
            if record:
                row = rec_off + done
                rec_i[row, 0] = i_al0
                rec_i[row, 1] = -0.5 * i_al0 + 0.5 * SQRT3 * i_be0
                rec_i[row, 2] = -0.5 * i_al0 - 0.5 * SQRT3 * i_be0
                rec_s[row, 0] = <signed char>sa
                rec_s[row, 1] = <signed char>sb
                rec_s[row, 2] = <signed char>sc
                rec_w[row] = w
            ia0 = i_al0
            ib0 = -0.5 * i_al0 + 0.5 * SQRT3 * i_be0
            ic0 = -0.5 * i_al0 - 0.5 * SQRT3 * i_be0
            cu0 = i_d * i_d + i_q * i_q
            w0 = w
            g0 = g

            vd = v_al * cg + v_be * sg
            vq = -v_al * sg + v_be * cg
            we = pp * w
            k1d = (vd - r_s * i_d + we * l_q * i_q) / l_d
            k1q = (vq - r_s * i_q - we * (l_d * i_d + psi)) / l_q
            k1w = (1.5 * pp * (psi * i_q + (l_d - l_q) * i_d * i_q) - load - k_f * w - k_w * w * w * w) / inertia
            k1g = we

            td = i_d + 0.5 * dt * k1d
            tq = i_q + 0.5 * dt * k1q
            tw = w + 0.5 * dt * k1w
            tg = g + 0.5 * dt * k1g
            c2 = cos(tg)
            s2 = sin(tg)
            vd = v_al * c2 + v_be * s2
            vq = -v_al * s2 + v_be * c2
            we = pp * tw
            k2d = (vd - r_s * td + we * l_q * tq) / l_d
            k2q = (vq - r_s * tq - we * (l_d * td + psi)) / l_q
            k2w = (1.5 * pp * (psi * tq + (l_d - l_q) * td * tq) - load - k_f * tw - k_w * tw * tw * tw) / inertia
            k2g = we

            td = i_d + 0.5 * dt * k2d
            tq = i_q + 0.5 * dt * k2q
            tw = w + 0.5 * dt * k2w
            tg = g + 0.5 * dt * k2g
            c3 = cos(tg)
            s3 = sin(tg)
            vd = v_al * c3 + v_be * s3
            vq = -v_al * s3 + v_be * c3
            we = pp * tw
            k3d = (vd - r_s * td + we * l_q * tq) / l_d
            k3q = (vq - r_s * tq - we * (l_d * td + psi)) / l_q
            k3w = (1.5 * pp * (psi * tq + (l_d - l_q) * td * tq) - load - k_f * tw - k_w * tw * tw * tw) / inertia
            k3g = we

            td = i_d + dt * k3d
            tq = i_q + dt * k3q
            tw = w + dt * k3w
            tg = g + dt * k3g
            c4 = cos(tg)
            s4 = sin(tg)
            vd = v_al * c4 + v_be * s4
            vq = -v_al * s4 + v_be * c4
            we = pp * tw
            k4d = (vd - r_s * td + we * l_q * tq) / l_d
            k4q = (vq - r_s * tq - we * (l_d * td + psi)) / l_q
            k4w = (1.5 * pp * (psi * tq + (l_d - l_q) * td * tq) - load - k_f * tw - k_w * tw * tw * tw) / inertia
            k4g = we

            i_d = i_d + dt * (k1d + 2.0 * k2d + 2.0 * k3d + k4d) / 6.0
            i_q = i_q + dt * (k1q + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0
            w = w + dt * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
            dg = dt * (k1g + 2.0 * k2g + 2.0 * k3g + k4g) / 6.0
            g = g0 + dg
            if g >= TWO_PI:
                g -= TWO_PI
            elif g < 0.0:
                g += TWO_PI
            advanced += dg

            cg = cos(g)
            sg = sin(g)
            i_al1 = i_d * cg - i_q * sg
            i_be1 = i_d * sg + i_q * cg
            ia1 = i_al1
            ib1 = -0.5 * i_al1 + 0.5 * SQRT3 * i_be1
            ic1 = -0.5 * i_al1 - 0.5 * SQRT3 * i_be1
            e_el += 0.75 * dt * (v_al * (i_al0 + i_al1) + v_be * (i_be0 + i_be1))
            q_dc += 0.25 * dt * ((sa + 1) * (ia0 + ia1) + (sb + 1) * (ib0 + ib1) + (sc + 1) * (ic0 + ic1))
            e_cu += 0.75 * dt * r_s * (cu0 + i_d * i_d + i_q * i_q)
            w_int += 0.5 * dt * (w0 + w)
            done += 1

    x[0] = i_d
    x[1] = i_q
    x[2] = w
    x[3] = g
    sw[0] = sa
    sw[1] = sb
    sw[2] = sc
    acc[0] = e_el
    acc[1] = q_dc
    acc[2] = advanced
    acc[3] = toggles
    acc[4] = e_cu
    acc[5] = w_int
    return done
