"""Pure-Python plant/inverter stepper; reference for the compiled kernel.

Arithmetic order matches ``_kernel.pyx`` statement for statement so the two
backends agree to the last bit on the same libm.
"""

import math

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi
TWO_PI_3 = 2.0 * math.pi / 3.0
SQRT3 = math.sqrt(3.0)


def _level(angles, nang, theta):
    x = math.fmod(theta, TWO_PI)
    if x < 0.0:
        x += TWO_PI
    sign = 1
    if x >= math.pi:
        x -= math.pi
        sign = -1
    if x > HALF_PI:
        x = math.pi - x
    toggles = 0
    for j in range(nang):
        if x >= angles[j]:
            toggles += 1
        else:
            break
    if toggles & 1:
        return sign
    return -sign


def advance(x, p, mode, m_a, theta, u_dc, load, dt, k0, spc, angles, n_steps,
            angle_limit, sw, acc, rec_i, rec_s, rec_w, rec_off):
    r_s = p[0]
    l_d = p[1]
    l_q = p[2]
    psi = p[3]
    pp = p[4]
    inertia = p[5]
    k_f = p[6]
    k_w = p[7]
    i_d = x[0]
    i_q = x[1]
    w = x[2]
    g = x[3]
    nang = len(angles)
    record = rec_i.shape[0] > 0
    half = spc // 2
    ra = rb = rc = 0.0
    sa = sw[0]
    sb = sw[1]
    sc = sw[2]
    advanced = acc[2]
    done = 0
    for j in range(n_steps):
        if angle_limit > 0.0 and advanced >= angle_limit:
            break
        r = (k0 + j) % spc
        if mode == 0:
            if j == 0 or r == 0 or r == half:
                alpha = theta + g
                ra = m_a * math.cos(alpha)
                rb = m_a * math.cos(alpha - TWO_PI_3)
                rc = m_a * math.cos(alpha + TWO_PI_3)
            c = 1.0 - 4.0 * abs((r + 0.5) / spc - 0.5)
            na = 1 if ra > c else -1
            nb = 1 if rb > c else -1
            nc = 1 if rc > c else -1
        else:
            base = theta + g + HALF_PI
            na = _level(angles, nang, base)
            nb = _level(angles, nang, base - TWO_PI_3)
            nc = _level(angles, nang, base + TWO_PI_3)
        if na != sa:
            acc[3] += 1.0
        if nb != sb:
            acc[3] += 1.0
        if nc != sc:
            acc[3] += 1.0
        sa = na
        sb = nb
        sc = nc
        # alpha-beta of the pole voltages; zero sequence drops out
        hv = 0.5 * u_dc
        v_al = (2.0 / 3.0) * hv * (sa - 0.5 * (sb + sc))
        v_be = hv * (sb - sc) / SQRT3

        cg = math.cos(g)
        sg = math.sin(g)
        i_al0 = i_d * cg - i_q * sg
        i_be0 = i_d * sg + i_q * cg
        if record:
            row = rec_off + done
            rec_i[row, 0] = i_al0
            rec_i[row, 1] = -0.5 * i_al0 + 0.5 * SQRT3 * i_be0
            rec_i[row, 2] = -0.5 * i_al0 - 0.5 * SQRT3 * i_be0
            rec_s[row, 0] = sa
            rec_s[row, 1] = sb
            rec_s[row, 2] = sc
            rec_w[row] = w
        ia0 = i_al0
        ib0 = -0.5 * i_al0 + 0.5 * SQRT3 * i_be0
        ic0 = -0.5 * i_al0 - 0.5 * SQRT3 * i_be0
        cu0 = i_d * i_d + i_q * i_q
        w0 = w
        g0 = g

        # RK4, stage 1
        vd = v_al * cg + v_be * sg
        vq = -v_al * sg + v_be * cg
        we = pp * w
        k1d = (vd - r_s * i_d + we * l_q * i_q) / l_d
        k1q = (vq - r_s * i_q - we * (l_d * i_d + psi)) / l_q
        k1w = (1.5 * pp * (psi * i_q + (l_d - l_q) * i_d * i_q) - load - k_f * w - k_w * w * w * w) / inertia
        k1g = we
        # stage 2
        td = i_d + 0.5 * dt * k1d
        tq = i_q + 0.5 * dt * k1q
        tw = w + 0.5 * dt * k1w
        tg = g + 0.5 * dt * k1g
        c2 = math.cos(tg)
        s2 = math.sin(tg)
        vd = v_al * c2 + v_be * s2
        vq = -v_al * s2 + v_be * c2
        we = pp * tw
        k2d = (vd - r_s * td + we * l_q * tq) / l_d
        k2q = (vq - r_s * tq - we * (l_d * td + psi)) / l_q
        k2w = (1.5 * pp * (psi * tq + (l_d - l_q) * td * tq) - load - k_f * tw - k_w * tw * tw * tw) / inertia
        k2g = we
        # stage 3
        td = i_d + 0.5 * dt * k2d
        tq = i_q + 0.5 * dt * k2q
        tw = w + 0.5 * dt * k2w
        tg = g + 0.5 * dt * k2g
        c3 = math.cos(tg)
        s3 = math.sin(tg)
        vd = v_al * c3 + v_be * s3
        vq = -v_al * s3 + v_be * c3
        we = pp * tw
        k3d = (vd - r_s * td + we * l_q * tq) / l_d
        k3q = (vq - r_s * tq - we * (l_d * td + psi)) / l_q
        k3w = (1.5 * pp * (psi * tq + (l_d - l_q) * td * tq) - load - k_f * tw - k_w * tw * tw * tw) / inertia
        k3g = we
        # stage 4
        td = i_d + dt * k3d
        tq = i_q + dt * k3q
        tw = w + dt * k3w
        tg = g + dt * k3g
        c4 = math.cos(tg)
        s4 = math.sin(tg)
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

        cg = math.cos(g)
        sg = math.sin(g)
        i_al1 = i_d * cg - i_q * sg
        i_be1 = i_d * sg + i_q * cg
        ia1 = i_al1
        ib1 = -0.5 * i_al1 + 0.5 * SQRT3 * i_be1
        ic1 = -0.5 * i_al1 - 0.5 * SQRT3 * i_be1
        # trapezoid in time for energy and charge over the step
        acc[0] += 0.75 * dt * (v_al * (i_al0 + i_al1) + v_be * (i_be0 + i_be1))
        acc[1] += 0.25 * dt * ((sa + 1) * (ia0 + ia1) + (sb + 1) * (ib0 + ib1) + (sc + 1) * (ic0 + ic1))
        acc[4] += 0.75 * dt * r_s * (cu0 + i_d * i_d + i_q * i_q)
        acc[5] += 0.5 * dt * (w0 + w)
        done += 1

    x[0] = i_d
    x[1] = i_q
    x[2] = w
    x[3] = g
    sw[0] = sa
    sw[1] = sb
    sw[2] = sc
    acc[2] = advanced
    return done
