# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernels; semantics identical to ``_pykernels``.

See the pure-Python twin for the chain convention and documentation. Both
backends implement the same arithmetic in the same order; the agreement
test pins them to within a few ULP.
"""
from libc.math cimport cos, sin

BACKEND_NAME = "compiled"


def fk_points(q, double lu, double lf, double ox, double oy, double oz):
    cdef double s1 = sin(q[0]), c1 = cos(q[0])
    cdef double s2 = sin(q[1]), c2 = cos(q[1])
    cdef double s3 = sin(q[2]), c3 = cos(q[2])
    cdef double s4 = sin(q[3]), c4 = cos(q[3])

    cdef double ux = s2
    cdef double uy = s1 * c2
    cdef double uz = -c1 * c2
    cdef double vx = c2 * c3 * s4 + s2 * c4
    cdef double vy = c1 * s3 * s4 - s1 * s2 * c3 * s4 + s1 * c2 * c4
    cdef double vz = s1 * s3 * s4 + c1 * s2 * c3 * s4 - c1 * c2 * c4

    cdef double ex = ox + lu * ux
    cdef double ey = oy + lu * uy
    cdef double ez = oz + lu * uz
    return (ex, ey, ez, ex + lf * vx, ey + lf * vy, ez + lf * vz)


def point_jacobian(q, double lu, double lf, bint wrist):
    cdef double s1 = sin(q[0]), c1 = cos(q[0])
    cdef double s2 = sin(q[1]), c2 = cos(q[1])
    cdef double s3 = sin(q[2]), c3 = cos(q[2])
    cdef double s4 = sin(q[3]), c4 = cos(q[3])

    cdef double du1x = 0.0
    cdef double du1y = c1 * c2
    cdef double du1z = s1 * c2
    cdef double du2x = c2
    cdef double du2y = -s1 * s2
    cdef double du2z = c1 * s2

    if not wrist:
        return (
            lu * du1x, lu * du2x, 0.0, 0.0, 0.0, 0.0,
            lu * du1y, lu * du2y, 0.0, 0.0, 0.0, 0.0,
            lu * du1z, lu * du2z, 0.0, 0.0, 0.0, 0.0,
        )

    cdef double dv1x = 0.0
    cdef double dv1y = -s1 * s3 * s4 - c1 * s2 * c3 * s4 + c1 * c2 * c4
    cdef double dv1z = c1 * s3 * s4 - s1 * s2 * c3 * s4 + s1 * c2 * c4
    cdef double dv2x = -s2 * c3 * s4 + c2 * c4
    cdef double dv2y = -s1 * c2 * c3 * s4 - s1 * s2 * c4
    cdef double dv2z = c1 * c2 * c3 * s4 + c1 * s2 * c4
    cdef double dv3x = -c2 * s3 * s4
    cdef double dv3y = c1 * c3 * s4 + s1 * s2 * s3 * s4
    cdef double dv3z = s1 * c3 * s4 - c1 * s2 * s3 * s4
    cdef double dv4x = c2 * c3 * c4 - s2 * s4
    cdef double dv4y = c1 * s3 * c4 - s1 * s2 * c3 * c4 - s1 * c2 * s4
    cdef double dv4z = s1 * s3 * c4 + c1 * s2 * c3 * c4 + c1 * c2 * s4

    return (
        lu * du1x + lf * dv1x, lu * du2x + lf * dv2x, lf * dv3x, lf * dv4x, 0.0, 0.0,
        lu * du1y + lf * dv1y, lu * du2y + lf * dv2y, lf * dv3y, lf * dv4y, 0.0, 0.0,
        lu * du1z + lf * dv1z, lu * du2z + lf * dv2z, lf * dv3z, lf * dv4z, 0.0, 0.0,
    )


def gravity_torques(q, double lu, double lf, double mu, double mf,
                    double com_r, double g):
    cdef double s1 = sin(q[0]), c1 = cos(q[0])
    cdef double s2 = sin(q[1]), c2 = cos(q[1])
    cdef double s3 = sin(q[2]), c3 = cos(q[2])
    cdef double s4 = sin(q[3]), c4 = cos(q[3])

    cdef double a = g * (mu * com_r + mf) * lu
    cdef double b = g * mf * com_r * lf

    cdef double duz1 = s1 * c2
    cdef double duz2 = c1 * s2
    cdef double dvz1 = c1 * s3 * s4 - s1 * s2 * c3 * s4 + s1 * c2 * c4
    cdef double dvz2 = c1 * c2 * c3 * s4 + c1 * s2 * c4
    cdef double dvz3 = s1 * c3 * s4 - c1 * s2 * s3 * s4
    cdef double dvz4 = s1 * s3 * c4 + c1 * s2 * c3 * c4 + c1 * c2 * s4

    return (
        -(a * duz1 + b * dvz1),
        -(a * duz2 + b * dvz2),
        -(b * dvz3),
        -(b * dvz4),
        0.0,
        0.0,
    )


def coupling_forces(double xm, double ym, double zm,
                    double vxm, double vym, double vzm,
                    double xa, double ya, double za,
                    double vxa, double vya, double vza,
                    double ps, double bs, double pa, double ba):
    cdef double ex = xm - xa
    cdef double ey = ym - ya
    cdef double ez = zm - za
    cdef double evx = vxm - vxa
    cdef double evy = vym - vya
    cdef double evz = vzm - vza
    return (
        -ps * ex - bs * evx,
        -ps * ey - bs * evy,
        -ps * ez - bs * evz,
        pa * ex + ba * evx,
        pa * ey + ba * evy,
        pa * ez + ba * evz,
    )


def jac_t_force(j, double fx, double fy, double fz, double tau_max):
    cdef double jj[18]
    cdef int i
    for i in range(18):
        jj[i] = j[i]
    cdef double out[6]
    cdef double t
    for i in range(6):
        t = jj[i] * fx + jj[6 + i] * fy + jj[12 + i] * fz
        if t > tau_max:
            t = tau_max
        elif t < -tau_max:
            t = -tau_max
        out[i] = t
    return (out[0], out[1], out[2], out[3], out[4], out[5])


def plant_advance(q, tau, damping, double dt, lo, hi):
    cdef double qn[6]
    cdef double vn[6]
    cdef double v, x
    cdef int i
    for i in range(6):
        v = <double>tau[i] / <double>damping[i]
        x = <double>q[i] + v * dt
        if x < <double>lo[i]:
            x = <double>lo[i]
            v = 0.0
        elif x > <double>hi[i]:
            x = <double>hi[i]
            v = 0.0
        qn[i] = x
        vn[i] = v
    return (qn[0], qn[1], qn[2], qn[3], qn[4], qn[5],
            vn[0], vn[1], vn[2], vn[3], vn[4], vn[5])
