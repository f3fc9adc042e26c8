"""Pure-Python twin of the compiled simulation kernels.

Same functions and semantics as ``_ckernels.pyx``; used when the compiled
extension is unavailable or when ``TELEOPSIM_KERNELS=python`` forces it.
All functions take and return plain floats/tuples so the 500 Hz loop never
pays numpy per-call overhead.

Chain convention (right-handed, +z up, +x forward, zero pose = arm hanging
straight down): the shoulder rotation is Rx(q1)*Ry(-q2)*Rz(q3) applied to
column vectors (abduction, flexion, humeral rotation), the elbow adds
Ry(-q4) (flexion). Joints 5 and 6 (pronation, wrist flexion) live distal to
the wrist joint center and therefore move neither graspable point.
"""
from math import cos, sin

BACKEND_NAME = "python"


def fk_points(q, lu, lf, ox, oy, oz):
    """Elbow and wrist graspable-point positions.

    q: 6-sequence of joint angles (rad); lu/lf: segment lengths (m);
    (ox, oy, oz): shoulder origin. Returns (ex, ey, ez, wx, wy, wz).
    """
    s1 = sin(q[0]); c1 = cos(q[0])
    s2 = sin(q[1]); c2 = cos(q[1])
    s3 = sin(q[2]); c3 = cos(q[2])
    s4 = sin(q[3]); c4 = cos(q[3])

    # u = R_shoulder @ (0,0,-1): upper-arm direction
    ux = s2
    uy = s1 * c2
    uz = -c1 * c2
    # v = R_shoulder @ Ry(-q4) @ (0,0,-1): forearm direction
    vx = c2 * c3 * s4 + s2 * c4
    vy = c1 * s3 * s4 - s1 * s2 * c3 * s4 + s1 * c2 * c4
    vz = s1 * s3 * s4 + c1 * s2 * c3 * s4 - c1 * c2 * c4

    ex = ox + lu * ux
    ey = oy + lu * uy
    ez = oz + lu * uz
    return (ex, ey, ez, ex + lf * vx, ey + lf * vy, ez + lf * vz)


def point_jacobian(q, lu, lf, wrist):
    """3x6 position Jacobian of a graspable point, row-major 18-tuple.

    wrist is truthy for the wrist point, falsy for the elbow point.
    Columns 5..6 (and 3..6 for the elbow) are structurally zero.
    """
    s1 = sin(q[0]); c1 = cos(q[0])
    s2 = sin(q[1]); c2 = cos(q[1])
    s3 = sin(q[2]); c3 = cos(q[2])
    s4 = sin(q[3]); c4 = cos(q[3])

    # d(u)/dq1, d(u)/dq2 (u is independent of q3..q6)
    du1x = 0.0
    du1y = c1 * c2
    du1z = s1 * c2
    du2x = c2
    du2y = -s1 * s2
    du2z = c1 * s2

    if not wrist:
        return (
            lu * du1x, lu * du2x, 0.0, 0.0, 0.0, 0.0,
            lu * du1y, lu * du2y, 0.0, 0.0, 0.0, 0.0,
            lu * du1z, lu * du2z, 0.0, 0.0, 0.0, 0.0,
        )

    # d(v)/dq1..dq4
    dv1x = 0.0
    dv1y = -s1 * s3 * s4 - c1 * s2 * c3 * s4 + c1 * c2 * c4
    dv1z = c1 * s3 * s4 - s1 * s2 * c3 * s4 + s1 * c2 * c4
    dv2x = -s2 * c3 * s4 + c2 * c4
    dv2y = -s1 * c2 * c3 * s4 - s1 * s2 * c4
    dv2z = c1 * c2 * c3 * s4 + c1 * s2 * c4
    dv3x = -c2 * s3 * s4
    dv3y = c1 * c3 * s4 + s1 * s2 * s3 * s4
    dv3z = s1 * c3 * s4 - c1 * s2 * s3 * s4
    dv4x = c2 * c3 * c4 - s2 * s4
    dv4y = c1 * s3 * c4 - s1 * s2 * c3 * c4 - s1 * c2 * s4
    dv4z = s1 * s3 * c4 + c1 * s2 * c3 * c4 + c1 * c2 * s4

    return (
        lu * du1x + lf * dv1x, lu * du2x + lf * dv2x, lf * dv3x, lf * dv4x, 0.0, 0.0,
        lu * du1y + lf * dv1y, lu * du2y + lf * dv2y, lf * dv3y, lf * dv4y, 0.0, 0.0,
        lu * du1z + lf * dv1z, lu * du2z + lf * dv2z, lf * dv3z, lf * dv4z, 0.0, 0.0,
    )


def gravity_torques(q, lu, lf, mu, mf, com_r, g):
    """Joint torques -dU/dq for two point-mass segments, 6-tuple (N*m)."""
    s1 = sin(q[0]); c1 = cos(q[0])
    s2 = sin(q[1]); c2 = cos(q[1])
    s3 = sin(q[2]); c3 = cos(q[2])
    s4 = sin(q[3]); c4 = cos(q[3])

    # U = g*(mu*(oz + com_r*lu*uz) + mf*(oz + lu*uz + com_r*lf*vz))
    a = g * (mu * com_r + mf) * lu       # weight on d(uz)/dq
    b = g * mf * com_r * lf              # weight on d(vz)/dq

    duz1 = s1 * c2
    duz2 = c1 * s2
    dvz1 = c1 * s3 * s4 - s1 * s2 * c3 * s4 + s1 * c2 * c4
    dvz2 = c1 * c2 * c3 * s4 + c1 * s2 * c4
    dvz3 = s1 * c3 * s4 - c1 * s2 * s3 * s4
    dvz4 = s1 * s3 * c4 + c1 * s2 * c3 * c4 + c1 * c2 * s4

    return (
        -(a * duz1 + b * dvz1),
        -(a * duz2 + b * dvz2),
        -(b * dvz3),
        -(b * dvz4),
        0.0,
        0.0,
    )


def coupling_forces(xm, ym, zm, vxm, vym, vzm, xa, ya, za, vxa, vya, vza,
                    ps, bs, pa, ba):
    """Spring-damper pair on the two sides of an engaged virtual grab.

    Inputs are the mapped leader point (position/velocity, follower frame)
    and the engaged graspable point. Returns (fsx, fsy, fsz, fax, fay, faz):
    the leader-side force still expressed in the follower frame, and the
    follower-side force.
    """
    ex = xm - xa
    ey = ym - ya
    ez = zm - za
    evx = vxm - vxa
    evy = vym - vya
    evz = vzm - vza
    return (
        -ps * ex - bs * evx,
        -ps * ey - bs * evy,
        -ps * ez - bs * evz,
        pa * ex + ba * evx,
        pa * ey + ba * evy,
        pa * ez + ba * evz,
    )


def jac_t_force(j, fx, fy, fz, tau_max):
    """tau = J^T f with per-joint saturation at +-tau_max. j: 18-tuple."""
    out = []
    for col in range(6):
        t = j[col] * fx + j[6 + col] * fy + j[12 + col] * fz
        if t > tau_max:
            t = tau_max
        elif t < -tau_max:
            t = -tau_max
        out.append(t)
    return tuple(out)


def plant_advance(q, tau, damping, dt, lo, hi):
    """Damping-only admittance step with hard joint limits.

    qdot_i = tau_i / damping_i; q_i integrates over dt and clamps to
    [lo_i, hi_i] with the velocity zeroed on any saturated axis.
    Returns (q1..q6, qdot1..qdot6) as a 12-tuple.
    """
    qn = []
    vn = []
    for i in range(6):
        v = tau[i] / damping[i]
        x = q[i] + v * dt
        if x < lo[i]:
            x = lo[i]
            v = 0.0
        elif x > hi[i]:
            x = hi[i]
            v = 0.0
        qn.append(x)
        vn.append(v)
    return (qn[0], qn[1], qn[2], qn[3], qn[4], qn[5],
            vn[0], vn[1], vn[2], vn[3], vn[4], vn[5])
