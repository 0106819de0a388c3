# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled protocol inner loop.

Twin of ``_loop_py.run_steps`` with identical arithmetic: same libm calls,
same operation order, scalar real/imag updates instead of numpy vector ops.
Traces are bit-identical across the two backends for the same inputs.
"""

from libc.math cimport M_PI, atan2, cos, sin, floor, fmod, isfinite

import numpy as np

from .errors import DegenerateUpdateError

cdef double TAU = 2.0 * M_PI
cdef double INV_TAU = 1.0 / (2.0 * M_PI)
cdef double PHASE_STEP = (2.0 * M_PI) / 256.0

cdef int KIND_LIMITED = 0
cdef int KIND_NONADAPTIVE = 1
cdef int KIND_OPTIMIZED = 2


cdef inline double _wrap(double x) noexcept nogil:
    # keep in lockstep with util.wrap_angle
    cdef double y = fmod(x + M_PI, TAU)
    if y < 0.0:
        y += TAU
    return y - M_PI


cdef inline double _quantize(double x) noexcept nogil:
    # keep in lockstep with util.quantize_phase
    cdef double q = floor(x / PHASE_STEP + 0.5) * PHASE_STEP
    if q >= M_PI:
        q -= TAU
    return q


def run_steps(
    int kind,
    long long[::1] stage,
    long long[::1] rep,
    long long[::1] t_units,
    long long[::1] stage_reps,
    double[::1] damp,
    long long[::1] caps,
    double a0,
    double q4,
    double phi_true,
    double[::1] uniforms,
    double[::1] inc0,
    double[::1] inc1,
    double phase_offset,
    bint quantize,
):
    """See ``_loop_py.run_steps``."""
    cdef Py_ssize_t n_ramseys = uniforms.shape[0]
    cdef Py_ssize_t step, j, avail
    cdef long long t, m, m_n, top, new_top, lattice, ratio, cap_l, max_top
    cdef double vis2 = 2.0 * q4
    cdef double theta_ctrl = 0.0
    cdef double theta, p0, chi, b, wr, wi, a_mu, mass, norm, incr
    cdef double base_r, base_i, up_r, up_i, dn_r, dn_i, o_r, o_i, c2r, c2i
    cdef int mu, prev_mu = 0, degenerate = 0

    outcomes_arr = np.zeros(n_ramseys, dtype=np.int8)
    thetas_arr = np.zeros(n_ramseys, dtype=np.float64)
    cdef signed char[::1] outcomes = outcomes_arr
    cdef double[::1] thetas = thetas_arr

    max_top = 2
    for step in range(n_ramseys):
        cap_l = caps[step] // t_units[step]
        if cap_l > max_top:
            max_top = cap_l
    # expansion at a stage boundary can transiently double the top index
    cdef Py_ssize_t capacity = 2 * max_top + 3

    buf_a = np.zeros(2 * capacity, dtype=np.float64)
    buf_b = np.zeros(2 * capacity, dtype=np.float64)
    cdef double[::1] va = buf_a
    cdef double[::1] vb = buf_b
    cdef double[::1] cur = va   # real parts at [0:capacity], imag at [capacity:]
    cdef double[::1] nxt = vb
    cdef double[::1] tmp

    cur[0] = INV_TAU
    cur[capacity] = 0.0
    top = 0
    lattice = t_units[0]

    for step in range(n_ramseys):
        t = t_units[step]
        m = rep[step]

        if t != lattice:
            ratio = lattice // t
            for j in range(top, -1, -1):
                nxt[j * ratio] = cur[j]
                nxt[capacity + j * ratio] = cur[capacity + j]
            top = top * ratio
            for j in range(top + 1):
                if j % ratio != 0:
                    nxt[j] = 0.0
                    nxt[capacity + j] = 0.0
            tmp = cur
            cur = nxt
            nxt = tmp
            lattice = t

        if kind == KIND_NONADAPTIVE:
            m_n = stage_reps[stage[step] - 1]
            theta = _wrap((m - 1) * M_PI / m_n + phase_offset)
        else:
            if kind == KIND_OPTIMIZED or m == 1:
                if top >= 2:
                    c2r = cur[2]
                    c2i = cur[capacity + 2]
                else:
                    c2r = 0.0
                    c2i = 0.0
                if c2r == 0.0 and c2i == 0.0:
                    theta_ctrl = 0.0
                    degenerate += 1
                else:
                    theta_ctrl = 0.5 * atan2(c2i, c2r)
            theta = theta_ctrl
            if kind == KIND_OPTIMIZED:
                incr = inc0[step] if prev_mu == 0 else inc1[step]
                theta = _wrap(theta + incr)
        if quantize:
            theta = _quantize(theta)
        thetas[step] = theta

        p0 = a0 + vis2 * damp[step] * cos(t * phi_true + theta)
        mu = 0 if uniforms[step] < p0 else 1
        outcomes[step] = <signed char> mu
        prev_mu = mu

        chi = theta + M_PI if mu else theta
        b = damp[step] * q4
        wr = b * cos(chi)
        wi = b * sin(chi)
        a_mu = a0 if mu == 0 else 1.0 - a0

        new_top = top + 1
        cap_l = caps[step] // t
        if new_top > cap_l:
            new_top = cap_l

        for j in range(new_top + 1):
            if j <= top:
                base_r = cur[j]
                base_i = cur[capacity + j]
            else:
                base_r = 0.0
                base_i = 0.0
            if j == 0:
                if top >= 1:
                    up_r = cur[1]
                    up_i = -cur[capacity + 1]
                else:
                    up_r = 0.0
                    up_i = 0.0
            else:
                up_r = cur[j - 1]
                up_i = cur[capacity + j - 1]
            if j + 1 <= top:
                dn_r = cur[j + 1]
                dn_i = cur[capacity + j + 1]
            else:
                dn_r = 0.0
                dn_i = 0.0

            o_r = a_mu * base_r
            o_i = a_mu * base_i
            o_r += wr * up_r - wi * up_i
            o_i += wr * up_i + wi * up_r
            o_r += wr * dn_r + wi * dn_i
            o_i += wr * dn_i - wi * dn_r
            nxt[j] = o_r
            nxt[capacity + j] = o_i

        mass = nxt[0]
        if not (mass > 0.0 and isfinite(mass)):
            raise DegenerateUpdateError(
                f"posterior mass vanished at step {step} (outcome {mu}, t_units {t})"
            )
        norm = TAU * mass
        for j in range(new_top + 1):
            nxt[j] /= norm
            nxt[capacity + j] /= norm
        nxt[0] = INV_TAU
        nxt[capacity] = 0.0

        tmp = cur
        cur = nxt
        nxt = tmp
        top = new_top

    final = np.empty(top + 1, dtype=np.complex128)
    for j in range(top + 1):
        final[j] = complex(cur[j], cur[capacity + j])
    return outcomes_arr, thetas_arr, final, degenerate
