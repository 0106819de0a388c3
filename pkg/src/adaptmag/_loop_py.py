"""Pure-Python protocol inner loop.

Fallback twin of the compiled kernel in ``_loop_cy.pyx``. Both run the same
algorithm on the same "lattice" state: during stage n every populated
harmonic index is a multiple of the current ``t_units``, so the posterior is
a short array with slot ``j`` holding harmonic ``j * t_units``. A Bayesian
update shifts by one lattice slot, and halving the sensing time re-indexes
the array by interleaving zeros.

The arithmetic is kept in lockstep with the C loop: separate real/imag
float64 arrays (numpy's complex dtype may fuse multiply-adds on SIMD
hardware), same libm calls, same operation order. The two backends produce
bit-identical traces for the same inputs, which the test suite enforces.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateUpdateError
from .util import INV_TAU, TAU, quantize_phase, wrap_angle

KIND_LIMITED = 0
KIND_NONADAPTIVE = 1
KIND_OPTIMIZED = 2


def run_steps(
    kind: int,
    stage: np.ndarray,
    rep: np.ndarray,
    t_units: np.ndarray,
    stage_reps: np.ndarray,
    damp: np.ndarray,
    caps: np.ndarray,
    a0: float,
    q4: float,
    phi_true: float,
    uniforms: np.ndarray,
    inc0: np.ndarray,
    inc1: np.ndarray,
    phase_offset: float,
    quantize: bool,
):
    """Execute one estimation sequence; see ``protocol.run_protocol``.

    Returns (outcomes int8[R], applied phases float64[R], final lattice
    coefficients complex128[...], degenerate-phase count).
    """
    n_ramseys = len(uniforms)
    outcomes = np.zeros(n_ramseys, dtype=np.int8)
    thetas = np.zeros(n_ramseys, dtype=np.float64)
    vis2 = 2.0 * q4  # (f0 + f1 - 1) / 2

    cr = np.array([INV_TAU])
    ci = np.array([0.0])
    top = 0  # highest populated lattice index
    lattice = int(t_units[0])
    theta_ctrl = 0.0
    prev_mu = 0
    degenerate = 0

    for step in range(n_ramseys):
        t = int(t_units[step])
        m = int(rep[step])

        if t != lattice:
            ratio = lattice // t
            grown_r = np.zeros(top * ratio + 1)
            grown_i = np.zeros(top * ratio + 1)
            grown_r[::ratio] = cr
            grown_i[::ratio] = ci
            cr, ci = grown_r, grown_i
            top *= ratio
            lattice = t

        if kind == KIND_NONADAPTIVE:
            m_n = int(stage_reps[int(stage[step]) - 1])
            theta = wrap_angle((m - 1) * math.pi / m_n + phase_offset)
        else:
            if kind == KIND_OPTIMIZED or m == 1:
                c2r = cr[2] if top >= 2 else 0.0
                c2i = ci[2] if top >= 2 else 0.0
                if c2r == 0.0 and c2i == 0.0:
                    theta_ctrl = 0.0
                    degenerate += 1
                else:
                    theta_ctrl = 0.5 * math.atan2(c2i, c2r)
            theta = theta_ctrl
            if kind == KIND_OPTIMIZED:
                incr = inc0[step] if prev_mu == 0 else inc1[step]
                theta = wrap_angle(theta + incr)
        if quantize:
            theta = quantize_phase(theta)
        thetas[step] = theta

        p0 = a0 + vis2 * damp[step] * math.cos(t * phi_true + theta)
        mu = 0 if uniforms[step] < p0 else 1
        outcomes[step] = mu
        prev_mu = mu

        chi = theta + math.pi if mu else theta
        b = damp[step] * q4
        wr = b * math.cos(chi)
        wi = b * math.sin(chi)
        a_mu = a0 if mu == 0 else 1.0 - a0

        new_top = min(top + 1, int(caps[step]) // t)
        size = new_top + 1
        avail = min(size, top + 1)
        base_r = np.zeros(size)
        base_i = np.zeros(size)
        base_r[:avail] = cr[:avail]
        base_i[:avail] = ci[:avail]
        up_r = np.zeros(size)  # harmonic j-1, mirrored (conjugated) at j=0
        up_i = np.zeros(size)
        up_r[1:] = cr[: size - 1]
        up_i[1:] = ci[: size - 1]
        if top >= 1:
            up_r[0] = cr[1]
            up_i[0] = -ci[1]
        dn_r = np.zeros(size)  # harmonic j+1
        dn_i = np.zeros(size)
        hi = min(size, top)
        dn_r[:hi] = cr[1 : hi + 1]
        dn_i[:hi] = ci[1 : hi + 1]

        # out = a_mu*c + w*up + conj(w)*dn, with the same rounding sequence
        # as the compiled twin: each line below is one rounding pass.
        out_r = a_mu * base_r
        out_i = a_mu * base_i
        tmp = wr * up_r
        tmp -= wi * up_i
        out_r += tmp
        tmp = wr * up_i
        tmp += wi * up_r
        out_i += tmp
        tmp = wr * dn_r
        tmp += wi * dn_i
        out_r += tmp
        tmp = wr * dn_i
        tmp -= wi * dn_r
        out_i += tmp

        mass = out_r[0]
        if not (mass > 0.0 and math.isfinite(mass)):
            raise DegenerateUpdateError(
                f"posterior mass vanished at step {step} (outcome {mu}, t_units {t})"
            )
        norm = TAU * mass
        out_r /= norm
        out_i /= norm
        out_r[0] = INV_TAU
        out_i[0] = 0.0
        cr, ci = out_r, out_i
        top = new_top

    final = np.empty(top + 1, dtype=np.complex128)
    final.real = cr[: top + 1]
    final.imag = ci[: top + 1]
    return outcomes, thetas, final, degenerate
