"""Hot numeric kernels: schedule evaluation, master-equation right-hand sides
and the Dormand-Prince 5(4) driver.

Everything here is written in a subset of numpy that numba compiles. With
``STARE_DISABLE_JIT=1`` the very same functions run uncompiled.

State vectors are real: for a ``n x n`` density matrix the first ``n*n``
entries hold the real parts (row-major) and the last ``n*n`` the imaginary
parts.
"""

import numpy as np

from ._jit import njit

# schedule kind codes
LINEAR = 0
ROLAND_CERF = 1
OPTIMAL_STARE = 2

# dephasing-rate profiles for the qubit generator
RATE_CONSTANT = 0
RATE_GAP_SQUARED = 1

# driver status codes
OK = 0
STEP_UNDERFLOW = 1
MAX_STEPS = 2

# length of the schedule parameter block: d_i, d_f, a, b, theta_i, theta_f
SCHED_LEN = 6


@njit
def schedule_eval(kind, tau, sp):
    """Return ``(q, dq/dtau, d2q/dtau2)`` for a schedule code and block ``sp``."""
    d_i = sp[0]
    d_f = sp[1]
    span_d = d_f - d_i
    if kind == LINEAR:
        return tau, 1.0, 0.0
    if kind == ROLAND_CERF:
        phi_i = np.arctan(d_i)
        span = np.arctan(d_f) - phi_i
        t = np.tan(tau * span + phi_i)
        sec2 = 1.0 + t * t
        q = (t - d_i) / span_d
        qd = span * sec2 / span_d
        qdd = 2.0 * span * span * t * sec2 / span_d
        return q, qd, qdd
    # optimal open-system schedule
    a = sp[2]
    b = sp[3]
    th_i = sp[4]
    span = sp[5] - th_i
    t = np.tan(tau * span + th_i)
    sec2 = 1.0 + t * t
    r = b * b - a * a * t * t
    s = np.sqrt(a * a + b * b)
    f0 = t / np.sqrt(r)
    f1 = b * b / r ** 1.5
    f2 = 3.0 * a * a * b * b * t / r ** 2.5
    q = (s * f0 - d_i) / span_d
    qd = s * f1 * span * sec2 / span_d
    qdd = s * span * span * sec2 * (f2 * sec2 + 2.0 * t * f1) / span_d
    return q, qd, qdd


@njit
def unpack(y, n):
    n2 = n * n
    return (y[:n2] + 1j * y[n2:]).reshape((n, n))


@njit
def pack(m, out):
    n2 = m.shape[0] * m.shape[1]
    flat = m.ravel()
    out[:n2] = flat.real
    out[n2:] = flat.imag
    return out


@njit
def qubit_rhs(tau, y, p):
    """Dimensionless qubit generator: von Neumann plus projector dephasing.

    ``p = [kind, d_i, d_f, a_s, b_s, theta_i, theta_f, a, b, profile]``.
    The schedule block (``a_s``, ``b_s``) shapes q_OS only; ``a`` and ``b``
    drive the dynamics. ``b = 0`` gives unitary evolution.
    """
    q, qd, qdd = schedule_eval(int(p[0]), tau, p[1:7])
    d = q * p[2] + (1.0 - q) * p[1]
    hz = 0.5 * p[7] * d
    hx = 0.5 * p[7]
    r00 = complex(y[0], y[4])
    r01 = complex(y[1], y[5])
    r10 = complex(y[2], y[6])
    r11 = complex(y[3], y[7])
    # -i [H, rho] with H = [[hz, hx], [hx, -hz]]
    m00 = -1j * hx * (r10 - r01)
    m01 = -1j * (2.0 * hz * r01 + hx * (r11 - r00))
    m10 = -1j * (-2.0 * hz * r10 + hx * (r00 - r11))
    m11 = -m00
    b = p[8]
    if b != 0.0:
        u = 1.0 + d * d
        rate = b * u if int(p[9]) == RATE_GAP_SQUARED else b
        # P+ rho P- + P- rho P+ == (rho - N rho N) / 2 with N = P+ - P-
        c = d / np.sqrt(u)
        sn = 1.0 / np.sqrt(u)
        cc = c * c
        ss = sn * sn
        cs = c * sn
        n00 = cc * r00 + cs * (r10 + r01) + ss * r11
        n01 = cs * (r00 - r11) + ss * r10 - cc * r01
        n10 = cs * (r00 - r11) - cc * r10 + ss * r01
        n11 = ss * r00 - cs * (r10 + r01) + cc * r11
        g = 0.5 * rate
        m00 -= g * (r00 - n00)
        m01 -= g * (r01 - n01)
        m10 -= g * (r10 - n10)
        m11 -= g * (r11 - n11)
    out = np.empty_like(y)
    out[0] = m00.real
    out[1] = m01.real
    out[2] = m10.real
    out[3] = m11.real
    out[4] = m00.imag
    out[5] = m01.imag
    out[6] = m10.imag
    out[7] = m11.imag
    return out


@njit
def composite_hamiltonian(t, p):
    """Qubit+auxiliary Hamiltonian in physical units, system-first ordering.

    ``p = [kind, d_i, d_f, a_s, b_s, theta_i, theta_f,
           g0, omega_a, kappa, nbar, x0, t_i, T]``.
    """
    kind = int(p[0])
    tau = (t - p[12]) / p[13]
    q, qd, qdd = schedule_eval(kind, tau, p[1:7])
    g0 = p[7]
    s = g0 * (q * p[2] + (1.0 - q) * p[1])
    hs = np.empty((2, 2), dtype=np.complex128)
    hs[0, 0] = 0.5 * s
    hs[0, 1] = 0.5 * g0
    hs[1, 0] = 0.5 * g0
    hs[1, 1] = -0.5 * s
    eye = np.eye(2, dtype=np.complex128)
    sz = np.zeros((2, 2), dtype=np.complex128)
    sz[0, 0] = 1.0
    sz[1, 1] = -1.0
    sx = np.zeros((2, 2), dtype=np.complex128)
    sx[0, 1] = 1.0
    sx[1, 0] = 1.0
    return (np.kron(hs, eye) + 0.5 * p[8] * np.kron(eye, sz)
            + p[11] * np.kron(hs, sx))


@njit
def composite_rhs(t, y, p):
    chi = unpack(y, 4)
    h = composite_hamiltonian(t, p)
    dchi = -1j * (h @ chi - chi @ h)
    kappa = p[9]
    if kappa != 0.0:
        nbar = p[10]
        eye = np.eye(2, dtype=np.complex128)
        sm = np.zeros((2, 2), dtype=np.complex128)
        sm[1, 0] = 1.0  # |down><up| with basis (up, down)
        o = np.kron(eye, sm)
        od = o.conj().T
        dchi += kappa * (nbar + 1.0) * _dissipator(o, od, chi)
        if nbar != 0.0:
            dchi += kappa * nbar * _dissipator(od, o, chi)
    return pack(dchi, np.empty_like(y))


@njit
def _dissipator(o, od, chi):
    ood = od @ o
    return o @ chi @ od - 0.5 * (ood @ chi + chi @ ood)


@njit
def zero_rhs(t, y, p):
    return np.zeros_like(y)


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200,
               22 / 525, -1 / 40])
# continuous extension (Shampine), rows = stages, cols = theta^1..theta^4
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423,
     69997945 / 29380423],
])


@njit
def _error_norm(err, y, ynew, rtol, atol):
    tot = 0.0
    for i in range(y.shape[0]):
        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        e = err[i] / sc
        tot += e * e
    return np.sqrt(tot / y.shape[0])


@njit
def _rms(v):
    # scaled so tiny atol values cannot overflow the squares
    m = np.max(np.abs(v))
    if m == 0.0 or not np.isfinite(m):
        return m
    return m * np.sqrt(np.mean((v / m) ** 2))


@njit
def _initial_step(rhs, t0, y0, f0, p, direction, rtol, atol):
    sc = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / sc)
    d1 = _rms(f0 / sc)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    if not h0 > 0.0:
        h0 = 1e-6
    y1 = y0 + h0 * direction * f0
    f1 = rhs(t0 + h0 * direction, y1, p)
    d2 = _rms((f1 - f0) / sc) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    h = min(100.0 * h0, h1)
    if not (h > 0.0 and np.isfinite(h)):
        h = 1e-6
    return h


@njit
def dopri5(rhs, t0, t1, y0, p, t_out, rtol, atol, h_init, h_max, max_steps):
    """Integrate ``dy/dt = rhs(t, y, p)`` from ``t0`` to ``t1``.

    ``t_out`` must be sorted inside ``[t0, t1]``. Returns
    ``(y_out, status, t_last, y_last, n_accepted, n_rejected)``; on failure
    ``y_out`` rows past ``t_last`` are left as NaN.
    """
    n = y0.shape[0]
    n_out = t_out.shape[0]
    y_out = np.full((n_out, n), np.nan)
    span = t1 - t0
    k = np.zeros((7, n))
    y = y0.copy()
    t = t0
    j = 0
    while j < n_out and t_out[j] <= t0:
        y_out[j] = y0
        j += 1
    k[0] = rhs(t, y, p)
    if h_max <= 0.0:
        h_max = span
    h = h_init if h_init > 0.0 else _initial_step(rhs, t, y, k[0], p, 1.0,
                                                  rtol, atol)
    h = min(h, h_max)
    facold = 1e-4
    beta = 0.04
    expo1 = 0.2 - 0.75 * beta
    safe = 0.9
    n_acc = 0
    n_rej = 0
    last_rejected = False
    status = OK
    ynew = np.empty(n)
    ys = np.empty(n)
    err = np.empty(n)
    while t < t1:
        if n_acc + n_rej >= max_steps:
            status = MAX_STEPS
            break
        if h < 16.0 * 2.220446049250313e-16 * max(abs(t), abs(span)):
            status = STEP_UNDERFLOW
            break
        if t + h > t1:
            h = t1 - t
        for s in range(1, 6):
            for i in range(n):
                acc = y[i]
                for r in range(s):
                    acc += h * _A[s, r] * k[r, i]
                ys[i] = acc
            k[s] = rhs(t + _C[s] * h, ys, p)
        # stage 7 is evaluated at the 5th-order solution (FSAL)
        for i in range(n):
            acc = y[i]
            for r in range(6):
                acc += h * _A[6, r] * k[r, i]
            ynew[i] = acc
        k[6] = rhs(t + h, ynew, p)
        for i in range(n):
            acc = 0.0
            for r in range(7):
                acc += _E[r] * k[r, i]
            err[i] = h * acc
        en = _error_norm(err, y, ynew, rtol, atol)
        if not np.isfinite(en):
            # overflowed error estimate: reject and shrink as hard as allowed
            en = np.inf
        fac11 = en ** expo1 if en > 0.0 else 0.0
        if en <= 1.0:
            fac = fac11 / facold ** beta
            fac = max(0.1, min(5.0, fac / safe))
            hnew = h / fac if fac > 0.0 else 10.0 * h
            t_new = t + h if t + h < t1 else t1
            while j < n_out and t_out[j] <= t_new:
                theta = (t_out[j] - t) / h
                th = np.array([theta, theta ** 2, theta ** 3, theta ** 4])
                coef = _P @ th
                yi = y.copy()
                for r in range(7):
                    yi += h * coef[r] * k[r]
                y_out[j] = yi
                j += 1
            facold = max(en, 1e-4)
            t = t_new
            y[:] = ynew
            k[0] = k[6]
            n_acc += 1
            if last_rejected:
                hnew = min(hnew, h)
            last_rejected = False
            h = min(hnew, h_max)
        else:
            h = h / min(5.0, fac11 / safe)
            n_rej += 1
            last_rejected = True
    return y_out, status, t, y, n_acc, n_rej
