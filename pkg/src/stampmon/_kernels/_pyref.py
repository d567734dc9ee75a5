"""Pure NumPy/Python reference implementations of the hot kernels.

These are the import-time fallback when the compiled extension is absent
(or when STAMPMON_FORCE_PYREF=1). Both lanes follow the same operation
order so results agree to the last few ulps; tests pin the parity.
"""
from __future__ import annotations

import numpy as np

BACKEND = "pyref"


def sosfilt(sos: np.ndarray, x: np.ndarray, zi: np.ndarray) -> np.ndarray:
    """Run a cascade of biquad sections over x (direct form II transposed).

    sos rows are (b0, b1, b2, 1, a1, a2); zi is the (n_sections, 2) initial
    state, consumed (not mutated). Sequential per-sample recursion: this is
    the slow lane, the compiled twin does the same arithmetic.
    """
    y = np.asarray(x, dtype=np.float64).copy()
    state = np.asarray(zi, dtype=np.float64).copy()
    n = y.shape[0]
    for s in range(sos.shape[0]):
        b0, b1, b2, _, a1, a2 = (float(v) for v in sos[s])
        s0 = float(state[s, 0])
        s1 = float(state[s, 1])
        for t in range(n):
            xn = y[t]
            yn = b0 * xn + s0
            s0 = b1 * xn - a1 * yn + s1
            s1 = b2 * xn - a2 * yn
            y[t] = yn
    return y


def smo_solve(
    K: np.ndarray,
    alpha: np.ndarray,
    grad: np.ndarray,
    C: float,
    tol: float,
    max_iter: int,
) -> tuple[int, float]:
    """Most-violating-pair SMO loop for min 1/2 a'Ka, 0<=a<=C, sum(a)=1.

    alpha and grad (= K @ alpha) are updated in place. Returns the number
    of pair updates performed and the final KKT violation.
    """
    n = alpha.shape[0]
    violation = 0.0
    for it in range(max_iter):
        up = alpha < C
        low = alpha > 0.0
        if not up.any() or not low.any():
            return it, 0.0
        gi = np.where(up, grad, np.inf)
        gj = np.where(low, grad, -np.inf)
        i = int(np.argmin(gi))
        j = int(np.argmax(gj))
        violation = float(grad[j] - grad[i])
        if violation < tol:
            return it, violation
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta <= 0.0:
            eta = 1e-12
        delta = violation / eta
        room_i = C - alpha[i]
        room_j = alpha[j]
        if delta > room_i:
            delta = room_i
        if delta > room_j:
            delta = room_j
        # Clipped coordinates land exactly on their bound so the active-set
        # masks above stay exact.
        if delta == room_i:
            alpha[i] = C
        else:
            alpha[i] += delta
        if delta == room_j:
            alpha[j] = 0.0
        else:
            alpha[j] -= delta
        grad += delta * (K[i] - K[j])
    return max_iter, violation
