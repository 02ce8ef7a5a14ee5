"""Pure-Python counterpart of the compiled stepper (scipy DOP853)."""

import numpy as np
from scipy.integrate import solve_ivp


def integrate(d1, d2, p12, p21, adj, coef, lmin, dd1, dd2, nodes, rtol, atol,
              with_sigma, A=None, B=None, C=None, E3=None, E5=None, max_steps=None):
    coef = np.asarray(coef, dtype=complex)
    ls = lmin + np.arange(coef.size)
    nodes = np.asarray(nodes, dtype=float)

    def f(t, y):
        c = np.dot(coef, np.exp(1j * ls * t))
        g1, g2 = (np.conj(c), c) if adj else (c, np.conj(c))
        m12, m21 = p12 * g1, p21 * g2
        out = np.empty(8, dtype=complex)
        out[0] = d1 * y[0] + m12 * y[2]
        out[1] = d1 * y[1] + m12 * y[3]
        out[2] = m21 * y[0] + d2 * y[2]
        out[3] = m21 * y[1] + d2 * y[3]
        if with_sigma:
            out[4] = d1 * y[4] + m12 * y[6] + dd1 * y[0]
            out[5] = d1 * y[5] + m12 * y[7] + dd1 * y[1]
            out[6] = m21 * y[4] + d2 * y[6] + dd2 * y[2]
            out[7] = m21 * y[5] + d2 * y[7] + dd2 * y[3]
        else:
            out[4:] = 0
        return out

    y0 = np.zeros(8, dtype=complex)
    y0[0] = y0[3] = 1
    if nodes.size < 2:
        return y0[None, :].copy(), 0, 0
    sol = solve_ivp(f, (nodes[0], nodes[-1]), y0, method="DOP853", t_eval=nodes,
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise FloatingPointError(sol.message)
    return sol.y.T.copy(), sol.nfev // 12, 0
