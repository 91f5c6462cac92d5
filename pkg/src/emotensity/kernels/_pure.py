"""Pure-numpy LSTM cell sweeps.

Reference implementation of the sequential recurrence; semantics must match
emotensity.kernels._native exactly. Everything batched or parallelizable
(input projections, weight-gradient reductions) lives outside the kernels,
so each sweep only walks one sequence step by step.

Gate layout in the stacked 4H axis: input, forget, cell candidate, output.
"""

import numpy as np
from scipy.special import expit


def cell_sweep_forward(zx, wh):
    """Run an LSTM over one sequence, starting from zero state.

    zx: (n, 4H) input-to-hidden pre-activations (x @ wx.T + b, precomputed)
    wh: (4H, H) hidden-to-hidden weights

    Returns (h, i, f, g, o, c), each (n, H).
    """
    n = zx.shape[0]
    hid = wh.shape[1]
    h = np.empty((n, hid))
    i = np.empty((n, hid))
    f = np.empty((n, hid))
    g = np.empty((n, hid))
    o = np.empty((n, hid))
    c = np.empty((n, hid))
    h_prev = np.zeros(hid)
    c_prev = np.zeros(hid)
    for t in range(n):
        z = zx[t] + wh @ h_prev
        i[t] = expit(z[:hid])
        f[t] = expit(z[hid:2 * hid])
        g[t] = np.tanh(z[2 * hid:3 * hid])
        o[t] = expit(z[3 * hid:])
        c[t] = f[t] * c_prev + i[t] * g[t]
        h[t] = o[t] * np.tanh(c[t])
        h_prev = h[t]
        c_prev = c[t]
    return h, i, f, g, o, c


def cell_sweep_backward(wh, i, f, g, o, c, dh_out):
    """Backpropagate through one cell_sweep_forward call.

    dh_out: (n, H) gradient w.r.t. each emitted hidden state (external
    contributions only; the recurrent path is handled here).

    Returns dz, (n, 4H): gradient w.r.t. the pre-activations z_t. Weight and
    input gradients are cheap matrix products of dz and are left to the
    caller so both backends share that code.
    """
    n, hid = dh_out.shape
    dz = np.empty((n, 4 * hid))
    dh_rec = np.zeros(hid)
    dc = np.zeros(hid)
    for t in range(n - 1, -1, -1):
        dh = dh_out[t] + dh_rec
        tau = np.tanh(c[t])
        do = dh * tau
        dct = dc + dh * o[t] * (1.0 - tau * tau)
        c_prev = c[t - 1] if t > 0 else 0.0
        df = dct * c_prev
        di = dct * g[t]
        dg = dct * i[t]
        dc = dct * f[t]
        dz[t, :hid] = di * i[t] * (1.0 - i[t])
        dz[t, hid:2 * hid] = df * f[t] * (1.0 - f[t])
        dz[t, 2 * hid:3 * hid] = dg * (1.0 - g[t] * g[t])
        dz[t, 3 * hid:] = do * o[t] * (1.0 - o[t])
        dh_rec = wh.T @ dz[t]
    return dz
