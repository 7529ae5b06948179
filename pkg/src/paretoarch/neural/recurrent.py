"""Fused sequence ops with hand-written backpropagation through time.

Looping over time steps with one autograd node per gate would be slow in
pure numpy, so each recurrence is a single graph node whose backward pass
runs the reverse-time loop directly.
"""

from __future__ import annotations

import numpy as np

from .autograd import Tensor, sigmoid


def gru_sequence(x: Tensor, w_ih: Tensor, w_hh: Tensor, b_ih: Tensor, b_hh: Tensor) -> Tensor:
    """GRU over ``x`` of shape (batch, time, h); returns all hidden states.

    Gate layout along the 3h axis is (reset, update, candidate), with
    ``w_ih`` and ``w_hh`` shaped (3h, h) and h_0 = 0.
    """
    batch, steps, _ = x.shape
    h = w_hh.shape[1]
    gi = x.data @ w_ih.data.T + b_ih.data
    hs = np.zeros((batch, steps + 1, h))
    rs = np.empty((batch, steps, h))
    zs = np.empty((batch, steps, h))
    ns = np.empty((batch, steps, h))
    ghn = np.empty((batch, steps, h))
    w_hh_t = w_hh.data.T
    for t in range(steps):
        gh = hs[:, t] @ w_hh_t + b_hh.data
        r = sigmoid(gi[:, t, :h] + gh[:, :h])
        z = sigmoid(gi[:, t, h : 2 * h] + gh[:, h : 2 * h])
        n = np.tanh(gi[:, t, 2 * h :] + r * gh[:, 2 * h :])
        hs[:, t + 1] = (1.0 - z) * n + z * hs[:, t]
        rs[:, t], zs[:, t], ns[:, t], ghn[:, t] = r, z, n, gh[:, 2 * h :]
    out = Tensor(hs[:, 1:], _parents=(x, w_ih, w_hh, b_ih, b_hh), _op="gru")

    def _backward(g):
        dgi = np.empty((batch, steps, 3 * h))
        dgh_all = np.empty((batch, steps, 3 * h))
        dh_next = np.zeros((batch, h))
        for t in reversed(range(steps)):
            r, z, n, hprev = rs[:, t], zs[:, t], ns[:, t], hs[:, t]
            dh = g[:, t] + dh_next
            dn_pre = dh * (1.0 - z) * (1.0 - n**2)
            dz_pre = dh * (hprev - n) * z * (1.0 - z)
            dr_pre = dn_pre * ghn[:, t] * r * (1.0 - r)
            dgi[:, t, :h] = dr_pre
            dgi[:, t, h : 2 * h] = dz_pre
            dgi[:, t, 2 * h :] = dn_pre
            dgh = dgh_all[:, t]
            dgh[:, :h] = dr_pre
            dgh[:, h : 2 * h] = dz_pre
            dgh[:, 2 * h :] = dn_pre * r
            dh_next = dh * z + dgh @ w_hh.data
        if x.requires_grad:
            x._accumulate(dgi @ w_ih.data)
        if w_ih.requires_grad:
            w_ih._accumulate(np.einsum("btg,bti->gi", dgi, x.data))
        if b_ih.requires_grad:
            b_ih._accumulate(dgi.sum(axis=(0, 1)))
        if w_hh.requires_grad:
            w_hh._accumulate(np.einsum("btg,bti->gi", dgh_all, hs[:, :-1]))
        if b_hh.requires_grad:
            b_hh._accumulate(dgh_all.sum(axis=(0, 1)))

    out._backward = _backward
    return out


def lstm_sequence(x: Tensor, w_ih: Tensor, w_hh: Tensor, b_ih: Tensor, b_hh: Tensor) -> Tensor:
    """LSTM over (batch, time, h); gate order (input, forget, cell, output)."""
    batch, steps, _ = x.shape
    h = w_hh.shape[1]
    gi = x.data @ w_ih.data.T + b_ih.data
    hs = np.zeros((batch, steps + 1, h))
    cs = np.zeros((batch, steps + 1, h))
    gates = np.empty((batch, steps, 4 * h))
    w_hh_t = w_hh.data.T
    for t in range(steps):
        pre = gi[:, t] + hs[:, t] @ w_hh_t + b_hh.data
        act = gates[:, t]
        act[:, : 2 * h] = sigmoid(pre[:, : 2 * h])
        act[:, 2 * h : 3 * h] = np.tanh(pre[:, 2 * h : 3 * h])
        act[:, 3 * h :] = sigmoid(pre[:, 3 * h :])
        i, f, c_in, o = act[:, :h], act[:, h : 2 * h], act[:, 2 * h : 3 * h], act[:, 3 * h :]
        cs[:, t + 1] = f * cs[:, t] + i * c_in
        hs[:, t + 1] = o * np.tanh(cs[:, t + 1])
    out = Tensor(hs[:, 1:], _parents=(x, w_ih, w_hh, b_ih, b_hh), _op="lstm")

    def _backward(g):
        dpre_all = np.empty((batch, steps, 4 * h))
        dh_next = np.zeros((batch, h))
        dc_next = np.zeros((batch, h))
        for t in reversed(range(steps)):
            act = gates[:, t]
            i, f, c_in, o = act[:, :h], act[:, h : 2 * h], act[:, 2 * h : 3 * h], act[:, 3 * h :]
            tc = np.tanh(cs[:, t + 1])
            dh = g[:, t] + dh_next
            dc = dc_next + dh * o * (1.0 - tc**2)
            dpre = dpre_all[:, t]
            dpre[:, :h] = dc * c_in * i * (1.0 - i)
            dpre[:, h : 2 * h] = dc * cs[:, t] * f * (1.0 - f)
            dpre[:, 2 * h : 3 * h] = dc * i * (1.0 - c_in**2)
            dpre[:, 3 * h :] = dh * tc * o * (1.0 - o)
            dc_next = dc * f
            dh_next = dpre @ w_hh.data
        if x.requires_grad:
            x._accumulate(dpre_all @ w_ih.data)
        if w_ih.requires_grad:
            w_ih._accumulate(np.einsum("btg,bti->gi", dpre_all, x.data))
        if b_ih.requires_grad:
            b_ih._accumulate(dpre_all.sum(axis=(0, 1)))
        if w_hh.requires_grad:
            w_hh._accumulate(np.einsum("btg,bti->gi", dpre_all, hs[:, :-1]))
        if b_hh.requires_grad:
            b_hh._accumulate(dpre_all.sum(axis=(0, 1)))

    out._backward = _backward
    return out


def linear_recurrence(decay: Tensor, u: Tensor) -> Tensor:
    """s_t = decay * s_{t-1} + u_t along axis 1, with s_0 = 0.

    ``decay`` has shape (h,), ``u`` has shape (batch, time, h).
    """
    batch, steps, h = u.shape
    a = decay.data
    states = np.empty((batch, steps, h))
    s = np.zeros((batch, h))
    for t in range(steps):
        s = a * s + u.data[:, t]
        states[:, t] = s
    out = Tensor(states, _parents=(decay, u), _op="linear_recurrence")

    def _backward(g):
        du = np.empty_like(g)
        carry = np.zeros((batch, h))
        for t in reversed(range(steps)):
            carry = g[:, t] + a * carry
            du[:, t] = carry
        if u.requires_grad:
            u._accumulate(du)
        if decay.requires_grad:
            da = (du[:, 1:] * states[:, :-1]).sum(axis=(0, 1))
            decay._accumulate(da)

    out._backward = _backward
    return out
