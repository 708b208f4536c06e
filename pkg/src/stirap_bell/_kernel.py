"""Compiled master-equation stepper for block-structured node models.

A model is a direct sum of single-node 3x3 blocks (at given offsets) inside
an ``n``-dimensional space; indices outside every block carry no dynamics.
Each node contributes one dephasing channel ``L = |phi><phi|``, so the
double commutator is evaluated in O(n^2) from the vector ``phi``.

Node kinds:

SUPER  superadiabatic frame, H = diag(E_0, E_1, E_e), phi from the
       first-order transform
BARE   rotating frame with RWA, bare basis, phi = |e>
LAB    lab Hamiltonian written in the interaction picture of
       diag(0, eps, eps); exact (counter-rotating terms kept), phi = |e>
"""

from __future__ import annotations

from math import cos, sin, sqrt

import numpy as np
from numba import njit

SUPER = 0
BARE = 1
LAB = 2

_SQRT2 = sqrt(2.0)
_COS_FLOOR = 1e-15


@njit(cache=True)
def _fill_node(kind, t, p, off, H, phi):
    g = p[0]
    delta = p[1]
    a = p[2]
    eps = p[3]
    c = cos(a * t)
    s = sin(a * t)
    if abs(c) < _COS_FLOOR:
        c = 0.0
    env = delta * c * c
    if kind == SUPER:
        n2 = 4.0 * g * g + env * env
        n = sqrt(n2)
        x = 4.0 * _SQRT2 * g * a * delta * c * s / (n2 * n)
        H[off + 1, off + 1] = 0.5 * n
        H[off + 2, off + 2] = -0.5 * n
        phi[off] = complex(0.0, _SQRT2 * x)
        phi[off + 1] = 1.0 / _SQRT2
        phi[off + 2] = -1.0 / _SQRT2
    else:
        H[off + 1, off + 2] = g
        H[off + 2, off + 1] = g
        phi[off + 2] = 1.0
        if kind == BARE:
            H[off + 2, off] = 0.5 * env
            H[off, off + 2] = 0.5 * env
        else:
            # e^{iH0 t} [env cos(eps t)] e^{-iH0 t} on |e><0|
            ph = complex(cos(2.0 * eps * t), sin(2.0 * eps * t))
            v = 0.5 * env * (1.0 + ph)
            H[off + 2, off] = v
            H[off, off + 2] = v.conjugate()


@njit(cache=True)
def fill_generators(kinds, params, offsets, t, H, phis):
    """Write H(t) and one dephasing vector per node into preallocated arrays."""
    H[:, :] = 0.0
    phis[:, :] = 0.0
    for j in range(kinds.shape[0]):
        _fill_node(kinds[j], t, params[j], offsets[j], H, phis[j])


@njit(cache=True)
def _rhs(H, phis, gammas, r, out, u, v):
    n = r.shape[0]
    for i in range(n):
        for j in range(n):
            out[i, j] = 0.0
    # -i [H, r], skipping structural zeros of H
    for i in range(n):
        for k in range(n):
            hik = H[i, k]
            if hik != 0.0:
                mh = -1j * hik
                for j in range(n):
                    out[i, j] += mh * r[k, j]
                    out[j, k] -= mh * r[j, i]
    # -(gamma/2) [L, [L, r]] with L = phi phi^dag
    for m in range(phis.shape[0]):
        gm = gammas[m]
        if gm == 0.0:
            continue
        phi = phis[m]
        nrm = 0.0
        for i in range(n):
            nrm += phi[i].real * phi[i].real + phi[i].imag * phi[i].imag
        for i in range(n):
            acc_u = 0j
            acc_v = 0j
            for k in range(n):
                if phi[k] != 0.0:
                    acc_u += r[i, k] * phi[k]
                    acc_v += phi[k].conjugate() * r[k, i]
            u[i] = acc_u
            v[i] = acc_v
        q = 0j
        for k in range(n):
            q += phi[k].conjugate() * u[k]
        hg = 0.5 * gm
        for i in range(n):
            pi_ = phi[i]
            for j in range(n):
                pj = phi[j].conjugate()
                out[i, j] -= hg * (nrm * (pi_ * v[j] + u[i] * pj) - 2.0 * q * pi_ * pj)


@njit(cache=True)
def _rk4(kinds, params, offsets, gammas, r, t, h, k1, H, phis, k2, k3, k4, tmp, out, u, v):
    n = r.shape[0]
    fill_generators(kinds, params, offsets, t + 0.5 * h, H, phis)
    for i in range(n):
        for j in range(n):
            tmp[i, j] = r[i, j] + 0.5 * h * k1[i, j]
    _rhs(H, phis, gammas, tmp, k2, u, v)
    for i in range(n):
        for j in range(n):
            tmp[i, j] = r[i, j] + 0.5 * h * k2[i, j]
    _rhs(H, phis, gammas, tmp, k3, u, v)
    fill_generators(kinds, params, offsets, t + h, H, phis)
    for i in range(n):
        for j in range(n):
            tmp[i, j] = r[i, j] + h * k3[i, j]
    _rhs(H, phis, gammas, tmp, k4, u, v)
    for i in range(n):
        for j in range(n):
            out[i, j] = r[i, j] + h / 6.0 * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])


@njit(cache=True)
def integrate(kinds, params, offsets, gammas, rho0, record_times, base_step, tol, max_halvings):
    """RK4 with step doubling; returns states at ``record_times`` plus counters.

    ``record_times[0]`` must be 0. A step is accepted when the two-half-step
    and one-full-step results differ by at most ``tol`` (max-norm); the
    half-step result is kept. Steps shrink by halving down to
    ``base_step / 2**max_halvings`` and grow back by doubling up to
    ``base_step``.

    stats = [accepted, rejected, forced, max_err, min_h, max_herm_drift, max_trace_drift]
    """
    n = rho0.shape[0]
    m = kinds.shape[0]
    nrec = record_times.shape[0]
    states = np.zeros((nrec, n, n), dtype=np.complex128)
    H = np.zeros((n, n), dtype=np.complex128)
    phis = np.zeros((m, n), dtype=np.complex128)
    r = rho0.copy()
    k1 = np.empty_like(r)
    k1m = np.empty_like(r)
    k2 = np.empty_like(r)
    k3 = np.empty_like(r)
    k4 = np.empty_like(r)
    tmp = np.empty_like(r)
    full = np.empty_like(r)
    mid = np.empty_like(r)
    half = np.empty_like(r)
    u = np.empty(n, dtype=np.complex128)
    v = np.empty(n, dtype=np.complex128)

    stats = np.zeros(7)
    stats[4] = base_step
    h_min = base_step / 2.0**max_halvings
    h = base_step
    t = 0.0
    states[0] = r
    for rec in range(1, nrec):
        t_next = record_times[rec]
        while t < t_next:
            hs = h
            last = False
            if t + hs >= t_next - 1e-12 * t_next:
                hs = t_next - t
                last = True
            fill_generators(kinds, params, offsets, t, H, phis)
            _rhs(H, phis, gammas, r, k1, u, v)
            _rk4(kinds, params, offsets, gammas, r, t, hs, k1, H, phis, k2, k3, k4, tmp, full, u, v)
            _rk4(kinds, params, offsets, gammas, r, t, 0.5 * hs, k1, H, phis, k2, k3, k4, tmp, mid, u, v)
            _rhs(H, phis, gammas, mid, k1m, u, v)
            _rk4(kinds, params, offsets, gammas, mid, t + 0.5 * hs, 0.5 * hs, k1m, H, phis,
                 k2, k3, k4, tmp, half, u, v)
            err = 0.0
            for i in range(n):
                for j in range(n):
                    d = abs(half[i, j] - full[i, j])
                    if d > err:
                        err = d
            if err > tol and hs > h_min * (1.0 + 1e-9):
                h = 0.5 * hs
                stats[1] += 1
                continue
            if err > tol:
                stats[2] += 1
            herm = 0.0
            tr = 0.0
            for i in range(n):
                tr += half[i, i].real
                for j in range(i, n):
                    d = abs(half[i, j] - half[j, i].conjugate())
                    if d > herm:
                        herm = d
                    avg = 0.5 * (half[i, j] + half[j, i].conjugate())
                    r[i, j] = avg
                    r[j, i] = avg.conjugate()
            for i in range(n):
                r[i, i] = r[i, i].real
            if herm > stats[5]:
                stats[5] = herm
            if abs(tr - 1.0) > stats[6]:
                stats[6] = abs(tr - 1.0)
            stats[0] += 1
            if err > stats[3]:
                stats[3] = err
            if hs < stats[4] and not last:
                stats[4] = hs
            t = t_next if last else t + hs
            if err < tol / 32.0 and h < base_step:
                h = min(2.0 * h, base_step)
        states[rec] = r
    return states, stats
