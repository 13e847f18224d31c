"""Fused per-step loops for the Duhamel march (numba)."""

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def picard_kicks(lin, W, S, Vb, R, kick, cb, cg):
    """Second half-kick for every Picard iterate at one time level.

    ``kick`` is the real number c with half-kick i c S.
    Iterate 0 has source -R; iterate k has source N(Vb, W_{k-1}) - R with
    N(Vb, W) = cb (|Vb+W|^2 (Vb+W) - |Vb|^2 Vb) + cg (|Vb+W|^4 (Vb+W) - |Vb|^4 Vb).
    W and S are overwritten in place.
    """
    K, n = lin.shape
    for i in range(n):
        vr, vi = Vb[i].real, Vb[i].imag
        rr, ri = R[i].real, R[i].imag
        m0 = vr * vr + vi * vi
        c0 = cb * m0 + cg * m0 * m0
        nr, ni = c0 * vr + rr, c0 * vi + ri
        # kick is purely imaginary: kick * s = (-ki s_i, ki s_r)
        sr, si = -rr, -ri
        S[0, i] = complex(sr, si)
        wr = lin[0, i].real - kick * si
        wi = lin[0, i].imag + kick * sr
        W[0, i] = complex(wr, wi)
        for k in range(1, K):
            ur, ui = vr + wr, vi + wi
            mu = ur * ur + ui * ui
            c = cb * mu + cg * mu * mu
            sr, si = c * ur - nr, c * ui - ni
            S[k, i] = complex(sr, si)
            wr = lin[k, i].real - kick * si
            wi = lin[k, i].imag + kick * sr
            W[k, i] = complex(wr, wi)


@njit(cache=True)
def unit_phase(theta):
    out = np.empty(theta.shape, np.complex128)
    for i in range(theta.size):
        out[i] = complex(np.cos(theta[i]), np.sin(theta[i]))
    return out


@njit(cache=True)
def multiply_rows(F, m):
    K, n = F.shape
    for k in range(K):
        for i in range(n):
            F[k, i] *= m[i]


@njit(cache=True)
def pre_kick(W, S, c, out):
    """out = W + i c S."""
    K, n = W.shape
    for k in range(K):
        for i in range(n):
            s = S[k, i]
            out[k, i] = complex(W[k, i].real - c * s.imag, W[k, i].imag + c * s.real)
