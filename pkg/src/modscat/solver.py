"""Time integration for the NLS in physical and profile variables.

Physical:  i v_t + v_xx = beta |v|^2 v + gamma |v|^4 v
Profile:   i V_s + s^{-2} V_yy = beta s^{-1} |V|^2 V + gamma s^{-2} |V|^4 V

Both are marched by Strang splitting: the nonlinear flow only rotates the
phase (the modulus is invariant) so it is applied exactly, and the
dispersive flow is an exact Fourier multiplier. Sourced linear problems
i w_t + w_xx = S use the same exact propagator with trapezoidal source
kicks on either side of it.

The wave-operator construction (Duhamel iteration with vanishing data at
infinity) is carried out in profile variables, where a fixed y-grid covers
the solution for all times.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .ansatz import ScatteringData
from .grid import Grid1D, norm, spectral_deriv
from ._kernels import multiply_rows, picard_kicks, pre_kick, unit_phase
from .series import AsymSeries, evaluate_series, psi_of_series

log = logging.getLogger(__name__)

BLOWUP_NORM = 1e6


class BlowUpError(RuntimeError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, msg, log=None, ratio=None):
        super().__init__(msg)
        self.log = log
        self.ratio = ratio


@dataclass(frozen=True, eq=False)
class PhysicalState:
    t: float
    v: np.ndarray
    grid: Grid1D


@dataclass(frozen=True, eq=False)
class ProfileState:
    s: float
    V: np.ndarray
    grid: Grid1D

    @property
    def t(self):
        return self.s


@dataclass(frozen=True)
class StepControl:
    dt: float
    scheme: str = "strang"
    snapshot_times: tuple = ()

    def __post_init__(self):
        if not 0 < self.dt <= 0.1:
            raise ValueError(f"dt must lie in (0, 0.1], got {self.dt}")
        if self.scheme != "strang":
            raise ValueError(f"unknown scheme {self.scheme!r}")
        times = tuple(float(t) for t in self.snapshot_times)
        if list(times) != sorted(times):
            raise ValueError("snapshot_times must be sorted")
        object.__setattr__(self, "snapshot_times", times)


# --- propagators


def _free_physical(grid, t1, t2):
    return np.exp(-1j * grid.wavenumbers**2 * (t2 - t1))


def _free_profile(grid, s1, s2):
    # integral of s^{-2} from s1 to s2 is 1/s1 - 1/s2
    return unit_phase(grid.wavenumbers**2 * (1.0 / s2 - 1.0 / s1))


def _rotate_physical(v, beta, gamma, h):
    m2 = np.abs(v) ** 2
    return v * np.exp(-1j * h * (beta * m2 + gamma * m2 * m2))


def _rotate_profile(V, beta, gamma, s1, s2):
    m2 = np.abs(V) ** 2
    return V * np.exp(-1j * (beta * m2 * np.log(s2 / s1) + gamma * m2 * m2 * (1.0 / s1 - 1.0 / s2)))


def step_physical(state: PhysicalState, dt: float, beta: float, gamma: float) -> PhysicalState:
    """One Strang step of length ``dt`` (negative steps march backward)."""
    g = state.grid
    v = _rotate_physical(state.v, beta, gamma, dt / 2)
    v = sfft.ifft(_free_physical(g, 0.0, dt) * sfft.fft(v))
    v = _rotate_physical(v, beta, gamma, dt / 2)
    return PhysicalState(state.t + dt, v, g)


def step_profile(state: ProfileState, ds: float, beta: float, gamma: float) -> ProfileState:
    """One Strang step in s; the s-dependent weights are integrated exactly."""
    g = state.grid
    s1, s2 = state.s, state.s + ds
    sm = 0.5 * (s1 + s2)
    if s2 <= 0:
        raise ValueError("profile march must stay at s > 0")
    V = _rotate_profile(state.V, beta, gamma, s1, sm)
    V = sfft.ifft(_free_profile(g, s1, s2) * sfft.fft(V))
    V = _rotate_profile(V, beta, gamma, sm, s2)
    return ProfileState(s2, V, g)


def _step_schedule(t0, t1, dt):
    nsteps = max(1, int(np.ceil(abs(t1 - t0) / dt - 1e-9)))
    return nsteps, (t1 - t0) / nsteps


def _snapshot_indices(t0, h, nsteps, times):
    idx = {}
    for t in times:
        i = int(round((t - t0) / h))
        if 0 <= i <= nsteps:
            idx.setdefault(i, t)
    return idx


def solve_forward(initial, t_end: float, ctl: StepControl, beta: float, gamma: float):
    """March a PhysicalState or ProfileState to ``t_end``.

    Returns the states at the steps nearest to ``ctl.snapshot_times`` (the
    initial state is included when 0 is the nearest step) and the final state.
    """
    profile = isinstance(initial, ProfileState)
    t0 = initial.s if profile else initial.t
    if not t_end > t0:
        raise ValueError("t_end must exceed the initial time")
    nsteps, h = _step_schedule(t0, t_end, ctl.dt)
    want = set(_snapshot_indices(t0, h, nsteps, ctl.snapshot_times)) | {nsteps}
    step = step_profile if profile else step_physical
    state, out = initial, []
    guard_every = max(1, nsteps // 200)
    for i in range(nsteps + 1):
        if i in want:
            out.append(state)
        if i == nsteps:
            break
        state = step(state, h, beta, gamma)
        if i % guard_every == 0:
            f = state.V if profile else state.v
            if not np.all(np.isfinite(f)) or np.abs(f).max() > BLOWUP_NORM:
                raise BlowUpError(f"solution exceeded {BLOWUP_NORM:g} at time {t0 + (i + 1) * h:g}")
    # fix the time stamp drift of repeated additions
    fixed = []
    for k, st in zip(sorted(want), out):
        tk = t0 + k * h
        fixed.append(ProfileState(tk, st.V, st.grid) if profile else PhysicalState(tk, st.v, st.grid))
    return fixed


def mass(grid, f):
    return norm(grid, f, "L2") ** 2


def nonlinear_difference(v0, w, beta: float, gamma: float) -> np.ndarray:
    """beta (|v0+w|^2 (v0+w) - |v0|^2 v0) + gamma (|v0+w|^4 (v0+w) - |v0|^4 v0)."""
    u = v0 + w
    mu = np.abs(u) ** 2
    m0 = np.abs(v0) ** 2
    return beta * (mu * u - m0 * v0) + gamma * (mu * mu * u - m0 * m0 * v0)


# --- sourced linear march


def march_sourced(grid, w0, t0, t1, dt, source, profile=False, record_every=1):
    """Solve i w_t + c(t) w_xx = S(t, w) from t0 to t1 (either direction).

    ``c = 1`` in physical variables and ``c = s^{-2}`` in profile variables.
    Each step is  w2 = U (w1 - i h/2 S1) - i h/2 S2;  S2 may depend on w2,
    in which case the implicit kick is resolved by fixed-point sweeps.

    Returns (times, w snapshots, source snapshots) every ``record_every`` steps.
    """
    nsteps, h = _step_schedule(t0, t1, dt)
    free = _free_profile if profile else _free_physical
    w = np.asarray(w0, complex)
    S = source(t0, w)
    times, ws, ss = [t0], [w], [S]
    t = t0
    for i in range(1, nsteps + 1):
        t2 = t0 + i * h
        lin = sfft.ifft(free(grid, t, t2) * sfft.fft(w - 0.5j * h * S))
        S2 = source(t2, lin)
        w2 = lin - 0.5j * h * S2
        for _ in range(3):
            S2 = source(t2, w2)
            w2 = lin - 0.5j * h * S2
        w, S, t = w2, S2, t2
        if i % record_every == 0 or i == nsteps:
            times.append(t)
            ws.append(w)
            ss.append(S)
    return np.array(times), ws, ss


# --- Duhamel iteration with vanishing data at infinity


@dataclass
class IterationLog:
    """Per-iterate diagnostics of the Duhamel fixed-point iteration.

    ``records[k]`` describes iterate k: the weighted successive difference
    sup_t t ||w_k - w_{k-1}||_2 / (1 + ln(1+t))^2, the measured bound
    constant check, and the energy-inequality margins.
    """

    records: list = field(default_factory=list)
    K: float = 0.0
    converged_at: int = None
    selected: int = None

    def ratios(self):
        d = [r["weighted_diff"] for r in self.records[1:]]
        return [b / a if a > 0 else 0.0 for a, b in zip(d, d[1:])]


class _Background:
    """Evaluates a series profile and its exact residual Psi at any s."""

    def __init__(self, V: AsymSeries):
        N = V.max_order or 0
        R = psi_of_series(V, max(2, 5 * N + 2))
        base = V.base
        self.grid = V.grid
        self.b = np.ascontiguousarray(base.b)
        self.ba2 = base.beta * base.a**2
        self._V = self._pack(V)
        self._R = self._pack(R)

    @staticmethod
    def _pack(series):
        if not series.terms:
            return np.zeros((0, 2), int), np.zeros((0, series.grid.n), complex)
        keys = np.array(list(series.terms), int)
        return keys, np.stack(list(series.terms.values()))

    def _eval(self, packed, s, phase):
        keys, coeffs = packed
        if len(keys) == 0:
            return np.zeros(self.grid.n, complex)
        ell = np.log(s)
        w = ell ** keys[:, 1] * s ** (-keys[:, 0].astype(float))
        return phase * (w @ coeffs)

    def __call__(self, s):
        phase = unit_phase(self.b - self.ba2 * np.log(s))
        return self._eval(self._V, s, phase), self._eval(self._R, s, phase)


def _profile_nonlinear_difference(Vb, W, s, beta, gamma):
    return nonlinear_difference(Vb, W, beta / s, gamma / s**2)


def _physical_dx_norm(grid, W, s):
    """||d_x w||_{L2(x)} for w = t^{-1/2} e^{ix^2/4t} W(t, x/t)."""
    dW = spectral_deriv(grid, W, 1)
    y = grid.points
    return np.sqrt(np.sum(np.abs(0.5j * y * W + dW / s) ** 2, axis=-1) * grid.dx)


def _l2(grid, W):
    return np.sqrt(np.sum(np.abs(W) ** 2, axis=-1) * grid.dx)


def duhamel_iterate(data: ScatteringData, T_max, t_min, ctl: StepControl, max_iters=8, tol=1e-9,
                    monitor_every=None):
    """Construct w = v - v0 with w(T_max) = 0 by Picard iteration.

    See :func:`duhamel_iterate_high_order`, which this calls with V_0.
    """
    return duhamel_iterate_high_order(AsymSeries.leading(data), T_max, t_min, ctl,
                                      max_iters, tol, monitor_every)


def duhamel_iterate_high_order(V_N: AsymSeries, T_max, t_min, ctl: StepControl, max_iters=8,
                               tol=1e-9, monitor_every=None):
    """Picard iteration for the remainder W around the profile V_N.

    In profile variables the remainder solves

        i W_s + s^{-2} W_yy = N(V_N, W) - Psi(V_N),   W(T_max) = 0,

    with N the cubic-quintic difference nonlinearity. Iterate 0 has source
    -Psi(V_N); iterate k uses N(V_N, W_{k-1}). All iterates are marched
    backward together so no iterate needs to be stored at every step; the
    first k with weighted successive difference below ``tol`` is returned.

    Returns (trajectory, log): the trajectory is a list of ProfileState
    holding W at the snapshot times (t_min and T_max always included).
    """
    if not T_max > t_min >= 1:
        raise ValueError("need T_max > t_min >= 1")
    if max_iters < 2:
        raise ValueError("max_iters must be at least 2")
    base = V_N.base
    grid, beta, gamma = base.grid, base.beta, base.gamma
    bg = _Background(V_N)
    K = int(max_iters)
    nsteps, h = _step_schedule(T_max, t_min, ctl.dt)  # h < 0
    if monitor_every is None:
        monitor_every = max(1, int(round(0.1 / abs(h))))
    want = set(_snapshot_indices(T_max, h, nsteps, ctl.snapshot_times))
    want.update({0, nsteps})

    W = np.zeros((K, grid.n), complex)
    Vb, R = bg(T_max)
    S = np.empty_like(W)
    buf = np.empty_like(W)
    S[:] = -R  # W = 0 so every iterate starts from the bare residual

    mon_t, mon_l2, mon_d, mon_diff, mon_sl2, mon_sd = [], [], [], [], [], []
    snaps = {}

    def monitor(t, W, S):
        mon_t.append(t)
        mon_l2.append(_l2(grid, W))
        mon_d.append(_physical_dx_norm(grid, W, t))
        mon_sl2.append(_l2(grid, S))
        mon_sd.append(_physical_dx_norm(grid, S, t))
        mon_diff.append(_l2(grid, np.diff(W, axis=0)))

    monitor(T_max, W, S)
    snaps[0] = (T_max, W.copy())
    t = T_max
    for i in range(1, nsteps + 1):
        t2 = T_max + i * h
        pre_kick(W, S, -0.5 * h, buf)
        pre = sfft.fft(buf, axis=-1, overwrite_x=True)
        multiply_rows(pre, _free_profile(grid, t, t2))
        lin = sfft.ifft(pre, axis=-1, overwrite_x=True)
        Vb, R = bg(t2)
        picard_kicks(lin, W, S, Vb, R, -0.5 * h, beta / t2, gamma / t2**2)
        t = t2
        if i % monitor_every == 0 or i == nsteps:
            if not np.all(np.isfinite(W)) or np.abs(W).max() > BLOWUP_NORM:
                raise BlowUpError(f"Duhamel iterate exceeded {BLOWUP_NORM:g} at t={t:g}")
            monitor(t, W, S)
        if i in want:
            snaps[i] = (t, W.copy())

    # monitors were recorded from T_max downward; flip to increasing time
    tm = np.array(mon_t)[::-1]
    l2 = np.array(mon_l2)[::-1].T
    dn = np.array(mon_d)[::-1].T
    sl2 = np.array(mon_sl2)[::-1].T
    sd = np.array(mon_sd)[::-1].T
    diff = np.array(mon_diff)[::-1].T
    # I(t) = int_t^T ||S(s)|| ds by the trapezoid rule on the monitor grid
    def tail_integral(f):
        seg = 0.5 * (f[:, 1:] + f[:, :-1]) * np.diff(tm)
        out = np.zeros_like(f)
        out[:, :-1] = np.cumsum(seg[:, ::-1], axis=1)[:, ::-1]
        return out

    I0, I1 = tail_integral(sl2), tail_integral(sd)
    lw = (1.0 + beta * np.log1p(tm)) ** 2
    Kmeas = float(np.max(tm * (I0[0] + I1[0]) / lw))
    weight = tm / (1.0 + np.log1p(tm)) ** 2
    rtol = 1e-3
    out_log = IterationLog(K=Kmeas)
    for k in range(K):
        rec = {
            "k": k,
            "sup_l2": float(l2[k].max()),
            "energy_ok": bool(np.all(l2[k] <= I0[k] * (1 + rtol) + 1e-14)),
            "energy_margin": float(np.min(1.0 - l2[k, :-1] / np.maximum(I0[k, :-1], 1e-300))),
            "derivative_energy_ok": bool(
                np.all(l2[k] + dn[k] <= (I0[k] + I1[k]) * (1 + rtol) + 1e-14)
            ),
            "bound_ok": bool(np.all((l2[k] + dn[k]) * tm <= 2 * Kmeas * lw * (1 + rtol) + 1e-14)),
            "weighted_diff": float(np.max(weight * diff[k - 1])) if k > 0 else float(np.max(weight * l2[0])),
        }
        out_log.records.append(rec)
        if out_log.converged_at is None and k > 0 and rec["weighted_diff"] < tol:
            out_log.converged_at = k
    if out_log.converged_at is None:
        ratios = out_log.ratios()
        last = ratios[-1] if ratios else float("nan")
        raise ConvergenceError(
            f"Duhamel iteration did not reach tol={tol:g} in {K} iterates "
            f"(last weighted difference {out_log.records[-1]['weighted_diff']:.3e}, "
            f"contraction ratio {last:.3g})",
            log=out_log,
            ratio=last,
        )
    sel = out_log.converged_at
    out_log.selected = sel
    traj = [ProfileState(tt, Wk[sel].copy(), grid) for _, (tt, Wk) in sorted(snaps.items(), key=lambda kv: kv[1][0])]
    log.info("Duhamel converged at iterate %d (K=%.3g)", sel, Kmeas)
    out_log.monitor = {"t": tm, "l2": l2[sel], "dx": dn[sel], "source_l2": sl2[sel]}
    return traj, out_log


def constructed_profile(V_N: AsymSeries, trajectory):
    """Profiles V = V_N + W at the trajectory times."""
    return [ProfileState(st.s, evaluate_series(V_N, st.s) + st.V, st.grid) for st in trajectory]


# --- pointwise integrating-factor check


def integrating_factor_bound_check(trajectory):
    """Check |V(s,y)| <= |V(s0,y)| + int_{s0}^s |V_yy(sigma,y)| sigma^{-2} d sigma.

    The integral uses the trapezoid rule over the snapshot times. Returns a
    dict with the maximal violation (positive part of lhs - rhs).
    """
    if len(trajectory) < 2:
        raise ValueError("need at least two snapshots")
    grid = trajectory[0].grid
    s = np.array([st.s for st in trajectory])
    V = np.stack([st.V for st in trajectory])
    integrand = np.abs(spectral_deriv(grid, V, 2)) / s[:, None] ** 2
    cum = np.zeros_like(integrand)
    cum[1:] = np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(s)[:, None], axis=0)
    lhs = np.abs(V)
    rhs = np.abs(V[0])[None, :] + cum
    viol = float(np.max(lhs - rhs))
    return {"max_violation": max(viol, 0.0), "min_slack": float(np.min(rhs - lhs)), "snapshots": len(s)}
