"""Extraction of the scattering data (a, b) from a forward profile trajectory.

Writing the profile equation as i V_s - g V = F with the real potential
g = beta s^{-1} |V|^2 + gamma s^{-2} |V|^4 and F = -s^{-2} V_yy, the
integrating factor e^{iG}, G = int g, turns it into d_s(V e^{iG}) = -i F e^{iG},
so |V| and V e^{iG} both converge at the rate of int |F|.
"""

import configparser
from dataclasses import dataclass

import numpy as np

from .grid import Grid1D


@dataclass(frozen=True)
class RateFit:
    """log(value) ~ exponent * log(s) + log_power * log(1 + log(s)) + intercept."""

    exponent: float
    log_power: int
    residual_rms: float
    intercept: float = 0.0

    def __str__(self):
        return f"s^{self.exponent:.4f} (1+ln s)^{self.log_power} (rms {self.residual_rms:.2e})"


def fit_rate(s, values, log_correction_max: int = 0, min_decades: float = 1.5) -> RateFit:
    """Least-squares power-law fit with an optional integer log correction.

    For each q in 0..log_correction_max the exponent and intercept are fit
    to log(value) - q log(1 + log s); the q with the smallest residual wins
    (ties go to the smaller q).
    """
    s = np.asarray(s, float)
    v = np.asarray(values, float)
    if s.shape != v.shape or s.size < 8:
        raise ValueError("need at least 8 (s, value) samples")
    if np.any(s < 1):
        raise ValueError("sample times must be >= 1")
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise ValueError("values must be positive and finite")
    span = np.log10(s.max() / s.min())
    if span == 0:
        raise ValueError("degenerate samples: all s equal")
    if span < min_decades - 1e-12:
        raise ValueError(f"samples span {span:.2f} decades, need {min_decades}")
    ls = np.log(s)
    lv = np.log(v)
    X = np.column_stack([ls, np.ones_like(ls)])
    best = None
    for q in range(int(log_correction_max) + 1):
        target = lv - q * np.log1p(ls)
        coef, *_ = np.linalg.lstsq(X, target, rcond=None)
        rms = float(np.sqrt(np.mean((X @ coef - target) ** 2)))
        if best is None or rms < best[0] * (1 - 1e-9) - 1e-14:
            best = (rms, q, coef)
    rms, q, coef = best
    return RateFit(float(coef[0]), q, rms, float(coef[1]))


@dataclass(frozen=True, eq=False)
class PhaseAccumulator:
    """Running G(s, y) = int_{s0}^s g(tau, y) d tau."""

    s0: float
    G: np.ndarray
    last_s: float

    @classmethod
    def start(cls, s0, n):
        return cls(float(s0), np.zeros(n), float(s0))


def _potential(V, s, beta, gamma):
    m2 = np.abs(V) ** 2
    return beta * m2 / s + gamma * m2 * m2 / s**2


def accumulate_phase(acc: PhaseAccumulator, state, nxt, beta: float, gamma: float) -> PhaseAccumulator:
    """Add the trapezoid of g over [state.s, nxt.s]."""
    if not np.isclose(state.s, acc.last_s, rtol=1e-12, atol=0):
        raise ValueError("state time does not match the accumulator")
    if not nxt.s > state.s:
        raise ValueError("snapshot times must increase")
    g1 = _potential(state.V, state.s, beta, gamma)
    g2 = _potential(nxt.V, nxt.s, beta, gamma)
    return PhaseAccumulator(acc.s0, acc.G + 0.5 * (nxt.s - state.s) * (g1 + g2), float(nxt.s))


@dataclass(frozen=True, eq=False)
class ExtractedData:
    grid: Grid1D
    a: np.ndarray
    b: np.ndarray
    mask: np.ndarray
    rate_modulus: RateFit = None
    rate_phase: RateFit = None
    degenerate: bool = False
    final_s: float = None

    def as_scattering_data(self, beta, gamma):
        from .ansatz import ScatteringData

        return ScatteringData(self.grid, self.a, self.b, beta, gamma)


MASK_LEVEL = 1e-3


def _unwrap_from_center(phase, mask, center):
    out = np.zeros_like(phase)
    for idx in (np.arange(center, phase.size), np.arange(center, -1, -1)):
        sel = idx[mask[idx]]
        if sel.size:
            out[sel] = np.unwrap(phase[sel])
    return out


def extract(trajectory, beta: float, gamma: float, acc: PhaseAccumulator = None, fit_window=None,
            log_correction_max=0, min_span=100.0) -> ExtractedData:
    """Scattering data from profile snapshots spanning s in [s0, S].

    a is |V(S)| refined by one Richardson step against an s^{-1} error using
    the last two snapshots. G is accumulated from s0 and then shifted so that
    G(S) = beta a^2 ln S, which makes b = arg(V(S) e^{iG(S)}) the offset in
    phi = -beta a^2 ln s + b. Rates are fitted over ``fit_window``
    (default: snapshots with s <= S/2). ``acc`` may carry G accumulated
    before the first snapshot; the gauge fix makes the result independent of it.
    """
    if len(trajectory) < 3:
        raise ValueError("need at least three snapshots")
    grid = trajectory[0].grid
    s = np.array([st.s for st in trajectory])
    S = s[-1]
    if S / s[0] < min_span:
        raise ValueError(f"trajectory spans only a factor {S / s[0]:.3g} in s")
    if acc is None:
        acc = PhaseAccumulator.start(s[0], grid.n)
    elif not np.isclose(acc.last_s, s[0], rtol=1e-12, atol=0):
        raise ValueError("accumulator does not end at the first snapshot")
    Gs = [acc.G]
    for st, nx in zip(trajectory, trajectory[1:]):
        acc = accumulate_phase(acc, st, nx, beta, gamma)
        Gs.append(acc.G)
    Gs = np.array(Gs)

    VS, Vp = trajectory[-1].V, trajectory[-2].V
    sp = s[-2]
    a = (S * np.abs(VS) - sp * np.abs(Vp)) / (S - sp)
    a = np.maximum(a, 0.0)
    if not np.any(np.abs(VS) > 0):
        z = np.zeros(grid.n)
        return ExtractedData(grid, z, z.copy(), np.zeros(grid.n, bool), degenerate=True, final_s=float(S))

    G_shift = Gs[-1] - beta * a**2 * np.log(S)
    Gs = Gs - G_shift
    mask = a > MASK_LEVEL * a.max()
    raw = np.angle(VS * np.exp(1j * Gs[-1]))
    b = np.where(mask, _unwrap_from_center(raw, mask, int(np.argmax(a))), 0.0)

    A = VS * np.exp(1j * Gs[-1])
    lo, hi = fit_window if fit_window is not None else (s[0], S / 2)
    sel = (s >= lo) & (s <= hi)
    mod_err = np.array([np.max(np.abs(np.abs(st.V) - a)) for st in trajectory])
    ph_err = np.array([np.max(np.abs(st.V - A * np.exp(-1j * G))) for st, G in zip(trajectory, Gs)])
    rate_mod = _safe_fit(s[sel], mod_err[sel], log_correction_max)
    rate_ph = _safe_fit(s[sel], ph_err[sel], log_correction_max)
    return ExtractedData(grid, a, b, mask, rate_mod, rate_ph, False, float(S))


def _safe_fit(s, v, qmax):
    if np.any(v <= 0):
        return None
    return fit_rate(s, v, qmax)


def profile_error(trajectory, data):
    """sup_y |V(s, y) - V0(s, y)| for each snapshot, V0 built from ``data``."""
    from .ansatz import build_V0

    return np.array([np.max(np.abs(st.V - build_V0(data, st.s))) for st in trajectory])


# --- text output


def write_extracted(path, ext: ExtractedData):
    with open(path, "w") as fh:
        fh.write("# y a(y) b(y)\n")
        for y, a, b in zip(ext.grid.points, ext.a, ext.b):
            fh.write(f"{y:.17g} {a:.17g} {b:.17g}\n")


def rate_section(fit):
    if fit is None:
        return {"degenerate": "true"}
    return {
        "exponent": f"{fit.exponent:.12g}",
        "log_power": str(fit.log_power),
        "residual_rms": f"{fit.residual_rms:.6g}",
    }


def write_summary(path, sections):
    """Write a nested mapping {section: {key: value}} as key = value text."""
    cp = configparser.ConfigParser(interpolation=None)
    for name, body in sections.items():
        cp[name] = {k: str(v) for k, v in body.items()}
    with open(path, "w") as fh:
        cp.write(fh)


def read_summary(path):
    cp = configparser.ConfigParser(interpolation=None)
    cp.read(path)
    return {name: dict(cp[name]) for name in cp.sections()}
