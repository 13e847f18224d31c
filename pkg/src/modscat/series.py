"""Asymptotic series  sum_{k,j} c_kj(y) e^{i phi} ln^j(s) / s^k  and their calculus.

A series is stored as the map (k, j) -> c_kj sampled on the grid, with the
common factor e^{i phi}, phi = -beta a^2 ln s + b, kept implicit. Because
every product in the cubic and quintic nonlinearities has the shape
e^{i phi} e^{i phi} e^{-i phi}, the whole residual of the profile equation
stays inside this representation, and the algebra reduces to polynomials
in (1/s, ln s) whose coefficients are grid functions.

The key (0, 0) holds the leading profile a(y) when present.
"""

from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .ansatz import ScatteringData, phase_phi
from .grid import spectral_deriv

PRUNE_RTOL = 1e-10


class SeriesContractError(ArithmeticError):
    """A Newton step failed to raise the order of the residual."""


@dataclass(frozen=True)
class AsymTerm:
    k: int
    j: int
    coeff: np.ndarray

    def __post_init__(self):
        if self.k < 1 or self.j < 0:
            raise ValueError(f"term needs k >= 1 and j >= 0, got ({self.k}, {self.j})")


@dataclass(frozen=True)
class LinearizedPair:
    """Real-linear map W -> diag * W + conj * conj(W)."""

    diag: np.ndarray
    conj: np.ndarray

    def apply(self, W):
        return self.diag * W + self.conj * np.conj(W)


@dataclass(frozen=True, eq=False)
class AsymSeries:
    base: ScatteringData
    terms: "MappingProxyType" = field(default_factory=dict)

    def __post_init__(self):
        n = self.base.grid.n
        clean = {}
        for (k, j), c in dict(self.terms).items():
            if k < 0 or j < 0:
                raise ValueError(f"bad term key {(k, j)}")
            c = np.array(c, dtype=complex)
            if c.shape != (n,) or not np.all(np.isfinite(c)):
                raise ValueError(f"coefficient {(k, j)} must be finite and on the grid")
            c.setflags(write=False)
            clean[(int(k), int(j))] = c
        object.__setattr__(self, "terms", MappingProxyType(dict(sorted(clean.items()))))

    @classmethod
    def leading(cls, base):
        """The series holding only V0 = a e^{i phi}."""
        return cls(base, {(0, 0): base.a})

    @property
    def grid(self):
        return self.base.grid

    @property
    def min_order(self):
        """Smallest power of 1/s present, or None for the zero series."""
        return min((k for k, _ in self.terms), default=None)

    @property
    def max_order(self):
        return max((k for k, _ in self.terms), default=None)

    def coeff(self, k, j):
        c = self.terms.get((k, j))
        return np.zeros(self.grid.n, complex) if c is None else c

    def truncated(self, kmax):
        return AsymSeries(self.base, {key: c for key, c in self.terms.items() if key[0] <= kmax})

    def scaled(self, alpha):
        return AsymSeries(self.base, {key: alpha * c for key, c in self.terms.items()})

    def __add__(self, other):
        return series_add(self, other)

    def __neg__(self):
        return self.scaled(-1.0)

    def __sub__(self, other):
        return series_add(self, -other)

    def __call__(self, s):
        return evaluate_series(self, s)


def _same_base(p, q):
    if p.base is q.base:
        return True
    bp, bq = p.base, q.base
    return (
        bp.grid == bq.grid
        and bp.beta == bq.beta
        and bp.gamma == bq.gamma
        and np.array_equal(bp.a, bq.a)
        and np.array_equal(bp.b, bq.b)
    )


def series_add(p: AsymSeries, q: AsymSeries) -> AsymSeries:
    if not _same_base(p, q):
        raise ValueError("series have different base data or grids")
    out = dict(p.terms)
    for key, c in q.terms.items():
        out[key] = out[key] + c if key in out else c
    return AsymSeries(p.base, out)


# --- polynomial algebra in (u = 1/s, l = ln s) with grid-function coefficients


def _padd(*polys):
    out = {}
    for p in polys:
        for key, c in p.items():
            out[key] = out[key] + c if key in out else c
    return out


def _pscale(p, c):
    return {key: c * v for key, v in p.items()}


def _pmul(p, q, kmax):
    out = {}
    for (k1, j1), c1 in p.items():
        for (k2, j2), c2 in q.items():
            k = k1 + k2
            if k > kmax:
                continue
            key = (k, j1 + j2)
            prod = c1 * c2
            out[key] = out[key] + prod if key in out else prod
    return out


def _pconj(p):
    return {key: np.conj(c) for key, c in p.items()}


def _pshift(p, dk, kmax):
    return {(k + dk, j): c for (k, j), c in p.items() if k + dk <= kmax}


def _pds(p, kmax):
    """d/ds acting on l^j u^k only: j l^{j-1} u^{k+1} - k l^j u^{k+1}."""
    out = {}
    for (k, j), c in p.items():
        if k + 1 > kmax:
            continue
        if j > 0:
            key = (k + 1, j - 1)
            out[key] = out[key] + j * c if key in out else j * c
        if k > 0:
            key = (k + 1, j)
            out[key] = out[key] - k * c if key in out else -k * c
    return out


def _pdy(p, grid):
    if not p:
        return {}
    keys = list(p)
    d = spectral_deriv(grid, np.stack([p[key] for key in keys]), 1)
    return dict(zip(keys, d))


def _sum_pruned(contribs, rtol=PRUNE_RTOL):
    """Add contribution polys, dropping keys that cancel to roundoff."""
    total, scale = {}, {}
    for p in contribs:
        for key, c in p.items():
            m = np.max(np.abs(c)) if c.size else 0.0
            if key in total:
                total[key] = total[key] + c
                scale[key] = max(scale[key], m)
            else:
                total[key] = c
                scale[key] = m
    return {
        key: c for key, c in total.items() if np.max(np.abs(c)) > rtol * scale[key]
    }


def _phase_poly(base):
    return {(0, 1): -base.beta * base.a**2 + 0j, (0, 0): base.b + 0j}


def psi_of_series(V: AsymSeries, truncation: int) -> AsymSeries:
    """Exact residual Psi(V) as a series, keeping powers 1/s^k with k <= truncation."""
    if (0, 0) not in V.terms:
        raise ValueError("series must contain the leading (0, 0) term")
    if truncation < 2:
        raise ValueError("truncation must be at least 2")
    base, T = V.base, truncation
    beta, gamma, grid = base.beta, base.gamma, base.grid
    P = dict(V.terms)
    Pb = _pconj(P)
    a2 = base.a**2

    # i d/ds (e^{i phi} P) = e^{i phi} (beta a^2 u P + i P_s)
    time_part = _padd(_pshift(_pscale(P, beta * a2), 1, T), _pscale(_pds(P, T), 1j))

    P2 = _pmul(P, P, T)
    cubic = _pshift(_pscale(_pmul(P2, Pb, T - 1), -beta), 1, T)
    quintic = {}
    if gamma != 0.0 and T >= 2:
        P3 = _pmul(P2, P, T - 2)
        Pb2 = _pmul(Pb, Pb, T - 2)
        quintic = _pshift(_pscale(_pmul(P3, Pb2, T - 2), -gamma), 2, T)

    disp = []
    if T >= 2:
        # e^{-i phi} d_y^2 (e^{i phi} P) = P_yy + 2i phi_y P_y + i phi_yy P - phi_y^2 P
        Pt = {key: c for key, c in P.items() if key[0] <= T - 2}
        phi_y = _pdy(_phase_poly(base), grid)
        phi_yy = _pdy(phi_y, grid)
        Py = _pdy(Pt, grid)
        Pyy = _pdy(Py, grid)
        kk = T - 2
        inner = [
            Pyy,
            _pscale(_pmul(phi_y, Py, kk), 2j),
            _pscale(_pmul(phi_yy, Pt, kk), 1j),
            _pscale(_pmul(_pmul(phi_y, phi_y, kk), Pt, kk), -1.0),
        ]
        disp = [_pshift(q, 2, T) for q in inner]

    return AsymSeries(base, _sum_pruned([time_part, cubic, quintic, *disp]))


def evaluate_series(V: AsymSeries, s: float) -> np.ndarray:
    if not s > 0:
        raise ValueError(f"time must be positive, got {s}")
    ell = np.log(s)
    acc = np.zeros(V.grid.n, complex)
    for (k, j), c in V.terms.items():
        acc += c * (ell**j * s ** (-k))
    return np.exp(1j * phase_phi(V.base, s)) * acc


def evaluate_series_ds(V: AsymSeries, s: float) -> np.ndarray:
    """Exact s-derivative of :func:`evaluate_series`, term by term."""
    if not s > 0:
        raise ValueError(f"time must be positive, got {s}")
    ell = np.log(s)
    phi_s = -V.base.beta * V.base.a**2 / s
    acc = np.zeros(V.grid.n, complex)
    for (k, j), c in V.terms.items():
        val = ell**j * s ** (-k)
        dval = (j * ell ** (j - 1) if j else 0.0) * s ** (-k - 1) - k * ell**j * s ** (-k - 1)
        acc += c * (1j * phi_s * val + dval)
    return np.exp(1j * phase_phi(V.base, s)) * acc


# --- linearization at V0


def linearized_G(which: str, data: ScatteringData, s: float) -> LinearizedPair:
    """G1'(V0) or G2'(V0) split into the W and conj(W) coefficients."""
    if not s > 0:
        raise ValueError(f"time must be positive, got {s}")
    a2 = data.a**2
    e2 = np.exp(2j * phase_phi(data, s))
    if which == "cubic":
        return LinearizedPair(2.0 * a2 + 0j, a2 * e2)
    if which == "quintic":
        return LinearizedPair(3.0 * a2**2 + 0j, 2.0 * a2**2 * e2)
    raise ValueError(f"which must be 'cubic' or 'quintic', got {which!r}")


def nonlinearity(which, U):
    m2 = np.abs(U) ** 2
    if which == "cubic":
        return m2 * U
    if which == "quintic":
        return m2 * m2 * U
    raise ValueError(f"which must be 'cubic' or 'quintic', got {which!r}")


def quadratic_remainder(which: str, U, V) -> np.ndarray:
    """G(U) - G(V) - G'(V)(U - V)."""
    U = np.asarray(U, complex)
    V = np.asarray(V, complex)
    D = U - V
    m2 = np.abs(V) ** 2
    if which == "cubic":
        lin = 2.0 * m2 * D + V**2 * np.conj(D)
    elif which == "quintic":
        lin = 3.0 * m2**2 * D + 2.0 * m2 * V**2 * np.conj(D)
    else:
        raise ValueError(f"which must be 'cubic' or 'quintic', got {which!r}")
    return nonlinearity(which, U) - nonlinearity(which, V) - lin


def l0_leading_map(Z, k, data):
    """Leading band of L0 on Z e^{i phi} l^j / s^k: (-beta a^2 - i k) Z - beta a^2 conj(Z)."""
    ba2 = data.beta * data.a**2
    return (-ba2 - 1j * k) * Z - ba2 * np.conj(Z)


def invert_L0_leading(Y, k: int, data: ScatteringData) -> np.ndarray:
    """Solve (-beta a^2 - i k) Z - beta a^2 conj(Z) = Y pointwise; k >= 1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ba2 = data.beta * data.a**2
    Y = np.asarray(Y, complex)
    return ((-ba2 + 1j * k) * Y + ba2 * np.conj(Y)) / k**2


def apply_L0(term: AsymTerm, base: ScatteringData) -> AsymSeries:
    """L0 = L'(V0) applied to c e^{i phi} l^j / s^k.

    Image: (k+1, j) leading band, (k+1, j-1) from d/ds ln^j, (k+2, j) from
    the quintic linearization.
    """
    k, j, Z = term.k, term.j, np.asarray(term.coeff, complex)
    a4 = base.a**4
    out = {(k + 1, j): l0_leading_map(Z, k, base)}
    if j > 0:
        out[(k + 1, j - 1)] = 1j * j * Z
    out[(k + 2, j)] = -base.gamma * (3.0 * a4 * Z + 2.0 * a4 * np.conj(Z))
    return AsymSeries(base, out)


def newton_step(V: AsymSeries, truncation: int) -> AsymSeries:
    """One step of the recursion V_{n+1} = V_n + delta, delta in S_{m-1}.

    ``m`` is the lowest order of Psi(V_n). The leading band of L0 delta is
    matched against -Psi(V_n) at order m, solving the ln-power ladder from
    the top down since the i j band couples j to j - 1.
    """
    R = psi_of_series(V, truncation)
    m = R.min_order
    if m is None:
        return V
    if m < 2:
        raise SeriesContractError(f"residual has order {m}, expected >= 2")
    if truncation < m + 1:
        raise ValueError(f"truncation {truncation} too small to certify order {m + 1}")
    p = m - 1
    band = {j: c for (k, j), c in R.terms.items() if k == m}
    Z = {}
    nxt = None
    for j in range(max(band), -1, -1):
        rhs = -band.get(j, 0.0)
        if nxt is not None:
            rhs = rhs - 1j * (j + 1) * nxt
        nxt = invert_L0_leading(rhs, p, V.base)
        Z[j] = nxt
    Vn = V + AsymSeries(V.base, {(p, j): c for j, c in Z.items()})
    Rn = psi_of_series(Vn, truncation)
    if Rn.min_order is not None and Rn.min_order < m + 1:
        raise SeriesContractError(
            f"residual order stayed at {Rn.min_order} after a step from order {m}"
        )
    return Vn


def expand(base: ScatteringData, order: int, truncation=None):
    """V_0 .. V_order built by repeated Newton steps."""
    if order < 0:
        raise ValueError("order must be >= 0")
    trunc = order + 3 if truncation is None else truncation
    out = [AsymSeries.leading(base)]
    for _ in range(order):
        out.append(newton_step(out[-1], trunc))
    return out


# --- columnar text I/O


def write_series(path, V: AsymSeries):
    y = V.grid.points
    with open(path, "w") as fh:
        for (k, j), c in V.terms.items():
            fh.write(f"# k={k} j={j}\n# y re(c) im(c)\n")
            for yi, ci in zip(y, c):
                fh.write(f"{yi:.17g} {ci.real:.17g} {ci.imag:.17g}\n")
            fh.write("\n")


def read_series(path, base: ScatteringData) -> AsymSeries:
    terms, key, rows = {}, None, []

    def flush():
        if key is not None:
            arr = np.array(rows, dtype=float).reshape(-1, 3)
            terms[key] = arr[:, 1] + 1j * arr[:, 2]

    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# k="):
                flush()
                parts = dict(item.split("=") for item in line[2:].split())
                key, rows = (int(parts["k"]), int(parts["j"])), []
            elif line and not line.startswith("#"):
                rows.append([float(v) for v in line.split()])
    flush()
    return AsymSeries(base, terms)
