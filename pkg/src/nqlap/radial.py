"""Radial discretization on a truncated ball, quadrature, and functionals.

Fields are radial profiles u(r) sampled on a graded grid 0 < r_0 < ... <
r_{n-1} = R.  A profile is treated as piecewise linear between nodes and
(even-symmetric) constant on the innermost cell [0, r_0].  All integrals
carry the N-dimensional volume element: for a nodal function f,

    integral f dx  ~=  sum_i w_i f(r_i),

where the weights come from exact per-cell moments of r^(N-1) against the
piecewise-linear interpolant, so constants integrate to the exact ball
volume.  The singular weight |x|^(-b) gets its own weight vector built from
exact moments of r^(N-1-b); the innermost cell uses the closed-form
antiderivative, which keeps the weight integrable for every 0 < b < min(2,N).

Gradient quantities live on cell midpoints (conservative flux form), which
makes the discrete energy gradients exact adjoints of the evaluation --
finite differences of the discrete energy match `energy_gradient` to
roundoff.  The N = 1 case uses the even-extension convention: the grid
covers r >= 0 and every integral carries a factor 2.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InvalidGrid, NegativeValues, ZeroField
from .params import ParameterSet

# Clip for the first node of a geometric grid, as a fraction of R.
MIN_R0_FRACTION = 1e-8


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere in R^N (2 for N=1, 2*pi, 4*pi, ...)."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


class RadialGrid:
    """Graded radial nodes with volume-element quadrature weights.

    Treat instances as immutable after construction; the singular-weight
    vectors are memoized per exponent b but never change existing state.

    Attributes
    ----------
    N : int
        Space dimension (>= 1).
    r : ndarray, shape (n,)
        Strictly increasing nodes, r[0] > 0, r[-1] = R.
    w : ndarray, shape (n,)
        Nodal weights approximating integral f(r) omega r^(N-1) dr.
    dr : ndarray, shape (n-1,)
        Cell widths.
    wc : ndarray, shape (n-1,)
        Exact cell volumes omega (r_{i+1}^N - r_i^N)/N, used for gradient
        energies on cell midpoints.
    """

    def __init__(self, N: int, nodes: np.ndarray, grading: float = math.nan):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 16:
            raise InvalidGrid("need a 1-d array of at least 16 nodes")
        if nodes[0] <= 0.0 or np.any(np.diff(nodes) <= 0.0):
            raise InvalidGrid("nodes must be strictly increasing with r_0 > 0")
        self.N = int(N)
        if self.N < 1:
            raise InvalidGrid(f"N must be >= 1, got {N}")
        self.r = nodes
        self.R = float(nodes[-1])
        self.n = nodes.size
        self.grading = float(grading)
        self.dr = np.diff(nodes)
        omega = sphere_area(self.N)
        a, c = nodes[:-1], nodes[1:]
        self.wc = omega * (c**self.N - a**self.N) / self.N
        self.w = self._moment_weights(self.N - 1.0)
        self._ws_cache: dict[float, np.ndarray] = {}
        self._nodal_diff = None

    def _moment_weights(self, s: float) -> np.ndarray:
        """Nodal weights from exact cell moments of r^s (piecewise-linear rule)."""
        r, dr = self.r, self.dr
        a, c = r[:-1], r[1:]
        m0 = (c ** (s + 1.0) - a ** (s + 1.0)) / (s + 1.0)
        m1 = (c ** (s + 2.0) - a ** (s + 2.0)) / (s + 2.0)
        w = np.zeros(self.n)
        w[:-1] += (c * m0 - m1) / dr
        w[1:] += (m1 - a * m0) / dr
        # Innermost cell [0, r_0]: field constant (radial symmetry), weight exact.
        w[0] += r[0] ** (s + 1.0) / (s + 1.0)
        return sphere_area(self.N) * w

    def singular_weights(self, b: float) -> np.ndarray:
        """Nodal weights for integral f(r) |r|^(-b) omega r^(N-1) dr."""
        b = float(b)
        if b not in self._ws_cache:
            if not 0.0 < b < min(2.0, self.N):
                raise InvalidGrid(f"singular exponent b={b} out of (0, min(2,N))")
            self._ws_cache[b] = self._moment_weights(self.N - 1.0 - b)
        return self._ws_cache[b]

    def ball_volume(self) -> float:
        return sphere_area(self.N) * self.R**self.N / self.N

    def nodal_gradient(self, values: np.ndarray) -> np.ndarray:
        """Pointwise derivative u'(r_i): 3-point stencils on the nonuniform grid.

        Interior nodes use the centered nonuniform formula; the origin uses an
        even ghost node at -r_0 (radial symmetry, u'(0) = 0); the outer node
        uses a one-sided stencil.
        """
        if self._nodal_diff is None:
            self._nodal_diff = _nodal_stencils(self.r)
        lo, mid, hi = self._nodal_diff
        v = values
        out = np.empty_like(v)
        out[1:-1] = lo[1:-1] * v[:-2] + mid[1:-1] * v[1:-1] + hi[1:-1] * v[2:]
        # Ghost row: coefficient of the ghost value folded onto v[0].
        out[0] = mid[0] * v[0] + hi[0] * v[1]
        out[-1] = lo[-1] * v[-3] + mid[-1] * v[-2] + hi[-1] * v[-1]
        return out


def _nodal_stencils(r: np.ndarray):
    n = r.size
    lo = np.zeros(n)
    mid = np.zeros(n)
    hi = np.zeros(n)
    h1 = r[1:-1] - r[:-2]
    h2 = r[2:] - r[1:-1]
    lo[1:-1] = -h2 / (h1 * (h1 + h2))
    mid[1:-1] = (h2 - h1) / (h1 * h2)
    hi[1:-1] = h1 / (h2 * (h1 + h2))
    # Origin: ghost node at -r_0 carrying v[0] (even extension).
    g1, g2 = 2.0 * r[0], r[1] - r[0]
    mid[0] = -g2 / (g1 * (g1 + g2)) + (g2 - g1) / (g1 * g2)
    hi[0] = g1 / (g2 * (g1 + g2))
    # Outer node: one-sided backward 3-point formula.
    e1, e2 = r[-2] - r[-3], r[-1] - r[-2]
    lo[-1] = e2 / (e1 * (e1 + e2))
    mid[-1] = -(e1 + e2) / (e1 * e2)
    hi[-1] = (e1 + 2.0 * e2) / (e2 * (e1 + e2))
    return lo, mid, hi


def grading_for_first_node(R: float, n: int, r0_fraction: float = 1e-5) -> float:
    """Geometric ratio that places the first node near r0_fraction * R."""
    return float((1.0 / r0_fraction) ** (1.0 / (n - 1)))


def build_grid(N: int, R: float, n: int, grading: float = 1.0) -> RadialGrid:
    """Construct a graded grid on (0, R].

    grading is the per-cell geometric ratio; grading = 1 gives uniform
    spacing r_i = R (i+1)/n.  For grading > 1 the nodes are the geometric
    sequence ending at R with first node R * grading^-(n-1), clipped to
    at least 1e-8 R.
    """
    if not (R > 0.0 and math.isfinite(R)):
        raise InvalidGrid(f"R must be positive and finite, got {R}")
    if n < 16:
        raise InvalidGrid(f"need n >= 16 nodes, got {n}")
    if grading < 1.0:
        raise InvalidGrid(f"grading must be >= 1, got {grading}")
    if grading == 1.0:
        nodes = R * np.arange(1, n + 1) / n
    else:
        r0 = max(R * grading ** (-(n - 1)), MIN_R0_FRACTION * R)
        nodes = np.geomspace(r0, R, n)
        nodes[-1] = R
    return RadialGrid(N, nodes, grading)


@dataclass
class RadialField:
    """A sampled radial profile u(r_i) on a grid.

    The outermost value is treated as 0 by solvers (Dirichlet truncation);
    constructors do not modify user data.
    """

    grid: RadialGrid
    values: np.ndarray
    metadata: str | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise ValueError("values must match the grid size")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def copy(self, metadata: str | None = None) -> "RadialField":
        return RadialField(self.grid, self.values.copy(), metadata or self.metadata)


@dataclass(frozen=True)
class FiberComponents:
    """The four scalars every functional closes over.

    a2 = |grad u|_2^2, aq = |grad u|_q^q, ap = integral |x|^-b |u|^p,
    m2 = |u|_2^2.
    """

    a2: float
    aq: float
    ap: float
    m2: float


def slopes(grid: RadialGrid, values: np.ndarray) -> np.ndarray:
    """Piecewise-linear derivative on cell midpoints."""
    return np.diff(values) / grid.dr


def adjoint_flux(grid: RadialGrid, flux: np.ndarray) -> np.ndarray:
    """Adjoint of `slopes` composed with cell weighting: nodal flux differences.

    For F(u) = sum_i c_i s_i with s = slopes(u), returns dF/du given
    flux_i = c_i / dr_i.
    """
    out = np.zeros(grid.n)
    out[:-1] -= flux
    out[1:] += flux
    return out


def components(u: RadialField, params: ParameterSet) -> FiberComponents:
    g = u.grid
    v = u.values
    s = slopes(g, v)
    ws = g.singular_weights(params.b)
    return FiberComponents(
        a2=float(np.dot(g.wc, s * s)),
        aq=float(np.dot(g.wc, np.abs(s) ** params.q)),
        ap=float(np.dot(ws, np.abs(v) ** params.p)),
        m2=float(np.dot(g.w, v * v)),
    )


def energy_from_components(comp: FiberComponents, params: ParameterSet) -> float:
    return 0.5 * comp.a2 + comp.aq / params.q - comp.ap / params.p


def energy(u: RadialField, params: ParameterSet) -> float:
    """I(u) = |grad u|_2^2 / 2 + |grad u|_q^q / q - (1/p) integral |x|^-b |u|^p."""
    return energy_from_components(components(u, params), params)


def pohozaev_from_components(comp: FiberComponents, params: ParameterSet) -> float:
    A, B = params.grad_q_rate, params.nonlin_rate
    return comp.a2 + (A / params.q) * comp.aq - (B / params.p) * comp.ap


def pohozaev(u: RadialField, params: ParameterSet) -> float:
    """P(u); vanishes on every solution, and equals d/dt I(u_t) at t = 1."""
    return pohozaev_from_components(components(u, params), params)


def weinstein_from_components(comp: FiberComponents, params: ParameterSet) -> float:
    if comp.m2 <= 0.0:
        raise ZeroField("quotient undefined for the zero field")
    sig = params.sigma_pq
    return comp.aq ** (sig / params.q) * comp.m2 ** ((params.p - sig) / 2.0) / comp.ap


def weinstein(u: RadialField, params: ParameterSet) -> float:
    """Scale- and dilation-invariant quotient |grad u|_q^sigma |u|_2^(p-sigma) / ap."""
    return weinstein_from_components(components(u, params), params)


def fiber_energy(comp: FiberComponents, t, params: ParameterSet):
    """I(u_t) in closed form for the mass-preserving dilation u_t = t^(N/2) u(tx).

    The three integrals scale with exact exponents, so no resampling is
    involved; t may be a scalar or an array.
    """
    t = np.asarray(t, dtype=float)
    A, B = params.grad_q_rate, params.nonlin_rate
    out = (
        0.5 * t**2 * comp.a2
        + t**A * comp.aq / params.q
        - t**B * comp.ap / params.p
    )
    return float(out) if out.ndim == 0 else out


def fiber_pohozaev(comp: FiberComponents, t, params: ParameterSet):
    """P(u_t) in closed form; equals t * d/dt fiber_energy(comp, t)."""
    t = np.asarray(t, dtype=float)
    A, B = params.grad_q_rate, params.nonlin_rate
    out = (
        t**2 * comp.a2
        + (A / params.q) * t**A * comp.aq
        - (B / params.p) * t**B * comp.ap
    )
    return float(out) if out.ndim == 0 else out


def _resample(u: RadialField, points: np.ndarray) -> np.ndarray:
    """Monotone-cubic sample of the profile at arbitrary radii.

    Flat (even-symmetric) extension below r_0, zero beyond R: preserves
    nonnegativity and decay of the interpolated profile.
    """
    # flat stretches (identically-zero tails) trip a harmless overflow in
    # the interpolator's weighted harmonic mean
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        interp = PchipInterpolator(u.grid.r, u.values, extrapolate=False)
        vals = interp(points)
    vals[points < u.grid.r[0]] = u.values[0]
    vals[points > u.grid.R] = 0.0
    return vals


def dilate(u: RadialField, t: float) -> RadialField:
    """Mass-preserving dilation u_t(x) = t^(N/2) u(tx), resampled on the grid."""
    if t <= 0.0:
        raise ValueError(f"dilation parameter must be positive, got {t}")
    if t == 1.0:
        return u.copy()
    g = u.grid
    vals = t ** (g.N / 2.0) * _resample(u, t * g.r)
    vals[-1] = 0.0
    return RadialField(g, vals, u.metadata)


def shape_scale(u: RadialField, t0: float) -> RadialField:
    """Mass-moving scaling u^(t0)(x) = t0 u(x / t0); multiplies m2 by t0^(N+2)."""
    if t0 <= 0.0:
        raise ValueError(f"scaling parameter must be positive, got {t0}")
    if t0 == 1.0:
        return u.copy()
    g = u.grid
    vals = t0 * _resample(u, g.r / t0)
    vals[-1] = 0.0
    return RadialField(g, vals, u.metadata)


def rescale_to_mass(u: RadialField, c: float) -> RadialField:
    """Multiplicative normalization onto the mass constraint |u|_2^2 = c."""
    if c <= 0.0:
        raise ValueError(f"target mass must be positive, got {c}")
    m2 = float(np.dot(u.grid.w, u.values**2))
    if m2 <= 0.0:
        raise ZeroField("cannot normalize the zero field")
    return RadialField(u.grid, u.values * math.sqrt(c / m2), u.metadata)


def multiplier(u: RadialField, params: ParameterSet) -> tuple[float, float]:
    """Two Lagrange-multiplier estimates (lam_a, lam_b).

    lam_a = (a2 + aq - ap) / m2 comes from pairing the equation with u and
    holds at any critical point.  lam_b eliminates ap through P(u) = 0, so
    it only agrees with lam_a when the profile sits on the zero set of P:

        lam_b m2 = { [(N-2)p - 2(N-b)] a2 + (2/q) [(N-q)p - q(N-b)] aq }
                   / [N(p-2) + 2b].
    """
    comp = components(u, params)
    if comp.m2 <= 0.0:
        raise ZeroField("multiplier undefined for the zero field")
    N, q, p, b = params.N, params.q, params.p, params.b
    lam_a = (comp.a2 + comp.aq - comp.ap) / comp.m2
    denom = N * (p - 2.0) + 2.0 * b
    lam_b = (
        ((N - 2.0) * p - 2.0 * (N - b)) * comp.a2
        + (2.0 / q) * ((N - q) * p - q * (N - b)) * comp.aq
    ) / (denom * comp.m2)
    return lam_a, lam_b


def decreasing_rearrangement(u: RadialField) -> RadialField:
    """Radially nonincreasing rearrangement, equimeasurable on the grid measure.

    Node values are treated as a simple function carrying their quadrature
    weights; the values are layered outward from the origin by cumulative
    measure and sampled at each node's measure midpoint, then the l2 mass is
    restored exactly by a multiplicative factor.  Fields that are already
    nonincreasing are returned unchanged.
    """
    v = u.values
    if np.any(v < 0.0):
        raise NegativeValues("rearrangement requires a nonnegative field")
    g = u.grid
    order = np.argsort(-v, kind="stable")
    csrc = np.cumsum(g.w[order])
    ctgt = np.cumsum(g.w)
    mids = ctgt - 0.5 * g.w
    idx = np.minimum(np.searchsorted(csrc, mids, side="left"), g.n - 1)
    out = v[order][idx]
    m2_old = float(np.dot(g.w, v * v))
    m2_new = float(np.dot(g.w, out * out))
    if m2_new > 0.0:
        out = out * math.sqrt(m2_old / m2_new)
    return RadialField(g, out, u.metadata)


# ---------------------------------------------------------------------------
# Discrete energy gradients (exact adjoints of the evaluation above)
# ---------------------------------------------------------------------------

def phi_q(s: np.ndarray, q: float) -> np.ndarray:
    """|s|^(q-2) s, the q-Laplacian flux nonlinearity."""
    return np.abs(s) ** (q - 2.0) * s


def energy_gradient(u: RadialField, params: ParameterSet) -> np.ndarray:
    """Euclidean gradient of the discrete energy with respect to node values.

    Central finite differences of `energy` under node perturbations
    reproduce this vector to roundoff; it is the weak form of
    -lap(u) - lap_q(u) - |x|^(-b) |u|^(p-2) u.
    """
    g = u.grid
    v = u.values
    s = slopes(g, v)
    flux = g.wc * (s + phi_q(s, params.q)) / g.dr
    grad = adjoint_flux(g, flux)
    ws = g.singular_weights(params.b)
    grad -= ws * np.abs(v) ** (params.p - 2.0) * v
    return grad


def mass_gradient(u: RadialField) -> np.ndarray:
    """Gradient of m2/2: the weighted field itself."""
    return u.grid.w * u.values


# ---------------------------------------------------------------------------
# Profile persistence
# ---------------------------------------------------------------------------

def save_profile(path, u: RadialField, params: ParameterSet,
                 extra_comments: list[str] | None = None) -> None:
    """Write `r,u` CSV with a parameter comment header (17 significant digits)."""
    g = u.grid
    lines = [
        f"# N={g.N:d}, q={params.q:.17g}, p={params.p:.17g}, "
        f"b={params.b:.17g}, R={g.R:.17g}, n={g.n:d}"
    ]
    for c in extra_comments or []:
        lines.append(f"# {c}")
    lines.append("r,u")
    for ri, vi in zip(g.r, u.values):
        lines.append(f"{ri:.17g},{vi:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_profile(path):
    """Read a profile CSV; returns (ParameterSet, RadialField).

    Derived parameter fields are recomputed from the header, and the grid is
    rebuilt from the stored nodes, so a save/load round trip is exact.
    """
    from .params import validate

    header: dict[str, str] = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for item in re.split(r",\s*", line[1:].strip()):
                    if "=" in item:
                        k, val = item.split("=", 1)
                        header.setdefault(k.strip(), val.strip())
                continue
            if line.lower() == "r,u":
                continue
            a, b = line.split(",")
            rows.append((float(a), float(b)))
    if not rows:
        raise InvalidGrid(f"no data rows in profile file {path}")
    r = np.array([x for x, _ in rows])
    v = np.array([y for _, y in rows])
    params = validate(int(header["N"]), float(header["q"]),
                      float(header["p"]), float(header["b"]))
    grid = RadialGrid(int(header["N"]), r)
    return params, RadialField(grid, v, metadata=f"loaded:{path}")
