"""s-ordered characteristic functions and quasiprobabilities.

Conventions (locked by the vacuum oracles in the test suite):

    chi_s(xi)   = exp(s |xi|^2 / 2) Tr(rho D(xi))
    Lambda_s(a) = pi^-2  integral  exp(a xi* - a* xi) chi_s(xi) d^2 xi

so that chi_s(0) = Tr(rho) = integral of Lambda_s, the vacuum Wigner function
is (2/pi) exp(-2|a|^2), and the duality pairing
integral Lambda_s(a; rho) Lambda_{-s}(a; sigma) d^2a equals Tr(rho sigma)/pi.

Everything is phase-covariant, so characteristic functions are stored as
angular harmonics over a 1-D radial Gauss-Legendre grid: harmonic k collects
the Fock pairs with n - m = k and the angular integrals are exact.  Every grid
carries the analytically known Gaussian envelope coefficient c (samples are
bounded by poly(r) * exp(c r^2/2)); transforms refuse to run when c >= 0
instead of integrating garbage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import lgamma, log, pi, sqrt

import numpy as np
from scipy.special import jv

from .fock import TruncatedState, displacement_radial

__all__ = [
    "DivergentReconstruction",
    "QuadratureUnderresolved",
    "PolarGrid",
    "CharFnGrid",
    "QuasiprobGrid",
    "check_ordering",
    "radial_gauss",
    "required_cutoff",
    "default_grid",
    "char_fn",
    "gaussian_char_fn",
    "convert_ordering",
    "quasiprob_from_charfn",
    "quasiprob_values",
    "reconstruct_state",
    "pairing",
    "save_quasiprob_csv",
    "charfn_to_json",
]


class DivergentReconstruction(RuntimeError):
    """The requested transform has a non-decaying integrand (image not trace class)."""


class QuadratureUnderresolved(RuntimeError):
    """Refining the radial quadrature moved the answer more than tolerated."""


# Envelope bookkeeping targets: integrand tails are pushed below exp(_LOG_TARGET)
# before quadrature, with _LOG_SLACK covering summation multiplicity.
_LOG_TARGET = log(1e-18)
_LOG_SLACK = log(1e4)
_BASE_NODES = 200


def check_ordering(s: float) -> float:
    s = float(s)
    if not -1.0 <= s <= 1.0:
        raise ValueError(f"ordering parameter must lie in [-1, 1], got {s}")
    return s


@lru_cache(maxsize=64)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def radial_gauss(cutoff: float, nodes: int):
    """Gauss-Legendre nodes and weights on [0, cutoff]."""
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    x, w = _leggauss(int(nodes))
    return cutoff * 0.5 * (x + 1.0), cutoff * 0.5 * w


@dataclass(frozen=True, eq=False)
class PolarGrid:
    """Radial Gauss-Legendre rule plus the angular-harmonic budget."""

    radii: np.ndarray
    weights: np.ndarray
    cutoff: float
    max_harmonic: int

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if self.cutoff <= 0:
            raise ValueError("cutoff must be positive")
        if r.shape != w.shape or r.ndim != 1:
            raise ValueError("radii and weights must be matching 1-D arrays")
        if np.any(np.diff(r) <= 0):
            raise ValueError("radial nodes must be strictly increasing")
        if abs(w.sum() - self.cutoff) > 1e-12 * max(1.0, self.cutoff):
            raise ValueError("weights do not integrate dr over [0, cutoff]")
        r.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "weights", w)

    @classmethod
    def gauss(cls, cutoff: float, nodes: int, max_harmonic: int) -> "PolarGrid":
        r, w = radial_gauss(cutoff, nodes)
        return cls(radii=r, weights=w, cutoff=float(cutoff), max_harmonic=int(max_harmonic))


def required_cutoff(terms, floor: float = 6.0, cap: float = 64.0, step: float = 0.25) -> float:
    """Smallest radial cutoff making the integrand envelope negligible.

    ``terms`` lists the integrand factors as (c, scale, degree) triplets whose
    envelopes are (scale*r)^degree / (degree/2)! * exp(c r^2 / 2).  The total
    Gaussian coefficient must be negative; otherwise the integral does not
    exist and DivergentReconstruction is raised.
    """
    terms = list(terms)
    ctot = sum(t[0] for t in terms)
    if ctot >= 0:
        raise DivergentReconstruction(
            f"integrand envelope exp({ctot:+.4g} r^2/2) does not decay"
        )

    def logbound(r: float) -> float:
        total = _LOG_SLACK - _LOG_TARGET  # want logbound(r) <= 0
        for c, scale, degree in terms:
            total += 0.5 * c * r * r
            if degree > 0 and scale > 0:
                half = degree / 2.0
                t = degree * log(scale * r) - lgamma(half + 1.0) + log(half + 1.0)
                total += max(t, 0.0)
        return total

    r = floor
    while r <= cap:
        if logbound(r) <= 0.0 and logbound(r + step) <= 0.0:
            return r
        r += step
    raise QuadratureUnderresolved(
        f"no radial cutoff below {cap} tames the integrand (c_total={ctot:.4g})"
    )


def _auto_nodes(cutoff: float, max_harmonic: int, base: int | None = None) -> int:
    base = _BASE_NODES if base is None else int(base)
    return max(base, int(12 * cutoff) + 1, 3 * max_harmonic)


# ---------------------------------------------------------------------------
# Radial-profile evaluators (symmetric ordering).  A profile knows how to
# produce any angular harmonic at any radii, so channel maps can resample
# chi(A xi) exp(-B |xi|^2 / 2) exactly instead of interpolating samples.
# ---------------------------------------------------------------------------


class _FockProfile:
    """chi_0 harmonics of a Fock-basis operator.

    ``gauss`` folds an extra exp(gauss r^2/2) into the evaluation at the
    recurrence seed, so callers can balance growing factors against decaying
    partners without overflowing intermediates.
    """

    def __init__(self, state: TruncatedState):
        self._amps = state.amplitudes
        self.dim = state.dim
        rows, cols = np.nonzero(state.amplitudes)
        if len(rows) == 0:
            top, band = 0, 0
        else:
            top = int(max(rows.max(), cols.max()))
            band = int(np.abs(cols - rows).max())
        self.kmax = band
        self.c0 = -1.0
        self.degree = 2 * top  # polynomial degree follows actual occupancy
        self.poly_scale = 1.0
        self.tail = state.tail

    def harmonic(self, k: int, radii: np.ndarray, gauss: float = 0.0) -> np.ndarray:
        amps = self._amps
        n = self.dim
        if abs(k) > self.kmax:
            return np.zeros(len(radii), dtype=complex)
        g = displacement_radial(n, abs(k), radii, gauss_exponent=gauss)
        if k >= 0:
            coeff = np.array([amps[m, m + k] for m in range(n - k)])
            return coeff @ g.astype(complex)
        coeff = np.array([amps[m, m + k] for m in range(-k, n)])
        return (-1.0) ** k * (coeff @ g.astype(complex))

    def scaled(self, a: float, b: float) -> "_ScaledProfile":
        return _ScaledProfile(self, a, b)


class _GaussianProfile:
    """chi_0(xi) = exp(-v |xi|^2 / 2): thermal-family Gaussian, harmonic 0 only."""

    def __init__(self, v: float):
        self.width = float(v)
        self.kmax = 0
        self.c0 = -float(v)
        self.degree = 0
        self.poly_scale = 0.0
        self.tail = 0.0

    def harmonic(self, k: int, radii: np.ndarray, gauss: float = 0.0) -> np.ndarray:
        if k != 0:
            return np.zeros(len(radii), dtype=complex)
        x = np.asarray(radii) ** 2
        return np.exp(0.5 * (gauss - self.width) * x).astype(complex)

    def scaled(self, a: float, b: float) -> "_ScaledProfile":
        return _ScaledProfile(self, a, b)


class _ScaledProfile:
    """base profile dilated by a and damped by exp(-b r^2/2) (symbolic compose)."""

    def __init__(self, base, a: float, b: float):
        self._base = base
        self._a = float(a)
        self._b = float(b)
        self.kmax = base.kmax if a != 0.0 else 0
        self.c0 = a * a * base.c0 - b
        self.degree = base.degree if a != 0.0 else 0
        self.poly_scale = abs(a) * base.poly_scale
        self.tail = base.tail

    def harmonic(self, k: int, radii: np.ndarray, gauss: float = 0.0) -> np.ndarray:
        radii = np.asarray(radii, dtype=float)
        a, b = self._a, self._b
        if a == 0.0:
            # constant map: chi(0) * exp((gauss - b) r^2 / 2)
            base0 = self._base.harmonic(k, np.array([0.0]))
            return base0[0] * np.exp(0.5 * (gauss - b) * radii**2)
        # push the damping and tempering into the base evaluation (inner
        # coordinates x = |a| r) so no intermediate factor overflows
        vals = self._base.harmonic(k, abs(a) * radii, gauss=(gauss - b) / (a * a))
        if a < 0 and (k % 2):
            vals = -vals
        return vals

    def scaled(self, a: float, b: float) -> "_ScaledProfile":
        return _ScaledProfile(self, a, b)


@dataclass(frozen=True, eq=False)
class CharFnGrid:
    """Sampled s-ordered characteristic function on a polar grid.

    ``values[j, i]`` is the harmonic ``harmonics[j]`` radial profile at node i,
    already carrying the exp(s r^2/2) ordering factor.  ``envelope`` bounds the
    samples by poly(r) * exp(envelope r^2/2); ``source_tail`` is the truncation
    tail of the originating state.
    """

    ordering: float
    grid: PolarGrid
    harmonics: np.ndarray
    values: np.ndarray
    envelope: float
    source_tail: float
    profile: object = field(repr=False)

    def at_origin(self) -> complex:
        """chi_s(0), i.e. the trace of the underlying operator."""
        return complex(self.profile.harmonic(0, np.array([0.0]))[0])

    def harmonic_values(self, k: int) -> np.ndarray:
        idx = int(k) + (len(self.harmonics) - 1) // 2
        if not 0 <= idx < len(self.harmonics):
            return np.zeros(len(self.grid.radii), dtype=complex)
        return self.values[idx]


def _materialize(profile, s: float, grid: PolarGrid) -> CharFnGrid:
    kmax = min(profile.kmax, grid.max_harmonic)
    ks = np.arange(-kmax, kmax + 1)
    factor = np.exp(0.5 * s * grid.radii**2)
    values = np.empty((len(ks), len(grid.radii)), dtype=complex)
    for j, k in enumerate(ks):
        values[j] = profile.harmonic(int(k), grid.radii) * factor
    return CharFnGrid(
        ordering=s,
        grid=grid,
        harmonics=ks,
        values=values,
        envelope=profile.c0 + s,
        source_tail=profile.tail,
        profile=profile,
    )


def default_grid(profile, s: float = 0.0, nodes: int | None = None, cutoff: float | None = None) -> PolarGrid:
    """Materialization grid for a profile at ordering s.

    Falls back to a fixed cutoff when the envelope at this ordering does not
    decay (legal for sampling; only transforms require decay).
    """
    kmax = profile.kmax
    if cutoff is None:
        try:
            cutoff = required_cutoff([(profile.c0 + s, profile.poly_scale, profile.degree)])
        except (DivergentReconstruction, QuadratureUnderresolved):
            cutoff = 8.0
    n = _auto_nodes(cutoff, kmax, nodes)
    return PolarGrid.gauss(cutoff, n, max(kmax, 1))


def char_fn(rho: TruncatedState, s: float = 0.0, grid: PolarGrid | None = None) -> CharFnGrid:
    """s-ordered characteristic function of a Fock-basis state.

    chi_s(xi) = e^{s|xi|^2/2} sum_{mn} rho_{mn} <n|D(xi)|m>, stored as angular
    harmonics (harmonic k collects the pairs with n - m = k).
    """
    s = check_ordering(s)
    if rho.tail > 1e-6:
        raise ValueError(f"state truncation tail {rho.tail:.3g} exceeds 1e-6")
    profile = _FockProfile(rho)
    if grid is None:
        grid = default_grid(profile, s)
    return _materialize(profile, s, grid)


def gaussian_char_fn(v: float, s: float = 0.0, grid: PolarGrid | None = None) -> CharFnGrid:
    """Characteristic grid of the Gaussian chi_0 = exp(-v |xi|^2/2).

    v >= 1 is a thermal state; v < 1 is the analytic continuation used to
    exhibit non-positive map outputs.
    """
    s = check_ordering(s)
    profile = _GaussianProfile(v)
    if grid is None:
        grid = default_grid(profile, s)
    return _materialize(profile, s, grid)


def convert_ordering(chi: CharFnGrid, s_new: float) -> CharFnGrid:
    """Reweight a characteristic grid to a different ordering.

    Pure pointwise multiplication by exp((s_new - s_old)|xi|^2/2); divergence
    concerns belong to the transforms, not to this relabeling.
    """
    s_new = check_ordering(s_new)
    factor = np.exp(0.5 * (s_new - chi.ordering) * chi.grid.radii**2)
    return CharFnGrid(
        ordering=s_new,
        grid=chi.grid,
        harmonics=chi.harmonics,
        values=chi.values * factor,
        envelope=chi.envelope + (s_new - chi.ordering),
        source_tail=chi.source_tail,
        profile=chi.profile,
    )


@dataclass(frozen=True, eq=False)
class QuasiprobGrid:
    """Real quasiprobability samples on a polar alpha-grid."""

    ordering: float
    radii: np.ndarray
    weights: np.ndarray
    angles: np.ndarray
    values: np.ndarray  # shape (len(radii), len(angles))

    def integral(self) -> float:
        dphi = 2.0 * pi / len(self.angles)
        ring = self.values.sum(axis=1) * dphi
        return float(np.sum(self.weights * self.radii * ring))


def _hankel_sums(chi: CharFnGrid, alpha_r: np.ndarray) -> dict[int, np.ndarray]:
    """H_k(rho) = integral J_k(2 rho r) chi^{(k)}(r) r dr per harmonic."""
    prof = chi.profile
    s = chi.ordering
    env = prof.c0 + s
    if env >= 0:
        raise DivergentReconstruction(
            f"quasiprobability at ordering {s:+.3g} has envelope exp({env:+.3g} r^2/2)"
        )
    cutoff = required_cutoff([(env, prof.poly_scale, prof.degree)])
    kmax = prof.kmax
    r, w = radial_gauss(cutoff, _auto_nodes(cutoff, kmax))
    factor = r * w
    sums: dict[int, np.ndarray] = {}
    for k in range(0, kmax + 1):
        radial = prof.harmonic(k, r, gauss=s) * factor
        sums[k] = np.asarray([(jv(k, 2.0 * ra * r) * radial).sum() for ra in alpha_r])
        if k > 0:
            # hermiticity: chi^{(-k)} = (-1)^k conj(chi^{(k)}), J_{-k} = (-1)^k J_k
            sums[-k] = np.conj(sums[k])
    return sums


def quasiprob_values(chi: CharFnGrid, alphas) -> np.ndarray:
    """Evaluate Lambda_s at arbitrary complex phase-space points."""
    alphas = np.asarray(alphas, dtype=complex).ravel()
    ar = np.abs(alphas)
    phi = np.angle(alphas)
    sums = _hankel_sums(chi, ar)
    total = sums[0].astype(complex)
    for k in range(1, chi.profile.kmax + 1):
        total += np.exp(1j * k * phi) * sums[k] + np.exp(-1j * k * phi) * sums[-k]
    vals = (2.0 / pi) * total
    if np.abs(vals.imag).max(initial=0.0) > 1e-9:
        raise QuadratureUnderresolved("quasiprobability acquired imaginary part > 1e-9")
    return vals.real


def quasiprob_from_charfn(
    chi: CharFnGrid,
    alpha_cutoff: float | None = None,
    alpha_nodes: int = 160,
    n_angles: int | None = None,
) -> QuasiprobGrid:
    """Fourier-transform a characteristic grid to its quasiprobability.

    Radial quadrature per angular harmonic (Hankel sums); output is real.
    Raises DivergentReconstruction when the integrand does not decay, e.g. the
    P-function of a pure Fock state.
    """
    prof = chi.profile
    env = prof.c0 + chi.ordering
    if env >= 0:
        raise DivergentReconstruction(
            f"quasiprobability at ordering {chi.ordering:+.3g} is not a function"
        )
    if alpha_cutoff is None:
        alpha_cutoff = sqrt(0.5 * max(prof.kmax, 1)) + sqrt(2.0 * 18.4 / abs(env))
    kmax = prof.kmax
    if n_angles is None:
        n_angles = max(64, 2 * kmax + 4)
    ar, aw = radial_gauss(alpha_cutoff, alpha_nodes)
    angles = np.arange(n_angles) * (2.0 * pi / n_angles)
    sums = _hankel_sums(chi, ar)
    vals = np.tile(sums[0].reshape(-1, 1).astype(complex), (1, n_angles))
    for k in range(1, kmax + 1):
        phase = np.exp(1j * k * angles)
        vals += np.outer(sums[k], phase) + np.outer(sums[-k], phase.conj())
    vals *= 2.0 / pi
    if np.abs(vals.imag).max(initial=0.0) > 1e-9:
        raise QuadratureUnderresolved("quasiprobability acquired imaginary part > 1e-9")
    return QuasiprobGrid(
        ordering=chi.ordering, radii=ar, weights=aw, angles=angles, values=vals.real
    )


def reconstruct_state(
    chi: CharFnGrid,
    dim: int,
    verify: bool = False,
    cutoff_scale: float = 1.0,
    node_scale: float = 1.0,
) -> TruncatedState:
    """Invert a characteristic grid back to a Fock-basis operator.

    rho_{nq} = pi^-1 integral chi_0(xi) <n|D(-xi)|q> d^2 xi, evaluated per
    angular harmonic with a radial rule sized from the analytic envelope.
    With verify=True the integral is repeated on a grid with doubled cutoff
    and node count; a max-element shift above 1e-8 raises
    QuadratureUnderresolved.
    """
    prof = chi.profile
    if prof.c0 >= 0:
        raise DivergentReconstruction(
            f"symmetric-ordered envelope exp({prof.c0:+.4g} r^2/2) is not trace class"
        )

    def build(cscale: float, nscale: float) -> np.ndarray:
        cutoff = cscale * required_cutoff(
            [(prof.c0, prof.poly_scale, prof.degree), (-1.0, 1.0, 2 * (dim - 1))]
        )
        nodes = int(nscale * _auto_nodes(cutoff, max(prof.kmax, dim - 1)))
        r, w = radial_gauss(cutoff, nodes)
        rw = r * w
        balance = 0.5 * (-1.0 - prof.c0)  # equalize source/kernel envelopes
        out = np.zeros((dim, dim), dtype=complex)
        for k in range(0, dim):
            if k > prof.kmax:
                break
            src = prof.harmonic(k, r, gauss=balance) * rw
            g = displacement_radial(dim, k, r, gauss_exponent=-balance)
            col = 2.0 * (g @ src)  # col[n] = rho[n, n+k]
            for n_idx in range(dim - k):
                out[n_idx, n_idx + k] = col[n_idx]
                if k > 0:
                    out[n_idx + k, n_idx] = np.conj(col[n_idx])
        return out

    m = build(cutoff_scale, node_scale)
    if verify:
        m2 = build(2.0 * cutoff_scale, 2.0 * node_scale)
        shift = float(np.abs(m - m2).max())
        if shift > 1e-8:
            raise QuadratureUnderresolved(
                f"doubling the radial rule moved a matrix element by {shift:.3g}"
            )
    trace = float(np.trace(m).real)
    return TruncatedState(dim, m, tail=abs(1.0 - trace), label="reconstructed")


def _pair_profiles(prof_a, prof_b, cutoff_scale: float = 1.0, node_scale: float = 1.0) -> float:
    """(1/pi) integral chi_a,0(xi) chi_b,0(-xi) d^2 xi for Hermitian sources."""
    terms = [
        (prof_a.c0, prof_a.poly_scale, prof_a.degree),
        (prof_b.c0, prof_b.poly_scale, prof_b.degree),
    ]
    cutoff = cutoff_scale * required_cutoff(terms)
    kmax = min(prof_a.kmax, prof_b.kmax)
    nodes = int(node_scale * _auto_nodes(cutoff, max(prof_a.kmax, prof_b.kmax)))
    r, w = radial_gauss(cutoff, nodes)
    rw = r * w
    balance = 0.5 * (prof_b.c0 - prof_a.c0)  # equalize the two envelopes
    a0 = prof_a.harmonic(0, r, gauss=balance)
    b0 = prof_b.harmonic(0, r, gauss=-balance)
    total = float(np.real(np.sum(a0 * np.conj(b0) * rw)))
    for k in range(1, kmax + 1):
        ak = prof_a.harmonic(k, r, gauss=balance)
        bk = prof_b.harmonic(k, r, gauss=-balance)
        total += 2.0 * float(np.real(np.sum(ak * np.conj(bk) * rw)))
    return 2.0 * total


def pairing(rho: TruncatedState, sigma: TruncatedState, s: float = 0.0) -> float:
    """Duality pairing integral Lambda_s(a; rho) Lambda_{-s}(a; sigma) d^2 a.

    Computed in characteristic-function space (Parseval), where the opposite
    ordering factors cancel pointwise; the value is Tr(rho sigma)/pi for every
    ordering, and its sign against all positive sigma witnesses positivity of
    rho.
    """
    check_ordering(s)
    return _pair_profiles(_FockProfile(rho), _FockProfile(sigma)) / pi


def save_quasiprob_csv(qp: QuasiprobGrid, path) -> None:
    """Plot-ready CSV with columns re_alpha, im_alpha, value."""
    with open(path, "w") as fh:
        fh.write("re_alpha,im_alpha,value\n")
        for i, r in enumerate(qp.radii):
            for j, phi in enumerate(qp.angles):
                fh.write(
                    f"{r * np.cos(phi):.12g},{r * np.sin(phi):.12g},{qp.values[i, j]:.12g}\n"
                )


def charfn_to_json(chi: CharFnGrid) -> str:
    """Debug export of a characteristic grid."""
    payload = {
        "ordering": chi.ordering,
        "cutoff": chi.grid.cutoff,
        "envelope": chi.envelope,
        "source_tail": chi.source_tail,
        "harmonics": [int(k) for k in chi.harmonics],
        "radii": [float(x) for x in chi.grid.radii],
        "values_re": chi.values.real.tolist(),
        "values_im": chi.values.imag.tolist(),
    }
    return json.dumps(payload)
