"""Exact Gaussian fast path: covariance propagation, thermal-scalar positivity,
two-mode squeezed probes, and the PPT / classicality tests that locate the
entanglement-breaking and nonclassicality-breaking thresholds analytically.

Convention: chi_0(L) = exp(-1/2 L^T V L) with vacuum V = identity, so the
single-mode thermal scalar v equals 2*nbar + 1 and physicality is V + i*Omega
>= 0 with the standard symplectic form Omega.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from math import cosh, sinh

import numpy as np

from .channels import ChannelSpec, collapse

__all__ = [
    "CovarianceModel",
    "vacuum_cov",
    "thermal_cov",
    "tmsv",
    "symplectic_form",
    "physicality_margin",
    "propagate",
    "thermal_positivity",
    "ppt_test",
    "classicality_test",
    "ThresholdReport",
    "threshold_report",
    "ppt_flip_point",
    "classicality_flip_point",
]

_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """Mean vector and symmetric covariance matrix of a Gaussian state.

    One or two modes; quadrature ordering (q1, p1[, q2, p2]).  Physicality is
    not enforced: channel sweeps legitimately produce analytic continuations
    below the vacuum line.
    """

    modes: int
    matrix: np.ndarray
    mean: np.ndarray

    def __post_init__(self):
        if self.modes not in (1, 2):
            raise ValueError("only 1- or 2-mode models supported")
        n = 2 * self.modes
        v = np.asarray(self.matrix, dtype=float)
        mu = np.asarray(self.mean, dtype=float)
        if v.shape != (n, n):
            raise ValueError(f"covariance must be {n}x{n}")
        if np.abs(v - v.T).max() > 1e-12 * max(1.0, np.abs(v).max()):
            raise ValueError("covariance must be symmetric")
        if mu.shape != (n,):
            raise ValueError(f"mean must have length {n}")
        v = 0.5 * (v + v.T)
        v.flags.writeable = False
        mu = mu.copy()
        mu.flags.writeable = False
        object.__setattr__(self, "matrix", v)
        object.__setattr__(self, "mean", mu)


def vacuum_cov(modes: int = 1) -> CovarianceModel:
    n = 2 * modes
    return CovarianceModel(modes, np.eye(n), np.zeros(n))


def thermal_cov(v: float) -> CovarianceModel:
    return CovarianceModel(1, float(v) * np.eye(2), np.zeros(2))


def tmsv(r: float) -> CovarianceModel:
    """Two-mode squeezed vacuum with squeezing parameter r >= 0."""
    if r < 0:
        raise ValueError("squeezing parameter must be >= 0")
    c, s = cosh(2.0 * r), sinh(2.0 * r)
    sz = np.diag([1.0, -1.0])
    v = np.block([[c * np.eye(2), s * sz], [s * sz, c * np.eye(2)]])
    return CovarianceModel(2, v, np.zeros(4))


def symplectic_form(modes: int) -> np.ndarray:
    omega = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(modes), omega)


def physicality_margin(g: CovarianceModel) -> float:
    """Min eigenvalue of V + i*Omega; >= 0 iff the model is a quantum state."""
    omega = symplectic_form(g.modes)
    h = g.matrix.astype(complex) + 1j * omega
    return float(np.linalg.eigvalsh(h)[0])


def propagate(spec: ChannelSpec, g: CovarianceModel, acting_mode: int = 0) -> CovarianceModel:
    """Push a covariance model through a channel acting on one mode.

    The collapsed (scale a, noise b) action sends the acted block B to
    a^2 B + b*I and scales cross covariances by a; total covariance arithmetic,
    no positivity requirement.
    """
    action = collapse(spec)
    a, b = action.scale, action.noise
    n = 2 * g.modes
    if not 0 <= acting_mode < g.modes:
        raise ValueError(f"acting mode {acting_mode} out of range for {g.modes} modes")
    s = np.eye(n)
    sl = slice(2 * acting_mode, 2 * acting_mode + 2)
    s[sl, sl] = a * np.eye(2)
    add = np.zeros((n, n))
    add[sl, sl] = b * np.eye(2)
    return CovarianceModel(g.modes, s @ g.matrix @ s.T + add, s @ g.mean)


def thermal_positivity(v: float, s: float = 0.0, tol: float = _TOL) -> str:
    """Is exp(-v |xi|^2/2) at ordering s the characteristic function of a state?

    The Gaussian qualifies iff v >= 1 - s (an uncertainty-principle statement;
    equality is the ground state).  At symmetric ordering this is the thermal
    scalar condition v >= 1.
    """
    return "positive" if float(v) >= (1.0 - float(s)) - tol else "non-positive"


def ppt_test(g: CovarianceModel, tol: float = _TOL):
    """Partial-transpose test on a two-mode model.

    Flips the sign of the second mode's momentum and checks V + i*Omega >= 0;
    returns (verdict, margin) with verdict 'npt' when the margin is negative,
    i.e. entanglement is detected.
    """
    if g.modes != 2:
        raise ValueError("ppt_test needs a two-mode model")
    t = np.diag([1.0, 1.0, 1.0, -1.0])
    flipped = CovarianceModel(2, t @ g.matrix @ t, t @ g.mean)
    margin = physicality_margin(flipped)
    return ("npt" if margin < -tol else "ppt", margin)


def classicality_test(g: CovarianceModel, tol: float = _TOL):
    """Does the model have a nonnegative P-function?

    Gaussian states are classical iff V - I >= 0; returns (verdict, margin)
    with margin the minimum eigenvalue of V - I.
    """
    n = 2 * g.modes
    margin = float(np.linalg.eigvalsh(g.matrix - np.eye(n))[0])
    return ("classical" if margin >= -tol else "nonclassical", margin)


@dataclass(frozen=True)
class ThresholdReport:
    """Noise thresholds of an attenuation/amplification map at fixed scale."""

    family: str
    a: float
    b: float
    cp_threshold: float
    eb_threshold: float
    nb_threshold: float
    zone: str
    is_cp: bool
    is_eb: bool
    is_nb: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def threshold_report(family: str, a: float, b: float, tol: float = _TOL) -> ThresholdReport:
    """CP / EB / NB verdicts of the noisy attenuation or amplification map.

    Complete positivity requires b >= |1 - a^2|; entanglement breaking and
    nonclassicality breaking coincide at b >= 1 + a^2.
    """
    a, b = float(a), float(b)
    if family == "attenuator":
        if abs(a) > 1.0:
            raise ValueError("attenuator requires |a| <= 1")
        cp = 1.0 - a * a
    elif family == "amplifier":
        if abs(a) < 1.0:
            raise ValueError("amplifier requires |a| >= 1")
        cp = a * a - 1.0
    else:
        raise ValueError(f"unknown family {family!r}")
    eb = 1.0 + a * a
    is_cp = b >= cp - tol
    is_eb = b >= eb - tol
    zone = "EB_NB" if is_eb else ("CP" if is_cp else "NP")
    return ThresholdReport(
        family=family,
        a=a,
        b=b,
        cp_threshold=cp,
        eb_threshold=eb,
        nb_threshold=eb,
        zone=zone,
        is_cp=is_cp,
        is_eb=is_eb,
        is_nb=is_eb,
    )


def _noisy_spec(a: float, b: float) -> ChannelSpec:
    from .channels import NoisyAmplifier, NoisyAttenuator

    return NoisyAttenuator(a, b) if abs(a) <= 1.0 else NoisyAmplifier(a, b)


def _bisect_flip(margin_fn, b_lo: float, b_hi: float, tol_b: float) -> float:
    m_lo, m_hi = margin_fn(b_lo), margin_fn(b_hi)
    if m_lo >= 0 or m_hi < 0:
        raise ValueError(
            f"no margin sign change in bracket [{b_lo}, {b_hi}] "
            f"(margins {m_lo:.3g}, {m_hi:.3g})"
        )
    while b_hi - b_lo > tol_b:
        mid = 0.5 * (b_lo + b_hi)
        if margin_fn(mid) < 0:
            b_lo = mid
        else:
            b_hi = mid
    return 0.5 * (b_lo + b_hi)


def ppt_flip_point(a: float, r: float, b_lo: float = 0.0, b_hi: float | None = None,
                   tol_b: float = 1e-10) -> float:
    """Noise level where the channel output on one arm of tmsv(r) turns PPT."""
    if b_hi is None:
        b_hi = 2.0 + 2.0 * a * a

    def margin(b: float) -> float:
        out = propagate(_noisy_spec(a, b), tmsv(r), acting_mode=1)
        return ppt_test(out, tol=0.0)[1]

    return _bisect_flip(margin, b_lo, b_hi, tol_b)


def classicality_flip_point(a: float, r: float, b_lo: float = 0.0, b_hi: float | None = None,
                            tol_b: float = 1e-10) -> float:
    """Noise level where the two-mode output P-function turns nonnegative."""
    if b_hi is None:
        b_hi = 2.0 + 2.0 * a * a

    def margin(b: float) -> float:
        out = propagate(_noisy_spec(a, b), tmsv(r), acting_mode=1)
        return classicality_test(out, tol=0.0)[1]

    return _bisect_flip(margin, b_lo, b_hi, tol_b)
