"""Truncated single-mode Fock-space kernel.

States are dense Hermitian matrices over the number basis {|0>, ..., |N-1>}.
Nothing here assumes positivity: certifying (non-)positivity downstream is the
whole point, so constructors only guarantee hermiticity and record how much
probability mass the truncation discarded.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from math import exp, lgamma, log

import numpy as np

MIN_DIM = 2

__all__ = [
    "MIN_DIM",
    "NonHermitianError",
    "TruncatedState",
    "SpectralResult",
    "make_state",
    "vacuum_state",
    "fock_state",
    "coherent_state",
    "thermal_state",
    "random_pure_state",
    "displacement_element",
    "displacement_radial",
    "hermitian_spectrum",
    "parity_conjugate",
    "save_state",
    "load_state",
]


class NonHermitianError(ValueError):
    """Input matrix is farther from Hermitian than the tolerance allows."""


def _as_dim(dim) -> int:
    dim = int(dim)
    if dim < MIN_DIM:
        raise ValueError(f"need truncation dimension >= {MIN_DIM}, got {dim}")
    return dim


@dataclass(frozen=True, eq=False)
class TruncatedState:
    """Fock-basis operator: Hermitian, usually (but not necessarily) trace one.

    ``tail`` records the probability mass lost to levels >= dim (0 for exact
    constructions); quadrature code downstream refuses badly truncated input.
    """

    dim: int
    amplitudes: np.ndarray
    tail: float = 0.0
    label: str = "state"

    def __post_init__(self):
        object.__setattr__(self, "dim", _as_dim(self.dim))
        m = np.array(self.amplitudes, dtype=complex)
        if m.shape != (self.dim, self.dim):
            raise ValueError(f"amplitudes must be {self.dim}x{self.dim}, got {m.shape}")
        scale = max(1.0, float(np.abs(m).max()))
        if float(np.abs(m - m.conj().T).max()) > 1e-10 * scale:
            raise NonHermitianError("amplitudes are not Hermitian within 1e-10")
        m = 0.5 * (m + m.conj().T)  # M[m][n] == conj(M[n][m]) exactly
        m.flags.writeable = False
        object.__setattr__(self, "amplitudes", m)
        object.__setattr__(self, "tail", float(self.tail))

    @property
    def trace(self) -> float:
        return float(np.trace(self.amplitudes).real)

    @property
    def normalized(self) -> bool:
        return abs(self.trace - 1.0) <= 1e-8


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])


def vacuum_state(dim: int) -> TruncatedState:
    """Ground-state projector |0><0|."""
    return fock_state(0, dim, label="vacuum")


def fock_state(n: int, dim: int, label: str | None = None) -> TruncatedState:
    """Number-state projector |n><n|; requires n < dim."""
    dim = _as_dim(dim)
    n = int(n)
    if not 0 <= n < dim:
        raise ValueError(f"fock level {n} does not fit in dimension {dim}")
    m = np.zeros((dim, dim), dtype=complex)
    m[n, n] = 1.0
    return TruncatedState(dim, m, tail=0.0, label=label or f"fock:{n}")


def coherent_state(alpha: complex, dim: int) -> TruncatedState:
    """Coherent state |alpha><alpha| truncated to dim levels.

    Warns when the discarded Poisson tail exceeds 1e-10, i.e. when |alpha|^2
    is not small compared to the truncation.
    """
    dim = _as_dim(dim)
    alpha = complex(alpha)
    n = np.arange(dim)
    x = abs(alpha) ** 2
    if x == 0.0:
        amps = np.zeros(dim, dtype=complex)
        amps[0] = 1.0
        tail = 0.0
    else:
        logp = n * log(x) - np.array([lgamma(k + 1) for k in n]) - x
        amps = np.exp(0.5 * logp) * np.exp(1j * n * np.angle(alpha))
        tail = max(0.0, 1.0 - float(np.exp(logp).sum()))
    if tail > 1e-10:
        warnings.warn(
            f"coherent state |alpha|^2={x:.3g} poorly truncated at dim={dim} "
            f"(tail {tail:.3g})",
            stacklevel=2,
        )
    m = np.outer(amps, amps.conj())
    return TruncatedState(dim, m, tail=tail, label=f"coherent:{alpha}")


def thermal_state(v: float, dim: int) -> TruncatedState:
    """Thermal state with symmetric-ordered Gaussian width v = 2*nbar + 1.

    Level populations follow the geometric law p_k = (2/(1+v)) * ((v-1)/(v+1))^k.
    Rejects v < 1 (not a state; the analytic continuation below v=1 is produced
    only by channel maps, never by this constructor).
    """
    dim = _as_dim(dim)
    v = float(v)
    if v < 1.0:
        raise ValueError(f"thermal width must satisfy v >= 1, got {v}")
    ratio = (v - 1.0) / (v + 1.0)
    p = (2.0 / (1.0 + v)) * ratio ** np.arange(dim)
    tail = float(ratio**dim)
    return TruncatedState(dim, np.diag(p.astype(complex)), tail=tail, label=f"thermal:{v}")


def random_pure_state(seed: int, dim: int) -> TruncatedState:
    """Seeded random pure state: normalized complex-Gaussian amplitude vector."""
    dim = _as_dim(dim)
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    vec /= np.linalg.norm(vec)
    return TruncatedState(dim, np.outer(vec, vec.conj()), tail=0.0, label=f"random:{seed}")


def make_state(kind: str, dim: int) -> TruncatedState:
    """Build a state from a text descriptor.

    Recognized descriptors: ``vacuum``, ``fock:<n>``, ``coherent:<re>[,<im>]``,
    ``thermal:<v>``, ``random:<seed>``.
    """
    name, _, arg = kind.strip().partition(":")
    name = name.lower()
    if name == "vacuum":
        return vacuum_state(dim)
    if name == "fock":
        return fock_state(int(arg), dim)
    if name == "coherent":
        re, _, im = arg.partition(",")
        return coherent_state(complex(float(re), float(im) if im else 0.0), dim)
    if name == "thermal":
        return thermal_state(float(arg), dim)
    if name == "random":
        return random_pure_state(int(arg), dim)
    raise ValueError(f"unknown state descriptor {kind!r}")


def displacement_radial(
    dim: int, k: int, radii: np.ndarray, gauss_exponent: float = 0.0
) -> np.ndarray:
    """Radial parts of displacement matrix elements along the k-th diagonal.

    Returns G with shape (dim - k, len(radii)) where
    G[j, i] = <j+k| D(r_i) |j> for real r_i >= 0, i.e. the factor multiplying
    exp(i*k*theta) in <j+k| D(r e^{i theta}) |j>.

    Evaluated by the associated-Laguerre three-term recurrence with the
    sqrt(j!/(j+k)!) r^k exp(-r^2/2) prefactor folded in at every step, so each
    entry stays bounded by 1 (they are matrix elements of a unitary) and the
    recurrence is overflow-free up to dim of several hundred.

    ``gauss_exponent`` multiplies the result by exp(gauss_exponent * r^2 / 2)
    inside the recurrence seed; quadrature code uses it to balance growing and
    decaying integrand factors without overflowing either one.
    """
    if k < 0:
        raise ValueError("diagonal offset k must be >= 0")
    r = np.asarray(radii, dtype=float)
    x = r * r
    rows = dim - k
    if rows <= 0:
        return np.zeros((0, len(r)))
    out = np.empty((rows, len(r)))
    # G_0 = r^k e^{(gauss-1) r^2/2} / sqrt(k!)
    with np.errstate(divide="ignore"):
        logs = np.where(r > 0.0, k * np.log(np.where(r > 0.0, r, 1.0)), 0.0)
    g0 = np.exp(logs - 0.5 * (1.0 - gauss_exponent) * x - 0.5 * lgamma(k + 1))
    if k > 0:
        g0 = np.where(r > 0.0, g0, 0.0)
    out[0] = g0
    if rows > 1:
        out[1] = (1.0 + k - x) * np.sqrt(1.0 / (k + 1.0)) * g0
    for j in range(1, rows - 1):
        a = np.sqrt((j + 1.0) / (j + k + 1.0))
        b = np.sqrt(j * (j + 1.0) * (j + k) / (j + k + 1.0))
        out[j + 1] = ((2.0 * j + k + 1.0 - x) * a * out[j] - b * out[j - 1]) / (j + 1.0)
    return out


def displacement_element(m: int, n: int, xi: complex) -> complex:
    """Matrix element <m| D(xi) |n> of the displacement operator.

    For m >= n this is sqrt(n!/m!) xi^(m-n) e^{-|xi|^2/2} L_n^{(m-n)}(|xi|^2);
    the m < n case follows from <m|D(xi)|n> = conj(<n|D(-xi)|m>).
    """
    if m < 0 or n < 0:
        raise ValueError("Fock indices must be nonnegative")
    xi = complex(xi)
    if m < n:
        return displacement_element(n, m, -xi).conjugate()
    k = m - n
    r = abs(xi)
    radial = displacement_radial(m + 1, k, np.array([r]))[n, 0]
    phase = (xi / r) ** k if (k > 0 and r > 0.0) else 1.0
    return complex(phase * radial)


def hermitian_spectrum(
    matrix, tol_herm: float = 1e-10, tol_eig: float = 1e-12
) -> SpectralResult:
    """Eigendecomposition with hermiticity and reconstruction-residual checks.

    Accepts a TruncatedState or a raw square array. Raises NonHermitianError
    when the input deviates from Hermitian beyond tol_herm (relative to the
    largest entry); the decomposition must reconstruct the matrix to within
    tol_eig * max|M| or a RuntimeError is raised.
    """
    m = matrix.amplitudes if isinstance(matrix, TruncatedState) else np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.abs(m).max()))
    if float(np.abs(m - m.conj().T).max()) > tol_herm * scale:
        raise NonHermitianError(f"matrix is not Hermitian within {tol_herm:g}")
    m = 0.5 * (m + m.conj().T)
    vals, vecs = np.linalg.eigh(m)
    resid = float(np.abs(m - (vecs * vals) @ vecs.conj().T).max())
    ortho = float(np.abs(vecs.conj().T @ vecs - np.eye(m.shape[0])).max())
    if resid > tol_eig * scale or ortho > tol_eig:
        raise RuntimeError(
            f"eigensolver failed contract: residual {resid:.3g}, orthogonality {ortho:.3g}"
        )
    return SpectralResult(eigenvalues=vals, eigenvectors=vecs)


def parity_conjugate(rho: TruncatedState) -> TruncatedState:
    """Conjugate by the photon-number parity (half-period rotation a -> -a)."""
    signs = (-1.0) ** np.arange(rho.dim)
    m = rho.amplitudes * np.outer(signs, signs)
    return TruncatedState(rho.dim, m, tail=rho.tail, label=f"parity({rho.label})")


def save_state(rho: TruncatedState, path) -> None:
    """Write a state as JSON: row-major [re, im] pairs."""
    flat = rho.amplitudes.reshape(-1)
    payload = {
        "dim": rho.dim,
        "tail": rho.tail,
        "label": rho.label,
        "amplitudes": [[float(z.real), float(z.imag)] for z in flat],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_state(path) -> TruncatedState:
    """Inverse of save_state."""
    with open(path) as fh:
        payload = json.load(fh)
    dim = int(payload["dim"])
    pairs = payload["amplitudes"]
    if len(pairs) != dim * dim:
        raise ValueError(f"expected {dim * dim} amplitude pairs, got {len(pairs)}")
    m = np.array([complex(re, im) for re, im in pairs]).reshape(dim, dim)
    return TruncatedState(dim, m, tail=float(payload.get("tail", 0.0)), label=payload.get("label", "state"))
