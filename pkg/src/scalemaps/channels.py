"""The map zoo: quasiprobability scaling maps, classical noise, quantum-limited
attenuator/amplifier channels, their Kraus representations, compositions, and
the 2x2 scaling-matrix reduction.

Every map here is phase covariant and collapses symbolically to a pair
(scale, noise) acting on the symmetric-ordered characteristic function as

    chi_0(xi)  ->  chi_0(scale * xi) * exp(-noise * |xi|^2 / 2).

Compositions are folded on this pair before any numerics run, so divergence
detection never depends on sampled values.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma, log, sqrt
from typing import Tuple, Union

import numpy as np

from .fock import TruncatedState, displacement_radial
from .quasiprob import (
    CharFnGrid,
    DivergentReconstruction,
    _auto_nodes,
    _materialize,
    char_fn,
    check_ordering,
    default_grid,
    radial_gauss,
    reconstruct_state,
    required_cutoff,
)

__all__ = [
    "Scaling",
    "DualScaling",
    "ClassicalNoise",
    "QLAttenuator",
    "QLAmplifier",
    "NoisyAttenuator",
    "NoisyAmplifier",
    "Compose",
    "ChannelSpec",
    "ChannelParseError",
    "ScaleNoise",
    "collapse",
    "decompose",
    "apply_charfn",
    "apply_to_state",
    "KrausSet",
    "kraus_attenuator",
    "kraus_amplifier",
    "apply_kraus",
    "transfer_tensor",
    "ScalingMatrixReduction",
    "reduce_scaling_matrix",
    "parse_channel",
    "format_channel",
]


@dataclass(frozen=True)
class Scaling:
    """Dilation of the s-ordered quasiprobability by its scale parameter."""

    ordering: float
    scale: float

    def __post_init__(self):
        check_ordering(self.ordering)


@dataclass(frozen=True)
class DualScaling:
    """Adjoint partner of Scaling: acts at the opposite ordering with inverse scale."""

    ordering: float
    scale: float

    def __post_init__(self):
        check_ordering(self.ordering)
        if self.scale == 0.0:
            raise ValueError("dual scaling needs a nonzero scale")


@dataclass(frozen=True)
class ClassicalNoise:
    """Gaussian damping exp(-noise |xi|^2/2); CP for noise >= 0, non-positive below."""

    noise: float


@dataclass(frozen=True)
class QLAttenuator:
    """Quantum-limited attenuator: the P-function scaling with 0 < |kappa| <= 1."""

    kappa: float

    def __post_init__(self):
        if not 0.0 < abs(self.kappa) <= 1.0:
            raise ValueError(f"attenuator needs 0 < |kappa| <= 1, got {self.kappa}")


@dataclass(frozen=True)
class QLAmplifier:
    """Quantum-limited amplifier: the Q-function scaling with |kappa| >= 1."""

    kappa: float

    def __post_init__(self):
        if abs(self.kappa) < 1.0:
            raise ValueError(f"amplifier needs |kappa| >= 1, got {self.kappa}")


@dataclass(frozen=True)
class NoisyAttenuator:
    """Classical noise after a symmetric-ordered scaling with |kappa| <= 1."""

    kappa: float
    noise: float

    def __post_init__(self):
        if abs(self.kappa) > 1.0:
            raise ValueError(f"noisy attenuator needs |kappa| <= 1, got {self.kappa}")


@dataclass(frozen=True)
class NoisyAmplifier:
    """Classical noise after a symmetric-ordered scaling with |kappa| >= 1."""

    kappa: float
    noise: float

    def __post_init__(self):
        if abs(self.kappa) < 1.0:
            raise ValueError(f"noisy amplifier needs |kappa| >= 1, got {self.kappa}")


@dataclass(frozen=True)
class Compose:
    """Composition of channel specs, applied right to left."""

    parts: Tuple["ChannelSpec", ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("empty composition")


ChannelSpec = Union[
    Scaling,
    DualScaling,
    ClassicalNoise,
    QLAttenuator,
    QLAmplifier,
    NoisyAttenuator,
    NoisyAmplifier,
    Compose,
]


@dataclass(frozen=True)
class ScaleNoise:
    """Collapsed symmetric-ordered action chi_0(xi) -> chi_0(a xi) e^{-b|xi|^2/2}."""

    scale: float
    noise: float

    def then(self, other: "ScaleNoise") -> "ScaleNoise":
        """Apply self first, then other."""
        return ScaleNoise(
            scale=self.scale * other.scale,
            noise=other.noise + other.scale**2 * self.noise,
        )


def collapse(spec: ChannelSpec) -> ScaleNoise:
    """Fold any channel spec into its exact symmetric-ordered (scale, noise) pair."""
    if isinstance(spec, Scaling):
        return ScaleNoise(spec.scale, spec.ordering * (1.0 - spec.scale**2))
    if isinstance(spec, DualScaling):
        a = 1.0 / spec.scale
        return ScaleNoise(a, -spec.ordering * (1.0 - a * a))
    if isinstance(spec, ClassicalNoise):
        return ScaleNoise(1.0, spec.noise)
    if isinstance(spec, QLAttenuator):
        return collapse(Scaling(1.0, spec.kappa))
    if isinstance(spec, QLAmplifier):
        return collapse(Scaling(-1.0, spec.kappa))
    if isinstance(spec, (NoisyAttenuator, NoisyAmplifier)):
        return ScaleNoise(spec.kappa, spec.noise)
    if isinstance(spec, Compose):
        action = ScaleNoise(1.0, 0.0)
        for part in reversed(spec.parts):
            action = action.then(collapse(part))
        return action
    raise TypeError(f"not a channel spec: {spec!r}")


def decompose(spec: Scaling) -> Compose:
    """Split a scaling map into classical noise after the symmetric-ordered dilation.

    Algebraically exact: the noise term is ordering * (1 - scale^2).
    """
    if not isinstance(spec, Scaling):
        raise TypeError("decompose applies to Scaling specs")
    b = spec.ordering * (1.0 - spec.scale**2)
    return Compose((ClassicalNoise(b), Scaling(0.0, spec.scale)))


def apply_charfn(spec: ChannelSpec, chi: CharFnGrid) -> CharFnGrid:
    """Push a characteristic grid through a channel.

    The grid's evaluator is rescaled exactly (no interpolation) and the result
    is rematerialized at the input's ordering label on a freshly sized grid.
    Never raises for divergent parameter choices; divergence surfaces at
    reconstruction time via the envelope tracker.
    """
    action = collapse(spec)
    profile = chi.profile.scaled(action.scale, action.noise)
    grid = default_grid(profile, chi.ordering)
    return _materialize(profile, chi.ordering, grid)


def apply_to_state(
    spec: ChannelSpec, rho: TruncatedState, verify: bool = False
) -> TruncatedState:
    """Apply a channel to a Fock-basis state via the characteristic function.

    Pipeline: char_fn -> apply_charfn -> reconstruct_state.  Requires the
    output envelope to decay (DivergentReconstruction otherwise).  The output
    dimension matches the input; any probability mass the map pushes above the
    truncation shows up in the result's tail field.
    """
    chi = char_fn(rho, 0.0)
    out = apply_charfn(spec, chi)
    state = reconstruct_state(out, rho.dim, verify=verify)
    return TruncatedState(
        state.dim, state.amplitudes, tail=state.tail, label=f"{format_channel(spec)}({rho.label})"
    )


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Operator-sum representation of a channel on the truncated space."""

    dim: int
    operators: Tuple[np.ndarray, ...]
    source: ChannelSpec

    def completeness_defect(self, levels: int | None = None) -> float:
        """Max deviation of sum_k A_k^dag A_k from the identity on the lowest levels.

        Exact zero for attenuators; for amplifiers it equals the probability
        mass the channel pushes above the truncation window, so it grows with
        gain and level.
        """
        levels = self.dim // 2 if levels is None else int(levels)
        acc = np.zeros((self.dim, self.dim), dtype=complex)
        for op in self.operators:
            acc += op.conj().T @ op
        block = acc[:levels, :levels] - np.eye(levels)
        return float(np.abs(block).max())


def _binom_sqrt(n: int, k: int) -> float:
    return np.exp(0.5 * (lgamma(n + 1) - lgamma(k + 1) - lgamma(n - k + 1)))


def kraus_attenuator(kappa: float, dim: int) -> KrausSet:
    """Kraus operators of the quantum-limited attenuator.

    A_k = sum_{n >= k} sqrt(C(n,k)) (1-kappa^2)^{k/2} kappa^{n-k} |n-k><n|.
    Completeness sum_k A_k^dag A_k = 1 is exact on the truncated space because
    photon loss never leaves the window.
    """
    if not 0.0 < abs(kappa) <= 1.0:
        raise ValueError(f"attenuator needs 0 < |kappa| <= 1, got {kappa}")
    loss = 1.0 - kappa * kappa
    ops = []
    for k in range(dim):
        mat = np.zeros((dim, dim), dtype=complex)
        for n in range(k, dim):
            mat[n - k, n] = _binom_sqrt(n, k) * loss ** (0.5 * k) * kappa ** (n - k)
        if np.any(mat):
            ops.append(mat)
    return KrausSet(dim=dim, operators=tuple(ops), source=QLAttenuator(kappa))


def kraus_amplifier(kappa: float, dim: int) -> KrausSet:
    """Kraus operators of the quantum-limited amplifier.

    Hermitian conjugates of the attenuator set at 1/kappa, with the overall
    scalar fixed operationally by trace preservation on the vacuum rather than
    transcribed from a closed form.
    """
    if abs(kappa) < 1.0:
        raise ValueError(f"amplifier needs |kappa| >= 1, got {kappa}")
    base = kraus_attenuator(1.0 / kappa, dim)
    raw = [op.conj().T for op in base.operators]
    # trace preservation on the vacuum: the per-operator weights ||B_k|0>||^2
    # form a geometric series, summed to infinity so the truncation window
    # does not skew the scalar.
    vac_norms = [float(np.linalg.norm(op[:, 0]) ** 2) for op in raw]
    ratio = vac_norms[1] / vac_norms[0] if len(vac_norms) > 1 else 0.0
    g = 1.0 / sqrt(vac_norms[0] / (1.0 - ratio))
    ops = tuple(g * op for op in raw)
    return KrausSet(dim=dim, operators=ops, source=QLAmplifier(kappa))


def apply_kraus(kset: KrausSet, rho: TruncatedState) -> TruncatedState:
    """sum_k A_k rho A_k^dag on the truncated space."""
    if rho.dim != kset.dim:
        raise ValueError("state and Kraus set dimensions differ")
    out = np.zeros((kset.dim, kset.dim), dtype=complex)
    for op in kset.operators:
        out += op @ rho.amplitudes @ op.conj().T
    trace = float(np.trace(out).real)
    return TruncatedState(kset.dim, out, tail=abs(1.0 - trace), label=f"kraus({rho.label})")


def transfer_tensor(spec: ChannelSpec, dim: int) -> np.ndarray:
    """Channel action on operator units: T[n,q,m,p] = <n| Phi(|m><p|) |q>.

    Computed per angular harmonic (phase covariance makes T vanish unless
    n - q = m - p), each entry a single radial quadrature.  Requires the
    mapped envelope to decay: scale^2 + noise > -1 fails with
    DivergentReconstruction.
    """
    action = collapse(spec)
    a, b = action.scale, action.noise
    c_src = -a * a - b
    if c_src >= 0:
        raise DivergentReconstruction(
            f"transfer tensor envelope exp({c_src:+.4g} r^2/2) does not decay"
        )
    kdeg = 2 * (dim - 1)
    cutoff = required_cutoff([(-a * a, abs(a), kdeg), (-b, 0.0, 0), (-1.0, 1.0, kdeg)])
    nodes = _auto_nodes(cutoff, dim - 1)
    r, w = radial_gauss(cutoff, nodes)
    rw = r * w
    # split the noise factor between source and kernel so neither overflows
    src_gauss = 0.0 if a == 0.0 else -0.5 * b / (a * a)
    ker_gauss = -b if a == 0.0 else -0.5 * b
    tensor = np.zeros((dim, dim, dim, dim))
    for delta in range(dim):
        g_src = displacement_radial(dim, delta, abs(a) * r, gauss_exponent=src_gauss)
        if a < 0 and (delta % 2):
            g_src = -g_src
        g_ker = displacement_radial(dim, delta, r, gauss_exponent=ker_gauss)
        block = 2.0 * (g_ker * rw) @ g_src.T  # block[n, m] = T[n, n+delta, m, m+delta]
        size = dim - delta
        idx = np.arange(size)
        tensor[idx[:, None], idx[:, None] + delta, idx[None, :], idx[None, :] + delta] = block
        if delta:
            tensor[idx[:, None] + delta, idx[:, None], idx[None, :] + delta, idx[None, :]] = block
    return tensor


@dataclass(frozen=True, eq=False)
class ScalingMatrixReduction:
    """Symplectic normal form S1 K S2 = a*I or a*sigma3 of a 2x2 scaling matrix."""

    matrix: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    a: float
    sign: int

    @property
    def target(self) -> np.ndarray:
        return self.a * np.diag([1.0, float(self.sign)])

    @property
    def residual(self) -> float:
        return float(np.abs(self.s1 @ self.matrix @ self.s2 - self.target).max())


def reduce_scaling_matrix(k: np.ndarray) -> ScalingMatrixReduction:
    """Reduce a nonsingular 2x2 real matrix to a uniform scaling between symplectics.

    det K > 0 gives S1 K S2 = a*I with a = sqrt(det K); det K < 0 gives
    a*sigma3 with a = sqrt(-det K).  Unit-determinant (symplectic) factors
    only, so the reduction never changes positivity properties of the induced
    map.
    """
    k = np.asarray(k, dtype=float)
    if k.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    det = float(np.linalg.det(k))
    if abs(det) <= 1e-12:
        raise ValueError(f"matrix is singular (det={det:.3g})")
    s1 = np.eye(2)
    if det > 0:
        a = sqrt(det)
        sign = 1
        s2 = a * np.linalg.inv(k)
    else:
        a = sqrt(-det)
        sign = -1
        s2 = a * np.linalg.inv(k) @ np.diag([1.0, -1.0])
    red = ScalingMatrixReduction(matrix=k, s1=s1, s2=s2, a=a, sign=sign)
    if red.residual > 1e-10 * max(1.0, a):
        raise RuntimeError(f"reduction residual {red.residual:.3g} out of contract")
    return red


# ---------------------------------------------------------------------------
# Channel text grammar (CLI wire format)
# ---------------------------------------------------------------------------


class ChannelParseError(ValueError):
    """Unparseable channel description."""


def _fmt(x: float) -> str:
    return repr(float(x))


def format_channel(spec: ChannelSpec) -> str:
    """Canonical text form; parse_channel(format_channel(s)) == s exactly."""
    if isinstance(spec, Scaling):
        return f"scale:{_fmt(spec.ordering)}:{_fmt(spec.scale)}"
    if isinstance(spec, DualScaling):
        return f"dual:{_fmt(spec.ordering)}:{_fmt(spec.scale)}"
    if isinstance(spec, ClassicalNoise):
        return f"noise:{_fmt(spec.noise)}"
    if isinstance(spec, QLAttenuator):
        return f"att:{_fmt(spec.kappa)}"
    if isinstance(spec, QLAmplifier):
        return f"amp:{_fmt(spec.kappa)}"
    if isinstance(spec, NoisyAttenuator):
        return f"att:{_fmt(spec.kappa)}:{_fmt(spec.noise)}"
    if isinstance(spec, NoisyAmplifier):
        return f"amp:{_fmt(spec.kappa)}:{_fmt(spec.noise)}"
    if isinstance(spec, Compose):
        return "*".join(format_channel(p) for p in spec.parts)
    raise TypeError(f"not a channel spec: {spec!r}")


def _parse_atom(text: str) -> ChannelSpec:
    fields = text.split(":")
    name = fields[0].strip().lower()
    args = fields[1:]

    def need(n: int):
        if len(args) != n:
            raise ChannelParseError(f"{name!r} takes {n} parameter(s), got {len(args)}")
        try:
            return [float(x) for x in args]
        except ValueError as exc:
            raise ChannelParseError(f"bad number in {text!r}") from exc

    try:
        if name == "scale":
            s, a = need(2)
            return Scaling(s, a)
        if name == "dual":
            s, a = need(2)
            return DualScaling(s, a)
        if name == "noise":
            (b,) = need(1)
            return ClassicalNoise(b)
        if name == "att":
            if len(args) == 1:
                return QLAttenuator(need(1)[0])
            k, b = need(2)
            return NoisyAttenuator(k, b)
        if name == "amp":
            if len(args) == 1:
                return QLAmplifier(need(1)[0])
            k, b = need(2)
            return NoisyAmplifier(k, b)
    except ValueError as exc:
        raise ChannelParseError(str(exc)) from exc
    raise ChannelParseError(f"unknown channel {name!r}")


def parse_channel(text: str) -> ChannelSpec:
    """Parse the channel grammar: atoms joined by '*', applied right to left."""
    parts = [p.strip() for p in text.split("*")]
    if any(not p for p in parts):
        raise ChannelParseError(f"empty component in {text!r}")
    atoms = [_parse_atom(p) for p in parts]
    if len(atoms) == 1:
        return atoms[0]
    return Compose(tuple(atoms))
