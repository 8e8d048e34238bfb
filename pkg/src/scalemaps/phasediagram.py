"""Analytic classifier for the scaling and noisy-channel phase diagrams plus
the sweep engine that cross-validates it numerically.

Verdicts: scaling maps are completely positive only on the unit-scale lines
(|a| = 1, any ordering), the P-line attenuator segment (s = 1, |a| < 1) and
the Q-line amplifier segment (s = -1, |a| > 1); everywhere else they are not
even positive.  Noisy attenuation/amplification maps are non-positive below
b = |1 - a^2|, completely positive above, and entanglement- plus
nonclassicality-breaking from b = 1 + a^2.

The sweep engine runs a cheap Gaussian/pairing tier at every grid point and
the full Fock/Choi certification on a subsample; any disagreement with the
analytic classifier outside a configurable boundary band aborts with a
reproduction descriptor.  Points lying exactly on a verdict line are still
enforced (the numerics are decisive there); only near-boundary off-line
points are exempt.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .certify import (
    CHOI_TOL,
    TOL_POS,
    Witness,
    choi,
    pairing_probe,
    positivity_probe,
    standard_probes,
)
from .channels import (
    ChannelSpec,
    NoisyAmplifier,
    NoisyAttenuator,
    Scaling,
    collapse,
)
from .fock import fock_state, vacuum_state
from .gaussian import classicality_test, ppt_test, propagate, tmsv
from .quasiprob import DivergentReconstruction, check_ordering

__all__ = [
    "ClassificationRecord",
    "SweepConfig",
    "SweepResult",
    "SweepMismatchError",
    "classify_scaling",
    "classify_noisy",
    "classify_general",
    "numeric_scaling_verdict",
    "numeric_noisy_verdict",
    "scaling_boundary_distance",
    "noisy_boundary_distance",
    "sweep",
    "write_records_csv",
    "write_result_json",
]

_LINE_TOL = 1e-12
_SCALAR_TOL = 1e-9

SCALING_CSV_HEADER = "s,a,analytic,region,numeric,witness_kind,witness_value"
NOISY_CSV_HEADER = "family,kappa,b,analytic,numeric,margin_ppt,margin_classical"


@dataclass(frozen=True)
class ClassificationRecord:
    """One point of a phase diagram: parameters, verdicts, witness data."""

    kind: str                      # "scaling" | "noisy"
    analytic: str
    region: str                    # "1".."4" | "boundary" | "none"
    s: Optional[float] = None
    a: Optional[float] = None
    family: Optional[str] = None
    kappa: Optional[float] = None
    b: Optional[float] = None
    numeric: Optional[str] = None
    witness: Optional[Witness] = None
    margin_ppt: Optional[float] = None
    margin_classical: Optional[float] = None
    enforced: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.witness is not None:
            d["witness"] = asdict(self.witness)
        return d


def classify_scaling(s: float, a: float) -> ClassificationRecord:
    """Analytic verdict for the quasiprobability scaling map at (s, a).

    Region tags follow the decomposition character of the non-positive zones:
    1 and 3 compose two non-positive maps (|a| < 1 with s <= 0, |a| > 1 with
    s >= 0); 2 and 4 compose a CP noise map with a non-positive dilation and
    still fail to be positive.
    """
    s = check_ordering(s)
    a = float(a)
    if abs(a) <= _LINE_TOL:
        verdict = "pinch_vacuum" if abs(s - 1.0) <= _LINE_TOL else "pinch_NP"
        return ClassificationRecord(kind="scaling", analytic=verdict, region="none", s=s, a=a)
    if abs(abs(a) - 1.0) <= _LINE_TOL:
        return ClassificationRecord(kind="scaling", analytic="CP_unitary", region="none", s=s, a=a)
    if abs(s - 1.0) <= _LINE_TOL and abs(a) < 1.0:
        return ClassificationRecord(kind="scaling", analytic="CP", region="none", s=s, a=a)
    if abs(s + 1.0) <= _LINE_TOL and abs(a) > 1.0:
        return ClassificationRecord(kind="scaling", analytic="CP", region="none", s=s, a=a)
    if abs(a) < 1.0:
        region = "1" if s <= 0.0 else "2"
    else:
        region = "3" if s >= 0.0 else "4"
    return ClassificationRecord(kind="scaling", analytic="NP", region=region, s=s, a=a)


def classify_noisy(family: str, kappa: float, b: float) -> ClassificationRecord:
    """Analytic three-zone verdict for the noisy attenuation/amplification map."""
    kappa, b = float(kappa), float(b)
    if family == "att":
        if abs(kappa) > 1.0:
            raise ValueError("attenuation map requires |kappa| <= 1")
        cp = 1.0 - kappa * kappa
    elif family == "amp":
        if abs(kappa) < 1.0:
            raise ValueError("amplification map requires |kappa| >= 1")
        cp = kappa * kappa - 1.0
    else:
        raise ValueError(f"unknown family {family!r}")
    eb = 1.0 + kappa * kappa
    if b >= eb - _SCALAR_TOL:
        verdict = "EB_NB"
    elif b >= cp - _SCALAR_TOL:
        verdict = "CP"
    else:
        verdict = "NP"
    return ClassificationRecord(
        kind="noisy", analytic=verdict, region="none", family=family, kappa=kappa, b=b
    )


def classify_general(spec: ChannelSpec) -> str:
    """Analytic verdict for any spec through its collapsed (scale, noise) pair.

    The collapsed map is completely positive iff noise >= |1 - scale^2| and
    entanglement/nonclassicality breaking iff noise >= 1 + scale^2; below the
    CP threshold it is not even positive.
    """
    action = collapse(spec)
    a, b = action.scale, action.noise
    if abs(a) <= _LINE_TOL:
        return "pinch_vacuum" if abs(b - 1.0) <= _SCALAR_TOL else ("CP" if b > 1.0 else "pinch_NP")
    if b >= 1.0 + a * a - _SCALAR_TOL:
        return "EB_NB"
    if b >= abs(1.0 - a * a) - _SCALAR_TOL:
        if abs(abs(a) - 1.0) <= _LINE_TOL and abs(b) <= _SCALAR_TOL:
            return "CP_unitary"
        return "CP"
    return "NP"


def _geometric_entry(v: float) -> float:
    """Most negative diagonal entry of the width-v Gaussian's number distribution."""
    if -1.0 < v < 1.0:
        return (2.0 / (1.0 + v)) * (v - 1.0) / (v + 1.0)
    return v - 1.0  # uncertainty-violation margin when the series diverges


def scaling_boundary_distance(s: float, a: float) -> float:
    """Parameter distance to the nearest verdict-change line of the scaling map."""
    d = min(abs(abs(a) - 1.0), abs(a))
    if abs(a) < 1.0:
        d = min(d, 1.0 - s)
    if abs(a) > 1.0:
        d = min(d, s + 1.0)
    return d


def noisy_boundary_distance(family: str, kappa: float, b: float) -> float:
    cp = abs(1.0 - kappa * kappa)
    eb = 1.0 + kappa * kappa
    return min(abs(b - cp), abs(b - eb))


def _on_scaling_line(s: float, a: float) -> bool:
    return (
        abs(abs(a) - 1.0) <= _LINE_TOL
        or abs(a) <= _LINE_TOL
        or abs(s - 1.0) <= _LINE_TOL
        or abs(s + 1.0) <= _LINE_TOL
    )


def _on_noisy_line(family: str, kappa: float, b: float) -> bool:
    return noisy_boundary_distance(family, kappa, b) <= _LINE_TOL


def numeric_scaling_verdict(
    s: float,
    a: float,
    full: bool = False,
    dim: int = 40,
    choi_dim: int = 12,
    seed: int = 7,
) -> Tuple[str, Optional[Witness]]:
    """Numeric verdict for the scaling map, independent of the classifier.

    Fast tier: the vacuum Gaussian scalar plus the two always-convergent
    pairing probes (vacuum against the first excited state in both orders).
    Full tier adds the standard probe battery with eigenvalue witnesses and a
    Choi-spectrum check.
    """
    s = check_ordering(s)
    a = float(a)
    if abs(a) <= _LINE_TOL:
        width = s
        if width >= 1.0 - _SCALAR_TOL:
            return "pinch_vacuum", None
        return "pinch_NP", Witness(
            kind="gaussian_scalar", probe="vacuum", value=_geometric_entry(width),
            tolerance=_SCALAR_TOL,
        )
    spec = Scaling(s, a)
    if full:
        # Fock path first: output-eigenvalue witnesses where reconstruction
        # converges, duality pairing where it does not.
        witness = positivity_probe(spec, standard_probes(dim, seed=seed))
        if witness is not None:
            return "NP", witness
        min_eig = choi(spec, choi_dim).min_eigenvalue
        if min_eig < -CHOI_TOL:
            return "NP", Witness(kind="choi_eigen", probe=f"choi:{choi_dim}", value=min_eig,
                                 tolerance=CHOI_TOL)
        if abs(abs(a) - 1.0) <= _LINE_TOL:
            return "CP_unitary", None
        return "CP", None
    width = a * a * (1.0 - s) + s
    if width < 1.0 - _SCALAR_TOL:
        return "NP", Witness(
            kind="gaussian_scalar", probe="vacuum", value=_geometric_entry(width),
            tolerance=_SCALAR_TOL,
        )
    vac, f1 = vacuum_state(8), fock_state(1, 8)
    for probe_name, rho, sigma in (("vacuum|fock:1", vac, f1), ("fock:1|vacuum", f1, vac)):
        try:
            val = pairing_probe(spec, rho, sigma)
        except DivergentReconstruction:
            continue
        if val < -TOL_POS:
            return "NP", Witness(kind="pairing", probe=probe_name, value=val, tolerance=TOL_POS)
    if abs(abs(a) - 1.0) <= _LINE_TOL:
        return "CP_unitary", None
    return "CP", None


def numeric_noisy_verdict(
    family: str,
    kappa: float,
    b: float,
    full: bool = False,
    dim: int = 40,
    choi_dim: int = 12,
    seed: int = 7,
    tmsv_r: Sequence[float] = (0.2, 0.5, 1.0),
) -> Tuple[str, Optional[Witness], float, float]:
    """Numeric verdict plus PPT/classicality margins for a noisy map.

    Returns (verdict, witness, margin_ppt, margin_classical); the margins are
    minima over the two-mode squeezed probes, evaluated with the channel on
    one arm.
    """
    kappa, b = float(kappa), float(b)
    spec = NoisyAttenuator(kappa, b) if family == "att" else NoisyAmplifier(kappa, b)
    margin_ppt = np.inf
    margin_classical = np.inf
    for r in tmsv_r:
        out = propagate(spec, tmsv(r), acting_mode=1)
        margin_ppt = min(margin_ppt, ppt_test(out)[1])
        margin_classical = min(margin_classical, classicality_test(out)[1])
    width = kappa * kappa + b
    witness = None
    if width < 1.0 - _SCALAR_TOL:
        witness = Witness(kind="gaussian_scalar", probe="vacuum",
                          value=_geometric_entry(width), tolerance=_SCALAR_TOL)
    else:
        vac, f1 = vacuum_state(8), fock_state(1, 8)
        for probe_name, rho, sigma in (("fock:1|vacuum", f1, vac), ("vacuum|fock:1", vac, f1)):
            val = pairing_probe(spec, rho, sigma)
            if val < -TOL_POS:
                witness = Witness(kind="pairing", probe=probe_name, value=val, tolerance=TOL_POS)
                break
    if witness is None and full:
        witness = positivity_probe(spec, standard_probes(dim, seed=seed))
        if witness is None:
            min_eig = choi(spec, choi_dim).min_eigenvalue
            if min_eig < -CHOI_TOL:
                witness = Witness(kind="choi_eigen", probe=f"choi:{choi_dim}",
                                  value=min_eig, tolerance=CHOI_TOL)
    if witness is not None:
        return "NP", witness, float(margin_ppt), float(margin_classical)
    if margin_ppt >= -_SCALAR_TOL and margin_classical >= -_SCALAR_TOL:
        return "EB_NB", None, float(margin_ppt), float(margin_classical)
    return "CP", None, float(margin_ppt), float(margin_classical)


@dataclass(frozen=True)
class SweepConfig:
    """Grid sweep description. axis1 is s (scaling) or kappa (noisy); axis2 is
    a or b. Ranges are (lo, hi, count) with endpoints included."""

    kind: str
    axis1: Tuple[float, float, int]
    axis2: Tuple[float, float, int]
    band_width: float = 0.02
    dim: int = 40
    choi_dim: int = 12
    subsample: int = 4
    seed: int = 7
    jobs: int = 1
    tmsv_r: Tuple[float, ...] = (0.2, 0.5, 1.0)

    def __post_init__(self):
        if self.kind not in ("scaling", "att", "amp"):
            raise ValueError(f"unknown sweep kind {self.kind!r}")
        for rng in (self.axis1, self.axis2):
            if len(rng) != 3 or int(rng[2]) < 2:
                raise ValueError(f"range {rng!r} needs (lo, hi, count>=2)")
        if self.band_width <= 0:
            raise ValueError("band width must be positive")

    def grid(self) -> Tuple[np.ndarray, np.ndarray]:
        lo1, hi1, n1 = self.axis1
        lo2, hi2, n2 = self.axis2
        return np.linspace(lo1, hi1, int(n1)), np.linspace(lo2, hi2, int(n2))


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    records: Tuple[ClassificationRecord, ...]
    summary: dict


class SweepMismatchError(RuntimeError):
    """Numeric verdict contradicted the analytic classifier outside the band."""

    def __init__(self, descriptor: dict):
        super().__init__(
            "analytic/numeric mismatch: " + json.dumps(descriptor, sort_keys=True)
        )
        self.descriptor = descriptor


def _eval_point(args) -> ClassificationRecord:
    config, index, x1, x2 = args
    full = (index % config.subsample == 0)
    if config.kind == "scaling":
        s, a = x1, x2
        record = classify_scaling(s, a)
        dist = scaling_boundary_distance(s, a)
        on_line = _on_scaling_line(s, a)
        full = full or dist < 2.0 * config.band_width
        verdict, witness = numeric_scaling_verdict(
            s, a, full=full, dim=config.dim, choi_dim=config.choi_dim, seed=config.seed
        )
        enforced = on_line or dist >= config.band_width
        region = record.region if enforced else "boundary"
        return replace(record, numeric=verdict, witness=witness, enforced=enforced,
                       region=region)
    family = config.kind
    kappa, b = x1, x2
    record = classify_noisy(family, kappa, b)
    dist = noisy_boundary_distance(family, kappa, b)
    on_line = _on_noisy_line(family, kappa, b)
    full = full or dist < 2.0 * config.band_width
    verdict, witness, m_ppt, m_cl = numeric_noisy_verdict(
        family, kappa, b, full=full, dim=config.dim, choi_dim=config.choi_dim,
        seed=config.seed, tmsv_r=config.tmsv_r,
    )
    enforced = on_line or dist >= config.band_width
    return replace(record, numeric=verdict, witness=witness, enforced=enforced,
                   margin_ppt=m_ppt, margin_classical=m_cl)


def sweep(config: SweepConfig) -> SweepResult:
    """Run the sweep; abort with SweepMismatchError on any enforced mismatch.

    Records come back in deterministic grid order (axis1 outer, axis2 inner)
    regardless of the parallelism degree.
    """
    ax1, ax2 = config.grid()
    tasks = [
        (config, i1 * len(ax2) + i2, float(x1), float(x2))
        for i1, x1 in enumerate(ax1)
        for i2, x2 in enumerate(ax2)
    ]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            records = list(pool.map(_eval_point, tasks, chunksize=8))
    else:
        records = [_eval_point(t) for t in tasks]
    mismatches = [
        r for r in records if r.enforced and r.numeric != r.analytic
    ]
    if mismatches:
        first = mismatches[0]
        raise SweepMismatchError(
            {
                "kind": first.kind,
                "params": {
                    k: v
                    for k, v in first.to_dict().items()
                    if k in ("s", "a", "family", "kappa", "b") and v is not None
                },
                "analytic": first.analytic,
                "numeric": first.numeric,
                "witness": None if first.witness is None else asdict(first.witness),
                "seed": config.seed,
                "dim": config.dim,
                "choi_dim": config.choi_dim,
                "total_mismatches": len(mismatches),
            }
        )
    counts: dict[str, int] = {}
    for r in records:
        counts[r.analytic] = counts.get(r.analytic, 0) + 1
    summary = {
        "kind": config.kind,
        "points": len(records),
        "enforced": sum(r.enforced for r in records),
        "mismatches": 0,
        "verdict_counts": counts,
    }
    if config.kind in ("att", "amp"):
        summary["zone_crossings"] = _zone_crossings(records, ax1, ax2)
    return SweepResult(config=config, records=tuple(records), summary=summary)


def _zone_crossings(records, kappas, bs) -> list:
    """Per-kappa brackets of the numeric NP->CP and CP->EB_NB transitions."""
    n2 = len(bs)
    out = []
    for i1, kappa in enumerate(kappas):
        row = records[i1 * n2 : (i1 + 1) * n2]
        cp_bracket = eb_bracket = None
        for j in range(1, n2):
            if row[j - 1].numeric == "NP" and row[j].numeric in ("CP", "EB_NB"):
                cp_bracket = (float(bs[j - 1]), float(bs[j]))
            if row[j - 1].numeric in ("NP", "CP") and row[j].numeric == "EB_NB":
                eb_bracket = (float(bs[j - 1]), float(bs[j]))
        out.append({"kappa": float(kappa), "cp_between": cp_bracket, "eb_between": eb_bracket})
    return out


def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".12g")


def write_records_csv(records: Sequence[ClassificationRecord], path) -> None:
    """Fixed-schema CSV; one header per sweep kind (the plotting contract)."""
    kinds = {r.kind for r in records}
    if len(kinds) != 1:
        raise ValueError("cannot mix scaling and noisy records in one file")
    kind = kinds.pop()
    with open(path, "w") as fh:
        if kind == "scaling":
            fh.write(SCALING_CSV_HEADER + "\n")
            for r in records:
                wk = r.witness.kind if r.witness else ""
                wv = _fmt(r.witness.value) if r.witness else ""
                fh.write(
                    f"{_fmt(r.s)},{_fmt(r.a)},{r.analytic},{r.region},{r.numeric or ''},{wk},{wv}\n"
                )
        else:
            fh.write(NOISY_CSV_HEADER + "\n")
            for r in records:
                fh.write(
                    f"{r.family},{_fmt(r.kappa)},{_fmt(r.b)},{r.analytic},{r.numeric or ''},"
                    f"{_fmt(r.margin_ppt)},{_fmt(r.margin_classical)}\n"
                )


def write_result_json(result: SweepResult, path) -> None:
    payload = {
        "config": asdict(result.config),
        "summary": result.summary,
        "records": [r.to_dict() for r in result.records],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
