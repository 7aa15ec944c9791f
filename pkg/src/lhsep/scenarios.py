"""Worked examples: the Bell-pair counterexample and the noisy GHZ family.

The GHZ closed forms come from two specific settings of Alice's qubit:
measuring sigma_x leaves Bob in ``p |GHZ><GHZ| + (1-p) 1/2^N``, whose J_z
Fisher information is ``p^2 N^2 / (p + 2(1-p)/2^N)``; measuring sigma_z
leaves each block of ``N_k`` qubits in ``p |s..s><s..s| + (1-p) 1/2^N_k``
with J_z variance ``(1-p) N_k (1 + p N_k) / 4``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .assemblage import SettingSearch, qcfi, qcv
from .partitions import equal_blocks, fmax_wh
from .quantum_core import (
    QuantumState,
    QubitLayout,
    basis_ket,
    block_generator,
    collective_spin,
)

MAX_DENSE_QUBITS = 12
THRESHOLD_TOL = 1e-10


def bob_labels(n: int) -> tuple[str, ...]:
    return tuple(f"B{i}" for i in range(1, n + 1))


def build_bell_counterexample() -> QuantumState:
    """``(|u><u| x Psi+ + |d><d| x Psi-) / 2`` with ``Psi+- = (|dd> +- |uu>)/sqrt 2`` on B1 B2."""
    psi_plus = (basis_ket("dd") + basis_ket("uu")) / math.sqrt(2)
    psi_minus = (basis_ket("dd") - basis_ket("uu")) / math.sqrt(2)
    up = np.outer(basis_ket("u"), basis_ket("u").conj())
    down = np.outer(basis_ket("d"), basis_ket("d").conj())
    rho = 0.5 * (np.kron(up, np.outer(psi_plus, psi_plus.conj())) + np.kron(down, np.outer(psi_minus, psi_minus.conj())))
    return QuantumState(QubitLayout(("A",) + bob_labels(2)), rho, "Bell counterexample")


@dataclass(frozen=True)
class GhzParams:
    n: int
    p: float
    phi: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need N >= 1, got {self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"mixing weight p must lie in [0, 1], got {self.p}")


def build_noisy_ghz(params: GhzParams) -> QuantumState:
    """``p |GHZ_phi><GHZ_phi| + (1 - p) 1/2^(N+1)`` on A, B1..BN."""
    n = params.n
    if n + 1 > MAX_DENSE_QUBITS:
        raise ValueError(f"dense construction limited to {MAX_DENSE_QUBITS} qubits, N + 1 = {n + 1}")
    d = 2 ** (n + 1)
    ghz = (basis_ket("d" * (n + 1)) + np.exp(1j * params.phi) * basis_ket("u" * (n + 1))) / math.sqrt(2)
    rho = params.p * np.outer(ghz, ghz.conj()) + (1.0 - params.p) * np.eye(d) / d
    return QuantumState(
        QubitLayout(("A",) + bob_labels(n)),
        rho,
        f"noisy GHZ N={n} p={params.p:.17g} phi={params.phi:.17g}",
    )


def ghz_qcfi_lower(n: int, p: float) -> float:
    """Conditional J_z Fisher information reached by a sigma_x measurement on A."""
    if n < 1 or not 0.0 <= p <= 1.0:
        raise ValueError(f"need N >= 1 and 0 <= p <= 1, got N={n}, p={p}")
    return p * p * n * n / (p + 2.0 * (1.0 - p) / 2.0**n)


def ghz_qcv_upper(n_k: int, p: float) -> float:
    """Conditional J_z variance of an ``n_k``-qubit block reached by a sigma_z measurement on A."""
    if n_k < 1 or not 0.0 <= p <= 1.0:
        raise ValueError(f"need N_k >= 1 and 0 <= p <= 1, got N_k={n_k}, p={p}")
    return (1.0 - p) * n_k * (1.0 + p * n_k) / 4.0


def ghz_block_rhs(n: int, k: int, p: float) -> float:
    """``4 sum_k QCV`` bound for ``k`` equal blocks; ``k = 1`` is the steering bound."""
    if k < 1 or n % k:
        raise ValueError(f"block count k={k} does not divide N={n}")
    return 4.0 * k * ghz_qcv_upper(n // k, p)


def ghz_margin(n: int, k: int, p: float) -> float:
    return ghz_qcfi_lower(n, p) - ghz_block_rhs(n, k, p)


def ghz_violation_threshold(n: int, k: int, grid: int = 4096) -> Optional[float]:
    """Smallest ``p`` in (0, 1] where the analytic lower bound beats the ``k``-block bound.

    The first sign change on a uniform grid is bracketed and then bisected
    to ``THRESHOLD_TOL``. Returns ``None`` when no violation exists.
    """
    if k < 1 or n % k:
        raise ValueError(f"block count k={k} does not divide N={n}")
    ps = np.linspace(0.0, 1.0, grid + 1)
    margins = np.array([ghz_margin(n, k, p) for p in ps])
    hits = np.nonzero(margins > 0)[0]
    if hits.size == 0:
        return None
    i = int(hits[0])
    if i == 0:
        return 0.0
    lo, hi = float(ps[i - 1]), float(ps[i])
    while hi - lo > THRESHOLD_TOL:
        mid = 0.5 * (lo + hi)
        if ghz_margin(n, k, mid) > 0:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class ScanRow:
    p: float
    qcfi_lower: float
    rhs: dict = field(default_factory=dict)
    fmax: dict = field(default_factory=dict)


def fig1_scan(
    n: int,
    block_counts: Sequence[int],
    wh_list: Sequence[tuple[int, int]],
    p_steps: int,
) -> list[ScanRow]:
    """Analytic curves at ``p = i / (p_steps - 1)``: conditional-QFI lower bound,
    ``k``-block bounds and state-independent (w, h) bounds."""
    if p_steps < 2:
        raise ValueError("p_steps must be at least 2")
    for k in block_counts:
        if k < 1 or n % k:
            raise ValueError(f"block count k={k} does not divide N={n}")
    fmax = {(w, h): fmax_wh(n, w, h) for w, h in wh_list}
    rows = []
    for i in range(p_steps):
        p = i / (p_steps - 1)
        rows.append(
            ScanRow(
                p=p,
                qcfi_lower=ghz_qcfi_lower(n, p),
                rhs={k: ghz_block_rhs(n, k, p) for k in block_counts},
                fmax=dict(fmax),
            )
        )
    return rows


def scan_to_csv(rows: Sequence[ScanRow]) -> str:
    if not rows:
        return ""
    ks = list(rows[0].rhs)
    whs = list(rows[0].fmax)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["p", "qcfi_lower"] + [f"rhs_k{k}" for k in ks] + [f"fmax_w{w}h{h}" for w, h in whs])
    for r in rows:
        values = [r.p, r.qcfi_lower] + [r.rhs[k] for k in ks] + [r.fmax[wh] for wh in whs]
        writer.writerow(["%.17g" % v for v in values])
    return buf.getvalue()


@dataclass(frozen=True)
class GhzNumeric:
    """Grid-search conditional quantities for one dense noisy GHZ state."""

    n: int
    p: float
    qcfi: float
    block_qcv: dict  # block tuple -> conditional variance


def ghz_numeric(
    n: int,
    p: float,
    block_counts: Sequence[int] = (),
    search: SettingSearch = SettingSearch(),
    phi: float = 0.0,
) -> GhzNumeric:
    rho = build_noisy_ghz(GhzParams(n, p, phi))
    labels = bob_labels(n)
    layout = QubitLayout(labels)
    fq = qcfi(rho, "A", collective_spin(layout, "z"), search).value
    block_qcv = {}
    for k in block_counts:
        for block in equal_blocks(labels, k).blocks:
            if block in block_qcv:
                continue
            gen = block_generator(layout, block, "z", reduced=True)
            block_qcv[block] = qcv(rho, "A", block, gen, search).value
    return GhzNumeric(n, p, fq, block_qcv)
