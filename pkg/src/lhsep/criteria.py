"""Criteria that exclude local-hidden-state models with a given separability structure.

Every test returns a :class:`CriterionReport` normalized so that ``lhs``
must not exceed ``rhs`` when the excluded model exists; ``violated`` means
``lhs - rhs > DECISION_TOL``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import assemblage as asm
from .assemblage import SettingSearch
from .metrology import commutator_expectation, qfi
from .partitions import Partition, fmax_wh, trivial_partition
from .quantum_core import (
    HermitianObservable,
    LayoutError,
    QuantumState,
    QubitLayout,
    block_generator,
    collective_spin,
    partial_trace,
    unit_vector,
    variance,
)

DECISION_TOL = 1e-9
TRIVIAL_COMMUTATOR = 1e-12

GRID_NOTE = (
    "both sides evaluated on the same setting search: the conditional Fisher "
    "information is a lower bound on its optimum and conditional variances are "
    "upper bounds on theirs, so a reported violation is conservative"
)


@dataclass(frozen=True)
class CriterionReport:
    name: str
    lhs: float
    rhs: float
    violated: bool
    margin: float
    witnesses: dict = field(default_factory=dict)
    inputs_digest: str = ""
    conclusion: str = ""
    note: str = ""
    trivial: bool = False

    @classmethod
    def build(cls, name, lhs, rhs, *, conclusion_if_violated, **kw) -> "CriterionReport":
        lhs, rhs = float(lhs), float(rhs)
        margin = lhs - rhs
        violated = bool(margin > DECISION_TOL) and not kw.get("trivial", False)
        conclusion = conclusion_if_violated if violated else "not violated: no conclusion"
        return cls(name, lhs, rhs, violated, margin, conclusion=conclusion, **kw)

    def to_text(self) -> str:
        lines = [
            f"criterion: {self.name}",
            f"lhs: {_num(self.lhs)}",
            f"rhs: {_num(self.rhs)}",
            f"margin: {_num(self.margin)}",
            f"violated: {'true' if self.violated else 'false'}",
            f"decision_tolerance: {_num(DECISION_TOL)}",
        ]
        if self.trivial:
            lines.append("trivial: true")
        for key in sorted(self.witnesses):
            lines.append(f"witness.{key}: {self.witnesses[key]}")
        lines.append(f"inputs: {self.inputs_digest}")
        lines.append(f"conclusion: {self.conclusion}")
        if self.note:
            lines.append(f"note: {self.note}")
        return "\n".join(lines) + "\n"


def _num(x: float) -> str:
    return "%.17g" % x


def state_digest(state: QuantumState) -> str:
    h = hashlib.sha256(np.ascontiguousarray(state.matrix).tobytes()).hexdigest()[:16]
    label = state.description or "state"
    return f"{label} on [{','.join(state.layout.parties)}] sha256:{h}"


def _bob_layout(rho_ab: QuantumState, a_party: str) -> QubitLayout:
    rho_ab.layout.index(a_party)
    return QubitLayout(tuple(p for p in rho_ab.layout.parties if p != str(a_party)))


def _check_partition(partition: Partition, layout: QubitLayout) -> None:
    if not partition.covers(layout.parties):
        raise LayoutError(f"partition {partition} does not cover Bob's parties {layout.parties}")


def _setting_witness(value: asm.ConditionalValue) -> str:
    return f"{value.optimizer.label()} value={_num(value.value)}"


def _block_qcvs(rho_ab, a_party, b_layout, partition, direction, search):
    out = []
    for block in partition.blocks:
        gen = block_generator(b_layout, block, direction, reduced=True)
        out.append((block, asm.qcv(rho_ab, a_party, block, gen, search)))
    return out


def lambda_sep_test(
    rho_ab: QuantumState,
    a_party: str,
    partition: Partition,
    direction="z",
    search: SettingSearch = SettingSearch(),
    name: str = "lambda-sep",
) -> CriterionReport:
    """Conditional Fisher information against four times the summed block conditional variances."""
    b_layout = _bob_layout(rho_ab, a_party)
    _check_partition(partition, b_layout)
    unit_vector(direction)
    h = collective_spin(b_layout, direction)
    fq = asm.qcfi(rho_ab, a_party, h, search)
    blocks = _block_qcvs(rho_ab, a_party, b_layout, partition, direction, search)
    rhs = 4.0 * sum(v.value for _, v in blocks)
    witnesses = {"qcfi": _setting_witness(fq)}
    for block, v in blocks:
        witnesses[f"qcv[{','.join(block)}]"] = _setting_witness(v)
    if len(partition) == 1:
        conclusion = "steering from A to B: no LHS model reproduces the assemblage"
    else:
        conclusion = (
            f"no LHS model separable in partition {partition}: "
            "either A steers B or every LHS model is entangled across this partition"
        )
    return CriterionReport.build(
        name,
        fq.value,
        rhs,
        conclusion_if_violated=conclusion,
        witnesses=witnesses,
        inputs_digest=f"{state_digest(rho_ab)}; A={a_party}; partition={partition}; H={h.description}",
        note=GRID_NOTE,
    )


def steering_test(rho_ab, a_party, direction="z", search: SettingSearch = SettingSearch()) -> CriterionReport:
    b_layout = _bob_layout(rho_ab, a_party)
    return lambda_sep_test(rho_ab, a_party, trivial_partition(b_layout.parties), direction, search, name="steering")


def reduced_sep_test(rho_b: QuantumState, partition: Partition, direction="z") -> CriterionReport:
    """Unassisted check: ``F_Q[rho_B, H] <= 4 sum_k Var[rho_Bk, H_Bk]``."""
    _check_partition(partition, rho_b.layout)
    h = collective_spin(rho_b.layout, direction)
    lhs = qfi(rho_b, h).value
    rhs = 0.0
    for block in partition.blocks:
        reduced = partial_trace(rho_b, block)
        rhs += 4.0 * variance(reduced, block_generator(rho_b.layout, block, direction, reduced=True))
    return CriterionReport.build(
        "reduced-sep",
        lhs,
        rhs,
        conclusion_if_violated=f"Bob's reduced state is entangled across partition {partition}",
        inputs_digest=f"{state_digest(rho_b)}; partition={partition}; H={h.description}",
        note="exact: no setting search involved",
    )


def reid_sep_test(
    rho_ab: QuantumState,
    a_party: str,
    partition: Partition,
    gen_direction,
    meas_obs: HermitianObservable,
    search: SettingSearch = SettingSearch(),
) -> CriterionReport:
    """Variance criterion ``|<[H,M]>_B|^2 / 4 <= (sum_k QCV_k[H_k]) * QCV_B[M]``."""
    b_layout = _bob_layout(rho_ab, a_party)
    _check_partition(partition, b_layout)
    if meas_obs.layout != b_layout:
        raise LayoutError(f"measured observable acts on {meas_obs.layout.parties}, expected {b_layout.parties}")
    h = collective_spin(b_layout, gen_direction)
    rho_b = partial_trace(rho_ab, b_layout.parties)
    comm_sq = abs(commutator_expectation(rho_b, h, meas_obs)) ** 2
    trivial = comm_sq <= TRIVIAL_COMMUTATOR
    lhs = 0.0 if trivial else comm_sq / 4.0
    blocks = _block_qcvs(rho_ab, a_party, b_layout, partition, gen_direction, search)
    var_m = asm.qcv(rho_ab, a_party, b_layout.parties, meas_obs, search)
    rhs = sum(v.value for _, v in blocks) * var_m.value
    witnesses = {f"qcv[{','.join(b)}]": _setting_witness(v) for b, v in blocks}
    witnesses["qcv[M]"] = _setting_witness(var_m)
    if len(partition) == 1:
        conclusion = "steering from A to B (Reid-type variance criterion)"
    else:
        conclusion = f"LHS models, if they exist, are entangled across partition {partition}"
    return CriterionReport.build(
        "reid",
        lhs,
        rhs,
        conclusion_if_violated=conclusion,
        witnesses=witnesses,
        inputs_digest=(
            f"{state_digest(rho_ab)}; A={a_party}; partition={partition}; "
            f"H={h.description}; M={meas_obs.description or 'user observable'}"
        ),
        note=("commutator expectation vanishes: criterion is trivially satisfied; " if trivial else "") + GRID_NOTE,
        trivial=trivial,
    )


def wh_sep_test(rho_ab, a_party, w: int, h: int, search: SettingSearch = SettingSearch()) -> CriterionReport:
    """State-independent bound ``QCFI[J_z] <= w (N - h) + N`` for (w, h)-separable LHS models."""
    b_layout = _bob_layout(rho_ab, a_party)
    n = b_layout.n
    rhs = fmax_wh(n, w, h)
    jz = collective_spin(b_layout, "z")
    fq = asm.qcfi(rho_ab, a_party, jz, search)
    return CriterionReport.build(
        "wh-sep",
        fq.value,
        rhs,
        conclusion_if_violated=f"no ({w},{h})-separable LHS model exists",
        witnesses={"qcfi": _setting_witness(fq)},
        inputs_digest=f"{state_digest(rho_ab)}; A={a_party}; N={n}; w={w}; h={h}; H={jz.description}",
        note="lhs from the setting search is a lower bound on its optimum; rhs is exact",
    )


def assisted_entanglement_test(rho_ab, a_party, cut, search: SettingSearch = SettingSearch()) -> CriterionReport:
    """Conditional negativity across ``cut`` of Bob's parties; positive means entangled conditional states."""
    b_layout = _bob_layout(rho_ab, a_party)
    side, other = asm._split_cut(b_layout, cut)
    value = asm.conditional_functional(rho_ab, a_party, asm.negativity_functional([side, other]), search)
    return CriterionReport.build(
        "assisted",
        value.value,
        0.0,
        conclusion_if_violated="no separable LHS model exists",
        witnesses={"negativity": _setting_witness(value)},
        inputs_digest=f"{state_digest(rho_ab)}; A={a_party}; cut={','.join(side)}|{','.join(other)}",
        note="lhs from the setting search is a lower bound on its optimum",
    )


def format_reports(reports: Sequence[CriterionReport]) -> str:
    return "\n".join(r.to_text() for r in reports)
