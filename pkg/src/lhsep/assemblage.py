"""Conditioning on the untrusted party and optimizing over its settings.

Alice (party ``a_party``) is a single qubit measured projectively along a
Bloch direction. Each setting yields an assemblage: two outcome
probabilities with the normalized conditional states of the remaining
parties. The conditional quantities are outcome-averaged functionals,
maximized (Fisher information, generic convex functionals) or minimized
(variance) over a grid of settings followed by a pattern-search
refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .metrology import qfi_matrices
from .quantum_core import (
    PSD_TOL,
    HermitianObservable,
    LayoutError,
    QuantumState,
    QubitLayout,
    embed_operator,
    partial_trace,
    partial_transpose,
    unit_vector,
)

ZERO_PROB = 1e-12
TIE_TOL = 1e-12
BATCH = 256


@dataclass(frozen=True)
class MeasurementSetting:
    """Rank-1 projective qubit measurement along the Bloch direction (theta, phi).

    Outcome 0 projects on the +n spin state, outcome 1 on -n.
    """

    theta: float
    phi: float

    def __post_init__(self):
        theta, phi = float(self.theta), float(self.phi)
        theta = math.fmod(theta, 2 * math.pi)
        if theta < 0:
            theta += 2 * math.pi
        if theta > math.pi:
            theta = 2 * math.pi - theta
            phi += math.pi
        phi = math.fmod(phi, 2 * math.pi)
        if phi < 0:
            phi += 2 * math.pi
        if phi >= 2 * math.pi:
            phi = 0.0
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def along(cls, direction) -> "MeasurementSetting":
        n = unit_vector(direction)
        theta = math.acos(max(-1.0, min(1.0, n[2])))
        phi = math.atan2(n[1], n[0]) if math.hypot(n[0], n[1]) > 1e-15 else 0.0
        return cls(theta, phi)

    @property
    def direction(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    def kets(self) -> np.ndarray:
        """Rows are the +n and -n kets in the (up, down) basis."""
        return _kets(np.array([self.theta]), np.array([self.phi]))[0]

    def projectors(self) -> np.ndarray:
        k = self.kets()
        return np.einsum("ai,aj->aij", k, k.conj())

    def label(self) -> str:
        n = self.direction
        for name, axis in (("x", (1, 0, 0)), ("y", (0, 1, 0)), ("z", (0, 0, 1))):
            if np.allclose(n, axis, atol=1e-12):
                return f"sigma_{name}"
        return f"theta={self.theta:.17g},phi={self.phi:.17g}"


def _kets(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    e = np.exp(1j * phi)
    plus = np.stack([c + 0j, e * s], axis=-1)
    minus = np.stack([s + 0j, -e * c], axis=-1)
    return np.stack([plus, minus], axis=-2)


AXIS_SETTINGS = (
    MeasurementSetting(math.pi / 2, 0.0),
    MeasurementSetting(math.pi / 2, math.pi / 2),
    MeasurementSetting(0.0, 0.0),
)


@dataclass(frozen=True)
class SettingSearch:
    """Candidate settings: ``explicit_settings`` first, then a theta-major grid.

    ``theta`` runs over ``linspace(0, pi, n_theta)`` and ``phi`` over
    ``2 pi j / n_phi``. With ``refine`` on, the best candidate seeds a
    coordinate pattern search whose step sizes halve until both fall
    below ``refine_tolerance`` (radians).
    """

    n_theta: int = 64
    n_phi: int = 32
    refine: bool = True
    refine_tolerance: float = 1e-6
    explicit_settings: tuple[MeasurementSetting, ...] = AXIS_SETTINGS

    def __post_init__(self):
        if self.n_theta < 2 or self.n_phi < 2:
            raise ValueError(f"grid resolution must be >= 2, got ({self.n_theta}, {self.n_phi})")
        if not self.refine_tolerance > 0:
            raise ValueError("refine_tolerance must be positive")
        object.__setattr__(self, "explicit_settings", tuple(self.explicit_settings))

    @classmethod
    def only(cls, *settings: MeasurementSetting) -> "SettingSearch":
        """Search restricted to exactly ``settings`` (no grid, no refinement)."""
        return _FixedSearch(explicit_settings=tuple(settings))

    def angles(self) -> tuple[np.ndarray, np.ndarray]:
        th = [s.theta for s in self.explicit_settings]
        ph = [s.phi for s in self.explicit_settings]
        grid_th, grid_ph = np.meshgrid(
            np.linspace(0.0, math.pi, self.n_theta),
            2 * math.pi * np.arange(self.n_phi) / self.n_phi,
            indexing="ij",
        )
        return (
            np.concatenate([th, grid_th.ravel()]),
            np.concatenate([ph, grid_ph.ravel()]),
        )

    @property
    def theta_step(self) -> float:
        return math.pi / (self.n_theta - 1)

    @property
    def phi_step(self) -> float:
        return 2 * math.pi / self.n_phi


@dataclass(frozen=True)
class _FixedSearch(SettingSearch):
    refine: bool = False

    def __post_init__(self):
        super().__post_init__()
        if not self.explicit_settings:
            raise ValueError("empty search space")

    def angles(self):
        return (
            np.array([s.theta for s in self.explicit_settings]),
            np.array([s.phi for s in self.explicit_settings]),
        )


@dataclass(frozen=True)
class Outcome:
    probability: float
    state: Optional[QuantumState]


@dataclass(frozen=True)
class Assemblage:
    setting: MeasurementSetting
    outcomes: tuple[Outcome, ...]
    source: str = ""

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([o.probability for o in self.outcomes])

    def average_state(self) -> np.ndarray:
        """``sum_a p(a) rho_a``; equals Bob's reduced state (no-signaling)."""
        return sum(o.probability * o.state.matrix for o in self.outcomes if o.state is not None)


@dataclass(frozen=True)
class ConditionalValue:
    value: float
    optimizer: MeasurementSetting
    per_outcome: tuple[tuple[float, float], ...]
    sense: str = "max"
    evaluations: int = field(default=0, compare=False)


# --------------------------------------------------------------------------
# conditioning


class _Conditioner:
    """Blocks ``R_ij = <i|_A rho |j>_A`` of a bipartite state, for fast conditioning."""

    def __init__(self, rho_ab: QuantumState, a_party: str):
        layout = rho_ab.layout
        a = layout.index(a_party)
        if layout.n < 2:
            raise LayoutError("conditioning needs at least one party besides A")
        n = layout.n
        self.a_party = str(a_party)
        self.b_layout = QubitLayout(tuple(p for p in layout.parties if p != self.a_party))
        d_b = self.b_layout.total_dim
        t = rho_ab.matrix.reshape((2,) * (2 * n))
        rest = [i for i in range(n) if i != a]
        t = t.transpose([a] + rest + [n + a] + [n + i for i in rest])
        self.blocks = t.reshape(2, d_b, 2, d_b).transpose(0, 2, 1, 3)
        self.rho_b = self.blocks[0, 0] + self.blocks[1, 1]
        self.source = rho_ab.description or f"state on {layout.parties}"

    def unnormalized(self, kets: np.ndarray) -> np.ndarray:
        """``<psi_a| rho |psi_a>`` for kets of shape (..., 2) -> (..., d_b, d_b)."""
        return np.einsum("...i,...j,ijkl->...kl", kets.conj(), kets, self.blocks)

    def moments(self, op: np.ndarray) -> np.ndarray:
        """``Tr(R_ij op)`` as a 2x2 array."""
        return np.einsum("ijkl,lk->ij", self.blocks, op)

    def split(self, kets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Probabilities and normalized conditional states; null outcomes get
        probability 0 and a placeholder maximally mixed state."""
        sigma = self.unnormalized(kets)
        probs = np.real(np.trace(sigma, axis1=-2, axis2=-1))
        null = probs <= ZERO_PROB
        probs = np.where(null, 0.0, probs)
        safe = np.where(null, 1.0, probs)
        states = sigma / safe[..., None, None]
        d = sigma.shape[-1]
        states[null] = np.eye(d) / d
        states = 0.5 * (states + np.swapaxes(states.conj(), -1, -2))
        return probs, states


def condition(rho_ab: QuantumState, a_party: str, setting: MeasurementSetting) -> Assemblage:
    cond = _Conditioner(rho_ab, a_party)
    probs, states = cond.split(setting.kets())
    outcomes = tuple(
        Outcome(float(p), QuantumState(cond.b_layout, s) if p > 0 else None)
        for p, s in zip(probs, states)
    )
    return Assemblage(setting, outcomes, cond.source)


# --------------------------------------------------------------------------
# search engine

# An objective maps kets of shape (S, 2, 2) to (values (S,), probs (S, 2),
# per-outcome values (S, 2)).
Objective = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]


def _better(new: float, old: float, maximize: bool) -> bool:
    return new > old + TIE_TOL if maximize else new < old - TIE_TOL


def _optimize(objective: Objective, search: SettingSearch, maximize: bool) -> ConditionalValue:
    theta, phi = search.angles()
    if theta.size == 0:
        raise ValueError("empty search space")
    best_i, best_v, best_p, best_o = -1, None, None, None
    for start in range(0, theta.size, BATCH):
        vals, probs, per = objective(_kets(theta[start : start + BATCH], phi[start : start + BATCH]))
        for j, v in enumerate(vals):
            if best_v is None or _better(v, best_v, maximize):
                best_i, best_v, best_p, best_o = start + j, float(v), probs[j], per[j]
    evaluations = theta.size
    th, ph = float(theta[best_i]), float(phi[best_i])

    if search.refine:
        d_th, d_ph = search.theta_step, search.phi_step
        while max(d_th, d_ph) >= search.refine_tolerance:
            cand_th = np.array([th + d_th, th - d_th, th, th])
            cand_ph = np.array([ph, ph, ph + d_ph, ph - d_ph])
            vals, probs, per = objective(_kets(cand_th, cand_ph))
            evaluations += 4
            pick = None
            for j, v in enumerate(vals):
                if _better(v, best_v if pick is None else float(vals[pick]), maximize):
                    pick = j
            if pick is None:
                d_th, d_ph = d_th / 2, d_ph / 2
                continue
            th, ph = float(cand_th[pick]), float(cand_ph[pick])
            best_v, best_p, best_o = float(vals[pick]), probs[pick], per[pick]

    per_outcome = tuple((float(p), float(o)) for p, o in zip(best_p, best_o))
    return ConditionalValue(
        value=best_v,
        optimizer=MeasurementSetting(th, ph),
        per_outcome=per_outcome,
        sense="max" if maximize else "min",
        evaluations=evaluations,
    )


def _check_b_operator(cond: _Conditioner, gen: HermitianObservable) -> None:
    if gen.layout != cond.b_layout:
        raise LayoutError(f"generator acts on {gen.layout.parties}, expected Bob's parties {cond.b_layout.parties}")


def qcfi(
    rho_ab: QuantumState,
    a_party: str,
    gen: HermitianObservable,
    search: SettingSearch = SettingSearch(),
) -> ConditionalValue:
    """Quantum conditional Fisher information: max over settings of ``sum_a p(a) F_Q[rho_a, H]``."""
    cond = _Conditioner(rho_ab, a_party)
    _check_b_operator(cond, gen)
    h = gen.matrix

    def objective(kets):
        probs, states = cond.split(kets)
        per = qfi_matrices(states, h)
        return np.sum(probs * per, axis=-1), probs, per

    return _optimize(objective, search, maximize=True)


def _block_operator(cond: _Conditioner, block: Iterable[str], gen_block: HermitianObservable) -> np.ndarray:
    block = list(block)
    if not block:
        raise LayoutError("block is empty")
    sub = cond.b_layout.sub(block)
    if gen_block.layout == sub:
        return embed_operator(gen_block, cond.b_layout).matrix
    if gen_block.layout == cond.b_layout and sub == cond.b_layout:
        return gen_block.matrix
    raise LayoutError(f"block generator acts on {gen_block.layout.parties}, expected {sub.parties}")


def qcv(
    rho_ab: QuantumState,
    a_party: str,
    block: Iterable[str],
    gen_block: HermitianObservable,
    search: SettingSearch = SettingSearch(),
) -> ConditionalValue:
    """Quantum conditional variance of ``gen_block`` on the reduced conditional states of ``block``.

    The variance of a block operator only depends on the block marginal, so
    it is evaluated from the 2x2 moment tables ``Tr(R_ij H)`` and
    ``Tr(R_ij H^2)`` of the identity-padded generator.
    """
    cond = _Conditioner(rho_ab, a_party)
    h = _block_operator(cond, block, gen_block)
    m1 = cond.moments(h)
    m2 = cond.moments(h @ h)

    def objective(kets):
        q = lambda m: np.real(np.einsum("...i,ij,...j->...", kets.conj(), m, kets))
        probs = q(cond.blocks.trace(axis1=2, axis2=3))
        first, second = q(m1), q(m2)
        null = probs <= ZERO_PROB
        probs = np.where(null, 0.0, probs)
        safe = np.where(null, 1.0, probs)
        per = second / safe - (first / safe) ** 2
        if np.any(per < PSD_TOL):
            raise ArithmeticError(f"negative conditional variance {per.min():.3e}")
        per = np.where(null, 0.0, np.maximum(per, 0.0))
        return np.sum(probs * per, axis=-1), probs, per

    return _optimize(objective, search, maximize=False)


def convex(fn: Callable[[QuantumState], float]) -> Callable[[QuantumState], float]:
    """Mark a state functional as convex so it can be conditioned."""
    fn.convex = True
    return fn


def conditional_functional(
    rho_ab: QuantumState,
    a_party: str,
    functional: Callable[[QuantumState], float],
    search: SettingSearch = SettingSearch(),
) -> ConditionalValue:
    """Max over settings of ``sum_a p(a) E(rho_a)`` for a convex functional ``E``."""
    if not getattr(functional, "convex", False):
        raise TypeError("functional must be declared convex (wrap it with lhsep.assemblage.convex)")
    cond = _Conditioner(rho_ab, a_party)

    def objective(kets):
        probs, states = cond.split(kets)
        per = np.zeros(probs.shape)
        for idx in np.ndindex(probs.shape):
            if probs[idx] > 0:
                per[idx] = functional(QuantumState(cond.b_layout, states[idx]))
        return np.sum(probs * per, axis=-1), probs, per

    return _optimize(objective, search, maximize=True)


def _split_cut(layout: QubitLayout, cut) -> tuple[list[str], list[str]]:
    cut = list(cut)
    if len(cut) == 2 and all(not isinstance(c, str) for c in cut):
        side, other = [str(x) for x in cut[0]], [str(x) for x in cut[1]]
    else:
        side = [str(x) for x in cut]
        other = [p for p in layout.parties if p not in side]
    layout.indices(side + other)
    if not side or not other:
        raise ValueError(f"degenerate cut {side} | {other}")
    if set(side) & set(other) or len(side) + len(other) != layout.n:
        raise ValueError(f"cut {side} | {other} is not a bipartition of {layout.parties}")
    return side, other


def negativity(state: QuantumState, cut) -> float:
    """``(||rho^T_S||_1 - 1) / 2`` for the partial transpose on one side ``S`` of ``cut``.

    ``cut`` is either one side as a list of labels or a pair of label lists.
    """
    side, _ = _split_cut(state.layout, cut)
    pt = partial_transpose(state, side)
    vals = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    return float(max(0.0, -vals[vals < 0].sum()))


def negativity_functional(cut) -> Callable[[QuantumState], float]:
    return convex(lambda s: negativity(s, cut))


def reduced_conditional_states(assemblage: Assemblage, block: Sequence[str]) -> list[Optional[QuantumState]]:
    return [None if o.state is None else partial_trace(o.state, block) for o in assemblage.outcomes]
