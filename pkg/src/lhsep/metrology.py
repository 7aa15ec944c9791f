"""Quantum Fisher information and moment-based sensitivity bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum_core import (
    PSD_TOL,
    HermitianObservable,
    InvalidStateError,
    QuantumState,
    _check_layouts,
    _variance,
)

SPECTRAL_CUTOFF = 1e-12
RATIO_TOL = 1e-12


class IndeterminateRatioError(ArithmeticError):
    """Vanishing variance with a non-vanishing commutator expectation."""


@dataclass(frozen=True)
class QfiValue:
    value: float
    spectral_cutoff_used: float

    def __float__(self) -> float:
        return self.value


def qfi_matrices(rho: np.ndarray, h: np.ndarray, cutoff: float = SPECTRAL_CUTOFF) -> np.ndarray:
    """Spectral QFI formula on raw (optionally batched) density matrices.

    ``F = 2 sum_{kl} (l_k - l_l)^2 / (l_k + l_l) |<k|H|l>|^2`` with pairs whose
    eigenvalue sum is ``<= cutoff`` skipped. Leading axes of ``rho`` are
    treated as a batch; ``h`` is shared.
    """
    vals, vecs = np.linalg.eigh(rho)
    if np.any(vals[..., 0] < PSD_TOL):
        raise InvalidStateError(f"state not positive semidefinite (min eigenvalue {vals[..., 0].min():.3e})")
    h_eig = np.swapaxes(vecs.conj(), -1, -2) @ h @ vecs
    lam_sum = vals[..., :, None] + vals[..., None, :]
    lam_diff = vals[..., :, None] - vals[..., None, :]
    keep = lam_sum > cutoff
    weight = np.divide(lam_diff**2, lam_sum, out=np.zeros_like(lam_sum), where=keep)
    f = 2.0 * np.sum(weight * np.abs(h_eig) ** 2, axis=(-2, -1))
    return np.maximum(f, 0.0)


def qfi(state: QuantumState, gen: HermitianObservable) -> QfiValue:
    _check_layouts(state, gen)
    return QfiValue(float(qfi_matrices(state.matrix, gen.matrix)), SPECTRAL_CUTOFF)


def commutator_expectation(state: QuantumState, gen: HermitianObservable, meas: HermitianObservable) -> complex:
    """``<[H, M]>``; purely imaginary for Hermitian H and M."""
    _check_layouts(state, gen)
    _check_layouts(state, meas)
    comm = gen.matrix @ meas.matrix - meas.matrix @ gen.matrix
    return complex(np.einsum("ij,ji->", state.matrix, comm))


def squeezing_ratio(state: QuantumState, gen: HermitianObservable, meas: HermitianObservable) -> float:
    """Moment lower bound ``|<[H, M]>|^2 / Var[rho, M]`` on ``F_Q[rho, H]``.

    Returns 0 when numerator and denominator both vanish and raises
    :class:`IndeterminateRatioError` when only the denominator does.
    """
    num = abs(commutator_expectation(state, gen, meas)) ** 2
    den = _variance(state.matrix, meas.matrix)
    if den <= RATIO_TOL:
        if num <= RATIO_TOL:
            return 0.0
        raise IndeterminateRatioError(f"Var[rho, M] = {den:.3e} with |<[H,M]>|^2 = {num:.3e}")
    return num / den


def qfi_variance_gap(state: QuantumState, gen: HermitianObservable) -> float:
    """``4 Var[rho, H] - F_Q[rho, H]``; zero for pure states."""
    _check_layouts(state, gen)
    return 4.0 * _variance(state.matrix, gen.matrix) - qfi(state, gen).value
