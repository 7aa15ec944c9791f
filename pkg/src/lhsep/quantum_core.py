"""Dense linear algebra for small multi-qubit registers.

Index convention: the party at position 0 of a layout owns the most
significant bit of the computational-basis index, so
``tensor(a, b).matrix == np.kron(a.matrix, b.matrix)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = -1e-10
IMAG_TOL = 1e-10
UNIT_TOL = 1e-9

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

# sigma_z eigenstates: |up> has eigenvalue +1 and is basis index 0
UP = np.array([1, 0], dtype=complex)
DOWN = np.array([0, 1], dtype=complex)

AXES = {
    "x": (1.0, 0.0, 0.0),
    "y": (0.0, 1.0, 0.0),
    "z": (0.0, 0.0, 1.0),
}


class InvalidStateError(ValueError):
    """A matrix failed one of the density-matrix invariants."""


class LayoutError(ValueError):
    """Party labels are unknown, duplicated or do not match."""


@dataclass(frozen=True)
class QubitLayout:
    parties: tuple[str, ...]

    def __post_init__(self):
        parties = tuple(str(p) for p in self.parties)
        if not parties:
            raise LayoutError("a layout needs at least one party")
        if len(set(parties)) != len(parties):
            raise LayoutError(f"duplicate party labels in {parties}")
        object.__setattr__(self, "parties", parties)

    @property
    def n(self) -> int:
        return len(self.parties)

    @property
    def total_dim(self) -> int:
        return 2**self.n

    def index(self, label: str) -> int:
        try:
            return self.parties.index(str(label))
        except ValueError:
            raise LayoutError(f"unknown party {label!r}; layout has {self.parties}") from None

    def indices(self, labels: Iterable[str]) -> list[int]:
        return [self.index(lab) for lab in labels]

    def sub(self, labels: Iterable[str]) -> "QubitLayout":
        """Layout of ``labels`` kept in this layout's order."""
        wanted = {str(lab) for lab in labels}
        self.indices(wanted)
        return QubitLayout(tuple(p for p in self.parties if p in wanted))

    def __add__(self, other: "QubitLayout") -> "QubitLayout":
        return QubitLayout(self.parties + other.parties)


def _as_layout(layout: Union[QubitLayout, Sequence[str], int]) -> QubitLayout:
    if isinstance(layout, QubitLayout):
        return layout
    if isinstance(layout, int):
        return QubitLayout(tuple(str(i + 1) for i in range(layout)))
    return QubitLayout(tuple(layout))


def _frozen(matrix: np.ndarray) -> np.ndarray:
    matrix = np.array(matrix, dtype=complex)
    matrix.setflags(write=False)
    return matrix


def _check_shape(layout: QubitLayout, matrix: np.ndarray) -> None:
    d = layout.total_dim
    if matrix.shape != (d, d):
        raise LayoutError(f"matrix shape {matrix.shape} does not match {layout.n} qubits (dim {d})")


def hermiticity_error(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T)))


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Density matrix on a qubit layout.

    The constructor symmetrizes ``(M + M^dagger)/2`` after checking that the
    input is Hermitian, then validates unit trace and positivity.
    """

    layout: QubitLayout
    matrix: np.ndarray
    description: str = field(default="", compare=False)

    def __post_init__(self):
        layout = _as_layout(self.layout)
        matrix = np.asarray(self.matrix, dtype=complex)
        _check_shape(layout, matrix)
        if not np.all(np.isfinite(matrix)):
            raise InvalidStateError("matrix has non-finite entries")
        herm = hermiticity_error(matrix)
        if herm > HERMITIAN_TOL:
            raise InvalidStateError(f"not Hermitian: max |M - M^dagger| = {herm:.3e}")
        matrix = 0.5 * (matrix + matrix.conj().T)
        tr = np.trace(matrix).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace is {tr!r}, expected 1")
        lam_min = float(np.linalg.eigvalsh(matrix)[0])
        if lam_min < PSD_TOL:
            raise InvalidStateError(f"not positive semidefinite: smallest eigenvalue {lam_min:.3e}")
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "matrix", _frozen(matrix))

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    def purity(self) -> float:
        return float(np.real(np.einsum("ij,ji->", self.matrix, self.matrix)))


@dataclass(frozen=True, eq=False)
class HermitianObservable:
    layout: QubitLayout
    matrix: np.ndarray
    description: str = ""

    def __post_init__(self):
        layout = _as_layout(self.layout)
        matrix = np.asarray(self.matrix, dtype=complex)
        _check_shape(layout, matrix)
        herm = hermiticity_error(matrix)
        if herm > HERMITIAN_TOL:
            raise ValueError(f"observable not Hermitian: max |M - M^dagger| = {herm:.3e}")
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "matrix", _frozen(0.5 * (matrix + matrix.conj().T)))

    @property
    def dim(self) -> int:
        return self.layout.total_dim


Operator = Union[QuantumState, HermitianObservable]


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues in descending order with eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


# --------------------------------------------------------------------------
# constructors


def pure_state(layout, vector, description: str = "") -> QuantumState:
    layout = _as_layout(layout)
    vec = np.asarray(vector, dtype=complex).reshape(-1)
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise InvalidStateError("zero state vector")
    vec = vec / norm
    return QuantumState(layout, np.outer(vec, vec.conj()), description)


def maximally_mixed(layout) -> QuantumState:
    layout = _as_layout(layout)
    d = layout.total_dim
    return QuantumState(layout, np.eye(d) / d, "maximally mixed")


def basis_ket(bits: str) -> np.ndarray:
    """Product ket from a string over ``u``/``d`` (spin up/down) or ``0``/``1``.

    ``"0"`` is spin up, matching the sigma_z eigenvalue +1 at index 0.
    """
    vec = np.ones(1, dtype=complex)
    for b in bits:
        if b in "u0":
            vec = np.kron(vec, UP)
        elif b in "d1":
            vec = np.kron(vec, DOWN)
        else:
            raise ValueError(f"bad basis symbol {b!r}")
    return vec


def unit_vector(direction) -> np.ndarray:
    if isinstance(direction, str):
        try:
            direction = AXES[direction.lower()]
        except KeyError:
            raise ValueError(f"unknown axis {direction!r}") from None
    n = np.asarray(direction, dtype=float).reshape(-1)
    if n.shape != (3,):
        raise ValueError(f"direction must be a 3-vector, got shape {n.shape}")
    norm = float(np.linalg.norm(n))
    if abs(norm - 1.0) > UNIT_TOL:
        raise ValueError(f"direction {tuple(float(v) for v in n)} is not a unit vector (norm {norm!r})")
    return n


# --------------------------------------------------------------------------
# structural operations


def tensor(a: Operator, b: Operator) -> Operator:
    if type(a) is not type(b):
        raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")
    layout = a.layout + b.layout
    matrix = np.kron(a.matrix, b.matrix)
    if isinstance(a, QuantumState):
        return QuantumState(layout, matrix)
    return HermitianObservable(layout, matrix, f"({a.description}) x ({b.description})")


def reduce_matrix(matrix: np.ndarray, n: int, keep: Sequence[int]) -> np.ndarray:
    """Partial trace of a (possibly batched) ``2^n x 2^n`` matrix.

    ``keep`` lists qubit positions in ascending order; the leading batch
    axes of ``matrix`` are preserved.
    """
    keep = sorted(keep)
    drop = [i for i in range(n) if i not in keep]
    batch = matrix.shape[:-2]
    nb = len(batch)
    t = matrix.reshape(batch + (2,) * (2 * n))
    row = [nb + i for i in keep] + [nb + i for i in drop]
    col = [nb + n + i for i in keep] + [nb + n + i for i in drop]
    t = t.transpose(list(range(nb)) + row + col)
    dk, dd = 2 ** len(keep), 2 ** len(drop)
    t = t.reshape(batch + (dk, dd, dk, dd))
    return np.einsum("...iaja->...ij", t)


def partial_trace(state: QuantumState, keep: Iterable[str]) -> QuantumState:
    keep = list(keep)
    if not keep:
        raise LayoutError("keep set is empty")
    sub = state.layout.sub(keep)
    idx = state.layout.indices(sub.parties)
    if len(idx) == state.layout.n:
        return state
    return QuantumState(sub, reduce_matrix(state.matrix, state.layout.n, idx))


def partial_transpose(state: QuantumState, parties: Iterable[str]) -> np.ndarray:
    """Matrix of the partial transpose on ``parties`` (no longer a state)."""
    n = state.layout.n
    flip = set(state.layout.indices(parties))
    t = state.matrix.reshape((2,) * (2 * n))
    axes = list(range(2 * n))
    for i in flip:
        axes[i], axes[n + i] = n + i, i
    return t.transpose(axes).reshape(state.dim, state.dim)


def eig_hermitian(op: Union[Operator, np.ndarray]) -> Spectrum:
    matrix = op.matrix if hasattr(op, "matrix") else np.asarray(op, dtype=complex)
    herm = hermiticity_error(matrix)
    if herm > HERMITIAN_TOL:
        raise ValueError(f"not Hermitian: max |M - M^dagger| = {herm:.3e}")
    vals, vecs = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    return Spectrum(vals[::-1].copy(), vecs[:, ::-1].copy())


def _check_layouts(state: QuantumState, obs: HermitianObservable) -> None:
    if state.layout != obs.layout:
        raise LayoutError(f"layout mismatch: state {state.layout.parties} vs observable {obs.layout.parties}")


def expectation(state: QuantumState, obs: HermitianObservable) -> float:
    _check_layouts(state, obs)
    val = np.einsum("ij,ji->", state.matrix, obs.matrix)
    if abs(val.imag) > IMAG_TOL:
        raise ArithmeticError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def variance(state: QuantumState, obs: HermitianObservable) -> float:
    """``<H^2> - <H>^2``, clamped to zero within numerical slack."""
    _check_layouts(state, obs)
    return _variance(state.matrix, obs.matrix)


def _variance(rho: np.ndarray, h: np.ndarray) -> float:
    mean = np.einsum("ij,ji->", rho, h).real
    second = np.einsum("ij,ji->", rho, h @ h).real
    var = float(second - mean**2)
    if var < PSD_TOL:
        raise ArithmeticError(f"negative variance {var:.3e}")
    return max(var, 0.0)


def local_operator(layout, label: str, op: np.ndarray) -> np.ndarray:
    """``op`` acting on one party, identity on the rest."""
    layout = _as_layout(layout)
    pos = layout.index(label)
    return np.kron(np.kron(np.eye(2**pos), op), np.eye(2 ** (layout.n - pos - 1)))


def spin_component(direction) -> np.ndarray:
    n = unit_vector(direction)
    return 0.5 * (n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z)


def _axis_name(direction) -> str:
    n = unit_vector(direction)
    for name, axis in AXES.items():
        if np.allclose(n, axis):
            return name
    return "n=({:.6g},{:.6g},{:.6g})".format(*n)


def collective_spin(layout, direction) -> HermitianObservable:
    """``J_n = sum_i n . sigma^(i) / 2`` over every party in ``layout``."""
    layout = _as_layout(layout)
    return block_generator(layout, layout.parties, direction)


def block_generator(layout, block: Iterable[str], direction, reduced: bool = False) -> HermitianObservable:
    """Collective spin restricted to ``block``.

    With ``reduced=True`` the operator lives on the block's own layout,
    without identity padding on the other parties.
    """
    layout = _as_layout(layout)
    sub = layout.sub(block)
    s = spin_component(direction)
    target = sub if reduced else layout
    matrix = sum(local_operator(target, p, s) for p in sub.parties)
    name = f"J_{_axis_name(direction)}"
    if sub != layout:
        name += " restricted to block {" + ",".join(sub.parties) + "}"
    return HermitianObservable(target, matrix, name)


# --------------------------------------------------------------------------
# random states (test and demo support)


def random_pure_state(layout, rng: np.random.Generator) -> QuantumState:
    layout = _as_layout(layout)
    d = layout.total_dim
    vec = rng.normal(size=d) + 1j * rng.normal(size=d)
    return pure_state(layout, vec, "random pure")


def random_density_matrix(layout, rng: np.random.Generator, rank: int | None = None) -> QuantumState:
    """Hilbert-Schmidt (Ginibre) random state of the given rank."""
    layout = _as_layout(layout)
    d = layout.total_dim
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = g @ g.conj().T
    return QuantumState(layout, rho / np.trace(rho).real, "random mixed")


def mix(states: Sequence[QuantumState], weights: Sequence[float]) -> QuantumState:
    layout = states[0].layout
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    matrix = sum(wi * s.matrix for wi, s in zip(w, states))
    return QuantumState(layout, matrix, "mixture")


# --------------------------------------------------------------------------
# state files


def _fmt(x: float) -> str:
    return "%.17g" % x


def _matrix_json(m: np.ndarray) -> str:
    rows = ("[" + ", ".join(_fmt(v) for v in row) + "]" for row in m)
    return "[\n    " + ",\n    ".join(rows) + "\n  ]"


def dumps_state(state: QuantumState) -> str:
    return (
        "{\n"
        f'  "parties": {json.dumps(list(state.layout.parties))},\n'
        f'  "matrix_re": {_matrix_json(state.matrix.real)},\n'
        f'  "matrix_im": {_matrix_json(state.matrix.imag)}\n'
        "}\n"
    )


def loads_state(text: str) -> QuantumState:
    try:
        doc = json.loads(text)
        parties = doc["parties"]
        re = np.asarray(doc["matrix_re"], dtype=float)
        im = np.asarray(doc["matrix_im"], dtype=float)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InvalidStateError(f"malformed state document: {exc}") from exc
    if re.shape != im.shape:
        raise InvalidStateError(f"matrix_re shape {re.shape} != matrix_im shape {im.shape}")
    return QuantumState(QubitLayout(tuple(parties)), re + 1j * im)


def write_state(path, state: QuantumState) -> None:
    Path(path).write_text(dumps_state(state))


def read_state(path) -> QuantumState:
    return loads_state(Path(path).read_text())


def embed_operator(obs: HermitianObservable, layout) -> HermitianObservable:
    """Pad ``obs`` with identities so it acts on the larger ``layout``."""
    layout = _as_layout(layout)
    if obs.layout == layout:
        return obs
    idx = layout.indices(obs.layout.parties)
    rest = [i for i in range(layout.n) if i not in idx]
    n = layout.n
    full = np.kron(obs.matrix, np.eye(2 ** len(rest)))
    order = idx + rest  # qubit position in ``full`` -> position in layout
    perm = np.argsort(order)
    t = full.reshape((2,) * (2 * n)).transpose(list(perm) + [n + p for p in perm])
    return HermitianObservable(layout, t.reshape(layout.total_dim, layout.total_dim), obs.description)
