"""Dense linear algebra on small labeled composite Hilbert spaces.

Every object here is immutable: the backing numpy arrays are flagged
read-only on construction, so values can be shared freely between threads
and worker processes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class Tolerances:
    """Single tuning point for every invariant check in the package."""

    atol: float = 1e-10
    hermitian_rel: float = 1e-12
    state_hermitian: float = 1e-10
    trace: float = 1e-8
    min_eig: float = -1e-8
    norm: float = 1e-10
    fidelity_clamp: float = 1e-8


TOL = Tolerances()


class QCoreError(ValueError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HilbertSpace:
    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        facs = tuple((str(lbl), int(d)) for lbl, d in self.factors)
        if not facs:
            raise QCoreError("a Hilbert space needs at least one factor")
        labels = [lbl for lbl, _ in facs]
        if len(set(labels)) != len(labels):
            raise QCoreError(f"duplicate labels in {labels}")
        if any(d < 1 for _, d in facs):
            raise QCoreError("factor dimensions must be positive")
        object.__setattr__(self, "factors", facs)

    @classmethod
    def of(cls, **dims: int) -> "HilbertSpace":
        return cls(tuple(dims.items()))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise QCoreError(f"unknown label {label!r}; space has {self.labels}") from None

    def concat(self, other: "HilbertSpace") -> "HilbertSpace":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise QCoreError(f"label collision: {sorted(clash)}")
        return HilbertSpace(self.factors + other.factors)

    def basis_index(self, **levels: int) -> int:
        """Flat row-major index of a product basis state."""
        if set(levels) != set(self.labels):
            raise QCoreError(f"need a level for each of {self.labels}")
        idx = [levels[lbl] for lbl in self.labels]
        return int(np.ravel_multi_index(idx, self.dims))


def _check_space(a, b):
    if a.space != b.space:
        raise QCoreError(f"space mismatch: {a.space.factors} vs {b.space.factors}")


@dataclass(frozen=True, eq=False)
class Operator:
    space: HilbertSpace
    data: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        arr = _frozen(self.data)
        n = self.space.dim
        if arr.shape != (n, n):
            raise QCoreError(f"operator shape {arr.shape} does not match dimension {n}")
        if not np.all(np.isfinite(arr)):
            raise QCoreError("operator entries must be finite")
        if self.hermitian:
            scale = np.max(np.abs(arr)) if arr.size else 0.0
            if np.max(np.abs(arr - arr.conj().T), initial=0.0) > TOL.hermitian_rel * scale:
                raise QCoreError("operator flagged Hermitian is not")
        object.__setattr__(self, "data", arr)

    @property
    def dag(self) -> "Operator":
        return Operator(self.space, self.data.conj().T, self.hermitian)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            _check_space(self, other)
            return Operator(self.space, self.data @ other.data)
        if isinstance(other, StateVector):
            _check_space(self, other)
            return StateVector(self.space, self.data @ other.amplitudes, normalize=False, check=False)
        return NotImplemented

    def __add__(self, other: "Operator") -> "Operator":
        _check_space(self, other)
        return Operator(self.space, self.data + other.data, self.hermitian and other.hermitian)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_space(self, other)
        return Operator(self.space, self.data - other.data, self.hermitian and other.hermitian)

    def __mul__(self, c) -> "Operator":
        c = complex(c)
        return Operator(self.space, c * self.data, self.hermitian and c.imag == 0)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return self * -1

    def as_hermitian(self) -> "Operator":
        return Operator(self.space, self.data, hermitian=True)

    def allclose(self, other: "Operator", atol: float = TOL.atol) -> bool:
        return self.space == other.space and np.allclose(self.data, other.data, atol=atol, rtol=0)


class StateVector:
    __slots__ = ("space", "amplitudes")

    def __init__(self, space: HilbertSpace, amplitudes, normalize: bool = False, check: bool = True):
        vec = np.array(amplitudes, dtype=complex).reshape(-1)
        if vec.shape != (space.dim,):
            raise QCoreError(f"state length {vec.shape[0]} does not match dimension {space.dim}")
        if not np.all(np.isfinite(vec)):
            raise QCoreError("state amplitudes must be finite")
        nrm = np.linalg.norm(vec)
        if normalize:
            if nrm == 0:
                raise QCoreError("cannot normalize the zero vector")
            vec = vec / nrm
        elif check and abs(nrm - 1) > TOL.norm:
            raise QCoreError(f"state norm {nrm} deviates from 1")
        vec.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "amplitudes", vec)

    def __setattr__(self, *_):
        raise AttributeError("StateVector is immutable")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "StateVector") -> complex:
        _check_space(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def dm(self) -> "DensityMatrix":
        return DensityMatrix(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))

    def evolve(self, U: Operator) -> "StateVector":
        _check_space(self, U)
        return StateVector(self.space, U.data @ self.amplitudes)

    def __repr__(self):
        return f"StateVector({self.space.labels}, {np.round(self.amplitudes, 6)})"


class DensityMatrix:
    __slots__ = ("space", "data")

    def __init__(self, space: HilbertSpace, data, check: bool = True):
        arr = np.array(data, dtype=complex)
        n = space.dim
        if arr.shape != (n, n):
            raise QCoreError(f"density matrix shape {arr.shape} does not match dimension {n}")
        if not np.all(np.isfinite(arr)):
            raise QCoreError("density matrix entries must be finite")
        if check:
            herm = np.max(np.abs(arr - arr.conj().T))
            if herm > TOL.state_hermitian:
                raise QCoreError(f"density matrix not Hermitian (deviation {herm:.3g})")
            tr = np.trace(arr).real
            if abs(tr - 1) > TOL.trace:
                raise QCoreError(f"density matrix trace {tr} deviates from 1")
            lo = np.linalg.eigvalsh(0.5 * (arr + arr.conj().T))[0]
            if lo < TOL.min_eig:
                raise QCoreError(f"density matrix has negative eigenvalue {lo:.3g}")
        arr.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, *_):
        raise AttributeError("DensityMatrix is immutable")

    @classmethod
    def mixed(cls, space: HilbertSpace) -> "DensityMatrix":
        return cls(space, np.eye(space.dim) / space.dim)

    @property
    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def purity(self) -> float:
        return float(np.real(np.trace(self.data @ self.data)))

    def evolve(self, U: Operator) -> "DensityMatrix":
        _check_space(self, U)
        return DensityMatrix(self.space, U.data @ self.data @ U.data.conj().T)

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.data)).copy()

    def allclose(self, other: "DensityMatrix", atol: float = TOL.atol) -> bool:
        return self.space == other.space and np.allclose(self.data, other.data, atol=atol, rtol=0)

    def __repr__(self):
        return f"DensityMatrix({self.space.labels}, dim={self.space.dim})"


# ---------------------------------------------------------------- composition

def tensor(a, b):
    """Kronecker product on the concatenated factor list; labels must be disjoint."""
    if type(a) is not type(b):
        raise QCoreError("tensor operands must be the same kind")
    space = a.space.concat(b.space)
    if isinstance(a, Operator):
        return Operator(space, np.kron(a.data, b.data), a.hermitian and b.hermitian)
    if isinstance(a, StateVector):
        return StateVector(space, np.kron(a.amplitudes, b.amplitudes), check=False)
    if isinstance(a, DensityMatrix):
        return DensityMatrix(space, np.kron(a.data, b.data))
    raise QCoreError(f"cannot tensor {type(a).__name__}")


def tensor_all(items: Sequence):
    return reduce(tensor, items)


def embed(op: np.ndarray, label: str, space: HilbertSpace, hermitian: bool = False) -> Operator:
    """Lift a single-factor matrix to the full space with identities elsewhere."""
    k = space.index_of(label)
    mats = [np.eye(d) for d in space.dims]
    if np.shape(op) != (space.dims[k], space.dims[k]):
        raise QCoreError(f"factor {label!r} has dimension {space.dims[k]}, got {np.shape(op)}")
    mats[k] = np.asarray(op, dtype=complex)
    return Operator(space, reduce(np.kron, mats), hermitian)


def partial_trace(rho: DensityMatrix, keep: Iterable[str]) -> DensityMatrix:
    keep = list(keep)
    if not keep:
        raise QCoreError("keep must be nonempty")
    idx = [rho.space.index_of(lbl) for lbl in keep]
    # keep the canonical ordering of the parent space
    idx = sorted(set(idx))
    dims = rho.space.dims
    n = len(dims)
    t = rho.data.reshape(dims + dims)
    traced = [i for i in range(n) if i not in idx]
    # einsum subscripts: ket axes 0..n-1, bra axes n..2n-1, traced axes share a letter
    letters = [chr(97 + i) for i in range(2 * n)]
    for i in traced:
        letters[n + i] = letters[i]
    out = [letters[i] for i in idx] + [letters[n + i] for i in idx]
    red = np.einsum("".join(letters) + "->" + "".join(out), t)
    dk = int(np.prod([dims[i] for i in idx]))
    sub = HilbertSpace(tuple(rho.space.factors[i] for i in idx))
    return DensityMatrix(sub, red.reshape(dk, dk), check=False)


def permute(rho: DensityMatrix, order: Sequence[str]) -> DensityMatrix:
    """Reorder the factors of a density matrix."""
    if sorted(order) != sorted(rho.space.labels):
        raise QCoreError("order must be a permutation of the space labels")
    perm = [rho.space.index_of(lbl) for lbl in order]
    dims = rho.space.dims
    n = len(dims)
    t = rho.data.reshape(dims + dims).transpose(perm + [n + p for p in perm])
    space = HilbertSpace(tuple(rho.space.factors[p] for p in perm))
    return DensityMatrix(space, t.reshape(rho.space.dim, rho.space.dim), check=False)


def expectation(A: Operator, rho: DensityMatrix) -> complex:
    if A.space.dim != rho.space.dim or A.space != rho.space:
        raise QCoreError("operator and state live on different spaces")
    return complex(np.trace(A.data @ rho.data))


def fidelity_pure(psi: StateVector, rho: DensityMatrix) -> float:
    if psi.space != rho.space:
        raise QCoreError("state and density matrix live on different spaces")
    f = float(np.real(np.vdot(psi.amplitudes, rho.data @ psi.amplitudes)))
    if -TOL.fidelity_clamp <= f < 0:
        return 0.0
    if 1 < f <= 1 + TOL.fidelity_clamp:
        return 1.0
    return f


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    _check_space(a, b)
    ev = np.linalg.eigvalsh(a.data - b.data)
    return 0.5 * float(np.sum(np.abs(ev)))


# ------------------------------------------------------------ standard pieces

def destroy(n_levels: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_levels)), 1).astype(complex)


def projector(dim: int, i: int, j: int | None = None) -> np.ndarray:
    """|i><j| on a single factor."""
    m = np.zeros((dim, dim), dtype=complex)
    m[i, i if j is None else j] = 1.0
    return m


PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def basis_state(space: HilbertSpace, **levels: int) -> StateVector:
    v = np.zeros(space.dim, dtype=complex)
    v[space.basis_index(**levels)] = 1.0
    return StateVector(space, v)


def thermal_state(space: HilbertSpace, nbar: float) -> DensityMatrix:
    """Truncated thermal state of a single bosonic factor, renormalized."""
    if len(space.dims) != 1:
        raise QCoreError("thermal_state expects a single-factor space")
    n = np.arange(space.dim)
    p = (nbar / (1 + nbar)) ** n / (1 + nbar)
    return DensityMatrix(space, np.diag(p / p.sum()))


def bell_states(space: HilbertSpace) -> dict[str, StateVector]:
    """Bell states on a two-qubit space, qubit level 0 first."""
    if space.dims != (2, 2):
        raise QCoreError("Bell states need a 2x2 space")
    s = 1 / np.sqrt(2)
    vecs = {
        "PhiPlus": [s, 0, 0, s],
        "PhiMinus": [s, 0, 0, -s],
        "PsiPlus": [0, s, s, 0],
        "PsiMinus": [0, s, -s, 0],
    }
    return {k: StateVector(space, v) for k, v in vecs.items()}


def depolarize(rho: np.ndarray, shrink: float, axes: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Local depolarizing on the listed factors: rho -> s*rho + (1-s)*tr_k(rho)⊗I/d_k."""
    out = np.asarray(rho, dtype=complex)
    for k in axes:
        out = shrink * out + (1 - shrink) * _replace_with_mixed(out, k, dims)
    return out


def _replace_with_mixed(rho: np.ndarray, k: int, dims: Sequence[int]) -> np.ndarray:
    dims = list(dims)
    n = len(dims)
    t = rho.reshape(dims + dims)
    red = np.trace(t, axis1=k, axis2=n + k)  # drops axes k and n+k
    red = np.expand_dims(np.expand_dims(red, k), n + k)
    shape = [1] * (2 * n)
    shape[k] = shape[n + k] = dims[k]
    eye = np.eye(dims[k]).reshape(shape)
    return (red * eye / dims[k]).reshape(rho.shape)


# --------------------------------------------------------------- serialization

def to_json(obj) -> dict:
    """{labels, dims, re, im} with row-major flattening."""
    if isinstance(obj, StateVector):
        arr = obj.amplitudes
    elif isinstance(obj, (Operator, DensityMatrix)):
        arr = obj.data
    else:
        raise QCoreError(f"cannot serialize {type(obj).__name__}")
    flat = np.asarray(arr).reshape(-1)
    return {
        "kind": type(obj).__name__,
        "labels": list(obj.space.labels),
        "dims": list(obj.space.dims),
        "re": [float(x) for x in flat.real],
        "im": [float(x) for x in flat.imag],
    }


def from_json(d: dict):
    space = HilbertSpace(tuple(zip(d["labels"], d["dims"])))
    flat = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
    kind = d.get("kind", "DensityMatrix")
    if kind == "StateVector":
        return StateVector(space, flat)
    mat = flat.reshape(space.dim, space.dim)
    if kind == "Operator":
        return Operator(space, mat)
    return DensityMatrix(space, mat)
