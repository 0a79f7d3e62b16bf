"""Hash states over Z_q, character-sum bias, and fidelity between hashes.

All phases are kept as integer indices modulo ``q``; a complex value is only
formed by looking up the ``q``-th roots of unity, so equal residues always
produce bit-identical amplitudes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

# Values within this distance of the maximum count as tied; the smallest x wins.
TIE_TOL = 1e-12


@lru_cache(maxsize=64)
def roots_of_unity(q: int) -> np.ndarray:
    """exp(2*pi*i*k/q) for k = 0..q-1 (read-only)."""
    k = np.arange(q)
    roots = np.exp(2j * np.pi * k / q)
    roots.setflags(write=False)
    return roots


def _check_q(q: int) -> int:
    if int(q) != q or q < 1:
        raise ValueError(f"q must be a positive integer, got {q!r}")
    return int(q)


def _check_set(elements: Iterable[int], q: int) -> np.ndarray:
    arr = np.asarray(list(elements), dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("set must be a nonempty sequence of integers")
    if np.any(arr < 0) or np.any(arr >= q):
        raise ValueError(f"set elements must lie in [0, {q})")
    return arr


def _check_x(x: int, q: int, name: str = "x") -> int:
    if int(x) != x or not 0 <= x < q:
        raise ValueError(f"{name} must be an integer in [0, {q}), got {x!r}")
    return int(x)


def _first_argmax(values: np.ndarray) -> int:
    top = values.max()
    return int(np.flatnonzero(values >= top - TIE_TOL)[0])


# ---------------------------------------------------------------------------
# Parameters and states


@dataclass(frozen=True)
class HashParams:
    """Phase parameters of an m-qudit hash over Z_q.

    ``s`` holds m rows of d integers; row j is the set S_j used by qudit j.
    Rows are in canonical form (first entry 0) with pairwise distinct entries.
    """

    q: int
    d: int
    m: int
    s: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        q = _check_q(self.q)
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"d must be an integer >= 2, got {self.d!r}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be an integer >= 1, got {self.m!r}")
        if self.d > q:
            raise ValueError(f"d={self.d} distinct phases do not fit in Z_{q}")
        rows = tuple(tuple(int(v) for v in row) for row in self.s)
        if len(rows) != self.m:
            raise ValueError(f"expected {self.m} rows in s, got {len(rows)}")
        for j, row in enumerate(rows):
            if len(row) != self.d:
                raise ValueError(f"row {j} has {len(row)} entries, expected {self.d}")
            if any(not 0 <= v < q for v in row):
                raise ValueError(f"row {j} has entries outside [0, {q})")
            if row[0] != 0:
                raise ValueError(f"row {j} is not canonical: first entry must be 0")
            if len(set(row)) != self.d:
                raise ValueError(f"row {j} has repeated entries: {row}")
        object.__setattr__(self, "s", rows)

    @classmethod
    def from_rows(cls, q: int, rows: Sequence[Sequence[int]]) -> "HashParams":
        """Build params from arbitrary distinct-element rows, normalizing each."""
        rows = [tuple(normalize_set(row, q)) for row in rows]
        return cls(q=q, d=len(rows[0]), m=len(rows), s=tuple(rows))

    def array(self) -> np.ndarray:
        return np.array(self.s, dtype=np.int64)

    def to_dict(self) -> dict:
        return {"q": self.q, "d": self.d, "m": self.m, "s": [list(r) for r in self.s]}

    @classmethod
    def from_dict(cls, data: dict) -> "HashParams":
        try:
            return cls(q=data["q"], d=data["d"], m=data["m"],
                       s=tuple(tuple(r) for r in data["s"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed params document: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "HashParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class QuditState:
    """A d-dimensional unit vector.

    When built through :meth:`from_phases` the state also remembers its exact
    form: amplitude k is exp(2*pi*i*phase_indices[k]/q)/sqrt(d).
    """

    amplitudes: np.ndarray
    q: int | None = None
    phase_indices: tuple[int, ...] | None = None

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size < 1:
            raise ValueError("amplitudes must be a nonempty 1-D vector")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_phases(cls, q: int, phase_indices: Sequence[int]) -> "QuditState":
        q = _check_q(q)
        idx = tuple(int(p) % q for p in phase_indices)
        amps = roots_of_unity(q)[list(idx)] / math.sqrt(len(idx))
        return cls(amps, q=q, phase_indices=idx)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def inner(self, other: "QuditState") -> complex:
        """<self|other>."""
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        if (self.phase_indices is not None and other.phase_indices is not None
                and self.q == other.q):
            diff = [(b - a) % self.q for a, b in zip(self.phase_indices, other.phase_indices)]
            return complex(roots_of_unity(self.q)[diff].sum() / self.dim)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __eq__(self, other):
        if not isinstance(other, QuditState):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.amplitudes, other.amplitudes)

    __hash__ = None


@dataclass(frozen=True)
class QuantumHash:
    """Ordered product of m qudit states; never expanded unless asked."""

    qudits: tuple[QuditState, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.qudits)

    def inner(self, other: "QuantumHash") -> complex:
        if len(other) != len(self):
            raise ValueError("hashes have different numbers of qudits")
        out = 1 + 0j
        for a, b in zip(self.qudits, other.qudits):
            out *= a.inner(b)
        return out

    def fidelity(self, other: "QuantumHash") -> float:
        return abs(self.inner(other)) ** 2

    def statevector(self) -> np.ndarray:
        """Full d**m tensor-product vector. Only sensible for small m."""
        vec = np.ones(1, dtype=np.complex128)
        for qd in self.qudits:
            vec = np.kron(vec, qd.amplitudes)
        return vec


@dataclass(frozen=True)
class BiasedSet:
    q: int
    elements: tuple[int, ...]
    epsilon: float
    certified: bool = False
    x_star: int | None = None


# ---------------------------------------------------------------------------
# Bias


def bias(elements: Sequence[int], x: int, q: int) -> float:
    """Normalized character-sum modulus |sum_s exp(2*pi*i*s*x/q)| / |S|."""
    q = _check_q(q)
    arr = _check_set(elements, q)
    x = _check_x(x, q)
    total = roots_of_unity(q)[(arr * x) % q].sum()
    return float(abs(total) / arr.size)


def bias_profile(elements: Sequence[int], q: int) -> np.ndarray:
    """bias(elements, x, q) for every x in [0, q)."""
    q = _check_q(q)
    arr = _check_set(elements, q)
    xs = np.arange(q)
    sums = roots_of_unity(q)[np.outer(xs, arr) % q].sum(axis=1)
    return np.abs(sums) / arr.size


def max_bias(elements: Sequence[int], q: int) -> tuple[int, float]:
    """Largest bias over nonzero x, returned as (x_star, value).

    For q == 1 there is no nonzero x and (0, 0.0) is returned.
    """
    prof = bias_profile(elements, q)
    if q == 1:
        return 0, 0.0
    x = _first_argmax(prof[1:]) + 1
    return x, float(prof[x])


def normalize_set(elements: Sequence[int], q: int) -> list[int]:
    """Shift a set so that its first element becomes 0, then sort.

    Every bias value is unchanged by the shift.
    """
    q = _check_q(q)
    arr = _check_set(elements, q)
    if len(set(arr.tolist())) != arr.size:
        raise ValueError(f"set has duplicate elements: {list(arr)}")
    return sorted(int(v) for v in (arr - arr[0]) % q)


# ---------------------------------------------------------------------------
# Hash states and fidelities


def qudit_hash_state(params: HashParams, j: int, x: int) -> QuditState:
    """State of qudit ``j`` (1-based) for input ``x``."""
    if int(j) != j or not 1 <= j <= params.m:
        raise ValueError(f"qudit index j must be in [1, {params.m}], got {j!r}")
    x = _check_x(x, params.q)
    row = params.s[j - 1]
    return QuditState.from_phases(params.q, [(s * x) % params.q for s in row])


def quantum_hash(params: HashParams, x: int) -> QuantumHash:
    x = _check_x(x, params.q)
    return QuantumHash(tuple(qudit_hash_state(params, j, x) for j in range(1, params.m + 1)))


def row_fidelities(rows: np.ndarray, q: int, xs: np.ndarray | None = None,
                   chunk: int = 4096) -> np.ndarray:
    """Per-row collision factor |sum_k exp(2*pi*i*s_k*x/q)|^2 / d^2.

    ``rows`` is an (n, d) integer array; the result has shape (n, len(xs)),
    with ``xs`` defaulting to 1..q-1.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
    if xs is None:
        xs = np.arange(1, q)
    xs = np.asarray(xs, dtype=np.int64)
    d = rows.shape[1]
    roots = roots_of_unity(q)
    cos, sin = roots.real, roots.imag
    out = np.empty((rows.shape[0], xs.size))
    for lo in range(0, rows.shape[0], chunk):
        ph = (xs[None, :, None] * rows[lo:lo + chunk, None, :]) % q
        out[lo:lo + chunk] = (cos[ph].sum(axis=2) ** 2 + sin[ph].sum(axis=2) ** 2) / d**2
    return out


def collision_profile(params: HashParams) -> np.ndarray:
    """hash_fidelity(params, x, 0) for x = 1..q-1."""
    return row_fidelities(params.array(), params.q).prod(axis=0)


def hash_fidelity(params: HashParams, x1: int, x2: int) -> float:
    """|<psi(x1)|psi(x2)>|^2 in closed form from the phase differences."""
    x1 = _check_x(x1, params.q, "x1")
    x2 = _check_x(x2, params.q, "x2")
    diff = (x1 - x2) % params.q
    roots = roots_of_unity(params.q)
    out = 1.0
    for row in params.s:
        term = roots[[(s * diff) % params.q for s in row]].sum()
        out *= (term.real**2 + term.imag**2) / params.d**2
    return float(out)


def worst_case_collision(params: HashParams) -> tuple[int, float]:
    """(x_star, fidelity) maximizing hash_fidelity(params, x, 0) over x != 0."""
    prof = collision_profile(params)
    i = _first_argmax(prof)
    return i + 1, float(prof[i])
