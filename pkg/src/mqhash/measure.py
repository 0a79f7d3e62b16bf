"""Verification measurement basis and density-matrix utilities."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .hashcore import HashParams, QuditState, qudit_hash_state

HERMITIAN_TOL = 1e-9
NEGATIVE_EIG_TOL = 1e-6
# eigenvalues below this are rounding noise; their square roots would not be
ZERO_EIG = 1e-13


@dataclass(frozen=True)
class MeasurementBasis:
    """Channel 0 is the target state, channels 1..d-1 its phase-orthogonal partners."""

    states: tuple[QuditState, ...]

    def __post_init__(self):
        gram = self.gram()
        if np.abs(gram - np.eye(len(self.states))).max() > 1e-10:
            raise ValueError("basis states are not orthonormal")

    @property
    def dim(self) -> int:
        return len(self.states)

    def matrix(self) -> np.ndarray:
        """Rows are the basis vectors."""
        return np.array([st.amplitudes for st in self.states])

    def gram(self) -> np.ndarray:
        mat = self.matrix()
        return mat.conj() @ mat.T


def orthogonal_basis(params: HashParams, j: int, x2: int) -> MeasurementBasis:
    """Target state psi_j(x2) completed by d-1 Fourier-shifted partners.

    Partner g carries extra phase 2*pi*g*k/d on component k (k = 0..d-1).
    When q is a multiple of d the partners keep an exact integer phase form.
    """
    target = qudit_hash_state(params, j, x2)
    d, q = params.d, params.q
    states = [target]
    for g in range(1, d):
        if q % d == 0:
            idx = [(p + g * k * (q // d)) % q for k, p in enumerate(target.phase_indices)]
            states.append(QuditState.from_phases(q, idx))
        else:
            shift = np.exp(2j * np.pi * g * np.arange(d) / d)
            states.append(QuditState(target.amplitudes * shift))
    return MeasurementBasis(tuple(states))


def outcome_probabilities(state: QuditState, basis: MeasurementBasis) -> np.ndarray:
    """|<basis_g|state>|^2 for every channel g."""
    if state.dim != basis.dim:
        raise ValueError(f"state has dimension {state.dim}, basis {basis.dim}")
    probs = np.array([abs(b.inner(state)) ** 2 for b in basis.states])
    return probs


# ---------------------------------------------------------------------------
# Density matrices


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A d x d Hermitian matrix with (approximately) unit trace.

    Reconstructed experimental matrices rarely have trace exactly one, so the
    trace tolerance can be widened; the entries are never rescaled.
    """

    entries: np.ndarray
    trace_tol: float = 1e-6

    def __post_init__(self):
        rho = np.array(self.entries, dtype=np.complex128)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {rho.shape}")
        if np.abs(rho - rho.conj().T).max() > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > self.trace_tol:
            raise ValueError(f"trace {tr:.6g} differs from 1 by more than {self.trace_tol}")
        rho = (rho + rho.conj().T) / 2
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @classmethod
    def pure(cls, state) -> "DensityMatrix":
        vec = state.amplitudes if isinstance(state, QuditState) else np.asarray(state)
        return cls(np.outer(vec, vec.conj()))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def _clamp(w: np.ndarray) -> np.ndarray:
    if w.min() < -NEGATIVE_EIG_TOL:
        raise ValueError(f"matrix has a negative eigenvalue {w.min():.3g}")
    return np.where(w > ZERO_EIG, w, 0.0)


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    return (v * np.sqrt(_clamp(w))) @ v.conj().T


def density_fidelity(target: DensityMatrix, measured: DensityMatrix) -> float:
    """Uhlmann fidelity [Tr sqrt(sqrt(t) m sqrt(t))]^2, clipped to [0, 1]."""
    if target.dim != measured.dim:
        raise ValueError("density matrices have different dimensions")
    root = _psd_sqrt(target.entries)
    inner = root @ measured.entries @ root
    w = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    f = float(np.sqrt(_clamp(w)).sum() ** 2)
    return min(max(f, 0.0), 1.0)


def purity_max_eigenvalue(rho: DensityMatrix) -> float:
    """Largest eigenvalue; 1 for a pure state, 1/d for the maximally mixed one."""
    return float(np.linalg.eigvalsh(rho.entries)[-1])


# ---------------------------------------------------------------------------
# Text format: d, then d rows of real parts, then d rows of imaginary parts.


def parse_density_matrix(text: str, trace_tol: float = 1e-6) -> DensityMatrix:
    tokens = text.split()
    if not tokens:
        raise ValueError("empty density matrix document")
    try:
        d = int(tokens[0])
        vals = [float(t) for t in tokens[1:]]
    except ValueError as exc:
        raise ValueError(f"malformed density matrix document: {exc}") from exc
    if d < 1 or len(vals) != 2 * d * d:
        raise ValueError(f"expected {2 * d * d} numbers after d={d}, got {len(vals)}")
    arr = np.array(vals).reshape(2, d, d)
    return DensityMatrix(arr[0] + 1j * arr[1], trace_tol=trace_tol)


def load_density_matrix(path: str | Path, trace_tol: float = 1e-6) -> DensityMatrix:
    return parse_density_matrix(Path(path).read_text(), trace_tol=trace_tol)


def format_density_matrix(rho: DensityMatrix) -> str:
    lines = [str(rho.dim)]
    for part in (rho.entries.real, rho.entries.imag):
        lines += [" ".join(repr(float(v)) for v in row) for row in part]
    return "\n".join(lines) + "\n"
