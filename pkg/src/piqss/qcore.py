"""Dense complex linear algebra and Dicke-basis machinery for small qubit systems.

Everything here is sized for at most 16 qubits in full statevector form.
Dense numpy arrays (complex128) serve as the matrix/vector payload; the
wrapper classes below attach dimension metadata and enforce the physical
invariants (normalization, hermiticity, positivity, unit trace) at
construction time.

Conventions, fixed globally:
  * logarithms are base 2 (entropies in bits),
  * qubit order is big-endian: register 0 is the most significant bit of
    the amplitude index,
  * eigenvalues in [-EIG_CLAMP, 0] are clamped to 0; anything more negative
    is treated as corrupted input and raises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ATOL = 1e-10
EIG_CLAMP = 1e-10
ENTROPY_CUTOFF = 1e-12


def as_complex_matrix(entries) -> np.ndarray:
    """Validate and return a dense 2-D complex matrix (finite entries)."""
    mat = np.asarray(entries, dtype=np.complex128)
    if mat.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat.view(np.float64))):
        raise ValueError("matrix has non-finite entries")
    return mat


@dataclass(frozen=True)
class StateVector:
    """Pure state on labeled qubit registers; amplitudes big-endian in register order."""

    registers: tuple
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        object.__setattr__(self, "registers", tuple(self.registers))
        object.__setattr__(self, "amplitudes", amps)
        if amps.ndim != 1 or amps.size != 2 ** len(self.registers):
            raise ValueError("amplitude count must be 2**len(registers)")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > ATOL:
            raise ValueError(f"state vector not normalized: |norm-1| = {abs(norm - 1.0):.3e}")

    @property
    def n_qubits(self) -> int:
        return len(self.registers)

    def density(self) -> "DensityOperator":
        mat = np.outer(self.amplitudes, self.amplitudes.conj())
        return DensityOperator((2,) * self.n_qubits, mat)


@dataclass(frozen=True)
class DensityOperator:
    """Positive unit-trace operator over an ordered tuple of subsystem dimensions."""

    dims: tuple
    matrix: np.ndarray

    def __post_init__(self):
        mat = as_complex_matrix(self.matrix)
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", mat)
        dim = int(np.prod(dims)) if dims else 1
        if mat.shape != (dim, dim):
            raise ValueError(f"matrix shape {mat.shape} does not match dims {dims}")
        if np.max(np.abs(mat - mat.conj().T)) > ATOL:
            raise ValueError("density operator not Hermitian within 1e-10")
        if abs(np.trace(mat).real - 1.0) > ATOL:
            raise ValueError("density operator trace differs from 1 by more than 1e-10")
        lo = float(np.linalg.eigvalsh(mat).min())
        if lo < -EIG_CLAMP:
            raise ValueError(f"density operator has eigenvalue {lo:.3e} < -1e-10")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class DickeVector:
    """Permutation-invariant n-qubit pure state: coeffs[w] multiplies the weight-w Dicke state."""

    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        object.__setattr__(self, "coeffs", coeffs)
        if coeffs.ndim != 1 or coeffs.size != self.n + 1:
            raise ValueError("need n+1 Dicke coefficients")
        norm2 = float(np.sum(np.abs(coeffs) ** 2))
        if abs(norm2 - 1.0) > ATOL:
            raise ValueError(f"Dicke coefficients not normalized: |sum-1| = {abs(norm2 - 1.0):.3e}")

    def to_statevector(self, registers=None) -> StateVector:
        """Expand into the full 2**n space."""
        amps = np.zeros(2**self.n, dtype=np.complex128)
        for w in range(self.n + 1):
            if self.coeffs[w] != 0:
                amps += self.coeffs[w] * dicke_state(self.n, w)
        regs = tuple(range(self.n)) if registers is None else tuple(registers)
        return StateVector(regs, amps)


@dataclass(frozen=True)
class DickeSplit:
    """Bipartite symmetric form of a DickeVector after splitting off the first m qubits.

    table[l, r] is the amplitude of |D^m_l> ⊗ |D^(n-m)_r>.
    """

    n: int
    m: int
    table: np.ndarray = field(repr=False)


def dicke_state(n: int, w: int) -> np.ndarray:
    """Full 2**n amplitude vector of the weight-w Dicke state."""
    if not 0 <= w <= n:
        raise ValueError("weight out of range")
    amps = np.zeros(2**n, dtype=np.complex128)
    idx = np.arange(2**n)
    weights = np.array([bin(i).count("1") for i in range(2**n)])
    hits = idx[weights == w]
    amps[hits] = 1.0 / math.sqrt(len(hits))
    return amps


def tensor(a, b):
    """Kronecker product of two StateVectors or two DensityOperators; dims concatenate (a then b)."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        if set(a.registers) & set(b.registers):
            raise ValueError("register labels must be disjoint")
        return StateVector(a.registers + b.registers, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(a.dims + b.dims, np.kron(a.matrix, b.matrix))
    raise TypeError("tensor requires two StateVectors or two DensityOperators")


def partial_trace(rho: DensityOperator, keep) -> DensityOperator:
    """Trace out every subsystem not in `keep`; keep order follows the original dims order."""
    keep = sorted(set(int(k) for k in keep))
    nsys = len(rho.dims)
    if any(k < 0 or k >= nsys for k in keep):
        raise ValueError("keep indices out of range")
    if not keep:
        return DensityOperator((1,), np.array([[1.0 + 0j]]))
    mat = partial_trace_raw(rho.matrix, rho.dims, keep)
    return DensityOperator(tuple(rho.dims[k] for k in keep), mat)


def partial_trace_raw(mat: np.ndarray, dims, keep) -> np.ndarray:
    """partial_trace on a bare matrix; no DensityOperator invariant checks."""
    dims = tuple(int(d) for d in dims)
    keep = sorted(set(int(k) for k in keep))
    nsys = len(dims)
    if not keep:
        return np.array([[np.trace(mat)]], dtype=np.complex128)
    tens = mat.reshape(dims + dims)
    # consume traced subsystems from the highest index so axis numbers stay valid
    traced = [q for q in range(nsys) if q not in keep]
    cur = nsys
    for q in sorted(traced, reverse=True):
        tens = np.trace(tens, axis1=q, axis2=q + cur)
        cur -= 1
    d = int(np.prod([dims[k] for k in keep]))
    return tens.reshape(d, d)


def dicke_split(v: DickeVector, m: int) -> DickeSplit:
    """Split Σ_w c_w |D^n_w> over the first m qubits vs the remaining n-m.

    |D^n_w> = Σ_l sqrt(C(m,l) C(n-m,w-l) / C(n,w)) |D^m_l> ⊗ |D^(n-m)_(w-l)>,
    so table[l, w-l] = c_w * sqrt(C(m,l) C(n-m,w-l) / C(n,w)).
    """
    n = v.n
    if not 0 <= m <= n:
        raise ValueError("split size out of range")
    table = np.zeros((m + 1, n - m + 1), dtype=np.complex128)
    for w in range(n + 1):
        c = v.coeffs[w]
        if c == 0:
            continue
        for l in range(max(0, w - (n - m)), min(m, w) + 1):
            hyp = math.comb(m, l) * math.comb(n - m, w - l) / math.comb(n, w)
            table[l, w - l] += c * math.sqrt(hyp)
    return DickeSplit(n, m, table)


def clamp_psd_spectrum(vals: np.ndarray) -> np.ndarray:
    """Clamp eigenvalues in [-EIG_CLAMP, 0] to 0; reject anything more negative."""
    lo = float(vals.min()) if vals.size else 0.0
    if lo < -EIG_CLAMP:
        raise ValueError(f"matrix has eigenvalue {lo:.3e} below -1e-10; input looks corrupted")
    return np.maximum(vals, 0.0)


def von_neumann_entropy(rho: DensityOperator) -> float:
    """-Σ λ log2 λ over eigenvalues above the 1e-12 cutoff, in bits."""
    vals = clamp_psd_spectrum(np.linalg.eigvalsh(rho.matrix))
    vals = vals[vals > ENTROPY_CUTOFF]
    return float(-np.sum(vals * np.log2(vals)))


def matrix_sqrt_psd(mat: np.ndarray) -> np.ndarray:
    """Hermitian square root via eigendecomposition (dimensions here stay small)."""
    vals, vecs = np.linalg.eigh(mat)
    vals = clamp_psd_spectrum(vals)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2, clipped to [0, 1]."""
    if rho.dim != sigma.dim:
        raise ValueError("fidelity requires equal dimensions")
    root = matrix_sqrt_psd(rho.matrix)
    inner = root @ sigma.matrix @ root
    vals = clamp_psd_spectrum(np.linalg.eigvalsh(inner))
    val = float(np.sum(np.sqrt(vals)) ** 2)
    return min(max(val, 0.0), 1.0)
