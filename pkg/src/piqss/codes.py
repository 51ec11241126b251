"""Code definitions, registry ingestion, encoding, and erasure certification.

Two code families are supported, both with a 2-dimensional logical space:

  * permutation-invariant (PI) codes, whose codewords are superpositions of
    Dicke states and therefore live in the (n+1)-dimensional symmetric
    subspace, and
  * stabilizer codes, given by Pauli-string generators plus logical X/Z.

Registry file schema (JSON, a list of entries; unknown keys are rejected):

  common required keys:
      "name": str, "family": "pi" | "stabilizer", "n": int,
      "k_or_K": int (logical dimension K for PI codes, logical qubit count
      k for stabilizer codes), "d": int (claimed distance)
  family "pi":
      "logical0", "logical1": arrays of {"w": int, "re": float, "im": float}
      optional "construction_meta": {"g": int, "levels": int, "delta": int}
      (binomial Dicke-superposition family; entries are regenerated from the
      parameters at load time and must agree with the transcribed ones)
      optional "classical_basis": "z" | "y" (logical basis in which the code
      doubles as a perfect classical scheme; defaults to "z")
  family "stabilizer":
      "generators", "logical_x", "logical_z": strings over {I,X,Y,Z} of
      length n (generators: n-k strings; logicals: k strings each)

Erasure certification follows the Knill-Laflamme condition for located
erasures: for every erased set T and all Pauli-string Kraus pairs (E_a, E_b)
supported on T, <i|E_a' E_b|j> must equal delta_ij * alpha_ab. Because the
Pauli strings on T span every operator on T, that condition is equivalent to
the marginal form

    Tr_keep |0bar><1bar| = 0   and   Tr_keep |0bar><0bar| = Tr_keep |1bar><1bar|,

and the worst alpha-matrix deviation over all Kraus pairs equals
max(max_c |chi01_c|, max_c |chi00_c - chi11_c| / 2) over Pauli coefficients
chi_c = Tr(E_c * marginal). The literal pairwise scan is kept in
`literal_alpha_deviation` as the small-instance oracle.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import qcore

KL_ATOL = 1e-8

PAULI_1Q = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

DEFAULT_REGISTRY = os.path.join(os.path.dirname(__file__), "data", "registry.json")
REGISTRY_ENV_VAR = "PIQSS_REGISTRY"


class RegistryError(ValueError):
    """Raised when a registry file fails to parse or a code fails its invariants."""


@dataclass(frozen=True)
class ErasurePattern:
    """A set of erased physical qubit indices."""

    erased: frozenset

    def __init__(self, erased):
        object.__setattr__(self, "erased", frozenset(int(q) for q in erased))

    def validate(self, n: int):
        if any(q < 0 or q >= n for q in self.erased):
            raise ValueError("erased indices out of range")


@dataclass(frozen=True)
class PICodeSpec:
    """Permutation-invariant ((n, K, d)) code with Dicke-basis codewords."""

    name: str
    n: int
    K: int
    d: int
    logical0: qcore.DickeVector
    logical1: qcore.DickeVector
    construction_meta: dict | None = None
    classical_basis: str = "z"

    @property
    def family(self) -> str:
        return "pi"

    def codeword_matrix(self) -> np.ndarray:
        """(n+1) x 2 isometry in the Dicke basis."""
        return np.column_stack([self.logical0.coeffs, self.logical1.coeffs])

    def codeword_statevectors(self) -> tuple:
        return (
            self.logical0.to_statevector().amplitudes,
            self.logical1.to_statevector().amplitudes,
        )


@dataclass(frozen=True)
class StabilizerCodeSpec:
    """[[n, k]] stabilizer code; rows are binary symplectic vectors (x-part | z-part)."""

    name: str
    n: int
    k: int
    d: int
    generators: np.ndarray = field(repr=False)
    logical_x: np.ndarray = field(repr=False)
    logical_z: np.ndarray = field(repr=False)
    classical_basis: str = "z"

    @property
    def family(self) -> str:
        return "stabilizer"

    @property
    def K(self) -> int:
        return 2**self.k

    def codeword_statevectors(self) -> tuple:
        return stabilizer_codewords(self)


def pauli_string_to_symplectic(s: str, n: int) -> np.ndarray:
    if len(s) != n:
        raise ValueError(f"Pauli string {s!r} must have length {n}")
    row = np.zeros(2 * n, dtype=np.uint8)
    for q, ch in enumerate(s.upper()):
        if ch == "X":
            row[q] = 1
        elif ch == "Z":
            row[n + q] = 1
        elif ch == "Y":
            row[q] = 1
            row[n + q] = 1
        elif ch != "I":
            raise ValueError(f"invalid Pauli letter {ch!r}")
    return row


def symplectic_to_pauli_string(row: np.ndarray) -> str:
    n = row.size // 2
    out = []
    for q in range(n):
        x, z = row[q], row[n + q]
        out.append("IXZY"[x + 2 * z] if (x + 2 * z) != 3 else "Y")
    return "".join(out)


def symplectic_product(a: np.ndarray, b: np.ndarray) -> int:
    n = a.size // 2
    return int((a[:n] @ b[n:] + a[n:] @ b[:n]) % 2)


def pauli_string_matrix(s: str) -> np.ndarray:
    mat = np.array([[1.0 + 0j]])
    for ch in s.upper():
        mat = np.kron(mat, PAULI_1Q[ch])
    return mat


def gf2_row_reduce(mat: np.ndarray) -> tuple:
    """Row-reduce over GF(2); returns (reduced matrix, pivot columns)."""
    m = mat.copy() % 2
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        hit = None
        for rr in range(r, rows):
            if m[rr, c]:
                hit = rr
                break
        if hit is None:
            continue
        m[[r, hit]] = m[[hit, r]]
        for rr in range(rows):
            if rr != r and m[rr, c]:
                m[rr] ^= m[r]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def gf2_rank(mat: np.ndarray) -> int:
    if mat.size == 0:
        return 0
    return len(gf2_row_reduce(mat)[1])


def gf2_solvable(a: np.ndarray, b: np.ndarray) -> bool:
    """Is a x = b solvable over GF(2)?"""
    if a.size == 0:
        return not b.any()
    aug = np.concatenate([a, b.reshape(-1, 1)], axis=1)
    return gf2_rank(a) == gf2_rank(aug)


def gnu_codewords(n_phys: int, g: int, levels: int, delta: int = 0) -> tuple:
    """Binomial Dicke-superposition codewords with occupancies g*l + delta.

    Occupancy runs over l = 0..levels; logical 0/1 take the even/odd levels
    with amplitudes sqrt(C(levels, l) / 2**(levels-1)). Lengths n_phys above
    the top occupancy g*levels + delta embed the same occupancy profile in a
    larger symmetric space.
    """
    if levels < 1 or g < 1 or delta < 0:
        raise ValueError("need g >= 1, levels >= 1, delta >= 0")
    if g * levels + delta > n_phys:
        raise ValueError("top occupancy g*levels + delta exceeds n_phys")
    c0 = np.zeros(n_phys + 1, dtype=np.complex128)
    c1 = np.zeros(n_phys + 1, dtype=np.complex128)
    for l in range(levels + 1):
        amp = math.sqrt(math.comb(levels, l) / 2 ** (levels - 1))
        w = g * l + delta
        if l % 2 == 0:
            c0[w] = amp
        else:
            c1[w] = amp
    return (
        qcore.DickeVector(n_phys, c0),
        qcore.DickeVector(n_phys, c1),
    )


def stabilizer_codewords(code: StabilizerCodeSpec) -> tuple:
    """Full statevectors of |0bar>, |1bar> (k=1 codes) from the generator projectors."""
    if code.k != 1:
        raise ValueError("codeword construction implemented for k=1 only")
    n = code.n
    dim = 2**n
    proj = np.eye(dim, dtype=np.complex128)
    for row in code.generators:
        g = pauli_string_matrix(symplectic_to_pauli_string(row))
        proj = proj @ (np.eye(dim) + g) / 2
    zbar = pauli_string_matrix(symplectic_to_pauli_string(code.logical_z[0]))
    proj0 = proj @ (np.eye(dim) + zbar) / 2
    # grab any nonzero column as |0bar>
    norms = np.linalg.norm(proj0, axis=0)
    col = int(np.argmax(norms))
    if norms[col] < 1e-9:
        raise RegistryError(f"{code.name}: could not construct codewords from stabilizers")
    v0 = proj0[:, col] / norms[col]
    xbar = pauli_string_matrix(symplectic_to_pauli_string(code.logical_x[0]))
    v1 = xbar @ v0
    return v0, v1


@dataclass(frozen=True)
class CertificationReport:
    """Outcome of a Knill-Laflamme erasure check at fixed erasure weight."""

    code: str
    t: int
    ok: bool
    worst_deviation: float
    n_sets: int
    worst_set: tuple


@lru_cache(maxsize=None)
def _pauli_stack(t: int) -> np.ndarray:
    """All 4**t Pauli-string matrices on t qubits, stacked."""
    if t == 0:
        return np.ones((1, 1, 1), dtype=np.complex128)
    labels = itertools.product("IXYZ", repeat=t)
    return np.stack([pauli_string_matrix("".join(lab)) for lab in labels])


def _subset_marginals(v0: np.ndarray, v1: np.ndarray, n: int, subset: tuple):
    """m_ij = Tr_{complement}(|ibar><jbar|) for the qubits in `subset`."""
    t = len(subset)
    rest = [q for q in range(n) if q not in subset]
    perm = list(subset) + rest
    a0 = v0.reshape((2,) * n).transpose(perm).reshape(2**t, -1)
    a1 = v1.reshape((2,) * n).transpose(perm).reshape(2**t, -1)
    m00 = a0 @ a0.conj().T
    m01 = a0 @ a1.conj().T
    m11 = a1 @ a1.conj().T
    return m00, m01, m11


def certify_erasure(code, t: int) -> CertificationReport:
    """Check the erasure Knill-Laflamme condition for every erased set of size t."""
    n = code.n
    if not 0 <= t <= n:
        raise ValueError("erasure weight out of range")
    v0, v1 = code.codeword_statevectors()
    paulis = _pauli_stack(t)
    worst = 0.0
    worst_set = ()
    n_sets = 0
    for subset in itertools.combinations(range(n), t):
        n_sets += 1
        m00, m01, m11 = _subset_marginals(v0, v1, n, subset)
        chi01 = np.einsum("aij,ji->a", paulis, m01)
        chi_diff = np.einsum("aij,ji->a", paulis, m00 - m11)
        dev = max(float(np.abs(chi01).max()), float(np.abs(chi_diff).max()) / 2)
        if dev > worst:
            worst = dev
            worst_set = subset
    return CertificationReport(code.name, t, worst <= KL_ATOL, worst, n_sets, worst_set)


def literal_alpha_deviation(code, subset: tuple) -> float:
    """Small-instance oracle: scan every Kraus pair (E_a, E_b) on `subset` directly."""
    n = code.n
    v0, v1 = code.codeword_statevectors()
    vecs = (v0, v1)
    t = len(subset)
    mats = []
    for lab in itertools.product("IXYZ", repeat=t):
        full = ["I"] * n
        for q, ch in zip(subset, lab):
            full[q] = ch
        mats.append(pauli_string_matrix("".join(full)))
    worst = 0.0
    for ea in mats:
        for eb in mats:
            op = ea.conj().T @ eb
            g00 = vecs[0].conj() @ op @ vecs[0]
            g11 = vecs[1].conj() @ op @ vecs[1]
            g01 = vecs[0].conj() @ op @ vecs[1]
            alpha = (g00 + g11) / 2
            worst = max(worst, abs(g01), abs(g00 - alpha), abs(g11 - alpha))
    return worst


def encode(code, logical: qcore.DensityOperator, basis: str = "dicke") -> qcore.DensityOperator:
    """Isometric embedding |0> -> logical0, |1> -> logical1 applied to a 1-qubit state."""
    if logical.dim != 2:
        raise ValueError("logical input must be a single-qubit density operator")
    if code.family == "pi" and basis == "dicke":
        iso = code.codeword_matrix()
        return qcore.DensityOperator((code.n + 1,), iso @ logical.matrix @ iso.conj().T)
    if basis != "full":
        raise ValueError(f"basis {basis!r} not available for {code.family} codes")
    v0, v1 = code.codeword_statevectors()
    iso = np.column_stack([v0, v1])
    return qcore.DensityOperator((2,) * code.n, iso @ logical.matrix @ iso.conj().T)


def logical_class_representatives(code: StabilizerCodeSpec) -> list:
    """Symplectic representatives of the 4**k logical Pauli classes (identity first)."""
    reps = []
    for bits in itertools.product((0, 1), repeat=2 * code.k):
        rep = np.zeros(2 * code.n, dtype=np.uint8)
        for i in range(code.k):
            if bits[2 * i]:
                rep ^= code.logical_x[i]
            if bits[2 * i + 1]:
                rep ^= code.logical_z[i]
        reps.append(rep)
    return reps


def count_cleaned_logicals(code: StabilizerCodeSpec, e: ErasurePattern) -> int:
    """Number of logical Pauli classes with a representative supported on e.erased.

    For each class representative L, solve over GF(2) for a stabilizer
    multiplier clearing L off the kept qubits M: rows of the system are the
    generator bits on M, the target is L's bits on M. Generator signs are
    tracked upstream but irrelevant to the count, so they are ignored here.
    """
    e.validate(code.n)
    kept = sorted(set(range(code.n)) - e.erased)
    cols = [q for q in kept] + [code.n + q for q in kept]
    a = code.generators[:, cols].T if code.generators.size else np.zeros((len(cols), 0), dtype=np.uint8)
    count = 0
    for rep in logical_class_representatives(code):
        if gf2_solvable(a, rep[cols]):
            count += 1
    return count


def _parse_dicke_side(entries, n: int, name: str, which: str) -> qcore.DickeVector:
    coeffs = np.zeros(n + 1, dtype=np.complex128)
    for item in entries:
        extra = set(item) - {"w", "re", "im"}
        if extra:
            raise RegistryError(f"{name}.{which}: unknown keys {sorted(extra)}")
        w = int(item["w"])
        if not 0 <= w <= n:
            raise RegistryError(f"{name}.{which}: weight {w} out of range")
        coeffs[w] = float(item.get("re", 0.0)) + 1j * float(item.get("im", 0.0))
    try:
        return qcore.DickeVector(n, coeffs)
    except ValueError as exc:
        raise RegistryError(f"{name}.{which}: {exc}") from exc


_COMMON_KEYS = {"name", "family", "n", "k_or_K", "d"}
_PI_KEYS = _COMMON_KEYS | {"logical0", "logical1", "construction_meta", "classical_basis"}
_STAB_KEYS = _COMMON_KEYS | {"generators", "logical_x", "logical_z", "classical_basis"}


def _load_pi_entry(entry: dict) -> PICodeSpec:
    name = entry["name"]
    extra = set(entry) - _PI_KEYS
    if extra:
        raise RegistryError(f"{name}: unknown keys {sorted(extra)}")
    n = int(entry["n"])
    spec = PICodeSpec(
        name=name,
        n=n,
        K=int(entry["k_or_K"]),
        d=int(entry["d"]),
        logical0=_parse_dicke_side(entry["logical0"], n, name, "logical0"),
        logical1=_parse_dicke_side(entry["logical1"], n, name, "logical1"),
        construction_meta=entry.get("construction_meta"),
        classical_basis=entry.get("classical_basis", "z"),
    )
    if spec.K != 2:
        raise RegistryError(f"{name}: only K=2 codes are supported")
    if spec.classical_basis not in ("z", "y"):
        raise RegistryError(f"{name}: classical_basis must be 'z' or 'y'")
    overlap = abs(np.vdot(spec.logical0.coeffs, spec.logical1.coeffs))
    if overlap > qcore.ATOL:
        raise RegistryError(f"{name}: codewords not orthogonal (|<0|1>| = {overlap:.3e})")
    meta = spec.construction_meta
    if meta is not None:
        extra = set(meta) - {"g", "levels", "delta"}
        if extra:
            raise RegistryError(f"{name}.construction_meta: unknown keys {sorted(extra)}")
        gen0, gen1 = gnu_codewords(n, int(meta["g"]), int(meta["levels"]), int(meta.get("delta", 0)))
        if (
            np.max(np.abs(gen0.coeffs - spec.logical0.coeffs)) > qcore.ATOL
            or np.max(np.abs(gen1.coeffs - spec.logical1.coeffs)) > qcore.ATOL
        ):
            raise RegistryError(f"{name}: transcribed coefficients disagree with construction_meta")
    return spec


def _load_stabilizer_entry(entry: dict) -> StabilizerCodeSpec:
    name = entry["name"]
    extra = set(entry) - _STAB_KEYS
    if extra:
        raise RegistryError(f"{name}: unknown keys {sorted(extra)}")
    n = int(entry["n"])
    k = int(entry["k_or_K"])
    gens = np.array([pauli_string_to_symplectic(s, n) for s in entry["generators"]], dtype=np.uint8)
    lx = np.array([pauli_string_to_symplectic(s, n) for s in entry["logical_x"]], dtype=np.uint8)
    lz = np.array([pauli_string_to_symplectic(s, n) for s in entry["logical_z"]], dtype=np.uint8)
    spec = StabilizerCodeSpec(
        name=name, n=n, k=k, d=int(entry["d"]),
        generators=gens, logical_x=lx, logical_z=lz,
        classical_basis=entry.get("classical_basis", "z"),
    )
    if gens.shape[0] != n - k or lx.shape[0] != k or lz.shape[0] != k:
        raise RegistryError(f"{name}: expected {n - k} generators and {k} logical X/Z rows")
    for i, gi in enumerate(gens):
        for j, gj in enumerate(gens):
            if symplectic_product(gi, gj):
                raise RegistryError(f"{name}: generators {i} and {j} anticommute")
    if gf2_rank(gens) != n - k:
        raise RegistryError(f"{name}: generators not independent over GF(2)")
    for i in range(k):
        for row, label in ((lx[i], "logical_x"), (lz[i], "logical_z")):
            for j, gj in enumerate(gens):
                if symplectic_product(row, gj):
                    raise RegistryError(f"{name}: {label}[{i}] anticommutes with generator {j}")
        for j in range(k):
            want = 1 if i == j else 0
            if symplectic_product(lx[i], lz[j]) != want:
                raise RegistryError(f"{name}: logical X[{i}]/Z[{j}] commutation pattern wrong")
    return spec


def load_registry(path: str | None = None) -> list:
    """Load and certify every code in a registry file.

    Resolution order for the path: explicit argument, the PIQSS_REGISTRY
    environment variable, then the bundled registry.
    """
    if path is None:
        path = os.environ.get(REGISTRY_ENV_VAR) or DEFAULT_REGISTRY
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise RegistryError(f"cannot load registry {path}: {exc}") from exc
    if not isinstance(raw, list):
        raise RegistryError("registry must be a JSON list of code entries")
    specs = []
    for entry in raw:
        if not isinstance(entry, dict) or "name" not in entry or "family" not in entry:
            raise RegistryError("each entry needs at least 'name' and 'family'")
        family = entry["family"]
        if family == "pi":
            spec = _load_pi_entry(entry)
        elif family == "stabilizer":
            spec = _load_stabilizer_entry(entry)
        else:
            raise RegistryError(f"{entry['name']}: unknown family {family!r}")
        report = certify_erasure(spec, spec.d - 1)
        if not report.ok:
            raise RegistryError(
                f"{spec.name}: erasure certification failed at t={spec.d - 1} "
                f"(worst deviation {report.worst_deviation:.3e} on {report.worst_set})"
            )
        specs.append(spec)
    return specs


def get_code(name: str, path: str | None = None):
    """Convenience lookup of a single registry code by name."""
    for spec in load_registry(path):
        if spec.name == name:
            return spec
    raise KeyError(f"code {name!r} not in registry")
