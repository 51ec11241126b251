"""Conditional min-entropy, maximum recovery fidelity, and related measures.

The central quantity is q_corr, the optimum of the semidefinite program

    minimize  Tr(sigma)   subject to   I_R ⊗ sigma ⪰ rho_RE,  sigma ⪰ 0,

whose value gives H_min(R|E) = -log2 q_corr and the best recovery fidelity
f_max = q_corr / K (K = 2 throughout). The dual optimum alone is never
trusted: every solve also extracts a primal-feasible recovery channel in
Choi form from the solver's dual variable, projects it exactly onto the
trace-preserving manifold, recomputes its objective, and requires the
resulting duality gap to stay below GAP_TOL.

Three exact reductions keep every program small:

  * support reduction: the optimal sigma may be restricted to the support
    of Tr_R(rho_RE) without changing the optimum (restriction keeps dual
    feasibility; supp(rho_RE) ⊆ supp(rho_R) ⊗ supp(rho_E) gives the other
    direction),
  * the Dicke reduction for permutation-invariant codes, which expresses
    the surviving shares in the weight basis of dimension n_p + 1 instead
    of 2**n_p. Its agreement with the full-space path is a tested property,
    not an assumption, and
  * a graded reduction from diagonal symmetries: whenever rho_RE commutes
    with a verified monomial unitary (a Pauli on R times a diagonal phase
    on E), averaging the feasible sigma over the group it generates lands
    in the commutant without changing the trace, so sigma may be block
    diagonal in the grading and the LMI splits into independent blocks.
    Candidate symmetries are found numerically but each one is checked
    against rho_RE entrywise before it is used; if none verifies, the
    solver falls back to the dense program. The duality-gap certificate
    is computed the same way on every path, so a wrong reduction cannot
    produce a silently wrong answer - it can only fail the gap check.

For stabilizer codes the closed form F_max = 1 / |G_Mc| with
H_min = log2|G_Mc| - k is available via the cleaning count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from cvxopt import matrix as cvxmatrix
from cvxopt import solvers as cvxsolvers

from . import codes, qcore

GAP_TOL = 1e-7
SUPPORT_TOL = 1e-12
RESULT_EPS = 1e-6

SOLVER_OPTIONS = {
    "show_progress": False,
    "maxiters": 200,
    "abstol": 1e-10,
    "reltol": 1e-10,
    "feastol": 1e-9,
}


class SdpError(RuntimeError):
    """Solver did not reach the required accuracy; carries the best bounds seen."""

    def __init__(self, message, primal=None, dual=None):
        super().__init__(message)
        self.primal = primal
        self.dual = dual


@dataclass(frozen=True)
class JointState:
    """Reference-experimental joint state rho_RE with bookkeeping."""

    ref_dim: int
    exp_basis: str  # "full" | "dicke-reduced"
    rho: qcore.DensityOperator
    code_name: str
    n_p: int

    def __post_init__(self):
        if self.rho.dims[0] != self.ref_dim:
            raise ValueError("first subsystem of rho must be the reference")
        marg = qcore.partial_trace(self.rho, [0]).matrix
        if np.max(np.abs(marg - np.eye(self.ref_dim) / self.ref_dim)) > 1e-9:
            raise ValueError("reference marginal is not maximally mixed")

    @property
    def exp_dim(self) -> int:
        return self.rho.dim // self.ref_dim


@dataclass(frozen=True)
class LeakageResult:
    """q_corr and derived quantities for one (code, erasure) cell."""

    n_p: int
    q_corr: float
    f_max: float
    h_min: float
    gap: float
    method: str

    def __post_init__(self):
        if not -1.0 - RESULT_EPS <= self.h_min <= 1.0 + RESULT_EPS:
            raise ValueError(f"h_min {self.h_min} outside [-1, 1]")
        if not 0.25 - RESULT_EPS <= self.f_max <= 1.0 + RESULT_EPS:
            raise ValueError(f"f_max {self.f_max} outside [0.25, 1]")
        if self.gap > GAP_TOL:
            raise ValueError(f"duality gap {self.gap:.3e} exceeds {GAP_TOL}")


@dataclass(frozen=True)
class RecoveryChannel:
    """A channel E_in -> R_out as a Choi operator J with Tr_out(J) = I_in."""

    choi: np.ndarray
    d_in: int
    d_out: int

    def __post_init__(self):
        j = self.choi
        if j.shape != (self.d_in * self.d_out,) * 2:
            raise ValueError("Choi shape does not match dims")
        lo = float(np.linalg.eigvalsh(j).min())
        if lo < -1e-9:
            raise ValueError(f"Choi operator has eigenvalue {lo:.3e} < -1e-9")
        tp = j.reshape(self.d_in, self.d_out, self.d_in, self.d_out)
        marg = np.einsum("arbr->ab", tp)
        if np.max(np.abs(marg - np.eye(self.d_in))) > 1e-8:
            raise ValueError("Choi operator is not trace preserving within 1e-8")

    def apply(self, x: np.ndarray) -> np.ndarray:
        """E(X) = Tr_in[(X^T ⊗ I) J]."""
        jt = self.choi.reshape(self.d_in, self.d_out, self.d_in, self.d_out)
        return np.einsum("ab,aobp->op", x, jt)

    def apply_to_second(self, rho: np.ndarray, d_first: int) -> np.ndarray:
        """(id ⊗ E)(rho) for rho on (first ⊗ E_in)."""
        rt = rho.reshape(d_first, self.d_in, d_first, self.d_in)
        jt = self.choi.reshape(self.d_in, self.d_out, self.d_in, self.d_out)
        out = np.einsum("iajb,aobp->iojp", rt, jt)
        return out.reshape(d_first * self.d_out, d_first * self.d_out)


def _coupled_dicke_tables(code, n_p: int, twirl=(0, 0)) -> np.ndarray:
    """psi[r, l, m]: amplitudes of |r>_R |D^(n_p)_l> |D^(n-n_p)_m> for the
    reference-coupled encoding, optionally twirled by logical X^a Z^b."""
    a, b = twirl
    tables = [codes.qcore.dicke_split(cw, n_p).table for cw in (code.logical0, code.logical1)]
    psi = np.zeros((2,) + tables[0].shape, dtype=np.complex128)
    for r in (0, 1):
        psi[r] = (-1) ** (b * r) * tables[r ^ a] / math.sqrt(2)
    return psi


def _rho_from_tables(psi: np.ndarray) -> np.ndarray:
    """Trace out the third (erased) index of psi[r, l, m]."""
    rho = np.einsum("alm,bkm->albk", psi, psi.conj())
    d = psi.shape[0] * psi.shape[1]
    return rho.reshape(d, d)


def build_joint_state(code, n_p: int, basis: str = "dicke") -> JointState:
    """Erase n - n_p shares of the reference-coupled encoding (|0>|0bar>+|1>|1bar>)/sqrt(2).

    By permutation invariance only the erasure count matters for PI codes; the
    last n - n_p physical qubits are erased canonically (a tested property for
    the full-space path). Stabilizer codes use the full basis.
    """
    if not 0 <= n_p <= code.n:
        raise ValueError("n_p out of range")
    if code.family == "pi" and basis == "dicke":
        rho = _rho_from_tables(_coupled_dicke_tables(code, n_p))
        op = qcore.DensityOperator((2, n_p + 1), rho)
        return JointState(2, "dicke-reduced", op, code.name, n_p)
    if basis != "full":
        raise ValueError(f"basis {basis!r} not available for {code.family} codes")
    v0, v1 = code.codeword_statevectors()
    amps = np.concatenate([v0, v1]) / math.sqrt(2)
    full = np.outer(amps, amps.conj())
    dims = (2,) * (code.n + 1)
    keep = list(range(n_p + 1))  # reference plus the first n_p shares
    mat = qcore.partial_trace_raw(full, dims, keep)
    op = qcore.DensityOperator((2, 2**n_p), mat)
    return JointState(2, "full", op, code.name, n_p)


def _support_isometry(rho_e: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(rho_e)
    keep = vals > SUPPORT_TOL
    return vecs[:, keep]


def _hermitian_basis(s: int, real: bool) -> list:
    basis = []
    for i in range(s):
        m = np.zeros((s, s), dtype=np.complex128)
        m[i, i] = 1.0
        basis.append(m)
    for i in range(s):
        for j in range(i + 1, s):
            m = np.zeros((s, s), dtype=np.complex128)
            m[i, j] = m[j, i] = 1.0
            basis.append(m)
            if not real:
                m = np.zeros((s, s), dtype=np.complex128)
                m[i, j] = -1j
                m[j, i] = 1j
                basis.append(m)
    return basis


def _real_embed(m: np.ndarray) -> np.ndarray:
    re, im = m.real, m.imag
    return np.block([[re, -im], [im, re]])


def _union_find(n: int):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    return find, union


def _support_components(mats, d: int, thr: float) -> np.ndarray:
    """Connected components of the index graph drawn by every entry above thr."""
    find, union = _union_find(d)
    for m in mats:
        for e, f in zip(*np.nonzero(np.abs(m) > thr)):
            union(int(e), int(f))
    labels = np.empty(d, dtype=int)
    seen = {}
    for e in range(d):
        labels[e] = seen.setdefault(find(e), len(seen))
    return labels


def _propagate_phases(d: int, adj):
    """Assign unit phases delta with delta[e] * conj(delta[f]) = phi on every edge."""
    delta = np.zeros(d, dtype=np.complex128)
    for root in range(d):
        if delta[root] != 0:
            continue
        delta[root] = 1.0
        stack = [root]
        while stack:
            e = stack.pop()
            for f, phi in adj[e]:
                want = np.conj(phi) * delta[e]
                if delta[f] == 0:
                    delta[f] = want / abs(want)
                    stack.append(f)
                elif abs(delta[f] - want) > 1e-6:
                    return None
    return delta


def _detect_swap_monomial(a, b, c, thr: float, sign: float):
    """Diagonal delta with A = D C D', B = sign * D B' D' (symmetry X_R ⊗ D).

    Conjugating rho by X ⊗ D swaps the reference blocks, so invariance pins
    the entrywise ratios A/C and B/conj(B.T) to delta_e * conj(delta_f).
    Returns delta or None; the caller must treat None as "no symmetry".
    """
    if np.max(np.abs(np.abs(a) - np.abs(c))) > 100 * thr:
        return None
    if np.max(np.abs(np.abs(b) - np.abs(b.T))) > 100 * thr:
        return None
    d = a.shape[0]
    adj = [[] for _ in range(d)]
    for e, f in zip(*np.nonzero((np.abs(a) > thr) & (np.abs(c) > thr))):
        phi = a[e, f] / c[e, f]
        if abs(abs(phi) - 1.0) > 1e-6:
            return None
        adj[e].append((int(f), phi / abs(phi)))
    bmask = np.abs(b) > thr
    for e, f in zip(*np.nonzero(bmask & bmask.T)):
        phi = sign * b[e, f] / np.conj(b[f, e])
        if abs(abs(phi) - 1.0) > 1e-6:
            return None
        adj[e].append((int(f), phi / abs(phi)))
    delta = _propagate_phases(d, adj)
    if delta is None:
        return None
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    pair = delta[:, None] * np.conj(delta)[None, :]
    if np.max(np.abs(a - pair * c)) > 1e-10 * scale:
        return None
    if np.max(np.abs(b - sign * pair * b.conj().T)) > 1e-10 * scale:
        return None
    return delta


def _detect_reflect_monomial(a, b, c, thr: float):
    """Diagonal delta (values ±1) with A, C invariant and B -> -B (symmetry Z_R ⊗ D)."""
    d = a.shape[0]
    adj = [[] for _ in range(d)]
    for m in (a, c):
        for e, f in zip(*np.nonzero(np.abs(m) > thr)):
            adj[e].append((int(f), 1.0 + 0j))
    for e, f in zip(*np.nonzero(np.abs(b) > thr)):
        adj[e].append((int(f), -1.0 + 0j))
    delta = _propagate_phases(d, adj)
    if delta is None:
        return None
    delta = np.sign(delta.real)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    pair = delta[:, None] * delta[None, :]
    if np.max(np.abs(a - pair * a)) > 1e-10 * scale:
        return None
    if np.max(np.abs(c - pair * c)) > 1e-10 * scale:
        return None
    if np.max(np.abs(b + pair * b)) > 1e-10 * scale:
        return None
    return delta.astype(np.complex128)


def _phase_labels(delta: np.ndarray) -> np.ndarray:
    labels = np.empty(delta.shape[0], dtype=int)
    seen = {}
    for e, v in enumerate(delta):
        key = (round(float(v.real), 6), round(float(v.imag), 6))
        labels[e] = seen.setdefault(key, len(seen))
    return labels


def _graded_classes(rho: np.ndarray, d_e: int, thr: float):
    """Partition of the E indices on which an optimal sigma may be block diagonal.

    Combines the support components (sigma restricted to each component stays
    feasible because every constant-per-component diagonal sign is an exact
    symmetry of the truncated rho) with the gradings of any verified swap- or
    reflect-type monomial symmetry. Entries of rho below thr are treated as
    structural zeros; they are dropped from the blocked program, a perturbation
    far below the duality-gap tolerance.
    """
    a = rho[:d_e, :d_e]
    b = rho[:d_e, d_e:]
    c = rho[d_e:, d_e:]
    keys = [_support_components([a, b, c], d_e, thr)]
    for sign in (1.0, -1.0):
        delta = _detect_swap_monomial(a, b, c, thr, sign)
        if delta is not None:
            keys.append(_phase_labels(delta))
            break
    delta = _detect_reflect_monomial(a, b, c, thr)
    if delta is not None:
        keys.append(_phase_labels(delta))
    grouped = {}
    for e in range(d_e):
        grouped.setdefault(tuple(k[e] for k in keys), []).append(e)
    return [np.asarray(v, dtype=int) for v in grouped.values()]


def _solve_qcorr_graded(rho: np.ndarray, d_e: int):
    """Blocked real solve; returns (dual value, Z1) or None when nothing splits."""
    scale = float(np.max(np.abs(rho)))
    if scale == 0.0:
        return None
    thr = 1e-11 * scale
    classes = _graded_classes(rho, d_e, thr)

    # LMI blocks: rho support plus everywhere the graded sigma may be nonzero
    n_re = 2 * d_e
    find, union = _union_find(n_re)
    for u, v in zip(*np.nonzero(np.abs(rho) > thr)):
        union(int(u), int(v))
    for arr in classes:
        for r in (0, 1):
            base = r * d_e
            for e in arr[1:]:
                union(base + int(arr[0]), base + int(e))
    grouped = {}
    for u in range(n_re):
        grouped.setdefault(find(u), []).append(u)
    blocks = [np.asarray(v, dtype=int) for v in grouped.values()]
    if len(classes) == 1 and len(blocks) == 1:
        return None

    blk = np.empty(n_re, dtype=int)
    pos = np.empty(n_re, dtype=int)
    for k, arr in enumerate(blocks):
        blk[arr] = k
        pos[arr] = np.arange(len(arr))

    var_i, var_j, cobj = [], [], []
    class_vars = []
    local = np.empty(d_e, dtype=int)
    for arr in classes:
        local[arr] = np.arange(len(arr))
        vlist = []
        for ii in range(len(arr)):
            for jj in range(ii, len(arr)):
                vlist.append(len(var_i))
                var_i.append(int(arr[ii]))
                var_j.append(int(arr[jj]))
                cobj.append(1.0 if ii == jj else 0.0)
        class_vars.append(vlist)
    nvar = len(var_i)

    gs = [np.zeros((len(arr) ** 2, nvar)) for arr in blocks]
    hs = [cvxmatrix(np.ascontiguousarray(-rho[np.ix_(arr, arr)])) for arr in blocks]
    for v in range(nvar):
        i, j = var_i[v], var_j[v]
        for r in (0, 1):
            u, w = r * d_e + i, r * d_e + j
            k = blk[u]
            size = len(blocks[k])
            au, aw = pos[u], pos[w]
            gs[k][au + size * aw, v] = -1.0
            gs[k][aw + size * au, v] = -1.0
    for arr, vlist in zip(classes, class_vars):
        t = len(arr)
        g = np.zeros((t * t, nvar))
        for v in vlist:
            li, lj = local[var_i[v]], local[var_j[v]]
            g[li + t * lj, v] = -1.0
            g[lj + t * li, v] = -1.0
        gs.append(g)
        hs.append(cvxmatrix(np.zeros((t, t))))

    saved = dict(cvxsolvers.options)
    cvxsolvers.options.update(SOLVER_OPTIONS)
    try:
        sol = cvxsolvers.sdp(cvxmatrix(np.asarray(cobj)), Gs=[cvxmatrix(g) for g in gs], hs=hs)
    except (ArithmeticError, ValueError) as exc:
        raise SdpError(f"interior-point iteration broke down: {exc}") from exc
    finally:
        cvxsolvers.options.clear()
        cvxsolvers.options.update(saved)
    if sol["status"] != "optimal" or sol["x"] is None:
        raise SdpError(
            f"solver stopped with status {sol['status']!r}",
            primal=sol.get("primal objective"),
            dual=sol.get("dual objective"),
        )
    z1 = np.zeros((n_re, n_re))
    for k, arr in enumerate(blocks):
        z1[np.ix_(arr, arr)] = np.asarray(sol["zs"][k]).reshape(len(arr), len(arr))
    return float(sol["primal objective"]), z1


def _solve_qcorr(rho: np.ndarray, d_r: int, d_e: int, allow_graded: bool = True):
    """Solve the dual SDP; return (dual value, Z1 dual matrix on R⊗E)."""
    is_real = np.max(np.abs(rho.imag)) < 1e-14
    if allow_graded and is_real and d_r == 2 and d_e >= 16:
        try:
            solved = _solve_qcorr_graded(rho.real, d_e)
        except SdpError:
            solved = None  # let the dense program have a try before giving up
        if solved is not None:
            return solved
    basis = _hermitian_basis(d_e, is_real)
    nvar = len(basis)
    eye_r = np.eye(d_r)

    def emb(m):
        return m.real.copy() if is_real else _real_embed(m)

    lmi1 = [emb(np.kron(eye_r, b)) for b in basis]
    lmi2 = [emb(b) for b in basis]
    h1 = emb(rho)
    c = cvxmatrix([float(np.trace(b).real) for b in basis])
    g1 = cvxmatrix(np.column_stack([-m.ravel(order="F") for m in lmi1]))
    g2 = cvxmatrix(np.column_stack([-m.ravel(order="F") for m in lmi2]))
    hs = [cvxmatrix(-h1), cvxmatrix(np.zeros_like(lmi2[0]))]
    saved = dict(cvxsolvers.options)
    cvxsolvers.options.update(SOLVER_OPTIONS)
    try:
        sol = cvxsolvers.sdp(c, Gs=[g1, g2], hs=hs)
    except (ArithmeticError, ValueError) as exc:
        raise SdpError(f"interior-point iteration broke down: {exc}") from exc
    finally:
        cvxsolvers.options.clear()
        cvxsolvers.options.update(saved)
    if sol["status"] != "optimal" or sol["x"] is None:
        raise SdpError(
            f"solver stopped with status {sol['status']!r}",
            primal=sol.get("primal objective"),
            dual=sol.get("dual objective"),
        )
    dual_value = float(sol["primal objective"])  # our program is cvxopt's primal
    z1 = np.array(sol["zs"][0])
    if not is_real:
        d = d_r * d_e
        e11, e12 = z1[:d, :d], z1[:d, d:]
        e21, e22 = z1[d:, :d], z1[d:, d:]
        # PSD real embedding -> PSD complex matrix, halving the doubled trace
        z1 = ((e11 + e22) + 1j * (e21 - e12)) / 2
    else:
        z1 = z1 * 1.0
    return dual_value, z1


def _choi_from_dual(z1: np.ndarray, d_r: int, d_e: int) -> np.ndarray:
    """Map the dual variable on (R, E) to a Choi candidate on (E_in, R_out)."""
    zt = z1.reshape(d_r, d_e, d_r, d_e)
    return zt.transpose(1, 0, 3, 2).conj().reshape(d_e * d_r, d_e * d_r)


def _project_tp(j: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    """Exactly restore Tr_out(J) = I while keeping J PSD."""
    vals, vecs = np.linalg.eigh((j + j.conj().T) / 2)
    j = (vecs * np.maximum(vals, 0.0)) @ vecs.conj().T
    delta = np.einsum("arbr->ab", j.reshape(d_in, d_out, d_in, d_out))
    dvals, dvecs = np.linalg.eigh(delta)
    null = dvals < 1e-9
    if null.any():
        # route unused input directions to a fixed maximally mixed output
        q = (dvecs[:, null] @ dvecs[:, null].conj().T).conj()
        j = j + np.kron(q, np.eye(d_out) / d_out)
        delta = delta + q.conj()
        dvals, dvecs = np.linalg.eigh(delta)
    inv_root = (dvecs / np.sqrt(dvals)) @ dvecs.conj().T
    scale = np.kron(inv_root, np.eye(d_out))
    return scale @ j @ scale.conj().T


def _primal_objective(j: np.ndarray, rho: np.ndarray, d_r: int, d_e: int) -> float:
    omega = rho.reshape(d_r, d_e, d_r, d_e).transpose(3, 2, 1, 0).reshape(d_e * d_r, d_e * d_r)
    return float(np.real(np.trace(omega @ j)))


def q_corr_sdp(js: JointState, want_channel: bool = False):
    """Solve for q_corr with a certified primal recovery channel.

    Returns a LeakageResult, or (LeakageResult, RecoveryChannel) when
    want_channel is set. The returned channel acts on the original
    experimental space even though the solve runs on the reduced support.
    """
    d_r, d_e = js.ref_dim, js.exp_dim
    rho = js.rho.matrix
    rho_e = qcore.partial_trace_raw(rho, (d_r, d_e), [1])
    w = _support_isometry(rho_e)
    s = w.shape[1]
    if s == d_e:
        # full support: keep the coordinate basis so any block or symmetry
        # structure of rho stays visible to the graded solver
        w = np.eye(d_e)
        rho_red = rho
    else:
        reducer = np.kron(np.eye(d_r), w)
        rho_red = reducer.conj().T @ rho @ reducer

    dual_value, z1 = _solve_qcorr(rho_red, d_r, s)
    j_red = _project_tp(_choi_from_dual(z1, d_r, s), s, d_r)
    primal_value = _primal_objective(j_red, rho_red, d_r, s)
    gap = dual_value - primal_value
    if gap > GAP_TOL:
        raise SdpError(
            f"certificate gap {gap:.3e} exceeds {GAP_TOL}",
            primal=primal_value, dual=dual_value,
        )
    q_corr = primal_value  # report the certified side
    method = "sdp-dicke" if js.exp_basis == "dicke-reduced" else "sdp-full"
    result = LeakageResult(
        n_p=js.n_p,
        q_corr=q_corr,
        f_max=q_corr / 2,
        h_min=-math.log2(q_corr),
        gap=gap,
        method=method,
    )
    if not want_channel:
        return result
    # extend the reduced-input Choi to the full experimental space
    ext = np.kron(w.conj(), np.eye(d_r))
    j_full = ext @ j_red @ ext.conj().T
    comp = np.eye(d_e) - w @ w.conj().T
    if np.max(np.abs(comp)) > 1e-12:
        j_full = j_full + np.kron(comp.conj(), np.eye(d_r) / d_r)
    channel = RecoveryChannel(j_full, d_e, d_r)
    return result, channel


def extract_recovery(js: JointState) -> RecoveryChannel:
    """The certified primal-optimal recovery channel for a joint state."""
    _, channel = q_corr_sdp(js, want_channel=True)
    return channel


def h_min_stabilizer(code: codes.StabilizerCodeSpec, e: codes.ErasurePattern) -> LeakageResult:
    """Closed form from the cleaning count: F_max = 1/|G_Mc|, H_min = log2|G_Mc| - k."""
    size = codes.count_cleaned_logicals(code, e)
    f_max = 1.0 / size
    return LeakageResult(
        n_p=code.n - len(e.erased),
        q_corr=2.0 * f_max,
        f_max=f_max,
        h_min=math.log2(size) - code.k,
        gap=0.0,
        method="stabilizer-closed-form",
    )


def _entropies(js: JointState):
    rho = js.rho
    s_re = qcore.von_neumann_entropy(rho)
    s_r = qcore.von_neumann_entropy(qcore.partial_trace(rho, [0]))
    s_e = qcore.von_neumann_entropy(qcore.partial_trace(rho, [1]))
    return s_r, s_e, s_re


def mutual_information(js_pre: JointState, js_post: JointState) -> float:
    """I(R:E) difference (post minus pre); zero iff the erasure kept correlations intact."""
    vals = []
    for js in (js_pre, js_post):
        s_r, s_e, s_re = _entropies(js)
        vals.append(s_r + s_e - s_re)
    return vals[1] - vals[0]


def coherent_information(js: JointState) -> float:
    """S(E) - S(RE) of the post-erasure joint state."""
    _, s_e, s_re = _entropies(js)
    return s_e - s_re


def _apply_on_subsystem(op: np.ndarray, mat: np.ndarray, dims, q: int) -> np.ndarray:
    """K rho K' on subsystem q of a multipartite density matrix."""
    dims = tuple(dims)
    nsys = len(dims)
    t = mat.reshape(dims + dims)
    t = np.moveaxis(np.tensordot(op, t, axes=([1], [q])), 0, q)
    t = np.moveaxis(np.tensordot(t, op.conj(), axes=([nsys + q], [1])), -1, nsys + q)
    d = int(np.prod(dims))
    return t.reshape(d, d)


def depolarize(rho: qcore.DensityOperator, qubit: int) -> qcore.DensityOperator:
    """Completely depolarize one qubit subsystem in place: (1/4) sum_K K rho K'."""
    if rho.dims[qubit] != 2:
        raise ValueError("depolarize targets a qubit subsystem")
    total = np.zeros_like(rho.matrix)
    for p in "IXYZ":
        total += _apply_on_subsystem(codes.PAULI_1Q[p], rho.matrix, rho.dims, qubit)
    return qcore.DensityOperator(rho.dims, total / 4)


def build_joint_state_depolarized(code, n_p: int) -> JointState:
    """Cross-check path: erase by depolarizing the lost qubits in place (full basis)."""
    if code.family != "pi" and code.family != "stabilizer":
        raise ValueError("unknown code family")
    v0, v1 = code.codeword_statevectors()
    amps = np.concatenate([v0, v1]) / math.sqrt(2)
    op = qcore.DensityOperator((2,) * (code.n + 1), np.outer(amps, amps.conj()))
    for q in range(n_p + 1, code.n + 1):
        op = depolarize(op, q)
    mat = op.matrix.reshape(2, 2**code.n, 2, 2**code.n).reshape(2 * 2**code.n, 2 * 2**code.n)
    joint = qcore.DensityOperator((2, 2**code.n), mat)
    return JointState(2, "full", joint, code.name, n_p)


def _erased_block_state(code, basis_bit: int, n_p: int) -> np.ndarray:
    """Marginal on the first n_p qubits of an encoded basis codeword, Dicke basis."""
    cw = code.logical0 if basis_bit == 0 else code.logical1
    table = qcore.dicke_split(cw, n_p).table
    return table @ table.conj().T


def build_hybrid_state(qcode, ccode_a, ccode_b, n_p: int) -> JointState:
    """Adversary-plus-reference state of the hybrid scheme at n_p present shares.

    (1/4) sum_ab Tr_erased[(I ⊗ Xbar^a Zbar^b) |Phi><Phi| (...)'] ⊗ rho^a_A ⊗ rho^b_B
    with the same participant set across all three blocks and the reference
    retained. The twirl acts logically: |r>_R |rbar> -> (-1)^(b r) |r>_R |overline(r xor a)>.
    """
    if not (qcode.n == ccode_a.n == ccode_b.n):
        raise ValueError("hybrid scheme requires equal code lengths")
    if not 0 <= n_p <= qcode.n:
        raise ValueError("n_p out of range")
    d_block = n_p + 1
    total = np.zeros((2 * d_block**3,) * 2, dtype=np.complex128)
    for a in (0, 1):
        rho_a = _erased_block_state(ccode_a, a, n_p)
        for b in (0, 1):
            rho_b = _erased_block_state(ccode_b, b, n_p)
            rho_re = _rho_from_tables(_coupled_dicke_tables(qcode, n_p, twirl=(a, b)))
            total += np.kron(np.kron(rho_re, rho_a), rho_b)
    op = qcore.DensityOperator((2, d_block**3), total / 4)
    return JointState(2, "dicke-reduced", op, f"{qcode.name}-H", n_p)
