#!/usr/bin/env python3
"""Regenerate the bundled code registry (src/piqss/data/registry.json).

Every permutation-invariant entry is constructed here from first principles
and re-certified before being written:

  * closed-form Dicke superpositions whose exact surd amplitudes solve the
    erasure Knill-Laflamme conditions on their weight supports,
  * binomial-amplitude families with spaced occupancies (``gnu_codewords``),
  * the symmetric-subspace image of a binary-polyhedral character projector
    (the 13-qubit entry), and
  * numerically frozen amplitudes where the construction is a solved
    optimization rather than a closed form (11-qubit entries); these are
    validated the same way as every other entry, by certification.

The registry is data: loading it re-certifies every code, so this script is
provenance for how the numbers were produced, not a trusted input path.
"""

from __future__ import annotations

import itertools
import json
import math
import pathlib
import sys

import numpy as np
from numpy.polynomial import polynomial as npoly

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from piqss import codes, qcore  # noqa: E402

OUT = pathlib.Path(__file__).resolve().parent.parent / "src" / "piqss" / "data" / "registry.json"

PHI = (1 + math.sqrt(5)) / 2


# ---------------------------------------------------------------------------
# binary icosahedral machinery for the 13-qubit entry


def icosians() -> list[tuple[float, float, float, float]]:
    """The 120 unit quaternions of the binary icosahedral group."""
    group: list[tuple[float, float, float, float]] = []
    for axis in range(4):
        for sign in (1.0, -1.0):
            q = [0.0, 0.0, 0.0, 0.0]
            q[axis] = sign
            group.append(tuple(q))
    for signs in itertools.product((0.5, -0.5), repeat=4):
        group.append(signs)
    base = (0.0, 0.5, 0.5 / PHI, PHI / 2)
    even_perms = [
        p
        for p in itertools.permutations(range(4))
        if sum(1 for i in range(4) for j in range(i + 1, 4) if p[i] > p[j]) % 2 == 0
    ]
    seen = set()
    for p in even_perms:
        vals = [base[p.index(i)] for i in range(4)]
        nonzero = [i for i in range(4) if abs(vals[i]) > 1e-12]
        for signs in itertools.product((1, -1), repeat=len(nonzero)):
            q = list(vals)
            for s, i in zip(signs, nonzero):
                q[i] = s * q[i]
            key = tuple(round(v, 12) for v in q)
            if key not in seen:
                seen.add(key)
                group.append(key)
    assert len(group) == 120
    return group


def su2(q: tuple[float, float, float, float]) -> np.ndarray:
    w, x, y, z = q
    return np.array([[w - 1j * z, -1j * x - y], [-1j * x + y, w + 1j * z]])


def sym_lift(u: np.ndarray, n: int) -> np.ndarray:
    """Restriction of u^(tensor n) to the symmetric subspace, in the Dicke basis.

    <D_w'|u^(x)n|D_w> = sqrt(C(n,w)/C(n,w')) [t^w'] (a+tc)^(n-w) (b+td)^w
    for u = [[a, b], [c, d]].
    """
    a, b, c, d = u[0, 0], u[0, 1], u[1, 0], u[1, 1]
    m = np.zeros((n + 1, n + 1), dtype=complex)
    for w in range(n + 1):
        p0 = npoly.polypow([a, c], n - w) if n - w else np.array([1.0 + 0j])
        p1 = npoly.polypow([b, d], w) if w else np.array([1.0 + 0j])
        full = npoly.polymul(p0, p1)
        for wp in range(n + 1):
            coef = full[wp] if wp < len(full) else 0.0
            m[wp, w] = math.sqrt(math.comb(n, w) / math.comb(n, wp)) * coef
    return m


def galois_spinor_character(w: float) -> float:
    """Character of the sqrt(5) -> -sqrt(5) conjugate of the 2-dim spinor irrep.

    The conjugation acts on the quaternion real part: +-phi/2 <-> -+1/(2 phi);
    0, +-1/2 and +-1 are fixed.
    """
    if abs(w) < 1e-9:
        return 0.0
    for val, conj in ((0.5, 0.5), (1.0, 1.0), (PHI / 2, -1 / (2 * PHI)), (1 / (2 * PHI), -PHI / 2)):
        if abs(abs(w) - val) < 1e-9:
            return 2.0 * math.copysign(1.0, w) * conj
    raise ValueError(f"not a binary-icosahedral real part: {w}")


def icosahedral_galois_codewords(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of the Galois-twisted spinor isotypic block of spin n/2.

    For n = 13 the twisted 2-dim irrep appears exactly once, so the image of
    the character projector is a well-defined 2-dim code space. The basis is
    fixed deterministically by Gram-Schmidt over projected Dicke columns
    (lowest weight first) with the dominant amplitude rotated positive.
    """
    proj = np.zeros((n + 1, n + 1), dtype=complex)
    for q in icosians():
        proj += np.conj(galois_spinor_character(q[0])) * sym_lift(su2(q), n)
    proj *= 2.0 / 120.0
    assert np.max(np.abs(proj @ proj - proj)) < 1e-10, "projector is not idempotent"
    assert abs(np.trace(proj).real - 2.0) < 1e-9, "twisted spinor multiplicity is not 1"
    basis: list[np.ndarray] = []
    for w in range(n + 1):
        v = proj[:, w].copy()
        for u in basis:
            v -= u * (u.conj() @ v)
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            v = v / norm
            phase = v[np.argmax(np.abs(v))]
            v *= phase.conj() / abs(phase)
            basis.append(v)
        if len(basis) == 2:
            break
    v0, v1 = basis
    assert max(np.max(np.abs(v0.imag)), np.max(np.abs(v1.imag))) < 1e-12
    v0, v1 = v0.real, v1.real
    return v0 / np.linalg.norm(v0), v1 / np.linalg.norm(v1)


# ---------------------------------------------------------------------------
# entry builders


def pi_entry(
    name: str,
    n: int,
    d: int,
    coeffs0: np.ndarray,
    coeffs1: np.ndarray,
    construction_meta: dict | None = None,
    classical_basis: str = "z",
) -> dict:
    def serialize(coeffs: np.ndarray) -> list[dict]:
        out = []
        for w, c in enumerate(coeffs):
            c = complex(c)
            if abs(c) > 1e-15:
                out.append({"w": w, "re": c.real, "im": c.imag})
        return out

    entry = {
        "name": name,
        "family": "pi",
        "n": n,
        "k_or_K": 2,
        "d": d,
        "logical0": serialize(coeffs0),
        "logical1": serialize(coeffs1),
    }
    if construction_meta is not None:
        entry["construction_meta"] = construction_meta
    if classical_basis != "z":
        entry["classical_basis"] = classical_basis
    return entry


def surd_vector(n: int, parts: dict[int, float]) -> np.ndarray:
    c = np.zeros(n + 1, dtype=complex)
    for w, v in parts.items():
        c[w] = v
    return c


def build_entries() -> list[dict]:
    s2 = math.sqrt(2)
    entries = []

    # 4-qubit codes -------------------------------------------------------
    entries.append(
        pi_entry(
            "AAB4",
            4,
            2,
            surd_vector(4, {0: 0.5, 2: s2 / 2, 4: -0.5}),
            surd_vector(4, {0: 0.5, 2: -s2 / 2, 4: -0.5}),
        )
    )
    entries.append(
        pi_entry(
            "HN4",
            4,
            2,
            surd_vector(4, {0: 1 / s2, 4: 1 / s2}),
            surd_vector(4, {2: 1.0}),
            classical_basis="y",
        )
    )
    entries.append(
        {
            "name": "LNCY4",
            "family": "stabilizer",
            "n": 4,
            "k_or_K": 1,
            "d": 2,
            "generators": ["XXXX", "ZZII", "IIZZ"],
            "logical_x": ["XXII"],
            "logical_z": ["ZIZI"],
        }
    )

    # 7-qubit codes: exact surd solutions of the t<=2 erasure conditions --
    entries.append(
        pi_entry(
            "PR7",
            7,
            3,
            surd_vector(
                7,
                {
                    0: math.sqrt(15) / 8,
                    2: -math.sqrt(7) / 8,
                    4: math.sqrt(21) / 8,
                    6: math.sqrt(21) / 8,
                },
            ),
            surd_vector(
                7,
                {
                    1: math.sqrt(21) / 8,
                    3: math.sqrt(21) / 8,
                    5: -math.sqrt(7) / 8,
                    7: math.sqrt(15) / 8,
                },
            ),
        )
    )
    entries.append(
        pi_entry(
            "AAB7",
            7,
            3,
            surd_vector(
                7,
                {0: 2 / math.sqrt(18), 3: math.sqrt(7.0 / 18), 6: math.sqrt(7.0 / 18)},
            ),
            surd_vector(
                7,
                {1: math.sqrt(7.0 / 18), 4: -math.sqrt(7.0 / 18), 7: 2 / math.sqrt(18)},
            ),
        )
    )

    # binomial-amplitude family with occupancy spacing 3 ------------------
    for name, n in (("R9", 9), ("O11", 11), ("O13", 13)):
        l0, l1 = codes.gnu_codewords(n, 3, 3, 0)
        entries.append(
            pi_entry(
                name,
                n,
                3,
                l0.coeffs,
                l1.coeffs,
                construction_meta={"g": 3, "levels": 3, "delta": 0},
            )
        )

    # 13-qubit binary-icosahedral code ------------------------------------
    v0, v1 = icosahedral_galois_codewords(13)
    entries.append(pi_entry("KT13", 13, 3, v0.astype(complex), v1.astype(complex)))

    # 11-qubit two-level codes.  Both put one codeword on two Dicke weights
    # and the other on the mirror weights (w -> 11 - w).  All pairwise weight
    # gaps are >= 3, so the cross conditions vanish identically and matching
    # the first two moments of the weight distributions pins the amplitudes;
    # these surd forms are exact.
    #   KT11:  sqrt(5)/4 |D0> + sqrt(11)/4 |D8>   (mirror on 3/11)
    #   AAB11: sqrt(3/14)|D0> + sqrt(11/14)|D7>   (mirror on 4/11)
    for name, (wa, wb), (pa, pb) in (
        ("KT11", (0, 8), (5 / 16, 11 / 16)),
        ("AAB11", (0, 7), (3 / 14, 11 / 14)),
    ):
        c0 = np.zeros(12, dtype=complex)
        c1 = np.zeros(12, dtype=complex)
        c0[wa], c0[wb] = math.sqrt(pa), math.sqrt(pb)
        c1[11 - wa], c1[11 - wb] = math.sqrt(pa), math.sqrt(pb)
        entries.append(pi_entry(name, 11, 3, c0, c1))

    return entries


def verify(entries: list[dict]) -> None:
    """Re-certify every entry at its claimed distance before freezing."""
    for entry in entries:
        if entry["family"] == "pi":
            spec = codes.PICodeSpec(
                entry["name"],
                entry["n"],
                entry["k_or_K"],
                entry["d"],
                qcore.DickeVector(
                    entry["n"],
                    _coeffs_from(entry["logical0"], entry["n"]),
                ),
                qcore.DickeVector(
                    entry["n"],
                    _coeffs_from(entry["logical1"], entry["n"]),
                ),
                construction_meta=entry.get("construction_meta"),
                classical_basis=entry.get("classical_basis", "z"),
            )
        else:
            spec = codes.get_code.__globals__["_load_stabilizer_entry"](entry)
        d = entry["d"]
        report = codes.certify_erasure(spec, d - 1)
        if not report.ok:
            raise SystemExit(f"{entry['name']}: claimed distance {d} fails certification")
        if spec.n > d:
            beyond = codes.certify_erasure(spec, d)
            if beyond.ok:
                raise SystemExit(f"{entry['name']}: distance is better than claimed {d}")
        print(f"{entry['name']}: certified d={d} (worst dev {report.worst_deviation:.2e})")


def _coeffs_from(items: list[dict], n: int) -> np.ndarray:
    c = np.zeros(n + 1, dtype=np.complex128)
    for item in items:
        c[item["w"]] = item["re"] + 1j * item["im"]
    return c


def main() -> None:
    entries = build_entries()
    verify(entries)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(entries, indent=2) + "\n")
    print(f"wrote {OUT} ({len(entries)} codes)")


if __name__ == "__main__":
    main()
