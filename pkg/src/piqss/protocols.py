"""Seeded simulation of the anonymous secret-sharing protocols.

The module provides five protocol layers, each built on the one below:

* ``GhzResource`` / ``StatevectorGhz`` -- two interchangeable backends for an
  n-party GHZ state ``alpha|0..0> + beta|1..1>``.  The two-amplitude backend
  tracks just (alpha, beta); the statevector backend keeps the full 2^m
  vector and exists to cross-check the cheap algebra.
* ``protocol_ae`` / ``protocol_anon`` -- anonymous entanglement between two
  parties, and anonymous one-bit broadcast, both consuming one GHZ state.
* ``protocol_anonq`` -- anonymous transfer of one qubit: entangle, teleport,
  then broadcast the two Bell outcomes anonymously (three GHZ states).
* ``collision_round`` / ``protocol_qass`` / ``protocol_hqass`` -- the full
  secret-recovery runs: every participant sends their share(s) to the
  decoder, who reconstructs from the received qubits alone.
* ``anonymity_check`` -- exhaustive (or sampled) verification that an
  adversary's view is independent of which candidate was the sender.

Broadcast model: one synchronous round in which every non-receiver party
announces exactly one bit.  During entanglement, measuring parties announce
their measurement outcome and the sender announces an independent coin in her
own slot; since every announced bit is uniform, the slots are statistically
interchangeable, and the receiver's correction (parity of *all* announced
bits) never needs to know which slot was the coin.  A sequential reading --
the coin arriving in a later, attributable message -- would identify the
sender outright, so the synchronous round is the only semantics under which
the anonymity property can hold.

Adversary views are classical: public broadcasts, plus the corrupted
parties' random-tape draws, plus (in traceless mode) the pooled, unattributed
multiset of every party's draws.  Corrupted parties' final quantum registers
are omitted because after measurement they duplicate broadcast bits, and a
corrupted receiver's pair half is the same state whoever the sender was.

Determinism: every random choice is drawn from a per-party ``RandomTape``
derived from the run seed, so identical seeds give bit-identical transcripts.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import leakage, qcore

__all__ = [
    "Party",
    "RandomTape",
    "GhzResource",
    "StatevectorGhz",
    "Transcript",
    "TranscriptRecord",
    "AdversaryView",
    "Registers",
    "ghz_measure_h",
    "protocol_ae",
    "protocol_anon",
    "protocol_anonq",
    "collision_round",
    "protocol_qass",
    "protocol_hqass",
    "anonymity_check",
    "QassResult",
    "HqassResult",
    "AnonymityReport",
    "CollisionAbort",
    "make_parties",
    "decode_from_count",
]

_FORCED_TOL = 1e-12
PHI_PLUS = np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2)


class CollisionAbort(RuntimeError):
    """Raised when a send slot stays contended past the retry cap."""

    def __init__(self, slot: int, retries: int):
        super().__init__(f"slot {slot} still contended after {retries} retries")
        self.slot = slot
        self.retries = retries


class RandomTape:
    """Append-only log of labeled coin flips, reproducible from its seed.

    ``forced`` pre-loads outcomes (used by the enumeration and the oracle
    tests); once exhausted, draws fall back to the seeded generator.
    """

    def __init__(self, seed, forced=None):
        self.seed = seed
        self._rng = np.random.Generator(np.random.PCG64(seed))
        self._forced = list(forced) if forced is not None else []
        self.draws: list[tuple[str, int]] = []

    def draw(self, label: str) -> int:
        if self._forced:
            bit = int(self._forced.pop(0))
        else:
            bit = int(self._rng.integers(0, 2))
        self.draws.append((label, bit))
        return bit

    @property
    def bits(self) -> list[int]:
        return [b for _, b in self.draws]


@dataclass
class Party:
    """One protocol participant. Exactly one party per run has role "decoder"."""

    id: int
    role: str  # "shareholder" | "decoder"
    tape: RandomTape


def make_parties(n_players: int, seed, decoder: int | None = None) -> list[Party]:
    """n_players parties with independent tapes spawned from one seed."""
    children = np.random.SeedSequence(seed).spawn(n_players)
    return [
        Party(i, "decoder" if i == decoder else "shareholder", RandomTape(children[i]))
        for i in range(n_players)
    ]


@dataclass(frozen=True)
class TranscriptRecord:
    round: int
    kind: str
    party: int
    bits: tuple


class Transcript:
    """Ordered public record of a run plus the GHZ consumption ledger.

    JSONL export: one object per record with stable field names
    ``{"round", "kind", "party", "bits"}``; the final line is the ledger,
    ``{"kind": "ledger", "ghz": {purpose: count}, "ghz_total": int}``.
    """

    def __init__(self):
        self.records: list[TranscriptRecord] = []
        self.ledger: Counter = Counter()
        self._round = 0

    def next_round(self) -> int:
        r = self._round
        self._round += 1
        return r

    def record(self, rnd: int, kind: str, party: int, bits) -> None:
        self.records.append(TranscriptRecord(rnd, kind, party, tuple(int(b) for b in bits)))

    def consume_ghz(self, purpose: str, count: int) -> None:
        self.ledger[purpose] += count

    @property
    def ghz_total(self) -> int:
        return sum(self.ledger.values())

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {"round": r.round, "kind": r.kind, "party": r.party, "bits": list(r.bits)}
            )
            for r in self.records
        ]
        lines.append(
            json.dumps({"kind": "ledger", "ghz": dict(self.ledger), "ghz_total": self.ghz_total})
        )
        return "\n".join(lines) + "\n"

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())


# --------------------------------------------------------------------------
# GHZ backends
# --------------------------------------------------------------------------


class GhzResource:
    """(alpha|0..0> + beta|1..1>)/norm on the parties in ``live``.

    Hadamard-measurements keep the state in this two-amplitude family:
    outcome 1 flips the sign of beta. While two or more qubits are live both
    outcomes have probability 1/2; the last live qubit's outcome is forced.
    """

    def __init__(self, owners):
        self.live = list(owners)
        self.n = len(self.live)
        self.alpha = 1 / math.sqrt(2)
        self.beta = 1 / math.sqrt(2)

    def outcome_probs(self, owner) -> np.ndarray:
        if owner not in self.live:
            raise ValueError(f"{owner} already measured")
        if len(self.live) >= 2:
            return np.array([0.5, 0.5])
        amp = np.array([self.alpha + self.beta, self.alpha - self.beta]) / math.sqrt(2)
        return np.abs(amp) ** 2

    def measure_h(self, owner, tape: RandomTape, label: str) -> int:
        probs = self.outcome_probs(owner)
        if probs.max() > 1 - _FORCED_TOL:
            bit = int(probs.argmax())
        else:
            bit = tape.draw(label)
        if len(self.live) == 1:
            self.alpha = self.beta = None  # state fully consumed
        elif bit == 1:
            self.beta = -self.beta
        self.live.remove(owner)
        return bit

    def apply_z(self, owner) -> None:
        if owner not in self.live:
            raise ValueError(f"{owner} already measured")
        self.beta = -self.beta

    def pair_state(self, first, second) -> np.ndarray:
        if set(self.live) != {first, second}:
            raise ValueError("pair_state requires exactly these two live qubits")
        v = np.zeros(4, dtype=complex)
        v[0b00] = self.alpha
        v[0b11] = self.beta
        return v / np.linalg.norm(v)


class StatevectorGhz:
    """Full 2^m statevector backend with the same interface as GhzResource."""

    def __init__(self, owners):
        self.live = list(owners)
        self.n = len(self.live)
        vec = np.zeros((2,) * self.n, dtype=complex)
        vec[(0,) * self.n] = 1 / math.sqrt(2)
        vec[(1,) * self.n] = 1 / math.sqrt(2)
        self.vec = vec

    def _axis(self, owner) -> int:
        try:
            return self.live.index(owner)
        except ValueError:
            raise ValueError(f"{owner} already measured") from None

    def outcome_probs(self, owner) -> np.ndarray:
        ax = self._axis(owner)
        h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        rotated = np.moveaxis(np.tensordot(h, self.vec, axes=(1, ax)), 0, ax)
        probs = np.abs(rotated) ** 2
        axes = tuple(i for i in range(self.vec.ndim) if i != ax)
        return probs.sum(axis=axes)

    def measure_h(self, owner, tape: RandomTape, label: str) -> int:
        probs = self.outcome_probs(owner)
        if probs.max() > 1 - _FORCED_TOL:
            bit = int(probs.argmax())
        else:
            bit = tape.draw(label)
        ax = self._axis(owner)
        h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        rotated = np.moveaxis(np.tensordot(h, self.vec, axes=(1, ax)), 0, ax)
        branch = np.take(rotated, bit, axis=ax)
        self.vec = branch / np.linalg.norm(branch)
        self.live.pop(ax)
        return bit

    def apply_z(self, owner) -> None:
        ax = self._axis(owner)
        z = np.diag([1.0, -1.0])
        self.vec = np.moveaxis(np.tensordot(z, self.vec, axes=(1, ax)), 0, ax)

    def pair_state(self, first, second) -> np.ndarray:
        if set(self.live) != {first, second}:
            raise ValueError("pair_state requires exactly these two live qubits")
        v = self.vec if self.live == [first, second] else np.moveaxis(self.vec, 0, 1)
        return v.reshape(4) / np.linalg.norm(v)


_BACKENDS = {"two-amp": GhzResource, "statevector": StatevectorGhz}


def ghz_measure_h(g, owner, tape: RandomTape, label: str = "m") -> int:
    """Hadamard-basis measurement of one GHZ qubit; outcome from the tape."""
    return g.measure_h(owner, tape, label)


# --------------------------------------------------------------------------
# Registers: a labeled multi-qubit statevector for the share-transfer math
# --------------------------------------------------------------------------


class Registers:
    """Statevector over named qubits; supports attach/measure/drop/rename."""

    def __init__(self, labels, vector):
        vector = np.asarray(vector, dtype=complex)
        if vector.size != 2 ** len(labels):
            raise ValueError("vector size does not match label count")
        self.labels = list(labels)
        self.vec = vector.reshape((2,) * len(self.labels))

    def _axis(self, label) -> int:
        return self.labels.index(label)

    def attach(self, labels, vector) -> None:
        vector = np.asarray(vector, dtype=complex).reshape((2,) * len(labels))
        self.vec = np.tensordot(self.vec, vector, axes=0)
        self.labels.extend(labels)

    def apply_1q(self, op: np.ndarray, label) -> None:
        ax = self._axis(label)
        self.vec = np.moveaxis(np.tensordot(op, self.vec, axes=(1, ax)), 0, ax)

    def bell_measure(self, q_in, q_half, m0: int, m1: int) -> None:
        """Project (q_in, q_half) onto the Bell state indexed by (m0, m1), drop both.

        Bell convention: |b_{m0,m1}> = (|0, m1> + (-1)^m0 |1, 1-m1>)/sqrt(2),
        so the remote half is left carrying Z^m0 X^m1 (input), undone by the
        receiver applying X^m1 then Z^m0.
        """
        bell = np.zeros((2, 2), dtype=complex)
        bell[0, m1] = 1 / math.sqrt(2)
        bell[1, 1 - m1] = (-1) ** m0 / math.sqrt(2)
        a1, a2 = self._axis(q_in), self._axis(q_half)
        out = np.tensordot(bell.conj(), self.vec, axes=([0, 1], [a1, a2]))
        norm = np.linalg.norm(out)
        if norm < 1e-12:
            raise ValueError("Bell outcome has zero probability")
        self.vec = out / norm
        for lbl in sorted((q_in, q_half), key=self._axis, reverse=True):
            self.labels.remove(lbl)

    def rename(self, old, new) -> None:
        self.labels[self._axis(old)] = new

    def density(self, keep) -> np.ndarray:
        """Reduced density matrix over ``keep`` (in the given order)."""
        axes = [self._axis(lbl) for lbl in keep]
        rest = [i for i in range(len(self.labels)) if i not in axes]
        v = np.transpose(self.vec, axes + rest).reshape(2 ** len(axes), -1)
        return v @ v.conj().T

    def statevector(self, order=None) -> np.ndarray:
        lbls = order if order is not None else sorted(self.labels, key=str)
        axes = [self._axis(lbl) for lbl in lbls]
        return np.transpose(self.vec, axes).reshape(-1)


# --------------------------------------------------------------------------
# Anonymous entanglement / broadcast / qubit transfer
# --------------------------------------------------------------------------


def protocol_ae(parties, alice: int, bob: int, transcript: Transcript | None = None,
                backend: str = "two-amp"):
    """Anonymous entanglement: leave (|00>+|11>)/sqrt(2) with alice and bob.

    One synchronous broadcast round: every party except the receiver
    announces one bit -- measuring parties their Hadamard outcome, the sender
    an independent coin b.  The sender applies Z^b; the receiver applies Z to
    his half iff the parity of all announced bits is 1.  Consumes one GHZ
    state.  Returns (pair, transcript) with pair ordered (alice, bob).
    """
    if alice == bob:
        raise ValueError("sender and receiver must differ")
    transcript = transcript if transcript is not None else Transcript()
    byid = {p.id: p for p in parties}
    ids = sorted(byid)
    g = _BACKENDS[backend](ids)
    transcript.consume_ghz("ae", 1)
    rnd = transcript.next_round()

    slot_bits = {}
    for j in ids:
        if j in (alice, bob):
            continue
        slot_bits[j] = g.measure_h(j, byid[j].tape, "ae:m")
    slot_bits[alice] = byid[alice].tape.draw("ae:coin")
    for j in ids:
        if j != bob:
            transcript.record(rnd, "broadcast", j, (slot_bits[j],))

    if slot_bits[alice] == 1:
        g.apply_z(alice)
    parity = sum(slot_bits.values()) % 2
    if parity == 1:
        g.apply_z(bob)
    return g.pair_state(alice, bob), transcript


def protocol_anon(parties, sender: int, d: int, transcript: Transcript | None = None,
                  backend: str = "two-amp"):
    """Anonymous broadcast of one bit: parity of everyone's announced outcome.

    The sender phase-flips her GHZ qubit iff d=1, then every party measures
    in the Hadamard basis and announces; the parity of the n announcements is
    d in every branch.  Consumes one GHZ state.
    """
    transcript = transcript if transcript is not None else Transcript()
    byid = {p.id: p for p in parties}
    ids = sorted(byid)
    g = _BACKENDS[backend](ids)
    transcript.consume_ghz("anon", 1)
    rnd = transcript.next_round()

    if d == 1:
        g.apply_z(sender)
    outcomes = []
    for j in ids:
        bit = g.measure_h(j, byid[j].tape, "anon:m")
        outcomes.append(bit)
        transcript.record(rnd, "broadcast", j, (bit,))
    decoded = sum(outcomes) % 2
    return decoded, transcript


def protocol_anonq(regs: Registers, share, alice: int, bob: int, parties,
                   transcript: Transcript | None = None, backend: str = "two-amp") -> Transcript:
    """Anonymously move the ``share`` register to the receiver.

    Entangle (protocol_ae), teleport the share through the pair (Bell
    outcomes m0, m1 from the sender's tape; each branch has probability
    exactly 1/4), then broadcast m0 and m1 anonymously so the receiver can
    correct with X^m1 then Z^m0.  Afterwards the global state is unchanged
    and the share label denotes a qubit held by the receiver.  Consumes
    exactly 3 GHZ states.
    """
    transcript = transcript if transcript is not None else Transcript()
    byid = {p.id: p for p in parties}

    pair, _ = protocol_ae(parties, alice, bob, transcript, backend)
    half_a, half_b = f"_pair{alice}a", f"_pair{bob}b"
    regs.attach([half_a, half_b], pair)

    m0 = byid[alice].tape.draw("teleport:m0")
    m1 = byid[alice].tape.draw("teleport:m1")
    regs.bell_measure(share, half_a, m0, m1)

    protocol_anon(parties, alice, m0, transcript, backend)
    protocol_anon(parties, alice, m1, transcript, backend)

    if m1 == 1:
        regs.apply_1q(np.array([[0.0, 1.0], [1.0, 0.0]]), half_b)
    if m0 == 1:
        regs.apply_1q(np.diag([1.0, -1.0]), half_b)
    regs.rename(half_b, share)
    return transcript


def collision_round(requesters, n: int, transcript: Transcript | None = None):
    """One slot of send-contention detection over an n-player network.

    Abstract oracle with exact honest-case semantics: flags iff two or more
    parties request the slot.  The distributed implementation this stands in
    for costs ceil(log2 n) + 1 GHZ states, which the ledger records.
    """
    transcript = transcript if transcript is not None else Transcript()
    transcript.consume_ghz("collision", math.ceil(math.log2(n)) + 1)
    flag = len(set(requesters)) >= 2
    rnd = transcript.next_round()
    transcript.record(rnd, "collision", -1, (int(flag),))
    return flag, transcript


# --------------------------------------------------------------------------
# Secret recovery
# --------------------------------------------------------------------------


def _dicke_isometry(k: int) -> np.ndarray:
    """Columns |D^k_j>, j = 0..k: the symmetric-subspace embedding."""
    v = np.zeros((2**k, k + 1), dtype=complex)
    for j in range(k + 1):
        v[:, j] = qcore.dicke_state(k, j)
    return v


def _channel_for(code, k: int):
    """Certified optimal recovery for this code with k received shares."""
    return leakage.extract_recovery(leakage.build_joint_state(code, k))


def decode_from_count(code, rho_rk: np.ndarray, k: int) -> np.ndarray:
    """Optimal recovery keyed only by the missing-share count.

    rho_rk: state on (reference ⊗ 2^k received qubits), supported on the
    symmetric subspace of the received block.  Returns the 4x4 state on
    (reference ⊗ decoded logical qubit).
    """
    v = _dicke_isometry(k)
    red = np.kron(np.eye(2), v).conj().T @ rho_rk @ np.kron(np.eye(2), v)
    return _channel_for(code, k).apply_to_second(red, 2)


def _recover_block(code, rho_k: np.ndarray, k: int) -> np.ndarray:
    """Recovery channel alone: 2^k block state -> 2-dim logical state."""
    v = _dicke_isometry(k)
    return _channel_for(code, k).apply(v.conj().T @ rho_k @ v)


def _coupled_vector(code, twirl=(0, 0)) -> np.ndarray:
    """(|0>|0bar> + |1>|1bar>)/sqrt(2), optionally twirled by logical X^a Z^b."""
    a, b = twirl
    v = code.codeword_statevectors()
    parts = [(-1) ** (b * r) * v[r ^ a] for r in (0, 1)]
    return np.concatenate(parts) / math.sqrt(2)


def _run_slot(slot: int, sender: int, n: int, transcript: Transcript,
              retry_cap: int, contention) -> int:
    """Reserve one send slot; returns the retry count or raises CollisionAbort."""
    retries = 0
    while True:
        extra = contention.get(slot, []) if contention else []
        extra = extra[retries] if retries < len(extra) else []
        flag, _ = collision_round([sender, *extra], n, transcript)
        if not flag:
            return retries
        retries += 1
        if retries > retry_cap:
            raise CollisionAbort(slot, retries - 1)


@dataclass
class QassResult:
    decoded_state: np.ndarray  # 4x4 on (reference ⊗ decoded qubit)
    fidelity: float
    transcript: Transcript
    retries: int


def protocol_qass(code, participants, seed, backend: str = "two-amp",
                  retry_cap: int = 8, contention=None) -> QassResult:
    """Full anonymous recovery run for one secret.

    The secret is the maximally entangled half of (|0>|0bar>+|1>|1bar>)/sqrt(2)
    with a retained reference qubit, its n shares held by shareholders
    0..n-1; party n is the decoder.  Each participant claims a slot
    (collision round) and transfers their share with protocol_anonq; the
    decoder then applies the count-keyed optimal recovery to the received
    block and the result is scored against the maximally entangled target.

    Only permutation-invariant codes are supported: count-keyed decoding is
    exactly what their symmetry licenses.
    """
    if code.family != "pi":
        raise ValueError("anonymous recovery requires a permutation-invariant code")
    n = code.n
    participants = sorted(set(participants))
    if participants and not (0 <= participants[0] and participants[-1] < n):
        raise ValueError("participants must be shareholder ids 0..n-1")
    k = len(participants)
    bob = n
    parties = make_parties(n + 1, seed, decoder=bob)
    transcript = Transcript()

    labels = ["R"] + [f"s{i}" for i in range(n)]
    regs = Registers(labels, _coupled_vector(code))

    retries = 0
    for slot, p in enumerate(participants):
        retries += _run_slot(slot, p, n, transcript, retry_cap, contention)
        protocol_anonq(regs, f"s{p}", p, bob, parties, transcript, backend)

    rho = regs.density(["R"] + [f"s{p}" for p in participants])
    sigma = decode_from_count(code, rho, k)
    fid = float(np.real(PHI_PLUS.conj() @ sigma @ PHI_PLUS))
    return QassResult(sigma, fid, transcript, retries)


def _measure_logical(sigma: np.ndarray, basis: str):
    """Projective readout of a decoded classical bit; None when ambiguous."""
    if basis == "y":
        vecs = [np.array([1.0, 1j]) / math.sqrt(2), np.array([1.0, -1j]) / math.sqrt(2)]
    else:
        vecs = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    probs = [float(np.real(v.conj() @ sigma @ v)) for v in vecs]
    value = int(np.argmax(probs))
    return (value if probs[value] >= 1 - 1e-6 else None), probs


def _classical_vector(code, bit: int) -> np.ndarray:
    """Statevector encoding a classical bit in the code's readout basis."""
    v0, v1 = code.codeword_statevectors()
    if code.classical_basis == "y":
        return (v0 + 1j * (-1) ** bit * v1) / math.sqrt(2)
    return (v0, v1)[bit]


@dataclass
class HqassResult:
    a_decoded: int | None
    b_decoded: int | None
    pre_correction_state: np.ndarray   # decoder's branch state before X^a Z^b
    corrected_state: np.ndarray | None  # after correction; None if ambiguous
    epistemic_state: np.ndarray        # what the decoder can actually claim
    fidelity: float
    transcript: Transcript
    retries: int
    twirl: tuple


def protocol_hqass(qcode, ccode_a, ccode_b, participants, seed,
                   backend: str = "two-amp", retry_cap: int = 8,
                   contention=None, forced_twirl=None) -> HqassResult:
    """Hybrid run: a twirled quantum secret plus two classical key bits.

    The dealer draws bits (a, b) (or takes ``forced_twirl``), applies the
    logical twirl X^a Z^b to the quantum secret, and encodes a and b as
    logical basis states with their own codes.  Each participant transfers
    three shares per slot (9 GHZ states + the collision round).  The decoder
    first reads a and b from the classical blocks (recovery + projective
    readout in the code's declared basis), then undoes the twirl on the
    decoded quantum block.  If either classical readout is ambiguous the
    twirl stays unknown and the decoder's state is the uniform (a,b)-average,
    whose fidelity with the target is exactly 1/4.
    """
    for c in (qcode, ccode_a, ccode_b):
        if c.family != "pi":
            raise ValueError("anonymous recovery requires permutation-invariant codes")
        if c.n != qcode.n:
            raise ValueError("all three codes must have the same share count")
    n = qcode.n
    participants = sorted(set(participants))
    k = len(participants)
    bob = n
    # children 0..n seed the party tapes exactly as in the plain quantum run
    # (spawn children depend only on their index), child n+1 is the dealer's.
    children = np.random.SeedSequence(seed).spawn(n + 2)
    if forced_twirl is not None:
        a, b = (int(x) for x in forced_twirl)
    else:
        dealer_rng = np.random.Generator(np.random.PCG64(children[n + 1]))
        a, b = (int(x) for x in dealer_rng.integers(0, 2, size=2))
    parties = [
        Party(i, "decoder" if i == bob else "shareholder", RandomTape(children[i]))
        for i in range(n + 1)
    ]
    transcript = Transcript()

    q_regs = Registers(["R"] + [f"q{i}" for i in range(n)], _coupled_vector(qcode, (a, b)))
    a_regs = Registers([f"a{i}" for i in range(n)], _classical_vector(ccode_a, a))
    b_regs = Registers([f"b{i}" for i in range(n)], _classical_vector(ccode_b, b))

    retries = 0
    for slot, p in enumerate(participants):
        retries += _run_slot(slot, p, n, transcript, retry_cap, contention)
        protocol_anonq(q_regs, f"q{p}", p, bob, parties, transcript, backend)
        protocol_anonq(a_regs, f"a{p}", p, bob, parties, transcript, backend)
        protocol_anonq(b_regs, f"b{p}", p, bob, parties, transcript, backend)

    keep_q = ["R"] + [f"q{p}" for p in participants]
    sigma_q = decode_from_count(qcode, q_regs.density(keep_q), k)
    a_hat, _ = _measure_logical(
        _recover_block(ccode_a, a_regs.density([f"a{p}" for p in participants]), k),
        ccode_a.classical_basis,
    )
    b_hat, _ = _measure_logical(
        _recover_block(ccode_b, b_regs.density([f"b{p}" for p in participants]), k),
        ccode_b.classical_basis,
    )

    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    z = np.diag([1.0, -1.0])
    if a_hat is not None and b_hat is not None:
        u = np.kron(np.eye(2), np.linalg.matrix_power(x, a_hat) @ np.linalg.matrix_power(z, b_hat))
        corrected = u @ sigma_q @ u.conj().T
        epistemic = corrected
    else:
        corrected = None
        # Averaging the coupled state over the four twirl hypotheses leaves
        # I/2 on the reference tensor the codeword-mixture marginal, so the
        # decoder's claimable state has fidelity exactly 1/4 with the target.
        t0 = qcore.dicke_split(qcode.logical0, k).table
        t1 = qcore.dicke_split(qcode.logical1, k).table
        tau = (t0 @ t0.conj().T + t1 @ t1.conj().T) / 2
        epistemic = _channel_for(qcode, k).apply_to_second(np.kron(np.eye(2) / 2, tau), 2)
    fid = float(np.real(PHI_PLUS.conj() @ epistemic @ PHI_PLUS))
    return HqassResult(a_hat, b_hat, sigma_q, corrected, epistemic, fid,
                       transcript, retries, (a, b))


# --------------------------------------------------------------------------
# Anonymity and tracelessness
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AdversaryView:
    """What the adversary learns from one run.

    ``visible`` is the canonical classical view row: all broadcast bits in
    (round, party-id) order, then the corrupted parties' tape draws in party
    order, then -- in traceless mode -- the count of ones among every party's
    pooled draws (the unattributed multiset; its size is branch-independent).
    """

    corrupted: frozenset
    visible: tuple
    traceless_mode: bool


def build_view(transcript: Transcript, parties, corrupted, traceless: bool) -> AdversaryView:
    """Assemble the adversary's view from an actual run."""
    broadcasts = [
        b for r in transcript.records if r.kind == "broadcast" for b in r.bits
    ]
    byid = {p.id: p for p in parties}
    tape_bits = [b for c in sorted(corrupted) for b in byid[c].tape.bits]
    row = broadcasts + tape_bits
    if traceless:
        row.append(sum(b for p in parties for b in p.tape.bits))
    return AdversaryView(frozenset(corrupted), tuple(row), traceless)


def _enumerate_rows(protocol: str, n: int, sender: int, receiver: int | None,
                    corrupted, traceless: bool, d: int = 0,
                    free: np.ndarray | None = None, return_draws: bool = False):
    """Adversary-view rows for one sender, one row per free-bit pattern.

    ``free`` defaults to the full 2^F pattern table (exact mode); sampled
    mode passes its own matrix.  Mirrors the protocol drivers column for
    column: broadcast slots in (round, party-id) order, corrupted tapes in
    (party, draw) order, then the pooled ones-count.  The drivers consume
    tape bits in exactly the per-party order used here (measurements
    ascending by id, the entanglement coin drawn by the sender in her own
    slot, the last announcement of each broadcast round forced by parity);
    the oracle tests replay rows of this table as forced tapes through the
    real drivers and require identical views.
    """
    ids = list(range(n))
    n_free = {"anon": n - 1, "ae": n - 1, "anonq": 3 * n - 1}[protocol]
    if free is None:
        free = _bit_patterns(n_free)
    if free.shape[1] != n_free:
        raise ValueError("free-bit matrix has the wrong width")
    zero = np.zeros((len(free), 0), dtype=np.uint8)

    def anon_block(bits, forced_parity):
        # n columns: ids 0..n-2 free, last forced to complete the parity
        last = (forced_parity + bits.sum(axis=1)) % 2
        return np.concatenate([bits, last[:, None]], axis=1)

    if protocol == "anon":
        view = anon_block(free, d % 2)
        draws = {j: view[:, [j]] for j in ids[:-1]}
        draws[ids[-1]] = zero
    elif protocol == "ae":
        slots = [j for j in ids if j != receiver]
        view = free
        draws = {j: free[:, [slots.index(j)]] for j in slots}
        draws[receiver] = zero
    elif protocol == "anonq":
        slots = [j for j in ids if j != receiver]
        ae = free[:, : n - 1]
        m0 = free[:, n - 1]
        m1 = free[:, n]
        anon1 = anon_block(free[:, n + 1 : 2 * n], m0)
        anon2 = anon_block(free[:, 2 * n : 3 * n - 1], m1)
        view = np.concatenate([ae, anon1, anon2], axis=1)
        draws = {}
        for j in ids:
            cols = []
            if j != receiver:
                cols.append(ae[:, [slots.index(j)]])
            if j == sender:
                cols.append(m0[:, None])
                cols.append(m1[:, None])
            if j != ids[-1]:
                cols.append(anon1[:, [j]])
                cols.append(anon2[:, [j]])
            draws[j] = np.concatenate(cols, axis=1) if cols else zero
    else:
        raise ValueError(f"unknown protocol {protocol!r}")

    parts = [view] + [draws[c] for c in sorted(corrupted)]
    if traceless:
        ones = free.sum(axis=1) % 256
        parts.append(ones[:, None].astype(np.uint8))
    rows = np.concatenate(parts, axis=1).astype(np.uint8)
    return (rows, draws) if return_draws else rows


def _bit_patterns(f: int) -> np.ndarray:
    cols = [(np.arange(2**f) >> (f - 1 - i)) & 1 for i in range(f)]
    return np.stack(cols, axis=1).astype(np.uint8)


def _row_distribution(rows: np.ndarray) -> dict:
    packed = np.ascontiguousarray(rows).view(
        np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))
    ).ravel()
    uniq, counts = np.unique(packed, return_counts=True)
    total = rows.shape[0]
    return {u.tobytes(): c / total for u, c in zip(uniq, counts)}


def _tv(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


@dataclass(frozen=True)
class AnonymityReport:
    protocol: str
    n: int
    corrupted: frozenset
    senders: tuple
    max_tv: float
    exact: bool
    branches: int          # per-sender branch count (exact) or sample count
    traceless: bool
    note: str = ""


def anonymity_check(protocol: str, n: int, corrupted, senders=None,
                    receiver: int | None = None, traceless: bool = False,
                    exact: bool = True, cap_bits: int = 18,
                    samples: int = 20000, seed=0) -> AnonymityReport:
    """Maximum total-variation distance of the adversary's view across senders.

    Exact mode enumerates every assignment of the protocol's free coin flips
    (uniform weight each); it refuses when the free-bit count exceeds
    ``cap_bits``.  Sampled mode draws ``samples`` branches per sender and is
    always labeled approximate.  The receiver defaults to the highest id for
    the protocols that have one; corrupted may include the receiver but never
    a sender candidate, and at most n-2 parties may be corrupted.
    """
    protocol = protocol.lower()
    if protocol not in ("anon", "ae", "anonq"):
        raise ValueError(f"unknown protocol {protocol!r}")
    corrupted = frozenset(corrupted)
    if len(corrupted) > n - 2:
        raise ValueError("at most n-2 parties may be corrupted")
    if receiver is None and protocol in ("ae", "anonq"):
        receiver = n - 1
    if senders is None:
        senders = tuple(j for j in range(n) if j not in corrupted and j != receiver)
    senders = tuple(senders)
    if len(senders) < 2:
        raise ValueError("need at least two candidate senders")
    if set(senders) & corrupted or receiver in senders:
        raise ValueError("sender candidates must be honest non-receivers")

    free_bits = {"anon": n - 1, "ae": n - 1, "anonq": 3 * n - 1}[protocol]
    d_values = (0, 1) if protocol == "anon" else (0,)

    if exact:
        if free_bits > cap_bits:
            raise ValueError(
                f"{2**free_bits} branches exceed the exact cap (2^{cap_bits}); "
                "rerun with exact=False for a sampled estimate"
            )
        max_tv = 0.0
        for d in d_values:
            dists = {
                s: _row_distribution(
                    _enumerate_rows(protocol, n, s, receiver, corrupted, traceless, d)
                )
                for s in senders
            }
            for i, s in enumerate(senders):
                for s2 in senders[i + 1:]:
                    max_tv = max(max_tv, _tv(dists[s], dists[s2]))
        return AnonymityReport(protocol, n, corrupted, senders, max_tv, True,
                               2**free_bits, traceless)

    # Sampled fallback.  Raw empirical TV saturates at 1 whenever the view
    # space dwarfs the sample count, so the rows are first pushed through a
    # seeded random GF(2) projection onto `bucket_bits` bits.  TV can only
    # shrink under a function of the view (data processing), so the estimate
    # is a noisy lower bound on the true distance; its noise floor is about
    # sqrt(2^bucket_bits / samples).
    bucket_bits = 6
    rng = np.random.default_rng(seed)
    free_bits = {"anon": n - 1, "ae": n - 1, "anonq": 3 * n - 1}[protocol]
    max_tv = 0.0
    proj = None
    for d in d_values:
        dists = {}
        for s in senders:
            free = rng.integers(0, 2, size=(samples, free_bits), dtype=np.uint8)
            rows = _enumerate_rows(protocol, n, s, receiver, corrupted,
                                   traceless, d, free=free)
            if proj is None:
                proj = np.random.default_rng(seed).integers(
                    0, 2, size=(rows.shape[1], bucket_bits), dtype=np.uint8
                )
            dists[s] = _row_distribution((rows @ proj) % 2)
        for i, s in enumerate(senders):
            for s2 in senders[i + 1:]:
                max_tv = max(max_tv, _tv(dists[s], dists[s2]))
    return AnonymityReport(
        protocol, n, corrupted, senders, max_tv, False, samples, traceless,
        note=(
            "sampled lower-bound estimate through a random "
            f"{bucket_bits}-bit projection; noise floor ~ "
            f"{math.sqrt(2**bucket_bits / samples):.3f}"
        ),
    )
