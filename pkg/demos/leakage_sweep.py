"""Sweep the min-entropy leakage ladder for a few ramp schemes.

For each code and each number of held shares n_p this prints
H_min(R|E) = -log2 q_corr together with the optimal guessing fidelity
f_max = q_corr / 2.  Negative entropy means the held shares already
determine the secret; +1 means they carry nothing beyond the trivial
quarter-fidelity guess.
"""

from piqss import codes, leakage

registry = {c.name: c for c in codes.load_registry()}

for name in ("AAB4", "PR7", "R9"):
    code = registry[name]
    print(f"\n{name}  (n={code.n}, distance {code.d})")
    print(f"  {'n_p':>3}  {'h_min':>8}  {'f_max':>6}  method")
    for n_p in range(code.n, -1, -1):
        res = leakage.q_corr_sdp(leakage.build_joint_state(code, n_p))
        print(f"  {n_p:>3}  {res.h_min:>8.4f}  {res.f_max:>6.4f}  {res.method}")

# The 4-qubit stabilizer scheme has a closed form; the SDP must agree with it.
lncy = registry["LNCY4"]
print(f"\nLNCY4 closed form vs SDP  (n={lncy.n})")
for n_p in range(lncy.n, -1, -1):
    pattern = codes.ErasurePattern(set(range(n_p, lncy.n)))
    exact = leakage.h_min_stabilizer(lncy, pattern)
    sdp = leakage.q_corr_sdp(leakage.build_joint_state(lncy, n_p, basis="full"))
    print(f"  n_p={n_p}: closed {exact.h_min:+.6f}   sdp {sdp.h_min:+.6f}   "
          f"|diff| = {abs(exact.h_min - sdp.h_min):.2e}")
