"""
Cost structure of the content path
==================================

Key encapsulation costs a fixed handful of scalar multiplications; sealing
the payload grows linearly with its size. Absolute times depend on the
machine, the structure does not.
"""

import random

from solek import BN254, bench, protocol as pr

params, _ = pr.setup(BN254, random.Random(0))

# %%
# Scalar multiplications per call, and time per payload size.
sizes = (1024, 256 * 1024, 1024 * 1024, 2 * 1024 * 1024)
rows = bench.bench_crypto(params, sizes, reps=30, rng=random.Random(0))
print(f"{'op':<11}{'bytes':>9}{'median ms':>11}{'muls':>6}")
for r in rows:
    print(f"{r.op:<11}{r.payload_bytes:>9}{r.median_ns / 1e6:>11.2f}{r.scalar_muls:>6}")

slope, intercept, r2 = bench.linear_fit(rows, "encrypt")
print(f"encrypt ~ {intercept / 1e6:.2f} ms + {slope:.3f} ns/byte   (R^2 = {r2:.3f})")

# %%
# Byte overhead of each ciphertext level, measured and from the closed form.
for o in bench.overhead_table(params):
    print(f"level {o.level} payload {o.payload_bytes:>8}: +{o.overhead_bytes} bytes (formula {o.formula_bytes})")
