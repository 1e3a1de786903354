"""
Walking through the key distribution protocol
=============================================

A trusted authority certifies a service and two neighbouring edge areas.
Content is encrypted at the origin for one area, then handed to a user in
the next area through re-encryption.
"""

import random

from solek import BN254, CorruptCiphertext, OpCounter, WrongContext, protocol as pr, wire

# %%
# Seeded randomness keeps the walkthrough reproducible. Drop the rng
# arguments to use OS randomness instead.
rng = random.Random(2024)
params, master = pr.setup(BN254, rng)

# %%
# One service key, and one key per edge area for time slot 1.
svc_secret, svc_key = pr.serv_key_ext(params, master, "video", rng)
a_north, north = pr.edge_key_ext(params, master, "edge-north", 1, rng)
a_south, south = pr.edge_key_ext(params, master, "edge-south", 1, rng)

print("service key verifies:", pr.verify_service_key(params, svc_key, svc_secret))
print("edge keys verify:", pr.verify_edge_key(params, north, a_north), pr.verify_edge_key(params, south, a_south))

# %%
# A user in the north area holds the service secret plus that area's secret.
alice = pr.UserCredential(svc_secret, a_north)
bob = pr.UserCredential(svc_secret, a_south)

ops = OpCounter()
ct = pr.encrypt(params, svc_key, north, b"episode 1, 4K", "ep-1", rng, ops)
print("encrypt used", ops.scalar_mul_count, "scalar multiplications")
print("alice reads:", pr.decrypt(params, alice, ct))

# %%
# Bob is in the south area, so the north node re-targets its cached copy.
# The payload is never touched, only the key encapsulation.
rk = pr.rekey_gen(params, a_north, south, rng)
rct = pr.re_encrypt(params, rk, ct)
print("payload unchanged:", rct.payload == ct.payload)
print("bob reads:", pr.re_decrypt(params, bob, rct))

# %%
# Alice cannot use the south copy, and a flipped bit is always caught.
try:
    pr.re_decrypt(params, alice, rct)
except WrongContext as exc:
    print("alice refused:", exc)

blob = bytearray(wire.dumps(ct, BN254))
blob[-5] ^= 1
try:
    pr.decrypt(params, alice, wire.loads(bytes(blob), params))
except CorruptCiphertext as exc:
    print("tampered copy refused:", exc)

# %%
# Serialized sizes: the first-level record, then the re-encrypted one.
print("sizes:", len(wire.dumps(ct, BN254)), len(wire.dumps(rct, BN254)), "bytes for a 13-byte payload")
