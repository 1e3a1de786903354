import random
import struct
from dataclasses import replace

import pytest
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from solek import protocol as pr
from solek.errors import CorruptCiphertext, InvalidKey, InvalidReEncryption, WrongContext
from solek.group import BN254, TOY, OpCounter

from conftest import TOY_G, TOY_P, TOY_Q, World, ref_frame, ref_hash, toy_dlog, toy_pow

# -- known-answer tests on the toy group, each re-derived by brute force -----------


@pytest.fixture(scope="module")
def kat():
    rng = random.Random(7)
    params, ms = pr.setup(TOY, rng)
    y, spk = pr.serv_key_ext(params, ms, "video", rng)
    a, epk = pr.edge_key_ext(params, ms, "edge-A", 1, random.Random(9))
    b, epk_b = pr.edge_key_ext(params, ms, "edge-B", 1, random.Random(10))
    ct = pr.encrypt(params, spk, epk, b"toy content", "m-1", random.Random(11))
    rk = pr.rekey_gen(params, a, epk_b, random.Random(12))
    return dict(params=params, ms=ms, y=y, spk=spk, a=a, epk=epk, b=b, epk_b=epk_b, ct=ct, rk=rk)


def _h1_scalar(*parts):
    return int.from_bytes(ref_hash("SOLEK/H1", ref_frame(*parts)), "big") % TOY_Q


def _enc(el):
    return el.to_bytes(2, "big")


def test_setup_kat(kat):
    assert kat["ms"].s == 42 and kat["params"].p_pub == 339
    assert toy_pow(TOY_G, 42) == 339


def test_service_key_kat(kat):
    spk, y = kat["spk"], kat["y"]
    assert (spk.key_commit, spk.cert_commit, spk.cert_response, y.y) == (392, 8, 1, 21)
    h = _h1_scalar(_enc(392), _enc(8), b"video")
    assert toy_pow(TOY_G, 1) == 8 * toy_pow(339, h) % TOY_P
    assert toy_pow(TOY_G, 21) == 392 * toy_pow(TOY_G, 1) % TOY_P


def test_edge_key_kat(kat):
    epk, a = kat["epk"], kat["a"]
    assert (epk.key_commit, epk.cert_commit, epk.cert_response, a.a) == (36, 524, 45, 4)
    h = _h1_scalar(_enc(36), _enc(524), b"edge-A", 1)
    assert toy_pow(TOY_G, 45) == 524 * toy_pow(339, h) % TOY_P
    assert toy_pow(TOY_G, 4) == 36 * toy_pow(TOY_G, 45) % TOY_P


def test_encrypt_kat_opens_under_reference_kem(kat):
    ct, spk, epk = kat["ct"], kat["spk"], kat["epk"]
    assert ct.ephemeral == 214
    assert ct.masked_key.hex() == "369c6efe5845702e8a24464fdbd1eaf789f21e5245557db1cedb92e438ef24d2"
    assert ct.payload.hex() == "5045e4da32da5e96796b9d3039fa9990b419758fe86b2d7ddccba0d5b2dc213e8fff5b1d561059"

    w = toy_dlog(ct.ephemeral)
    full = spk.key_commit * toy_pow(TOY_G, spk.cert_response) * epk.key_commit * toy_pow(TOY_G, epk.cert_response)
    shared = toy_pow(full % TOY_P, w)
    mask = ref_hash("SOLEK/H2", ref_frame(b"video", b"edge-A", 1, _enc(214), _enc(shared)))[:32]
    k = bytes(x ^ y for x, y in zip(ct.masked_key, mask))
    dem_key = ref_hash("SOLEK/H5", ref_frame(k))[:32]
    ad = ref_frame(b"video", b"edge-A", b"m-1") + struct.pack(">Q", 1)
    assert AESGCM(dem_key).decrypt(ct.payload[:12], ct.payload[12:], ad) == b"toy content"


def test_rekey_and_re_encrypt_kat(kat):
    rk, a, epk_b = kat["rk"], kat["a"], kat["epk_b"]
    assert (rk.alpha, rk.commitment) == (76, 483)
    assert rk.confirm_tag.hex() == "8cff1e16b04739905ebf32b25c6eee9a4baf6839abed0cf52847199c513b4295"

    rho = toy_dlog(rk.commitment)
    pk_b = epk_b.key_commit * toy_pow(TOY_G, epk_b.cert_response) % TOY_P
    shared = toy_pow(pk_b, rho)
    data = ref_frame(b"edge-A", b"edge-B", 1, _enc(483), _enc(shared))
    h3 = int.from_bytes(ref_hash("SOLEK/H3", data), "big") % TOY_Q
    assert rk.alpha == (a.a + h3) % TOY_Q
    assert rk.confirm_tag == ref_hash("SOLEK/H4", data)[:32]

    rct = pr.re_encrypt(kat["params"], rk, kat["ct"])
    assert rct.transformed == 565 == toy_pow(214, 76)
    cred = pr.UserCredential(kat["y"], kat["b"])
    assert pr.re_decrypt(kat["params"], cred, rct) == b"toy content"


# -- correctness ------------------------------------------------------------------


def test_round_trips(world):
    for size in (0, 1, 100, 5000):
        msg = world.rng.randbytes(size)
        ct = world.encrypt(msg)
        assert pr.decrypt(world.params, world.cred_i, ct) == msg
        assert pr.re_decrypt(world.params, world.cred_j, pr.re_encrypt(world.params, world.rekey(), ct)) == msg


def test_rekey_is_reusable_across_ciphertexts(world):
    rk = world.rekey()
    for k in range(3):
        msg = b"item %d" % k
        rct = pr.re_encrypt(world.params, rk, world.encrypt(msg, f"m-{k}"))
        assert pr.re_decrypt(world.params, world.cred_j, rct) == msg


def test_payload_length_framing(world):
    for size in (0, 17, 1000):
        assert len(world.encrypt(bytes(size)).payload) == size + pr.DEM_OVERHEAD


def test_ephemerals_are_fresh(default_world):
    w = default_world
    recipient = pr.recipient_key(w.params, w.spk, w.epk_i)
    seen = {pr.encrypt_to(w.params, recipient, b"", "m", w.rng).ephemeral for _ in range(1000)}
    assert len(seen) == 1000


def test_same_message_encrypts_differently(world):
    a, b = world.encrypt(b"same"), world.encrypt(b"same")
    assert a.ephemeral != b.ephemeral or a.masked_key != b.masked_key
    assert a.payload != b.payload


def test_seeded_encryption_is_reproducible():
    def once():
        w = World(TOY, seed=99)
        return pr.encrypt(w.params, w.spk, w.epk_i, b"abc", "m", random.Random(5))

    assert once() == once()


# -- operation counts -------------------------------------------------------------


@pytest.mark.parametrize("group", [TOY, BN254], ids=lambda g: g.name)
def test_scalar_mul_counts(group):
    w = World(group)
    counts = {}
    c = OpCounter()
    ct = pr.encrypt(w.params, w.spk, w.epk_i, b"m", "m", w.rng, c)
    counts["encrypt"] = c.scalar_mul_count
    c = OpCounter()
    pr.decrypt(w.params, w.cred_i, ct, c)
    counts["decrypt"] = c.scalar_mul_count
    c = OpCounter()
    rk = pr.rekey_gen(w.params, w.a_i, w.epk_j, w.rng, c)
    counts["rekey_gen"] = c.scalar_mul_count
    c = OpCounter()
    rct = pr.re_encrypt(w.params, rk, ct, c)
    counts["re_encrypt"] = c.scalar_mul_count
    c = OpCounter()
    pr.re_decrypt(w.params, w.cred_j, rct, c)
    counts["re_decrypt"] = c.scalar_mul_count
    assert counts == {"encrypt": 4, "decrypt": 1, "rekey_gen": 3, "re_encrypt": 1, "re_decrypt": 3}

    recipient = pr.recipient_key(w.params, w.spk, w.epk_i)
    c = OpCounter()
    pr.encrypt_to(w.params, recipient, b"m", "m", w.rng, c)
    assert c.scalar_mul_count == 2


# -- certificates -----------------------------------------------------------------


def test_honest_keys_verify(world):
    assert pr.verify_service_key(world.params, world.spk)
    assert pr.verify_service_key(world.params, world.spk, world.y)
    assert pr.verify_edge_key(world.params, world.epk_i)
    assert pr.verify_edge_key(world.params, world.epk_i, world.a_i)


def test_single_field_perturbations_fail(default_world):
    # the default group only: with q = 101, an H1 collision lets ~1% of perturbations through
    world = default_world
    g, params = world.group, world.params
    other = g.base_mul(12345)

    def perturb_element(el):
        return g.element_add(el, g.generator)

    spk = world.spk
    for bad in (
        replace(spk, service_id=b"audio"),
        replace(spk, key_commit=perturb_element(spk.key_commit)),
        replace(spk, cert_commit=perturb_element(spk.cert_commit)),
        replace(spk, cert_response=(spk.cert_response + 1) % g.order),
        replace(spk, key_commit=other),
    ):
        assert not pr.verify_service_key(params, bad)
        with pytest.raises(InvalidKey):
            pr.encrypt(params, bad, world.epk_i, b"", "m")

    epk = world.epk_i
    for bad in (
        replace(epk, edge_id=b"edge-x"),
        replace(epk, epoch=2),
        replace(epk, key_commit=perturb_element(epk.key_commit)),
        replace(epk, cert_commit=perturb_element(epk.cert_commit)),
        replace(epk, cert_response=(epk.cert_response + 1) % g.order),
    ):
        assert not pr.verify_edge_key(params, bad)
        with pytest.raises(InvalidKey):
            pr.rekey_gen(params, world.a_j, bad)

    assert not pr.verify_service_key(params, spk, replace(world.y, y=(world.y.y + 1) % g.order))
    assert not pr.verify_edge_key(params, epk, replace(world.a_i, a=(world.a_i.a + 1) % g.order))
    assert not pr.verify_edge_key(params, epk, world.a_j)


def test_toy_certificate_soundness_is_exact(toy_world):
    w = toy_world
    spk = w.spk
    for r in range(TOY_Q):
        ok = pr.verify_service_key(w.params, replace(spk, cert_response=r))
        assert ok == (r == spk.cert_response)
    # a relabeled key passes exactly when the H1 scalars collide
    h = lambda sid: _h1_scalar(_enc(spk.key_commit), _enc(spk.cert_commit), sid)
    collisions = 0
    for k in range(300):
        sid = b"svc-%d" % k
        ok = pr.verify_service_key(w.params, replace(spk, service_id=sid))
        assert ok == (h(sid) == h(b"video"))
        collisions += ok
    assert collisions < 15


def test_identity_components_rejected(world):
    assert not pr.verify_service_key(world.params, replace(world.spk, key_commit=world.group.identity))
    assert not pr.verify_edge_key(world.params, replace(world.epk_i, cert_commit=world.group.identity))


# -- context and tampering --------------------------------------------------------


def test_wrong_area_or_service_is_wrong_context(world):
    ct = world.encrypt()
    with pytest.raises(WrongContext):
        pr.decrypt(world.params, world.cred_j, ct)
    other_y, _ = pr.serv_key_ext(world.params, world.ms, "audio", world.rng)
    with pytest.raises(WrongContext):
        pr.decrypt(world.params, pr.UserCredential(other_y, world.a_i), ct)
    rct = pr.re_encrypt(world.params, world.rekey(), ct)
    with pytest.raises(WrongContext):
        pr.re_decrypt(world.params, world.cred_i, rct)


def test_rekey_source_must_match(world):
    ct = world.encrypt()
    rk_from_j = pr.rekey_gen(world.params, world.a_j, world.epk_i, world.rng)
    with pytest.raises(WrongContext):
        pr.re_encrypt(world.params, rk_from_j, ct)


def test_relabeled_credential_fails_cryptographically(world):
    ct = world.encrypt()
    # right labels, wrong secret: the user of area j pretends to be in area i
    forged = pr.UserCredential(world.y, pr.EdgeSecret(b"edge-i", 1, world.a_j.a))
    with pytest.raises(CorruptCiphertext):
        pr.decrypt(world.params, forged, ct)
    rct = pr.re_encrypt(world.params, world.rekey(), ct)
    forged_j = pr.UserCredential(world.y, pr.EdgeSecret(b"edge-j", 1, world.a_i.a))
    with pytest.raises(InvalidReEncryption):
        pr.re_decrypt(world.params, forged_j, rct)


def test_header_is_bound(world):
    ct = world.encrypt(b"bound")
    with pytest.raises(CorruptCiphertext):
        pr.decrypt(world.params, world.cred_i, replace(ct, content_id=b"m-2"))
    relabeled = pr.UserCredential(world.y, replace(world.a_i, epoch=2))
    with pytest.raises(CorruptCiphertext):
        pr.decrypt(world.params, relabeled, replace(ct, epoch=2))


def test_first_level_tampering(world):
    ct = world.encrypt(b"secret")
    g = world.group
    flip = lambda b, i=0: b[:i] + bytes([b[i] ^ 1]) + b[i + 1 :]
    for bad in (
        replace(ct, ephemeral=g.element_add(ct.ephemeral, g.generator)),
        replace(ct, masked_key=flip(ct.masked_key, 5)),
        replace(ct, payload=flip(ct.payload, 0)),
        replace(ct, payload=flip(ct.payload, len(ct.payload) - 1)),
        replace(ct, payload=ct.payload[:10]),
    ):
        with pytest.raises(CorruptCiphertext):
            pr.decrypt(world.params, world.cred_i, bad)


def test_second_level_tampering(world):
    rct = world.re_encrypted(b"secret")
    g = world.group
    flip = lambda b, i=0: b[:i] + bytes([b[i] ^ 0x80]) + b[i + 1 :]
    cases = [
        (replace(rct, ephemeral=g.element_add(rct.ephemeral, g.generator)), CorruptCiphertext),
        (replace(rct, transformed=g.element_add(rct.transformed, g.generator)), CorruptCiphertext),
        (replace(rct, masked_key=flip(rct.masked_key)), CorruptCiphertext),
        (replace(rct, commitment=g.element_add(rct.commitment, g.generator)), InvalidReEncryption),
        (replace(rct, commitment=g.identity), InvalidReEncryption),
        (replace(rct, confirm_tag=flip(rct.confirm_tag, 31)), InvalidReEncryption),
        (replace(rct, payload=flip(rct.payload, 20)), CorruptCiphertext),
        (replace(rct, edge_id=b"edge-x"), InvalidReEncryption),
    ]
    for bad, err in cases:
        with pytest.raises(err):
            pr.re_decrypt(world.params, world.cred_j, bad)


def test_stale_target_epoch(world):
    ct = world.encrypt()
    rk = world.rekey()
    a_j2, _ = pr.edge_key_ext(world.params, world.ms, "edge-j", 2, world.rng)
    rct = pr.re_encrypt(world.params, rk, ct)
    with pytest.raises(WrongContext):
        pr.re_decrypt(world.params, pr.UserCredential(world.y, a_j2), rct)


def test_dem_rejects_bad_keys_and_short_blobs():
    with pytest.raises(ValueError):
        pr.dem_seal(b"short", b"", b"m")
    with pytest.raises(CorruptCiphertext):
        pr.dem_open(bytes(32), b"", bytes(27))
    blob = pr.dem_seal(bytes(32), b"ad", b"message", random.Random(0))
    assert pr.dem_open(bytes(32), b"ad", blob) == b"message"
    with pytest.raises(CorruptCiphertext):
        pr.dem_open(bytes(32), b"other ad", blob)


def test_key_extraction_input_checks(toy_world):
    w = toy_world
    with pytest.raises(ValueError):
        pr.serv_key_ext(w.params, w.ms, "")
    with pytest.raises(ValueError):
        pr.edge_key_ext(w.params, w.ms, "e", -1)
    with pytest.raises(ValueError):
        pr.edge_key_ext(w.params, w.ms, "", 1)
