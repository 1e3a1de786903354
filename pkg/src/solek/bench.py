"""Timing and size accounting for the protocol's content path.

``bench_crypto`` times every algorithm at several payload sizes and records
how many scalar multiplications each call performs. ``overhead_table``
serializes real ciphertexts and checks their size against the closed-form
overhead. Absolute times are whatever this machine produces; what is expected
to hold anywhere is the structure: key encapsulation costs a fixed number of
group operations and payload sealing grows linearly with size.
"""

from __future__ import annotations

import csv
import gc
import io
import os
import random
import time
from dataclasses import astuple, dataclass, fields, replace

import numpy as np

from . import protocol as pr
from . import wire
from .group import OpCounter

BENCH_CSV_HEADER = ("op", "payload_bytes", "reps", "mean_ns", "median_ns", "p95_ns", "scalar_muls", "output_bytes")
BENCH_OPS = ("encrypt", "decrypt", "rekey_gen", "re_encrypt", "re_decrypt")

# scalar multiplications per call with fresh (uncached) public keys
EXPECTED_SCALAR_MULS = {"encrypt": 4, "decrypt": 1, "rekey_gen": 3, "re_encrypt": 1, "re_decrypt": 3}

KIB = 1024
MIB = 1024 * KIB
# 1 KiB, then evenly spaced up to 4 MiB so a linear fit has leverage across the range
DEFAULT_SIZES = (KIB,) + tuple(k * 512 * KIB for k in range(1, 9))


@dataclass(frozen=True)
class BenchRow:
    op: str
    payload_bytes: int
    reps: int
    mean_ns: float
    median_ns: float
    p95_ns: float
    scalar_muls: int
    output_bytes: int


@dataclass(frozen=True)
class OverheadRow:
    level: int
    payload_bytes: int
    ciphertext_bytes: int
    overhead_bytes: int
    formula_bytes: int


@dataclass
class _Fixture:
    spk: pr.ServicePublicKey
    epk_src: pr.EdgePublicKey
    epk_dst: pr.EdgePublicKey
    cred_src: pr.UserCredential
    cred_dst: pr.UserCredential
    src_secret: pr.EdgeSecret


def _throwaway_ta(params, rng):
    # callers hand over public params only, so key material comes from a fresh TA on the same group
    fresh, ms = pr.setup(params.group, rng)
    return replace(fresh, session_bits=params.session_bits), ms


def _fixture(params, rng) -> tuple[pr.PublicParams, _Fixture]:
    params, ms = _throwaway_ta(params, rng)
    y, spk = pr.serv_key_ext(params, ms, "bench-service", rng)
    a_i, epk_i = pr.edge_key_ext(params, ms, "bench-edge-i", 1, rng)
    a_j, epk_j = pr.edge_key_ext(params, ms, "bench-edge-j", 1, rng)
    return params, _Fixture(spk, epk_i, epk_j, pr.UserCredential(y, a_i), pr.UserCredential(y, a_j), a_i)


def _time_interleaved(fns: list, reps: int, warmup: int) -> np.ndarray:
    """Samples of shape (len(fns), reps); each rep visits every fn once so drift is shared."""
    for _ in range(warmup):
        for fn in fns:
            fn()
    samples = np.empty((len(fns), reps))
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for k in range(reps):
            for i, fn in enumerate(fns):
                t0 = time.perf_counter_ns()
                fn()
                samples[i, k] = time.perf_counter_ns() - t0
    finally:
        if gc_was_enabled:
            gc.enable()
    return samples


def _calls(params, fx, message, rng):
    ct = pr.encrypt(params, fx.spk, fx.epk_src, message, "bench-item", rng)
    rk = pr.rekey_gen(params, fx.src_secret, fx.epk_dst, rng)
    rct = pr.re_encrypt(params, rk, ct)
    return {
        "encrypt": lambda c=None: pr.encrypt(params, fx.spk, fx.epk_src, message, "bench-item", rng, c),
        "decrypt": lambda c=None: pr.decrypt(params, fx.cred_src, ct, c),
        "rekey_gen": lambda c=None: pr.rekey_gen(params, fx.src_secret, fx.epk_dst, rng, c),
        "re_encrypt": lambda c=None: pr.re_encrypt(params, rk, ct, c),
        "re_decrypt": lambda c=None: pr.re_decrypt(params, fx.cred_dst, rct, c),
    }


def bench_crypto(
    params: pr.PublicParams,
    payload_sizes=DEFAULT_SIZES,
    reps: int = 30,
    warmup: int = 5,
    rng: random.Random | None = None,
    ops=BENCH_OPS,
) -> list[BenchRow]:
    """Time each op at each payload size (monotonic clock, GC paused, sizes interleaved)."""
    if not payload_sizes:
        raise ValueError("payload_sizes must be nonempty")
    if reps < 30:
        raise ValueError("at least 30 timed repetitions are required")
    rng = rng or random.Random(0)
    params, fx = _fixture(params, rng)
    g = params.group
    per_size = [_calls(params, fx, rng.randbytes(size), rng) for size in payload_sizes]
    rows = []
    for op in ops:
        fns = [calls[op] for calls in per_size]
        samples = _time_interleaved(fns, reps, warmup)
        for size, fn, t in zip(payload_sizes, fns, samples):
            c = OpCounter()
            out = fn(c)
            out_len = len(out) if isinstance(out, bytes) else len(wire.dumps(out, g))
            rows.append(
                BenchRow(
                    op,
                    size,
                    reps,
                    float(t.mean()),
                    float(np.median(t)),
                    float(np.percentile(t, 95)),
                    c.scalar_mul_count,
                    out_len,
                )
            )
    return rows


def linear_fit(rows: list[BenchRow], op: str = "encrypt", stat: str = "median_ns") -> tuple[float, float, float]:
    """Least-squares ``time = slope * payload + intercept``; returns (slope, intercept, r_squared)."""
    sel = [r for r in rows if r.op == op]
    x = np.array([r.payload_bytes for r in sel], dtype=float)
    y = np.array([getattr(r, stat) for r in sel], dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot else 1.0
    return float(slope), float(intercept), r2


def overhead_table(
    params: pr.PublicParams,
    payload_sizes=(0, KIB, 64 * KIB, MIB),
    service_id: bytes = b"svc",
    edge_id: bytes = b"edge-i",
    target_id: bytes = b"edge-j",
    content_id: bytes = b"item",
    rng: random.Random | None = None,
) -> list[OverheadRow]:
    """Serialized size vs. payload for both ciphertext levels.

    ``formula_bytes`` is the closed form
    ``header + element_len + session_len + 28`` for level 1 and adds
    ``2 * element_len + 32`` of re-encryption material for level 2.
    """
    rng = rng or random.Random(0)
    g = params.group
    params, ms = _throwaway_ta(params, rng)
    _, spk = pr.serv_key_ext(params, ms, service_id, rng)
    a_i, epk_i = pr.edge_key_ext(params, ms, edge_id, 1, rng)
    _, epk_j = pr.edge_key_ext(params, ms, target_id, 1, rng)
    rk = pr.rekey_gen(params, a_i, epk_j, rng)

    h1 = wire.ciphertext_header_len(service_id, edge_id, content_id)
    h2 = wire.ciphertext_header_len(service_id, edge_id, content_id, target_id)
    rows = []
    for size in payload_sizes:
        ct = pr.encrypt(params, spk, epk_i, rng.randbytes(size), content_id, rng)
        for level, obj, header in ((1, ct, h1), (2, pr.re_encrypt(params, rk, ct), h2)):
            n = len(wire.dumps(obj, g))
            rows.append(OverheadRow(level, size, n, n - size, wire.ciphertext_overhead(params, level, header)))
    return rows


def bench_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCH_CSV_HEADER)
    for r in rows:
        writer.writerow([r.op, r.payload_bytes, r.reps, f"{r.mean_ns:.0f}", f"{r.median_ns:.0f}", f"{r.p95_ns:.0f}", r.scalar_muls, r.output_bytes])
    return buf.getvalue()


def write_gnuplot(rows: list[BenchRow], overhead: list[OverheadRow], directory) -> list[str]:
    """One whitespace-separated data file per panel: encryption time, decryption time, overhead."""
    os.makedirs(directory, exist_ok=True)
    written = []

    def dump(name, header, lines):
        path = os.path.join(directory, name)
        with open(path, "w") as fh:
            fh.write("# " + " ".join(header) + "\n")
            for line in lines:
                fh.write(" ".join(str(v) for v in line) + "\n")
        written.append(path)

    dump(
        "encrypt_time.dat",
        ("payload_bytes", "mean_ms", "median_ms", "p95_ms"),
        [(r.payload_bytes, r.mean_ns / 1e6, r.median_ns / 1e6, r.p95_ns / 1e6) for r in rows if r.op == "encrypt"],
    )
    dump(
        "decrypt_time.dat",
        ("payload_bytes", "decrypt_ms", "re_decrypt_ms"),
        [
            (d.payload_bytes, d.median_ns / 1e6, rd.median_ns / 1e6)
            for d in rows
            if d.op == "decrypt"
            for rd in rows
            if rd.op == "re_decrypt" and rd.payload_bytes == d.payload_bytes
        ],
    )
    levels = sorted({o.payload_bytes for o in overhead})
    by_key = {(o.level, o.payload_bytes): o for o in overhead}
    dump(
        "overhead.dat",
        ("payload_bytes", "level1_bytes", "level2_bytes"),
        [(p, by_key[1, p].ciphertext_bytes, by_key[2, p].ciphertext_bytes) for p in levels if (1, p) in by_key and (2, p) in by_key],
    )
    return written


def as_dicts(rows) -> list[dict]:
    return [dict(zip((f.name for f in fields(r)), astuple(r))) for r in rows]
