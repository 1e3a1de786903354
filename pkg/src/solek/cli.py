"""Command-line front end.

Keys live in a keystore directory of wire-format files plus ``index.json``
mapping roles (``params``, ``spk:<id>``, ``edge-secret:<id>`` ...) to file
names. Secret keys are stored unencrypted; protect the directory yourself.

Exit codes: 0 success, 1 usage error, 2 cryptographic or verification
failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import re
import sys
import tempfile
from pathlib import Path

from . import bench, cachesim, wire
from . import protocol as pr
from .errors import ConfigError, CryptoError, InvalidKey
from .group import PROFILES, get_profile

EXIT_OK, EXIT_USAGE, EXIT_CRYPTO, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def atomic_write(path, data: bytes | str) -> None:
    """Write via a temp file in the target directory, then rename."""
    path = Path(path)
    mode = "w" if isinstance(data, str) else "wb"
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _safe(ident: str) -> str:
    safe = re.sub(r"[^A-Za-z0-9._-]", "_", ident)
    if safe != ident:
        safe += "-" + hashlib.sha256(ident.encode()).hexdigest()[:8]
    return safe


class Keystore:
    """Directory of key files with an ``index.json`` role map.

    Every load re-verifies the record against the public keys it depends on.
    """

    INDEX = "index.json"

    def __init__(self, root):
        self.root = Path(root)

    @property
    def index_path(self) -> Path:
        return self.root / self.INDEX

    def index(self) -> dict[str, str]:
        if not self.index_path.exists():
            return {}
        return json.loads(self.index_path.read_text())

    def _write_index(self, index: dict) -> None:
        atomic_write(self.index_path, json.dumps(index, indent=2, sort_keys=True) + "\n")

    def put(self, role: str, obj, params: pr.PublicParams | None) -> Path:
        kind, _, ident = role.partition(":")
        name = f"{kind}-{_safe(ident)}.solk" if ident else f"{kind}.solk"
        data = wire.dumps(obj, None if params is None else params.group)
        atomic_write(self.root / name, data)
        index = self.index()
        index[role] = name
        self._write_index(index)
        return self.root / name

    def raw(self, role: str) -> bytes:
        name = self.index().get(role)
        if name is None:
            raise FileNotFoundError(f"keystore {self.root} has no entry {role!r}")
        return (self.root / name).read_bytes()

    def params(self) -> pr.PublicParams:
        return wire.loads(self.raw("params"), expect=wire.T_PARAMS)

    def master(self, params) -> pr.MasterSecret:
        ms = wire.loads(self.raw("master"), params, expect=wire.T_SECRET)
        if not isinstance(ms, pr.MasterSecret) or params.group.base_mul(ms.s) != params.p_pub:
            raise InvalidKey("master secret does not match public params")
        return ms

    def spk(self, params, service_id: str) -> pr.ServicePublicKey:
        spk = wire.loads(self.raw(f"spk:{service_id}"), params, expect=wire.T_SPK)
        if spk.service_id != service_id.encode() or not pr.verify_service_key(params, spk):
            raise InvalidKey(f"service key {service_id!r} failed verification")
        return spk

    def epk(self, params, edge_id: str) -> pr.EdgePublicKey:
        epk = wire.loads(self.raw(f"epk:{edge_id}"), params, expect=wire.T_EPK)
        if epk.edge_id != edge_id.encode() or not pr.verify_edge_key(params, epk):
            raise InvalidKey(f"edge key {edge_id!r} failed verification")
        return epk

    def service_secret(self, params, service_id: str) -> pr.ServiceSecret:
        y = wire.loads(self.raw(f"service-secret:{service_id}"), params, expect=wire.T_SECRET)
        if not isinstance(y, pr.ServiceSecret) or not pr.verify_service_key(params, self.spk(params, service_id), y):
            raise InvalidKey(f"service secret {service_id!r} failed verification")
        return y

    def edge_secret(self, params, edge_id: str) -> pr.EdgeSecret:
        a = wire.loads(self.raw(f"edge-secret:{edge_id}"), params, expect=wire.T_SECRET)
        if not isinstance(a, pr.EdgeSecret) or not pr.verify_edge_key(params, self.epk(params, edge_id), a):
            raise InvalidKey(f"edge secret {edge_id!r} failed verification")
        return a

    def check(self) -> list[str]:
        """Load and verify every indexed record; returns the roles checked."""
        params = self.params()
        checked = ["params"]
        for role in sorted(self.index()):
            kind, _, ident = role.partition(":")
            loader = {
                "master": lambda: self.master(params),
                "spk": lambda: self.spk(params, ident),
                "epk": lambda: self.epk(params, ident),
                "service-secret": lambda: self.service_secret(params, ident),
                "edge-secret": lambda: self.edge_secret(params, ident),
                "rekey": lambda: wire.loads(self.raw(role), params, expect=wire.T_REKEY),
            }.get(kind)
            if loader is not None:
                loader()
                checked.append(role)
        return checked


# ---------------------------------------------------------------------------
# commands


def _rng(args, *context) -> random.Random:
    if args.seed is None:
        return pr.default_rng()
    # distinct streams per command so equal seeds never reuse nonces across roles
    return random.Random("|".join([str(args.seed), args.command, *map(str, context)]))


def _read(path) -> bytes:
    return Path(path).read_bytes()


def cmd_setup(args, ks: Keystore) -> int:
    if "params" in ks.index() and not args.force:
        raise UsageError(f"keystore {ks.root} already initialised; pass --force to replace it")
    params, ms = pr.setup(get_profile(args.profile or "default"), _rng(args))
    ks.put("params", params, None)
    ks.put("master", ms, params)
    print(f"initialised {ks.root} ({params.group.name} profile)")
    return EXIT_OK


def cmd_keygen_service(args, ks: Keystore) -> int:
    params = ks.params()
    y, spk = pr.serv_key_ext(params, ks.master(params), args.id, _rng(args, args.id))
    ks.put(f"spk:{args.id}", spk, params)
    ks.put(f"service-secret:{args.id}", y, params)
    return EXIT_OK


def cmd_keygen_edge(args, ks: Keystore) -> int:
    params = ks.params()
    a, epk = pr.edge_key_ext(params, ks.master(params), args.id, args.epoch, _rng(args, args.id, args.epoch))
    ks.put(f"epk:{args.id}", epk, params)
    ks.put(f"edge-secret:{args.id}", a, params)
    return EXIT_OK


def cmd_issue_cred(args, ks: Keystore) -> int:
    params = ks.params()
    cred = pr.UserCredential(ks.service_secret(params, args.service), ks.edge_secret(params, args.edge))
    atomic_write(args.out, wire.dumps(cred, params.group))
    return EXIT_OK


def cmd_encrypt(args, ks: Keystore) -> int:
    params = ks.params()
    spk, epk = ks.spk(params, args.service), ks.epk(params, args.edge)
    message = _read(args.input)
    content_id = args.mid or Path(args.input).name
    ct = pr.encrypt(params, spk, epk, message, content_id, _rng(args, args.service, args.edge, content_id))
    atomic_write(args.out, wire.dumps(ct, params.group))
    return EXIT_OK


def _load_cred(params, path) -> pr.UserCredential:
    cred = wire.loads(_read(path), params, expect=wire.T_SECRET)
    if not isinstance(cred, pr.UserCredential):
        raise InvalidKey(f"{path} is not a user credential")
    return cred


def cmd_decrypt(args, ks: Keystore) -> int:
    params = ks.params()
    cred = _load_cred(params, args.cred)
    ct = wire.loads(_read(args.input), params, expect=wire.T_CT1)
    atomic_write(args.out, pr.decrypt(params, cred, ct))
    return EXIT_OK


def cmd_rekey(args, ks: Keystore) -> int:
    params = ks.params()
    rk = pr.rekey_gen(
        params, ks.edge_secret(params, args.source), ks.epk(params, args.target), _rng(args, args.source, args.target)
    )
    path = ks.put(f"rekey:{args.source}>{args.target}", rk, params)
    if args.out:
        atomic_write(args.out, wire.dumps(rk, params.group))
        path = args.out
    print(path)
    return EXIT_OK


def cmd_reencrypt(args, ks: Keystore) -> int:
    params = ks.params()
    rk = wire.loads(_read(args.rk), params, expect=wire.T_REKEY)
    ct = wire.loads(_read(args.input), params, expect=wire.T_CT1)
    atomic_write(args.out, wire.dumps(pr.re_encrypt(params, rk, ct), params.group))
    return EXIT_OK


def cmd_redecrypt(args, ks: Keystore) -> int:
    params = ks.params()
    cred = _load_cred(params, args.cred)
    rct = wire.loads(_read(args.input), params, expect=wire.T_CT2)
    atomic_write(args.out, pr.re_decrypt(params, cred, rct))
    return EXIT_OK


def cmd_sim_run(args, ks: Keystore) -> int:
    config = cachesim.load_config(args.config)
    overrides = {}
    if args.profile:
        overrides["profile"] = args.profile
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        config = cachesim.SimConfig.from_dict(config.to_dict() | overrides)
    metrics = cachesim.run(config)
    atomic_write(args.out, metrics.to_json())
    if args.csv:
        atomic_write(args.csv, cachesim.metrics_csv([metrics]))
    return EXIT_OK


def cmd_bench_run(args, ks: Keystore) -> int:
    group = get_profile(args.profile or "default")
    rng = random.Random(args.seed if args.seed is not None else 0)
    params, _ = pr.setup(group, rng)
    sizes = tuple(args.sizes) if args.sizes else bench.DEFAULT_SIZES
    rows = bench.bench_crypto(params, sizes, reps=args.reps, rng=rng)
    atomic_write(args.out, bench.bench_csv(rows))
    if args.gnuplot:
        bench.write_gnuplot(rows, bench.overhead_table(params, rng=rng), args.gnuplot)
    slope, _, r2 = bench.linear_fit(rows)
    print(f"encrypt: {slope:.3f} ns/byte, R^2 = {r2:.4f}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="solek", description="Edge-cache key distribution: keys, content encryption, simulation.")
    p.add_argument("--keystore", default=os.environ.get("SOLEK_KEYSTORE", "keystore"), help="keystore directory")
    p.add_argument("--profile", choices=sorted(PROFILES), help="group profile (setup, sim, bench)")
    p.add_argument("--seed", type=int, help="seed every random choice for reproducible output")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("setup", help="bootstrap the trusted authority")
    s.add_argument("--force", action="store_true", help="replace an existing keystore")
    s.set_defaults(fn=cmd_setup)

    s = sub.add_parser("keygen-service", help="issue a service key pair")
    s.add_argument("--id", required=True)
    s.set_defaults(fn=cmd_keygen_service)

    s = sub.add_parser("keygen-edge", help="issue an edge key pair for a time slot")
    s.add_argument("--id", required=True)
    s.add_argument("--epoch", type=int, required=True)
    s.set_defaults(fn=cmd_keygen_edge)

    s = sub.add_parser("issue-cred", help="bundle a service secret and an area secret for a user")
    s.add_argument("--service", required=True)
    s.add_argument("--edge", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_issue_cred)

    s = sub.add_parser("encrypt", help="origin-side content encryption")
    s.add_argument("--service", required=True)
    s.add_argument("--edge", required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--mid", help="content id (default: input file name)")
    s.set_defaults(fn=cmd_encrypt)

    s = sub.add_parser("decrypt", help="decrypt a first-level ciphertext")
    s.add_argument("--cred", required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_decrypt)

    s = sub.add_parser("rekey", help="re-encryption key from one edge area to another")
    s.add_argument("--from", dest="source", required=True)
    s.add_argument("--to", dest="target", required=True)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_rekey)

    s = sub.add_parser("reencrypt", help="re-target a first-level ciphertext")
    s.add_argument("--rk", required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_reencrypt)

    s = sub.add_parser("redecrypt", help="decrypt a re-encrypted ciphertext")
    s.add_argument("--cred", required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_redecrypt)

    sim = sub.add_parser("sim", help="edge-cache simulation")
    simsub = sim.add_subparsers(dest="sim_command", required=True, parser_class=_Parser)
    s = simsub.add_parser("run")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True, help="metrics JSON")
    s.add_argument("--csv", help="also write a one-row metrics CSV")
    s.set_defaults(fn=cmd_sim_run)

    b = sub.add_parser("bench", help="crypto microbenchmarks")
    bsub = b.add_subparsers(dest="bench_command", required=True, parser_class=_Parser)
    s = bsub.add_parser("run")
    s.add_argument("--out", required=True, help="CSV output")
    s.add_argument("--sizes", type=int, nargs="+", help="payload sizes in bytes")
    s.add_argument("--reps", type=int, default=30)
    s.add_argument("--gnuplot", help="directory for per-panel data files")
    s.set_defaults(fn=cmd_bench_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help exits 0, usage errors exit 1; return either so callers get a code
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.fn(args, Keystore(args.keystore))
    except CryptoError as exc:
        print(f"solek: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CRYPTO
    except (UsageError, ConfigError, ValueError) as exc:
        print(f"solek: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"solek: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
