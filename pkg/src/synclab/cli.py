"""Administrator command line: configure and launch solo, dyadic, and group
trials against a running server, analyze recorded trials, and browse the
signature store.

Exit codes: 0 success, 2 validation error, 3 server unreachable.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import socket
import sys
from pathlib import Path

from .config import TrialConfig, parse_vp_entries, serialize_trial_config
from .core import (MotionKind, Role, TrialType, ValidationError,
                   topology_from_text, validate_topology)
from .metrics import analyze_trial, format_report, summary_lines
from .records import TrialRecord, load_record_from_files
from .session import SignatureStore

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_UNREACHABLE = 3


class AdminClient:
    """Blocking newline-JSON client for the administrator channel."""

    def __init__(self, server: str, timeout: float = 10.0):
        host, _, port = server.rpartition(":")
        if not host:
            host, port = server, "7777"
        try:
            self.sock = socket.create_connection((host, int(port)), timeout=timeout)
        except (OSError, ValueError) as exc:
            raise ConnectionError(f"cannot reach server at {server}: {exc}") from exc
        self.file = self.sock.makefile("r", encoding="utf-8")

    def send(self, msg: dict) -> None:
        self.sock.sendall((json.dumps(msg) + "\n").encode("utf-8"))

    def recv(self) -> dict:
        line = self.file.readline()
        if not line:
            raise ConnectionError("server closed the connection")
        return json.loads(line)

    def request(self, msg: dict) -> dict:
        self.send(msg)
        return self.recv()

    def close(self) -> None:
        self.file.close()
        self.sock.close()


def _launch(args, config: TrialConfig, store_signature: bool = False) -> int:
    """Create the session on the server; optionally wait for completion."""
    text = serialize_trial_config(config)
    try:
        client = AdminClient(args.server)
    except ConnectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    try:
        reply = client.request({"t": "create", "session": args.session,
                                "config": text, "trial": args.trial,
                                "store_signature": store_signature})
        if reply.get("t") != "created":
            print(f"error: {reply.get('reason', reply)}", file=sys.stderr)
            return EXIT_VALIDATION
        name = reply["session"]
        print(f"session {name} created (trial {reply.get('trial')}); "
              f"waiting for {config.n_players - len(config.vp_configs)} player(s)")
        if not args.wait:
            return EXIT_OK
        client.send({"t": "watch", "session": name})
        self_timeout = config.duration_s + 3600
        client.sock.settimeout(self_timeout)
        while True:
            msg = client.recv()
            if msg.get("t") == "status":
                print(f"  lobby {msg.get('joined')}/{msg.get('total')} "
                      f"phase={msg.get('phase')}")
            elif msg.get("t") == "done":
                state = "aborted (partial record)" if msg.get("aborted") else "complete"
                print(f"trial {state}")
                for path in msg.get("files", []):
                    print(f"  {path}")
                return EXIT_OK
    finally:
        client.close()


def _report_vp_defaults(index: int, entries: dict[str, str]) -> None:
    vp = parse_vp_entries(entries)
    given = set(entries)
    effective = {
        "model": vp.dynamics.model.value,
        "a": vp.dynamics.a, "b": vp.dynamics.b,
        "alpha": vp.dynamics.alpha, "beta": vp.dynamics.beta,
        "gamma": vp.dynamics.gamma, "omega": vp.dynamics.omega,
        "controller": vp.controller.controller.value,
        "mode": vp.controller.mode.value,
        "kp": vp.controller.kp, "ksigma": vp.controller.ksigma,
        "c": vp.controller.c, "delta": vp.controller.delta, "k": vp.controller.k,
    }
    filled = {k: v for k, v in effective.items() if k not in given}
    if filled:
        listing = " ".join(f"{k}={v}" for k, v in filled.items())
        print(f"vp {index}: defaults used for unspecified parameters: {listing}")


def _parse_vp_file(path: str) -> dict[str, str]:
    entries = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        entries[key.strip()] = value.strip()
    return entries


def cmd_solo(args) -> int:
    kind = MotionKind(args.kind)
    topo = validate_topology([[0]], TrialType.SOLO)
    config = TrialConfig(trial_type=TrialType.SOLO, duration_s=args.duration,
                         topology=topo, solo_owner=args.player, solo_kind=kind,
                         record_rate_hz=args.record_rate)
    return _launch(args, config, store_signature=True)


def cmd_dyad(args) -> int:
    trial_type = TrialType.DYADIC_HP_VP if args.kind == "hp_vp" else TrialType.DYADIC_HP_HP
    topo = validate_topology([[0, 1], [1, 0]], trial_type)
    if args.roles == "joint":
        roles = {1: Role.JOINT_IMPROVISER, 2: Role.JOINT_IMPROVISER}
    else:
        first, _, second = args.roles.partition(",")
        roles = {1: Role(first), 2: Role(second or "follower")}
    vps = {}
    if trial_type is TrialType.DYADIC_HP_VP:
        entries = _parse_vp_file(args.vp) if args.vp else {}
        entries.pop("index", None)
        if args.signature:
            entries.setdefault("signature", args.signature)
        if "signature" not in entries:
            raise ValidationError("hp_vp trials need --signature or a signature= line "
                                  "in the vp config (the VP replays a stored recording)")
        index = args.vp_index
        _report_vp_defaults(index, entries)
        vps[index] = parse_vp_entries(entries)
    config = TrialConfig(trial_type=trial_type, duration_s=args.duration,
                         topology=topo, roles=roles, vp_configs=vps,
                         record_rate_hz=args.record_rate)
    return _launch(args, config)


def cmd_group(args) -> int:
    text = Path(args.topology).read_text(encoding="utf-8")
    topo = topology_from_text(text, TrialType.GROUP)
    roles = {}
    for spec in args.role or []:
        index, _, role = spec.partition(":")
        roles[int(index)] = Role(role)
    vps = {}
    for spec in args.vp or []:
        index_text, _, path = spec.partition(":")
        entries = _parse_vp_file(path)
        index = int(entries.pop("index", index_text or 0))
        if not index:
            raise ValidationError(f"vp spec {spec!r} has no player index")
        _report_vp_defaults(index, entries)
        vps[index] = parse_vp_entries(entries)
    config = TrialConfig(trial_type=TrialType.GROUP, duration_s=args.duration,
                         topology=topo, roles=roles, vp_configs=vps,
                         record_rate_hz=args.record_rate)
    return _launch(args, config)


def cmd_analyze(args) -> int:
    if args.meta:
        record = TrialRecord.load(Path(args.meta))
    elif args.files:
        record = load_record_from_files([Path(f) for f in args.files])
    else:
        raise ValidationError("analyze needs trial files or --meta")
    if args.topology:
        text = Path(args.topology).read_text(encoding="utf-8")
        record.topology = topology_from_text(text, record.trial_type)
    report = analyze_trial(record)
    print(format_report(report))
    lines = summary_lines(report)
    if args.summary:
        Path(args.summary).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"summary written to {args.summary}")
    else:
        print("-- summary --")
        for line in lines:
            print(line)
    return EXIT_OK


def cmd_signatures(args) -> int:
    store = SignatureStore(Path(args.data_root) / "signatures")
    if args.action == "list":
        entries = store.entries()
        if not entries:
            print("no signatures stored")
        for owner, kind, trial, fname in entries:
            print(f"{owner}\t{kind}\ttrial {trial}\t{fname}")
        return EXIT_OK
    sig = store.load(args.owner, MotionKind(args.kind))
    pos = sig.position
    print(f"owner: {sig.owner}")
    print(f"kind: {sig.kind.value}")
    print(f"samples: {len(pos)} at {pos.rate_hz:g} Hz ({pos.duration_s:.1f} s)")
    print(f"position range: [{pos.samples.min():.3f}, {pos.samples.max():.3f}] dm")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .netserver import serve
    import logging
    logging.basicConfig(level=logging.INFO, format="%(name)s %(message)s")
    try:
        asyncio.run(serve(args.host, args.port, ws_port=args.ws_port,
                          data_root=Path(args.data_root)))
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def cmd_wizard(args) -> int:
    """Prompted flow mirroring the flag interface, for manual operation."""
    kind = input("trial type [solo/dyad/group]: ").strip()
    if kind == "solo":
        args.player = input("player name: ").strip() or "Player"
        args.kind = input("motion kind [sinusoidal/free]: ").strip() or "free"
        args.duration = float(input("duration s [60]: ") or "60")
        return cmd_solo(args)
    if kind == "dyad":
        args.kind = input("dyad kind [hp_hp/hp_vp]: ").strip() or "hp_hp"
        args.roles = input("roles [leader,follower / joint]: ").strip() or "leader,follower"
        args.duration = float(input("duration s [30]: ") or "30")
        args.vp = input("vp config file (hp_vp only, blank for defaults): ").strip() or None
        args.signature = (input("vp signature owner:kind (hp_vp only): ").strip() or None) \
            if args.kind == "hp_vp" else None
        args.vp_index = 2
        return cmd_dyad(args)
    if kind == "group":
        args.topology = input("topology matrix file: ").strip()
        args.duration = float(input("duration s [30]: ") or "30")
        vp_specs = input("vp specs index:file (space separated, blank for none): ").strip()
        args.vp = vp_specs.split() if vp_specs else []
        roles = input("roles index:role (space separated, blank for none): ").strip()
        args.role = roles.split() if roles else []
        return cmd_group(args)
    raise ValidationError(f"unknown trial type {kind!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synclab",
        description="multiplayer motion-coordination platform administrator")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_launch_flags(p):
        p.add_argument("--server", default="127.0.0.1:7777",
                       help="server address host:port")
        p.add_argument("--session", default=None, help="session name")
        p.add_argument("--trial", type=int, default=None, help="trial number")
        p.add_argument("--record-rate", type=float, default=10.0,
                       help="storage rate in Hz")
        p.add_argument("--wait", action="store_true",
                       help="block until the trial completes and list files")

    p = sub.add_parser("serve", help="run the session server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7777)
    p.add_argument("--ws-port", type=int, default=None,
                   help="browser websocket bridge port (default port+1)")
    p.add_argument("--data-root", default="data")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("solo", help="record a motor signature in isolation")
    p.add_argument("--player", required=True, help="player identifier")
    p.add_argument("--kind", required=True, choices=[k.value for k in MotionKind])
    p.add_argument("--duration", type=float, default=60.0)
    add_launch_flags(p)
    p.set_defaults(func=cmd_solo)

    p = sub.add_parser("dyad", help="launch a two-player trial")
    p.add_argument("--kind", required=True, choices=["hp_hp", "hp_vp"])
    p.add_argument("--roles", default="leader,follower",
                   help="role of player 1,player 2 or 'joint'")
    p.add_argument("--duration", type=float, default=30.0)
    p.add_argument("--vp", default=None, help="vp config file (key=value lines)")
    p.add_argument("--vp-index", type=int, default=2, choices=[1, 2],
                   help="which index the virtual player takes")
    p.add_argument("--signature", default=None,
                   help="signature owner:kind for the virtual player")
    add_launch_flags(p)
    p.set_defaults(func=cmd_dyad)

    p = sub.add_parser("group", help="launch a 3..7 player network trial")
    p.add_argument("--topology", required=True, help="0/1 matrix text file")
    p.add_argument("--duration", type=float, default=30.0)
    p.add_argument("--vp", action="append", default=[],
                   help="index:vp-config-file (repeatable)")
    p.add_argument("--role", action="append", default=[],
                   help="index:role (repeatable)")
    add_launch_flags(p)
    p.set_defaults(func=cmd_group)

    p = sub.add_parser("analyze", help="compute coordination metrics for trial files")
    p.add_argument("files", nargs="*", help="recorded trial txt files")
    p.add_argument("--meta", default=None, help="trial meta.json (preferred)")
    p.add_argument("--topology", default=None,
                   help="topology file for connectivity markers")
    p.add_argument("--summary", default=None,
                   help="write machine-readable summary lines here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("signatures", help="browse the motor-signature store")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("--data-root", default="data")
    p.add_argument("--owner", default=None)
    p.add_argument("--kind", default=None, choices=[k.value for k in MotionKind])
    p.set_defaults(func=cmd_signatures)

    p = sub.add_parser("wizard", help="interactive prompts mirroring the flags")
    add_launch_flags(p)
    p.set_defaults(func=cmd_wizard)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "signatures" and args.action == "show" \
            and not (args.owner and args.kind):
        print("error: signatures show needs --owner and --kind", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConnectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
