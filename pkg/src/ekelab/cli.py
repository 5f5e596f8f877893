"""Command-line harness: ``run``, ``attack``, ``mitm`` and ``margin``.

Exit codes: 0 ok, 2 configuration error, 3 protocol abort, 4 attack
expectation violated, 5 reference check mismatch.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import margin as mc
from .adversary import (
    ATTACKS,
    KeyNotFound,
    PasswordSpace,
    attack_enhanced_eke,
    mitm_enc_nokey,
    mitm_nokey,
)
from .group_math import GroupParams, NotInvertible, gen_params, inv_exponent
from .password_cipher import Password
from .protocol import SessionConfig, Transcript, TranscriptShapeError, Variant, run_session

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_ATTACK, EXIT_CHECK = 0, 2, 3, 4, 5
MAX_EXHAUSTIVE_BITS = 24


class ConfigError(Exception):
    pass


# --- config resolution ---------------------------------------------------

DEFAULTS = {
    "out": "out",
    "workers": 1,
    "password_bits": 8,
    "challenge_bytes": 16,
    "trials": 1,
    "profile": "ion-trap",
    "computers": 2,
    "horizon": mc.HUNDRED_YEARS_S,
    "footprint": 1.0,
    "dlogs_per_guess": 1,
    "key_space_bits": 10,
    "expect": "auto",
    "zeta3": "rounded",
}


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the JSON config file, then from DEFAULTS.  Flags win."""
    config = {}
    if getattr(args, "config", None):
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(config, dict):
            raise ConfigError("config file must hold a JSON object")
    for key, value in config.items():
        key = key.replace("-", "_")
        if getattr(args, key, None) in (None, False):
            setattr(args, key, value)
    # remember what the user chose before defaults fill the rest
    args.out_set = getattr(args, "out", None) is not None
    args.password_bits_set = getattr(args, "password_bits", None) is not None
    for key, value in DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    return args


def _variant(name) -> Variant:
    try:
        return Variant(name)
    except ValueError:
        raise ConfigError(f"unknown variant {name!r}; choose from {', '.join(v.value for v in Variant)}") from None


def _require_seed(args) -> int:
    if args.seed is None:
        raise ConfigError("a --seed is required (no silent entropy)")
    return int(args.seed)


def _group(args, rng: random.Random) -> GroupParams:
    inline = args.q is not None or args.g is not None
    if inline and args.bits is not None:
        raise ConfigError("give either --q/--g or --bits, not both")
    if inline:
        if args.q is None or args.g is None:
            raise ConfigError("--q and --g go together")
        try:
            return GroupParams(int(args.q), int(args.g)).validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    group_seed = rng.getrandbits(64)
    try:
        return gen_params(int(args.bits or 20), group_seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _password(args, rng: random.Random) -> Password:
    index = rng.getrandbits(int(args.password_bits))
    if args.password is not None:
        return Password(args.password.encode("utf-8"), int(args.password_bits))
    return Password.from_index(index, int(args.password_bits))


def _session_configs(args, variant: Variant) -> tuple[SessionConfig, SessionConfig, Password]:
    rng = random.Random(_require_seed(args))
    params = _group(args, rng)
    password = _password(args, rng)
    seed_a, seed_b = rng.getrandbits(64), rng.getrandbits(64)
    common = dict(
        params=params,
        password=password,
        variant=variant,
        challenge_bytes=int(args.challenge_bytes),
        encrypt_first_flow=bool(getattr(args, "encrypt_first_flow", False)),
    )
    cfg_a = SessionConfig("A", seed=seed_a, secret=args.a, key=args.key, **common)
    cfg_b = SessionConfig("B", seed=seed_b, secret=args.b, **common)
    return cfg_a, cfg_b, password


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# --- commands ------------------------------------------------------------


def cmd_run(args) -> int:
    variant = _variant(args.variant)
    cfg_a, cfg_b, password = _session_configs(args, variant)
    try:
        out_a, out_b, transcript = run_session(cfg_a, cfg_b, session_id=f"session-{args.seed}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    transcript.save(out / "transcript.jsonl")
    params = cfg_a.params
    match = out_a.completed and out_b.completed and out_a.key_material(params) == out_b.key_material(params)
    _write_json(
        out / "outcome.json",
        {
            "variant": variant.value,
            "seed": int(args.seed),
            "params": params.to_json(),
            "password_hex": password.bytes.hex(),
            "password_bits": password.bit_length,
            "initiator": out_a.to_json(),
            "responder": out_b.to_json(),
            "keys_match": match,
        },
    )
    print(f"variant={variant.value} q={params.q} g={params.g} flows={len(transcript.messages)}")
    print(f"A: {out_a.status} key={out_a.exchange_key}" + (f" ({out_a.reason.value})" if out_a.reason else ""))
    print(f"B: {out_b.status} key={out_b.exchange_key}" + (f" ({out_b.reason.value})" if out_b.reason else ""))
    print("keys match" if match else "keys MISMATCH")
    print(f"transcript: {out / 'transcript.jsonl'}")
    return EXIT_OK if out_a.completed and out_b.completed else EXIT_ABORT


def _load_outcome(path: Path) -> dict | None:
    return json.loads(path.read_text()) if path.exists() else None


def _key_space(K: int, bits: int, q: int) -> range:
    """Aligned block of 2^bits candidate keys containing K (the harness knows K)."""
    width = 1 << bits
    lo = max(1, K - K % width)
    return range(lo, min(q, lo + width))


def cmd_attack(args) -> int:
    path = Path(args.transcript or Path(args.out) / "transcript.jsonl")
    try:
        transcript = Transcript.load(path)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot load transcript {path}: {exc}") from exc
    outcome = _load_outcome(Path(args.outcome) if args.outcome else path.with_name("outcome.json"))

    if args.dictionary:
        words = [w.encode("utf-8") for w in Path(args.dictionary).read_text(encoding="utf-8").splitlines() if w]
        space = PasswordSpace.dictionary(words)
    else:
        bits = int(args.password_bits if args.password_bits_set else (outcome or {}).get("password_bits", args.password_bits))
        if bits > MAX_EXHAUSTIVE_BITS:
            raise ConfigError(f"exhaustive space of {bits} bits exceeds the {MAX_EXHAUSTIVE_BITS}-bit guard")
        space = PasswordSpace.exhaustive(bits)

    variant = transcript.variant
    try:
        if variant is Variant.ENHANCED_EKE:
            if outcome is None and args.known_s is None:
                raise ConfigError("enhanced-eke attack needs --known-s or an outcome.json")
            known_s = bytes.fromhex(args.known_s or outcome["initiator"]["final_key_hex"])
            if outcome is None:
                raise ConfigError("the key-space window is centred on the recorded key; outcome.json required")
            K = int(outcome["initiator"]["exchange_key"])
            report = attack_enhanced_eke(
                transcript, known_s, _key_space(K, int(args.key_space_bits), transcript.params.q), space, int(args.workers)
            )
        elif variant in ATTACKS:
            report = ATTACKS[variant](transcript, space, workers=int(args.workers))
        else:
            raise ConfigError(f"no password-guessing attack is defined for {variant.value}")
    except TranscriptShapeError as exc:
        raise ConfigError(f"transcript shape: {exc}") from exc
    except KeyNotFound as exc:
        print(f"K_NOT_FOUND: {exc}")
        return EXIT_ATTACK

    out = Path(args.out) if args.out_set else path.parent
    _write_json(out / "attack_report.json", report.to_json())
    print(report.accounting_line())
    print(f"recovered_count={report.recovered_count} space_size={space.size}")
    if variant is Variant.ENHANCED_EKE:
        print(f"stage1: keys_tried={report.stage1_keys_tried} dlogs={report.stage1_dlog_calls}")
    if variant is Variant.ENC_NOKEY:
        print(f"rejected after first dlog: {report.not_invertible}")

    if outcome is None or (args.dictionary and args.expect == "auto"):
        return EXIT_OK
    truth = bytes.fromhex(outcome["password_hex"])
    found = truth in report.recovered_passwords()
    print(f"true password {'recovered' if found else 'not recovered'}")
    if args.expect == "none":
        ok = not found
    elif variant is Variant.SIMPLIFIED_EKE and args.expect == "auto":
        ok = found and report.recovered_count == space.size
    else:
        ok = found
    return EXIT_OK if ok else EXIT_ATTACK


def cmd_mitm(args) -> int:
    variant = _variant(args.variant)
    if variant not in (Variant.NOKEY, Variant.ENC_NOKEY):
        raise ConfigError("mitm supports nokey and enc-nokey only")
    seed = _require_seed(args)
    trials = int(args.trials)
    successes, reports = 0, []
    for i in range(trials):
        args.seed = seed + i
        cfg_a, cfg_b, password = _session_configs(args, variant)
        params = cfg_a.params
        if args.e is not None:
            e = int(args.e)
            try:
                inv_exponent(params, e)
            except NotInvertible as exc:
                raise ConfigError(f"--e {e}: {exc}") from exc
        else:
            e = _eve_exponent(params, random.Random(f"eve-{seed + i}"))
        if variant is Variant.NOKEY:
            report = mitm_nokey(cfg_a, cfg_b, e)
        else:
            eve_pw = password if args.give_eve_password else None
            report = mitm_enc_nokey(cfg_a, cfg_b, e, eve_password=eve_pw, relay=bool(args.relay))
        successes += report.success
        reports.append(report.to_json())
    args.seed = seed

    expect_success = variant is Variant.NOKEY or bool(args.give_eve_password) and not args.relay
    rate = successes / trials
    _write_json(Path(args.out) / "mitm_report.json", {"variant": variant.value, "trials": trials, "success_rate": rate, "reports": reports})
    print(f"variant={variant.value} trials={trials} successes={successes} rate={rate:.3f}")
    if trials == 1:
        r = reports[0]
        if r["success"]:
            print(f"stolen key: {r['stolen_key']}")
        else:
            print(f"attack failed: {r['failure_mode']}")
        print(f"A: {r['outcome_a']['status']}  B: {r['outcome_b']['status']}")
    ok = rate == 1.0 if expect_success else successes == 0
    return EXIT_OK if ok else EXIT_ATTACK


def _eve_exponent(params: GroupParams, rng: random.Random) -> int:
    while True:
        e = rng.randint(1, params.n - 1)
        try:
            inv_exponent(params, e)
            return e
        except NotInvertible:
            continue


def cmd_margin(args) -> int:
    profiles = mc.load_profiles()
    if args.profile not in profiles:
        raise ConfigError(f"unknown profile {args.profile!r}; choose from {', '.join(profiles)}")
    if args.zeta3 not in ("rounded", "precise"):
        raise ConfigError("--zeta3 must be 'rounded' or 'precise'")
    computers = float(args.computers)
    if args.fleet == "earth":
        computers = mc.max_fleet(mc.EARTH_SURFACE_M2, float(args.footprint))
    elif args.fleet is not None:
        raise ConfigError("--fleet accepts only 'earth'")
    try:
        budget = mc.AdversaryBudget(
            horizon_seconds=float(args.horizon),
            computer_count=computers,
            footprint_m2=float(args.footprint),
            dlogs_per_guess=int(args.dlogs_per_guess),
        )
        report = mc.evaluate_margin(
            args.profile,
            budget,
            zeta3=mc.ZETA3_PRECISE if args.zeta3 == "precise" else None,
            d_cnot=args.d_cnot,
            m=args.mass,
            serial_gates=args.serial_gates,
            gate_time=args.gate_time,
        )
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    print(report.table())
    print(f"bits={report.required_bits}")
    _write_json(Path(args.out) / "margin_report.json", report.to_json())
    print(json.dumps(report.to_json(), sort_keys=True))
    if not args.check_paper:
        return EXIT_OK
    checks = mc.reference_checks()
    for c in checks:
        print(f"[{'PASS' if c.ok else 'FAIL'}] {c.name}: expected {c.expected}, got {c.actual}")
    return EXIT_OK if all(c.ok for c in checks) else EXIT_CHECK


# --- parser --------------------------------------------------------------


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=default, help="JSON config; flags override it")
    parser.add_argument("--out", metavar="DIR", default=default, help="output directory")
    parser.add_argument("--seed", type=int, metavar="U64", default=default)
    parser.add_argument("--workers", type=int, metavar="N", default=default)


def _session_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--variant", help=", ".join(v.value for v in Variant))
    parser.add_argument("--bits", type=int, help="bit length of the generated prime q")
    parser.add_argument("--q", type=int, help="inline prime modulus")
    parser.add_argument("--g", type=int, help="inline generator")
    parser.add_argument("--password", help="literal password (UTF-8)")
    parser.add_argument("--password-bits", type=int, help="declared password entropy in bits")
    parser.add_argument("--challenge-bytes", type=int)
    parser.add_argument("--key", type=int, help="fixed transported key K (no-key variants)")
    parser.add_argument("--a", type=int, help="fixed initiator exponent")
    parser.add_argument("--b", type=int, help="fixed responder exponent")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ekelab", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one honest session and save its transcript")
    _global_flags(run, suppress=True)
    _session_flags(run)
    run.add_argument("--encrypt-first-flow", action="store_true", default=None)
    run.set_defaults(func=cmd_run)

    attack = sub.add_parser("attack", help="offline password guessing against a saved transcript")
    _global_flags(attack, suppress=True)
    attack.add_argument("transcript", nargs="?", help="transcript .jsonl (default OUT/transcript.jsonl)")
    attack.add_argument("--password-bits", type=int)
    attack.add_argument("--dictionary", metavar="FILE", help="newline-delimited candidate passwords")
    attack.add_argument("--outcome", metavar="PATH", help="outcome.json recorded by run")
    attack.add_argument("--expect", choices=["auto", "recover", "none"])
    attack.add_argument("--known-s", metavar="HEX", help="old session key S (enhanced-eke)")
    attack.add_argument("--key-space-bits", type=int, help="size of the stage-1 key window (enhanced-eke)")
    attack.set_defaults(func=cmd_attack)

    mitm = sub.add_parser("mitm", help="middle-man against the no-key protocols")
    _global_flags(mitm, suppress=True)
    _session_flags(mitm)
    mitm.add_argument("--e", type=int, help="Eve's exponent")
    mitm.add_argument("--trials", type=int)
    mitm.add_argument("--give-eve-password", action="store_true", default=None)
    mitm.add_argument("--relay", action="store_true", default=None, help="forward flows untouched")
    mitm.set_defaults(func=cmd_mitm)

    margin = sub.add_parser("margin", help="physical security margin for a quantum adversary")
    _global_flags(margin, suppress=True)
    margin.add_argument("--profile")
    margin.add_argument("--computers", type=float)
    margin.add_argument("--horizon", type=float, help="seconds (default 2^32)")
    margin.add_argument("--footprint", type=float, help="m^2 per machine")
    margin.add_argument("--fleet", help="'earth': cover the Earth's surface")
    margin.add_argument("--dlogs-per-guess", type=int)
    margin.add_argument("--zeta3", help="'rounded' (1.2) or 'precise'")
    margin.add_argument("--d-cnot", type=float)
    margin.add_argument("--mass", type=float)
    margin.add_argument("--serial-gates", type=float)
    margin.add_argument("--gate-time", type=float)
    margin.add_argument("--check-paper", action="store_true", default=None)
    margin.set_defaults(func=cmd_margin)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        resolve(args)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
