"""Command-line front end.

Every subcommand writes its result as records on stdout, either CSV (header
row plus one row per record) or JSON (one object per line). Diagnostics go
to stderr. Exit codes: 0 success, 1 no usable data, 2 usage error, 3 I/O or
format error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict
from typing import Iterable, Sequence

from . import __version__
from .capture import FlowFilter, extract_size_series, parse_pcap, size_stats
from .detect import DetectionConfig, analyze_flows, load_detection_config, report_to_dict
from .domainsets import (
    FamilyLengthModel,
    dump_domain_list,
    family_length_model,
    generate_parametric,
    load_domain_list,
)
from .errors import (
    ConfigMismatch,
    ConstantSeries,
    CovertDnsError,
    EmptyDatabase,
    EmptySeries,
    IoFailure,
    NotReached,
    SeriesTooShort,
    SingularDesign,
)
from .ioc import IocConfig, IocDatabase, build_ioc, load_db, load_demo_db, match_ioc, save_db
from .series import format_series, read_series
from .tables import FAMILIES
from .trafficsim import SimSession, TransportMode, response_model, simulate_session, write_pcap
from .tsa import DEFAULT_LAMBDA, DEFAULT_ORDER

EXIT_OK, EXIT_NO_DATA, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

# errors meaning "the input was readable but holds nothing usable"
_NO_DATA = (EmptySeries, SeriesTooShort, SingularDesign, ConstantSeries, NotReached)


class UsageError(Exception):
    pass


# --- output ----------------------------------------------------------------------------


def _flatten(record: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in record.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, name + "."))
        elif isinstance(value, (list, tuple)):
            flat[name] = json.dumps(value)
        else:
            flat[name] = value
    return flat


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def emit(records: Sequence[dict], fmt: str, out) -> None:
    """Write `records` to `out` as CSV or JSON lines."""
    if fmt == "json":
        for rec in records:
            out.write(json.dumps(rec, allow_nan=False) + "\n")
        return
    rows = [_flatten(rec) for rec in records]
    if not rows:
        return
    writer = csv.writer(out)
    header = list(rows[0])
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(row.get(k)) for k in header])


# --- helpers ---------------------------------------------------------------------------


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc.strerror}") from exc


def _write_bytes(path: str, data: bytes) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc.strerror}") from exc


def _family(name: str) -> str:
    for fam in FAMILIES:
        if fam.lower() == name.lower():
            return fam
    return name


def _csv_list(text: str, cast=str) -> list:
    try:
        return [cast(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"cannot parse list {text!r}") from None


def _resolvers(values: Iterable[str]) -> list[str]:
    return [addr for value in values for addr in _csv_list(value)]


def _flow_filter(args) -> FlowFilter:
    try:
        return FlowFilter(frozenset(_resolvers(args.resolver)), frozenset(_csv_list(args.ports, int)))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_model_file(path: str) -> FamilyLengthModel:
    fields = {}
    for lineno, raw in enumerate(_read_text(path).splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (p.strip() for p in line.split("=", 1))
        fields[key] = value
    allowed = {"family", "min", "max", "average", "stdev", "alphabet", "tld"}
    unknown = set(fields) - allowed
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
    try:
        model = FamilyLengthModel(
            family=fields["family"],
            min=int(fields["min"]),
            max=int(fields["max"]),
            average=float(fields["average"]),
            stdev=float(fields["stdev"]),
            **{k: fields[k] for k in ("alphabet", "tld") if k in fields},
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing key {exc.args[0]!r}") from None
    model.validate()
    return model


# --- subcommands -----------------------------------------------------------------------


def cmd_gen_domains(args, out) -> int:
    if _family(args.model) in FAMILIES:
        model = family_length_model(_family(args.model))
    elif os.path.exists(args.model):
        model = _load_model_file(args.model)
    else:
        raise UsageError(f"--model must be one of {', '.join(FAMILIES)} or a model file; got {args.model!r}")
    domains = generate_parametric(model, args.count, args.seed)
    _write_bytes(args.out, dump_domain_list(domains))
    stats = domains.lengths
    emit([{"family": model.family, "count": len(domains), "min": int(stats.min()), "max": int(stats.max())}], args.format, out)
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    family = _family(args.family)
    mode = TransportMode.parse(args.mode)
    if args.domains:
        domains = load_domain_list(args.domains, family)
    else:
        domains = generate_parametric(family_length_model(family), args.count, args.seed)
    session = SimSession(domains, mode, response_model(family, mode), args.seed, resolver_addr=args.resolver)
    series = simulate_session(session)
    buf = io.BytesIO()
    write_pcap(session, series, buf, byteorder=args.byteorder)
    _write_bytes(args.pcap, buf.getvalue())
    if args.series:
        _write_bytes(args.series, format_series(series).encode())
    emit([{"family": family, "mode": mode.value, "seed": args.seed, "n_domains": len(domains), "n_records": len(series)}], args.format, out)
    return EXIT_OK


def cmd_stats(args, out) -> int:
    series = read_series(_read_text(args.series))
    exclude = [v for value in args.exclude for v in _csv_list(value, float)]
    emit([asdict(size_stats(series, exclude))], args.format, out)
    return EXIT_OK


def cmd_ingest(args, out) -> int:
    flt = _flow_filter(args)
    series = extract_size_series(parse_pcap(args.pcap), flt)
    _write_bytes(args.out, format_series(series).encode())
    emit([{"n_records": len(series)}], args.format, out)
    return EXIT_OK


def _ioc_record(entry) -> dict:
    return {
        "family": entry.family,
        "constant": entry.constant,
        "lags": list(entry.lags),
        "std_errors": list(entry.std_errors),
        "p_values": list(entry.p_values),
        "n_obs": entry.n_obs,
    }


def cmd_build_ioc(args, out) -> int:
    config = IocConfig(
        lam=args.lam,
        order=args.order,
        use_trend=not args.raw,
        exclude=[v for value in args.exclude for v in _csv_list(value, float)] if args.exclude else IocConfig().exclude,
    )
    family = _family(args.family)
    series = read_series(_read_text(args.series), family)
    entry = build_ioc(series, family, config)
    if os.path.exists(args.db):
        db = load_db(args.db)
        if db.config != config:
            raise ConfigMismatch(f"{args.db} was built with {db.config}, not {config}")
        db = db.with_entry(entry, replace=args.replace)
    else:
        db = IocDatabase(config, [entry])
    save_db(db, args.db)
    emit([_ioc_record(entry)], args.format, out)
    return EXIT_OK


def _database(args) -> IocDatabase | None:
    if args.demo_db and args.db:
        raise UsageError("--db and --demo-db are mutually exclusive")
    if args.demo_db:
        return load_demo_db()
    return load_db(args.db) if args.db else None


def cmd_classify(args, out) -> int:
    db = _database(args)
    if db is None:
        raise UsageError("classify needs --db or --demo-db")
    if len(db) == 0:
        raise EmptyDatabase("the IoC database has no entries")
    series = read_series(_read_text(args.series))
    ranked = match_ioc(build_ioc(series, config=db.config), db, db.config)
    emit(
        [{"rank": i, "family": m.family, "distance": m.distance, "t_stats": list(m.t_stats)} for i, m in enumerate(ranked, 1)],
        args.format,
        out,
    )
    return EXIT_OK


def cmd_analyze(args, out) -> int:
    config = load_detection_config(args.config) if args.config else DetectionConfig()
    db = _database(args)
    reports = analyze_flows(args.pcap, _flow_filter(args), db, config)
    emit([report_to_dict(r) for r in reports], args.format, out)
    if all(r.status != "ok" for r in reports):
        for r in reports:
            print(f"covertdns: {r.status}", file=args.err)
        return EXIT_NO_DATA
    return EXIT_OK


# --- parser ----------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="covertdns", description="Detect and attribute covert DNS-over-TLS/HTTPS traffic.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text, default_format="csv"):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        p.add_argument("--format", choices=("csv", "json"), default=default_format, help="output format")
        return p

    def add_filter(p):
        p.add_argument("--resolver", action="append", required=True, help="resolver IP(s), comma separated; repeatable")
        p.add_argument("--ports", default="443,853", help="server ports (default: 443,853)")

    p = add("gen-domains", cmd_gen_domains, "Generate a domain list from a family length model.")
    p.add_argument("--model", required=True, help="family name or key=value model file")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = add("simulate", cmd_simulate, "Simulate a resolver session and write it as a pcap.")
    p.add_argument("--domains", help="domain list file (default: generate from the family model)")
    p.add_argument("--count", type=int, default=1000, help="domains to generate when --domains is absent")
    p.add_argument("--family", required=True)
    p.add_argument("--mode", choices=("doh", "dot"), required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--pcap", required=True)
    p.add_argument("--series", help="also write the size series here")
    p.add_argument("--resolver", default="1.1.1.1", help="resolver address written into the capture")
    p.add_argument("--byteorder", choices=("little", "big"), default="little")

    p = add("stats", cmd_stats, "Summary statistics of a size series.")
    p.add_argument("--series", required=True)
    p.add_argument("--exclude", action="append", default=[], help="sizes to drop, e.g. 97; repeatable")

    p = add("ingest", cmd_ingest, "Extract the resolver response-size series from a pcap.")
    p.add_argument("--pcap", required=True)
    add_filter(p)
    p.add_argument("--out", required=True)

    p = add("build-ioc", cmd_build_ioc, "Fit a fingerprint and add it to an IoC database.")
    p.add_argument("--series", required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--order", type=int, default=DEFAULT_ORDER)
    p.add_argument("--raw", action="store_true", help="fit the raw series instead of its HP trend")
    p.add_argument("--exclude", action="append", default=[], help="sizes to drop before fitting (default: 97)")
    p.add_argument("--replace", action="store_true", help="overwrite an existing entry for the family")
    p.add_argument("--db", required=True)

    p = add("classify", cmd_classify, "Rank database families against a size series.")
    p.add_argument("--series", required=True)
    p.add_argument("--db", help="IoC database file")
    p.add_argument("--demo-db", action="store_true", help="use the demo database shipped with the package")

    p = add("analyze", cmd_analyze, "Run the detection pipeline on every flow of a pcap.", default_format="json")
    p.add_argument("--pcap", required=True)
    add_filter(p)
    p.add_argument("--db", help="IoC database for attribution")
    p.add_argument("--demo-db", action="store_true", help="use the demo database shipped with the package")
    p.add_argument("--config", help="key=value file overriding detection thresholds")
    return parser


def run(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
        args.err = err
        return args.func(args, out)
    except UsageError as exc:
        print(f"covertdns: usage error: {exc}", file=err)
        return EXIT_USAGE
    except _NO_DATA as exc:
        print(f"covertdns: {type(exc).__name__}: {exc}", file=err)
        return EXIT_NO_DATA
    except (CovertDnsError, OSError, ValueError) as exc:
        print(f"covertdns: {type(exc).__name__}: {exc}", file=err)
        return EXIT_IO


def main() -> None:
    sys.exit(run())
