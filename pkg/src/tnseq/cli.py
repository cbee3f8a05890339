"""Command-line interface.

Every command reads model files (``-`` for standard input) and prints a
report of ordered ``key: value`` lines, or ``key=value`` records under
``--porcelain``. Exit codes: 0 success, 1 validation failure (or
non-equivalent models for ``compare``), 2 numerical failure, 3 I/O, parse or
usage error. Failures also print one ``error=<tag> <message>`` line on
standard error.

Global options default from the ``DEFAULTS`` block and can be overridden by
environment variables named ``TNSEQ_<OPTION>`` (for example
``TNSEQ_THREADS=0``), and then by the command line.
"""

import argparse
import hashlib
import math
import os
import re
import sys
import warnings

import numpy as np

from . import controlled as ctl
from . import evaluate as ev
from . import gallery, modelfile, oracle
from .convert import convert
from .errors import InvalidModel, NumericalError, TnseqError, UnsupportedOperation
from .models import Hmm, Hqmm, Noom, Psr, model_kind, validate

ENV_PREFIX = "TNSEQ_"
DEFAULTS = {"tol": 1e-9, "max_iter": 100_000, "seed": 0, "threads": 1, "porcelain": False}
_PARSERS = {"tol": float, "max_iter": int, "seed": int, "threads": int,
            "porcelain": lambda s: s.strip().lower() in ("1", "true", "yes", "on")}

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class UsageError(TnseqError, ValueError):
    tag = "usage"


# --------------------------------------------------------------------------
# reports


def fmt(value):
    """Deterministic text for a report value."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (complex, np.complexfloating)):
        value = complex(value)
        if value.imag == 0:
            return repr(value.real)
        sign = "-" if math.copysign(1.0, value.imag) < 0 else "+"
        return f"{value.real!r}{sign}{abs(value.imag)!r}j"
    if isinstance(value, np.ndarray):
        flat = value.ravel()
        if np.iscomplexobj(flat) and not np.any(flat.imag):
            flat = flat.real
        return " ".join(fmt(x) for x in flat)
    if isinstance(value, (list, tuple)):
        return " ".join(fmt(x) for x in value)
    return str(value)


def _key(name):
    return re.sub(r"[^0-9A-Za-z_.]+", "_", str(name)).strip("_")


class RunReport:
    """Ordered fields of one command run."""

    def __init__(self, command):
        self.fields = [("command", command)]
        self.exit_code = EXIT_OK

    def add(self, key, value):
        self.fields.append((_key(key), value))

    def render(self, porcelain=False):
        rows = self.fields + [("exit_code", self.exit_code)]
        if porcelain:
            return "".join(f"{k}={fmt(v)}\n" for k, v in rows)
        width = max(len(k) for k, _ in rows)
        return "".join(f"{k:<{width}}  {fmt(v)}\n" for k, v in rows)


# --------------------------------------------------------------------------
# inputs


def _read(path):
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _load(report, path, label="input"):
    data = _read(path)
    report.add(f"{label}.sha256", hashlib.sha256(data).hexdigest())
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise modelfile.ModelFileError(f"{label} is not UTF-8") from None
    model = modelfile.loads(text)
    report.add(f"{label}.model_type", model_kind(model))
    return model


def _sequence(model, tokens):
    text = " ".join(tokens)
    try:
        if oracle.is_controlled(model):
            seq = ctl.parse_action_sequence(text)
            return ctl.as_action_sequence(seq, model.action_count, model.obs_count)
        return ev.as_sequence([int(t) for t in text.split()], model.obs_count)
    except ValueError as exc:
        raise UsageError(f"bad sequence {text!r}: {exc}") from None


def _seq_text(seq):
    return " ".join(f"{s[0]}:{s[1]}" if isinstance(s, tuple) else str(s) for s in seq)


def _write_model(model, path):
    text = modelfile.dumps(model)
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _capture_warnings(report, caught):
    for w in caught:
        report.add("warning", w.category.__name__)


# --------------------------------------------------------------------------
# commands


def cmd_validate(args, cfg):
    report = RunReport("validate")
    model = _load(report, args.file)
    result = validate(model, tol=cfg["tol"])
    report.add("valid", result.ok)
    for name, value in result.residuals.items():
        report.add(f"residual.{name}", value)
    for i, v in enumerate(result.violations):
        report.add(f"violation.{i}", str(v))
    if not result.ok:
        report.exit_code = EXIT_INVALID
    return report


def cmd_eval(args, cfg):
    report = RunReport("eval")
    model = _load(report, args.file)
    seq = _sequence(model, args.sequence)
    report.add("sequence", _seq_text(seq))
    report.add("semantics", args.semantics)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if oracle.is_controlled(model):
            if args.semantics != "joint":
                raise UnsupportedOperation("controlled models support joint semantics only")
            report.add("joint", ctl.controlled_joint(model, seq, check=True))
        elif args.semantics == "joint":
            report.add("joint", ev.joint(model, seq, check=True))
        else:
            report.add("conditional", _conditional(model, seq, cfg))
    _capture_warnings(report, caught)
    return report


def _conditional(model, seq, cfg):
    if not seq:
        raise UsageError("conditional semantics need a non-empty sequence")
    prefix, y = seq[:-1], seq[-1]
    if isinstance(model, (Psr, Hmm, Noom, Hqmm)):
        states = ev.filter_sequence(model, prefix)
        return float(ev.predict(model, states[-1])[y])
    ev.require_valid(model)
    fp = ev.transfer_fixed_point(model, max_iter=cfg["max_iter"])
    return ev.conditional_nonterminating(model, prefix, y, fp)


def cmd_filter(args, cfg):
    report = RunReport("filter")
    model = _load(report, args.file)
    seq = _sequence(model, args.sequence)
    report.add("sequence", _seq_text(seq))
    if oracle.is_controlled(model):
        st = ctl.controlled_filter_init(model)
        states = [st]
        for a, y in seq:
            st = ctl.controlled_filter(model, st, a, y)
            states.append(st)
    else:
        states = ev.filter_sequence(model, seq)
    for t, st in enumerate(states):
        report.add(f"state.{t}", st.state)
    report.add("log_prob", states[-1].log_prob)
    report.add("prob", states[-1].prob)
    return report


def cmd_convert(args, cfg):
    report = RunReport("convert")
    model = _load(report, args.file)
    converted, info = convert(model, args.target, tol=cfg["tol"], max_iter=cfg["max_iter"])
    report.add("target", model_kind(converted))
    if info is not None:
        report.add("rescale_factor", info.rescale_factor)
        for name, value in info.residuals.items():
            report.add(f"residual.{name}", value)
    report.add("valid", validate(converted, tol=cfg["tol"]).ok)
    report.add("output", args.out)
    report.add("output.sha256", _write_model(converted, args.out))
    return report


def cmd_compare(args, cfg):
    report = RunReport("compare")
    a = _load(report, args.file_a, "input_a")
    b = _load(report, args.file_b, "input_b")
    result = oracle.equivalent(a, b, args.max_len, tol=cfg["tol"], semantics=args.semantics,
                               horizon=args.horizon, threads=cfg["threads"])
    report.add("semantics", result.semantics)
    report.add("max_len", args.max_len)
    report.add("tol", result.tol)
    for length, dev in result.per_length.items():
        report.add(f"deviation.len{length}", dev)
    report.add("max_deviation", result.max_deviation)
    report.add("witness", _seq_text(result.witness))
    report.add("equivalent", result.equivalent)
    if not result.equivalent:
        report.exit_code = EXIT_INVALID
    return report


def cmd_marginalize(args, cfg):
    report = RunReport("marginalize")
    model = _load(report, args.file)
    if oracle.is_controlled(model):
        raise UnsupportedOperation("marginalization is defined for uncontrolled models")
    seq = _sequence(model, args.prefix)
    ev.require_valid(model)
    report.add("prefix", _seq_text(seq))
    report.add("total_len", args.total_len)
    report.add("marginal", oracle.finite_marginal(model, seq, args.total_len))
    report.add("total_mass", oracle.total_mass(model, args.total_len))
    return report


def cmd_sample(args, cfg):
    report = RunReport("sample")
    model = _load(report, args.file)
    if oracle.is_controlled(model):
        raise UnsupportedOperation("sampling is defined for uncontrolled models")
    report.add("seed", cfg["seed"])
    for i, s in enumerate(oracle.sample_many(model, args.length, args.count, seed=cfg["seed"])):
        report.add(f"sample.{i}", _seq_text(s))
    return report


def cmd_gallery(args, cfg):
    report = RunReport("gallery")
    if args.name == "appendix_hmm":
        inst = gallery.appendix_hmm()
    elif args.name == "oscillating_noom":
        inst = gallery.oscillating_noom(args.theta, args.damping)
    else:
        model = gallery.random_model(args.kind, args.dim, args.obs, cfg["seed"],
                                     kraus_rank=args.kraus_rank, actions=args.actions)
        inst = gallery.NamedInstance(f"random_{args.kind}", model, f"random_model(seed={cfg['seed']})")
    report.add("name", inst.name)
    report.add("model_type", model_kind(inst.model))
    for i, (fact, _, ok) in enumerate(inst.verify()):
        report.add(f"fact.{i}", f"{fmt(ok)} {fact.description}")
    report.add("output", args.out)
    report.add("output.sha256", _write_model(inst.model, args.out))
    return report


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _global_options(p):
    s = argparse.SUPPRESS
    p.add_argument("--tol", type=float, default=s, help="numerical tolerance (default 1e-9)")
    p.add_argument("--max-iter", dest="max_iter", type=int, default=s, help="eigensolver iteration cap")
    p.add_argument("--seed", type=int, default=s, help="random seed (default 0)")
    p.add_argument("--threads", type=int, default=s, help="oracle worker threads, 0 = all cores")
    p.add_argument("--porcelain", action="store_true", default=s, help="key=value output")


def build_parser():
    parser = _Parser(prog="tnseq", description=__doc__.split("\n\n")[0])
    _global_options(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        _global_options(p)
        p.set_defaults(func=fn)
        return p

    p = command("validate", cmd_validate, "check model constraints")
    p.add_argument("file")
    p = command("eval", cmd_eval, "joint or conditional score of a sequence")
    p.add_argument("file")
    p.add_argument("sequence", nargs="*")
    p.add_argument("--semantics", choices=("joint", "conditional"), default="joint")
    p = command("filter", cmd_filter, "filtered states along a sequence")
    p.add_argument("file")
    p.add_argument("sequence", nargs="*")
    p = command("convert", cmd_convert, "convert to another model family")
    p.add_argument("file")
    p.add_argument("target")
    p.add_argument("-o", "--out", default="-")
    p = command("compare", cmd_compare, "compare two models by enumeration")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--max-len", dest="max_len", type=int, default=4)
    p.add_argument("--semantics", choices=("joint", "conditional"), default="joint")
    p.add_argument("--horizon", type=int, default=oracle.DEFAULT_HORIZON)
    p = command("marginalize", cmd_marginalize, "finite-length marginal of a prefix")
    p.add_argument("file")
    p.add_argument("prefix", nargs="*")
    p.add_argument("--total-len", dest="total_len", type=int, required=True)
    p = command("sample", cmd_sample, "ancestral samples")
    p.add_argument("file")
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p = command("gallery", cmd_gallery, "export a named or random instance")
    p.add_argument("name", choices=("appendix_hmm", "oscillating_noom", "random"))
    p.add_argument("-o", "--out", default="-")
    p.add_argument("--theta", type=float, default=0.6)
    p.add_argument("--damping", type=float, default=0.9)
    p.add_argument("--kind", default="noom")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--obs", type=int, default=2)
    p.add_argument("--actions", type=int, default=2)
    p.add_argument("--kraus-rank", dest="kraus_rank", type=int, default=2)
    return parser


def resolve_config(args, environ=None):
    """Command line over ``TNSEQ_*`` environment variables over ``DEFAULTS``."""
    environ = os.environ if environ is None else environ
    cfg = {}
    for name, default in DEFAULTS.items():
        if hasattr(args, name):
            cfg[name] = getattr(args, name)
            continue
        raw = environ.get(ENV_PREFIX + name.upper())
        if raw is None:
            cfg[name] = default
            continue
        try:
            cfg[name] = _PARSERS[name](raw)
        except ValueError:
            raise UsageError(f"bad value {raw!r} for {ENV_PREFIX}{name.upper()}") from None
    if cfg["threads"] < 0:
        raise UsageError("--threads must be >= 0")
    return cfg


def _exit_code(exc):
    if isinstance(exc, InvalidModel):
        return EXIT_INVALID
    if isinstance(exc, NumericalError):
        return EXIT_NUMERIC
    return EXIT_IO


def main(argv=None):
    cfg = DEFAULTS
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
        report = args.func(args, cfg)
    except (TnseqError, OSError, ValueError, TypeError) as exc:
        tag = getattr(exc, "tag", "io_error" if isinstance(exc, OSError) else "error")
        msg = " ".join(str(exc).split())
        sys.stderr.write(f"error={tag} {msg}\n")
        return _exit_code(exc)
    text = report.render(cfg["porcelain"])
    if getattr(args, "out", None) == "-":
        sys.stderr.write(text)
    else:
        sys.stdout.write(text)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
