"""Batch front end: model files in, machine-readable tables out.

Inputs are JSON ("spinpoint-model v1"); numerical outputs are CSV with
'.' decimal point, ',' separator, LF line endings, and '#' metadata
lines (command echo, input digest, tolerances, validation verdict)
ahead of the header row. Floats are written with repr, so identical
invocations produce byte-identical files.

Exit codes: 0 success, 1 input error, 2 validation failure,
3 numerical failure (near-pole kernel, norm drift).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from .boundary import (BoundaryPair, preset_delta, preset_delta_prime, preset_free,
                       preset_offdiag)
from .dynamics import evolve_spectral
from .krein import NearPoleError, gamma_dressed, gamma_free, resolvent_kernel
from .spectral import essential_spectrum_bottom, find_bound_states
from .spins import ModelSpec
from .states import GaussianPacket, UniformGrid

__all__ = ["main"]

MODEL_SCHEMA = "spinpoint-model v1"
STATE_SCHEMA = "spinpoint-state v1"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INVALID = 2
EXIT_NUMERIC = 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; the contract reserves 2 for
    # validation failures, so remap usage errors to the input code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return repr(float(x))


def _digest(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def _parse_z(text: str) -> complex:
    parts = [tok.strip() for tok in text.split(",")]
    if len(parts) != 2:
        raise InputError('--z expects "re,im"')
    try:
        return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        raise InputError(f"--z: cannot parse {text!r}")


def _complex_entry(pair_or_number) -> complex:
    if isinstance(pair_or_number, (int, float)):
        return complex(pair_or_number)
    if isinstance(pair_or_number, (list, tuple)) and len(pair_or_number) == 2:
        return complex(float(pair_or_number[0]), float(pair_or_number[1]))
    raise InputError(f"expected number or [re, im] pair, got {pair_or_number!r}")


def _matrix(entries, m: int, name: str) -> np.ndarray:
    arr = np.asarray([[_complex_entry(e) for e in row] for row in entries], dtype=complex)
    if arr.shape != (m, m):
        raise InputError(f"{name} must be {m} x {m} in flat-index order, got {arr.shape}")
    return arr


def _build_preset(model: ModelSpec, name: str, params: dict, paper_literal: bool) -> BoundaryPair:
    if name == "free":
        return preset_free(model)
    if name == "delta":
        literal = bool(params.get("paper_literal", False)) or paper_literal
        return preset_delta(model, params["beta"], paper_literal=literal)
    if name == "delta-prime":
        return preset_delta_prime(model, params["gamma"])
    if name == "offdiag":
        return preset_offdiag(model, params["betahat"])
    raise InputError(f"unknown preset {name!r}")


def load_model(path: str, paper_literal: bool = False):
    """Parse a model file into (ModelSpec, BoundaryPair, digest)."""
    try:
        raw = open(path, "rb").read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})")
    if not isinstance(doc, dict) or doc.get("schema") != MODEL_SCHEMA:
        raise InputError(f'{path}: expected "schema": "{MODEL_SCHEMA}"')
    try:
        model = ModelSpec(int(doc["dimension"]), doc["positions"], doc["alpha"])
    except KeyError as exc:
        raise InputError(f"{path}: missing field {exc}")
    except ValueError as exc:
        raise InputError(f"{path}: {exc}")
    if "n" in doc and int(doc["n"]) != model.n_spins:
        raise InputError(f"{path}: n={doc['n']} does not match {model.n_spins} positions")
    try:
        if "preset" in doc:
            spec = doc["preset"]
            pair = _build_preset(model, spec.get("name", ""), spec.get("parameters", {}),
                                 paper_literal)
        elif "A" in doc and "B" in doc:
            m = model.defect_dim
            pair = BoundaryPair(model.dimension, model.n_spins,
                                _matrix(doc["A"], m, "A"), _matrix(doc["B"], m, "B"))
        else:
            raise InputError(f"{path}: needs either a preset block or explicit A and B")
    except (KeyError, TypeError) as exc:
        raise InputError(f"{path}: bad boundary block ({exc})")
    except ValueError as exc:
        raise InputError(f"{path}: {exc}")
    return model, pair, _digest(raw)


def load_packet(path: str, model: ModelSpec):
    """Parse a state file into (GaussianPacket, UniformGrid)."""
    try:
        raw = open(path, "rb").read()
        doc = json.loads(raw)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})")
    if not isinstance(doc, dict) or doc.get("schema") != STATE_SCHEMA:
        raise InputError(f'{path}: expected "schema": "{STATE_SCHEMA}"')
    comps: dict[int, list] = {}
    try:
        for entry in doc["components"]:
            code = int(entry["channel"])
            single = GaussianPacket.single(
                model.dimension, model.n_configs, code,
                entry["center"], entry["momentum"],
                _complex_entry(entry.get("variance", 1.0)),
                _complex_entry(entry.get("weight", 1.0)),
            )
            comps.setdefault(code, []).extend(single.components[code])
        g = doc["grid"]
        if model.dimension == 1:
            grid = UniformGrid.linear(float(g["lo"]), float(g["hi"]), int(g["n"]))
        else:
            grid = UniformGrid.cube(float(g["lo"]), float(g["hi"]), int(g["n"]))
    except (KeyError, TypeError, IndexError) as exc:
        raise InputError(f"{path}: bad state file ({exc})")
    except ValueError as exc:
        raise InputError(f"{path}: {exc}")
    return GaussianPacket(model.dimension, model.n_configs, comps), grid


class ResultWriter:
    """CSV sink with the metadata preamble; text goes through unchanged."""

    def __init__(self, command: str, digest: str, tolerances: str, validation: str):
        self.lines = [
            "# spinpoint-result v1",
            f"# command: {command}",
            f"# input-digest: sha256:{digest}",
            f"# tolerances: {tolerances}",
            f"# validation: {validation}",
        ]

    def comment(self, text: str):
        self.lines.append(f"# {text}")

    def header(self, *names: str):
        self.lines.append(",".join(names))

    def row(self, *cells):
        self.lines.append(",".join(c if isinstance(c, str) else _fmt(c) for c in cells))

    def dump(self, out: str | None):
        payload = "\n".join(self.lines) + "\n"
        if out is None:
            sys.stdout.write(payload)
        else:
            with open(out, "w", newline="\n") as fh:
                fh.write(payload)


def _echo(args) -> str:
    return " ".join(args.argv)


def _validation_note(pair: BoundaryPair, unchecked: bool) -> str:
    if unchecked:
        return "skipped (unchecked)"
    return str(pair.validation())


def _require_valid(pair: BoundaryPair, unchecked: bool) -> int:
    if unchecked:
        return EXIT_OK
    if not pair.validation().is_valid:
        print(f"validation failed: {pair.validation()}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def cmd_validate(args) -> int:
    model, pair, _ = load_model(args.model, args.paper_literal)
    report = pair.validation(tol=args.tol) if args.tol is not None else pair.validation()
    out = [
        f"model: dimension {model.dimension}, {model.n_spins} site(s)",
        f"hermiticity defect: {_fmt(report.hermiticity_defect)}",
        f"rank: {report.rank}/{pair.defect_dim}",
        f"local: {'true' if report.is_local else 'false'}",
        f"valid: {'true' if report.is_valid else 'false'}",
    ]
    text = "\n".join(out) + "\n"
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK if report.is_valid else EXIT_INVALID


def _kernel_points(args, model: ModelSpec):
    d = model.dimension
    if args.points:
        rows = []
        try:
            for line in open(args.points):
                line = line.strip()
                if not line or line.startswith("#") or line[0].isalpha():
                    continue
                vals = [float(tok) for tok in line.split(",")]
                if len(vals) != 2 * d + 2:
                    raise InputError(f"points file rows need {2 * d + 2} columns for d={d}")
                x = vals[0] if d == 1 else np.array(vals[:d])
                sigma = int(vals[d])
                xp = vals[d + 1] if d == 1 else np.array(vals[d + 1:2 * d + 1])
                sigmap = int(vals[2 * d + 1])
                rows.append((x, sigma, xp, sigmap))
        except OSError as exc:
            raise InputError(f"cannot read {args.points}: {exc}")
        except ValueError as exc:
            raise InputError(f"{args.points}: {exc}")
        if not rows:
            raise InputError(f"{args.points}: no usable rows")
        return rows
    rng = np.random.default_rng(args.seed)
    pos = np.atleast_2d(np.asarray(model.positions, dtype=float).reshape(model.n_spins, -1))
    center = pos.mean(axis=0)
    span = 2.0 + float(np.max(np.abs(pos - center)))
    rows = []
    for _ in range(args.n_points):
        x = center + rng.uniform(-span, span, size=d)
        xp = center + rng.uniform(-span, span, size=d)
        if d == 1:
            x, xp = float(x[0]), float(xp[0])
        sigma = int(rng.integers(model.n_configs))
        sigmap = int(rng.integers(model.n_configs))
        rows.append((x, sigma, xp, sigmap))
    return rows


def cmd_kernel(args) -> int:
    model, pair, digest = load_model(args.model, args.paper_literal)
    code = _require_valid(pair, args.unchecked)
    if code != EXIT_OK:
        return code
    z = _parse_z(args.z)
    points = _kernel_points(args, model)
    writer = ResultWriter(_echo(args), digest, "none",
                          _validation_note(pair, args.unchecked))
    writer.comment(f"z: {_fmt(z.real)},{_fmt(z.imag)}")
    d = model.dimension
    if d == 1:
        writer.header("x", "sigma", "xp", "sigmap", "re", "im", "flag")
    else:
        writer.header("x1", "x2", "x3", "sigma", "xp1", "xp2", "xp3", "sigmap",
                      "re", "im", "flag")
    hit_pole = False
    for x, sigma, xp, sigmap in points:
        try:
            val = resolvent_kernel(model, pair, z, x, sigma, xp, sigmap,
                                   unchecked=args.unchecked)
            cells = (val.real, val.imag, "ok")
        except NearPoleError:
            hit_pole = True
            cells = ("nan", "nan", "near-pole")
        except ValueError as exc:
            raise InputError(str(exc))
        xs = [float(x)] if d == 1 else [float(v) for v in x]
        xps = [float(xp)] if d == 1 else [float(v) for v in xp]
        writer.row(*xs, str(sigma), *xps, str(sigmap), *cells)
    writer.dump(args.out)
    return EXIT_NUMERIC if hit_pole else EXIT_OK


def cmd_boundstates(args) -> int:
    model, pair, digest = load_model(args.model, args.paper_literal)
    code = _require_valid(pair, args.unchecked)
    if code != EXIT_OK:
        return code
    tol = 1e-10 if args.tol is None else args.tol
    states = find_bound_states(model, pair, e_min=args.emin, tol=tol,
                               unchecked=args.unchecked)
    writer = ResultWriter(_echo(args), digest, f"tol={_fmt(tol)}",
                          _validation_note(pair, args.unchecked))
    writer.comment(f"continuum-threshold: {_fmt(essential_spectrum_bottom(model))}")
    charge_cols = [f"charge_{i}_{part}" for i in range(pair.defect_dim)
                   for part in ("re", "im")]
    writer.header("energy", "sigma_min", "multiplicity", *charge_cols)
    for bs in states:
        cells = [bs.energy, bs.smallest_singular_value, str(bs.multiplicity)]
        for c in bs.charges:
            cells.extend([c.real, c.imag])
        writer.row(*cells)
    writer.dump(args.out)
    return EXIT_OK


def cmd_gamma(args) -> int:
    model, pair, digest = load_model(args.model, args.paper_literal)
    code = _require_valid(pair, args.unchecked)
    if code != EXIT_OK:
        return code
    z = _parse_z(args.z)
    try:
        gam = gamma_free(model, z if z.imag != 0.0 else complex(z.real))
    except ValueError as exc:
        raise InputError(str(exc))
    dressed = gamma_dressed(pair, gam)
    writer = ResultWriter(_echo(args), digest, "none",
                          _validation_note(pair, args.unchecked))
    writer.comment(f"z: {_fmt(z.real)},{_fmt(z.imag)}")
    writer.header("row", "col", "gamma_re", "gamma_im", "dressed_re", "dressed_im")
    m = pair.defect_dim
    for i in range(m):
        for j in range(m):
            writer.row(str(i), str(j), gam[i, j].real, gam[i, j].imag,
                       dressed[i, j].real, dressed[i, j].imag)
    writer.dump(args.out)
    return EXIT_OK


def cmd_evolve(args) -> int:
    model, pair, digest = load_model(args.model, args.paper_literal)
    code = _require_valid(pair, args.unchecked)
    if code != EXIT_OK:
        return code
    packet, grid = load_packet(args.state, model)
    times = [float(tok) for tok in args.t.split(",") if tok.strip()]
    if not times:
        raise InputError("--t needs at least one time")
    drift_tol = 1e-2 if args.tol is None else args.tol
    try:
        res = evolve_spectral(model, pair, packet, times, grid, eps=args.eps,
                              n_nodes=args.n_nodes, drift_tol=drift_tol,
                              unchecked=args.unchecked)
    except RuntimeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    os.makedirs(args.out, exist_ok=True)
    tolstr = (f"drift_tol={_fmt(drift_tol)};eps={_fmt(res.params['eps'])};"
              f"n_nodes={res.params['n_nodes']}")
    note = _validation_note(pair, args.unchecked)

    summary = ResultWriter(_echo(args), digest, tolstr, note)
    summary.comment("bound-energies: " +
                    (";".join(_fmt(e) for e in res.bound_energies) or "none"))
    summary.comment(f"error-estimate: {_fmt(res.error_estimate)}")
    weight_cols = [f"weight_{c}" for c in range(model.n_configs)]
    summary.header("time", "norm", *weight_cols)
    for i, t in enumerate(res.times):
        w = res.states[i].channel_weights()
        summary.row(float(t), res.norms[i], *[float(v) for v in w])
    summary.dump(os.path.join(args.out, "summary.csv"))

    d = model.dimension
    for i, t in enumerate(res.times):
        snap = ResultWriter(_echo(args), digest, tolstr, note)
        snap.comment(f"time: {_fmt(float(t))}")
        if d == 1:
            snap.header("x", "sigma_code", "re", "im")
        else:
            snap.header("x1", "x2", "x3", "sigma_code", "re", "im")
        values = res.states[i].values
        for c in range(model.n_configs):
            for p_idx in range(grid.n_points):
                pt = grid.points[p_idx]
                coords = [float(pt)] if d == 1 else [float(v) for v in pt]
                snap.row(*coords, str(c), values[c, p_idx].real, values[c, p_idx].imag)
        snap.dump(os.path.join(args.out, f"state_{i:03d}.csv"))
    return EXIT_OK


def _parse_positions(text: str, dimension: int):
    if dimension == 1:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    triples = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        vals = [float(tok) for tok in chunk.split(",")]
        if len(vals) != 3:
            raise InputError("d=3 positions are semicolon-separated x,y,z triples")
        triples.append(vals)
    return triples


def cmd_preset(args) -> int:
    positions = _parse_positions(args.positions, args.dimension)
    n = len(positions)
    if n == 0:
        raise InputError("need at least one position")
    alpha = ([float(tok) for tok in args.alpha.split(",")] if args.alpha
             else [0.0] * n)
    params: dict = {}
    if args.name == "delta":
        if args.beta is None:
            raise InputError("preset delta needs --beta")
        params["beta"] = json.loads(args.beta)
        if args.paper_literal:
            params["paper_literal"] = True
    elif args.name == "delta-prime":
        if args.gamma is None:
            raise InputError("preset delta-prime needs --gamma")
        params["gamma"] = json.loads(args.gamma)
    elif args.name == "offdiag":
        if args.betahat is None:
            raise InputError("preset offdiag needs --betahat")
        params["betahat"] = json.loads(args.betahat)
    doc = {
        "schema": MODEL_SCHEMA,
        "dimension": args.dimension,
        "n": n,
        "positions": positions,
        "alpha": alpha,
        "preset": {"name": args.name, "parameters": params},
    }
    model = ModelSpec(args.dimension, positions, alpha)
    _build_preset(model, args.name, params, False).validation()
    payload = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return EXIT_OK


def _add_common(sub):
    sub.add_argument("model", help="model JSON file")
    sub.add_argument("--out", default=None, help="output path (default: stdout)")
    sub.add_argument("--unchecked", action="store_true",
                     help="skip boundary-pair validation")
    sub.add_argument("--paper-literal", action="store_true",
                     help="use the doubled-coupling reading of the delta preset")
    sub.add_argument("--tol", type=float, default=None, help="command tolerance")


def build_parser() -> _Parser:
    parser = _Parser(prog="spinpoint",
                     description="point-interaction spin-coupling toolbox",
                     epilog="SPINPOINT_MAX_N overrides the spin-count cap")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("validate", help="check a boundary pair")
    _add_common(sub)
    sub.set_defaults(func=cmd_validate)

    sub = subs.add_parser("kernel", help="tabulate resolvent kernel values")
    _add_common(sub)
    sub.add_argument("--z", required=True, metavar="RE,IM")
    sub.add_argument("--points", default=None, help="CSV of evaluation rows")
    sub.add_argument("--n-points", type=int, default=12,
                     help="random rows when --points is absent")
    sub.add_argument("--seed", type=int, default=0)
    sub.set_defaults(func=cmd_kernel)

    sub = subs.add_parser("boundstates", help="search point spectrum below the continuum")
    _add_common(sub)
    sub.add_argument("--emin", type=float, default=None, help="scan floor")
    sub.set_defaults(func=cmd_boundstates)

    sub = subs.add_parser("gamma", help="dump the channel matrix and its dressing")
    _add_common(sub)
    sub.add_argument("--z", required=True, metavar="RE,IM")
    sub.set_defaults(func=cmd_gamma)

    sub = subs.add_parser("evolve", help="spectral time evolution on a grid")
    _add_common(sub)
    sub.add_argument("--state", required=True, help="state JSON file")
    sub.add_argument("--t", default="1.0", help="comma-separated times")
    sub.add_argument("--eps", type=float, default=None)
    sub.add_argument("--n-nodes", type=int, default=None)
    sub.set_defaults(func=cmd_evolve)

    sub = subs.add_parser("preset", help="write a model file for a named pair")
    sub.add_argument("name", choices=["free", "delta", "delta-prime", "offdiag"])
    sub.add_argument("--dimension", type=int, choices=[1, 3], required=True)
    sub.add_argument("--positions", required=True,
                     help="d=1: comma list; d=3: semicolon-separated triples")
    sub.add_argument("--alpha", default=None, help="comma list, default zeros")
    sub.add_argument("--beta", default=None, help="delta strengths (JSON scalar or table)")
    sub.add_argument("--gamma", default=None, help="delta-prime strengths")
    sub.add_argument("--betahat", default=None, help="offdiag strengths")
    sub.add_argument("--paper-literal", action="store_true")
    sub.add_argument("--out", default=None)
    sub.set_defaults(func=cmd_preset)
    return parser


def _merge_value_flags(argv: list[str]) -> list[str]:
    # "--z -1.0,0.5" trips argparse's negative-number heuristic; fold
    # the value into the flag token before parsing
    merged = []
    skip = False
    for i, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        if tok in ("--z", "--t") and i + 1 < len(argv):
            merged.append(f"{tok}={argv[i + 1]}")
            skip = True
        else:
            merged.append(tok)
    return merged


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(_merge_value_flags(argv))
    args.argv = argv
    try:
        code = args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return code


if __name__ == "__main__":
    sys.exit(main())
