"""Command-line front end.

Exit codes: 0 success, 1 domain failure (invalid POVM, failed search, ...),
2 unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .dilation import (
    DilationUnitary,
    build_dilation,
    dilation_from_dict,
    dilation_to_dict,
    extract_povm,
    matrix_from_list,
    matrix_to_list,
    u_sic1_reference,
)
from .equivalence import TOL_1CNOT, TOL_K, canonical_vector, cnot_count
from .exceptions import IcPovmError
from .gates import Circuit, general_circuit, practical_circuit, unitary_of
from .linalg import global_phase_distance
from .noise import NoiseModel, load_noise
from .optimizer import algo1, algo2, find_2cnot_theta, relabel_table
from .povm import (
    QubitPovm4,
    is_ic,
    is_sic,
    reference_set,
    same_elements,
    sic_residual,
    validate,
)
from .serialization import dumps
from .shadows import (
    DensityState,
    depolarize,
    estimate_fidelity,
    fig5_state,
    ghz_vector,
    measure_povm_joint,
    measure_povm_sequential,
    measurement_circuit,
    optimal_sic_for_state,
    prepare_ghz,
    product_vector,
    snapshot_table,
)

SEED_ENV = "ICPOVM_SEED"


class InputError(Exception):
    """Unreadable or malformed input (exit code 2)."""


def _read_json(path):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _parse_kets(data) -> QubitPovm4:
    try:
        kets = np.array([[complex(re, im) for re, im in ket] for ket in data["kets"]])
        return QubitPovm4(kets)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed POVM record: {exc}") from exc


def _load_povm(spec: str) -> QubitPovm4:
    if spec.lower() in ("set1", "set2"):
        return reference_set(spec)
    return _parse_kets(_read_json(spec))


def _load_unitary(spec: str):
    """Dilation from a unitary file (bare matrix or ``{"unitary": ...}``), or a POVM file."""
    data = _read_json(spec)
    try:
        if isinstance(data, list):
            return DilationUnitary(matrix_from_list(data, (4, 4))), None
        if isinstance(data, dict) and "kets" in data:
            return build_dilation(_parse_kets(data)), None
        return dilation_from_dict(data)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _default_seed(seed):
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise InputError(f"{SEED_ENV} must be an integer, got {env!r}") from exc


def _emit(args, payload, text=None):
    out = text if text is not None else dumps(payload) + "\n"
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


# --- subcommands ---------------------------------------------------------------------


def cmd_validate(args) -> int:
    povm = _load_povm(args.povm)
    resid = validate(povm)
    complete = resid < 1e-9
    report = {
        "complete": complete,
        "completeness_residual": resid,
        "ic": bool(is_ic(povm)),
        "sic": bool(complete and is_sic(povm)),
        "sic_residual": sic_residual(povm),
    }
    _emit(args, report)
    return 0 if complete else 1


def cmd_classify(args) -> int:
    dil, _ = _load_unitary(args.unitary)
    k = canonical_vector(dil.U)
    n = cnot_count(dil.U, tol_1=args.tol_1, tol_k=args.tol_k)
    payload = {"k1": k.k1, "k2": k.k2, "k3": k.k3, "k": k.as_array().tolist()}
    payload.update({"k_over_pi4": k.scaled().tolist(), "cnot_count": n})
    _emit(args, payload)
    return 0


def cmd_compile_sic(args) -> int:
    if args.dilation:
        target, _ = _load_unitary(args.dilation)
    else:
        povm = _load_povm(args.povm)
        target = build_dilation(povm)
    a1 = algo1(target)
    a2 = algo2(target, a1)
    gen = general_circuit(a1.U_S, a1.c, a2.beta1, a2.beta2, a2.beta3, a2.Q)
    prac = practical_circuit(a1.U_S, a1.c)
    gen_resid, _ = global_phase_distance(unitary_of(gen), target.U)
    pe = extract_povm(unitary_of(prac)).elements
    mapped = np.empty_like(pe)
    for k in range(4):
        mapped[prac.outcome_map[k]] = pe[k]
    prac_resid = float(np.abs(mapped - target.povm().elements).max())
    payload = {
        "c": a1.c,
        "U_S": matrix_to_list(a1.U_S),
        "betas": [a2.beta1, a2.beta2, a2.beta3],
        "Q": matrix_to_list(a2.Q),
        "practical_circuit": prac.to_dict(),
        "general_circuit": gen.to_dict(),
        "residuals": {"general_unitary": gen_resid, "practical_elements": prac_resid},
    }
    if args.circuit_out:
        with open(args.circuit_out, "w") as fh:
            fh.write(dumps(prac.to_dict()) + "\n")
    _emit(args, payload)
    return 0 if gen_resid < 1e-8 and prac_resid < 1e-9 else 1


def cmd_optimize(args) -> int:
    dil, _ = _load_unitary(args.unitary)
    theta, moved = find_2cnot_theta(dil)
    resid = float(np.abs(moved.povm().elements - dil.povm().elements).max())
    payload = dilation_to_dict(moved, theta)
    payload["theta_star"] = theta.to_dict()
    payload["cnot_count"] = cnot_count(moved.U)
    payload["povm_residual"] = resid
    _emit(args, payload)
    return 0


def cmd_relabel_table(args) -> int:
    table = relabel_table()
    if args.format == "json":
        _emit(args, table)
    else:
        lines = ["  " + " ".join(f"{l:>4}" for l in "abcdef")]
        for d in "1234":
            lines.append(d + " " + " ".join(table[d + l] for l in "abcdef"))
        _emit(args, None, "\n".join(lines) + "\n")
    return 0


def _shadow_setup(args):
    n = args.n
    if args.noise == "off":
        noise = None
    elif args.noise == "default":
        noise = NoiseModel.sample(n, seed=_default_seed(args.seed) + 1)
    else:
        try:
            noise = load_noise(args.noise, n)
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
            raise InputError(f"cannot load noise model: {exc}") from exc

    if args.state == "ghz":
        target = DensityState.pure(ghz_vector(n))
        state = prepare_ghz(n, noise)
        ideal = 1.0
        psi1 = None
    else:
        psi1 = fig5_state(args.psi)
        target = DensityState.pure(product_vector(psi1, n))
        state = depolarize(target, args.p)
        ideal = args.p / 2**n + (1 - args.p)

    if args.povm == "optimal":
        if psi1 is None:
            raise IcPovmError("the optimal SIC needs a product target state")
        povm = optimal_sic_for_state(psi1)
    else:
        povm = _load_povm(args.povm)

    if args.circuit in ("1cnot", "2cnot", "3cnot"):
        dil = u_sic1_reference(1) if same_elements(povm, reference_set("set1")) else build_dilation(povm)
        circuit = measurement_circuit(dil, int(args.circuit[0]))
        # every built-in circuit reports outcomes in the dilation's element order
        povm = dil.povm()
    else:
        try:
            circuit = Circuit.from_dict(_read_json(args.circuit))
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    return state, target, ideal, povm, circuit, noise


def cmd_shadow(args) -> int:
    seed = _default_seed(args.seed)
    try:
        shots_list = sorted({int(s) for s in str(args.shots).split(",")})
    except ValueError as exc:
        raise InputError(f"bad --shots value {args.shots!r}") from exc
    if not shots_list or shots_list[0] <= 0:
        raise InputError("--shots must be positive")
    state, target, ideal, povm, circuit, noise = _shadow_setup(args)
    total = shots_list[-1]
    if args.sampler == "sequential":
        record = measure_povm_sequential(state, circuit, noise, np.random.default_rng(seed), total, povm)
    else:
        record = measure_povm_joint(state, circuit, noise, seed, total, povm)
    est = estimate_fidelity(target, record, snapshot_table(povm))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["shots", "mean", "std_error", "variance", "mse_vs_ideal"])
    for m in shots_list:
        e = est.head(m)
        writer.writerow([m] + [format(v, ".17g") for v in (e.mean, e.std_error, e.variance, e.mse_vs(ideal))])
    _emit(args, None, buf.getvalue())
    return 0


# --- parser -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="icpovm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def with_output(sp):
        sp.add_argument("-o", "--output", help="write to this file instead of stdout")
        return sp

    sp = with_output(sub.add_parser("validate", help="check completeness, IC and SIC properties"))
    sp.add_argument("povm", help="POVM JSON file, or set1 / set2")
    sp.set_defaults(func=cmd_validate)

    sp = with_output(sub.add_parser("classify", help="Weyl-chamber point and minimal CNOT count"))
    sp.add_argument("unitary", help="4x4 unitary JSON (bare matrix or dilation record)")
    sp.add_argument("--tol-1", type=float, default=TOL_1CNOT)
    sp.add_argument("--tol-k", type=float, default=TOL_K)
    sp.set_defaults(func=cmd_classify)

    sp = with_output(sub.add_parser("compile-sic", help="practical and general circuits for a SIC"))
    sp.add_argument("povm", nargs="?", default="set1", help="POVM JSON file, or set1 / set2")
    sp.add_argument("--dilation", help="compile this dilation unitary instead of a POVM")
    sp.add_argument("--circuit-out", help="also write the practical circuit JSON here")
    sp.set_defaults(func=cmd_compile_sic)

    sp = with_output(sub.add_parser("optimize", help="move a dilation onto the 2-CNOT locus"))
    sp.add_argument("unitary", help="dilation JSON, bare 4x4 matrix, or POVM JSON")
    sp.set_defaults(func=cmd_optimize)

    sp = with_output(sub.add_parser("shadow-estimate", help="simulate POVM shadow fidelity estimation"))
    sp.add_argument("--state", choices=("ghz", "depolarized"), default="ghz")
    sp.add_argument("--n", type=int, default=6)
    sp.add_argument("--p", type=float, default=0.2)
    sp.add_argument("--psi", choices=("a", "b"), default="a", help="product target for --state depolarized")
    sp.add_argument("--shots", default="1000,10000,100000", help="comma-separated shot counts")
    sp.add_argument("--seed", type=int, default=None, help=f"default from ${SEED_ENV}, else 0")
    sp.add_argument("--povm", default="set1", help="set1, set2, optimal, or a POVM JSON file")
    sp.add_argument("--circuit", default="1cnot", help="1cnot, 2cnot, 3cnot, or a circuit JSON file")
    sp.add_argument("--noise", default="off", help="off, default, or a noise JSON file")
    sp.add_argument("--sampler", choices=("joint", "sequential"), default="joint")
    sp.set_defaults(func=cmd_shadow)

    sp = with_output(sub.add_parser("relabel-table", help="permutation strings of the 24 relabel codes"))
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.set_defaults(func=cmd_relabel_table)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IcPovmError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
