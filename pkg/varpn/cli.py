"""Command-line entry point: ``varpn <command> [options]``.

Every command prints one JSON report on standard output with the keys
``command``, ``inputs``, ``verdict``, ``witness``, ``route``, ``timing_ms``
and ``result``. Exit status is 0 when the verdict holds (or the command just
computes something), 1 when it fails and 2 on errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from typing import Any, Callable, Sequence

from . import __version__
from .ansatz import AnsatzSpec, solve_shadows
from .brackets import c_compat, c_star, fn_bracket, generic_argument, generic_degree, schouten
from .cdop import CDOp, ell_E_apply
from .config import Settings, load_settings, set_settings
from .coverings import (
    Side,
    bracket_hh,
    bracket_hn,
    bracket_nn,
    lift_l,
    lift_lstar,
    lift_whitney,
    symmetry_residual,
    to_shadow,
)
from .eqctx import CoveringMode, EquationContext
from .errors import VarPNError
from .gpoly import Role
from .parsing import load_equation, parse_expr, parse_op, parse_vec
from .sampling import random_pn_triple, rng_for
from .verify import (
    ConservationLaw,
    InvarianceKind,
    Verdict,
    generating_function,
    hierarchy,
    identity_suite,
    is_conservation_law,
    is_cosymmetry,
    is_hamiltonian,
    is_invariant,
    is_nijenhuis_recursion,
    is_pn_pair,
    is_symmetry,
    symmetry_tower,
)

logger = logging.getLogger(__name__)

Report = dict[str, Any]


def _report(
    command: str,
    inputs: dict[str, Any],
    verdict: Verdict | None = None,
    result: Any = None,
) -> Report:
    return {
        "command": command,
        "inputs": inputs,
        "verdict": None if verdict is None else verdict.holds,
        "witness": None if verdict is None else verdict.witness_text(),
        "route": None if verdict is None else verdict.route,
        "result": result,
    }


def _eq_inputs(ctx: EquationContext) -> dict[str, Any]:
    return {"equation": ctx.name, "f": [str(e) for e in ctx.f]}


def _op(args: argparse.Namespace, ctx: EquationContext, name: str) -> CDOp:
    return parse_op(getattr(args, name), ctx.m, ctx)


def cmd_check_sym(args: argparse.Namespace, ctx: EquationContext, settings: Settings) -> Report:
    phi = parse_vec(args.phi, ctx=ctx)
    return _report("check-sym", {**_eq_inputs(ctx), "phi": str(phi)}, is_symmetry(ctx, phi))


def cmd_check_cosym(args: argparse.Namespace, ctx: EquationContext, settings: Settings) -> Report:
    psi = parse_vec(args.psi, ctx=ctx, role=Role.COVECTOR)
    return _report("check-cosym", {**_eq_inputs(ctx), "psi": str(psi)}, is_cosymmetry(ctx, psi))


def cmd_check_claw(args: argparse.Namespace, ctx: EquationContext, settings: Settings) -> Report:
    cl = ConservationLaw(parse_expr(args.X, ctx=ctx), parse_expr(args.T, ctx=ctx))
    verdict = is_conservation_law(ctx, cl)
    result = {"generating_function": str(generating_function(ctx, cl))} if verdict else None
    return _report("check-claw", {**_eq_inputs(ctx), "X": str(cl.X), "T": str(cl.T)}, verdict, result)


def cmd_check_ham(args: argparse.Namespace, ctx: EquationContext, settings: Settings) -> Report:
    A = _op(args, ctx, "op")
    verdict = is_hamiltonian(ctx, A, settings)
    result = {"operator_route": is_invariant(ctx, A, InvarianceKind.HAMILTONIAN).holds}
    return _report("check-ham", {**_eq_inputs(ctx), "op": str(A)}, verdict, result)


def cmd_check_rec(args: argparse.Namespace, ctx: EquationContext, settings: Settings) -> Report:
    R = _op(args, ctx, "op")
    verdict = is_invariant(ctx, R, InvarianceKind.RECURSION)
    shadow = to_shadow(R, CoveringMode.L)
    result = {"shadow_route": ell_E_apply(ctx, CoveringMode.L, shadow.value).is_zero}
    return _report("check-rec", {**_eq_inputs(ctx), "op": str(R)}, verdict, result)


def cmd_check_nij(args: argparse.Namespace, ctx: EquationContext, settings: Settings) -> Report:
    R = _op(args, ctx, "op")
    return _report("check-nij", {**_eq_inputs(ctx), "op": str(R)}, is_nijenhuis_recursion(ctx, R, settings))


def cmd_check_pn(args: argparse.Namespace, ctx: EquationContext, settings: Settings) -> Report:
    A, R = _op(args, ctx, "A"), _op(args, ctx, "R")
    return _report("check-pn", {**_eq_inputs(ctx), "A": str(A), "R": str(R)}, is_pn_pair(ctx, A, R, settings))


_OPERATOR_BRACKETS = {
    "schouten": (schouten, Role.COVECTOR, Role.COVECTOR),
    "fn": (fn_bracket, Role.SECTION, Role.SECTION),
    "c": (c_compat, Role.COVECTOR, Role.COVECTOR),
    "cstar": (c_star, Role.COVECTOR, Role.SECTION),
}


def cmd_bracket(args: argparse.Namespace, ctx: EquationContext, settings: Settings) -> Report:
    A, B = _op(args, ctx, "A"), _op(args, ctx, "B")
    inputs = {**_eq_inputs(ctx), "kind": args.kind, "A": str(A), "B": str(B)}
    if args.kind in _OPERATOR_BRACKETS:
        bracket, role1, role2 = _OPERATOR_BRACKETS[args.kind]
        degree = generic_degree(ctx, A, B, slack=settings.generic_slack)
        arg1 = parse_vec(args.arg1, ctx=ctx, role=role1) if args.arg1 else generic_argument(ctx.m, "a", degree, role1)
        arg2 = parse_vec(args.arg2, ctx=ctx, role=role2) if args.arg2 else generic_argument(ctx.m, "b", degree, role2)
        inputs.update(arg1=str(arg1), arg2=str(arg2))
        value = bracket(ctx, CoveringMode.PLAIN, A, B, arg1, arg2)
    else:
        first = CoveringMode.L if args.kind == "nn" else CoveringMode.LSTAR
        second = CoveringMode.LSTAR if args.kind == "hh" else CoveringMode.L
        s1, s2 = to_shadow(A, first), to_shadow(B, second)
        fn = {"hh": bracket_hh, "nn": bracket_nn, "hn": bracket_hn}[args.kind]
        value = fn(ctx, s1, s2)
    verdict = Verdict.check(value, args.kind)
    return _report("bracket", inputs, verdict, {"value": str(value)})


def cmd_hierarchy(args: argparse.Namespace, ctx: EquationContext, settings: Settings) -> Report:
    A, R = _op(args, ctx, "A"), _op(args, ctx, "R")
    h = hierarchy(ctx, A, R, args.n, check_auxiliary=args.auxiliary, settings=settings)
    result = {
        "operators": [str(op) for op in h.operators],
        "matrix": [[v.holds for v in row] for row in h.matrix],
    }
    if args.auxiliary:
        result["auxiliary"] = {f"{i},{j}": v.holds for (i, j), v in sorted(h.auxiliary.items())}
    failing = next((v for row in h.matrix for v in row if not v), None)
    failing = failing or next((v for v in h.auxiliary.values() if not v), None)
    verdict = failing or Verdict(True, None, "hierarchy")
    return _report("hierarchy", {**_eq_inputs(ctx), "A": str(A), "R": str(R), "n": args.n}, verdict, result)


def cmd_identities(args: argparse.Namespace, ctx: EquationContext, settings: Settings) -> Report:
    seed = settings.default_seed if args.seed is None else args.seed
    trials = settings.default_trials if args.trials is None else args.trials
    rng = rng_for(seed)
    verdict = Verdict(True, None, "identities")
    for trial in range(trials):
        triple = random_pn_triple(rng, ctx.m, order=args.order)
        verdict = identity_suite(ctx, triple.A, triple.B, triple.R, 1, seed=rng.randrange(2**31))
        if not verdict:
            logger.info("identity %s fails on draw %d", verdict.route, trial)
            break
    inputs = {**_eq_inputs(ctx), "trials": trials, "seed": seed, "order": args.order}
    return _report("identities", inputs, verdict)


def cmd_search(args: argparse.Namespace, ctx: EquationContext, settings: Settings) -> Report:
    spec = AnsatzSpec(
        CoveringMode.parse(args.covering),
        args.order,
        max_jet_order=args.jets,
        max_degree=args.degree,
        allow_xt=args.xt is not None,
        xt_degree=args.xt or 0,
    )
    shadows = solve_shadows(ctx, spec)
    inputs = {
        **_eq_inputs(ctx),
        "covering": spec.covering.value,
        "order": spec.max_D_order,
        "degree": spec.max_degree,
        "jets": spec.max_jet_order,
    }
    result = {"dimension": len(shadows), "basis": [str(s.value) for s in shadows]}
    return _report("search", inputs, None, result)


def cmd_lift(args: argparse.Namespace, ctx: EquationContext, settings: Settings) -> Report:
    op = _op(args, ctx, "op")
    covering = CoveringMode.parse(args.covering)
    if covering is CoveringMode.LSTAR:
        lifted = lift_lstar(ctx, to_shadow(op, covering))
    elif covering is CoveringMode.L:
        lifted = lift_l(ctx, to_shadow(op, covering))
    elif covering is CoveringMode.WHITNEY:
        side = Side(args.side)
        family = CoveringMode.LSTAR if side is Side.FROM_LSTAR else CoveringMode.L
        lifted = lift_whitney(ctx, to_shadow(op, family), side)
    else:
        raise VarPNError("lift needs the lstar, l or whitney covering")
    residual = symmetry_residual(ctx, covering, lifted)
    result = {
        "shadow": str(lifted.base),
        "completions": {kind.name.lower(): str(v) for kind, v in sorted(lifted.completions.items())},
        "residual": str(residual),
    }
    inputs = {**_eq_inputs(ctx), "op": str(op), "covering": covering.value, "side": args.side}
    return _report("lift", inputs, Verdict.check(residual, "symmetry"), result)


def cmd_tower(args: argparse.Namespace, ctx: EquationContext, settings: Settings) -> Report:
    R = _op(args, ctx, "R")
    phi = parse_vec(args.phi, ctx=ctx)
    tower = symmetry_tower(ctx, R, phi, args.n)
    failing = next((v for _, v in tower if not v), None)
    result = {"tower": [{"section": str(s), "symmetry": v.holds} for s, v in tower]}
    inputs = {**_eq_inputs(ctx), "R": str(R), "phi": str(phi), "n": args.n}
    return _report("tower", inputs, failing or Verdict(True, None, "tower"), result)


Handler = Callable[[argparse.Namespace, EquationContext, Settings], Report]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="varpn",
        description="Verify and discover Poisson-Nijenhuis structures on evolution equations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="YAML settings file")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, handler: Handler, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--eq", required=True, help="equation file or bundled name (kdv, linear3, ...)")
        p.set_defaults(handler=handler, seed=None)
        return p

    command("check-sym", cmd_check_sym, "is a section a symmetry").add_argument("--phi", required=True)
    command("check-cosym", cmd_check_cosym, "is a covector a cosymmetry").add_argument("--psi", required=True)
    p = command("check-claw", cmd_check_claw, "is X dx + T dt a conservation law")
    p.add_argument("--X", required=True)
    p.add_argument("--T", required=True)
    command("check-ham", cmd_check_ham, "is an operator Hamiltonian").add_argument("--op", required=True)
    command("check-rec", cmd_check_rec, "is an operator a recursion operator").add_argument("--op", required=True)
    command("check-nij", cmd_check_nij, "is an operator a Nijenhuis recursion operator").add_argument(
        "--op", required=True
    )
    p = command("check-pn", cmd_check_pn, "is (A, R) a Poisson-Nijenhuis pair")
    p.add_argument("--A", required=True)
    p.add_argument("--R", required=True)
    p = command("bracket", cmd_bracket, "evaluate a bracket of two operators")
    p.add_argument("--kind", required=True, choices=["schouten", "fn", "c", "cstar", "hh", "nn", "hn"])
    p.add_argument("--A", required=True)
    p.add_argument("--B", required=True)
    p.add_argument("--arg1", help="first argument (generic when omitted)")
    p.add_argument("--arg2", help="second argument (generic when omitted)")
    p = command("hierarchy", cmd_hierarchy, "iterate R^i A and check pairwise compatibility")
    p.add_argument("--A", required=True)
    p.add_argument("--R", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--auxiliary", action="store_true", help="also check A(C(R^i A, R^j))")
    p = command("identities", cmd_identities, "run the proof identities on random operators")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--order", type=int, default=1)
    p = command("search", cmd_search, "find shadows by undetermined coefficients")
    p.add_argument("--covering", required=True, choices=["lstar", "l"])
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--degree", type=int, default=0)
    p.add_argument("--jets", type=int, default=0)
    p.add_argument("--xt", type=int, help="allow explicit x, t dependence up to this degree")
    p = command("lift", cmd_lift, "lift a shadow to a symmetry of a covering")
    p.add_argument("--covering", required=True, choices=["lstar", "l", "whitney"])
    p.add_argument("--op", required=True)
    p.add_argument("--side", choices=["lstar", "l"], default="lstar")
    p = command("tower", cmd_tower, "apply a recursion operator repeatedly to a symmetry")
    p.add_argument("--R", required=True)
    p.add_argument("--phi", required=True)
    p.add_argument("--n", type=int, required=True)
    return parser


def configure_logging(verbosity: int, default: str = "WARNING") -> None:
    level = {0: default, 1: "INFO"}.get(verbosity, "DEBUG")
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def run_command(args: argparse.Namespace, settings: Settings) -> Report:
    set_settings(settings)
    ctx = load_equation(args.eq)
    start = time.perf_counter()
    report = args.handler(args, ctx, settings)
    elapsed = (time.perf_counter() - start) * 1000.0
    report["timing_ms"] = None if args.seed is not None else round(elapsed, 3)
    return report


def exit_code(report: Report) -> int:
    return 1 if report["verdict"] is False else 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = load_settings(args.config)
        configure_logging(args.verbose, settings.log_level)
        report = run_command(args, settings)
    except VarPNError as exc:
        print(f"varpn: error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(report, indent=2, sort_keys=True))
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
