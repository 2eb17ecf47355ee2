"""Command-line entry point: ``sheafhist <command> --scenario <path|fixture>``.

Exit codes: 0 success, 1 scenario or input error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from itertools import combinations
from pathlib import Path

import numpy as np

from . import __version__
from . import linalg as la
from .daseinization import dasein, dasein_at, pseudo_state, spectral, truth_value
from .decoherence import check_additivity, check_negation, is_consistent
from .errors import DisjointnessError, ScenarioError, SearchCapExceeded, SheafHistError
from .hpo import entangled_demo
from .presheaf import DEFAULT_SECTION_CAP, global_sections, includes, meet_sub
from .report import Report, global_json, matrix_json, scalar_json, sieve_json, subobject_json
from .scenario import FIXTURES, Scenario, load_scenario
from .temporal import classifier_comparison, n_time_truth, two_time_truth
from . import verify as vf

COMMANDS = ("contexts", "daseinize", "truth", "history-truth", "verify-heyting", "verify-tensor",
            "verify-hpo", "ks", "decohere", "demo-entangled")

EXIT_OK, EXIT_SCENARIO, EXIT_VERIFY = 0, 1, 2


# --------------------------------------------------------------------------
# commands: each returns (results dict, passed or None)


def cmd_contexts(sc: Scenario, opts) -> tuple:
    out = {}
    for slot, poset in sc.posets.items():
        rows = {}
        for k, c in enumerate(poset.contexts):
            rows[c.name] = {
                "minimals": len(c),
                "below": sorted(poset.labels[j] for j in poset.down(k) if j != k),
            }
        out[f"slot {slot}"] = {
            "dim": poset.dim,
            "contexts": rows,
            "hasse": [[poset.labels[a], poset.labels[b]] for a, b in poset.hasse_edges],
        }
    if sc.tensor_contexts:
        out["tensor"] = {n: {"minimals": len(c), "dim": c.dim} for n, c in sc.tensor_contexts.items()}
    return out, None


def _slots_for(sc: Scenario, p) -> list:
    return [k for k, d in enumerate(sc.dims) if d == p.shape[0]]


def cmd_daseinize(sc: Scenario, opts) -> tuple:
    names = sc.checks.get("daseinize") or sorted(sc.projectors)
    out = {}
    for name in names:
        p = sc.projectors[name]
        for slot in _slots_for(sc, p):
            poset = sc.posets[slot]
            d = dasein(p, poset)
            out[f"{name} @ slot {slot}"] = {
                "points": subobject_json(d.subobject),
                "projectors": {c.name: matrix_json(dasein_at(p, c)) for c in poset.contexts},
            }
    return out, None


def cmd_truth(sc: Scenario, opts) -> tuple:
    out = []
    for t in sc.checks.get("truth", []):
        slot = t.get("slot", 0)
        poset = sc.posets[slot]
        v = truth_value(pseudo_state(sc.kets[t["state"]], poset), dasein(sc.projectors[t["proposition"]], poset))
        out.append({
            "state": t["state"],
            "proposition": t["proposition"],
            "slot": slot,
            "sieves": global_json(v),
            "totally_true": v.is_totally_true(),
            "totally_false": v.is_totally_false(),
        })
    return {"truth_values": out}, None


def cmd_history_truth(sc: Scenario, opts) -> tuple:
    out = []
    ok = True
    for t in sc.checks.get("history_truth", []):
        props = t["propositions"]
        ss = [dasein(sc.projectors[q], sc.posets[k]) for k, q in enumerate(props)]
        us = [sc.unitaries[u] for u in t.get("evolution", [])]
        psi = sc.kets[t["initial"]]
        entry = {"initial": t["initial"], "propositions": props, "evolution": t.get("evolution", [])}
        if len(ss) == 2:
            r = two_time_truth(psi, us[0], ss[0], ss[1])
            entry["components"] = [global_json(v) for v in r.single]
            prod = r.product_sieve.poset
            entry["pairs"] = {
                prod.labels[k]: [sieve_json(prod.left, i, s1), sieve_json(prod.right, j, s2)]
                for k, ((s1, s2), (i, j)) in enumerate(zip(r.pair.assignment, prod.pairs))
            }
            entry["factorizes"] = r.factorizes
            ok &= r.factorizes
        else:
            r = n_time_truth(psi, us, ss)
            comps = [r] if len(ss) == 1 else list(r.components)
            entry["components"] = [global_json(v) for v in comps]
        out.append(entry)
    return {"histories": out}, (ok if out else None)


def _verify_opts(sc: Scenario, opts) -> tuple:
    cfg = sc.checks.get("verify", {})
    samples = opts.samples if opts.samples is not None else int(cfg.get("samples", 100))
    seed = opts.seed if opts.seed is not None else int(cfg.get("seed", 0))
    return samples, seed


def _strict_meet_witnesses(sc: Scenario, poset) -> list:
    """Named projector pairs of the scenario whose daseinized meet is strictly below."""
    names = [n for n in sorted(sc.projectors) if sc.projectors[n].shape[0] == poset.dim]
    found = []
    for a, b in combinations(names, 2):
        p, q = sc.projectors[a], sc.projectors[b]
        lhs = dasein(la.meet(p, q), poset).subobject
        rhs = meet_sub(dasein(p, poset).subobject, dasein(q, poset).subobject)
        if lhs != rhs and includes(lhs, rhs):
            found.append((f"{a},{b}", p, q))
    return found


def cmd_verify_heyting(sc: Scenario, opts) -> tuple:
    samples, seed = _verify_opts(sc, opts)
    out, ok = {}, True
    for slot, poset in sc.posets.items():
        hs = vf.heyting_suite(spectral(poset), samples, seed)
        ls = vf.dasein_lattice_suite(poset, samples, seed + 1, _strict_meet_witnesses(sc, poset))
        out[f"slot {slot}"] = {"heyting": hs.to_dict(), "dasein_lattice": ls.to_dict()}
        ok &= hs.passed and ls.passed
    return out, ok


def _pair(sc: Scenario) -> tuple:
    left = sc.posets[0]
    right = sc.posets[1] if len(sc.posets) > 1 else sc.posets[0]
    return left, right


def cmd_verify_tensor(sc: Scenario, opts) -> tuple:
    samples, seed = _verify_opts(sc, opts)
    left, right = _pair(sc)
    try:
        # the exhaustive count only makes sense for tiny factors
        small = len(spectral(left).all_subobjects(20)) * len(spectral(right).all_subobjects(20)) <= 400
    except SearchCapExceeded:
        small = False
    res = vf.tensor_suite(spectral(left), spectral(right), samples, seed, exhaustive=small)
    out = {"tensor": res.to_dict()}
    if left.n * right.n <= 36:
        out["classifier"] = classifier_comparison(left, right)
    ok = res.passed
    if left.dim == right.dim:
        hist = vf.history_suite(left, right, samples, seed + 1)
        bad, total = vf.check_truth_values(hist.truth_values)
        hist.checks["truth-value-invariants"] = [bad, total]
        out["history"] = hist.to_dict()
        ok &= hist.passed
    return out, ok


def cmd_verify_hpo(sc: Scenario, opts) -> tuple:
    samples, seed = _verify_opts(sc, opts)
    left, right = _pair(sc)
    res = vf.hpo_suite(left, right, samples, seed)
    return {"hpo": res.to_dict()}, res.passed


def cmd_ks(sc: Scenario, opts) -> tuple:
    cfg = sc.checks.get("ks", {})
    out, ok = {}, None
    for slot, poset in sc.posets.items():
        n = len(global_sections(spectral(poset), opts.max_sections))
        entry = {"contexts": poset.n, "global sections": n}
        if "expect" in cfg and slot == cfg.get("slot", 0):
            entry["expected"] = cfg["expect"]
            ok = (ok is not False) and n == cfg["expect"]
        out[f"slot {slot}"] = entry
    return out, ok


def cmd_decohere(sc: Scenario, opts) -> tuple:
    cfg = sc.checks.get("decohere", {})
    rho, ev = sc.density, sc.evolution
    if rho is None:
        raise ScenarioError("decohere needs a density section", obj="density")
    t0 = cfg.get("t0")
    out, ok = [], True
    for fam in cfg.get("families", []):
        names = fam["histories"] if isinstance(fam, dict) else fam
        hs = [sc.histories[n] for n in names]
        rep = is_consistent(hs, rho, ev, t0, real_part_only=bool(cfg.get("real_part_only", False)))
        entry = {
            "histories": names,
            "d": matrix_json(rep.d),
            "consistent": rep.consistent,
            "probability_sum": scalar_json(rep.probability_sum),
        }
        identities = []
        for a, b in combinations(range(len(hs)), 2):
            try:
                add = all(check_additivity(hs[a], hs[b], c, rho, ev, t0) for c in hs)
            except DisjointnessError:
                continue
            identities.append({"pair": [names[a], names[b]], "additivity": add})
            ok &= add
        neg = all(check_negation(x, c, rho, ev, t0) for x in hs for c in hs)
        entry["negation"] = neg
        entry["additivity"] = identities
        ok &= neg
        if isinstance(fam, dict) and "expect_consistent" in fam:
            entry["expected_consistent"] = fam["expect_consistent"]
            ok &= rep.consistent == fam["expect_consistent"]
            if rep.consistent:
                ok &= abs(rep.probability_sum - 1) <= la.epsilon()
        out.append(entry)
    return {"families": out}, ok


def cmd_demo_entangled(sc: Scenario, opts) -> tuple:
    demo = entangled_demo(exact=True)
    out = {k: (matrix_json(v) if isinstance(v, np.ndarray) else v) for k, v in demo.items()}
    ok = all(demo[k] for k in (
        "ent_differs_from_ud_plus_du", "ent_strictly_below_ud_plus_du", "difference_is_projector",
        "dasein_at_product_is_ud_plus_du", "dasein_at_entangled_is_ent", "entangled_strictly_below_product",
    )) and demo["difference_rank"] == 1
    cfg = sc.checks.get("entangled")
    if cfg:
        p = sc.projectors[cfg["projector"]]
        out["scenario"] = {
            name: matrix_json(dasein_at(p, sc.tensor_contexts[name])) for name in cfg.get("contexts", [])
        }
    return out, ok


HANDLERS = {
    "contexts": cmd_contexts,
    "daseinize": cmd_daseinize,
    "truth": cmd_truth,
    "history-truth": cmd_history_truth,
    "verify-heyting": cmd_verify_heyting,
    "verify-tensor": cmd_verify_tensor,
    "verify-hpo": cmd_verify_hpo,
    "ks": cmd_ks,
    "decohere": cmd_decohere,
    "demo-entangled": cmd_demo_entangled,
}


def run(command: str, sc: Scenario, opts=None) -> Report:
    if command not in HANDLERS:
        raise ValueError(f"unknown command {command!r}")
    opts = opts or build_parser().parse_args([command, "--scenario", sc.source or sc.name])
    results, passed = HANDLERS[command](sc, opts)
    return Report(command, sc.name, sc.digest, results, passed, sc.exact)


# --------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sheafhist", description="Truth values of propositions and histories over context posets.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help=f"scenario file or fixture name ({', '.join(FIXTURES)})")
        p.add_argument("--out", help="also write the JSON report here")
        p.add_argument("--json", action="store_true", help="print JSON instead of text")
        p.add_argument("--epsilon", type=float, default=None, help="numerical tolerance")
        p.add_argument("--exact", action="store_true", help="rational arithmetic where the inputs allow it")
        p.add_argument("--max-sections", type=int, default=DEFAULT_SECTION_CAP)
        p.add_argument("--samples", type=int, default=None, help="random samples for verify-* suites")
        p.add_argument("--seed", type=int, default=None)
    r = sub.add_parser("render", help="re-render a saved JSON report as text")
    r.add_argument("report")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    opts = ap.parse_args(argv)
    if opts.command == "render":
        try:
            text = Path(opts.report).read_text(encoding="utf-8")
            sys.stdout.write(Report.from_json(text).render_text())
        except (OSError, ValueError, KeyError, TypeError) as exc:
            print(f"error: cannot render {opts.report}: {exc}", file=sys.stderr)
            return EXIT_SCENARIO
        return EXIT_OK
    try:
        with la.precision(epsilon=opts.epsilon):
            sc = load_scenario(opts.scenario, exact=opts.exact)
            report = run(opts.command, sc, opts)
    except SheafHistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    if opts.out:
        Path(opts.out).write_text(report.to_json(), encoding="utf-8")
    sys.stdout.write(report.to_json() if opts.json else report.render_text())
    if report.passed is False:
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
