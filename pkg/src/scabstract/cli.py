"""Command-line front end.

Exit status: 0 when the query succeeds or the property holds, 1 when a
checked property fails, 2 for usage and input errors, 3 when a search
budget is exhausted.
"""
from __future__ import annotations

import argparse
import json
import sys

from .abstraction import check_by_bisimulation, check_complete, check_sound
from .bat import DEFAULT_STATE_BUDGET, reachable_states
from .dsl import parse_actions, parse_formula
from .errors import (AmbiguousExplanation, BudgetExceeded, NoPlan, NoRefinement,
                     NonExecutableTrace, SoundnessAssumptionViolated, WorkbenchError)
from .kernel import TRUE
from .monitor import forecast_next, invert, verify_constraint1, verify_constraint2
from .planning import (PlanRequest, plan, project, refine_per_model, refine_plan,
                       refine_uniform)
from .project import FIXTURES, load_fixture, parse_project

VERBS = ("validate", "simulate", "check-sd", "check-sound", "check-complete", "plan",
         "refine", "project", "explain", "forecast", "verify-constraints")

OK, FAILS, USAGE, BUDGET = 0, 1, 2, 3


class Report:
    """Collects text lines and a structured payload; emits exactly one of them."""

    def __init__(self, verb: str):
        self.lines = []
        self.data = {"command": verb}

    def add(self, *lines):
        self.lines.extend(lines)

    def emit(self, fmt: str, out):
        if fmt == "json":
            out.write(json.dumps(self.data, indent=2, sort_keys=True) + "\n")
        else:
            out.write("\n".join(self.lines) + "\n")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="scabstract",
                                 description="Abstraction workbench for finite situation-calculus theories.")
    ap.add_argument("verb", choices=VERBS)
    src = ap.add_argument_group("inputs")
    src.add_argument("--hl", help="high-level theory file")
    src.add_argument("--ll", help="low-level theory file")
    src.add_argument("--map", help="refinement mapping file")
    src.add_argument("--fixture", choices=sorted(FIXTURES), help="use a bundled fixture instead of files")
    ap.add_argument("--budget", type=int, default=DEFAULT_STATE_BUDGET, help="state-space node cap")
    ap.add_argument("--mode", choices=("entailed", "satisfiable"), default="entailed")
    ap.add_argument("--model", type=int, default=None, help="low-level initial model index")
    ap.add_argument("--horizon", type=int, default=None, help="maximum plan length")
    ap.add_argument("--trace", default=None, help="comma-separated ground actions")
    ap.add_argument("--plan", default=None, help="comma-separated ground high-level actions")
    ap.add_argument("--goal", default=None, help="goal formula")
    ap.add_argument("--level", choices=("high", "low"), default=None)
    ap.add_argument("--method", choices=("theory", "bisimulation", "both"), default="theory")
    ap.add_argument("--refine-mode", choices=("per-model", "uniform"), default="per-model")
    ap.add_argument("--alternatives", action="store_true", help="list every execution per step")
    ap.add_argument("--query", default=None, help="extra high-level actions to classify (forecast)")
    ap.add_argument("--lts", choices=("edges", "dot"), default=None,
                    help="simulate without a trace: print the reachable state graph")
    ap.add_argument("--no-sd-check", action="store_true", help="skip the template check at load time")
    ap.add_argument("--format", choices=("text", "json"), default="text")
    return ap


def load(args):
    if args.fixture:
        if args.hl or args.ll or args.map:
            raise WorkbenchError("give either --fixture or --hl/--ll/--map, not both")
        return load_fixture(args.fixture, check_sd=not args.no_sd_check)
    if not (args.hl and args.ll and args.map):
        raise WorkbenchError("--hl, --ll and --map are all required (or use --fixture)")
    return parse_project(args.hl, args.ll, args.map, check_sd=not args.no_sd_check,
                         budget=args.budget)


def _models(args, bat):
    if args.model is None:
        return list(range(len(bat.initial_models)))
    if not 0 <= args.model < len(bat.initial_models):
        raise WorkbenchError(f"model index {args.model} out of range")
    return [args.model]


def _seq(xs):
    return "[" + ", ".join(map(str, xs)) + "]"


# -- verbs --------------------------------------------------------------------

def cmd_validate(p, args, rep):
    rep.add("VALID",
            f"high level: {len(p.hl.actions)} action types, {len(p.hl.sig.fluents)} fluents, "
            f"{len(p.hl.initial_models)} initial models",
            f"low level: {len(p.ll.actions)} action types, {len(p.ll.sig.fluents)} fluents, "
            f"{len(p.ll.initial_models)} initial models",
            f"objects: {len(p.hl.sig.domain)}")
    rep.data.update(valid=True, hl_actions=[a.name for a in p.hl.actions],
                    ll_actions=[a.name for a in p.ll.actions],
                    hl_models=len(p.hl.initial_models), ll_models=len(p.ll.initial_models))
    return OK


def cmd_simulate(p, args, rep):
    bat = p.hl if args.level == "high" else p.ll
    if args.trace is None:
        lts = reachable_states(bat, budget=args.budget)
        text = lts.to_dot() if args.lts == "dot" else lts.to_edge_list()
        rep.add(text.rstrip("\n"))
        rep.data.update(nodes=len(lts.nodes), edges=lts.edge_count(), graph=text)
        return OK
    trace = parse_actions(args.trace, bat)
    status = OK
    runs = []
    for i in _models(args, bat):
        w = bat.initial_models[i]
        rep.add(f"model {i}: {w}")
        steps = []
        for k, a in enumerate(trace):
            if not bat.poss(a, w):
                rep.add(f"  {k + 1}. {a}: NOT EXECUTABLE")
                steps.append({"action": str(a), "executable": False})
                status = FAILS
                break
            w = bat.step(a, w)
            rep.add(f"  {k + 1}. {a} -> {w}")
            steps.append({"action": str(a), "executable": True, "state": str(w)})
        runs.append({"model": i, "steps": steps})
    rep.data["runs"] = runs
    return status


def cmd_check_sd(p, args, rep):
    states = reachable_states(p.ll, budget=args.budget).nodes
    bad = p.mapping.check_templates_sd(states)
    if bad is None:
        rep.add("SITUATION-DETERMINED", f"checked every template instance in {len(states)} reachable states")
        rep.data.update(determined=True, states=len(states))
        return OK
    alpha, w, res = bad
    rep.add("NOT SITUATION-DETERMINED", f"template of {alpha} in state {w}",
            f"after {_seq(res.witness)} the remaining program may be any of:",
            *[f"  {r}" for r in map(str, res.residuals)])
    rep.data.update(determined=False, action=str(alpha), trace=[str(a) for a in res.witness])
    return FAILS


def _verdict_lines(rep, verdict, label):
    if getattr(verdict, label):
        rep.data.setdefault("verdicts", []).append(verdict.to_dict())
        return
    for w in verdict.witnesses:
        rep.add(*w.lines())
    rep.data.setdefault("verdicts", []).append(verdict.to_dict())


def cmd_check_sound(p, args, rep):
    results = []
    if args.method in ("theory", "both"):
        v = check_sound(p.mapping, args.budget)
        results.append(v)
    if args.method in ("bisimulation", "both"):
        results.append(check_by_bisimulation(p.mapping, args.budget))
    answers = {v.sound for v in results}
    if len(answers) > 1:
        rep.add("INCONSISTENT: the theory-level and model-level checks disagree")
        for v in results:
            _verdict_lines(rep, v, "sound")
        rep.data["sound"] = None
        return FAILS
    sound = answers.pop()
    rep.add("SOUND" if sound else "NOT SOUND")
    for v in results:
        _verdict_lines(rep, v, "sound")
    rep.data["sound"] = sound
    return OK if sound else FAILS


def cmd_check_complete(p, args, rep):
    results = []
    if args.method in ("theory", "both"):
        results.append(check_complete(p.mapping, budget=args.budget))
    if args.method in ("bisimulation", "both"):
        results.append(check_by_bisimulation(p.mapping, args.budget))
    answers = {v.complete for v in results}
    if len(answers) > 1:
        rep.add("INCONSISTENT: the theory-level and model-level checks disagree")
        for v in results:
            _verdict_lines(rep, v, "complete")
        rep.data["complete"] = None
        return FAILS
    complete = answers.pop()
    rep.add("COMPLETE" if complete else "NOT COMPLETE")
    for v in results:
        _verdict_lines(rep, v, "complete")
    rep.data["complete"] = complete
    return OK if complete else FAILS


def _goal(args, bat):
    if args.goal is None:
        return TRUE
    return parse_formula(args.goal, bat.sig)


def cmd_plan(p, args, rep):
    bat = p.ll if args.level == "low" else p.hl
    req = PlanRequest(_goal(args, bat), args.horizon, args.mode,
                      "low" if args.level == "low" else "high")
    try:
        result = plan(bat, req, args.budget)
    except NoPlan as exc:
        rep.add("NO PLAN", str(exc))
        rep.data.update(plan=None, reason=type(exc).__name__)
        return FAILS
    rep.add(f"PLAN ({len(result)} steps)", *[f"  {i + 1}. {a}" for i, a in enumerate(result)])
    rep.data["plan"] = [str(a) for a in result]
    return OK


def _hl_plan(p, args):
    if args.plan is not None:
        return parse_actions(args.plan, p.hl) if args.plan.strip() else []
    if args.goal is None:
        raise WorkbenchError("give --plan or --goal")
    return plan(p.hl, PlanRequest(_goal(args, p.hl), args.horizon, args.mode), args.budget)


def cmd_refine(p, args, rep):
    hl_plan = _hl_plan(p, args)
    rep.add("plan: " + _seq(hl_plan))
    rep.data["hl_plan"] = [str(a) for a in hl_plan]
    try:
        if args.refine_mode == "uniform":
            results = {None: refine_uniform(hl_plan, p.mapping)}
        elif args.model is not None:
            _models(args, p.ll)
            results = {args.model: refine_plan(hl_plan, p.mapping, args.model, args.alternatives)}
        else:
            results = refine_per_model(hl_plan, p.mapping, args.alternatives)
    except (NoRefinement, SoundnessAssumptionViolated) as exc:
        rep.add(f"NO REFINEMENT at step {exc.step} ({exc.action})", str(exc))
        rep.data.update(refined=False, step=exc.step, action=str(exc.action),
                        reason=type(exc).__name__)
        return FAILS
    rep.add("REFINED")
    rep.data["refinements"] = []
    for model, r in results.items():
        rep.add("uniform trace:" if model is None else f"low-level model {model}:")
        rep.add(*[f"  {line}" for line in r.lines()])
        rep.add(f"  trace: {_seq(r.ll_trace)}")
        d = r.to_dict()
        if r.alternatives:
            rep.add("  alternatives:")
            d["alternatives"] = []
            for (alpha, _), execs in zip(r.segments, r.alternatives):
                rep.add(f"    {alpha}:", *[f"      {_seq(ex.trace)}" for ex in execs])
                d["alternatives"].append([[str(a) for a in ex.trace] for ex in execs])
        rep.data["refinements"].append(d)
    return OK


def cmd_project(p, args, rep):
    hl_plan = parse_actions(args.plan or "", p.hl) if args.plan else []
    verdict = project(hl_plan, _goal(args, p.hl), p.hl)
    rep.add(verdict.upper())
    rep.data.update(plan=[str(a) for a in hl_plan], result=verdict)
    return OK


def _explanations(p, args, rep):
    if args.trace is None:
        raise WorkbenchError("--trace is required")
    trace = parse_actions(args.trace, p.ll) if args.trace.strip() else []
    c1 = verify_constraint1(p.mapping, args.budget)
    if not c1.holds:
        rep.add("warning: refinements of distinct high-level actions overlap; "
                "the explanation may not be unique")
    out = []
    for i in _models(args, p.ll):
        out.append(invert(trace, p.mapping, i, require_constraint=c1.holds))
    return out


def cmd_explain(p, args, rep):
    try:
        exps = _explanations(p, args, rep)
    except AmbiguousExplanation as exc:
        rep.add("AMBIGUOUS", str(exc))
        rep.data.update(ambiguous=[[str(a) for a in c] for c in exc.candidates])
        return FAILS
    except NonExecutableTrace as exc:
        rep.add("NOT EXECUTABLE", str(exc))
        rep.data.update(executable=False, index=exc.index)
        return FAILS
    rep.data["explanations"] = []
    for e in exps:
        rep.add(f"low-level model {e.model}: {_seq(e.hl_sequence)}")
        rep.add(*[f"  {line}" for line in e.lines()])
        rep.data["explanations"].append(e.to_dict())
    return OK


def cmd_forecast(p, args, rep):
    query = parse_actions(args.query, p.hl) if args.query else []
    if args.plan is not None:
        seqs = [(None, parse_actions(args.plan, p.hl) if args.plan.strip() else [])]
    else:
        try:
            seqs = [(e.model, e.hl_sequence) for e in _explanations(p, args, rep)]
        except AmbiguousExplanation as exc:
            rep.add("AMBIGUOUS", str(exc))
            return FAILS
        except NonExecutableTrace as exc:
            rep.add("NOT EXECUTABLE", str(exc))
            return FAILS
    rep.data["forecasts"] = []
    for model, seq in seqs:
        f = forecast_next(seq, p.hl)
        head = f"after {_seq(seq)}" + ("" if model is None else f" (low-level model {model})")
        rep.add(head + ":", *[f"  {line}" for line in f.lines(query)])
        rep.data["forecasts"].append({"model": model, **f.to_dict(query)})
    return OK


def cmd_verify_constraints(p, args, rep):
    c1 = verify_constraint1(p.mapping, args.budget)
    c2 = verify_constraint2(p.mapping, args.budget)
    ok = c1.holds and c2.holds
    rep.add("CONSTRAINTS HOLD" if ok else "CONSTRAINTS FAIL", *c1.lines(), *c2.lines())
    rep.data.update(holds=ok, constraint1=c1.to_dict(), constraint2=c2.to_dict())
    return OK if ok else FAILS


COMMANDS = {
    "validate": cmd_validate, "simulate": cmd_simulate, "check-sd": cmd_check_sd,
    "check-sound": cmd_check_sound, "check-complete": cmd_check_complete, "plan": cmd_plan,
    "refine": cmd_refine, "project": cmd_project, "explain": cmd_explain,
    "forecast": cmd_forecast, "verify-constraints": cmd_verify_constraints,
}


def run_command(verb: str, project_, args, out=None) -> int:
    """Run one verb against a loaded project; writes the report, returns the exit status."""
    out = out or sys.stdout
    rep = Report(verb)
    try:
        status = COMMANDS[verb](project_, args, rep)
    except BudgetExceeded as exc:
        rep.add(f"BUDGET EXCEEDED: {exc}")
        rep.data["error"] = str(exc)
        status = BUDGET
    except WorkbenchError as exc:
        rep.add(f"error: {exc}")
        rep.data["error"] = str(exc)
        status = USAGE
    rep.data["exit"] = status
    rep.emit(args.format, out)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        p = load(args)
    except BudgetExceeded as exc:
        print(f"BUDGET EXCEEDED: {exc}", file=sys.stderr)
        return BUDGET
    except (WorkbenchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    return run_command(args.verb, p, args)


if __name__ == "__main__":
    sys.exit(main())
