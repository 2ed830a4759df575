"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
import time
from dataclasses import replace
from fractions import Fraction

import pytest

from netslice.formulation import build_relaxation, fix_placement, set_refinement_objective
from netslice.harness import ExperimentConfig, run_experiment
from netslice.lpcore import solve_lp
from netslice.model import GeneratorParams, generate_instance
from netslice.oracle import exact_solve
from netslice.placement import baseline_round, round_placement
from netslice.routing import (FixedPlacementInfeasible, decompose_flow, refine_routing,
                              segment_endpoints)
from netslice.solution import SliceSolution, run_method
from netslice.validate import check_placement, validate_solution

from conftest import tiny_family
from lp_suite import hand_cases, random_cases


@pytest.fixture
def report(capsys):
    def emit(num, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {num}: {detail}")
        assert ok, detail
    return emit


# -- tiny instances with oracle answers ---------------------------------------

@pytest.fixture(scope="module")
def tiny():
    params = tiny_family(40) + [replace(p, link_cap_range=(1, 8), seed=p.seed + 5000)
                                for p in tiny_family(10)]
    out, t0 = [], time.perf_counter()
    for p in params:
        inst = generate_instance(p)
        model, _ = build_relaxation(inst)
        out.append({"inst": inst, "oracle": exact_solve(inst), "lp": solve_lp(model),
                    "lprr": run_method(inst, "lprr")})
    return out, time.perf_counter() - t0


def test_c1_relaxation_soundness(tiny, report):
    tiny, secs = tiny
    optimal = [c for c in tiny if c["oracle"].status == "optimal"]
    gaps = [c["lp"].objective - c["oracle"].objective for c in optimal]
    ok = len(optimal) >= 30 and all(g <= 1e-6 for g in gaps) and secs < 120
    report(1, ok, f"{len(optimal)} oracle-optimal tiny instances, max LP - oracle = {max(gaps):.3g} "
                  f"(limit 1e-6) [{secs:.1f}s incl. oracle and LPRR]")


def test_c5_oracle_agreement(tiny, report):
    tiny, secs = tiny
    infeasible = [c for c in tiny if c["oracle"].status == "infeasible"]
    bad_a = [c for c in infeasible
             if c["lprr"].feasible and validate_solution(c["inst"], c["lprr"].to_dict(c["inst"])).feasible]
    both = [c for c in tiny if c["oracle"].status == "optimal" and c["lprr"].feasible]
    bad_b = [c for c in both if c["lprr"].objective < c["oracle"].objective - 1e-6]
    limits = [c for c in tiny if c["oracle"].status == "limit"]
    ok = not bad_a and not bad_b and not limits and secs < 120
    report(5, ok, f"(a) {len(infeasible)} oracle-infeasible, {len(bad_a)} LPRR claims; "
                  f"(b) {len(both)} LPRR successes, {len(bad_b)} below oracle optimum; "
                  f"{len(limits)} oracle limit hits")


# -- 200 mixed-size instances --------------------------------------------------

def mixed_params(n=200):
    out = []
    for i in range(n):
        size = [(8, 20, 2), (12, 34, 3), (16, 48, 3), (20, 64, 3)][i % 4]
        out.append(GeneratorParams(node_count=size[0], link_count=size[1], cloud_count=size[2],
                                   service_count=1 + (i // 4) % 4, sfc_length=1 + i % 3,
                                   seed=20000 + i))
    return out


@pytest.fixture(scope="module")
def mixed():
    t0 = time.perf_counter()
    runs = []
    for p in mixed_params():
        inst = generate_instance(p)
        relax = build_relaxation(inst)
        row = {"inst": inst, "relax": relax,
               "lprr": round_placement(inst, relaxation=relax),
               "base": baseline_round(inst, relaxation=relax), "routing": []}
        for key in ("lprr", "base"):
            pres = row[key]
            if not pres.feasible:
                continue
            try:
                res = refine_routing(inst, pres.solution, relaxation=relax)
            except FixedPlacementInfeasible:
                row["unroutable"] = row.get("unroutable", 0) + 1
                continue
            row["routing"].append((pres.solution, res))
        runs.append(row)
    return runs, time.perf_counter() - t0


def exact_placement_ok(inst, sol):
    # exact rational check, written apart from the solver's own extraction
    if check_placement(inst, sol.assign, set(sol.activated)):
        return False
    for svc in inst.services:
        for s in svc.positions:
            if sum(1 for (k, pos) in sol.assign if (k, pos) == (svc.id, s)) != 1:
                return False
    load = {v: Fraction(0) for v in inst.network.cloud_nodes}
    for (k, s), v in sol.assign.items():
        load[v] += Fraction(inst.service(k).rates[s])
    return all(load[v] <= Fraction(inst.network.cloud_nodes[v]) for v in load)


def test_c2_placement_soundness(mixed, report):
    runs, secs = mixed
    feasible = [(r["inst"], r[k].solution) for r in runs for k in ("lprr", "base") if r[k].feasible]
    bad = [1 for inst, sol in feasible if not exact_placement_ok(inst, sol)]
    ok = len(runs) >= 200 and not bad and secs < 300
    report(2, ok, f"{len(feasible)} feasible placements over {len(runs)} instances, {len(bad)} rejected "
                  f"[{secs:.0f}s incl. routing]")


def test_c3_lp_budgets(mixed, report):
    runs, _ = mixed
    over = []
    for r in runs:
        inst = r["inst"]
        cap = 1 + len(inst.network.cloud_nodes) * sum(s.length for s in inst.services)
        if r["lprr"].lp_solve_count > cap or r["base"].lp_solve_count != 1:
            over.append("placement")
        over += ["routing" for _, res in r["routing"] if res.lp_solve_count > 5]
    report(3, not over, f"{len(runs)} instances, {len(over)} budget overruns "
                        f"(harness runs assert the same bound per record)")


def test_c4_routing_soundness(mixed, report):
    runs, secs = mixed
    checked, bad = 0, []
    for r in runs:
        inst = r["inst"]
        for placement, res in r["routing"]:
            if not res.feasible:
                continue
            doc = SliceSolution("lprr", "feasible", placement, res.solution).to_dict(inst)
            rep = validate_solution(inst, doc)
            checked += 1
            if not rep.feasible or any(
                    abs(float(rep.delays[k]) - res.solution.delays[k]) > 1e-9 for k in rep.delays):
                bad.append(rep.codes())
    ok = checked > 0 and not bad and secs < 300
    report(4, ok, f"{checked} feasible routings validated, {len(bad)} rejected")


def test_c8_flow_decomposition(mixed, report):
    t0 = time.perf_counter()
    runs, _ = mixed
    solutions, worst_arc, worst_sum = 0, 0.0, 0.0
    for r in runs:
        if solutions >= 150:
            break
        inst, (model, idx) = r["inst"], r["relax"]
        for placement, _ in r["routing"][:1]:
            fixed = fix_placement(model, idx, placement.assign, placement.activated)
            sol = solve_lp(set_refinement_objective(fixed, idx, {s.id: 1.0 for s in inst.services}))
            if not sol.optimal:
                continue
            solutions += 1
            for svc in inst.services:
                for s in svc.segments:
                    z = idx.segment_flow(sol.values, svc.id, s)
                    o, t = segment_endpoints(svc, placement.assign, s)
                    dec = decompose_flow(z, o, t, inst.network.delay)
                    flow = dec.arc_flow(include_cycles=True)
                    if o == t:
                        flow = {a: v for a, v in flow.items() if a[0] != a[1]}
                    worst_arc = max([worst_arc] + [abs(flow.get(a, 0.0) - v) for a, v in z.items()])
                    worst_sum = max(worst_sum, abs(sum(f for _, f in dec.paths) - 1))
    ok = solutions >= 100 and worst_arc <= 1e-9 and worst_sum <= 1e-9
    report(8, ok, f"{solutions} routing LP solutions, max arc error {worst_arc:.2g}, "
                  f"max fraction-sum error {worst_sum:.2g} [{time.perf_counter() - t0:.1f}s]")


# -- LP solver ---------------------------------------------------------------------

def test_c7_lp_correctness(report):
    t0 = time.perf_counter()
    cases = hand_cases() + random_cases(30, seed=2024)
    errs, wrong = [], []
    for name, model, status, opt in cases:
        sol = solve_lp(model)
        if sol.status is not status:
            wrong.append(name)
        elif opt is not None:
            errs.append(abs(sol.objective - opt))
    secs = time.perf_counter() - t0
    ok = len(cases) >= 20 and not wrong and max(errs) <= 1e-6 and secs < 60
    report(7, ok, f"{len(cases)} LPs, {len(wrong)} wrong statuses, max objective error "
                  f"{max(errs):.2g} [{secs:.1f}s]")


# -- desk-scale sweep ------------------------------------------------------------

def test_c6_trend_reproduction(tmp_path, report):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(output_dir=str(tmp_path / "sweep"))
    res = run_experiment(cfg)
    secs = time.perf_counter() - t0
    by = {(r["method"], r["k"]): r for r in res.metrics}
    lines, ok = [], not res.budget_violations and secs < 900
    for k in cfg.service_counts:
        lp, base = by[("lprr", k)], by[("lpr_baseline", k)]
        feas_ok = lp["feasible_count"] >= base["feasible_count"]
        act_ok = (lp["mean_activated"] == "" or
                  float(lp["mean_activated"]) <= float(base["mean_activated"]) + 1e-12)
        ok = ok and feas_ok and act_ok
        lines.append(f"k={k}: feasible {lp['feasible_count']} vs {base['feasible_count']}, "
                     f"activated {lp['mean_activated'] or '-'} vs {base['mean_activated'] or '-'}")
    report(6, ok, f"LPRR vs baseline, 20 seeds [{secs:.0f}s]; " + "; ".join(lines))


def test_c9_determinism(tmp_path, report):
    gen = GeneratorParams(node_count=8, link_count=20, cloud_count=2, sfc_length=2)
    cfg = ExperimentConfig(generator=gen, service_counts=(1, 2), seeds=4,
                           methods=("lprr", "lpr_baseline", "oracle"))
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        run_experiment(replace(cfg, output_dir=str(d)))
    files = sorted(p.relative_to(dirs[0]) for p in dirs[0].rglob("*")
                   if p.is_file() and p.name != "timings.csv")
    diff = [str(f) for f in files if (dirs[0] / f).read_bytes() != (dirs[1] / f).read_bytes()]
    same_set = files == sorted(p.relative_to(dirs[1]) for p in dirs[1].rglob("*")
                               if p.is_file() and p.name != "timings.csv")
    report(9, same_set and not diff and len(files) > 1,
           f"{len(files)} files compared across two runs, {len(diff)} differ")
