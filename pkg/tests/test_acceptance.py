"""End-to-end acceptance gate.

One test per shipped acceptance criterion.  Each test prints a single
``ACCEPTANCE <k> <name>: PASS|FAIL`` line straight to the terminal (bypassing
capture) before asserting, so a full run reads as a ten-line scoreboard.

Monte Carlo criteria share one set of simulation runs (10^6 trials per
instance/gamma pair at the suite seed) through a module fixture; inequality
criteria on estimated quantities are CI-adjusted by three standard errors in
the forgiving direction, never the strict one.
"""
import os
import time
from types import SimpleNamespace

import pytest

from prophetsim.constants import get_constants, solve_alpha, solve_gamma_iid
from prophetsim.curves import build_curveset
from prophetsim.engine import (
    brute_force_order,
    simulate_main_events,
    single_threshold_baseline,
)
from prophetsim.schedule import ScheduleValidityError, build_schedule, schedule_mass
from prophetsim.verify import (
    DEFAULT_SUITE_SEED,
    check_alpha_uniqueness,
    check_claim_gp,
    check_claim_iid,
    check_hk_crossing,
    check_identities,
    check_lemma_integral,
    check_mathfacts,
    check_simulation_lemmas,
    check_validity,
    extended_tables,
)

N = 4096
TRIALS = 10**6
WORKERS = os.cpu_count() or 1


def _gammas(inst, consts):
    return [consts.gamma_sel] + ([consts.gamma_iid] if inst.is_iid else [])


def _verdict(capsys, k, name, ok, detail=""):
    tail = f" -- {detail}" if detail else ""
    with capsys.disabled():
        print(f"\nACCEPTANCE {k} {name}: {'PASS' if ok else 'FAIL'}{tail}")


@pytest.fixture(scope="module")
def built(corpus, consts):
    # fresh, timed builds: curve tables at N and 2N plus a schedule for every
    # gamma the gate exercises (the doubled grid feeds the refinement check)
    t0 = time.perf_counter()
    cs, cs_fine, scheds, scheds_fine = {}, {}, {}, {}
    for label, inst in corpus.items():
        cs[label] = build_curveset(inst, N)
        cs_fine[label] = build_curveset(inst, 2 * N)
        for g in _gammas(inst, consts):
            scheds[(label, g)] = build_schedule(cs[label], g)
            scheds_fine[(label, g)] = build_schedule(cs_fine[label], g)
    elapsed = time.perf_counter() - t0
    return SimpleNamespace(cs=cs, cs_fine=cs_fine, scheds=scheds,
                           scheds_fine=scheds_fine, elapsed=elapsed)


@pytest.fixture(scope="module")
def main_runs(corpus, consts, built):
    """(label, gamma) -> (SimReport, per-item event counts), all at the suite
    seed, plus the wall time the runs took."""
    t0 = time.perf_counter()
    runs = {}
    for label, inst in corpus.items():
        for g in _gammas(inst, consts):
            runs[(label, g)] = simulate_main_events(
                inst, TRIALS, DEFAULT_SUITE_SEED, gamma=g, workers=WORKERS,
                cs=built.cs[label], sched=built.scheds[(label, g)])
    return runs, time.perf_counter() - t0


def test_acceptance_01_constants(capsys):
    t0 = time.perf_counter()
    gamma_iid = solve_gamma_iid()
    alpha, gamma_sel = solve_alpha()
    dt = time.perf_counter() - t0
    c = get_constants()
    ok = (0.7445 <= gamma_iid <= 0.7455
          and 0.2105 <= alpha <= 0.2115
          and 0.7245 <= gamma_sel <= 0.7255
          and abs(c.residual_gamma_iid) <= 1e-10
          and abs(c.residual_alpha) <= 1e-10
          and dt < 2.0)
    _verdict(capsys, 1, "constants", ok,
             f"gamma_iid={gamma_iid:.6f} alpha={alpha:.6f} "
             f"gamma_sel={gamma_sel:.6f} solve={dt:.2f}s")
    assert ok


def test_acceptance_02_curve_identities(corpus, consts, built, capsys):
    t0 = time.perf_counter()
    ok, worst = True, 0.0
    for label, inst in corpus.items():
        rep = check_identities(built.cs[label], label)
        ok &= rep.passed
        worst = max(worst, rep.max_residual)
        for g in _gammas(inst, consts):
            rep2 = check_mathfacts(built.scheds[(label, g)], built.cs[label],
                                   built.scheds_fine[(label, g)],
                                   built.cs_fine[label], label=label)
            ok &= rep2.passed
            worst = max(worst, rep2.max_residual)
    elapsed = built.elapsed + (time.perf_counter() - t0)
    ok &= elapsed < 30.0
    _verdict(capsys, 2, "curve identities + refinement", ok,
             f"worst normalized residual {worst:.3g}, {elapsed:.1f}s incl builds")
    assert ok


def test_acceptance_03_schedule_validity(corpus, consts, built, capsys):
    ok, worst_excess, worst_margin = True, 0.0, float("inf")
    for label, inst in corpus.items():
        for g in _gammas(inst, consts):
            sched = built.scheds[(label, g)]
            rep = check_validity(sched, built.cs[label], g, label=label)
            ok &= rep.passed
            worst_excess = max(worst_excess,
                               max(schedule_mass(sched, i) - 1.0 for i in range(inst.n)))
            worst_margin = min(worst_margin,
                               min(d.get("worst_margin", float("inf"))
                                   for d in rep.details))
    _verdict(capsys, 3, "schedule validity", ok,
             f"worst mass excess {worst_excess:.2e}, "
             f"worst inequality margin {worst_margin:.2e}")
    assert ok


def test_acceptance_04_survival_bound(corpus, main_runs, built, capsys):
    runs, sim_elapsed = main_runs
    ok, worst_z = True, float("-inf")
    for (label, g), (rep, _) in runs.items():
        for t, emp, se in rep.survival:
            ok &= emp >= g * t - 3.0 * se
            worst_z = max(worst_z, (g * t - emp) / max(se, 1e-12))
    elapsed = sim_elapsed + built.elapsed
    ok &= elapsed < 300.0
    _verdict(capsys, 4, "survival lower bound", ok,
             f"worst z {worst_z:.2f} (fence 3.0), {elapsed:.0f}s for "
             f"{len(runs)} runs x {TRIALS:.0e} trials")
    assert ok


def test_acceptance_05_competitive_ratio(corpus, consts, main_runs, capsys):
    runs, _ = main_runs
    ok, worst_gap = True, float("inf")
    for (label, g), (rep, _) in runs.items():
        bound = (0.745 if g == consts.gamma_iid else 0.725) - 0.005
        gap = rep.ratio + 3.0 * rep.ratio_stderr - bound
        ok &= gap >= 0.0
        worst_gap = min(worst_gap, gap)
    _verdict(capsys, 5, "competitive ratio", ok,
             f"worst CI-adjusted headroom {worst_gap:+.4f}")
    assert ok


def test_acceptance_06_stopping_time_law(corpus, consts, main_runs, built, capsys):
    runs, _ = main_runs
    ok, worst_z = True, 0.0
    for (label, g), events in runs.items():
        rep = check_simulation_lemmas(corpus[label], gamma=g, cs=built.cs[label],
                                      sched=built.scheds[(label, g)], events=events)
        z = next(d["normalized_residual"] for d in rep.details
                 if d["part"] == "stop_equality")
        ok &= z <= 3.0
        worst_z = max(worst_z, z)
    _verdict(capsys, 6, "stopping-time law", ok, f"worst |z| {worst_z:.2f}")
    assert ok


def test_acceptance_07_never_beats_oracle(corpus, consts, main_runs, capsys):
    runs, _ = main_runs
    ok, worst = True, float("inf")
    for label, inst in corpus.items():
        if inst.n > 6:
            continue
        _, best = brute_force_order(inst)
        rep = runs[(label, consts.gamma_sel)][0]
        slack = best - (rep.alg_mean - 3.0 * rep.alg_stderr)
        ok &= slack >= 0.0
        worst = min(worst, slack)
    _verdict(capsys, 7, "below order oracle (n <= 6)", ok,
             f"worst CI-adjusted slack {worst:+.2e}")
    assert ok


def test_acceptance_08_analysis_claims(corpus, consts, built, capsys):
    ok = True
    for n in (2, 3, 4, 8, 16, 64):
        ok &= check_claim_iid(n, consts.gamma_iid).passed
    worst_g0 = 0.0
    for label, inst in corpus.items():
        for g in _gammas(inst, consts):
            ok &= check_claim_gp(built.cs[label], g, label=label).passed
            for i in range(inst.n):
                x, p_t, g_t = extended_tables(built.cs[label], i, g)
                rep = check_lemma_integral(x, p_t, g_t, g, label=f"{label}#{i + 1}")
                ok &= rep.passed
                worst_g0 = max(worst_g0, next(d["G0"] for d in rep.details
                                              if d["part"] == "boundary_functional"))
    ok &= check_alpha_uniqueness(1000).passed
    ok &= check_hk_crossing(512).passed
    _verdict(capsys, 8, "pointwise claims + boundary functional", ok,
             f"max G(0) {worst_g0:.6f} (cap 1+1e-4)")
    assert ok


def test_acceptance_09_single_threshold_floor(corpus, capsys):
    ok, worst, hard = True, float("inf"), None
    for label, inst in corpus.items():
        rep = single_threshold_baseline(inst, TRIALS, DEFAULT_SUITE_SEED,
                                        workers=WORKERS)
        ok &= rep.ratio + 3.0 * rep.ratio_stderr >= 0.5 - 0.005
        worst = min(worst, rep.ratio)
        if label == "12_hard_two_point":
            hard = rep.ratio
            ok &= rep.ratio <= 0.56  # the half guarantee is genuinely near-tight
    _verdict(capsys, 9, "single-threshold floor", ok,
             f"min ratio {worst:.4f}, hard instance {hard:.4f} (cap 0.56)")
    assert ok


def test_acceptance_10_fault_injection(corpus, consts, built, capsys):
    # the unproven-constant counterfactual: the i.i.d. guarantee applied to a
    # correlated-scale instance must be caught by at least one checker
    label = "11_dust_sliver_8"
    inst = corpus[label]
    gamma = 0.745
    tripped, why = False, []
    try:
        sched = build_schedule(built.cs[label], gamma)
    except ScheduleValidityError as exc:
        tripped, why = True, [f"schedule rejected ({exc})"]
        sched = None
    if sched is not None:
        validity = check_validity(sched, built.cs[label], gamma, label=label)
        if not validity.passed:
            tripped = True
            why.append(f"validity residual {validity.max_residual:.3g}")
        sim = check_simulation_lemmas(inst, TRIALS, DEFAULT_SUITE_SEED, gamma=gamma,
                                      cs=built.cs[label], sched=sched,
                                      workers=WORKERS)
        z = next(d["normalized_residual"] for d in sim.details
                 if d["part"] == "survival_bound")
        if z > 3.0:
            tripped = True
            why.append(f"survival z {z:.1f}")
    _verdict(capsys, 10, "fault injection at gamma=0.745", tripped,
             "; ".join(why) if why else "no checker fired")
    assert tripped
