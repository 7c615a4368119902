"""Acceptance gate: one test per shipping criterion, each independently runnable.

Every test prints a one-line metric summary; the pytest -v status line is the
pass/fail verdict for that criterion. Tolerances are stated inline and all
randomness is seeded, so every run reproduces the same numbers.
"""

import json
import math
import time

import numpy as np

from causalstream.citest import partial_correlation
from causalstream.cli import main
from causalstream.continual import (
    BRANCH_NON_STATIONARY,
    BRANCH_STATIONARY,
    DiscoveryParams,
    SessionState,
    rediscover_warm,
    run_session,
    step,
)
from causalstream.intervention import suggest
from causalstream.model import build_model, load, save
from causalstream.pcmci import InferenceMatrix, run_discovery
from causalstream.simulator import (
    evaluate,
    generate,
    ground_truth,
    library,
    save_scenario,
    weak_pair,
)
from causalstream.timeseries import TimeWindow, VariableSet, standardize

DEFAULTS = DiscoveryParams()


def discover_model(window, params, alpha_link=None, run_id=1):
    result = run_discovery(
        window,
        tau_max=params.tau_max,
        alpha_pc=params.alpha_pc,
        max_conds=params.max_conds,
        max_px=params.max_px,
    )
    alpha = params.alpha_link if alpha_link is None else alpha_link
    return build_model(result.matrix, alpha, run_id), result.ci_test_count


def test_criterion_1_recovery_on_seeded_library():
    # mean link-level F1 >= 0.9 per scenario over 20 seeds, T=2000, defaults;
    # whole sweep under 60 s
    started = time.time()
    means = {}
    for name, spec in library().items():
        truth = ground_truth(spec)
        f1s = []
        for seed in range(20):
            window = standardize(generate(spec, 2000, seed=seed).window)
            model, _ = discover_model(window, DEFAULTS)
            f1s.append(evaluate(model, truth, 0).f1)
        means[name] = float(np.mean(f1s))
    elapsed = time.time() - started
    print(
        "criterion 1: "
        + " ".join(f"{name}={mean:.3f}" for name, mean in means.items())
        + f" elapsed={elapsed:.1f}s"
    )
    assert elapsed < 60.0
    for name, mean in means.items():
        assert mean >= 0.9, f"{name} mean F1 {mean:.3f} < 0.9"


def test_criterion_2_ci_test_matches_precision_matrix_oracle():
    # residual-regression statistic vs inverse-correlation-matrix formula,
    # 1000 random instances with T <= 50 and |z| <= 2, agreement within 1e-8
    rng = np.random.default_rng(20251)
    worst = 0.0
    for _ in range(1000):
        n_z = int(rng.integers(0, 3))
        t = int(rng.integers(n_z + 8, 51))
        data = rng.normal(size=(t, 2 + n_z))
        window = TimeWindow(VariableSet(tuple(f"v{i}" for i in range(2 + n_z))), data)
        x = (0, int(rng.integers(0, 3)))
        y = (1, 0)
        z = [(2 + i, int(rng.integers(0, 3))) for i in range(n_z)]
        res = partial_correlation(window, x, y, z)
        max_lag = max(lag for _, lag in (x, y, *z))
        cols = np.column_stack(
            [data[max_lag - lag : t - lag, var] for var, lag in (x, y, *z)]
        )
        prec = np.linalg.inv(np.atleast_2d(np.corrcoef(cols, rowvar=False)))
        oracle = -prec[0, 1] / math.sqrt(prec[0, 0] * prec[1, 1])
        worst = max(worst, abs(res.statistic - oracle))
    print(f"criterion 2: max |residual - precision| = {worst:.2e} over 1000 instances")
    assert worst <= 1e-8


def test_criterion_3_calibration_under_the_null():
    # independent Gaussian series, T=200: rejection rate at alpha=0.05
    # stays in [0.01, 0.10] over 200 trials
    rng = np.random.default_rng(20252)
    rejections = 0
    for _ in range(200):
        data = rng.normal(size=(200, 2))
        window = TimeWindow(VariableSet(("x", "y")), data)
        if partial_correlation(window, (0, 1), (1, 0)).p_value <= 0.05:
            rejections += 1
    rate = rejections / 200
    print(f"criterion 3: null rejection rate {rate:.3f} at alpha=0.05")
    assert 0.01 <= rate <= 0.10


def test_criterion_4_monotone_refinement_on_chain():
    # 10 stationary merges on the chain scenario: stored link p-values never
    # increase and the link set is constant over the final 5 runs, >= 18/20 seeds
    params = DiscoveryParams(alpha_link=1e-4)
    spec = library()["chain_3"]
    passing = 0
    for seed in range(20):
        state = SessionState()
        final_sets = []
        good = True
        for i in range(11):
            window = standardize(generate(spec, 1000, seed=seed, t_start=i * 1000).window)
            previous = state.current_model
            state = step(state, window, params)
            if i > 0 and state.history[-1].branch != BRANCH_STATIONARY:
                good = False
            if previous is not None and state.history[-1].branch == BRANCH_STATIONARY:
                for key, stats in state.current_model.links.items():
                    if key in previous.links and stats.p_value > previous.links[key].p_value:
                        good = False
            if i >= 6:
                final_sets.append(frozenset(state.current_model.links))
        if len(set(final_sets)) != 1:
            good = False
        passing += good
    print(f"criterion 4: {passing}/20 seeds with monotone p and stable final link set")
    assert passing >= 18


def test_criterion_5_memory_bound_is_one_window():
    # peak retained samples over a 100-window session equals exactly W,
    # and does not grow with stream length
    w = 500
    spec = library()["chain_3"]
    params = DiscoveryParams(alpha_link=1e-4)

    def window_stream(count):
        for i in range(count):
            yield standardize(generate(spec, w, seed=17, t_start=i * w).window)

    state_long, peak_long = run_session(window_stream(100), params)
    state_short, peak_short = run_session(window_stream(40), params)
    print(f"criterion 5: peak {peak_long} samples over 100 windows, {peak_short} over 40")
    assert state_long.run_counter == 100
    assert peak_long == w
    assert peak_short == w


def test_criterion_6_warm_start_economy_on_regime_switch():
    # paired on identical post-switch data, 20 seeds: warm rediscovery spends
    # strictly fewer CI tests than cold, with F1 within 0.05
    spec = library()["regime_switch_3"]
    params = DiscoveryParams(alpha_link=0.005)
    truth = ground_truth(spec)
    economical = within_f1 = 0
    saved = []
    for seed in range(20):
        before = standardize(generate(spec, 1000, seed=seed, t_start=0).window)
        after = standardize(generate(spec, 1000, seed=seed + 1000, t_start=2000).window)
        old, _ = discover_model(before, params)
        cold_model, cold_tests = discover_model(after, params, run_id=2)
        warm_model, warm_tests = rediscover_warm(old, after, params, run_id=2)
        economical += warm_tests < cold_tests
        within_f1 += abs(evaluate(warm_model, truth, 1).f1 - evaluate(cold_model, truth, 1).f1) <= 0.05
        saved.append(cold_tests - warm_tests)
    print(
        f"criterion 6: warm cheaper in {economical}/20 pairs "
        f"(median saving {int(np.median(saved))} tests), F1 within 0.05 in {within_f1}/20"
    )
    assert economical == 20
    assert within_f1 == 20


def test_criterion_7_stationarity_detection():
    # switch flagged on the first post-switch window >= 18/20 seeds;
    # false flags on stationary streams <= 2/20 seeds (T=1000, theta_s=0.1)
    params = DiscoveryParams(alpha_link=0.005)
    switch_spec = library()["regime_switch_3"]
    flagged = 0
    for seed in range(20):
        state = SessionState()
        branches = []
        for t_start in (0, 1000, 2000):
            window = standardize(generate(switch_spec, 1000, seed=seed, t_start=t_start).window)
            state = step(state, window, params)
            branches.append(state.history[-1].branch)
        if branches[1] == BRANCH_STATIONARY and branches[2] == BRANCH_NON_STATIONARY:
            flagged += 1
    stationary_spec = library()["chain_3"]
    false_flags = 0
    for seed in range(20):
        state = SessionState()
        tripped = False
        for i in range(3):
            window = standardize(generate(stationary_spec, 1000, seed=seed, t_start=i * 1000).window)
            state = step(state, window, params)
            tripped = tripped or state.history[-1].branch == BRANCH_NON_STATIONARY
        false_flags += tripped
    print(f"criterion 7: switch flagged {flagged}/20, false flags {false_flags}/20")
    assert flagged >= 18
    assert false_flags <= 2


def test_criterion_8_intervention_beats_observation():
    # paired sessions on the weak-link scenario: after two shared observational
    # runs, an intervention window shrinks the stored p of the weak link more
    # than an identically-seeded observational window in >= 15/20 pairs
    spec = weak_pair()
    t = 1000
    params = DiscoveryParams(tau_max=1, alpha_link=0.01)
    wins = 0
    for seed in range(20):
        shared = SessionState()
        for i in range(2):
            window = standardize(generate(spec, t, seed=seed * 7 + i, t_start=i * t).window)
            shared = step(shared, window, params)
        if not shared.current_model.links:
            continue
        plan = suggest(shared.current_model, 1, params.alpha_link, duration=t - 1)
        seed3 = seed * 7 + 2
        observational = standardize(generate(spec, t, seed=seed3, t_start=2 * t).window)
        obs_state = step(shared, observational, params)
        intervened = standardize(
            generate(spec, t, plan=plan, plan_start=1, seed=seed3, t_start=2 * t).window
        )
        int_state = step(shared, intervened, params)
        p_obs = obs_state.current_model.inference.p_value[0, 1, 0]
        p_int = int_state.current_model.inference.p_value[0, 1, 0]
        wins += p_int < p_obs
    print(f"criterion 8: intervention arm stored smaller p in {wins}/20 pairs")
    assert wins >= 15


def test_criterion_9_determinism_and_persistence(tmp_path, capsys):
    # identical bytes from every command under a fixed seed, and save/load
    # identity over 1000 random models
    spec_path = tmp_path / "chain.json"
    save_scenario(library()["chain_3"], spec_path)

    traces = []
    for tag in ("a", "b"):
        trace = tmp_path / f"trace_{tag}.csv"
        assert main(["simulate", str(spec_path), "--t-total", "600",
                     "--out", str(trace), "--seed", "1"]) == 0
        traces.append(trace.read_bytes())
    assert traces[0] == traces[1]

    models = []
    for tag in ("a", "b"):
        model_path = tmp_path / f"model_{tag}.json"
        assert main(["discover", str(tmp_path / "trace_a.csv"), "--out", str(model_path)]) == 0
        models.append(model_path.read_bytes())
    assert models[0] == models[1]

    sessions = []
    for tag in ("a", "b"):
        final = tmp_path / f"final_{tag}.json"
        capsys.readouterr()
        assert main(["continual", "--live", str(spec_path), "--runs", "3",
                     "--seed", "2", "--out", str(final)]) == 0
        sessions.append((capsys.readouterr().out, final.read_bytes()))
    assert sessions[0] == sessions[1]
    assert json.loads(sessions[0][0].splitlines()[-1])["record_type"] == "summary"

    rng = np.random.default_rng(20259)
    round_trips = 0
    for i in range(1000):
        n = int(rng.integers(2, 5))
        tau = int(rng.integers(1, 4))
        matrix = InferenceMatrix(
            variables=VariableSet(tuple(f"v{j}" for j in range(n))),
            tau_max=tau,
            statistic=rng.uniform(-1.0, 1.0, size=(n, n, tau)),
            p_value=rng.uniform(size=(n, n, tau)),
            sample_count=int(rng.integers(10, 5000)),
            produced_at=int(rng.integers(10, 100000)),
        )
        model = build_model(matrix, float(rng.uniform(0.001, 0.5)), int(rng.integers(1, 9)))
        path = tmp_path / "round_trip.json"
        save(model, path)
        loaded = load(path)
        assert loaded == model
        assert loaded.links == model.links
        assert loaded.alpha_link == model.alpha_link
        round_trips += 1
    print(f"criterion 9: byte-identical CLI output; {round_trips}/1000 round trips intact")
    assert round_trips == 1000
