"""Acceptance gate: one test per criterion, each printing a PASS line.

Every criterion runs at its stated tolerance and asserts its own runtime
budget. Run with `pytest -v tests/test_acceptance.py` for the per-criterion
verdict lines.
"""

import random
import time
from fractions import Fraction

import numpy as np
import pytest

import pacersim as p
from pacersim.engine import run
from pacersim.ptp import sample_offset_errors

DEFAULT_MODEL = p.PtpErrorModel(g_master=2400, g_slave=2400, j_master_in=1000,
                                j_master_out=1000, j_slave_in=1000,
                                j_slave_out=1000)


def report(name, detail, elapsed, budget):
    assert elapsed < budget, f"{name}: {elapsed:.2f}s exceeds {budget}s budget"
    print(f"PASS {name}: {detail} ({elapsed:.2f}s < {budget}s)")


def test_criterion_01_merge_bound():
    start = time.monotonic()
    tau = 1000
    true_t = 5_000_000
    grid = np.arange(true_t - tau, true_t + 1)  # step tau/1000 = 1 ns
    t_tx, t_rx = np.meshgrid(grid, grid, sparse=True)
    merged = (np.maximum(t_tx, t_rx) + np.minimum(t_tx, t_rx) + tau) / 2
    err = np.abs(merged - true_t)
    worst = float(err.max())
    assert worst <= tau / 2
    # equality attained at the grid corners
    for a, b in [(true_t - tau, true_t - tau), (true_t, true_t)]:
        assert abs(p.merge_estimate(a, b, tau) - true_t) == tau / 2
    # spot-check the vectorized formula against the stateful merge path
    rng = random.Random(0)
    for _ in range(500):
        a = rng.randint(true_t - tau, true_t)
        b = rng.randint(true_t - tau, true_t)
        dc = p.DualClock(tx=p.EphcClock(cycle_period=Fraction(1), offset=Fraction(a)),
                         rx=p.EphcClock(cycle_period=Fraction(1), offset=Fraction(b)),
                         tau=tau)
        merged_scalar, action = dc.merge()
        assert action is p.MergeAction.NONE
        assert abs(merged_scalar - p.merge_estimate(a, b, tau)) <= 0.5
    report("criterion 1 (merge bound)",
           f"max |merge error| {worst:.1f} ns <= tau/2 = {tau / 2:.0f} ns, "
           "corners exact", time.monotonic() - start, 1.0)


def test_criterion_02_delta_ts_tightness():
    start = time.monotonic()
    rng = random.Random(2024)
    nprng = np.random.default_rng(2024)
    checked = 0
    for _ in range(20):
        model = p.PtpErrorModel(*(rng.randrange(0, 5000) for _ in range(6)))
        bound = p.delta_ts(model)
        if bound == 0:
            continue
        errs = sample_offset_errors(model, 100_000, nprng)
        worst = float(np.abs(errs).max())
        assert worst <= bound + 1e-9, f"bound violated: {worst} > {bound}"
        assert worst >= 0.95 * bound, f"bound loose: {worst} < 0.95*{bound}"
        checked += 1
    assert checked >= 18
    report("criterion 2 (delta_ts tightness)",
           f"{checked} random models, max error within [0.95, 1.00] x bound",
           time.monotonic() - start, 10.0)


def _drift_means(seed):
    cfg = p.PtpConfig(rounds=1000, rng_seed=seed)
    filt = p.run_sync_sim(cfg, DEFAULT_MODEL, filtered=True)
    raw = p.run_sync_sim(cfg, DEFAULT_MODEL, filtered=False)
    mean = lambda xs: sum(abs(x) for x in xs) / len(xs)
    return mean(filt.drift_error[1:]), mean(raw.drift_error[1:]), filt


def test_criterion_03_drift_filtering():
    start = time.monotonic()
    filt_means, raw_means = [], []
    for seed in range(20):
        f, r, _ = _drift_means(seed)
        filt_means.append(f)
        raw_means.append(r)
    ratio = (sum(raw_means) / 20) / (sum(filt_means) / 20)
    assert ratio >= 5.0, f"separation {ratio:.1f}x below 5x"
    report("criterion 3 (drift filtering)",
           f"mean |drift| unfiltered/filtered = {ratio:.1f}x >= 5x over 20 seeds",
           time.monotonic() - start, 30.0)


def test_criterion_04_servo_bounds():
    start = time.monotonic()
    bound_ts = p.delta_ts(DEFAULT_MODEL)
    bound_drift = 2 * p.delta_drift(100_000_000, 1.0, DEFAULT_MODEL)
    worst_off = worst_drift = 0.0
    for seed in range(20):
        cfg = p.PtpConfig(rounds=1000, rng_seed=seed)
        trace = p.run_sync_sim(cfg, DEFAULT_MODEL, filtered=True)
        worst_off = max(worst_off, max(abs(e) for e in trace.offset_error))
        assert trace.convergence_round is not None
        post = trace.drift_error[trace.convergence_round + 1:]
        worst_drift = max(worst_drift, max(abs(d) for d in post))
    assert worst_off <= bound_ts
    assert worst_drift <= bound_drift
    report("criterion 4 (servo bounds)",
           f"|offset error| <= {bound_ts:.0f} ns every round "
           f"(worst {worst_off:.0f}); post-convergence |drift| <= "
           f"{bound_drift:.0f} ns (worst {worst_drift:.0f})",
           time.monotonic() - start, 30.0)


def test_criterion_05_schedulability_curve():
    start = time.monotonic()
    utils = [round(0.05 * k, 2) for k in range(1, 11)]
    pts = p.sweep_schedulability(utils, instances_per_point=64, seed=0,
                                 timeout=10.0)
    fracs = [pt.fraction for pt in pts]
    for u, frac in zip(utils, fracs):
        if u <= 0.20:
            assert frac >= 0.95, f"feasibility {frac:.2f} at u={u}"
    assert all(a >= b for a, b in zip(fracs, fracs[1:])), \
        f"not monotone: {fracs}"
    report("criterion 5 (schedulability curve)",
           f"fractions {[round(f, 3) for f in fracs]}, >=95% through 20%, "
           "monotone non-increasing", time.monotonic() - start, 1800.0)


def test_criterion_06_solver_oracle_agreement():
    start = time.monotonic()
    rng = random.Random(606)
    delta = 10_000
    agreements = 0
    while agreements < 200:
        n = rng.randint(1, 6)
        cycles = rng.choice([1, 2, 4])
        horizon = n * delta * cycles
        qs = [q for q in range(1, n * cycles + 1) if (n * cycles) % q == 0]
        flows = []
        for i in range(rng.randint(1, 3)):
            q = rng.choice(qs)
            flows.append(p.FlowSpec(app_id=rng.randint(1, 2), flow_id=i,
                                    period=q * delta,
                                    max_jitter=rng.choice([0, delta // 2])))
        inst = p.ProblemInstance(flows, num_slots=n, delta=delta,
                                 horizon=horizon)
        got = p.solve(inst, timeout=60.0)
        assert got.status is not p.SolveStatus.TIMEOUT
        oracle = p.enumerate_feasible(inst)
        assert (got.status is p.SolveStatus.FEASIBLE) == (oracle is not None)
        if got.solution is not None:
            assert p.validate(inst, got.solution) == []
        if oracle is not None:
            assert p.validate(inst, oracle) == []
        agreements += 1
    report("criterion 6 (solver/oracle agreement)",
           "200 random instances, verdicts identical, all solutions validate",
           time.monotonic() - start, 300.0)


def test_criterion_07_ideal_determinism():
    start = time.monotonic()
    ring = p.RingConfig(num_slots=8, slot_size=300, batch_size=1)
    flow = p.FlowDef(flow_id=3, traffic_class=1, period=19_200, phase=38_400,
                     payload_len=200)
    sc = p.Scenario(ring=ring, duration=2_000_000, flows=[flow],
                    release_delta=19_200)
    res = run(sc)
    recs = res.flow_records(3)
    delays = [r.recv_time - r.send_time for r in recs]
    assert p.pdv(delays) == (0.0, 0.0)
    arrivals = [r.recv_time for r in recs]
    assert p.inter_arrival_jitter(arrivals, 19_200) == (0.0, 0.0)

    late = p.FlowDef(flow_id=3, traffic_class=1, period=19_200, phase=38_400,
                     payload_len=200, late_by={4: 19_200 + 2400})
    res2 = run(p.Scenario(ring=ring, duration=2_000_000, flows=[late],
                          release_delta=19_200))
    assert res2.report.dropped == 1
    assert all(r.send_time == r.scheduled_time for r in res2.flow_records(3))
    assert 4 not in {r.seq for r in res2.flow_records(3)}
    report("criterion 7 (ideal determinism)",
           "PDV = 0, jitter = 0 exactly; late strict insertion dropped, "
           "never delayed", time.monotonic() - start, 5.0)


def test_criterion_08_isolation_cap():
    start = time.monotonic()
    results = []
    for frac in (0.25, 0.5, 1.0):
        n = 32
        ownership = {i: (0 if i < int(n * frac) else 1) for i in range(n)}
        sc = p.Scenario(ring=p.RingConfig(num_slots=n, slot_size=1500,
                                          batch_size=1),
                        duration=50_000_000, flows=[],
                        be_loads=[p.BeLoad(payload_len=1400)],
                        ownership=ownership)
        res = run(sc)
        expect = frac * 1e9 * 1400 / 1500
        assert abs(res.be_goodput - expect) <= 0.01 * expect
        results.append(f"{frac:.0%}: {res.be_goodput / 1e6:.1f} Mbps")
    report("criterion 8 (isolation cap)",
           "; ".join(results) + " each within 1% of fraction x line_rate x "
           "payload/slot_size", time.monotonic() - start, 10.0)


# Measured relative-throughput table for 300 B slots, percent, as
# (batch, polling period us) -> value. Cells at 100 mark the met-budget
# diagonal; the rest are sub-budget predictions checked within +/-6 pp.
TABLE4 = {
    (1, 0): 99.99, (1, 10): 16.77, (1, 100): 2.18, (1, 1000): 0.00,
    (8, 0): 100.0, (8, 10): 100.0, (8, 100): 18.31, (8, 1000): 1.89,
    (64, 0): 100.0, (64, 10): 100.0, (64, 100): 100.0, (64, 1000): 15.30,
    (512, 0): 100.0, (512, 10): 100.0, (512, 100): 100.0, (512, 1000): 100.0,
}
POLL_OVERHEAD_NS = 2000  # calibrated per-cycle reclaim cost


def test_criterion_09_polling_budget_pattern():
    start = time.monotonic()
    delta = 2400  # 300 B at 1 Gbps
    for (batch, period_us), expect_pct in TABLE4.items():
        period = period_us * 1000
        cfg = p.RingConfig(num_slots=1024, slot_size=300, batch_size=batch,
                           polling_period=period,
                           polling_overhead=POLL_OVERHEAD_NS)
        got_pct = 100 * p.relative_throughput(cfg)
        if batch * delta >= period:
            assert got_pct == 100.0, f"batch {batch} period {period_us}us"
        assert abs(got_pct - expect_pct) <= 6.0, \
            f"batch {batch}, period {period_us}us: {got_pct:.2f} vs {expect_pct}"
    report("criterion 9 (polling budget)",
           "met-budget cells at 100%, sub-budget cells within 6 pp of the "
           "measured table", time.monotonic() - start, 1.0)


def test_criterion_10_ring_safety():
    start = time.monotonic()
    for seed in range(100):
        rng = random.Random(seed)
        n = rng.choice([8, 16, 32])
        batch = rng.randint(1, n)
        classes = [0, 1, 2]
        ownership = {i: rng.choice(classes) for i in range(n)}
        cfg = p.RingConfig(num_slots=n, slot_size=300, batch_size=batch)
        ring = p.DmaRing(cfg, ownership=ownership)
        clock = p.EphcClock(cycle_period=Fraction(2400))
        for _ in range(100_000):
            op = rng.random()
            if op < 0.40:
                avail = ring.producer_index - ring.consumer_index
                k = rng.randint(0, avail)
                for rec in ring.nic_consume(k):
                    if rec.crc_valid:
                        # armed slots are only ever armed in-window, and
                        # only into slots their class owns
                        assert rec.owner_class == ring.owner_of(rec.position)
            elif op < 0.80:
                ring.poll_cycle()
            else:
                lo, hi = ring.insertion_window()
                c = rng.randint(max(0, lo - 2), hi + 2)
                cls = rng.choice(classes)
                pkt = p.OutboundPacket(flow_id=1, traffic_class=cls,
                                       payload_len=100,
                                       scheduled_time=c * 2400)
                try:
                    pos = p.try_insert(ring, pkt, clock, p.InsertMode.STRICT)
                except p.InsertError:
                    pass
                else:
                    assert lo <= pos < hi, "armed outside the window"
                    assert ring.owner_of(pos) == cls, "cross-class arming"
            assert 0 <= ring.producer_index - ring.consumer_index <= n
    report("criterion 10 (ring safety)",
           "10^5 randomized steps per seed x 100 seeds: counter invariant, in-window "
           "arming, ownership respected", time.monotonic() - start, 60.0)


def test_criterion_11_multi_hop_adherence():
    start = time.monotonic()
    delta = 10_000  # 1250 B slots at 1 Gbps
    ring = p.RingConfig(num_slots=32, slot_size=1250, batch_size=1)
    periods = [4, 8, 16, 32, 4, 8, 16, 32, 4, 8, 16, 32]
    flows = [p.FlowDef(flow_id=i + 1, traffic_class=1,
                       period=periods[i] * 1_000_000,
                       phase=400_000 + i * 30_000, payload_len=1000)
             for i in range(12)]
    hyper = 32_000_000
    forward_delay = 2000
    bridges = []
    for h in range(4):
        gates = {}
        for f in flows:
            first_arrival = f.phase + delta + h * forward_delay
            gates[f.flow_id] = p.GateWindow(offset=first_arrival % f.period,
                                            width=16_000, cycle=f.period)
        bridges.append(p.Bridge(f"bridge{h}", forward_delay=forward_delay,
                                gates=gates))
    sc = p.Scenario(ring=ring, duration=hyper, flows=flows, bridges=bridges,
                    release_delta=100_000)
    res = run(sc)
    assert res.gate_misses == 0
    expected_delay = delta + 4 * forward_delay
    total = 0
    for f in flows:
        delays = res.delays(f.flow_id)
        assert len(delays) == hyper // f.period
        assert all(d == expected_delay for d in delays)
        total += len(delays)
    assert res.report.dropped == 0
    report("criterion 11 (multi-hop adherence)",
           f"{total} frames over 4 bridges: 0 gate misses, per-flow delay "
           f"constant at {expected_delay} ns exactly",
           time.monotonic() - start, 120.0)
