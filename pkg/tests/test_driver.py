import csv
import math

import numpy as np
import pytest

from oracles import bound_by_hand
from ucbqrl.driver import (
    CSV_COLUMNS,
    ExperimentConfig,
    OracleMismatchError,
    learn,
    optimal_value,
    read_records,
    run,
    run_instance,
    weissman_bound,
    weissman_mc,
    write_bound_curve,
    write_records,
)
from ucbqrl.mdp import MarkovPolicy, gen_random, risky_vs_safe, write_mdp
from ucbqrl.optimism import ConfidenceSpec, margin_kappa, regret_bound
from ucbqrl.planning import eval_policy


@pytest.fixture
def risky_path(tmp_path):
    path = tmp_path / "risky.json"
    write_mdp(risky_vs_safe(), path)
    return path


class TestConfig:
    @pytest.mark.parametrize(
        "kw", [dict(tau=0.0), dict(tau=1.0), dict(delta=1.0), dict(episodes=0), dict(planner_mode="evi")]
    )
    def test_rejects(self, kw):
        base = dict(mdp_path="x", tau=0.5, delta=0.1, episodes=10)
        with pytest.raises(ValueError):
            ExperimentConfig(**(base | kw))


class TestLearn:
    def test_single_action_zero_regret(self):
        m = gen_random(3, 1, 3, seed=0)
        recs = run_instance(m, 0.5, 0.1, 20)
        assert all(r.regret_t == 0 for r in recs)

    def test_one_episode(self):
        m = risky_vs_safe()
        recs, _ = learn(m, 0.6, 0.1, 1)
        assert len(recs) == 1
        assert recs[0].policy == MarkovPolicy.zeros(2, 3)
        assert recs[0].v_pi_t == pytest.approx(0.4)

    def test_accounting(self):
        m = gen_random(3, 2, 2, seed=3, min_atom=0.1)
        recs = run_instance(m, 0.5, 0.1, 40, seed=2)
        v_star = optimal_value(m, 0.5)
        cum = 0.0
        for t, r in enumerate(recs):
            assert r.episode == t and r.v_star == v_star
            assert r.v_pi_t == eval_policy(m.kernel, m.rewards, r.policy).value(0, 0, 0.5)
            assert r.regret_t == v_star - r.v_pi_t and r.regret_t >= -1e-12
            cum += r.regret_t
            assert r.cum_regret == pytest.approx(cum, abs=1e-12)
        bounds = regret_bound(ConfidenceSpec(0.1, 0.5, 3, 2, 40, 2), margin_kappa(m), range(1, 41))
        assert [r.bound_t for r in recs] == bounds

    def test_representative_not_above_envelope(self):
        m = gen_random(3, 2, 3, seed=1, min_atom=0.1)
        for r in run_instance(m, 0.5, 0.1, 30):
            assert r.representative_value <= r.optimistic_value + 1e-12

    def test_risky_sublinear_trend(self):
        recs = run_instance(risky_vs_safe(), 0.6, 0.1, 200, seed=1)
        avg = np.array([r.cum_regret / (r.episode + 1) for r in recs])
        assert np.all(np.diff(avg[100:]) <= 1e-15)
        assert avg[-1] < avg[99]

    def test_brute_force_mode_agrees_in_value(self):
        m = gen_random(2, 2, 2, seed=5)
        env = run_instance(m, 0.5, 0.1, 15, planner_mode="envelope")
        bf = run_instance(m, 0.5, 0.1, 15, planner_mode="brute_force")
        assert all(b.optimistic_value <= e.optimistic_value + 1e-12 for e, b in zip(env, bf))

    def test_oracle_mismatch_aborts(self, monkeypatch):
        import ucbqrl.driver as drv

        monkeypatch.setattr(drv, "brute_force_best", lambda m, tau: (MarkovPolicy.zeros(2, 3), -1.0))
        with pytest.raises(OracleMismatchError):
            optimal_value(risky_vs_safe(), 0.6)


class TestFiles:
    def test_csv_layout(self, risky_path, tmp_path):
        out = tmp_path / "r.csv"
        recs = run(ExperimentConfig(str(risky_path), 0.6, 0.1, 3, output_path=str(out)))
        lines = out.read_text().splitlines()
        assert len(lines) == 4
        assert lines[0] == ",".join(CSV_COLUMNS)
        rows = read_records(out)
        assert [float(r["bound_t"]) for r in rows] == [r.bound_t for r in recs]
        assert {r["confidence_event_ok"] for r in rows} <= {"true", "false"}

    def test_seventeen_digits(self, tmp_path):
        recs = run_instance(gen_random(3, 2, 2, seed=9), 0.3, 0.1, 2)
        write_records(recs, tmp_path / "a.csv")
        row = next(csv.DictReader((tmp_path / "a.csv").open()))
        assert float(row["bound_t"]) == recs[0].bound_t

    def test_byte_identical_rerun(self, risky_path, tmp_path):
        for name in ("a.csv", "b.csv"):
            run(ExperimentConfig(str(risky_path), 0.6, 0.1, 25, seed=4, output_path=str(tmp_path / name)))
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_unwritable_path(self, tmp_path):
        target = tmp_path / "missing" / "r.csv"
        with pytest.raises(OSError, match="missing"):
            write_records([], target)

    def test_bound_curve(self, tmp_path):
        spec = ConfidenceSpec(0.1, 0.5, 2, 2, 5, 2)
        with (tmp_path / "b.csv").open("w") as fh:
            write_bound_curve(spec, 0.5, range(1, 6), fh)
        rows = list(csv.DictReader((tmp_path / "b.csv").open()))
        assert [int(r["episodes"]) for r in rows] == [1, 2, 3, 4, 5]
        for r in rows:
            T = int(r["episodes"])
            assert float(r["bound"]) == pytest.approx(bound_by_hand(2, 2, T, 2, 0.1, 0.5), rel=1e-12)


class TestWeissman:
    def test_degenerate(self):
        assert weissman_mc([1.0, 0.0], 30, 0.1, 2000) == 0.0

    def test_half_half(self):
        # exact exceedance for n = 50: P(|Bin(50, .5) - 25| >= 7.5) = 0.0328391...
        rate = weissman_mc([0.5, 0.5], 50, 0.3, 10_000, seed=1)
        exact = 0.032839137564268484
        assert abs(rate - exact) <= 3 * math.sqrt(exact * (1 - exact) / 10_000)
        assert rate < weissman_bound(2, 50, 0.3)
        assert weissman_bound(2, 50, 0.3) == pytest.approx(2 * math.exp(-2.25))

    def test_decreasing_in_n(self):
        rates = [weissman_mc(np.ones(3) / 3, n, 0.3, 10_000, seed=n) for n in (10, 40, 160)]
        se = math.sqrt(0.25 / 10_000)
        assert rates[0] + 3 * se >= rates[1] and rates[1] + 3 * se >= rates[2]

    def test_needs_trials(self):
        with pytest.raises(ValueError):
            weissman_mc([0.5, 0.5], 10, 0.1, 999)
