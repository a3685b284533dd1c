import json

import numpy as np
import pytest

from ucbqrl.mdp import (
    InvalidMDPError,
    MarkovPolicy,
    MDPFormatError,
    TabularMDP,
    gen_random,
    mdp_to_dict,
    read_mdp,
    read_policy,
    risky_vs_safe,
    simulate_episode,
    validate,
    write_mdp,
    write_policy,
)


def two_state():
    kernel = np.zeros((2, 2, 1, 2))
    kernel[0, :, 0] = [0.5, 0.5]
    kernel[1, :, 0] = [1.0, 0.0]
    rewards = np.zeros((2, 2, 1))
    rewards[1, 0, 0] = 1.0
    return TabularMDP(rewards, kernel, 0)


class TestValidate:
    def test_well_formed(self):
        assert validate(two_state()) == []
        assert validate(risky_vs_safe()) == []

    def test_row_sum(self):
        k = two_state().kernel.copy()
        k[1, 0, 0] = [0.9, 0.0]
        out = validate(TabularMDP(two_state().rewards, k))
        assert len(out) == 1
        assert out[0].startswith("simplex: kernel[1][0][0]")

    def test_negative_entry(self):
        k = two_state().kernel.copy()
        k[0, 1, 0] = [1.5, -0.5]
        assert len(validate(TabularMDP(two_state().rewards, k))) == 1

    def test_reward_range(self):
        r = two_state().rewards.copy()
        r[0, 1, 0] = 1.5
        out = validate(TabularMDP(r, two_state().kernel))
        assert len(out) == 1 and "rewards[0][1][0]" in out[0]

    def test_start_state(self):
        m = two_state()
        out = validate(TabularMDP(m.rewards, m.kernel, 5))
        assert len(out) == 1 and "start_state" in out[0]

    def test_check_raises_with_violations(self):
        r = two_state().rewards.copy()
        r[0, 0, 0] = -1
        with pytest.raises(InvalidMDPError) as err:
            TabularMDP(r, two_state().kernel).check()
        assert len(err.value.violations) == 1

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            TabularMDP(np.zeros((2, 2, 1)), np.zeros((2, 2, 1, 3)))


class TestPolicy:
    def test_zeros_and_call(self):
        pol = MarkovPolicy.zeros(2, 3)
        assert pol.actions.shape == (2, 3) and pol(1, 2) == 0

    def test_equality_and_hash(self):
        a = MarkovPolicy(np.array([[0, 1]]))
        b = MarkovPolicy([[0, 1]])
        assert a == b and hash(a) == hash(b)

    def test_rejects_fractional(self):
        with pytest.raises(ValueError):
            MarkovPolicy([[0.5]])

    def test_check_against(self):
        with pytest.raises(ValueError):
            MarkovPolicy([[2, 0, 0], [0, 0, 0]]).check_against(risky_vs_safe())
        with pytest.raises(ValueError):
            MarkovPolicy([[0, 0]]).check_against(risky_vs_safe())


class TestGenerator:
    def test_single_state(self):
        m = gen_random(1, 1, 1, seed=7)
        assert m.kernel.tolist() == [[[[1.0]]]]

    def test_deterministic(self):
        assert gen_random(3, 2, 3, seed=11) == gen_random(3, 2, 3, seed=11)
        assert gen_random(3, 2, 3, seed=11) != gen_random(3, 2, 3, seed=12)

    def test_min_atom(self):
        m = gen_random(3, 2, 2, seed=1, min_atom=0.2)
        nz = m.kernel[m.kernel > 0]
        assert nz.min() >= 0.2
        assert validate(m) == []

    @pytest.mark.parametrize("seed", range(20))
    def test_valid_and_on_grid(self, seed):
        m = gen_random(3, 2, 3, seed=seed, min_atom=0.1)
        assert validate(m) == []
        assert np.allclose(m.rewards * 10, np.round(m.rewards * 10))

    def test_impossible_min_atom(self):
        with pytest.raises(ValueError):
            gen_random(3, 2, 2, seed=0, min_atom=0.5)


class TestSimulate:
    def test_deterministic_kernel(self):
        m = risky_vs_safe()
        trace = simulate_episode(m, MarkovPolicy.zeros(2, 3), 0)
        assert [(st.h, st.state, st.action, st.reward, st.next_state) for st in trace] == [
            (0, 0, 0, 0.4, 2),
            (1, 2, 0, 0.0, 2),
        ]

    def test_horizon_one(self):
        m = gen_random(3, 1, 1, seed=4)
        trace = simulate_episode(m, MarkovPolicy.zeros(1, 3), 9)
        assert len(trace) == 1 and trace[0].state == 0
        assert m.kernel[0, 0, 0, trace[0].next_state] > 0

    def test_chain_and_seed_determinism(self):
        m = gen_random(3, 2, 4, seed=2)
        pol = MarkovPolicy(np.ones((4, 3), dtype=int))
        a = simulate_episode(m, pol, (5, 17))
        assert a == simulate_episode(m, pol, (5, 17))
        assert a[0].state == m.start_state
        assert all(x.next_state == y.state for x, y in zip(a, a[1:]))

    def test_half_half_frequency(self):
        m = risky_vs_safe()
        pol = MarkovPolicy([[1, 0, 0], [0, 0, 0]])
        hits = sum(simulate_episode(m, pol, (3, t))[0].next_state == 1 for t in range(10_000))
        assert abs(hits / 10_000 - 0.5) <= 0.02

    def test_marginals_within_three_sigma(self):
        m = gen_random(3, 2, 2, seed=8)
        pol = MarkovPolicy([[1, 0, 1], [0, 1, 1]])
        N = 10_000
        counts = np.zeros((2, 3, 3))
        for t in range(N):
            for st in simulate_episode(m, pol, (1, t)):
                counts[st.h, st.state, st.next_state] += 1
        for h in range(2):
            for s in range(3):
                n = counts[h, s].sum()
                if n < 200:
                    continue
                p = m.kernel[h, s, pol(h, s)]
                sigma = np.sqrt(p * (1 - p) / n)
                assert np.all(np.abs(counts[h, s] / n - p) <= 3 * sigma + 1e-12)


class TestFiles:
    def test_round_trip(self, tmp_path):
        m = gen_random(3, 2, 3, seed=5, min_atom=0.1)
        write_mdp(m, tmp_path / "m.json")
        assert read_mdp(tmp_path / "m.json") == m

    def test_policy_round_trip(self, tmp_path):
        pol = MarkovPolicy([[1, 0, 1], [0, 0, 1]])
        write_policy(pol, tmp_path / "p.json")
        assert read_policy(tmp_path / "p.json") == pol

    def test_unknown_field_named(self, tmp_path):
        obj = mdp_to_dict(two_state())
        obj["horizn"] = obj.pop("horizon")
        (tmp_path / "m.json").write_text(json.dumps(obj))
        with pytest.raises(MDPFormatError, match="horizn"):
            read_mdp(tmp_path / "m.json")

    def test_bad_shape_named(self, tmp_path):
        obj = mdp_to_dict(two_state())
        obj["rewards"] = [[0.0]]
        (tmp_path / "m.json").write_text(json.dumps(obj))
        with pytest.raises(MDPFormatError, match="rewards"):
            read_mdp(tmp_path / "m.json")

    def test_broken_json_reports_line(self, tmp_path):
        (tmp_path / "m.json").write_text('{\n"num_states": 2,\n oops}')
        with pytest.raises(MDPFormatError, match="line 3"):
            read_mdp(tmp_path / "m.json")

    def test_off_simplex_file(self, tmp_path):
        obj = mdp_to_dict(two_state())
        obj["kernel"][0][0][0] = [0.6, 0.6]
        (tmp_path / "m.json").write_text(json.dumps(obj))
        with pytest.raises(InvalidMDPError) as err:
            read_mdp(tmp_path / "m.json")
        assert err.value.violations[0].startswith("simplex: kernel[0][0][0]")
        assert read_mdp(tmp_path / "m.json", check=False).kernel[0, 0, 0, 0] == 0.6
