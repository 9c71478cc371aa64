import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from walkopt.exact import exact_solve
from walkopt.greedy import greedy_solve
from walkopt.instance import Allocation, AmenityTypeSpec, Instance, check_feasible
from walkopt.presets import counterexample_instance
from walkopt.report import SolveReport
from walkopt.scoring import objective
from walkopt.synthetic import random_instance


def test_zero_budgets_give_baseline(toy):
    inst = toy.with_budgets(0)
    rep = greedy_solve(inst)
    assert len(rep.allocation) == 0 and rep.iterations == []
    assert rep.objective == objective(inst)[0]


def test_single_site_takes_both_instances():
    inst = Instance([0, 1], [5], [3], {}, np.array([[100.0], [700.0]]), [AmenityTypeSpec(0, "g", (1.0,), 2)])
    rep = greedy_solve(inst)
    assert rep.allocation.counts == {(0, 5): 2}
    assert rep.iterations[1].gain == 0.0


def test_no_candidates():
    inst = Instance([0], [], [], {0: (1,)}, np.array([[500.0]]), [AmenityTypeSpec(0, "g", (1.0,), 3)])
    rep = greedy_solve(inst)
    assert len(rep.allocation) == 0


def test_counterexample_single_restaurant_picks_near_site():
    inst = counterexample_instance(restaurant_budget=1)
    rep = greedy_solve(inst)
    assert rep.allocation.counts == {(1, 7): 1}
    assert rep.objective == pytest.approx(exact_solve(inst).objective, abs=1e-9)


def test_tie_break_smallest_type_then_column():
    # two identical types and two identical sites: first step must be (type 0, first site)
    inst = Instance([0], [1, 2], [1, 1], {}, np.array([[300.0, 300.0]]),
                    [AmenityTypeSpec(0, "a", (1.0,), 1), AmenityTypeSpec(1, "b", (1.0,), 1)])
    steps = greedy_solve(inst).iterations
    assert (steps[0].type_id, steps[0].node) == (0, 1)
    assert (steps[1].type_id, steps[1].node) == (1, 2)


def test_report_serialization(toy):
    rep = greedy_solve(toy)
    back = SolveReport.from_dict(json.loads(rep.to_json()))
    assert back.allocation == rep.allocation and back.objective == rep.objective
    csv_lines = rep.iterations_csv().strip().splitlines()
    assert csv_lines[0] == "step,type,node,gain,cumulative"
    assert len(csv_lines) == len(rep.iterations) + 1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(1,), (1, 1), (1, 4, 1), (3,)]))
def test_report_invariants(seed, options):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, int(rng.integers(1, 9)), int(rng.integers(0, 7)), options, 2)
    rep = greedy_solve(inst)
    check_feasible(inst, rep.allocation)
    cum = [s.cumulative for s in rep.iterations]
    assert all(b >= a - 1e-9 for a, b in zip(cum, cum[1:]))
    assert len(rep.iterations) <= sum(s.budget for s in inst.amenity_specs)
    assert rep.objective == pytest.approx(objective(inst, rep.allocation)[0], abs=1e-9)
    # stops only when budgets or capacities are exhausted
    placed = rep.allocation.totals()
    load = rep.allocation.load()
    budgets_left = any(placed.get(s.id, 0) < s.budget for s in inst.amenity_specs)
    caps_left = any(load.get(c, 0) < cap for c, cap in zip(inst.candidates, inst.capacities))
    assert not (budgets_left and caps_left)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_single_type_gains_non_increasing(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, int(rng.integers(1, 9)), int(rng.integers(1, 7)), (1,), 4)
    gains = [s.gain for s in greedy_solve(inst).iterations]
    assert all(b <= a + 1e-9 for a, b in zip(gains, gains[1:]))


def test_multi_type_gains_can_increase():
    """Without depth of choice, several plain types still break diminishing gains."""
    inst = Instance([0], [1, 2], [1, 1], {}, np.array([[0.0, 0.0]]),
                    [AmenityTypeSpec(0, "g", (1.0,), 1), AmenityTypeSpec(1, "s", (1.0,), 1)])
    gains = [s.gain for s in greedy_solve(inst).iterations]
    assert gains[1] > gains[0]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lazy_matches_full_for_single_type(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, int(rng.integers(1, 12)), int(rng.integers(1, 9)), (1,), int(rng.integers(1, 6)))
    full, lazy = greedy_solve(inst), greedy_solve(inst, lazy=True)
    assert lazy.method == "greedy-lazy"
    assert lazy.allocation == full.allocation
    assert lazy.objective == pytest.approx(full.objective, abs=1e-9)


def test_lazy_falls_back_with_several_types(toy):
    assert greedy_solve(toy, lazy=True).method == "greedy"


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_approximation_bound_single_type(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, int(rng.integers(1, 9)), int(rng.integers(1, 7)), (1,), int(rng.integers(1, 5)))
    g, opt = greedy_solve(inst).objective, exact_solve(inst).objective
    assert g >= (1 - 1 / math.e) * opt - 1e-9
    assert g <= opt + 1e-9


def test_deterministic_and_permutation_invariant(rng):
    inst = random_instance(rng, 8, 6, (1, 3, 1), 2)
    a, b = greedy_solve(inst), greedy_solve(inst)
    assert a.allocation == b.allocation and a.iterations == b.iterations
    perm_r, perm_c = rng.permutation(8), rng.permutation(6)
    cols = np.concatenate([perm_c, np.arange(6, inst.n_columns)])
    shuffled = Instance(
        [inst.residents[i] for i in perm_r], [inst.candidates[j] for j in perm_c],
        [inst.capacities[j] for j in perm_c], inst.existing, inst.dist[perm_r][:, cols],
        inst.amenity_specs, name=inst.name,
    )
    c = greedy_solve(shuffled)
    assert c.allocation == a.allocation
    assert c.objective == pytest.approx(a.objective, abs=1e-9)
