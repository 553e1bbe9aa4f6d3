import numpy as np
import pytest

from dlrec.benchmark import (
    BRANIN_MAX,
    benchmark,
    best_so_far,
    branin,
    grid_optimum,
    rastrigin,
    sphere,
    get_test_function,
)
from dlrec.bo import AcquisitionMode
from dlrec.errors import ValidationFailure


class TestFunctions:
    def test_sphere_peak(self):
        assert sphere(np.array([0.3])) == 0.0
        assert sphere(np.array([0.0])) < 0.0

    def test_branin_known_optima(self):
        for point in [(-np.pi, 12.275), (np.pi, 2.275), (9.42478, 2.475)]:
            assert branin(np.array(point)) == pytest.approx(BRANIN_MAX, abs=1e-5)

    def test_rastrigin_peak_at_origin(self):
        assert rastrigin(np.zeros(2)) == 0.0
        assert rastrigin(np.array([1.0, 1.0])) < -1.0

    def test_grid_oracle_agrees_with_constants(self):
        assert grid_optimum("branin", 400) == pytest.approx(BRANIN_MAX, abs=1e-3)
        assert grid_optimum("sphere", 10_000) == pytest.approx(0.0, abs=1e-6)

    def test_unknown_function_rejected(self):
        with pytest.raises(ValidationFailure):
            get_test_function("ackley")


class TestBestSoFar:
    def test_monotone_prefix_maximum(self):
        from dlrec.bo import HistoryEntry

        entries = [
            HistoryEntry(i, np.zeros(1), y, True, 1.0, 0.0, "init")
            for i, y in enumerate([1.0, 3.0, 2.0, 5.0])
        ]
        assert best_so_far(entries) == [1.0, 3.0, 3.0, 5.0]


def small_benchmark(**kwargs):
    defaults = dict(
        repeats=3, t=6, n_init=3, seed=0, compare_random=False,
        candidate_budget=32, kernel_refit_every=10,
    )
    defaults.update(kwargs)
    return benchmark("sphere", **defaults)


class TestBenchmark:
    def test_summary_has_one_run_per_repeat(self):
        summary = small_benchmark(repeats=4)
        assert len(summary.runs) == 4
        assert all(len(r.curve) == 3 + 6 for r in summary.runs)

    def test_identical_seeds_share_initial_designs_across_modes(self):
        curves = {}
        for mode in (AcquisitionMode.GAMMA_EI, AcquisitionMode.EI, AcquisitionMode.PI, AcquisitionMode.UCB):
            summary = small_benchmark(mode=mode)
            curves[mode] = [r.curve[:3] for r in summary.runs]
        baseline = curves[AcquisitionMode.GAMMA_EI]
        for mode, init_curves in curves.items():
            assert init_curves == baseline

    def test_no_omega_runs_have_zero_random_steps(self):
        summary = small_benchmark(no_omega=True, t=10)
        assert all(r.n_random_steps == 0 for r in summary.runs)

    def test_paired_random_baseline_uses_same_seeds(self):
        summary = small_benchmark(compare_random=True)
        assert summary.random_runs is not None
        for run, rand in zip(summary.runs, summary.random_runs):
            assert run.seed == rand.seed
            assert run.curve[:3] == rand.curve[:3]

    def test_to_dict_is_json_ready(self):
        import json

        summary = small_benchmark(compare_random=True)
        payload = json.loads(json.dumps(summary.to_dict()))
        assert payload["function"] == "sphere"
        assert payload["mode"] == "gammaei"
        assert len(payload["runs"]) == 3

    def test_gap_measured_against_known_optimum(self):
        summary = small_benchmark(t=12)
        for run in summary.runs:
            assert run.final_gap == pytest.approx(0.0 - run.curve[-1], rel=1e-12)
            assert run.final_gap >= 0.0

    @pytest.mark.parametrize("mode", [AcquisitionMode.EI, AcquisitionMode.UCB])
    def test_sphere_converges_under_any_mode(self, mode):
        summary = benchmark(
            "sphere", mode, repeats=6, t=60, n_init=5, seed=0,
            compare_random=False, candidate_budget=512,
        )
        assert summary.median_gap <= 1e-2
