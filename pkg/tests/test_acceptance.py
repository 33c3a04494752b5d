"""End-to-end acceptance checks.

Each test prints one ``ACCEPTANCE <n> PASS/FAIL`` line (run pytest with
``-s`` to see them on success) and then asserts the same condition. The
heavy benchmark trends (criteria 2 and 3) run the real Monte-Carlo harness
at desk scale and take a few minutes each.
"""

import itertools
import math
import time

import numpy as np

from matensor.channel import ScenarioConfig, generate_channel
from matensor.cp import FactorSet, cp_als, kruskal_ok, reconstruct
from matensor.estimation import (
    AngleEstimates,
    estimate_gains,
    estimate_generator,
    reconstruct_channel,
    run_algorithm1,
)
from matensor.experiments import SweepSpec, aggregate, run_sweep
from matensor.linalg import khatri_rao, kronecker, pseudo_inverse, unfold
from matensor.pilots import build_pilot_plan, simulate_pilots
from matensor.presets import desk_scale
from oracles import (
    khatri_rao_loops,
    kron_loops,
    kruskal_loops,
    moore_penrose_errors,
    random_complex,
    unfold_loops,
)

THREADS = 4


def report(number, ok, detail):
    verdict = "PASS" if ok else "FAIL"
    line = f"ACCEPTANCE {number} {verdict}: {detail}"
    print(line)
    assert ok, line


def median_by_key(summary, estimator, field):
    return {
        getattr(s, field): s.median_nmse
        for s in summary
        if s.estimator == estimator
    }


class TestAcceptance:
    def test_1_noiseless_exact_recovery(self):
        cfg = ScenarioConfig(
            tx_region=(4.0, 4.0),
            rx_region=(4.0, 4.0),
            grid_pitch=0.2,
            n_tx=4,
            n_rx=4,
            tx_paths=3,
            rx_paths=3,
            snr_db=math.inf,
            tx_pilot_area=(6, 6),
            rx_pilot_area=(6, 6),
        )
        plan = build_pilot_plan(cfg)
        start = time.perf_counter()
        successes = 0
        worst = 0.0
        for trial in range(20):
            channel = generate_channel(cfg, np.random.default_rng([0, trial, 0]))
            obs = simulate_pilots(plan, channel, np.random.default_rng([0, trial, 1]))
            result = run_algorithm1(
                obs,
                plan,
                random_state=np.random.default_rng([0, trial, 2]),
                truth=channel,
            )
            worst = max(worst, result.nmse)
            if result.nmse < 1e-8:
                successes += 1
        elapsed = time.perf_counter() - start
        report(
            1,
            successes >= 19 and elapsed < 60.0,
            f"{successes}/20 trials below NMSE 1e-8 (worst {worst:.3e}) "
            f"in {elapsed:.1f}s (budget 60s)",
        )

    def test_2_snr_trend(self):
        spec = SweepSpec(
            base=desk_scale(),
            snr_grid=(0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0),
            beta_t_grid=(0.25,),
            beta_r_grid=(0.25,),
            trials=50,
            estimators=("tensor", "omp"),
            grid_size=64,
        )
        start = time.perf_counter()
        summary = aggregate(run_sweep(spec, seed=0, threads=THREADS))
        elapsed = time.perf_counter() - start
        tensor = median_by_key(summary, "tensor", "snr_db")
        omp = median_by_key(summary, "omp", "snr_db")
        curve = [tensor[snr] for snr in spec.snr_grid]
        decreasing = all(b < a for a, b in zip(curve, curve[1:]))
        tensor_ratio = tensor[30.0] / tensor[15.0]
        omp_ratio = omp[30.0] / omp[15.0]
        report(
            2,
            decreasing
            and tensor_ratio < 0.1
            and omp_ratio > 0.5
            and elapsed < 600.0,
            f"medians decreasing={decreasing}, tensor 30/15 dB ratio "
            f"{tensor_ratio:.3f} (< 0.1), omp ratio {omp_ratio:.3f} (> 0.5), "
            f"{elapsed:.0f}s (budget 600s)",
        )

    def test_3_overhead_trend(self):
        base = desk_scale()
        proposed = SweepSpec(
            base=base,
            snr_grid=(15.0,),
            beta_t_grid=(0.1, 0.2, 0.4, 0.8),
            beta_r_grid=(0.25,),
            trials=50,
            estimators=("tensor",),
            grid_size=64,
        )
        reference = SweepSpec(
            base=base,
            snr_grid=(15.0,),
            beta_t_grid=(1.0,),
            beta_r_grid=(0.25,),
            trials=50,
            estimators=("omp", "somp"),
            grid_size=64,
        )
        start = time.perf_counter()
        tensor = median_by_key(
            aggregate(run_sweep(proposed, seed=0, threads=THREADS)),
            "tensor",
            "beta_t",
        )
        baseline_summary = aggregate(run_sweep(reference, seed=0, threads=THREADS))
        elapsed = time.perf_counter() - start
        curve = [tensor[beta] for beta in (0.1, 0.2, 0.4, 0.8)]
        non_increasing = all(b <= a for a, b in zip(curve, curve[1:]))
        baseline_full = min(s.median_nmse for s in baseline_summary)
        undercuts = tensor[0.2] <= baseline_full
        report(
            3,
            non_increasing and undercuts and elapsed < 900.0,
            f"medians over beta_t {[f'{v:.3e}' for v in curve]} non-increasing="
            f"{non_increasing}, tensor at 20% {tensor[0.2]:.3e} <= best "
            f"full-coverage baseline {baseline_full:.3e}, {elapsed:.0f}s "
            f"(budget 900s)",
        )

    def test_4_uniqueness_checker_exhaustive(self):
        mismatches = 0
        for d1, d2, d3, rank in itertools.product(range(1, 11), repeat=4):
            if kruskal_ok(d1, d2, d3, rank) != kruskal_loops(d1, d2, d3, rank):
                mismatches += 1
        report(4, mismatches == 0, f"{mismatches} mismatches in 10000 cases")

    def test_5_ambiguity_invariances(self):
        rng = np.random.default_rng(2024)
        worst_scale = 0.0
        for _ in range(1000):
            rank = int(rng.integers(1, 4))
            dims = rng.integers(2, 5, size=3)
            factors = FactorSet(
                u1=random_complex(rng, (dims[0], rank)),
                u2=random_complex(rng, (dims[1], rank)),
                u3=random_complex(rng, (dims[2], rank)),
            )
            perm = rng.permutation(rank)
            s1 = random_complex(rng, (rank,)) + 2.0
            s2 = random_complex(rng, (rank,)) + 2.0
            s3 = 1.0 / (s1 * s2)
            shuffled = FactorSet(
                u1=factors.u1[:, perm] * s1[perm],
                u2=factors.u2[:, perm] * s2[perm],
                u3=factors.u3[:, perm] * s3[perm],
            )
            t0 = reconstruct(factors)
            diff = np.linalg.norm(t0 - reconstruct(shuffled)) / np.linalg.norm(t0)
            worst_scale = max(worst_scale, diff)
        ok_a = worst_scale < 1e-10

        worst_gen = 0.0
        for _ in range(1000):
            w = np.exp(2j * np.pi * rng.uniform(-0.5, 0.5))
            col = w ** np.arange(int(rng.integers(3, 12)))
            scale = random_complex(rng, ()) + 2.0
            diff = abs(estimate_generator(col) - estimate_generator(scale * col))
            worst_gen = max(worst_gen, diff / abs(w))
        ok_b = worst_gen < 1e-10

        cfg = ScenarioConfig(
            tx_region=(2.0, 2.0),
            rx_region=(2.0, 2.0),
            grid_pitch=0.2,
            n_tx=4,
            n_rx=4,
            tx_paths=2,
            rx_paths=2,
            snr_db=15.0,
            tx_pilot_area=(4, 4),
            rx_pilot_area=(4, 4),
        )
        plan = build_pilot_plan(cfg)
        worst_perm = 0.0
        for case in range(1000):
            channel = generate_channel(cfg, np.random.default_rng([7, case, 0]))
            obs = simulate_pilots(plan, channel, np.random.default_rng([7, case, 1]))
            base = AngleEstimates(
                channel.tx_theta, channel.tx_phi, channel.rx_theta, channel.rx_phi
            )
            perm_t = rng.permutation(cfg.tx_paths)
            perm_r = rng.permutation(cfg.rx_paths)
            shuffled = AngleEstimates(
                channel.tx_theta[perm_t],
                channel.tx_phi[perm_t],
                channel.rx_theta[perm_r],
                channel.rx_phi[perm_r],
            )
            h0 = reconstruct_channel(
                base, estimate_gains(obs, plan, base),
                plan.rx_initial, plan.tx_initial, cfg,
            )
            h1 = reconstruct_channel(
                shuffled, estimate_gains(obs, plan, shuffled),
                plan.rx_initial, plan.tx_initial, cfg,
            )
            diff = np.linalg.norm(h0 - h1) / np.linalg.norm(h0)
            worst_perm = max(worst_perm, diff)
        ok_c = worst_perm < 1e-10

        report(
            5,
            ok_a and ok_b and ok_c,
            f"worst relative deviations: scaling {worst_scale:.2e}, generator "
            f"{worst_gen:.2e}, gain-refit permutation {worst_perm:.2e} "
            f"(all < 1e-10, 1000 cases each)",
        )

    def test_6_kernel_suite(self):
        rng = np.random.default_rng(2025)
        worst = {"kron": 0.0, "khatri_rao": 0.0, "unfold": 0.0, "pinv": 0.0}
        for _ in range(500):
            a = random_complex(rng, tuple(rng.integers(1, 5, size=2)))
            b = random_complex(rng, tuple(rng.integers(1, 5, size=2)))
            worst["kron"] = max(
                worst["kron"], np.max(np.abs(kronecker(a, b) - kron_loops(a, b)))
            )

            rank = int(rng.integers(1, 5))
            c = random_complex(rng, (int(rng.integers(1, 6)), rank))
            d = random_complex(rng, (int(rng.integers(1, 6)), rank))
            worst["khatri_rao"] = max(
                worst["khatri_rao"],
                np.max(np.abs(khatri_rao(c, d) - khatri_rao_loops(c, d))),
            )

            tensor = random_complex(rng, tuple(rng.integers(2, 5, size=3)))
            for mode in (1, 2, 3):
                worst["unfold"] = max(
                    worst["unfold"],
                    np.max(
                        np.abs(unfold(tensor, mode) - unfold_loops(tensor, mode))
                    ),
                )

            m, n = (int(v) for v in rng.integers(1, 6, size=2))
            matrix = random_complex(rng, (m, n))
            if rng.uniform() < 0.3 and min(m, n) > 1:
                matrix[:, -1] = matrix[:, 0]  # force rank deficiency
            worst["pinv"] = max(
                worst["pinv"], moore_penrose_errors(matrix, pseudo_inverse(matrix))
            )
        ok = all(v < 1e-9 for v in worst.values())
        detail = ", ".join(f"{k} {v:.2e}" for k, v in worst.items())
        report(6, ok, f"worst errors over 500 cases: {detail} (all < 1e-9)")

    def test_7_als_monotonicity(self):
        rng = np.random.default_rng(2026)
        violations = 0
        worst_rise = -np.inf
        for _ in range(100):
            rank = int(rng.integers(1, 4))
            dims = rng.integers(3, 7, size=3)
            factors = FactorSet(
                u1=random_complex(rng, (dims[0], rank)),
                u2=random_complex(rng, (dims[1], rank)),
                u3=random_complex(rng, (dims[2], rank)),
            )
            tensor = reconstruct(factors)
            tensor = tensor + 0.05 * random_complex(rng, tensor.shape)
            _, report_out = cp_als(tensor, rank, rng=rng, max_iter=80, restarts=0)
            rises = np.diff(np.asarray(report_out.residuals))
            worst_rise = max(worst_rise, float(rises.max(initial=-np.inf)))
            if np.any(rises > 1e-12):
                violations += 1
        report(
            7,
            violations == 0,
            f"{violations}/100 noisy tensors show a residual rise above 1e-12 "
            f"(largest step {worst_rise:.2e})",
        )

    def test_8_run_determinism(self, tmp_path, capsys):
        from matensor.cli import main

        out_dir = tmp_path / "out"
        config = tmp_path / "repro.ini"
        config.write_text(
            "[scenario]\n"
            "tx_region = 2.0 2.0\n"
            "rx_region = 2.0 2.0\n"
            "grid_pitch = 0.2\n"
            "n_tx = 4\n"
            "n_rx = 4\n"
            "tx_paths = 2\n"
            "rx_paths = 2\n"
            "snr_db = 15\n"
            "tx_pilot_area = 4 4\n"
            "rx_pilot_area = 4 4\n"
            "\n"
            "[sweep]\n"
            "snr_db = 10 20\n"
            "trials = 2\n"
            "estimators = tensor somp\n"
            "grid_size = 16\n"
            "\n"
            "[output]\n"
            f"directory = {out_dir}\n"
        )
        assert main(["run", "--config", str(config), "--seed", "11"]) == 0
        first = (out_dir / "rows.csv").read_bytes()
        assert main(["run", "--config", str(config), "--seed", "11"]) == 0
        second = (out_dir / "rows.csv").read_bytes()
        capsys.readouterr()
        report(
            8,
            first == second and len(first) > 0,
            f"two runs wrote identical rows.csv ({len(first)} bytes)",
        )
