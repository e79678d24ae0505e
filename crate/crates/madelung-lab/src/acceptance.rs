//! The acceptance suite: ten numbered criteria, each with pinned parameters
//! and tolerances, returning per-check pass/fail records.
//!
//! `quick = true` shrinks grids and sample counts and widens tolerances by
//! 10x, keeping the same assertions.
//!
//! Criteria 4 and 6 exercise the dip-minimizer datum, whose derivative jump
//! at x = 0 is not spectrally representable; their conservation/agreement
//! bounds are known to fail at the pinned parameters while the solvers
//! validate cleanly on smooth data (see the companion unit suites). The
//! checks are still asserted literally and report the measured values.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;

use crate::dynamics::{self, SimConfig};
use crate::energy;
use crate::field::{Ball, ComplexField, Grid1D, SobolevIndex};
use crate::lp;
use crate::madelung;
use crate::metrics::{self, YQuadrature};
use crate::report::{AcceptanceReport, Check, CriterionOutcome, Provenance};
use crate::sampling;

fn s1() -> SobolevIndex {
    SobolevIndex::new(1.0).unwrap()
}

/// Criterion 1: the black-soliton energy from the non-periodic quadrature
/// path with the analytic derivative.
pub fn criterion_1(quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let tol = if quick { 1e-7 } else { 1e-8 };
    let e = energy::black_soliton_energy(40.0, if quick { 512 } else { 2048 });
    let checks = vec![Check::below(
        "|E(tanh) - 4/3| at L=40",
        (e - energy::CRITICAL_ENERGY).abs(),
        tol,
        Provenance::Paper,
    )];
    CriterionOutcome::new(1, "black-soliton energy", checks, t0.elapsed().as_millis())
}

/// Criterion 2: the minimizer-energy curve against the cubic.
pub fn criterion_2(quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let (l, n, tol_scale) = if quick { (60.0, 1024, 1e-5) } else { (60.0, 4096, 1e-6) };
    let mut checks = Vec::new();
    let mut worst_spectral_gap = 0.0_f64;
    let grid = Grid1D::new(l, n).unwrap();
    for delta in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let cubic = energy::min_energy_with_dip(delta).unwrap();
        let e = energy::dip_minimizer_energy(delta, l, n).unwrap();
        checks.push(Check::below(
            format!("|E(q_{delta}) - cubic| at L={l}, N={n}"),
            (e - cubic).abs(),
            tol_scale * (1.0 + cubic),
            Provenance::Paper,
        ));
        let q = energy::dip_minimizer(delta, &grid).unwrap();
        let spectral = energy::sobolev_energy(&q, s1()).unwrap().total;
        worst_spectral_gap = worst_spectral_gap.max((spectral - cubic).abs());
    }
    // the generic spectral functional cannot see past the corner at x = 0;
    // its gap is pinned as a regression bound, not a paper value
    checks.push(Check::below(
        "generic spectral route corner gap (regression)",
        worst_spectral_gap,
        5e-3,
        Provenance::Derived,
    ));
    CriterionOutcome::new(2, "minimizer-energy curve", checks, t0.elapsed().as_millis())
}

/// Criterion 3: threshold inverse round trip and exact endpoints.
pub fn criterion_3(quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let sweep = if quick { 100 } else { 1000 };
    let mut worst = 0.0_f64;
    for i in 0..=sweep {
        let delta = i as f64 / sweep as f64;
        let b = energy::min_energy_with_dip(delta).unwrap();
        worst = worst.max((energy::vacuum_threshold(b).unwrap() - delta).abs());
    }
    let checks = vec![
        Check::below(format!("max |inverse(cubic(d)) - d| over {sweep}-point sweep"), worst, 1e-10, Provenance::Derived),
        Check::exactly("threshold at 0", energy::vacuum_threshold(0.0).unwrap(), 1.0, Provenance::Paper),
        Check::exactly(
            "threshold at 4/3",
            energy::vacuum_threshold(energy::CRITICAL_ENERGY).unwrap(),
            0.0,
            Provenance::Paper,
        ),
    ];
    CriterionOutcome::new(3, "threshold inverse", checks, t0.elapsed().as_millis())
}

/// Criteria 4 and 5 share one trajectory: conservation along the
/// dip-minimizer evolution, and the no-vacuum certificate on the same run.
pub fn criteria_4_and_5(quick: bool) -> (CriterionOutcome, CriterionOutcome) {
    let t0 = Instant::now();
    let (n, tol) = if quick { (1024, 1e-5) } else { (2048, 1e-6) };
    let grid = Grid1D::new(60.0, n).unwrap();
    let q0 = energy::dip_minimizer(0.5, &grid).unwrap();
    let cfg = SimConfig::gp(1e-3, 1.0);
    let traj = dynamics::evolve_gp(&q0, &cfg).expect("evolution completes");
    let drift = traj.max_energy_drift();
    let cfg_half = SimConfig::gp(5e-4, 1.0);
    let traj_half = dynamics::evolve_gp(&q0, &cfg_half).expect("evolution completes");
    let ratio = drift / traj_half.max_energy_drift().max(1e-300);

    let checks4 = vec![
        Check::below(
            format!("relative energy drift, dip start, N={n}, dt=1e-3, T=1"),
            drift,
            tol,
            Provenance::Paper,
        ),
        Check::below("drift reduction under dt/2 within [2.5, 6]", ratio, 6.0, Provenance::Derived),
        Check::above("drift reduction under dt/2 within [2.5, 6]", ratio, 2.5, Provenance::Derived),
    ];
    let c4 = CriterionOutcome::new(4, "wave-flow energy conservation", checks4, t0.elapsed().as_millis());

    let t1 = Instant::now();
    let e0 = traj.diagnostics[0].energy;
    let mins: Vec<f64> = traj.diagnostics.iter().map(|d| d.min_modulus_or_density).collect();
    let cert = energy::vacuum_certificate(e0, &mins, e0 + 0.01).unwrap();
    let checks5 = vec![
        Check::above(
            format!("min |q(t)| along the run vs threshold {:.6}", cert.threshold),
            cert.observed_min,
            cert.threshold,
            Provenance::Paper,
        ),
    ];
    let c5 = CriterionOutcome::new(5, "no-vacuum certificate", checks5, t1.elapsed().as_millis());
    (c4, c5)
}

/// Criterion 6: flow conjugation from the dip-minimizer state across three
/// simultaneous (dt, h) refinement levels.
pub fn criterion_6(quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let (levels, tol): (&[(usize, f64)], f64) = if quick {
        (&[(256, 8e-3), (512, 4e-3), (1024, 2e-3)], 1e-2)
    } else {
        (&[(512, 4e-3), (1024, 2e-3), (2048, 1e-3)], 1e-3)
    };
    let mut gaps = Vec::new();
    for &(n, dt_gp) in levels {
        let grid = Grid1D::new(60.0, n).unwrap();
        let q0 = energy::dip_minimizer(0.5, &grid).unwrap();
        let state0 = madelung::transform(&q0, 1e-9).unwrap();
        let rep = dynamics::conjugation_gap(&state0, 0.5, dt_gp, s1(), true)
            .expect("conjugation run completes");
        gaps.push(rep.theta_gap);
    }
    let (n_fine, _) = levels[levels.len() - 1];
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    let gaps_text: Vec<String> = gaps.iter().map(|g| format!("{g:.3e}")).collect();
    let checks = vec![
        Check::below(
            format!("theta gap between routes at T=0.5, N={n_fine}"),
            *gaps.last().unwrap(),
            tol,
            Provenance::Paper,
        ),
        Check::exactly(
            format!("gaps decrease monotonically across levels [{}]", gaps_text.join(", ")),
            monotone as u8 as f64,
            1.0,
            Provenance::Derived,
        ),
    ];
    CriterionOutcome::new(6, "flow conjugation", checks, t0.elapsed().as_millis())
}

/// Criterion 7: closed-form phase alignment against the brute-force scan, in
/// both the weighted-H^s form and the ball form.
pub fn criterion_7(quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let (n, pairs, tol) = if quick { (512, 10, 1e-8) } else { (2048, 100, 1e-9) };
    let grid = Grid1D::new(60.0, n).unwrap();
    let s_cycle = [0.75, 1.0, 1.5];
    let mut worst_hs = 0.0_f64;
    for i in 0..pairs {
        let s = SobolevIndex::new(s_cycle[i % 3]).unwrap();
        let a = sampling::random_decaying_field(&grid, 1.0, 0.7, n / 8, 5000 + 2 * i as u64);
        let b = sampling::random_decaying_field(&grid, 1.0, 0.7, n / 8, 5001 + 2 * i as u64);
        let center = grid.x()[(i * 37) % n];
        let w: Vec<f64> =
            grid.x().iter().map(|&x| 1.0 / grid.periodic_distance(x, center).cosh()).collect();
        let (_, closed) = metrics::phase_align(&a, &b, s, &w).unwrap();
        let scanned = metrics::phase_scan_oracle(&a, &b, s, &w, 3600).unwrap();
        worst_hs = worst_hs.max((closed - scanned).abs());
    }
    let mut worst_ball = 0.0_f64;
    for i in 0..pairs {
        let s = SobolevIndex::new(s_cycle[i % 3]).unwrap();
        let a = sampling::random_vacuum_free(&grid, 1.0, 0.5, n / 8, 0.3, 7000 + 2 * i as u64);
        let b = sampling::random_vacuum_free(&grid, 1.0, 0.5, n / 8, 0.3, 7001 + 2 * i as u64);
        let center = -20.0 + (i as f64 * 0.83) % 40.0;
        let ball = Ball::new(center, 2.0).unwrap();
        let closed = metrics::metric_d_star_ball(&a, &b, s, ball).unwrap();
        let scanned = metrics::ball_scan_oracle(&a, &b, s, ball, 3600).unwrap();
        worst_ball = worst_ball.max((closed - scanned).abs());
    }
    let checks = vec![
        Check::below(
            format!("max |closed - scan| over {pairs} weighted-H^s pairs"),
            worst_hs,
            tol,
            Provenance::Derived,
        ),
        Check::below(
            format!("max |closed - scan| over {pairs} ball-form pairs"),
            worst_ball,
            tol,
            Provenance::Derived,
        ),
    ];
    CriterionOutcome::new(7, "phase-infimum oracle", checks, t0.elapsed().as_millis())
}

/// Criterion 8: bilipschitz ratio statistics are finite, seed-stable, and do
/// not grow under grid refinement.
pub fn criterion_8(quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let (n, samples) = if quick { (512, 20) } else { (2048, 100) };
    let grid = Grid1D::new(60.0, n).unwrap();
    let grid2 = Grid1D::new(60.0, 2 * n).unwrap();
    let s = s1();
    let amp = 0.35;
    let quad = YQuadrature::AllPoints;
    let rep_a = metrics::bilipschitz_probe(&grid, s, samples, 1.2, amp, 1001, quad).unwrap();
    let rep_b = metrics::bilipschitz_probe(&grid, s, samples, 1.2, amp, 2002, quad).unwrap();
    let rep_fine =
        metrics::bilipschitz_probe(&grid2, s, samples, 1.2, amp, 1001, YQuadrature::Stride(2))
            .unwrap();
    let var1 = (rep_a.max_theta_over_d - rep_b.max_theta_over_d).abs() / rep_a.max_theta_over_d;
    let var2 = (rep_a.max_d_over_theta - rep_b.max_d_over_theta).abs() / rep_a.max_d_over_theta;
    let checks = vec![
        Check::below("max theta/d finite", rep_a.max_theta_over_d, 1e6, Provenance::Paper),
        Check::below("max d/theta finite", rep_a.max_d_over_theta, 1e6, Provenance::Paper),
        Check::below("theta/d maximum cross-seed variation", var1, 0.2, Provenance::Derived),
        Check::below("d/theta maximum cross-seed variation", var2, 0.2, Provenance::Derived),
        Check::below(
            "theta/d maximum growth under N -> 2N",
            rep_fine.max_theta_over_d / rep_a.max_theta_over_d,
            1.25,
            Provenance::Derived,
        ),
        Check::below(
            "d/theta maximum growth under N -> 2N",
            rep_fine.max_d_over_theta / rep_a.max_d_over_theta,
            1.25,
            Provenance::Derived,
        ),
    ];
    CriterionOutcome::new(8, "bilipschitz ratio probe", checks, t0.elapsed().as_millis())
}

/// Criterion 9: dyadic-analysis suite: partition of unity, paraproduct
/// reconstruction, product-estimate ratios finite and refinement-stable.
pub fn criterion_9(quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let n = if quick { 512 } else { 2048 };
    let grid = Grid1D::new(60.0, n).unwrap();
    let partition = lp::DyadicPartition::new(&grid).unwrap();
    let mut residual = 0.0_f64;
    for &xi in grid.xi() {
        let mut acc = lp::chi(xi);
        for j in 0..=partition.j_max() {
            acc += partition.block_symbol(j, xi);
        }
        residual = residual.max((acc - 1.0).abs());
    }

    let mut bony_worst = 0.0_f64;
    let bony_grid = Grid1D::new(60.0, n.min(1024)).unwrap();
    for seed in 0..5u64 {
        let f = sampling::random_band_limited_field(&bony_grid, 1.0, 0.7, bony_grid.n_points() / 4 - 2, 800 + seed);
        let g = sampling::random_band_limited_field(&bony_grid, 1.0, 0.6, bony_grid.n_points() / 4 - 2, 900 + seed);
        let (tf, r, tg) = lp::bony_decompose(&f, &g).unwrap();
        let sum = tf.add(&r).unwrap().add(&tg).unwrap();
        let prod = f.with_samples(
            f.samples().iter().zip(g.samples()).map(|(a, b)| a * b).collect(),
        );
        let scale = crate::spectral::l2_norm(&prod).max(1e-30);
        bony_worst = bony_worst.max(crate::spectral::l2_norm(&sum.sub(&prod).unwrap()) / scale);
    }

    let mut checks = vec![
        Check::below("partition-of-unity residual on all grid frequencies", residual, 1e-12, Provenance::Paper),
        Check::below("paraproduct reconstruction relative residual", bony_worst, 1e-10, Provenance::Derived),
    ];

    let probe_n = if quick { 512 } else { 1024 };
    let probe_samples = if quick { 50 } else { 200 };
    let coarse = Grid1D::new(60.0, probe_n).unwrap();
    let fine = Grid1D::new(60.0, 2 * probe_n).unwrap();
    for s_val in [0.75, 1.0, 1.5] {
        let s = SobolevIndex::new(s_val).unwrap();
        let a = lp::product_estimate_probe(&coarse, s, probe_samples, 31).unwrap();
        let b = lp::product_estimate_probe(&fine, s, probe_samples, 31).unwrap();
        checks.push(Check::below(
            format!("product ratio (H^s) finite at s={s_val}"),
            a.max_ratio_hs,
            1e3,
            Provenance::Paper,
        ));
        checks.push(Check::below(
            format!("product ratio (shifted) finite at s={s_val}"),
            a.max_ratio_hs_shift,
            1e3,
            Provenance::Paper,
        ));
        checks.push(Check::below(
            format!("product ratio growth under refinement at s={s_val}"),
            b.max_ratio_hs / a.max_ratio_hs,
            1.1,
            Provenance::Derived,
        ));
    }
    CriterionOutcome::new(9, "dyadic-analysis suite", checks, t0.elapsed().as_millis())
}

/// Criterion 10: both Madelung round trips.
pub fn criterion_10(quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let (n, count) = if quick { (256, 20) } else { (1024, 100) };
    let grid: Arc<Grid1D> = Grid1D::new(60.0, n).unwrap();
    let mut worst_state = 0.0_f64;
    for seed in 0..count {
        let mut rho = sampling::random_real_field(&grid, 1.5, 0.4, n / 12, 3000 + seed);
        for r in rho.iter_mut() {
            *r += 1.0;
        }
        let v = sampling::random_mean_free_field(&grid, 1.5, 0.3, n / 12, 4000 + seed);
        let st = madelung::HydroState::new(grid.clone(), rho, v).unwrap();
        let q = madelung::invert(&st).unwrap();
        let back = madelung::transform(&q, madelung::DEFAULT_VACUUM_FLOOR).unwrap();
        let rho_err = st
            .rho()
            .iter()
            .zip(back.rho())
            .map(|(a, b)| ((a - b) / a).abs())
            .fold(0.0, f64::max);
        let v_err = st.v().iter().zip(back.v()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst_state = worst_state.max(rho_err.max(v_err));
    }
    let mut worst_field = 0.0_f64;
    for seed in 0..count {
        let q = sampling::random_vacuum_free(&grid, 1.5, 0.5, n / 12, 0.3, 6000 + seed);
        let st = madelung::transform(&q, madelung::DEFAULT_VACUUM_FLOOR).unwrap();
        let qt = madelung::invert(&st).unwrap();
        let w = vec![1.0; n];
        let (lambda, _) =
            metrics::phase_align(&qt, &q, SobolevIndex::new(0.0).unwrap(), &w).unwrap();
        let gap = q
            .samples()
            .iter()
            .zip(qt.samples())
            .map(|(orig, rec)| (orig - rec * lambda).norm())
            .fold(0.0, f64::max);
        worst_field = worst_field.max(gap);
    }
    let tol = if quick { 1e-7 } else { 1e-8 };
    let checks = vec![
        Check::below(
            format!("state round trip worst error over {count} states"),
            worst_state,
            tol,
            Provenance::Derived,
        ),
        Check::below(
            format!("field round trip (phase-aligned) worst error over {count} fields"),
            worst_field,
            tol,
            Provenance::Derived,
        ),
    ];
    CriterionOutcome::new(10, "Madelung round trips", checks, t0.elapsed().as_millis())
}

/// Run every criterion and aggregate.
pub fn run_all(quick: bool) -> AcceptanceReport {
    let t0 = Instant::now();
    let mut criteria = Vec::new();
    criteria.push(criterion_1(quick));
    criteria.push(criterion_2(quick));
    criteria.push(criterion_3(quick));
    let (c4, c5) = criteria_4_and_5(quick);
    criteria.push(c4);
    criteria.push(c5);
    criteria.push(criterion_6(quick));
    criteria.push(criterion_7(quick));
    criteria.push(criterion_8(quick));
    criteria.push(criterion_9(quick));
    criteria.push(criterion_10(quick));
    let all_passed = criteria.iter().all(|c| c.passed);
    AcceptanceReport { quick, criteria, all_passed, total_wall_ms: t0.elapsed().as_millis() }
}

/// Helper used by trajectory-level tests: the distance of a field to the
/// constant 1 in the given index (reported, never asserted against theory).
pub fn distance_to_one(q: &ComplexField, s: SobolevIndex) -> f64 {
    let one = ComplexField::constant(q.grid(), Complex64::new(1.0, 0.0));
    metrics::metric_d(&one, q, s, YQuadrature::AllPoints).unwrap_or(f64::NAN)
}

/// Energy-to-distance ratio over the dip sweep (diagnostic output for
/// reports; the constant is empirical).
pub fn dip_sweep_distance_ratio(grid: &Arc<Grid1D>) -> Vec<(f64, f64)> {
    [0.25, 0.5, 0.75, 0.9]
        .iter()
        .map(|&delta| {
            let q = energy::dip_minimizer(delta, grid).unwrap();
            let d = distance_to_one(&q, s1());
            let e = energy::min_energy_with_dip(delta).unwrap();
            (delta, d / e.sqrt())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_criterion_1_passes() {
        let c = criterion_1(true);
        assert!(c.passed, "{:?}", c.detail_lines());
    }

    #[test]
    fn quick_criterion_3_passes() {
        let c = criterion_3(true);
        assert!(c.passed, "{:?}", c.detail_lines());
    }

    #[test]
    fn outcome_lines_render() {
        let c = criterion_1(true);
        assert!(c.summary_line().contains("criterion"));
        assert!(!c.detail_lines().is_empty());
    }

    #[test]
    fn h_s_norm_reexport_used() {
        // keep the helper honest: distance to one of 1 is zero
        let g = Grid1D::new(60.0, 256).unwrap();
        let one = ComplexField::constant(&g, Complex64::new(1.0, 0.0));
        assert!(distance_to_one(&one, s1()) < 1e-10);
    }
}
