//! Energy functionals, the vacuum-threshold pair, the dip-minimizer family
//! and energy-based no-vacuum certificates.
//!
//! The critical value 4/3 is the Ginzburg-Landau energy of the black soliton
//! tanh(x); below it, the modulus of any solution stays above the threshold
//! `vacuum_threshold(b)`.

use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::field::{ComplexField, Grid1D, SobolevIndex};
use crate::madelung::HydroState;
use crate::spectral::h_s_norm_sq;
use crate::util::Kahan;

/// Ginzburg-Landau energy of the black soliton; no vacuum strictly below it.
pub const CRITICAL_ENERGY: f64 = 4.0 / 3.0;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyReport {
    pub s: f64,
    pub total: f64,
    /// (1/2) ||q'||^2 in the shifted Sobolev index
    pub gradient_part: f64,
    /// (1/2) || |q|^2 - 1 ||^2 in the shifted Sobolev index
    pub amplitude_part: f64,
}

/// Fractional energy at index `s > 1/2`:
/// `(1/2)||q'||^2_{H^{s-1}} + (1/2)|| |q|^2-1 ||^2_{H^{s-1}}`.
/// At s = 1 this is the Ginzburg-Landau energy. Accurate for smooth periodic
/// fields; fields with corners lose the unresolvable spectral tail.
pub fn sobolev_energy(q: &ComplexField, s: SobolevIndex) -> Result<EnergyReport> {
    let s = s.require_above(0.5, "the energy functional")?;
    let shifted = SobolevIndex::new(s.value() - 1.0)?;
    let gradient_part = 0.5 * h_s_norm_sq(&q.derivative(1), shifted);
    let amplitude_part = 0.5 * h_s_norm_sq(&q.modulus_sq_minus_one(), shifted);
    Ok(EnergyReport {
        s: s.value(),
        total: gradient_part + amplitude_part,
        gradient_part,
        amplitude_part,
    })
}

/// Ginzburg-Landau energy (the s = 1 case).
pub fn gl_energy(q: &ComplexField) -> f64 {
    sobolev_energy(q, SobolevIndex::new(1.0).expect("finite")).expect("s = 1 valid").total
}

/// Hydrodynamic energy `(1/2) int (rho')^2/(4 rho) + rho v^2 + (rho-1)^2`
/// by trapezoid quadrature with a spectral density gradient.
pub fn hydro_energy(state: &HydroState) -> Result<f64> {
    let grid = state.grid();
    let drho = state.rho_minus_one_field().derivative(1);
    let mut acc = Kahan::new();
    for ((&r, &v), d) in state.rho().iter().zip(state.v()).zip(drho.samples()) {
        let dr = d.re;
        acc.add(dr * dr / (4.0 * r) + r * v * v + (r - 1.0) * (r - 1.0));
    }
    Ok(0.5 * grid.spacing() * acc.value())
}

/// Least energy among fields whose modulus dips to `delta`:
/// the cubic `4/3 - 2 delta + (2/3) delta^3`, a strictly decreasing
/// bijection [0,1] -> [0, 4/3].
pub fn min_energy_with_dip(delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(LabError::Domain(format!("dip {delta} outside [0, 1]")));
    }
    // the cubic lands in [0, 4/3] exactly; clamp away cancellation dust at
    // the delta = 1 endpoint
    Ok((CRITICAL_ENERGY - 2.0 * delta + (2.0 / 3.0) * delta.powi(3)).clamp(0.0, CRITICAL_ENERGY))
}

/// Inverse of [`min_energy_with_dip`] by bisection (monotone, so this is
/// unconditionally robust; the closed-form cubic roots risk branch errors
/// near the endpoints). Endpoints are exact: 0 -> 1, 4/3 -> 0.
pub fn vacuum_threshold(energy_bound: f64) -> Result<f64> {
    if !(0.0..=CRITICAL_ENERGY).contains(&energy_bound) {
        return Err(LabError::Domain(format!(
            "energy bound {energy_bound} outside [0, 4/3]"
        )));
    }
    if energy_bound == 0.0 {
        return Ok(1.0);
    }
    if energy_bound == CRITICAL_ENERGY {
        return Ok(0.0);
    }
    let mut lo = 0.0_f64; // cubic(lo) >= b
    let mut hi = 1.0_f64; // cubic(hi) <= b
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if min_energy_with_dip(mid)? > energy_bound {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The minimizing profile `tanh(|x| + atanh(delta))` sampled on the grid:
/// even, real, dips to `delta` at x = 0, equal to 1 at the box edges up to
/// an exponentially small tail. Only `delta` strictly inside (0,1) is
/// periodizable.
pub fn dip_minimizer(delta: f64, grid: &Arc<Grid1D>) -> Result<ComplexField> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(LabError::Domain(format!("dip {delta} outside (0, 1)")));
    }
    let a = delta.atanh();
    ComplexField::from_fn(grid, |x| Complex64::new((x.abs() + a).tanh(), 0.0))
}

/// Ginzburg-Landau energy of the dip minimizer on the box, using the analytic
/// derivative. Both energy terms reduce to sech^4(|x|+a); the profile has a
/// corner at x = 0, so the integral is folded onto [0, L/2] where the
/// integrand is smooth, and the trapezoid rule gets an endpoint correction
/// with the analytic slope. Matches the cubic `min_energy_with_dip` to ~1e-9
/// at L = 60, N = 4096.
pub fn dip_minimizer_energy(delta: f64, length: f64, n: usize) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(LabError::Domain(format!("dip {delta} outside (0, 1)")));
    }
    if n == 0 || n % 2 != 0 || !(length > 0.0) {
        return Err(LabError::Parameter("need even n and positive length".into()));
    }
    let a = delta.atanh();
    let h = length / n as f64;
    let m = n / 2;
    let g = |x: f64| {
        let c = (x + a).cosh();
        2.0 / (c * c * c * c)
    };
    let mut acc = Kahan::new();
    acc.add(0.5 * g(0.0));
    for i in 1..m {
        acc.add(g(i as f64 * h));
    }
    acc.add(0.5 * g(length / 2.0));
    let trapezoid = h * acc.value();
    // d/dx [2 sech^4(x+a)] at the fold and the far edge
    let slope = |x: f64| {
        let c = (x + a).cosh();
        -8.0 * (x + a).tanh() / (c * c * c * c)
    };
    Ok(trapezoid - h * h / 12.0 * (slope(length / 2.0) - slope(0.0)))
}

/// Energy of tanh on `[-L/2, L/2]` by the dedicated non-periodic trapezoid
/// path with the analytic derivative sech^2 (tanh itself connects -1 to 1
/// and is not periodizable). Equals 4/3 up to an exponentially small tail.
pub fn black_soliton_energy(length: f64, n: usize) -> f64 {
    let h = length / n as f64;
    let g = |x: f64| {
        let c = x.cosh();
        1.0 / (c * c * c * c)
    };
    let mut acc = Kahan::new();
    acc.add(0.5 * g(-length / 2.0));
    for i in 1..n {
        acc.add(g(-length / 2.0 + i as f64 * h));
    }
    acc.add(0.5 * g(length / 2.0));
    h * acc.value()
}

/// Outcome of the energy-gap no-vacuum check along a trajectory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VacuumCertificate {
    pub energy_bound: f64,
    pub threshold: f64,
    pub observed_min: f64,
    pub passed: bool,
}

/// Certify `min |q(t)| > vacuum_threshold(b)` over sampled trajectory minima;
/// requires `initial_energy < b < 4/3`.
pub fn vacuum_certificate(
    initial_energy: f64,
    min_modulus_samples: &[f64],
    energy_bound: f64,
) -> Result<VacuumCertificate> {
    if !(energy_bound > initial_energy && energy_bound < CRITICAL_ENERGY) {
        return Err(LabError::Domain(format!(
            "energy bound {energy_bound} outside ({initial_energy}, {CRITICAL_ENERGY})"
        )));
    }
    if min_modulus_samples.is_empty() {
        return Err(LabError::Parameter("no trajectory samples".into()));
    }
    let threshold = vacuum_threshold(energy_bound)?;
    let observed_min = min_modulus_samples.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(VacuumCertificate {
        energy_bound,
        threshold,
        observed_min,
        passed: observed_min > threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::madelung;

    #[test]
    fn cubic_endpoints_and_midpoint() {
        assert_eq!(min_energy_with_dip(0.0).unwrap(), CRITICAL_ENERGY);
        assert!(min_energy_with_dip(1.0).unwrap().abs() < 1e-15);
        // 4/3 - 1 + 1/12 = 5/12
        assert!((min_energy_with_dip(0.5).unwrap() - 5.0 / 12.0).abs() < 1e-15);
        assert!(min_energy_with_dip(-0.1).is_err());
        assert!(min_energy_with_dip(1.1).is_err());
    }

    #[test]
    fn threshold_endpoints_exact() {
        assert_eq!(vacuum_threshold(0.0).unwrap(), 1.0);
        assert_eq!(vacuum_threshold(CRITICAL_ENERGY).unwrap(), 0.0);
        assert!(vacuum_threshold(-0.01).is_err());
        assert!(vacuum_threshold(1.5).is_err());
    }

    #[test]
    fn threshold_inverts_cubic() {
        for i in 0..=1000 {
            let delta = i as f64 / 1000.0;
            let b = min_energy_with_dip(delta).unwrap();
            let back = vacuum_threshold(b).unwrap();
            assert!((back - delta).abs() < 1e-10, "delta {delta}: back {back}");
        }
    }

    #[test]
    fn cubic_strictly_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let b = min_energy_with_dip(i as f64 / 1000.0).unwrap();
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn ground_state_energy_zero() {
        let g = Grid1D::new(60.0, 256).unwrap();
        let one = ComplexField::constant(&g, Complex64::new(1.0, 0.0));
        let rep = sobolev_energy(&one, SobolevIndex::new(1.0).unwrap()).unwrap();
        assert!(rep.total < 1e-24);
        assert!((rep.total - rep.gradient_part - rep.amplitude_part).abs() <= 1e-12 * rep.total.max(1e-300));
    }

    #[test]
    fn black_soliton_energy_is_critical() {
        let e = black_soliton_energy(40.0, 2048);
        assert!((e - CRITICAL_ENERGY).abs() < 1e-8, "E(tanh) = {e}");
    }

    #[test]
    fn dip_minimizer_profile() {
        let g = Grid1D::new(60.0, 4096).unwrap();
        let q = dip_minimizer(0.5, &g).unwrap();
        // dips to delta at 0, even, -> 1 at the edges
        assert!((q.samples()[g.mid()].re - 0.5).abs() < 1e-12);
        assert!((q.samples()[0].re - 1.0).abs() < 1e-12);
        for j in 1..g.n_points() / 2 {
            let l = q.samples()[g.mid() - j].re;
            let r = q.samples()[g.mid() + j].re;
            assert!((l - r).abs() < 1e-14);
        }
        assert!(dip_minimizer(0.0, &g).is_err());
        assert!(dip_minimizer(1.0, &g).is_err());
        // near-1 dips approach the constant field
        let almost = dip_minimizer(1.0 - 1e-9, &g).unwrap();
        assert!(almost.samples().iter().all(|z| (z.re - 1.0).abs() < 1e-8));
    }

    #[test]
    fn dip_minimizer_energy_matches_cubic() {
        for delta in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let e = dip_minimizer_energy(delta, 60.0, 4096).unwrap();
            let expect = min_energy_with_dip(delta).unwrap();
            assert!(
                (e - expect).abs() < 1e-6 * (1.0 + expect),
                "delta {delta}: {e} vs {expect}"
            );
        }
    }

    #[test]
    fn generic_spectral_energy_on_dip_minimizer_regression() {
        // the corner at x = 0 puts ~J^2 L / (pi^2 N) of gradient energy above
        // the Nyquist frequency, so the generic route undershoots the cubic
        // by O(1e-3) at N = 4096; pinned here so a change in either path shows
        let g = Grid1D::new(60.0, 4096).unwrap();
        let q = dip_minimizer(0.5, &g).unwrap();
        let spectral = sobolev_energy(&q, SobolevIndex::new(1.0).unwrap()).unwrap().total;
        let exact = min_energy_with_dip(0.5).unwrap();
        let gap = spectral - exact;
        assert!(gap.abs() < 5e-3, "spectral-route gap {gap}");
        assert!(gap.abs() > 1e-4, "corner tail unexpectedly resolved: {gap}");
    }

    #[test]
    fn hydro_energy_of_dip_state() {
        // M(q_{1/2}) has energy 5/12
        let g = Grid1D::new(60.0, 4096).unwrap();
        let q = dip_minimizer(0.5, &g).unwrap();
        let st = madelung::transform(&q, 1e-9).unwrap();
        let e = hydro_energy(&st).unwrap();
        // rho = tanh^2 carries the same corner; trapezoid quadrature with a
        // spectral gradient lands within the corner-limited tolerance
        assert!((e - 5.0 / 12.0).abs() < 5e-3, "hydro energy {e}");
    }

    #[test]
    fn hydro_energy_pure_velocity() {
        let g = Grid1D::new(60.0, 1024).unwrap();
        let v = crate::sampling::random_mean_free_field(&g, 1.5, 0.3, 60, 17);
        let st = HydroState::new(g.clone(), vec![1.0; 1024], v.clone()).unwrap();
        let e = hydro_energy(&st).unwrap();
        let half_v2: f64 = 0.5 * g.spacing() * v.iter().map(|x| x * x).sum::<f64>();
        assert!((e - half_v2).abs() < 1e-12 * half_v2.max(1e-12));
    }

    #[test]
    fn energy_consistency_through_transform() {
        // E(M^-1(state)) = hydro energy for smooth vacuum-free fields
        let g = Grid1D::new(60.0, 1024).unwrap();
        for seed in 0..10u64 {
            let q = crate::sampling::random_vacuum_free(&g, 1.5, 0.5, 60, 0.35, 700 + seed);
            let e1 = gl_energy(&q);
            let st = madelung::transform(&q, 1e-9).unwrap();
            let eh = hydro_energy(&st).unwrap();
            assert!(
                (eh - e1).abs() <= 1e-6 * (1.0 + e1),
                "seed {seed}: hydro {eh} vs field {e1}"
            );
        }
    }

    #[test]
    fn fractional_energy_monotone_in_index() {
        let g = Grid1D::new(60.0, 1024).unwrap();
        for seed in 0..10u64 {
            let q = crate::sampling::random_vacuum_free(&g, 1.0, 0.5, 60, 0.3, 50 + seed);
            let e06 = sobolev_energy(&q, SobolevIndex::new(0.6).unwrap()).unwrap().total;
            let e09 = sobolev_energy(&q, SobolevIndex::new(0.9).unwrap()).unwrap().total;
            let e1 = gl_energy(&q);
            assert!(e06 <= e09 * (1.0 + 1e-12));
            assert!(e09 <= e1 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fractional_energy_of_dip_family_bounded_by_cubic() {
        let g = Grid1D::new(60.0, 4096).unwrap();
        let q = dip_minimizer(0.9, &g).unwrap();
        let e075 = sobolev_energy(&q, SobolevIndex::new(0.75).unwrap()).unwrap().total;
        let cubic = min_energy_with_dip(0.9).unwrap();
        // monotonicity in s plus the known s = 1 value
        assert!(e075 <= cubic * (1.0 + 1e-3), "{e075} vs {cubic}");
    }

    #[test]
    fn certificate_logic() {
        let cert = vacuum_certificate(0.1, &[1.0, 0.9, 0.95], 0.5).unwrap();
        assert!(cert.passed);
        assert!((cert.observed_min - 0.9).abs() < 1e-15);
        // threshold for a tiny bound is close to 1, so a dip to 0.4 fails
        let cert2 = vacuum_certificate(0.01, &[0.4], 0.02).unwrap();
        assert!(!cert2.passed);
        assert!(vacuum_certificate(0.5, &[1.0], 0.4).is_err());
        assert!(vacuum_certificate(0.5, &[1.0], 1.4).is_err());
        assert!(vacuum_certificate(0.5, &[], 0.6).is_err());
    }

    #[test]
    fn no_cheap_counterexample_to_minimality() {
        // random vacuum-free fields with min|q| <= delta must cost at least
        // the cubic (desk check of the minimality statement)
        let g = Grid1D::new(60.0, 1024).unwrap();
        let mut checked = 0;
        for seed in 0..50u64 {
            let q = crate::sampling::random_vacuum_free(&g, 1.0, 0.97, 50, 0.02, 900 + seed);
            let (min_mod, _) = madelung::vacuum_scan(&q);
            if min_mod > 0.98 {
                continue;
            }
            let e = gl_energy(&q);
            let floor = min_energy_with_dip(min_mod).unwrap();
            assert!(e >= floor - 1e-6, "seed {seed}: E = {e} < cubic {floor} at dip {min_mod}");
            checked += 1;
        }
        assert!(checked > 10);
    }
}
