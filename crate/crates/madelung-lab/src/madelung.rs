//! The Madelung transform `q -> (|q|^2, Im[q'/q])`, its inverse through a
//! spatial primitive of the velocity, and vacuum detection.
//!
//! The inverse is defined only up to a constant phase; this implementation
//! fixes the representative by anchoring the phase to 0 at x = 0 (the box
//! midpoint). Cross-implementation comparisons must phase-align first.

use num_complex::Complex64;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::field::{ComplexField, Grid1D};

/// Default modulus floor below which the transform refuses to divide.
pub const DEFAULT_VACUUM_FLOOR: f64 = 1e-6;

/// Periodicity gate for the inverse: |mean(v)| * L must stay below this,
/// otherwise the reconstructed phase jumps across the period. This is an
/// artifact of periodic truncation and is surfaced, never wrapped silently.
pub const PHASE_COMPAT_TOL: f64 = 1e-6;

/// Density/velocity pair on a grid; `rho > 0` everywhere by construction.
#[derive(Debug, Clone)]
pub struct HydroState {
    grid: Arc<Grid1D>,
    rho: Vec<f64>,
    v: Vec<f64>,
}

impl HydroState {
    pub fn new(grid: Arc<Grid1D>, rho: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if rho.len() != grid.n_points() || v.len() != grid.n_points() {
            return Err(LabError::InvalidGrid(format!(
                "state length ({}, {}) does not match grid n = {}",
                rho.len(),
                v.len(),
                grid.n_points()
            )));
        }
        if let Some(i) = rho.iter().position(|r| !r.is_finite()) {
            return Err(LabError::NonFinite { context: "density", index: i });
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(LabError::NonFinite { context: "velocity", index: i });
        }
        if let Some(i) = rho.iter().position(|&r| r <= 0.0) {
            return Err(LabError::Vacuum { x: grid.x()[i], value: rho[i], floor: 0.0 });
        }
        Ok(Self { grid, rho, v })
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn min_density(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean_velocity(&self) -> f64 {
        self.v.iter().sum::<f64>() / self.v.len() as f64
    }

    /// rho - 1 and v as complex fields, for Sobolev-norm consumers.
    pub fn rho_minus_one_field(&self) -> ComplexField {
        ComplexField::new(
            self.grid.clone(),
            self.rho.iter().map(|&r| Complex64::new(r - 1.0, 0.0)).collect(),
        )
        .expect("finite")
    }

    pub fn v_field(&self) -> ComplexField {
        ComplexField::new(
            self.grid.clone(),
            self.v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
        .expect("finite")
    }
}

/// Anchored spatial primitive of a velocity sample vector.
#[derive(Debug, Clone)]
pub struct PhaseLift {
    pub phi: Vec<f64>,
}

/// Primitive of `v` with `phi(0) = 0` at the box midpoint. The mean of `v`
/// integrates to a linear ramp; the oscillatory part is integrated
/// spectrally, so band-limited velocities are recovered to machine accuracy.
pub fn phase_lift(grid: &Grid1D, v: &[f64]) -> Result<PhaseLift> {
    if v.len() != grid.n_points() {
        return Err(LabError::InvalidGrid("velocity length does not match grid".into()));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(LabError::NonFinite { context: "velocity", index: i });
    }
    let n = grid.n_points();
    let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    grid.fft_raw(&mut buf);
    let mean = buf[0].re / n as f64;
    for (k, (z, &xi)) in buf.iter_mut().zip(grid.xi()).enumerate() {
        if k == 0 || xi.abs() >= grid.xi_max() {
            // mean handled by the ramp; the Nyquist mode integrates to a
            // sine that vanishes at every grid point
            *z = Complex64::default();
        } else {
            *z /= Complex64::new(0.0, xi);
        }
    }
    grid.ifft_norm(&mut buf);
    let mid = grid.mid();
    let psi0 = buf[mid].re;
    let phi = grid
        .x()
        .iter()
        .zip(&buf)
        .map(|(&x, z)| mean * x + (z.re - psi0))
        .collect();
    Ok(PhaseLift { phi })
}

/// `q -> (|q|^2, Im[q'/q])`; requires `min |q| > floor`.
pub fn transform(q: &ComplexField, floor: f64) -> Result<HydroState> {
    let (min_mod, at) = vacuum_scan(q);
    if min_mod <= floor {
        return Err(LabError::Vacuum { x: at, value: min_mod, floor });
    }
    let dq = q.derivative(1);
    let rho: Vec<f64> = q.samples().iter().map(|z| z.norm_sqr()).collect();
    // Im[q'/q] = Im[q' conj(q)] / |q|^2: unit rotations of q cancel exactly
    let v: Vec<f64> = dq
        .samples()
        .iter()
        .zip(q.samples())
        .zip(&rho)
        .map(|((d, z), r)| (d * z.conj()).im / r)
        .collect();
    HydroState::new(q.grid().clone(), rho, v)
}

/// One representative of the phase-equivalence class `sqrt(rho) e^{i phi}`,
/// with `phi(0) = 0`. Fails if the mean velocity is periodicity-incompatible.
pub fn invert(state: &HydroState) -> Result<ComplexField> {
    let mean_v = state.mean_velocity();
    let product = (mean_v * state.grid().length()).abs();
    if product >= PHASE_COMPAT_TOL {
        return Err(LabError::PhaseIncompatible { mean_v, product, tol: PHASE_COMPAT_TOL });
    }
    let lift = phase_lift(state.grid(), state.v())?;
    let samples: Vec<Complex64> = state
        .rho()
        .iter()
        .zip(&lift.phi)
        .map(|(&r, &p)| Complex64::from_polar(r.sqrt(), p))
        .collect();
    ComplexField::new(state.grid().clone(), samples)
}

/// Grid minimum of |q| and its location.
pub fn vacuum_scan(q: &ComplexField) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut at = q.grid().x()[0];
    for (z, &x) in q.samples().iter().zip(q.grid().x()) {
        let m = z.norm();
        if m < min {
            min = m;
            at = x;
        }
    }
    (min, at)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SobolevIndex;
    use crate::sampling::{random_mean_free_field, random_real_field};
    use crate::spectral::h_s_norm;

    fn grid(n: usize) -> Arc<Grid1D> {
        Grid1D::new(60.0, n).unwrap()
    }

    #[test]
    fn constant_ground_state() {
        let g = grid(64);
        let one = ComplexField::constant(&g, Complex64::new(1.0, 0.0));
        let st = transform(&one, DEFAULT_VACUUM_FLOOR).unwrap();
        assert!(st.rho().iter().all(|&r| (r - 1.0).abs() < 1e-14));
        assert!(st.v().iter().all(|&v| v.abs() < 1e-12));
        let back = invert(&st).unwrap();
        for z in back.samples() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_velocity() {
        let g = grid(256);
        let xi1 = g.xi()[1];
        let q = ComplexField::from_fn(&g, |x| Complex64::new(0.0, xi1 * x).exp()).unwrap();
        let st = transform(&q, DEFAULT_VACUUM_FLOOR).unwrap();
        for (&r, &v) in st.rho().iter().zip(st.v()) {
            assert!((r - 1.0).abs() < 1e-12);
            assert!((v - xi1).abs() < 1e-9);
        }
        // winding states cannot be inverted with the anchored representative
        assert!(matches!(invert(&st), Err(LabError::PhaseIncompatible { .. })));
    }

    #[test]
    fn real_minimizer_profile() {
        let g = grid(4096);
        let a = 0.5_f64.atanh();
        let q = ComplexField::from_fn(&g, |x| Complex64::new((x.abs() + a).tanh(), 0.0)).unwrap();
        let st = transform(&q, DEFAULT_VACUUM_FLOOR).unwrap();
        for ((&r, &v), &x) in st.rho().iter().zip(st.v()).zip(g.x()) {
            let expect = (x.abs() + a).tanh().powi(2);
            assert!((r - expect).abs() < 1e-12, "rho at {x}");
            // real positive q has identically zero velocity
            assert!(v.abs() < 1e-9, "v = {v} at x = {x}");
        }
        let (m, at) = vacuum_scan(&q);
        assert!((m - 0.5).abs() < 1e-6);
        assert!(at.abs() < 1e-12);
    }

    #[test]
    fn vacuum_error_carries_location() {
        let g = grid(256);
        let q = ComplexField::from_fn(&g, |x| Complex64::new(x.tanh(), 0.0)).unwrap();
        let (m, at) = vacuum_scan(&q);
        assert_eq!(m, 0.0);
        assert_eq!(at, 0.0);
        match transform(&q, DEFAULT_VACUUM_FLOOR) {
            Err(LabError::Vacuum { x, value, .. }) => {
                assert_eq!(x, 0.0);
                assert_eq!(value, 0.0);
            }
            other => panic!("expected vacuum error, got {other:?}"),
        }
    }

    #[test]
    fn phase_lift_analytic_antiderivative() {
        let g = Grid1D::new(40.0, 2048).unwrap();
        let xi1 = g.xi()[1];
        let v: Vec<f64> = g.x().iter().map(|&x| (xi1 * x).cos()).collect();
        let lift = phase_lift(&g, &v).unwrap();
        for (&x, &p) in g.x().iter().zip(&lift.phi) {
            let expect = (xi1 * x).sin() / xi1;
            assert!((p - expect).abs() < 1e-8, "phi({x}) = {p}, expect {expect}");
        }
    }

    #[test]
    fn phase_lift_constant_velocity_ramp() {
        let g = grid(128);
        let c = 0.37;
        let v = vec![c; 128];
        let lift = phase_lift(&g, &v).unwrap();
        for (&x, &p) in g.x().iter().zip(&lift.phi) {
            assert!((p - c * x).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_lift_zero() {
        let g = grid(64);
        let lift = phase_lift(&g, &vec![0.0; 64]).unwrap();
        assert!(lift.phi.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn forward_gauge_invariance() {
        let g = grid(512);
        let q = crate::sampling::random_vacuum_free(&g, 1.0, 0.5, 60, 0.3, 11);
        let st = transform(&q, DEFAULT_VACUUM_FLOOR).unwrap();
        let lambda = Complex64::from_polar(1.0, 1.234);
        let st2 = transform(&q.scale(lambda), DEFAULT_VACUUM_FLOOR).unwrap();
        for (a, b) in st.rho().iter().zip(st2.rho()) {
            assert!((a - b).abs() < 1e-13);
        }
        for (a, b) in st.v().iter().zip(st2.v()) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn roundtrip_state_to_state() {
        // forward(inverse(state)) = state within 1e-8 on random valid states
        let g = grid(1024);
        for seed in 0..20u64 {
            let mut rho = random_real_field(&g, 1.5, 0.4, 80, 300 + seed);
            for r in rho.iter_mut() {
                *r += 1.0;
            }
            let v = random_mean_free_field(&g, 1.5, 0.3, 80, 400 + seed);
            let st = HydroState::new(g.clone(), rho, v).unwrap();
            let q = invert(&st).unwrap();
            let back = transform(&q, DEFAULT_VACUUM_FLOOR).unwrap();
            let rho_err = st
                .rho()
                .iter()
                .zip(back.rho())
                .map(|(a, b)| ((a - b) / a).abs())
                .fold(0.0, f64::max);
            let v_err =
                st.v().iter().zip(back.v()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(rho_err < 1e-8, "seed {seed}: rho err {rho_err}");
            assert!(v_err < 1e-8, "seed {seed}: v err {v_err}");
        }
    }

    #[test]
    fn roundtrip_field_to_field_up_to_phase() {
        let g = grid(1024);
        let q = crate::sampling::random_vacuum_free(&g, 1.5, 0.5, 60, 0.3, 5);
        let st = transform(&q, DEFAULT_VACUUM_FLOOR).unwrap();
        let qt = invert(&st).unwrap();
        let w = vec![1.0; g.n_points()];
        let (lambda, _) =
            crate::metrics::phase_align(&qt, &q, SobolevIndex::new(0.0).unwrap(), &w).unwrap();
        let worst = q
            .samples()
            .iter()
            .zip(qt.samples())
            .map(|(orig, rec)| (orig - rec * lambda).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "aligned mismatch {worst}");
    }

    #[test]
    fn state_rejects_vacuum_and_nan() {
        let g = grid(64);
        let mut rho = vec![1.0; 64];
        rho[10] = 0.0;
        assert!(matches!(
            HydroState::new(g.clone(), rho, vec![0.0; 64]),
            Err(LabError::Vacuum { .. })
        ));
        let mut v = vec![0.0; 64];
        v[3] = f64::INFINITY;
        assert!(HydroState::new(g, vec![1.0; 64], v).is_err());
    }

    proptest::proptest! {
        #[test]
        fn prop_roundtrip_small_states(seed in 0u64..200) {
            let g = Grid1D::new(40.0, 256).unwrap();
            let mut rho = random_real_field(&g, 1.0, 0.35, 25, seed);
            for r in rho.iter_mut() { *r += 1.0; }
            let v = random_mean_free_field(&g, 1.0, 0.25, 25, seed + 1);
            let st = HydroState::new(g.clone(), rho, v).unwrap();
            let q = invert(&st).unwrap();
            let back = transform(&q, DEFAULT_VACUUM_FLOOR).unwrap();
            let v_err = st.v().iter().zip(back.v()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            proptest::prop_assert!(v_err < 1e-8);
        }
    }
}
