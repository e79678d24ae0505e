//! Seeded random test-field generators.
//!
//! Spectral coefficients are drawn from per-wavenumber RNG streams keyed by
//! (seed, k), so a given seed describes one fixed function: refining the grid
//! N -> 2N reproduces the same band-limited field on the finer grid.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use crate::field::{ComplexField, Grid1D};

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; two uniforms per call keeps the stream layout simple
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Smooth envelope that pins the field down near the box edges so periodic
/// truncation stays faithful.
fn edge_envelope(x: f64, length: f64) -> f64 {
    (-(x / (0.32 * length)).powi(8)).exp()
}

/// Band-limited complex field with spectral decay `<xi>^-(s+1)`, zero mean
/// mode, max amplitude `amp`, damped near the box edges (so both sides of the
/// product estimates and all energies are finite).
pub fn random_decaying_field(
    grid: &Arc<Grid1D>,
    s: f64,
    amp: f64,
    k_cut: usize,
    seed: u64,
) -> ComplexField {
    let n = grid.n_points();
    let k_cut = k_cut.min(n / 2 - 1);
    let mut spec = vec![Complex64::default(); n];
    for k in 1..=k_cut {
        let xi = 2.0 * std::f64::consts::PI * k as f64 / grid.length();
        let w = (1.0 + xi * xi).powf(-(s + 1.0) / 2.0);
        let mut rp = stream(seed, k as u64);
        spec[k] = Complex64::new(gauss(&mut rp), gauss(&mut rp)) * w;
        let mut rm = stream(seed, (1 << 32) | k as u64);
        spec[n - k] = Complex64::new(gauss(&mut rm), gauss(&mut rm)) * w;
    }
    // normalize by the coefficient l1 bound on max|u|: grid-independent, so
    // the same seed is the same function at every resolution
    let bound: f64 =
        spec.iter().map(|z| z.norm()).sum::<f64>() / grid.length().sqrt();
    let scale = amp / bound.max(1e-300);
    let raw = grid.from_spectrum(&spec);
    let samples: Vec<Complex64> = raw
        .iter()
        .zip(grid.x())
        .map(|(z, &x)| z * scale * edge_envelope(x, grid.length()))
        .collect();
    ComplexField::new(grid.clone(), samples).expect("generated field is finite")
}

/// Strictly band-limited complex field (no edge envelope): spectrum confined
/// to 1 <= |k| <= k_cut exactly. Quadratic products of two such fields are
/// alias-free under the 3/2-padded product.
pub fn random_band_limited_field(
    grid: &Arc<Grid1D>,
    s: f64,
    amp: f64,
    k_cut: usize,
    seed: u64,
) -> ComplexField {
    let n = grid.n_points();
    let k_cut = k_cut.min(n / 2 - 1);
    let mut spec = vec![Complex64::default(); n];
    for k in 1..=k_cut {
        let xi = 2.0 * std::f64::consts::PI * k as f64 / grid.length();
        let w = (1.0 + xi * xi).powf(-(s + 1.0) / 2.0);
        let mut rp = stream(seed, k as u64);
        spec[k] = Complex64::new(gauss(&mut rp), gauss(&mut rp)) * w;
        let mut rm = stream(seed, (1 << 32) | k as u64);
        spec[n - k] = Complex64::new(gauss(&mut rm), gauss(&mut rm)) * w;
    }
    let bound: f64 = spec.iter().map(|z| z.norm()).sum::<f64>() / grid.length().sqrt();
    let scale = amp / bound.max(1e-300);
    let samples: Vec<Complex64> =
        grid.from_spectrum(&spec).iter().map(|z| z * scale).collect();
    ComplexField::new(grid.clone(), samples).expect("finite")
}

/// Real scalar field, same construction with conjugate-symmetric spectrum.
pub fn random_real_field(
    grid: &Arc<Grid1D>,
    s: f64,
    amp: f64,
    k_cut: usize,
    seed: u64,
) -> Vec<f64> {
    let n = grid.n_points();
    let k_cut = k_cut.min(n / 2 - 1);
    let mut spec = vec![Complex64::default(); n];
    for k in 1..=k_cut {
        let xi = 2.0 * std::f64::consts::PI * k as f64 / grid.length();
        let w = (1.0 + xi * xi).powf(-(s + 1.0) / 2.0);
        let mut rp = stream(seed, k as u64);
        let c = Complex64::new(gauss(&mut rp), gauss(&mut rp)) * w;
        spec[k] = c;
        spec[n - k] = c.conj();
    }
    let bound: f64 =
        spec.iter().map(|z| z.norm()).sum::<f64>() / grid.length().sqrt();
    let scale = amp / bound.max(1e-300);
    let raw = grid.from_spectrum(&spec);
    raw.iter()
        .zip(grid.x())
        .map(|(z, &x)| z.re * scale * edge_envelope(x, grid.length()))
        .collect()
}

/// Mean-free real field (velocity-like; compatible with periodic phase
/// reconstruction).
pub fn random_mean_free_field(
    grid: &Arc<Grid1D>,
    s: f64,
    amp: f64,
    k_cut: usize,
    seed: u64,
) -> Vec<f64> {
    let mut v = random_real_field(grid, s, amp, k_cut, seed);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
    v
}

/// Vacuum-free wave function `1 + u` with `min |q| >= floor`, enforced by
/// clamping the perturbation amplitude to `1 - floor`.
pub fn random_vacuum_free(
    grid: &Arc<Grid1D>,
    s: f64,
    amp: f64,
    k_cut: usize,
    floor: f64,
    seed: u64,
) -> ComplexField {
    let amp = amp.min((1.0 - floor).max(0.0) * 0.999);
    let u = random_decaying_field(grid, s, amp, k_cut, seed);
    let samples: Vec<Complex64> =
        u.samples().iter().map(|&z| Complex64::new(1.0, 0.0) + z).collect();
    ComplexField::new(grid.clone(), samples).expect("finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_across_calls() {
        let g = Grid1D::new(30.0, 128).unwrap();
        let a = random_decaying_field(&g, 1.0, 0.4, 30, 7);
        let b = random_decaying_field(&g, 1.0, 0.4, 30, 7);
        assert_eq!(a.samples(), b.samples());
        let c = random_decaying_field(&g, 1.0, 0.4, 30, 8);
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn same_function_under_refinement() {
        let coarse = Grid1D::new(30.0, 128).unwrap();
        let fine = Grid1D::new(30.0, 256).unwrap();
        let a = random_decaying_field(&coarse, 1.0, 0.4, 30, 42);
        let b = random_decaying_field(&fine, 1.0, 0.4, 30, 42);
        // every coarse point is a fine point (index doubled)
        for (j, z) in a.samples().iter().enumerate() {
            let w = b.samples()[2 * j];
            assert!(
                (z - w).norm() < 1e-6 * (1.0 + w.norm()),
                "mismatch at {j}: {z} vs {w}"
            );
        }
    }

    #[test]
    fn vacuum_free_respects_floor() {
        let g = Grid1D::new(30.0, 128).unwrap();
        for seed in 0..10 {
            let q = random_vacuum_free(&g, 1.0, 0.9, 30, 0.3, seed);
            let min = q.samples().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
            assert!(min >= 0.3, "seed {seed}: min {min}");
        }
    }

    #[test]
    fn mean_free_has_zero_mean() {
        let g = Grid1D::new(30.0, 128).unwrap();
        let v = random_mean_free_field(&g, 1.0, 0.5, 30, 3);
        let mean: f64 = v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean.abs() < 1e-14);
    }
}
