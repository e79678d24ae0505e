//! Phase-quotient metrics on wave functions, the plain Sobolev metric on
//! hydrodynamic states, localized variants on balls, and the empirical
//! bilipschitz / phase-exponential probes.
//!
//! The inner S^1 infimum is solved in closed form everywhere: for any
//! sesquilinear form B the objective `B(lambda q - p, lambda q - p)` equals
//! `B(q,q) + B(p,p) - 2 Re(lambda B(q,p))`, minimized at
//! `lambda* = conj(B(q,p)) / |B(q,p)|`. A brute-force phase scan is kept as
//! an independent oracle.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::field::{Ball, ComplexField, Grid1D, SobolevIndex};
use crate::madelung::HydroState;
use crate::spectral::{h_s_inner, h_s_norm, h_s_norm_sq, LocalizedForm};
use crate::util::{kahan_sum, Kahan};

/// Weights below this are treated as exactly zero (exponential sech tails).
const WEIGHT_FLOOR: f64 = 1e-14;

/// Closed-form minimizer of `||w (lambda a - b)||_{H^s}` over unit lambda.
/// Returns `(lambda*, minimum value)`; `lambda* = 1` when the coupling
/// vanishes (every phase is then optimal and determinism requires a fixed
/// choice).
pub fn phase_align(
    a: &ComplexField,
    b: &ComplexField,
    s: SobolevIndex,
    w: &[f64],
) -> Result<(Complex64, f64)> {
    a.grid().check_same(b.grid())?;
    if w.len() != a.len() {
        return Err(LabError::Parameter("weight length does not match grid".into()));
    }
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(LabError::Parameter("weights must be finite and nonnegative".into()));
    }
    let wa = a.with_samples(a.samples().iter().zip(w).map(|(z, &x)| z * x).collect());
    let wb = b.with_samples(b.samples().iter().zip(w).map(|(z, &x)| z * x).collect());
    let na2 = h_s_norm_sq(&wa, s);
    let nb2 = h_s_norm_sq(&wb, s);
    let c = h_s_inner(&wa, &wb, s)?;
    Ok(align_from_gram(na2, nb2, c))
}

fn align_from_gram(na2: f64, nb2: f64, c: Complex64) -> (Complex64, f64) {
    let mag = c.norm();
    let lambda = if mag == 0.0 { Complex64::new(1.0, 0.0) } else { c.conj() / mag };
    (lambda, (na2 + nb2 - 2.0 * mag).max(0.0).sqrt())
}

/// Brute-force oracle for [`phase_align`]: scan `angles` equispaced phases of
/// the objective evaluated directly on the weighted spectra, then refine the
/// best bracket with one parabolic fit (the squared objective is a pure
/// cosine in the phase, so the fit lands within O(step^4)).
pub fn phase_scan_oracle(
    a: &ComplexField,
    b: &ComplexField,
    s: SobolevIndex,
    w: &[f64],
    angles: usize,
) -> Result<f64> {
    a.grid().check_same(b.grid())?;
    let wa = a.with_samples(a.samples().iter().zip(w).map(|(z, &x)| z * x).collect());
    let wb = b.with_samples(b.samples().iter().zip(w).map(|(z, &x)| z * x).collect());
    let sa = wa.spectrum();
    let sb = wb.spectrum();
    let weights: Vec<f64> =
        a.grid().xi().iter().map(|&xi| (1.0 + xi * xi).powf(s.value())).collect();
    let objective = |theta: f64| -> f64 {
        let rot = Complex64::from_polar(1.0, theta);
        let mut acc = Kahan::new();
        for ((&za, &zb), &wk) in sa.iter().zip(&sb).zip(&weights) {
            acc.add(wk * (rot * za - zb).norm_sqr());
        }
        acc.value()
    };
    Ok(scan_and_refine(objective, angles))
}

fn scan_and_refine(objective: impl Fn(f64) -> f64, angles: usize) -> f64 {
    let step = 2.0 * std::f64::consts::PI / angles as f64;
    let values: Vec<f64> = (0..angles).map(|k| objective(k as f64 * step)).collect();
    let (best, &vb) =
        values.iter().enumerate().min_by(|x, y| x.1.partial_cmp(y.1).unwrap()).unwrap();
    let vm = values[(best + angles - 1) % angles];
    let vp = values[(best + 1) % angles];
    let denom = vm - 2.0 * vb + vp;
    let mut best_val = vb;
    if denom > 0.0 {
        let offset = 0.5 * step * (vm - vp) / denom;
        let refined = objective(best as f64 * step + offset);
        best_val = best_val.min(refined);
    }
    best_val.max(0.0).sqrt()
}

/// How the outer localization integral is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YQuadrature {
    /// Trapezoid over every grid point (the default).
    AllPoints,
    /// Trapezoid over every `stride`-th grid point.
    Stride(usize),
}

impl YQuadrature {
    fn stride(self, grid: &Grid1D) -> Result<usize> {
        let k = match self {
            Self::AllPoints => 1,
            Self::Stride(k) => k,
        };
        if k == 0 || grid.n_points() % k != 0 {
            return Err(LabError::Parameter(format!(
                "y-stride {k} must divide n = {}",
                grid.n_points()
            )));
        }
        Ok(k)
    }

    pub fn describe(self, grid: &Grid1D) -> String {
        match self {
            Self::AllPoints => format!("trapezoid over all {} grid points", grid.n_points()),
            Self::Stride(k) => {
                format!("trapezoid over {} of {} grid points", grid.n_points() / k, grid.n_points())
            }
        }
    }
}

/// Localizing weight profile by index distance: `sech(d h)^pow`, truncated to
/// zero once below [`WEIGHT_FLOOR`] or beyond half-width min(L/2, 35).
fn window_profile(grid: &Grid1D, pow: f64) -> Vec<f64> {
    let half_width = (grid.length() / 2.0).min(35.0);
    (0..=grid.n_points() / 2)
        .map(|d| {
            let x = d as f64 * grid.spacing();
            if x > half_width {
                return 0.0;
            }
            let v = (1.0 / x.cosh()).powf(pow);
            if v < WEIGHT_FLOOR {
                0.0
            } else {
                v
            }
        })
        .collect()
}

fn window_at(profile: &[f64], n: usize, center: usize, out: &mut [f64]) {
    for (j, w) in out.iter_mut().enumerate() {
        let d = center.abs_diff(j);
        let d = d.min(n - d);
        *w = profile[d];
    }
}

fn metric_with_profile(
    q: &ComplexField,
    p: &ComplexField,
    s: SobolevIndex,
    quad: YQuadrature,
    pow: f64,
) -> Result<f64> {
    q.grid().check_same(p.grid())?;
    let grid = q.grid();
    let n = grid.n_points();
    let stride = quad.stride(grid)?;
    let profile = window_profile(grid, pow);
    let hs_weights: Vec<f64> =
        grid.xi().iter().map(|&xi| (1.0 + xi * xi).powf(s.value())).collect();
    let spectral_scale = grid.spacing() * grid.spacing() / grid.length();

    let centers: Vec<usize> = (0..n).step_by(stride).collect();
    let contributions: Vec<f64> = centers
        .par_iter()
        .map(|&iy| {
            let mut w = vec![0.0; n];
            window_at(&profile, n, iy, &mut w);
            let mut wq: Vec<Complex64> =
                q.samples().iter().zip(&w).map(|(z, &x)| z * x).collect();
            let mut wp: Vec<Complex64> =
                p.samples().iter().zip(&w).map(|(z, &x)| z * x).collect();
            grid.fft_raw(&mut wq);
            grid.fft_raw(&mut wp);
            let mut na2 = Kahan::new();
            let mut nb2 = Kahan::new();
            let mut cre = Kahan::new();
            let mut cim = Kahan::new();
            for ((za, zb), &wk) in wq.iter().zip(&wp).zip(&hs_weights) {
                na2.add(wk * za.norm_sqr());
                nb2.add(wk * zb.norm_sqr());
                let prod = za * zb.conj();
                cre.add(wk * prod.re);
                cim.add(wk * prod.im);
            }
            let c = Complex64::new(cre.value(), cim.value()).norm();
            spectral_scale * (na2.value() + nb2.value() - 2.0 * c).max(0.0)
        })
        .collect();

    let dy = grid.spacing() * stride as f64;
    Ok((dy * kahan_sum(contributions)).sqrt())
}

/// The sech-localized phase-quotient distance
/// `( int inf_lambda ||sech(y-.)(lambda q - p)||_{H^s}^2 dy )^{1/2}`.
pub fn metric_d(
    q: &ComplexField,
    p: &ComplexField,
    s: SobolevIndex,
    quad: YQuadrature,
) -> Result<f64> {
    metric_with_profile(q, p, s, quad, 1.0)
}

/// Variant with sqrt(sech) localization.
pub fn metric_d_tilde(
    q: &ComplexField,
    p: &ComplexField,
    s: SobolevIndex,
    quad: YQuadrature,
) -> Result<f64> {
    metric_with_profile(q, p, s, quad, 0.5)
}

/// Ball-localized aligned distance `inf_lambda ||lambda q - p||_{W^{s,2}(B)}`
/// with the infimum in closed form over the full ball bilinear form
/// (L^2 terms plus the Gagliardo double integral).
pub fn metric_d_star_ball(
    q: &ComplexField,
    p: &ComplexField,
    s: SobolevIndex,
    ball: Ball,
) -> Result<f64> {
    q.grid().check_same(p.grid())?;
    s.require_above(0.5, "localized metrics")?;
    let form = LocalizedForm::new(q.grid(), ball, s)?;
    let sq = form.stack(q);
    let sp = form.stack(p);
    let na2 = form.norm_sq(&sq);
    let nb2 = form.norm_sq(&sp);
    let c = form.inner(&sq, &sp);
    Ok(align_from_gram(na2, nb2, c).1)
}

/// Scan oracle for the ball form, evaluating the Slobodeckij norm of the
/// materialized combination `e^{i theta} q - p` directly.
pub fn ball_scan_oracle(
    q: &ComplexField,
    p: &ComplexField,
    s: SobolevIndex,
    ball: Ball,
    angles: usize,
) -> Result<f64> {
    q.grid().check_same(p.grid())?;
    let form = LocalizedForm::new(q.grid(), ball, s)?;
    let sq = form.stack(q);
    let sp = form.stack(p);
    let objective = |theta: f64| -> f64 {
        let rot = Complex64::from_polar(1.0, theta);
        let combo: Vec<Vec<Complex64>> = sq
            .iter()
            .zip(&sp)
            .map(|(aq, ap)| aq.iter().zip(ap).map(|(x, y)| rot * x - y).collect())
            .collect();
        form.norm_sq(&combo)
    };
    Ok(scan_and_refine(objective, angles))
}

/// Sech-localized distance measured in `W^{s,2}(B)` instead of `H^s`.
pub fn metric_d_ball(
    q: &ComplexField,
    p: &ComplexField,
    s: SobolevIndex,
    ball: Ball,
    quad: YQuadrature,
) -> Result<f64> {
    q.grid().check_same(p.grid())?;
    s.require_above(0.5, "localized metrics")?;
    let grid = q.grid();
    let n = grid.n_points();
    let stride = quad.stride(grid)?;
    let profile = window_profile(grid, 1.0);
    let form = LocalizedForm::new(grid, ball, s)?;

    let centers: Vec<usize> = (0..n).step_by(stride).collect();
    let contributions: Vec<f64> = centers
        .par_iter()
        .map(|&iy| {
            let mut w = vec![0.0; n];
            window_at(&profile, n, iy, &mut w);
            let wq =
                q.with_samples(q.samples().iter().zip(&w).map(|(z, &x)| z * x).collect());
            let wp =
                p.with_samples(p.samples().iter().zip(&w).map(|(z, &x)| z * x).collect());
            let sq = form.stack(&wq);
            let sp = form.stack(&wp);
            let na2 = form.norm_sq(&sq);
            let nb2 = form.norm_sq(&sp);
            let c = form.inner(&sq, &sp);
            (na2 + nb2 - 2.0 * c.norm()).max(0.0)
        })
        .collect();
    let dy = grid.spacing() * stride as f64;
    Ok((dy * kahan_sum(contributions)).sqrt())
}

/// Plain Sobolev distance on hydrodynamic states:
/// `||rho - eta||_{H^s} + ||v - w||_{H^{s-1}}`.
pub fn metric_theta(a: &HydroState, b: &HydroState, s: SobolevIndex) -> Result<f64> {
    a.grid().check_same(b.grid())?;
    let grid = a.grid().clone();
    let drho = ComplexField::new(
        grid.clone(),
        a.rho().iter().zip(b.rho()).map(|(x, y)| Complex64::new(x - y, 0.0)).collect(),
    )?;
    let dv = ComplexField::new(
        grid,
        a.v().iter().zip(b.v()).map(|(x, y)| Complex64::new(x - y, 0.0)).collect(),
    )?;
    let sm1 = SobolevIndex::new(s.value() - 1.0)?;
    Ok(h_s_norm(&drho, s) + h_s_norm(&dv, sm1))
}

/// Full evaluation record for one metric call.
#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub s: f64,
    pub d_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_s: Option<f64>,
    pub per_ball: Vec<(i64, f64)>,
    pub y_nodes: String,
    pub l: f64,
    pub n: usize,
}

/// Evaluate the distance, optionally the hydrodynamic distance (when both
/// fields are vacuum-free), and the aligned per-ball distances for a family
/// of balls of the given radius covering the period.
pub fn metric_report(
    q: &ComplexField,
    p: &ComplexField,
    s: SobolevIndex,
    quad: YQuadrature,
    ball_radius: Option<f64>,
) -> Result<MetricReport> {
    let d_s = metric_d(q, p, s, quad)?;
    let theta_s = match (
        crate::madelung::transform(q, crate::madelung::DEFAULT_VACUUM_FLOOR),
        crate::madelung::transform(p, crate::madelung::DEFAULT_VACUUM_FLOOR),
    ) {
        (Ok(a), Ok(b)) => Some(metric_theta(&a, &b, s)?),
        _ => None,
    };
    let mut per_ball = Vec::new();
    if let Some(radius) = ball_radius {
        let grid = q.grid();
        let count = (grid.length() / radius).floor() as i64;
        for k in 0..count {
            let center = -grid.length() / 2.0 + radius * (k as f64 + 0.5);
            let ball = Ball::new(center, radius)?;
            per_ball.push((k, metric_d_star_ball(q, p, s, ball)?));
        }
    }
    Ok(MetricReport {
        s: s.value(),
        d_s,
        theta_s,
        per_ball,
        y_nodes: quad.describe(q.grid()),
        l: q.grid().length(),
        n: q.grid().n_points(),
    })
}

/// Ratio statistics from random vacuum-free pairs below an energy cap.
#[derive(Debug, Clone, Serialize)]
pub struct BilipschitzReport {
    pub s: f64,
    pub samples: usize,
    pub used: usize,
    pub skipped_coincident: usize,
    pub rejected: usize,
    pub energy_cap: f64,
    pub max_theta_over_d: f64,
    pub min_theta_over_d: f64,
    pub max_d_over_theta: f64,
    pub min_d_over_theta: f64,
    pub seed: u64,
}

/// Draw `samples` random vacuum-free pairs with energy below `energy_cap`
/// and record the spread of theta/d and d/theta. Pairs over the cap are
/// re-drawn (counted in `rejected`); coincident pairs are skipped.
pub fn bilipschitz_probe(
    grid: &std::sync::Arc<Grid1D>,
    s: SobolevIndex,
    samples: usize,
    energy_cap: f64,
    amplitude: f64,
    seed: u64,
    quad: YQuadrature,
) -> Result<BilipschitzReport> {
    s.require_above(0.5, "the bilipschitz probe")?;
    let k_cut = grid.n_points() / 16;
    let floor = 0.35;
    let mut used = 0usize;
    let mut skipped = 0usize;
    let mut rejected = 0usize;
    let mut max_r1 = 0.0_f64;
    let mut min_r1 = f64::INFINITY;
    let mut max_r2 = 0.0_f64;
    let mut min_r2 = f64::INFINITY;

    let draw = |tag: u64, rejected: &mut usize| -> Result<ComplexField> {
        for attempt in 0..32u64 {
            let q = crate::sampling::random_vacuum_free(
                grid,
                s.value(),
                amplitude,
                k_cut,
                floor,
                seed.wrapping_add(tag).wrapping_add(attempt.wrapping_mul(104729)),
            );
            if crate::energy::gl_energy(&q) < energy_cap {
                return Ok(q);
            }
            *rejected += 1;
        }
        Err(LabError::Parameter(
            "could not draw a pair below the energy cap; lower the amplitude".into(),
        ))
    };

    for i in 0..samples {
        let q = draw(2 * i as u64, &mut rejected)?;
        let p = draw(2 * i as u64 + 1, &mut rejected)?;
        let d = metric_d(&q, &p, s, quad)?;
        let sq = crate::madelung::transform(&q, crate::madelung::DEFAULT_VACUUM_FLOOR)?;
        let sp = crate::madelung::transform(&p, crate::madelung::DEFAULT_VACUUM_FLOOR)?;
        let theta = metric_theta(&sq, &sp, s)?;
        if d < 1e-12 || theta < 1e-12 {
            skipped += 1;
            continue;
        }
        used += 1;
        let r1 = theta / d;
        let r2 = d / theta;
        max_r1 = max_r1.max(r1);
        min_r1 = min_r1.min(r1);
        max_r2 = max_r2.max(r2);
        min_r2 = min_r2.min(r2);
    }
    Ok(BilipschitzReport {
        s: s.value(),
        samples,
        used,
        skipped_coincident: skipped,
        rejected,
        energy_cap,
        max_theta_over_d: max_r1,
        min_theta_over_d: min_r1,
        max_d_over_theta: max_r2,
        min_d_over_theta: min_r2,
        seed,
    })
}

/// Empirical constant report for the phase-exponential derivative bound
/// `||(e^{i phi})'||_{H^{s-1}} <= C (1 + ||phi'||_{H^{s-1}})^gamma
/// ||phi'||_{H^{s-1}}` with `gamma = 2s-2` for `s >= 1` and
/// `(1-s)/(s-1/2)` for `s < 1`.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseExpReport {
    pub s: f64,
    pub gamma: f64,
    /// (amplitude, max ratio) per sampled family
    pub per_amplitude: Vec<(f64, f64)>,
    pub max_ratio: f64,
    pub skipped: usize,
    pub seed: u64,
}

pub fn phase_exponential_probe(
    grid: &std::sync::Arc<Grid1D>,
    s: SobolevIndex,
    amplitudes: &[f64],
    samples_per_amplitude: usize,
    seed: u64,
) -> Result<PhaseExpReport> {
    let s = s.require_above(0.5, "the phase-exponential probe")?;
    let sv = s.value();
    let gamma = if sv >= 1.0 { 2.0 * sv - 2.0 } else { (1.0 - sv) / (sv - 0.5) };
    let sm1 = SobolevIndex::new(sv - 1.0)?;
    let k_cut = grid.n_points() / 8;
    let mut per_amplitude = Vec::new();
    let mut overall = 0.0_f64;
    let mut skipped = 0usize;
    for (ai, &amp) in amplitudes.iter().enumerate() {
        let mut worst = 0.0_f64;
        for i in 0..samples_per_amplitude {
            let phi = crate::sampling::random_real_field(
                grid,
                sv,
                amp,
                k_cut,
                seed.wrapping_add((ai * samples_per_amplitude + i) as u64),
            );
            let phase_field = ComplexField::new(
                grid.clone(),
                phi.iter().map(|&p| Complex64::from_polar(1.0, p)).collect(),
            )?;
            let lhs = h_s_norm(&phase_field.derivative(1), sm1);
            let dphi = ComplexField::new(
                grid.clone(),
                phi.iter().map(|&p| Complex64::new(p, 0.0)).collect(),
            )?
            .derivative(1);
            let nd = h_s_norm(&dphi, sm1);
            if nd < 1e-14 {
                skipped += 1;
                continue;
            }
            worst = worst.max(lhs / ((1.0 + nd).powf(gamma) * nd));
        }
        per_amplitude.push((amp, worst));
        overall = overall.max(worst);
    }
    Ok(PhaseExpReport { s: sv, gamma, per_amplitude, max_ratio: overall, skipped, seed })
}
