//! Sobolev-type norms: `H^s` / `Hdot^s` through Fourier weights, and the
//! Sobolev-Slobodeckij norm `W^{s,2}(B)` on balls through the Gagliardo
//! double integral.
//!
//! All `H^s` quantities are weighted sums over the discrete spectrum with
//! weight `<xi>^{2s} = (1+xi^2)^s`; with the Plancherel convention of
//! [`crate::field::Grid1D::spectrum`] they approximate the corresponding
//! line integrals for decaying fields. Summations are compensated so results
//! are reproducible to ~1e-15 regardless of evaluation order.

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::field::{Ball, ComplexField, Grid1D, SobolevIndex};
use crate::util::Kahan;

/// `H^s` norm: `(sum_k <xi_k>^{2s} |hat f_k|^2)^{1/2}`.
pub fn h_s_norm(f: &ComplexField, s: SobolevIndex) -> f64 {
    h_s_norm_sq(f, s).sqrt()
}

pub fn h_s_norm_sq(f: &ComplexField, s: SobolevIndex) -> f64 {
    let spec = f.spectrum();
    let s = s.value();
    let mut acc = Kahan::new();
    for (z, &xi) in spec.iter().zip(f.grid().xi()) {
        acc.add((1.0 + xi * xi).powf(s) * z.norm_sqr());
    }
    acc.value()
}

/// `H^s` inner product with the same weight; `h_s_inner(f, f, s)` is real and
/// equals the squared norm.
pub fn h_s_inner(f: &ComplexField, g: &ComplexField, s: SobolevIndex) -> Result<Complex64> {
    f.grid().check_same(g.grid())?;
    let fs = f.spectrum();
    let gs = g.spectrum();
    let s = s.value();
    let mut re = Kahan::new();
    let mut im = Kahan::new();
    for ((a, b), &xi) in fs.iter().zip(&gs).zip(f.grid().xi()) {
        let w = (1.0 + xi * xi).powf(s);
        let p = a * b.conj();
        re.add(w * p.re);
        im.add(w * p.im);
    }
    Ok(Complex64::new(re.value(), im.value()))
}

/// Homogeneous quasinorm with weight `|xi|^{2s}`; the zero mode contributes
/// nothing for any s.
pub fn hdot_s_norm(f: &ComplexField, s: SobolevIndex) -> f64 {
    let spec = f.spectrum();
    let s = s.value();
    let mut acc = Kahan::new();
    for (z, &xi) in spec.iter().zip(f.grid().xi()) {
        if xi != 0.0 {
            acc.add(xi.abs().powf(2.0 * s) * z.norm_sqr());
        }
    }
    acc.value().sqrt()
}

/// Discrete `L^2` norm `(h sum_j |f_j|^2)^{1/2}`.
pub fn l2_norm(f: &ComplexField) -> f64 {
    let h = f.grid().spacing();
    let mut acc = Kahan::new();
    for z in f.samples() {
        acc.add(z.norm_sqr());
    }
    (h * acc.value()).sqrt()
}

/// Discrete sup norm.
pub fn linf_norm(f: &ComplexField) -> f64 {
    f.max_abs()
}

/// Restriction of the first `m` spectral derivatives of a field to a set of
/// grid indices, ready for repeated `W^{s,2}(B)` bilinear-form evaluations.
pub type DerivativeStack = Vec<Vec<Complex64>>;

/// The `W^{s,2}(B)` inner-product structure on a ball: `L^2(B)` terms for
/// derivatives up to `m` plus, for fractional `alpha`, the Gagliardo double
/// integral of the m-th derivative. Quadrature is midpoint on grid-cell
/// products with the diagonal cells excluded (the singularity is integrable
/// for alpha < 1; exclusion is first-order consistent).
pub struct LocalizedForm {
    idx: Vec<usize>,
    h: f64,
    m: usize,
    alpha: f64,
    /// flattened pair weights h^2/|x_i-x_j|^{1+2a} for i<j, built lazily
    pair_w: Vec<f64>,
}

impl LocalizedForm {
    pub fn new(grid: &Grid1D, ball: Ball, s: SobolevIndex) -> Result<Self> {
        ball.validate(grid)?;
        let (m, alpha) = s.split()?;
        let idx = ball.indices(grid);
        if idx.is_empty() {
            return Err(LabError::Domain(format!(
                "ball at {} with radius {} contains no grid points",
                ball.center, ball.radius
            )));
        }
        Ok(Self::from_indices(grid, idx, m, alpha))
    }

    /// Same structure on an explicit index set (used by tile partitions).
    pub fn from_indices(grid: &Grid1D, idx: Vec<usize>, m: usize, alpha: f64) -> Self {
        let h = grid.spacing();
        let mut pair_w = Vec::new();
        if alpha > 0.0 {
            let npts = idx.len();
            pair_w.reserve(npts * (npts - 1) / 2);
            for a in 0..npts {
                for b in (a + 1)..npts {
                    let d = grid.periodic_distance(grid.x()[idx[a]], grid.x()[idx[b]]);
                    pair_w.push(h * h / d.powf(1.0 + 2.0 * alpha));
                }
            }
        }
        Self { idx, h, m, alpha, pair_w }
    }

    pub fn point_count(&self) -> usize {
        self.idx.len()
    }

    /// Restrict derivatives 0..=m of `f` to the ball.
    pub fn stack(&self, f: &ComplexField) -> DerivativeStack {
        let mut out = Vec::with_capacity(self.m + 1);
        let mut current = f.clone();
        for k in 0..=self.m {
            out.push(self.idx.iter().map(|&i| current.samples()[i]).collect());
            if k < self.m {
                current = current.derivative(1);
            }
        }
        out
    }

    /// Full sesquilinear form `B(a, b)`.
    pub fn inner(&self, a: &DerivativeStack, b: &DerivativeStack) -> Complex64 {
        let mut re = Kahan::new();
        let mut im = Kahan::new();
        for k in 0..=self.m {
            for (x, y) in a[k].iter().zip(&b[k]) {
                let p = x * y.conj() * self.h;
                re.add(p.re);
                im.add(p.im);
            }
        }
        if self.alpha > 0.0 {
            let am = &a[self.m];
            let bm = &b[self.m];
            let npts = am.len();
            let mut w = self.pair_w.iter();
            for i in 0..npts {
                for j in (i + 1)..npts {
                    let da = am[i] - am[j];
                    let db = bm[i] - bm[j];
                    // both (x,y) and (y,x) cells contribute
                    let p = da * db.conj() * (2.0 * *w.next().unwrap());
                    re.add(p.re);
                    im.add(p.im);
                }
            }
        }
        Complex64::new(re.value(), im.value())
    }

    pub fn norm_sq(&self, a: &DerivativeStack) -> f64 {
        self.inner(a, a).re.max(0.0)
    }
}

/// Sobolev-Slobodeckij norm of `f` on a ball, `s = m + alpha >= 0`.
pub fn w_s2_ball_norm(f: &ComplexField, ball: Ball, s: SobolevIndex) -> Result<f64> {
    let form = LocalizedForm::new(f.grid(), ball, s)?;
    let stack = form.stack(f);
    Ok(form.norm_sq(&stack).sqrt())
}

/// Ratio report for the tiling norm-equivalence check: small tiles of radius
/// R/2 from below, overlapping balls of radius R from above.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PartitionProbeReport {
    pub s: f64,
    pub radius: f64,
    pub h_s_norm_sq: f64,
    pub tile_sum_sq: f64,
    pub ball_sum_sq: f64,
    /// tile_sum_sq / h_s_norm_sq, None when degenerate (zero field)
    pub lower_ratio: Option<f64>,
    /// h_s_norm_sq / ball_sum_sq, None when degenerate
    pub upper_constant: Option<f64>,
    pub degenerate: bool,
}

/// Compare `sum_k ||f||^2_{W^{s,2}(tilde B_k)}` and
/// `sum_k ||f||^2_{W^{s,2}(B_k)}` against `||f||^2_{H^s}` for a family of
/// balls of radius R whose centers are R apart (the radius-R/2 tiles
/// partition the period exactly). R must divide the period.
pub fn partition_norm_equivalence_probe(
    f: &ComplexField,
    s: SobolevIndex,
    radius: f64,
) -> Result<PartitionProbeReport> {
    let grid = f.grid();
    let length = grid.length();
    let count = (length / radius).round() as usize;
    if count == 0 || (count as f64 * radius - length).abs() > 1e-9 * length {
        return Err(LabError::Parameter(format!(
            "radius {radius} does not tile the period {length}"
        )));
    }
    let (m, alpha) = s.split()?;
    let hs_sq = h_s_norm_sq(f, s);

    let mut tile_sum = Kahan::new();
    let mut ball_sum = Kahan::new();
    for k in 0..count {
        let center = -length / 2.0 + radius * (k as f64 + 0.5);
        let tile = Ball::new(center, radius / 2.0)?;
        let tile_form = LocalizedForm::from_indices(grid, tile.tile_indices(grid), m, alpha);
        if tile_form.point_count() > 0 {
            let st = tile_form.stack(f);
            tile_sum.add(tile_form.norm_sq(&st));
        }
        let ball = Ball::new(center, radius)?;
        let form = LocalizedForm::new(grid, ball, s)?;
        let st = form.stack(f);
        ball_sum.add(form.norm_sq(&st));
    }
    let tile_sum_sq = tile_sum.value();
    let ball_sum_sq = ball_sum.value();
    let degenerate = hs_sq <= f64::EPSILON || ball_sum_sq <= f64::EPSILON;
    Ok(PartitionProbeReport {
        s: s.value(),
        radius,
        h_s_norm_sq: hs_sq,
        tile_sum_sq,
        ball_sum_sq,
        lower_ratio: (!degenerate).then(|| tile_sum_sq / hs_sq),
        upper_constant: (!degenerate).then(|| hs_sq / ball_sum_sq),
        degenerate,
    })
}
