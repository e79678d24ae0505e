//! Dyadic (Littlewood-Paley) frequency decomposition, Besov norms, the Bony
//! paraproduct splitting, and empirical probes of the two product estimates
//! used throughout the metric analysis.
//!
//! The cutoffs are the classical pair: a radial bump `chi` equal to 1 for
//! |xi| <= 3/4 and vanishing for |xi| >= 4/3, and `phi(xi) = chi(xi/2) -
//! chi(xi)`, supported in 3/4 < |xi| < 8/3. On a finite grid the telescoping
//! sum `chi(xi) + sum_{j=0}^{j_max} phi(2^-j xi) = chi(2^-(j_max+1) xi)`
//! equals 1 exactly once `2^-(j_max+1) xi_max <= 3/4`, so the partition of
//! unity holds to machine precision by construction.

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::field::{ComplexField, Grid1D, SobolevIndex};
use crate::spectral::{h_s_norm, l2_norm, linf_norm};

fn mollify(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth step: 0 for t <= 0, 1 for t >= 1, strictly increasing between.
fn smooth_step(t: f64) -> f64 {
    let a = mollify(t);
    let b = mollify(1.0 - t);
    a / (a + b)
}

/// Low-frequency cutoff: 1 on |xi| <= 3/4, 0 on |xi| >= 4/3.
pub fn chi(xi: f64) -> f64 {
    smooth_step((4.0 / 3.0 - xi.abs()) / (4.0 / 3.0 - 0.75))
}

/// Dyadic band bump, supported in 3/4 < |xi| < 8/3, nonnegative.
pub fn phi(xi: f64) -> f64 {
    chi(xi / 2.0) - chi(xi)
}

/// A dyadic partition of unity adapted to one grid.
#[derive(Debug, Clone, Copy)]
pub struct DyadicPartition {
    j_max: i32,
}

impl DyadicPartition {
    pub fn new(grid: &Grid1D) -> Result<Self> {
        // smallest J with 2^-(J+1) xi_max <= 3/4
        let j_max = ((grid.xi_max() / 0.75).log2().ceil() as i32 - 1).max(-1);
        if j_max < 3 {
            return Err(LabError::InvalidGrid(format!(
                "grid supports only {j_max} dyadic levels; need j_max >= 3"
            )));
        }
        Ok(Self { j_max })
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    /// Multiplier of the block Delta_j: `chi` for j = -1, `phi(2^-j .)` for
    /// 0 <= j <= j_max, zero otherwise.
    pub fn block_symbol(&self, j: i32, xi: f64) -> f64 {
        if j == -1 {
            chi(xi)
        } else if j >= 0 && j <= self.j_max {
            phi(xi * 0.5_f64.powi(j))
        } else {
            0.0
        }
    }

    /// Multiplier of the low pass S_j = sum_{j' < j} Delta_{j'}.
    pub fn low_pass_symbol(&self, j: i32, xi: f64) -> f64 {
        if j <= -1 {
            0.0
        } else {
            chi(xi * 0.5_f64.powi(j))
        }
    }
}

/// All blocks Delta_j f for j = -1 .. j_max.
pub struct DyadicDecomposition {
    partition: DyadicPartition,
    blocks: Vec<ComplexField>,
}

impl DyadicDecomposition {
    pub fn partition(&self) -> DyadicPartition {
        self.partition
    }

    pub fn j_range(&self) -> std::ops::RangeInclusive<i32> {
        -1..=self.partition.j_max
    }

    pub fn block(&self, j: i32) -> Result<&ComplexField> {
        if j < -1 || j > self.partition.j_max {
            return Err(LabError::DyadicIndex { j, j_max: self.partition.j_max });
        }
        Ok(&self.blocks[(j + 1) as usize])
    }

    pub fn blocks(&self) -> &[ComplexField] {
        &self.blocks
    }

    /// Sum of all blocks; reproduces the source within machine precision.
    pub fn reconstruct(&self) -> ComplexField {
        let grid = self.blocks[0].grid();
        let n = grid.n_points();
        let mut acc = vec![Complex64::default(); n];
        for b in &self.blocks {
            for (a, z) in acc.iter_mut().zip(b.samples()) {
                *a += z;
            }
        }
        ComplexField::new(grid.clone(), acc).expect("finite")
    }
}

/// Split a field into its dyadic blocks.
pub fn decompose(f: &ComplexField) -> Result<DyadicDecomposition> {
    let partition = DyadicPartition::new(f.grid())?;
    let blocks = (-1..=partition.j_max())
        .map(|j| {
            let samples = f.grid().apply_multiplier(f.samples(), |xi| {
                Complex64::new(partition.block_symbol(j, xi), 0.0)
            });
            f.with_samples(samples)
        })
        .collect();
    Ok(DyadicDecomposition { partition, blocks })
}

/// Low-pass part S_j f. Valid for -1 <= j <= j_max + 1; `S_{j_max+1} f = f`.
pub fn low_pass(f: &ComplexField, j: i32) -> Result<ComplexField> {
    let partition = DyadicPartition::new(f.grid())?;
    if j < -1 || j > partition.j_max() + 1 {
        return Err(LabError::DyadicIndex { j, j_max: partition.j_max() });
    }
    let samples = f
        .grid()
        .apply_multiplier(f.samples(), |xi| Complex64::new(partition.low_pass_symbol(j, xi), 0.0));
    Ok(f.with_samples(samples))
}

/// Lebesgue / sequence exponents admitted by the Besov norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exponent {
    One,
    Two,
    Inf,
}

impl Exponent {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "1" => Ok(Self::One),
            "2" => Ok(Self::Two),
            "inf" | "oo" => Ok(Self::Inf),
            other => Err(LabError::Parameter(format!("unsupported exponent {other:?} (use 1, 2, inf)"))),
        }
    }
}

fn lp_norm(f: &ComplexField, p: Exponent) -> f64 {
    match p {
        Exponent::One => {
            let h = f.grid().spacing();
            h * f.samples().iter().map(|z| z.norm()).sum::<f64>()
        }
        Exponent::Two => l2_norm(f),
        Exponent::Inf => linf_norm(f),
    }
}

/// Besov norm: the l^r norm over j of `2^{js} ||Delta_j f||_{L^p}`.
pub fn besov_norm(f: &ComplexField, s: SobolevIndex, p: Exponent, r: Exponent) -> Result<f64> {
    let dec = decompose(f)?;
    let s = s.value();
    let terms: Vec<f64> = dec
        .j_range()
        .map(|j| {
            let w = 2.0_f64.powf(j as f64 * s);
            w * lp_norm(dec.block(j).expect("in range"), p)
        })
        .collect();
    Ok(match r {
        Exponent::One => terms.iter().sum(),
        Exponent::Two => terms.iter().map(|t| t * t).sum::<f64>().sqrt(),
        Exponent::Inf => terms.iter().fold(0.0, |a, &b| a.max(b)),
    })
}

/// Bony splitting of the pointwise product: `fg = T_f g + R(f,g) + T_g f`
/// with `T_f g = sum_j S_{j-1} f Delta_j g` and
/// `R(f,g) = sum_j sum_{|v|<=1} Delta_{j+v} f Delta_j g`.
/// All block products are evaluated on the 3/2-padded grid; for inputs
/// band-limited to half the grid band the three parts sum to the pointwise
/// product exactly.
pub fn bony_decompose(
    f: &ComplexField,
    g: &ComplexField,
) -> Result<(ComplexField, ComplexField, ComplexField)> {
    f.grid().check_same(g.grid())?;
    let grid = f.grid().clone();
    let df = decompose(f)?;
    let dg = decompose(g)?;
    let j_max = df.partition().j_max();
    let n = grid.n_points();

    let zero = vec![Complex64::default(); n];
    let mut t_fg = zero.clone();
    let mut t_gf = zero.clone();
    let mut remainder = zero;

    let add = |acc: &mut Vec<Complex64>, prod: Vec<Complex64>| {
        for (a, z) in acc.iter_mut().zip(prod) {
            *a += z;
        }
    };

    for j in 1..=j_max {
        let s_f = low_pass(f, j - 1)?;
        let s_g = low_pass(g, j - 1)?;
        add(&mut t_fg, grid.dealiased_product(s_f.samples(), dg.block(j)?.samples()));
        add(&mut t_gf, grid.dealiased_product(s_g.samples(), df.block(j)?.samples()));
    }
    for j in -1..=j_max {
        for v in -1..=1 {
            let jf = j + v;
            if jf < -1 || jf > j_max {
                continue;
            }
            add(
                &mut remainder,
                grid.dealiased_product(df.block(jf)?.samples(), dg.block(j)?.samples()),
            );
        }
    }

    Ok((
        ComplexField::new(grid.clone(), t_fg)?,
        ComplexField::new(grid.clone(), remainder)?,
        ComplexField::new(grid, t_gf)?,
    ))
}

/// Empirical report for the two product estimates
/// `||fg||_{H^s}    <= C ||g||_{H^s}    (||f||_inf + ||f'||_{H^{s-1}})` and
/// `||fg||_{H^{s-1}} <= C ||g||_{H^{s-1}} (||f||_inf + ||f'||_{H^{s-1}})`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ProductProbeReport {
    pub s: f64,
    pub samples: usize,
    pub skipped: usize,
    /// max over samples of LHS/RHS for the H^s estimate
    pub max_ratio_hs: f64,
    /// same for the H^{s-1} estimate
    pub max_ratio_hs_shift: f64,
    pub seed: u64,
}

/// Sample random decaying pairs and report the worst observed ratio of each
/// product estimate. Degenerate samples (vanishing right-hand side) are
/// skipped and counted.
pub fn product_estimate_probe(
    grid: &std::sync::Arc<Grid1D>,
    s: SobolevIndex,
    samples: usize,
    seed: u64,
) -> Result<ProductProbeReport> {
    s.require_above(0.5, "product estimates")?;
    if samples == 0 {
        return Err(LabError::Parameter("need at least one sample".into()));
    }
    let sm1 = SobolevIndex::new(s.value() - 1.0)?;
    let k_cut = grid.n_points() / 8;
    let mut max_hs = 0.0_f64;
    let mut max_shift = 0.0_f64;
    let mut skipped = 0usize;
    for i in 0..samples {
        let f = crate::sampling::random_decaying_field(grid, s.value(), 0.8, k_cut, seed.wrapping_add(2 * i as u64));
        let g = crate::sampling::random_decaying_field(grid, s.value(), 0.8, k_cut, seed.wrapping_add(2 * i as u64 + 1));
        let fg = f.with_samples(grid.dealiased_product(f.samples(), g.samples()));
        let f_factor = linf_norm(&f) + h_s_norm(&f.derivative(1), sm1);
        let g_hs = h_s_norm(&g, s);
        let g_shift = h_s_norm(&g, sm1);
        if f_factor * g_hs < 1e-14 || f_factor * g_shift < 1e-14 {
            skipped += 1;
            continue;
        }
        max_hs = max_hs.max(h_s_norm(&fg, s) / (g_hs * f_factor));
        max_shift = max_shift.max(h_s_norm(&fg, sm1) / (g_shift * f_factor));
    }
    Ok(ProductProbeReport {
        s: s.value(),
        samples,
        skipped,
        max_ratio_hs: max_hs,
        max_ratio_hs_shift: max_shift,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::random_decaying_field;
    use std::sync::Arc;

    fn grid() -> Arc<Grid1D> {
        Grid1D::new(60.0, 512).unwrap()
    }

    #[test]
    fn partition_of_unity_residual() {
        let g = grid();
        let p = DyadicPartition::new(&g).unwrap();
        assert!(p.j_max() >= 3);
        let mut worst = 0.0_f64;
        for &xi in g.xi() {
            let mut acc = chi(xi);
            for j in 0..=p.j_max() {
                acc += p.block_symbol(j, xi);
            }
            worst = worst.max((acc - 1.0).abs());
        }
        assert!(worst < 1e-12, "partition residual {worst}");
    }

    #[test]
    fn cutoff_supports() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(0.74), 1.0);
        assert_eq!(chi(4.0 / 3.0 + 1e-9), 0.0);
        assert_eq!(phi(0.7), 0.0);
        assert!(phi(1.0) > 0.0);
        assert_eq!(phi(8.0 / 3.0 + 1e-9), 0.0);
        // nonnegativity on a sweep
        for i in 0..500 {
            let xi = i as f64 * 0.01;
            assert!(phi(xi) >= 0.0);
            assert!(chi(xi) >= 0.0);
        }
    }

    #[test]
    fn constant_lands_in_low_block() {
        let g = grid();
        let c = ComplexField::constant(&g, Complex64::new(2.0, -0.5));
        let dec = decompose(&c).unwrap();
        let low = dec.block(-1).unwrap();
        assert!((low.samples()[0] - c.samples()[0]).norm() < 1e-12);
        for j in 0..=dec.partition().j_max() {
            assert!(dec.block(j).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn single_mode_hits_adjacent_blocks_only() {
        let g = grid();
        // pick a mode inside the band of block j = 2
        let target_j = 2;
        let center = 2.0_f64.powi(target_j) * 1.4;
        let k = (center * g.length() / (2.0 * std::f64::consts::PI)).round() as usize;
        let xi = g.xi()[k];
        let f = ComplexField::from_fn(&g, |x| Complex64::new(0.0, xi * x).exp()).unwrap();
        let dec = decompose(&f).unwrap();
        let p = dec.partition();
        for j in -1..=p.j_max() {
            let energy = l2_norm(dec.block(j).unwrap());
            let expected = p.block_symbol(j, xi);
            if expected.abs() < 1e-15 {
                assert!(energy < 1e-12, "leak into block {j}: {energy}");
            }
        }
    }

    #[test]
    fn reconstruction_and_low_pass() {
        let g = grid();
        let f = random_decaying_field(&g, 1.0, 0.7, 60, 5);
        let dec = decompose(&f).unwrap();
        let rec = dec.reconstruct();
        let err = l2_norm(&rec.sub(&f).unwrap()) / l2_norm(&f);
        assert!(err < 1e-10, "reconstruction residual {err}");
        let p = dec.partition();
        let s_top = low_pass(&f, p.j_max() + 1).unwrap();
        let err_top = l2_norm(&s_top.sub(&f).unwrap()) / l2_norm(&f);
        assert!(err_top < 1e-10);
        assert!(low_pass(&f, p.j_max() + 2).is_err());
        assert!(decompose(&f).unwrap().block(p.j_max() + 1).is_err());
    }

    #[test]
    fn block_band_limits() {
        let g = grid();
        let f = random_decaying_field(&g, 1.0, 0.7, 60, 9);
        let dec = decompose(&f).unwrap();
        let p = dec.partition();
        let total = l2_norm(&f);
        for j in 0..=p.j_max() {
            let spec = dec.block(j).unwrap().spectrum();
            for (z, &xi) in spec.iter().zip(g.xi()) {
                if p.block_symbol(j, xi) == 0.0 {
                    assert!(z.norm() < 1e-13 * total.max(1.0));
                }
            }
        }
    }

    #[test]
    fn besov_22_comparable_to_h_s() {
        let g = grid();
        let s = SobolevIndex::new(1.0).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        for seed in 0..50 {
            let f = random_decaying_field(&g, 1.0, 0.7, 60, 1000 + seed);
            let b = besov_norm(&f, s, Exponent::Two, Exponent::Two).unwrap();
            let h = h_s_norm(&f, s);
            let ratio = b / h;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        // fixed equivalence bracket, frozen from measurement with headroom
        assert!(lo > 0.2 && hi < 5.0, "Besov/H^s ratio range [{lo}, {hi}]");
    }

    #[test]
    fn besov_zero_and_single_block() {
        let g = grid();
        let s = SobolevIndex::new(0.8).unwrap();
        let z = ComplexField::zero(&g);
        assert_eq!(besov_norm(&z, s, Exponent::Two, Exponent::One).unwrap(), 0.0);
        // a field equal to one of its own blocks: norm reduces to one term
        let f = random_decaying_field(&g, 1.0, 0.7, 60, 77);
        let dec = decompose(&f).unwrap();
        let blk = dec.block(3).unwrap().clone();
        // re-decomposing a block spreads it over neighbors, so evaluate via
        // the definition directly
        let expect = 2.0_f64.powf(3.0 * 0.8) * l2_norm(&blk);
        let got: f64 = decompose(&blk)
            .unwrap()
            .j_range()
            .map(|j| {
                2.0_f64.powf(j as f64 * 0.8)
                    * l2_norm(decompose(&blk).unwrap().block(j).unwrap())
            })
            .map(|t| t * t)
            .sum::<f64>()
            .sqrt();
        // neighbors overlap, so only comparability is guaranteed
        assert!(got > 0.4 * expect && got < 2.5 * expect);
    }

    #[test]
    fn bony_reconstructs_product() {
        let g = grid();
        let k_cut = g.n_points() / 4 - 2;
        let f = crate::sampling::random_band_limited_field(&g, 1.0, 0.7, k_cut, 21);
        let q = crate::sampling::random_band_limited_field(&g, 1.0, 0.5, k_cut, 22);
        let (t_fg, rem, t_gf) = bony_decompose(&f, &q).unwrap();
        let sum = t_fg.add(&rem).unwrap().add(&t_gf).unwrap();
        let prod = f.with_samples(
            f.samples().iter().zip(q.samples()).map(|(a, b)| a * b).collect(),
        );
        let resid = l2_norm(&sum.sub(&prod).unwrap());
        let scale = l2_norm(&prod);
        assert!(resid < 1e-10 * scale.max(1e-30), "bony residual {resid} vs {scale}");
    }

    #[test]
    fn bony_constant_multiplier() {
        let g = grid();
        let one = ComplexField::constant(&g, Complex64::new(1.0, 0.0));
        let q = crate::sampling::random_band_limited_field(&g, 1.0, 0.5, 100, 31);
        let (t_fg, rem, t_gf) = bony_decompose(&one, &q).unwrap();
        let sum = t_fg.add(&rem).unwrap().add(&t_gf).unwrap();
        let resid = l2_norm(&sum.sub(&q).unwrap()) / l2_norm(&q);
        assert!(resid < 1e-10);
        // with a constant multiplier, every low pass of 1 is 1, so T_1 g is
        // exactly g minus its two lowest blocks
        let dec = decompose(&q).unwrap();
        let low = dec.block(-1).unwrap().add(dec.block(0).unwrap()).unwrap();
        let expect = q.sub(&low).unwrap();
        let gap = l2_norm(&t_fg.sub(&expect).unwrap());
        assert!(gap < 1e-10 * l2_norm(&q), "T_1 g misses high content by {gap}");
    }

    #[test]
    fn product_probe_identity_multiplier_bounded() {
        // f = 1: fg = g and the f-factor is exactly ||f||_inf = 1, so each
        // ratio is at most 1
        let g = grid();
        let s = SobolevIndex::new(1.0).unwrap();
        let sm1 = SobolevIndex::new(0.0).unwrap();
        let one = ComplexField::constant(&g, Complex64::new(1.0, 0.0));
        let q = random_decaying_field(&g, 1.0, 0.5, 60, 41);
        let fg = q.with_samples(g.dealiased_product(one.samples(), q.samples()));
        let ratio = h_s_norm(&fg, s) / (h_s_norm(&q, s) * (linf_norm(&one) + 0.0));
        assert!(ratio <= 1.0 + 1e-10);
        let ratio2 = h_s_norm(&fg, sm1) / (h_s_norm(&q, sm1) * 1.0);
        assert!(ratio2 <= 1.0 + 1e-10);
    }

    #[test]
    fn product_probe_runs_and_is_stable_across_seeds() {
        let g = grid();
        let s = SobolevIndex::new(1.0).unwrap();
        let a = product_estimate_probe(&g, s, 200, 1).unwrap();
        let b = product_estimate_probe(&g, s, 200, 99).unwrap();
        assert!(a.max_ratio_hs.is_finite() && a.max_ratio_hs > 0.0);
        assert!(a.max_ratio_hs_shift.is_finite());
        let rel = (a.max_ratio_hs - b.max_ratio_hs).abs() / a.max_ratio_hs;
        assert!(rel < 0.2, "seed variation {rel}");
    }
}
