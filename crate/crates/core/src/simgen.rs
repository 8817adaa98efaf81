//! Synthetic data with covariate-dependent sparse precision matrices and
//! random-scale contamination.
//!
//! For a supported pair `(j, k)` the precision entry at covariate `x` is
//! `omega_jk(x) = r_jk(x) I(|r_jk(x)| > t0)` with `r_jk(x) = sum_h x_h nu_jkh`.
//! The diagonal is one. Latent rows are `N(0, Omega(x_i)^{-1})` and observed
//! rows multiply them elementwise by random scales.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::{Array2, Array3, ArrayView1, ArrayView2};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::sample_scale_prior;

/// Generator settings for the true precision structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrecisionConfig {
    /// Fraction of off-diagonal pairs carrying a nonzero coefficient.
    pub sparsity: f64,
    pub t0: f64,
    /// Coefficients are drawn uniformly from `±[nu_lo, nu_hi]`.
    pub nu_lo: f64,
    pub nu_hi: f64,
    /// Smallest eigenvalue accepted as positive semi-definite.
    pub psd_tol: f64,
    /// Total number of coefficient draws before giving up.
    pub max_attempts: usize,
    /// Consecutive failures of one component before the support is redrawn.
    pub support_retry: usize,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig {
            sparsity: 0.02,
            t0: 0.15,
            nu_lo: 0.35,
            nu_hi: 0.5,
            psd_tol: -1e-10,
            max_attempts: 10_000,
            support_retry: 100,
        }
    }
}

impl PrecisionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(Error::InvalidParameter(format!("sparsity {} outside [0, 1]", self.sparsity)));
        }
        if !(self.t0 >= 0.0 && self.t0.is_finite()) {
            return Err(Error::InvalidParameter(format!("t0 = {}", self.t0)));
        }
        if !(0.0 <= self.nu_lo && self.nu_lo <= self.nu_hi && self.nu_hi.is_finite()) {
            return Err(Error::InvalidParameter("need 0 <= nu_lo <= nu_hi".into()));
        }
        if self.max_attempts == 0 || self.support_retry == 0 {
            return Err(Error::InvalidParameter("attempt limits must be positive".into()));
        }
        Ok(())
    }
}

/// True covariate-dependent precision structure.
#[derive(Debug, Clone, PartialEq)]
pub struct TruePrecisionSpec {
    /// Symmetric, false on the diagonal.
    pub support: Array2<bool>,
    /// `p x p x q`, symmetric in the first two axes, zero off the support.
    pub nu: Array3<f64>,
    pub t0: f64,
    /// Coefficient draws rejected before every realized precision was PSD.
    pub rejections: usize,
}

impl TruePrecisionSpec {
    pub fn p(&self) -> usize {
        self.support.nrows()
    }

    pub fn q(&self) -> usize {
        self.nu.dim().2
    }

    /// Untruncated `r_jk(x)`.
    pub fn r(&self, j: usize, k: usize, x: ArrayView1<'_, f64>) -> f64 {
        (0..self.q()).map(|h| self.nu[[j, k, h]] * x[h]).sum()
    }

    /// Realized precision `Omega(x)`.
    pub fn omega(&self, x: ArrayView1<'_, f64>) -> Array2<f64> {
        let p = self.p();
        let mut out = Array2::eye(p);
        for j in 0..p {
            for k in (j + 1)..p {
                if self.support[[j, k]] {
                    let r = self.r(j, k, x);
                    let w = if r.abs() > self.t0 { r } else { 0.0 };
                    out[[j, k]] = w;
                    out[[k, j]] = w;
                }
            }
        }
        out
    }
}

/// Covariates `U(-1, 1)`, `n x q`.
pub fn gen_covariates<R: Rng + ?Sized>(n: usize, q: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_fn((n, q), |_| rng.random_range(-1.0..=1.0))
}

/// Random scales: 1 with probability `1 - pi`, otherwise `sqrt(InvGa(a_d, b_d))`.
pub fn gen_scales<R: Rng + ?Sized>(n: usize, p: usize, pi: f64, a_d: f64, b_d: f64, rng: &mut R) -> Result<Array2<f64>> {
    if !(0.0..=1.0).contains(&pi) {
        return Err(Error::InvalidParameter(format!("pi = {pi} outside [0, 1]")));
    }
    if !(a_d > 0.0 && b_d > 0.0) {
        return Err(Error::InvalidParameter("scale prior parameters must be positive".into()));
    }
    Ok(Array2::from_shape_fn((n, p), |_| sample_scale_prior(pi, a_d, b_d, rng)))
}

fn draw_nu<R: Rng + ?Sized>(cfg: &PrecisionConfig, rng: &mut R) -> f64 {
    let mag = if cfg.nu_hi > cfg.nu_lo { rng.random_range(cfg.nu_lo..cfg.nu_hi) } else { cfg.nu_lo };
    if rng.random_bool(0.5) {
        mag
    } else {
        -mag
    }
}

fn draw_support<R: Rng + ?Sized>(p: usize, sparsity: f64, rng: &mut R) -> Array2<bool> {
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|j| ((j + 1)..p).map(move |k| (j, k))).collect();
    let count = ((sparsity * pairs.len() as f64).round() as usize).min(pairs.len());
    let mut support = Array2::from_elem((p, p), false);
    for idx in sample_indices(rng, pairs.len(), count) {
        let (j, k) = pairs[idx];
        support[[j, k]] = true;
        support[[k, j]] = true;
    }
    support
}

/// Connected components of the support graph with at least one edge.
fn components(support: &Array2<bool>) -> Vec<Vec<usize>> {
    let p = support.nrows();
    let mut label = vec![usize::MAX; p];
    let mut out = Vec::new();
    for start in 0..p {
        if label[start] != usize::MAX || !(0..p).any(|k| support[[start, k]]) {
            continue;
        }
        let mut comp = vec![start];
        label[start] = out.len();
        let mut head = 0;
        while head < comp.len() {
            let v = comp[head];
            head += 1;
            for k in 0..p {
                if support[[v, k]] && label[k] == usize::MAX {
                    label[k] = out.len();
                    comp.push(k);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Smallest eigenvalue of the realized precision restricted to `nodes`.
fn block_min_eigen(spec: &TruePrecisionSpec, nodes: &[usize], x: ArrayView1<'_, f64>) -> f64 {
    let m = nodes.len();
    let mut block = DMatrix::identity(m, m);
    for a in 0..m {
        for b in (a + 1)..m {
            let (j, k) = (nodes[a], nodes[b]);
            if spec.support[[j, k]] {
                let r = spec.r(j, k, x);
                let w = if r.abs() > spec.t0 { r } else { 0.0 };
                block[(a, b)] = w;
                block[(b, a)] = w;
            }
        }
    }
    SymmetricEigen::new(block).eigenvalues.min()
}

/// Smallest eigenvalue of `Omega(x_i)` over every row of `x`.
pub fn min_eigenvalue(spec: &TruePrecisionSpec, x: ArrayView2<'_, f64>) -> f64 {
    let p = spec.p();
    x.rows()
        .into_iter()
        .map(|row| {
            let om = spec.omega(row);
            SymmetricEigen::new(DMatrix::from_fn(p, p, |a, b| om[[a, b]])).eigenvalues.min()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Draws the support and coefficients so that every realized precision at
/// the rows of `x` is PSD.
///
/// `Omega(x)` is block diagonal over the connected components of the
/// support, so it is PSD exactly when every block is. Each component's
/// coefficients are redrawn until its blocks pass; a component that keeps
/// failing triggers a fresh support.
pub fn gen_precision_spec<R: Rng + ?Sized>(
    x: ArrayView2<'_, f64>,
    p: usize,
    cfg: &PrecisionConfig,
    rng: &mut R,
) -> Result<TruePrecisionSpec> {
    cfg.validate()?;
    if p < 2 {
        return Err(Error::Dimension(format!("need p >= 2, got {p}")));
    }
    let q = x.ncols();
    let mut attempts = 0usize;
    'support: loop {
        let support = draw_support(p, cfg.sparsity, rng);
        let mut spec = TruePrecisionSpec {
            nu: Array3::zeros((p, p, q)),
            support,
            t0: cfg.t0,
            rejections: 0,
        };
        for comp in components(&spec.support) {
            let mut failures = 0;
            loop {
                if attempts >= cfg.max_attempts {
                    return Err(Error::RejectionExhausted(attempts));
                }
                attempts += 1;
                for (a, &j) in comp.iter().enumerate() {
                    for &k in &comp[a + 1..] {
                        if spec.support[[j, k]] {
                            for h in 0..q {
                                let v = draw_nu(cfg, rng);
                                spec.nu[[j, k, h]] = v;
                                spec.nu[[k, j, h]] = v;
                            }
                        }
                    }
                }
                if x.rows().into_iter().all(|row| block_min_eigen(&spec, &comp, row) >= cfg.psd_tol) {
                    break;
                }
                failures += 1;
                if failures >= cfg.support_retry {
                    continue 'support;
                }
            }
        }
        spec.rejections = attempts - components(&spec.support).len();
        return Ok(spec);
    }
}

/// Full simulation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub pi: f64,
    pub a_d: f64,
    pub b_d: f64,
    pub precision: PrecisionConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 250,
            p: 50,
            q: 3,
            pi: 0.5,
            a_d: 3.0,
            b_d: 2.0,
            precision: PrecisionConfig::default(),
        }
    }
}

/// A simulated dataset and the structure that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTruth {
    pub y: Array2<f64>,
    pub latent: Array2<f64>,
    pub x: Array2<f64>,
    pub scales: Array2<f64>,
    pub spec: TruePrecisionSpec,
    /// `n x p x p`; nonzero realized precision off the diagonal.
    pub edges: Array3<bool>,
    /// `n x p x p`; sign of the regression coefficient `-omega_jk`, zero off the edges.
    pub signs: Array3<i8>,
    /// `p x p x q`; true nonzero covariate coefficients.
    pub covariate_support: Array3<bool>,
}

/// Draws `N(0, Omega^{-1})` as `L^{-T} z` with `Omega = L L^T`.
fn latent_row<R: Rng + ?Sized>(omega: &Array2<f64>, rng: &mut R) -> Result<DVector<f64>> {
    let p = omega.nrows();
    let m = DMatrix::from_fn(p, p, |a, b| omega[[a, b]]);
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::ImproperDensity("realized precision is not positive definite".into()))?;
    let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
    chol.l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::ImproperDensity("singular realized precision".into()))
}

pub fn gen_dataset<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<SimTruth> {
    let (n, p, q) = (cfg.n, cfg.p, cfg.q);
    if n < 2 || p < 2 || q < 1 {
        return Err(Error::Dimension(format!("invalid shape n={n} p={p} q={q}")));
    }
    let x = gen_covariates(n, q, rng);
    let spec = gen_precision_spec(x.view(), p, &cfg.precision, rng)?;
    let scales = gen_scales(n, p, cfg.pi, cfg.a_d, cfg.b_d, rng)?;
    let mut latent = Array2::zeros((n, p));
    let mut edges = Array3::from_elem((n, p, p), false);
    let mut signs = Array3::zeros((n, p, p));
    for i in 0..n {
        let omega = spec.omega(x.row(i));
        let row = latent_row(&omega, rng)?;
        for j in 0..p {
            latent[[i, j]] = row[j];
            for k in (0..p).filter(|&k| k != j) {
                let w = omega[[j, k]];
                if w != 0.0 {
                    edges[[i, j, k]] = true;
                    signs[[i, j, k]] = if w < 0.0 { 1 } else { -1 };
                }
            }
        }
    }
    let y = &latent * &scales;
    let mut covariate_support = Array3::from_elem((p, p, q), false);
    for ((j, k, _), c) in covariate_support.indexed_iter_mut() {
        *c = spec.support[[j, k]];
    }
    Ok(SimTruth { y, latent, x, scales, spec, edges, signs, covariate_support })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn covariates_in_range_and_centered() {
        let x = gen_covariates(10_000, 2, &mut rng(1));
        assert!(x.iter().all(|v| (-1.0..=1.0).contains(v)));
        let se = (1.0f64 / 3.0 / 10_000.0).sqrt();
        for col in x.columns() {
            assert!(col.mean().unwrap().abs() < 3.0 * se);
        }
        assert_eq!(x, gen_covariates(10_000, 2, &mut rng(1)));
    }

    /// With `q = 3` the truncated share is about 0.261 (10^7-draw reference).
    #[test]
    fn truncated_fraction_matches_reference() {
        let cfg = PrecisionConfig::default();
        let mut r = rng(2);
        let mut cut = 0;
        for _ in 0..10_000 {
            let s: f64 = (0..3).map(|_| draw_nu(&cfg, &mut r) * r.random_range(-1.0..=1.0)).sum();
            if s.abs() <= cfg.t0 {
                cut += 1;
            }
        }
        let frac = cut as f64 / 10_000.0;
        assert!((frac - 0.2608).abs() < 0.015, "{frac}");
    }

    #[test]
    fn zero_sparsity_is_identity() {
        let x = gen_covariates(20, 3, &mut rng(3));
        let cfg = PrecisionConfig { sparsity: 0.0, ..PrecisionConfig::default() };
        let spec = gen_precision_spec(x.view(), 6, &cfg, &mut rng(3)).unwrap();
        assert_eq!(spec.rejections, 0);
        assert_eq!(spec.omega(x.row(0)), Array2::<f64>::eye(6));
    }

    #[test]
    fn realized_precisions_are_psd() {
        let x = gen_covariates(150, 3, &mut rng(4));
        let cfg = PrecisionConfig { sparsity: 0.1, ..PrecisionConfig::default() };
        let spec = gen_precision_spec(x.view(), 10, &cfg, &mut rng(4)).unwrap();
        assert_eq!(spec.support.iter().filter(|&&s| s).count(), 2 * 5);
        assert!(min_eigenvalue(&spec, x.view()) >= -1e-10);
        for row in x.rows() {
            let om = spec.omega(row);
            assert_eq!(om, om.t());
            assert!(om.diag().iter().all(|&d| d == 1.0));
        }
    }

    #[test]
    fn exhausted_rejection_is_an_error() {
        let x = Array2::from_elem((5, 3), 1.0);
        let cfg = PrecisionConfig { sparsity: 1.0, nu_lo: 0.9, nu_hi: 1.0, t0: 0.0, max_attempts: 50, ..PrecisionConfig::default() };
        let err = gen_precision_spec(x.view(), 4, &cfg, &mut rng(5)).unwrap_err();
        assert!(matches!(err, Error::RejectionExhausted(50)));
    }

    #[test]
    fn scale_mixture_fractions() {
        assert!(gen_scales(50, 4, 0.0, 3.0, 2.0, &mut rng(6)).unwrap().iter().all(|&d| d == 1.0));
        assert!(gen_scales(50, 4, 1.0, 3.0, 2.0, &mut rng(6)).unwrap().iter().all(|&d| d != 1.0));
        let d = gen_scales(100, 100, 0.5, 3.0, 2.0, &mut rng(6)).unwrap();
        let unit = d.iter().filter(|&&v| v == 1.0).count() as f64 / 1e4;
        assert!((unit - 0.5).abs() < 3.0 * 0.005);
        assert!(gen_scales(2, 2, 1.5, 3.0, 2.0, &mut rng(6)).is_err());
    }

    #[test]
    fn truth_matches_spec() {
        let cfg = SimConfig { n: 60, p: 8, q: 2, pi: 0.0, precision: PrecisionConfig { sparsity: 0.2, ..PrecisionConfig::default() }, ..SimConfig::default() };
        let sim = gen_dataset(&cfg, &mut rng(7)).unwrap();
        assert_eq!(sim.y, sim.latent);
        for i in 0..cfg.n {
            for j in 0..cfg.p {
                for k in (0..cfg.p).filter(|&k| k != j) {
                    let r = sim.spec.r(j, k, sim.x.row(i));
                    let on = sim.spec.support[[j, k]] && r.abs() > sim.spec.t0;
                    assert_eq!(sim.edges[[i, j, k]], on);
                    assert_eq!(sim.edges[[i, j, k]], sim.edges[[i, k, j]]);
                    if on {
                        assert_eq!(sim.signs[[i, j, k]] as f64, -r.signum());
                    } else {
                        assert_eq!(sim.signs[[i, j, k]], 0);
                    }
                }
            }
        }
    }

    #[test]
    fn latent_covariance_at_fixed_covariate() {
        let mut spec = TruePrecisionSpec {
            support: Array2::from_elem((3, 3), false),
            nu: Array3::zeros((3, 3, 1)),
            t0: 0.15,
            rejections: 0,
        };
        for (j, k, v) in [(0, 1, 0.45), (1, 2, -0.4)] {
            spec.support[[j, k]] = true;
            spec.support[[k, j]] = true;
            spec.nu[[j, k, 0]] = v;
            spec.nu[[k, j, 0]] = v;
        }
        let x0 = ndarray::array![1.0];
        let omega = spec.omega(x0.view());
        let cov = DMatrix::from_fn(3, 3, |a, b| omega[[a, b]]).try_inverse().unwrap();
        let mut r = rng(8);
        let n = 100_000;
        let mut acc = DMatrix::zeros(3, 3);
        for _ in 0..n {
            let y = latent_row(&omega, &mut r).unwrap();
            acc += &y * y.transpose();
        }
        acc /= n as f64;
        assert!((acc - cov).abs().max() < 0.05);
    }

    fn excess_kurtosis(col: ArrayView1<'_, f64>) -> f64 {
        let n = col.len() as f64;
        let m = col.sum() / n;
        let m2 = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
        let m4 = col.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
        m4 / (m2 * m2) - 3.0
    }

    #[test]
    fn contamination_raises_kurtosis() {
        let base = SimConfig { n: 400, p: 6, q: 2, precision: PrecisionConfig { sparsity: 0.2, ..PrecisionConfig::default() }, ..SimConfig::default() };
        let median = |pi: f64| {
            let sim = gen_dataset(&SimConfig { pi, ..base.clone() }, &mut rng(9)).unwrap();
            let mut k: Vec<f64> = sim.y.columns().into_iter().map(excess_kurtosis).collect();
            k.sort_by(f64::total_cmp);
            k[k.len() / 2]
        };
        assert!(median(0.8) > median(0.0));
    }

    /// Twenty-five edges on fifty nodes almost surely share a node, and a
    /// two-edge component is PSD at all 250 rows with probability near 1e-5.
    #[test]
    fn paper_scale_rejection_exhausts() {
        let cfg = SimConfig::default();
        let err = gen_dataset(&cfg, &mut rng(10)).unwrap_err();
        assert!(matches!(err, Error::RejectionExhausted(10_000)));
    }

    #[test]
    fn paper_dimensions_with_sparser_support() {
        for pi in [0.0, 0.5, 0.8] {
            let precision = PrecisionConfig { sparsity: 0.004, ..PrecisionConfig::default() };
            let cfg = SimConfig { pi, precision, ..SimConfig::default() };
            let sim = gen_dataset(&cfg, &mut rng(10)).unwrap();
            assert_eq!(sim.y.dim(), (250, 50));
            assert_eq!(sim.x.dim(), (250, 3));
        }
    }
}
