//! Data model, hyperparameters, per-node MCMC state and the thresholded
//! coefficient algebra shared by the sampler and the summaries.
//!
//! For node `j` the regression is
//!
//! ```text
//! Y_ij / d_ij = sum_{k != j} beta_jk(X_i) Y_ik / d_ik + eps_ij,   eps_ij ~ N(0, sigma2_j)
//! beta_jk(X)  = theta_jk(X) * I(|theta_jk(X)| > t_j)
//! theta_jk(X) = sum_h alpha_jkh X_h,   alpha_jkh = eta_jkh * xi_jkh
//! ```
//!
//! Regressor `r` of node `j` is the `r`-th column of `Y` after removing
//! column `j`; see [`regressors`].

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed responses (`n x p`) and covariates (`n x q`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Array2<f64>,
    x: Array2<f64>,
}

impl Dataset {
    /// Validates shapes and finiteness. With `center` set, every response
    /// column is shifted to mean zero.
    pub fn new(y: Array2<f64>, x: Array2<f64>, center: bool) -> Result<Self> {
        let (n, p) = y.dim();
        let (nx, q) = x.dim();
        if n != nx {
            return Err(Error::Dimension(format!(
                "y has {n} rows but x has {nx} rows"
            )));
        }
        if n < 2 {
            return Err(Error::Dimension(format!("need n >= 2 observations, got {n}")));
        }
        if p < 2 {
            return Err(Error::Dimension(format!("need p >= 2 responses, got {p}")));
        }
        if q < 1 {
            return Err(Error::Dimension("need q >= 1 covariates".into()));
        }
        check_finite("y", &y)?;
        check_finite("x", &x)?;
        let mut y = y;
        if center {
            for mut col in y.columns_mut() {
                let mean = col.sum() / n as f64;
                col.mapv_inplace(|v| v - mean);
            }
        }
        Ok(Dataset { y, x })
    }

    pub fn y(&self) -> ArrayView2<'_, f64> {
        self.y.view()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn p(&self) -> usize {
        self.y.ncols()
    }

    pub fn q(&self) -> usize {
        self.x.ncols()
    }

    /// Replaces one response column. Used by calibration harnesses that
    /// regenerate the response of a single node regression.
    pub fn set_response_column(&mut self, j: usize, values: ArrayView1<'_, f64>) -> Result<()> {
        if values.len() != self.n() || j >= self.p() {
            return Err(Error::Dimension("response column replacement".into()));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    matrix: "y",
                    row: i,
                    col: j,
                });
            }
        }
        self.y.column_mut(j).assign(&values);
        Ok(())
    }
}

fn check_finite(matrix: &'static str, m: &Array2<f64>) -> Result<()> {
    for ((row, col), v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { matrix, row, col });
        }
    }
    Ok(())
}

/// Builds a [`Dataset`] from row-major nested vectors.
pub fn validate_dataset(y: &[Vec<f64>], x: &[Vec<f64>], center: bool) -> Result<Dataset> {
    let y = rows_to_array("y", y)?;
    let x = rows_to_array("x", x)?;
    Dataset::new(y, x, center)
}

fn rows_to_array(name: &str, rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::Dimension(format!(
            "{name} row {i} has {} entries, expected {ncols}",
            r.len()
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), ncols), flat).map_err(|e| Error::Dimension(e.to_string()))
}

/// Prior hyperparameters. Inverse-gamma laws use the shape/scale form
/// with density proportional to `x^-(shape+1) exp(-scale/x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    /// Spike variance factor.
    pub v0: f64,
    pub a_nu: f64,
    pub b_nu: f64,
    pub a_rho: f64,
    pub b_rho: f64,
    pub a_pi: f64,
    pub b_pi: f64,
    /// Inverse-gamma law of the squared non-unit scales.
    pub a_d: f64,
    pub b_d: f64,
    /// Upper end of the uniform threshold prior.
    pub t_max: f64,
    pub a_sigma: f64,
    pub b_sigma: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            v0: 0.01,
            a_nu: 1.0,
            b_nu: 1.0,
            a_rho: 1.0,
            b_rho: 1.0,
            a_pi: 1.0,
            b_pi: 1.0,
            a_d: 3.0,
            b_d: 2.0,
            t_max: 1.0,
            a_sigma: 1.0,
            b_sigma: 1.0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("v0", self.v0),
            ("a_nu", self.a_nu),
            ("b_nu", self.b_nu),
            ("a_rho", self.a_rho),
            ("b_rho", self.b_rho),
            ("a_pi", self.a_pi),
            ("b_pi", self.b_pi),
            ("a_d", self.a_d),
            ("b_d", self.b_d),
            ("t_max", self.t_max),
            ("a_sigma", self.a_sigma),
            ("b_sigma", self.b_sigma),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.v0 > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "v0 must lie in (0, 1], got {}",
                self.v0
            )));
        }
        Ok(())
    }
}

/// Chain length, burn-in, thinning and master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub iters: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            iters: 20_000,
            burnin: 19_000,
            thin: 1,
            seed: 1,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iters == 0 || self.thin == 0 {
            return Err(Error::InvalidParameter(
                "iters and thin must be positive".into(),
            ));
        }
        if self.burnin >= self.iters {
            return Err(Error::InvalidParameter(format!(
                "burnin ({}) must be smaller than iters ({})",
                self.burnin, self.iters
            )));
        }
        Ok(())
    }

    /// Number of retained draws, `ceil((iters - burnin) / thin)`.
    pub fn retained(&self) -> usize {
        (self.iters - self.burnin).div_ceil(self.thin)
    }

    /// Whether zero-based iteration `it` is kept.
    pub fn keeps(&self, it: usize) -> bool {
        it >= self.burnin && (it - self.burnin) % self.thin == 0
    }
}

/// Columns of `Y` acting as regressors for node `j`, in increasing order.
pub fn regressors(p: usize, j: usize) -> Vec<usize> {
    (0..p).filter(|&k| k != j).collect()
}

/// Position of response `k` among the regressors of node `j`.
pub fn regressor_index(j: usize, k: usize) -> Option<usize> {
    match k.cmp(&j) {
        std::cmp::Ordering::Less => Some(k),
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Greater => Some(k - 1),
    }
}

/// `theta_k(x) = sum_h alpha[k, h] x[h]` for every row `k` of `alpha`.
pub fn theta_eval(alpha: ArrayView2<'_, f64>, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    if alpha.ncols() != x.len() {
        return Err(Error::Dimension(format!(
            "alpha has {} covariate columns, x has {} entries",
            alpha.ncols(),
            x.len()
        )));
    }
    Ok(alpha.dot(&x))
}

/// Thresholded coefficient: `theta` when `|theta| > t`, otherwise exactly zero.
#[inline]
pub fn csif_eval(theta: f64, t: f64) -> f64 {
    if theta.abs() > t {
        theta
    } else {
        0.0
    }
}

/// Complete latent state of one node-wise regression.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub node: usize,
    /// `(p-1) x q`; the spike/slab scale component of `alpha`.
    pub eta: Array2<f64>,
    /// `(p-1) x q`; the expansion component of `alpha`.
    pub xi: Array2<f64>,
    /// `(p-1) x q`; prior mean of `xi`, either -1 or +1.
    pub m: Array2<f64>,
    /// `(p-1) x q`; `true` for the slab (`gamma = 1`), `false` for the spike (`gamma = v0`).
    pub slab: Array2<bool>,
    pub nu: Array2<f64>,
    pub rho: f64,
    pub t: f64,
    pub sigma2: f64,
    /// `n x p` random scales local to this regression.
    pub scales: Array2<f64>,
    /// Probability of a non-unit scale, one per variable of this regression.
    pub pi_mix: Vec<f64>,
}

impl NodeState {
    /// Starting point used by the production sampler: `alpha = 0`, random
    /// expansion signs, every coefficient in the slab, unit scales.
    pub fn initial<R: Rng + ?Sized>(
        data: &Dataset,
        hyper: &HyperParams,
        node: usize,
        rng: &mut R,
    ) -> Self {
        let (n, p, q) = (data.n(), data.p(), data.q());
        let m = Array2::from_shape_fn((p - 1, q), |_| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
        let col = data.y().column(node).to_owned();
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        NodeState {
            node,
            eta: Array2::zeros((p - 1, q)),
            xi: m.clone(),
            m,
            slab: Array2::from_elem((p - 1, q), true),
            nu: Array2::ones((p - 1, q)),
            rho: 0.5,
            t: 0.1 * hyper.t_max,
            sigma2: if var > 0.0 { var } else { 1.0 },
            scales: Array2::ones((n, p)),
            pi_mix: vec![0.5; p],
        }
    }

    /// Draws every latent quantity from its prior.
    pub fn from_prior<R: Rng + ?Sized>(
        n: usize,
        p: usize,
        q: usize,
        hyper: &HyperParams,
        node: usize,
        rng: &mut R,
    ) -> Result<Self> {
        hyper.validate()?;
        let rho = Beta::new(hyper.a_rho, hyper.b_rho)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .sample(rng);
        let pi_law = Beta::new(hyper.a_pi, hyper.b_pi)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let pi_mix: Vec<f64> = (0..p).map(|_| pi_law.sample(rng)).collect();
        let mut m = Array2::zeros((p - 1, q));
        let mut xi = Array2::zeros((p - 1, q));
        let mut slab = Array2::from_elem((p - 1, q), false);
        let mut nu = Array2::zeros((p - 1, q));
        let mut eta = Array2::zeros((p - 1, q));
        for idx in ndarray::indices((p - 1, q)) {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            m[idx] = sign;
            xi[idx] = sign + rng.sample::<f64, _>(rand_distr::StandardNormal);
            slab[idx] = rng.random_bool(rho);
            nu[idx] = sample_inv_gamma(hyper.a_nu, hyper.b_nu, rng);
            let s = if slab[idx] { 1.0 } else { hyper.v0 } * nu[idx];
            eta[idx] = Normal::new(0.0, s.sqrt()).expect("positive variance").sample(rng);
        }
        let mut scales = Array2::ones((n, p));
        for ((_, v), d) in scales.indexed_iter_mut() {
            *d = sample_scale_prior(pi_mix[v], hyper.a_d, hyper.b_d, rng);
        }
        Ok(NodeState {
            node,
            eta,
            xi,
            m,
            slab,
            nu,
            rho,
            t: rng.random::<f64>() * hyper.t_max,
            sigma2: sample_inv_gamma(hyper.a_sigma, hyper.b_sigma, rng),
            scales,
            pi_mix,
        })
    }

    pub fn alpha(&self) -> Array2<f64> {
        &self.eta * &self.xi
    }

    /// Prior variance factor `gamma` of entry `(r, h)`.
    pub fn gamma(&self, r: usize, h: usize, v0: f64) -> f64 {
        if self.slab[[r, h]] {
            1.0
        } else {
            v0
        }
    }

    /// Checks the structural invariants of the state.
    pub fn check(&self, data: &Dataset, hyper: &HyperParams) -> Result<()> {
        let (n, p, q) = (data.n(), data.p(), data.q());
        let shape = (p - 1, q);
        if self.eta.dim() != shape
            || self.xi.dim() != shape
            || self.m.dim() != shape
            || self.slab.dim() != shape
            || self.nu.dim() != shape
            || self.scales.dim() != (n, p)
            || self.pi_mix.len() != p
        {
            return Err(Error::Dimension("node state shape".into()));
        }
        let bad = |what: &str| Err(Error::InvalidParameter(format!("node {}: {what}", self.node)));
        if !(0.0..=hyper.t_max).contains(&self.t) {
            return bad("threshold outside [0, t_max]");
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return bad("sigma2 not positive");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho outside (0, 1)");
        }
        if self.scales.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return bad("non-positive scale");
        }
        if self.nu.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return bad("non-positive nu");
        }
        if self.m.iter().any(|&v| v != 1.0 && v != -1.0) {
            return bad("m outside {-1, +1}");
        }
        if self.eta.iter().chain(self.xi.iter()).any(|v| !v.is_finite()) {
            return bad("non-finite coefficient");
        }
        if self.pi_mix.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return bad("pi outside [0, 1]");
        }
        Ok(())
    }
}

/// Inverse-gamma draw in the shape/scale parameterization.
pub fn sample_inv_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    let g: f64 = Gamma::new(shape, 1.0 / scale)
        .expect("valid inverse-gamma parameters")
        .sample(rng);
    1.0 / g
}

/// Draw from the scale prior: 1 with probability `1 - pi`, otherwise
/// `sqrt(InvGa(a_d, b_d))`.
pub fn sample_scale_prior<R: Rng + ?Sized>(pi: f64, a_d: f64, b_d: f64, rng: &mut R) -> f64 {
    if pi > 0.0 && rng.random_bool(pi.min(1.0)) {
        sample_inv_gamma(a_d, b_d, rng).sqrt()
    } else {
        1.0
    }
}
