//! Gibbs sampler for one node-wise regression and the per-node parallel
//! driver.
//!
//! A sweep updates, in order: every `(eta, xi)` pair (optionally followed by
//! the sign rescale), the threshold, the expansion means `m`, the slab
//! indicators, the slab variances `nu`, `rho`, `sigma2`, the random scales
//! (Metropolis-Hastings with the prior as proposal) and the point-mass
//! weights `pi`.

pub mod conjugate;

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{csif_eval, regressors, sample_scale_prior, ChainConfig, Dataset, HyperParams, NodeState};
use crate::piecewise::{PiecewiseDensity, PriorKernel, QuadraticPiece};
use conjugate::{
    gamma_log_odds, m_plus_prob, nu_posterior, pi_posterior, rho_posterior, sigma2_posterior, slab_prob,
    BetaParams, InvGammaParams,
};

const SIGMA2_FLOOR: f64 = 1e-12;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Switches that change the transition kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerOptions {
    /// Metropolis-Hastings updates of the random scales; when off every
    /// scale stays at 1.
    pub update_scales: bool,
    /// Include the `1/d_ij` change-of-variables factor for the response scale.
    pub response_jacobian: bool,
    /// Apply `eta <- eta |xi|`, `xi <- xi / |xi|` after each coefficient update.
    pub rescale: bool,
    /// Use the as-printed slab odds exponent `-v0 eta^2 / (2 v0 nu)`.
    pub printed_gamma_odds: bool,
    /// Use the as-printed mixing update `Beta(a_pi + #{d = 1}, b_pi + #{d != 1})`,
    /// which treats `pi` as the probability of a unit scale.
    pub printed_pi_update: bool,
    /// After each coefficient update, map `(eta, xi, m)` to `(-eta, -xi, -m)`
    /// with probability 1/2. The posterior is invariant under the map, so the
    /// move leaves `alpha` untouched and lets the factors switch sign.
    pub sign_flip: bool,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions {
            update_scales: true,
            response_jacobian: true,
            rescale: false,
            printed_gamma_odds: false,
            printed_pi_update: false,
            sign_flip: true,
        }
    }
}

/// Which factor of `alpha = eta * xi` a coefficient update targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    Eta,
    Xi,
}

/// Likelihood contribution of one observation to a coefficient conditional.
///
/// With `w = other_factor * X_ih`, the edge is active when the target value
/// lies above `t1.max(t2)` or below `t1.min(t2)`; there the log-likelihood
/// differs from the inactive case by `a1 v^2 + a2 v + a3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientTerm {
    pub obs: usize,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// `(t - c_i) / w`.
    pub t1: f64,
    /// `(-t - c_i) / w`.
    pub t2: f64,
    /// `w > 0`, in which case `t2 < t1`.
    pub positive: bool,
}

impl CoefficientTerm {
    fn pieces(&self) -> [QuadraticPiece; 2] {
        let (lo, hi) = if self.t1 < self.t2 { (self.t1, self.t2) } else { (self.t2, self.t1) };
        [
            QuadraticPiece::lower(self.a1, self.a2, self.a3, hi),
            QuadraticPiece::upper(self.a1, self.a2, self.a3, lo),
        ]
    }
}

/// One node's chain: its state plus cached regression quantities.
#[derive(Debug, Clone)]
pub struct NodeChain<'a> {
    data: &'a Dataset,
    hyper: &'a HyperParams,
    opts: &'a SamplerOptions,
    state: NodeState,
    cols: Vec<usize>,
    /// `Y_ij / d_ij`.
    z: Vec<f64>,
    /// `n x (p-1)`; `Y_ik / d_ik` per regressor.
    u: Array2<f64>,
    /// `n x (p-1)`; `theta_k(X_i)`.
    theta: Array2<f64>,
    resid: Vec<f64>,
}

impl<'a> NodeChain<'a> {
    pub fn new(
        data: &'a Dataset,
        hyper: &'a HyperParams,
        opts: &'a SamplerOptions,
        state: NodeState,
    ) -> Result<Self> {
        hyper.validate()?;
        state.check(data, hyper)?;
        let (n, p) = (data.n(), data.p());
        let mut chain = NodeChain {
            data,
            hyper,
            opts,
            cols: regressors(p, state.node),
            state,
            z: vec![0.0; n],
            u: Array2::zeros((n, p - 1)),
            theta: Array2::zeros((n, p - 1)),
            resid: vec![0.0; n],
        };
        chain.refresh();
        Ok(chain)
    }

    pub fn state(&self) -> &NodeState {
        &self.state
    }

    pub fn into_state(self) -> NodeState {
        self.state
    }

    /// Replaces the data reference, e.g. after regenerating the response.
    pub fn set_data(&mut self, data: &'a Dataset) {
        self.data = data;
        self.refresh();
    }

    /// Recomputes every cached quantity from the state.
    pub fn refresh(&mut self) {
        let y = self.data.y();
        let x = self.data.x();
        let j = self.state.node;
        let alpha = self.state.alpha();
        for i in 0..self.data.n() {
            self.z[i] = y[[i, j]] / self.state.scales[[i, j]];
            let mut fit = 0.0;
            for (r, &k) in self.cols.iter().enumerate() {
                let u = y[[i, k]] / self.state.scales[[i, k]];
                self.u[[i, r]] = u;
                let th: f64 = (0..self.data.q()).map(|h| alpha[[r, h]] * x[[i, h]]).sum();
                self.theta[[i, r]] = th;
                fit += csif_eval(th, self.state.t) * u;
            }
            self.resid[i] = self.z[i] - fit;
        }
    }

    /// Residual sum of squares at the current state.
    pub fn rss(&self) -> f64 {
        self.resid.iter().map(|r| r * r).sum()
    }

    /// Gaussian log-likelihood of the node's response column.
    pub fn log_likelihood(&self) -> f64 {
        let s2 = self.state.sigma2;
        let n = self.data.n() as f64;
        let mut ll = -0.5 * self.rss() / s2 - 0.5 * n * (LN_2PI + s2.ln());
        if self.opts.response_jacobian {
            let j = self.state.node;
            ll -= (0..self.data.n()).map(|i| self.state.scales[[i, j]].ln()).sum::<f64>();
        }
        ll
    }

    /// Residual vector and regressor values, for diagnostics and tests.
    pub fn residuals(&self) -> &[f64] {
        &self.resid
    }

    fn sigma2(&self) -> f64 {
        self.state.sigma2.max(SIGMA2_FLOOR)
    }

    /// Per-observation terms of the conditional of `eta[r, h]` or `xi[r, h]`.
    /// Observations with `w = 0` or a zero regressor are skipped.
    pub fn coefficient_terms(&self, r: usize, h: usize, factor: Factor) -> Result<Vec<CoefficientTerm>> {
        let x = self.data.x();
        let s2 = self.sigma2();
        let t = self.state.t;
        let other = match factor {
            Factor::Eta => self.state.xi[[r, h]],
            Factor::Xi => self.state.eta[[r, h]],
        };
        let alpha_rh = self.state.eta[[r, h]] * self.state.xi[[r, h]];
        let mut terms = Vec::with_capacity(self.data.n());
        for i in 0..self.data.n() {
            let w = other * x[[i, h]];
            let u = self.u[[i, r]];
            if w == 0.0 || u == 0.0 {
                continue;
            }
            let th = self.theta[[i, r]];
            let c = th - alpha_rh * x[[i, h]];
            let e = self.resid[i] + csif_eval(th, t) * u;
            let cu = c * u;
            let term = CoefficientTerm {
                obs: i,
                a1: -(w * w * u * u) / (2.0 * s2),
                a2: -w * u * (cu - e) / s2,
                a3: -cu * (cu - 2.0 * e) / (2.0 * s2),
                t1: (t - c) / w,
                t2: (-t - c) / w,
                positive: w > 0.0,
            };
            if !(term.a1.is_finite() && term.a2.is_finite() && term.a3.is_finite() && term.t1.is_finite() && term.t2.is_finite()) {
                return Err(Error::CorruptState(match factor {
                    Factor::Eta => "eta",
                    Factor::Xi => "xi",
                }));
            }
            terms.push(term);
        }
        Ok(terms)
    }

    /// Full conditional of `eta[r, h]` (prior `N(0, gamma nu)`) or
    /// `xi[r, h]` (prior `N(m, 1)`).
    pub fn coefficient_conditional(&self, r: usize, h: usize, factor: Factor) -> Result<PiecewiseDensity> {
        let terms = self.coefficient_terms(r, h, factor)?;
        let pieces: Vec<QuadraticPiece> = terms.iter().flat_map(CoefficientTerm::pieces).collect();
        let prior = match factor {
            Factor::Eta => PriorKernel::normal(0.0, self.state.gamma(r, h, self.hyper.v0) * self.state.nu[[r, h]]),
            Factor::Xi => PriorKernel::normal(self.state.m[[r, h]], 1.0),
        };
        PiecewiseDensity::build(&pieces, &prior)
    }

    fn set_coefficient(&mut self, r: usize, h: usize, eta: f64, xi: f64) {
        let x = self.data.x();
        let t = self.state.t;
        self.state.eta[[r, h]] = eta;
        self.state.xi[[r, h]] = xi;
        let q = self.data.q();
        let row: Vec<f64> = (0..q).map(|l| self.state.eta[[r, l]] * self.state.xi[[r, l]]).collect();
        for i in 0..self.data.n() {
            let u = self.u[[i, r]];
            let old = csif_eval(self.theta[[i, r]], t);
            let th: f64 = (0..q).map(|l| row[l] * x[[i, l]]).sum();
            self.theta[[i, r]] = th;
            self.resid[i] += (old - csif_eval(th, t)) * u;
        }
    }

    pub fn update_eta<R: Rng + ?Sized>(&mut self, r: usize, h: usize, rng: &mut R) -> Result<f64> {
        let v = self.coefficient_conditional(r, h, Factor::Eta)?.sample(rng);
        self.set_coefficient(r, h, v, self.state.xi[[r, h]]);
        Ok(v)
    }

    pub fn update_xi<R: Rng + ?Sized>(&mut self, r: usize, h: usize, rng: &mut R) -> Result<f64> {
        let v = self.coefficient_conditional(r, h, Factor::Xi)?.sample(rng);
        self.set_coefficient(r, h, self.state.eta[[r, h]], v);
        Ok(v)
    }

    /// Moves the magnitude of `xi[r, h]` into `eta[r, h]`.
    pub fn flip_sign(&mut self, r: usize, h: usize) {
        let st = &mut self.state;
        st.eta[[r, h]] = -st.eta[[r, h]];
        st.xi[[r, h]] = -st.xi[[r, h]];
        st.m[[r, h]] = -st.m[[r, h]];
    }

    pub fn rescale(&mut self, r: usize, h: usize) {
        let (eta, xi) = rescale_pair(self.state.eta[[r, h]], self.state.xi[[r, h]]);
        self.set_coefficient(r, h, eta, xi);
    }

    /// Full conditional of the threshold on `[0, t_max]`.
    ///
    /// Breakpoints are the `|theta_k(X_i)|` inside `(0, t_max)`. Starting
    /// from `t = 0` the sweep deactivates one edge per breakpoint and updates
    /// the residual sum of squares in O(1); each jump becomes a flat piece
    /// active below its breakpoint.
    pub fn threshold_conditional(&self) -> Result<PiecewiseDensity> {
        let t_max = self.hyper.t_max;
        let s2 = self.sigma2();
        let n = self.data.n();
        let mut resid = vec![0.0; n];
        let mut events: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..n {
            let mut fit = 0.0;
            for r in 0..self.cols.len() {
                let th = self.theta[[i, r]];
                let a = th.abs();
                if a > 0.0 {
                    fit += th * self.u[[i, r]];
                    if a < t_max {
                        events.push((a, i, r));
                    }
                }
            }
            resid[i] = self.z[i] - fit;
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut rss: f64 = resid.iter().map(|v| v * v).sum();
        let mut pieces = Vec::with_capacity(events.len());
        for &(bound, i, r) in &events {
            let before = resid[i];
            let after = before + self.theta[[i, r]] * self.u[[i, r]];
            let delta = after * after - before * before;
            resid[i] = after;
            rss += delta;
            pieces.push(QuadraticPiece::upper(0.0, 0.0, delta / (2.0 * s2), bound));
        }
        let prior = PriorKernel {
            c3: -rss / (2.0 * s2),
            ..PriorKernel::uniform(0.0, t_max)
        };
        if !prior.c3.is_finite() {
            return Err(Error::CorruptState("threshold"));
        }
        PiecewiseDensity::build(&pieces, &prior)
    }

    pub fn update_threshold<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<f64> {
        let t = self.threshold_conditional()?.sample(rng);
        self.state.t = t;
        self.refresh_residuals();
        Ok(t)
    }

    fn refresh_residuals(&mut self) {
        let t = self.state.t;
        for i in 0..self.data.n() {
            let fit: f64 = (0..self.cols.len())
                .map(|r| csif_eval(self.theta[[i, r]], t) * self.u[[i, r]])
                .sum();
            self.resid[i] = self.z[i] - fit;
        }
    }

    pub fn update_m<R: Rng + ?Sized>(&mut self, r: usize, h: usize, rng: &mut R) -> f64 {
        let m = if rng.random::<f64>() < m_plus_prob(self.state.xi[[r, h]]) { 1.0 } else { -1.0 };
        self.state.m[[r, h]] = m;
        m
    }

    /// Log odds of the slab for entry `(r, h)` at the current state.
    pub fn gamma_log_odds(&self, r: usize, h: usize) -> f64 {
        gamma_log_odds(
            self.state.eta[[r, h]],
            self.state.nu[[r, h]],
            self.state.rho,
            self.hyper.v0,
            self.opts.printed_gamma_odds,
        )
    }

    pub fn update_gamma<R: Rng + ?Sized>(&mut self, r: usize, h: usize, rng: &mut R) -> bool {
        let slab = rng.random::<f64>() < slab_prob(self.gamma_log_odds(r, h));
        self.state.slab[[r, h]] = slab;
        slab
    }

    pub fn nu_conditional(&self, r: usize, h: usize) -> InvGammaParams {
        nu_posterior(
            self.state.eta[[r, h]],
            self.state.gamma(r, h, self.hyper.v0),
            self.hyper.a_nu,
            self.hyper.b_nu,
        )
    }

    pub fn update_nu<R: Rng + ?Sized>(&mut self, r: usize, h: usize, rng: &mut R) -> f64 {
        let v = self.nu_conditional(r, h).sample(rng);
        self.state.nu[[r, h]] = v;
        v
    }

    pub fn rho_conditional(&self) -> Result<BetaParams> {
        let slab = self.state.slab.iter().filter(|&&s| s).count();
        rho_posterior(slab, self.state.slab.len() - slab, self.hyper.a_rho, self.hyper.b_rho)
    }

    pub fn update_rho<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<f64> {
        // Keep rho strictly inside (0, 1) so the slab log odds stay finite.
        let v = self.rho_conditional()?.sample(rng)?.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
        self.state.rho = v;
        Ok(v)
    }

    pub fn sigma2_conditional(&self) -> InvGammaParams {
        sigma2_posterior(self.rss(), self.data.n(), self.hyper.a_sigma, self.hyper.b_sigma)
    }

    pub fn update_sigma2<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let v = self.sigma2_conditional().sample(rng).max(SIGMA2_FLOOR);
        self.state.sigma2 = v;
        v
    }

    /// Residual of row `i` if scale `(i, v)` were replaced by `d`.
    fn residual_with_scale(&self, i: usize, v: usize, d: f64) -> f64 {
        let y = self.data.y();
        let j = self.state.node;
        if v == j {
            self.resid[i] + y[[i, j]] / d - self.z[i]
        } else {
            let r = if v < j { v } else { v - 1 };
            let beta = csif_eval(self.theta[[i, r]], self.state.t);
            self.resid[i] - beta * (y[[i, v]] / d - self.u[[i, r]])
        }
    }

    /// Log Metropolis-Hastings ratio for replacing scale `(i, v)` by
    /// `proposal` drawn from the scale prior. Prior and proposal cancel, so
    /// only the row likelihood (with the response Jacobian) remains.
    pub fn scale_log_accept(&self, i: usize, v: usize, proposal: f64) -> f64 {
        let s2 = self.sigma2();
        let current = self.state.scales[[i, v]];
        let new_resid = self.residual_with_scale(i, v, proposal);
        let mut ratio = -(new_resid * new_resid - self.resid[i] * self.resid[i]) / (2.0 * s2);
        if v == self.state.node && self.opts.response_jacobian {
            ratio -= proposal.ln() - current.ln();
        }
        ratio
    }

    fn set_scale(&mut self, i: usize, v: usize, d: f64) {
        let y = self.data.y();
        let j = self.state.node;
        self.resid[i] = self.residual_with_scale(i, v, d);
        self.state.scales[[i, v]] = d;
        if v == j {
            self.z[i] = y[[i, j]] / d;
        } else {
            let r = if v < j { v } else { v - 1 };
            self.u[[i, r]] = y[[i, v]] / d;
        }
    }

    /// One Metropolis-Hastings pass over every scale of this regression.
    /// Returns the number of accepted proposals.
    pub fn update_scales<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        if !self.opts.update_scales {
            return 0;
        }
        let mut accepted = 0;
        for v in 0..self.data.p() {
            let pi = self.state.pi_mix[v];
            for i in 0..self.data.n() {
                self.update_scale(i, v, pi, rng, &mut accepted);
            }
        }
        accepted
    }

    fn update_scale<R: Rng + ?Sized>(&mut self, i: usize, v: usize, pi: f64, rng: &mut R, accepted: &mut usize) {
        let proposal = sample_scale_prior(pi, self.hyper.a_d, self.hyper.b_d, rng);
        let log_ratio = self.scale_log_accept(i, v, proposal);
        let u: f64 = rng.random();
        if log_ratio >= 0.0 || u.ln() < log_ratio {
            self.set_scale(i, v, proposal);
            *accepted += 1;
        }
    }

    /// MH pass over the scales of a single variable.
    pub fn update_scales_of<R: Rng + ?Sized>(&mut self, v: usize, rng: &mut R) -> usize {
        let mut accepted = 0;
        let pi = self.state.pi_mix[v];
        for i in 0..self.data.n() {
            self.update_scale(i, v, pi, rng, &mut accepted);
        }
        accepted
    }

    pub fn pi_conditional(&self, v: usize) -> BetaParams {
        let unit = self.state.scales.column(v).iter().filter(|&&d| d == 1.0).count();
        let other = self.data.n() - unit;
        if self.opts.printed_pi_update {
            pi_posterior(unit, other, self.hyper.a_pi, self.hyper.b_pi)
        } else {
            pi_posterior(other, unit, self.hyper.a_pi, self.hyper.b_pi)
        }
    }

    pub fn update_pi<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        for v in 0..self.data.p() {
            self.state.pi_mix[v] = self.pi_conditional(v).sample(rng)?;
        }
        Ok(())
    }

    /// One full pass over every block of the state.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.refresh();
        let (rows, q) = self.state.eta.dim();
        for r in 0..rows {
            for h in 0..q {
                self.update_eta(r, h, rng)?;
                self.update_xi(r, h, rng)?;
                if self.opts.sign_flip && rng.random_bool(0.5) {
                    self.flip_sign(r, h);
                }
                if self.opts.rescale {
                    self.rescale(r, h);
                }
            }
        }
        self.update_threshold(rng)?;
        for r in 0..rows {
            for h in 0..q {
                self.update_m(r, h, rng);
            }
        }
        for r in 0..rows {
            for h in 0..q {
                self.update_gamma(r, h, rng);
            }
        }
        for r in 0..rows {
            for h in 0..q {
                self.update_nu(r, h, rng);
            }
        }
        self.update_rho(rng)?;
        self.update_sigma2(rng);
        self.update_scales(rng);
        self.update_pi(rng)?;
        Ok(())
    }
}

/// `(eta |xi|, xi / |xi|)`; the pair is returned unchanged when `xi = 0`.
pub fn rescale_pair(eta: f64, xi: f64) -> (f64, f64) {
    if xi == 0.0 {
        return (eta, xi);
    }
    let mag = xi.abs();
    (eta * mag, xi / mag)
}

/// Retained draws of one node's chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub node: usize,
    /// Zero-based iteration index of each retained draw.
    pub iterations: Vec<usize>,
    /// `draws x (p-1) x q`.
    pub alpha: Array3<f64>,
    /// `draws x (p-1) x q`; slab membership.
    pub slab: Array3<bool>,
    pub t: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub loglik: Vec<f64>,
    /// Fraction of this regression's scales equal to one.
    pub unit_scale_frac: Vec<f64>,
}

impl PosteriorDraws {
    pub fn with_capacity(node: usize, draws: usize, rows: usize, q: usize) -> Self {
        PosteriorDraws {
            node,
            iterations: Vec::with_capacity(draws),
            alpha: Array3::zeros((draws, rows, q)),
            slab: Array3::from_elem((draws, rows, q), false),
            t: Vec::with_capacity(draws),
            sigma2: Vec::with_capacity(draws),
            loglik: Vec::with_capacity(draws),
            unit_scale_frac: Vec::with_capacity(draws),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Number of regressors.
    pub fn rows(&self) -> usize {
        self.alpha.dim().1
    }

    pub fn q(&self) -> usize {
        self.alpha.dim().2
    }

    fn record(&mut self, it: usize, chain: &NodeChain<'_>) {
        let s = self.t.len();
        let st = chain.state();
        self.alpha.slice_mut(ndarray::s![s, .., ..]).assign(&st.alpha());
        self.slab.slice_mut(ndarray::s![s, .., ..]).assign(&st.slab);
        self.iterations.push(it);
        self.t.push(st.t);
        self.sigma2.push(st.sigma2);
        self.loglik.push(chain.log_likelihood());
        let unit = st.scales.iter().filter(|&&d| d == 1.0).count();
        self.unit_scale_frac.push(unit as f64 / st.scales.len() as f64);
    }
}

/// Independent RNG stream for node `node` under master seed `seed`.
pub fn node_rng(seed: u64, node: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node as u64 + 1);
    rng
}

/// Runs the chain of a single node.
pub fn run_node(
    data: &Dataset,
    hyper: &HyperParams,
    config: &ChainConfig,
    opts: &SamplerOptions,
    node: usize,
) -> Result<PosteriorDraws> {
    config.validate()?;
    let mut rng = node_rng(config.seed, node);
    let init = NodeState::initial(data, hyper, node, &mut rng);
    let mut chain = NodeChain::new(data, hyper, opts, init)?;
    let mut draws = PosteriorDraws::with_capacity(node, config.retained(), data.p() - 1, data.q());
    for it in 0..config.iters {
        chain.sweep(&mut rng)?;
        if config.keeps(it) {
            draws.record(it, &chain);
        }
    }
    Ok(draws)
}

/// Runs `job` for every node on a local pool of `threads` workers (all
/// available when `None`) and returns the results in node order.
pub fn for_each_node<T, F>(p: usize, threads: Option<usize>, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(|| (0..p).into_par_iter().map(&job).collect()))
}

/// Runs one chain per node. Results do not depend on the worker count.
pub fn run_all(
    data: &Dataset,
    hyper: &HyperParams,
    config: &ChainConfig,
    opts: &SamplerOptions,
    threads: Option<usize>,
) -> Result<Vec<PosteriorDraws>> {
    hyper.validate()?;
    config.validate()?;
    for_each_node(data.p(), threads, |j| {
        run_node(data, hyper, config, opts, j).map_err(|e| Error::Node {
            node: j,
            source: Box::new(e),
        })
    })?
    .into_iter()
    .collect()
}
