//! Selection metrics, FDR cutoffs, convergence diagnostics and the H-score.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::ArrayView2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::PosteriorDraws;
use crate::model::regressors;
use crate::simgen::SimTruth;
use crate::special::{kolmogorov_sf, norm_cdf, norm_sf};
use crate::summary::{
    alpha_hat, epp_edge, individual_network, pip_alpha, symmetrize_alpha, AlphaRule, Cutoff, EdgeRule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Sensitivity; `NaN` without positives.
    pub fn tpr(&self) -> f64 {
        self.tp as f64 / (self.tp + self.fn_) as f64
    }

    /// Specificity; `NaN` without negatives.
    pub fn tnr(&self) -> f64 {
        self.tn as f64 / (self.tn + self.fp) as f64
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

pub fn confusion(selected: &[bool], truth: &[bool]) -> Result<ConfusionCounts> {
    if selected.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} selections against {} labels",
            selected.len(),
            truth.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&s, &t) in selected.iter().zip(truth) {
        match (s, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Matthews correlation; 0 when any marginal count is zero.
pub fn mcc(c: &ConfusionCounts) -> f64 {
    let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if den == 0.0 {
        return 0.0;
    }
    (tp * tn - fp * fn_) / den.sqrt()
}

/// ROC curve as `(false positive rate, true positive rate)` points from
/// `(0, 0)` to `(1, 1)`, one point per distinct score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
    /// Area over false positive rates in `[0, 0.2]`, divided by 0.2.
    pub pauc: f64,
}

pub const PAUC_FPR_MAX: f64 = 0.2;

pub fn roc(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension("scores and labels differ in length".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Undefined("ROC needs both classes"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    // Twice the trapezoid area in units of pairs: 2 * concordant + tied.
    let mut twice_area: u128 = 0;
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut gp, mut gn) = (0u64, 0u64);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                gp += 1;
            } else {
                gn += 1;
            }
            i += 1;
        }
        twice_area += gn as u128 * (2 * tp as u128 + gp as u128);
        tp += gp;
        fp += gn;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    let auc = twice_area as f64 / (2 * pos as u128 * neg as u128) as f64;
    let pauc = partial_area(&points, PAUC_FPR_MAX) / PAUC_FPR_MAX;
    Ok(RocCurve { points, auc, pauc })
}

/// Trapezoid area under a monotone curve for `x` in `[0, x_max]`.
fn partial_area(points: &[(f64, f64)], x_max: f64) -> f64 {
    let mut area = 0.0;
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x0 >= x_max {
            break;
        }
        if x1 == x0 {
            continue;
        }
        let xe = x1.min(x_max);
        let ye = y0 + (y1 - y0) * (xe - x0) / (x1 - x0);
        area += 0.5 * (y0 + ye) * (xe - x0);
    }
    area
}

/// Sign agreement restricted to items where both signs are nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignAgreement {
    pub mcc: f64,
    pub counts: ConfusionCounts,
    /// False when no item is nonzero in both; `mcc` is then 0.
    pub defined: bool,
}

pub fn sign_mcc(estimated: &[i8], truth: &[i8]) -> Result<SignAgreement> {
    if estimated.len() != truth.len() {
        return Err(Error::Dimension("sign vectors differ in length".into()));
    }
    let (sel, lab): (Vec<bool>, Vec<bool>) = estimated
        .iter()
        .zip(truth)
        .filter(|(&e, &t)| e != 0 && t != 0)
        .map(|(&e, &t)| (e > 0, t > 0))
        .unzip();
    let counts = confusion(&sel, &lab)?;
    Ok(SignAgreement { mcc: mcc(&counts), counts, defined: !sel.is_empty() })
}

/// Returned by [`fdr_cutoff`] when no cutoff keeps the FDR below `alpha`.
pub const SELECT_NOTHING: f64 = f64::INFINITY;

/// Largest-`K` cutoff whose mean posterior false-discovery proportion among
/// the top `K` probabilities is below `alpha`. Select with `prob >= cutoff`.
pub fn fdr_cutoff(probs: &[f64], alpha: f64) -> f64 {
    let mut q: Vec<f64> = probs.to_vec();
    q.sort_by(|a, b| b.total_cmp(a));
    let mut run = 0.0;
    let mut best = None;
    for (k, &v) in q.iter().enumerate() {
        run += 1.0 - v;
        if run / ((k + 1) as f64) < alpha {
            best = Some(k);
        }
    }
    best.map_or(SELECT_NOTHING, |k| q[k])
}

/// Geweke convergence statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geweke {
    pub z: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GewekeConfig {
    pub first: f64,
    pub last: f64,
    pub batches: usize,
}

impl Default for GewekeConfig {
    fn default() -> Self {
        GewekeConfig { first: 0.2, last: 0.2, batches: 20 }
    }
}

/// Mean and batch-means estimate of `Var(mean)`.
fn batch_mean_var(seg: &[f64], batches: usize) -> (f64, f64) {
    let n = seg.len();
    let mean = seg.iter().sum::<f64>() / n as f64;
    let nb = batches.min(n).max(1);
    let size = n / nb;
    if nb < 2 || size == 0 {
        return (mean, 0.0);
    }
    let bm: Vec<f64> = (0..nb)
        .map(|b| seg[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let gm = bm.iter().sum::<f64>() / nb as f64;
    let var_bm = bm.iter().map(|v| (v - gm).powi(2)).sum::<f64>() / (nb - 1) as f64;
    // Long-run variance is size * var_bm; divide by the segment length.
    (mean, size as f64 * var_bm / n as f64)
}

pub fn geweke(chain: &[f64], cfg: &GewekeConfig) -> Result<Geweke> {
    let n = chain.len();
    let n1 = (cfg.first * n as f64).floor() as usize;
    let n2 = (cfg.last * n as f64).floor() as usize;
    if n1 < 2 || n2 < 2 || n1 + n2 > n {
        return Err(Error::Undefined("chain too short for the Geweke segments"));
    }
    let (m1, v1) = batch_mean_var(&chain[..n1], cfg.batches);
    let (m2, v2) = batch_mean_var(&chain[n - n2..], cfg.batches);
    let diff = m1 - m2;
    let den = (v1 + v2).sqrt();
    let z = if den > 0.0 {
        diff / den
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    Ok(Geweke { z, p_value: (2.0 * norm_sf(z.abs())).min(1.0) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeEntry {
    /// Regression node.
    pub j: usize,
    /// Response variable of the coefficient.
    pub k: usize,
    pub h: usize,
    pub z: f64,
    pub p_value: f64,
    pub adjusted_p: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeSuite {
    pub entries: Vec<GewekeEntry>,
    /// True when no Bonferroni-adjusted p-value falls below the level.
    pub converged: bool,
}

pub const GEWEKE_LEVEL: f64 = 0.05;

/// Geweke test of every `alpha_jkh` chain with a Bonferroni correction over
/// all `p (p-1) q` tests.
pub fn geweke_suite(draws: &[PosteriorDraws], cfg: &GewekeConfig) -> Result<GewekeSuite> {
    let p = draws.len();
    let mut raw = Vec::new();
    for (j, d) in draws.iter().enumerate() {
        for (r, k) in regressors(p, j).into_iter().enumerate() {
            for h in 0..d.q() {
                let chain: Vec<f64> = (0..d.len()).map(|s| d.alpha[[s, r, h]]).collect();
                raw.push((j, k, h, geweke(&chain, cfg)?));
            }
        }
    }
    let m = raw.len() as f64;
    let entries: Vec<GewekeEntry> = raw
        .into_iter()
        .map(|(j, k, h, g)| {
            let adjusted_p = (g.p_value * m).min(1.0);
            GewekeEntry { j, k, h, z: g.z, p_value: g.p_value, adjusted_p, pass: adjusted_p >= GEWEKE_LEVEL }
        })
        .collect();
    let converged = entries.iter().all(|e| e.pass);
    Ok(GewekeSuite { entries, converged })
}

/// One-sample Kolmogorov-Smirnov distance of `sample` against `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// KS distance of the standardized sample from the standard normal.
fn standardized_ks(sample: &[f64]) -> f64 {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let sd = (sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let z: Vec<f64> = sample.iter().map(|v| (v - mean) / sd).collect();
    ks_statistic(&z, norm_cdf)
}

/// How the normality-test p-value behind the H-score is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HScoreMethod {
    /// Monte Carlo null distribution of the KS distance for standardized
    /// normal samples of the same size (the Lilliefors test).
    #[default]
    Calibrated,
    /// Asymptotic Kolmogorov distribution, ignoring that mean and variance
    /// were estimated.
    Asymptotic,
}

pub const HSCORE_NULL_DRAWS: usize = 2000;
const HSCORE_NULL_SEED: u64 = 0x5eed_4b53;

fn null_ks(n: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("cache lock").get(&n) {
        return v.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(HSCORE_NULL_SEED ^ n as u64);
    let mut buf = vec![0.0; n];
    let mut stats: Vec<f64> = (0..HSCORE_NULL_DRAWS)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = StandardNormal.sample(&mut rng);
            }
            standardized_ks(&buf)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let stats = Arc::new(stats);
    cache.lock().expect("cache lock").insert(n, stats.clone());
    stats
}

/// p-value of the KS normality test of a standardized sample.
pub fn normality_pvalue(sample: &[f64], method: HScoreMethod) -> Result<f64> {
    if sample.len() < 3 {
        return Err(Error::Undefined("normality test needs at least three values"));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite value in sample".into()));
    }
    let first = sample[0];
    if sample.iter().all(|&v| v == first) {
        return Err(Error::Undefined("constant sample"));
    }
    let d = standardized_ks(sample);
    Ok(match method {
        HScoreMethod::Asymptotic => kolmogorov_sf(d * (sample.len() as f64).sqrt()),
        HScoreMethod::Calibrated => {
            let null = null_ks(sample.len());
            let exceed = null.len() - null.partition_point(|&s| s < d);
            (1 + exceed) as f64 / (null.len() + 1) as f64
        }
    })
}

/// `2 Phi(log(1 - pval))`.
pub fn h_from_pvalue(pval: f64) -> f64 {
    if pval >= 1.0 {
        return 0.0;
    }
    (2.0 * norm_cdf((-pval).ln_1p())).clamp(0.0, 1.0)
}

pub fn h_score(sample: &[f64], method: HScoreMethod) -> Result<f64> {
    Ok(h_from_pvalue(normality_pvalue(sample, method)?))
}

/// H-score of every column of `y`.
pub fn h_scores(y: ArrayView2<'_, f64>, method: HScoreMethod) -> Result<Vec<f64>> {
    y.columns().into_iter().map(|c| h_score(&c.to_vec(), method)).collect()
}

/// Upper-tail chi-square probability of a histogram against equal cell
/// probabilities.
pub fn chi_square_uniform_pvalue(counts: &[u64]) -> f64 {
    let k = counts.len() as f64;
    let total: u64 = counts.iter().sum();
    let expect = total as f64 / k;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
    if stat <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(0.5 * (k - 1.0), 0.5 * stat)
}

/// Selection and ranking performance of a fit against the simulation truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub covariate: ConfusionCounts,
    pub covariate_mcc: f64,
    pub covariate_auc: Option<f64>,
    pub covariate_pauc: Option<f64>,
    pub edge: ConfusionCounts,
    pub edge_mcc: f64,
    pub edge_auc: Option<f64>,
    pub edge_pauc: Option<f64>,
    pub sign: SignAgreement,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRules {
    pub alpha_rule: AlphaRule,
    pub edge_rule: EdgeRule,
    pub c0: Cutoff,
    pub c1: Cutoff,
}

impl Default for EvalRules {
    fn default() -> Self {
        EvalRules { alpha_rule: AlphaRule::Min, edge_rule: EdgeRule::Max, c0: Cutoff::Above(0.5), c1: Cutoff::Above(0.5) }
    }
}

/// Covariate selection over `(j < k, h)` and edge selection over
/// `(i, j < k)` at every observed covariate row.
pub fn evaluate(draws: &[PosteriorDraws], truth: &SimTruth, rules: &EvalRules) -> Result<Evaluation> {
    let (n, p, q) = (truth.x.nrows(), truth.y.ncols(), truth.x.ncols());
    if draws.len() != p {
        return Err(Error::Dimension("draw sets do not match the simulated dimension".into()));
    }
    let sym = symmetrize_alpha(&pip_alpha(draws)?, &alpha_hat(draws)?, rules.alpha_rule)?;
    let (mut cs, mut cl, mut csel) = (Vec::new(), Vec::new(), Vec::new());
    for j in 0..p {
        for k in (j + 1)..p {
            for h in 0..q {
                let pip = sym.pip[[j, k, h]];
                cs.push(pip);
                csel.push(rules.c0.selects(pip));
                cl.push(truth.covariate_support[[j, k, h]]);
            }
        }
    }
    let (mut es, mut el, mut esel, mut est_sign, mut true_sign) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for i in 0..n {
        let probs = epp_edge(draws, &sym, truth.x.row(i))?;
        let net = individual_network(&probs, rules.edge_rule, rules.c1)?;
        for j in 0..p {
            for k in (j + 1)..p {
                let e = net.epp[[j, k]];
                let sel = rules.c1.selects(e);
                es.push(e);
                esel.push(sel);
                el.push(truth.edges[[i, j, k]]);
                est_sign.push(if sel { net.sign[[j, k]] } else { 0 });
                true_sign.push(truth.signs[[i, j, k]]);
            }
        }
    }
    let covariate = confusion(&csel, &cl)?;
    let edge = confusion(&esel, &el)?;
    let c_roc = roc(&cs, &cl).ok();
    let e_roc = roc(&es, &el).ok();
    Ok(Evaluation {
        covariate,
        covariate_mcc: mcc(&covariate),
        covariate_auc: c_roc.as_ref().map(|r| r.auc),
        covariate_pauc: c_roc.as_ref().map(|r| r.pauc),
        edge,
        edge_mcc: mcc(&edge),
        edge_auc: e_roc.as_ref().map(|r| r.auc),
        edge_pauc: e_roc.as_ref().map(|r| r.pauc),
        sign: sign_mcc(&est_sign, &true_sign)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn confusion_cases() {
        let a = [true, false, true, false];
        let c = confusion(&a, &a).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        let b: Vec<bool> = a.iter().map(|v| !v).collect();
        let c = confusion(&a, &b).unwrap();
        assert_eq!((c.tp, c.tn), (0, 0));
        let sel = [true, true, true, false, false, false, false, false, false, false];
        let tru = [true, true, false, true, false, false, false, false, false, false];
        let c = confusion(&sel, &tru).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 2, fp: 1, tn: 6, fn_: 1 });
        assert!((mcc(&c) - 11.0 / 21.0).abs() < 1e-15);
        assert!(confusion(&sel, &tru[..3]).is_err());
    }

    #[test]
    fn mcc_edge_cases() {
        assert_eq!(mcc(&ConfusionCounts { tp: 5, fp: 0, tn: 5, fn_: 0 }), 1.0);
        assert_eq!(mcc(&ConfusionCounts { tp: 3, fp: 4, tn: 0, fn_: 0 }), 0.0);
    }

    #[test]
    fn roc_extremes() {
        let labels = [true, true, false, false];
        assert_eq!(roc(&[0.9, 0.8, 0.2, 0.1], &labels).unwrap().auc, 1.0);
        assert_eq!(roc(&[0.1, 0.2, 0.8, 0.9], &labels).unwrap().auc, 0.0);
        let perfect = roc(&[0.9, 0.8, 0.2, 0.1], &labels).unwrap();
        assert!((perfect.pauc - 1.0).abs() < 1e-15);
        assert_eq!(roc(&[0.5; 4], &labels).unwrap().auc, 0.5);
        assert!(roc(&[0.5, 0.4], &[true, true]).is_err());
    }

    pub(crate) fn pair_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let (mut num, mut pairs) = (0.0, 0.0);
        for (i, &li) in labels.iter().enumerate() {
            for (k, &lk) in labels.iter().enumerate() {
                if li && !lk {
                    pairs += 1.0;
                    if scores[i] > scores[k] {
                        num += 1.0;
                    } else if scores[i] == scores[k] {
                        num += 0.5;
                    }
                }
            }
        }
        num / pairs
    }

    #[test]
    fn auc_equals_pair_counting() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let n = rng.random_range(2..=200);
            let scores: Vec<f64> = (0..n).map(|_| (rng.random_range(0..20) as f64) / 20.0).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
            labels[0] = true;
            labels[1] = false;
            assert_eq!(roc(&scores, &labels).unwrap().auc, pair_auc(&scores, &labels));
        }
    }

    #[test]
    fn sign_mcc_cases() {
        let s = sign_mcc(&[1, -1, 1], &[1, -1, 1]).unwrap();
        assert_eq!(s.mcc, 1.0);
        let e = sign_mcc(&[0, 1], &[1, 0]).unwrap();
        assert!(!e.defined);
        assert_eq!(e.mcc, 0.0);
        // Six edges: four usable, confusion tp=1 fp=1 tn=1 fn=1.
        let est = [1, 1, -1, -1, 0, 1];
        let tru = [1, -1, -1, 1, 1, 0];
        let s = sign_mcc(&est, &tru).unwrap();
        assert_eq!(s.counts, ConfusionCounts { tp: 1, fp: 1, tn: 1, fn_: 1 });
        assert_eq!(s.mcc, 0.0);
    }

    #[test]
    fn fdr_examples() {
        assert_eq!(fdr_cutoff(&[0.99, 0.98, 0.5], 0.1), 0.98);
        assert_eq!(fdr_cutoff(&[1.0, 1.0, 1.0], 0.1), 1.0);
        assert_eq!(fdr_cutoff(&[0.5], 0.1), SELECT_NOTHING);
        assert!(SELECT_NOTHING > 1.0);
    }

    #[test]
    fn geweke_cases() {
        let cfg = GewekeConfig::default();
        let g = geweke(&[2.5; 500], &cfg).unwrap();
        assert_eq!((g.z, g.p_value), (0.0, 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let shifted: Vec<f64> = (0..1000)
            .map(|i| { let z: f64 = StandardNormal.sample(&mut rng); z } + if i >= 500 { 5.0 } else { 0.0 })
            .collect::<Vec<f64>>();
        assert!(geweke(&shifted, &cfg).unwrap().p_value < 1e-6);
        let ps: Vec<f64> = (0..500)
            .map(|_| {
                let c: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
                geweke(&c, &cfg).unwrap().p_value
            })
            .collect();
        assert!(ks_statistic(&ps, |x| x.clamp(0.0, 1.0)) < 0.08);
        assert!(geweke(&[1.0; 5], &cfg).is_err());
    }

    #[test]
    fn h_score_limits() {
        assert_eq!(h_from_pvalue(1.0), 0.0);
        assert!((h_from_pvalue(0.0) - 1.0).abs() < 1e-15);
        assert!(h_from_pvalue(0.3) > h_from_pvalue(0.31));
        assert!(h_score(&[1.0; 10], HScoreMethod::Calibrated).is_err());
    }

    #[test]
    fn h_score_separates_normal_and_heavy_tails() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal: Vec<f64> = (0..300).map(|_| StandardNormal.sample(&mut rng)).collect();
        let cauchy: Vec<f64> = (0..300)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                a / b
            })
            .collect();
        assert!(h_score(&cauchy, HScoreMethod::Calibrated).unwrap() > 0.99);
        assert!(h_score(&normal, HScoreMethod::Calibrated).unwrap() < 0.99);
    }

    #[test]
    fn asymptotic_pvalues_are_conservative_after_standardizing() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut hs: Vec<f64> = (0..200)
            .map(|_| {
                let s: Vec<f64> = (0..300).map(|_| StandardNormal.sample(&mut rng)).collect();
                h_score(&s, HScoreMethod::Asymptotic).unwrap()
            })
            .collect();
        hs.sort_by(f64::total_cmp);
        assert!(hs[100] < 0.2);
    }

    #[test]
    fn chi_square_pvalue() {
        assert!((chi_square_uniform_pvalue(&[10, 10, 10, 10]) - 1.0).abs() < 1e-12);
        // stat = 2 * (5^2/10) = 5 on 1 degree of freedom.
        let p = chi_square_uniform_pvalue(&[15, 5]);
        assert!((p - 0.025_347_318_677_468_2).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn mcc_swap_symmetry(tp in 0u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50) {
            let a = ConfusionCounts { tp, fp, tn, fn_ };
            let b = ConfusionCounts { tp: tn, fp: fn_, tn: tp, fn_: fp };
            prop_assert!((mcc(&a) - mcc(&b)).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&mcc(&a)));
        }

        #[test]
        fn fdr_monotone_in_alpha(q in proptest::collection::vec(0.0f64..=1.0, 1..40), a in 0.01f64..0.5, b in 0.01f64..0.5) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(fdr_cutoff(&q, hi) <= fdr_cutoff(&q, lo));
        }

        #[test]
        fn h_in_unit_interval(p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0) {
            let (h1, h2) = (h_from_pvalue(p1), h_from_pvalue(p2));
            prop_assert!((0.0..=1.0).contains(&h1));
            if p1 + 1e-9 < p2 { prop_assert!(h1 > h2); }
        }

        #[test]
        fn auc_in_unit_interval(pairs in proptest::collection::vec((0.0f64..1.0, any::<bool>()), 2..60)) {
            let (s, l): (Vec<f64>, Vec<bool>) = pairs.into_iter().unzip();
            if let Ok(r) = roc(&s, &l) {
                prop_assert!((0.0..=1.0).contains(&r.auc));
                prop_assert!((0.0..=1.0 + 1e-12).contains(&r.pauc));
                prop_assert!(r.points.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
            }
        }
    }
}
