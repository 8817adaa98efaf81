//! Population- and individual-level graph summaries of posterior draws.
//!
//! Directed quantities are indexed `[j, k, ..]` meaning "coefficient of
//! response `k` in the regression of node `j`". Symmetrized tensors satisfy
//! `S[j, k] == S[k, j]` exactly.

use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::PosteriorDraws;
use crate::model::regressor_index;

/// Symmetrization rule for covariate coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaRule {
    /// Take the direction with the smaller PIP.
    Min,
    /// Take the direction with the larger PIP.
    Max,
}

/// Symmetrization rule for edge posterior probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeRule {
    Max,
    Min,
}

/// Selection threshold on a probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutoff {
    /// Select values strictly above the threshold.
    Above(f64),
    /// Select values at or above the threshold (FDR-derived cutoffs).
    AtLeast(f64),
}

impl Cutoff {
    pub fn selects(&self, prob: f64) -> bool {
        match *self {
            Cutoff::Above(c) => prob > c,
            Cutoff::AtLeast(c) => prob >= c,
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Cutoff::Above(c) | Cutoff::AtLeast(c) => c,
        }
    }
}

fn check_draws(draws: &[PosteriorDraws]) -> Result<(usize, usize, usize)> {
    let p = draws.len();
    if p < 2 {
        return Err(Error::Dimension("need draws for at least two nodes".into()));
    }
    let s = draws[0].len();
    let q = draws[0].q();
    for (j, d) in draws.iter().enumerate() {
        if d.node != j || d.rows() != p - 1 || d.q() != q || d.len() != s {
            return Err(Error::Dimension(format!("draw set of node {j} is inconsistent")));
        }
    }
    if s == 0 {
        return Err(Error::Dimension("no retained draws".into()));
    }
    Ok((p, q, s))
}

/// Directed posterior inclusion probabilities, `p x p x q`, as slab frequency.
pub fn pip_alpha(draws: &[PosteriorDraws]) -> Result<Array3<f64>> {
    let (p, q, s) = check_draws(draws)?;
    let mut out = Array3::zeros((p, p, q));
    for (j, d) in draws.iter().enumerate() {
        for k in (0..p).filter(|&k| k != j) {
            let r = regressor_index(j, k).expect("k != j");
            for h in 0..q {
                let count = (0..s).filter(|&i| d.slab[[i, r, h]]).count();
                out[[j, k, h]] = count as f64 / s as f64;
            }
        }
    }
    Ok(out)
}

/// Directed posterior means of the covariate coefficients, `p x p x q`.
pub fn alpha_hat(draws: &[PosteriorDraws]) -> Result<Array3<f64>> {
    let (p, q, s) = check_draws(draws)?;
    let mut out = Array3::zeros((p, p, q));
    for (j, d) in draws.iter().enumerate() {
        for k in (0..p).filter(|&k| k != j) {
            let r = regressor_index(j, k).expect("k != j");
            for h in 0..q {
                out[[j, k, h]] = (0..s).map(|i| d.alpha[[i, r, h]]).sum::<f64>() / s as f64;
            }
        }
    }
    Ok(out)
}

/// Symmetrized coefficients with the regression each entry was taken from.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricAlpha {
    pub alpha: Array3<f64>,
    pub pip: Array3<f64>,
    /// Node whose regression supplies entry `[j, k, h]`; either `j` or `k`.
    pub source: Array3<usize>,
}

/// Picks one direction per `(j, k, h)`. Ties go to the regression of the
/// smaller node index.
pub fn symmetrize_alpha(pip: &Array3<f64>, alpha_hat: &Array3<f64>, rule: AlphaRule) -> Result<SymmetricAlpha> {
    let (p, p2, q) = pip.dim();
    if p != p2 || alpha_hat.dim() != pip.dim() {
        return Err(Error::Dimension("PIP and coefficient tensors must be p x p x q".into()));
    }
    let mut alpha = Array3::zeros((p, p, q));
    let mut sym_pip = Array3::zeros((p, p, q));
    let mut source = Array3::zeros((p, p, q));
    for j in 0..p {
        source[[j, j, 0]] = j;
        for k in (j + 1)..p {
            for h in 0..q {
                let (fwd, bwd) = (pip[[j, k, h]], pip[[k, j, h]]);
                let take_j = match rule {
                    AlphaRule::Min => fwd <= bwd,
                    AlphaRule::Max => fwd >= bwd,
                };
                let (a, pp, src) = if take_j {
                    (alpha_hat[[j, k, h]], fwd, j)
                } else {
                    (alpha_hat[[k, j, h]], bwd, k)
                };
                for (x, y) in [(j, k), (k, j)] {
                    alpha[[x, y, h]] = a;
                    sym_pip[[x, y, h]] = pp;
                    source[[x, y, h]] = src;
                }
            }
        }
    }
    Ok(SymmetricAlpha { alpha, pip: sym_pip, source })
}

/// Directed edge probabilities at one covariate vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeProbs {
    /// `P(beta_jk(x) != 0)` in the regression of node `j`.
    pub epp: Array2<f64>,
    pub pos: Array2<f64>,
    pub neg: Array2<f64>,
}

/// Draw-wise symmetrized linear predictor `theta~_jk(x)` for `j < k`,
/// `pairs x draws`, in row-major pair order.
fn symmetric_theta(draws: &[PosteriorDraws], sym: &SymmetricAlpha, x: ArrayView1<'_, f64>) -> Result<Array2<f64>> {
    let (p, q, s) = check_draws(draws)?;
    if x.len() != q || sym.source.dim() != (p, p, q) {
        return Err(Error::Dimension("query vector or symmetrization does not match draws".into()));
    }
    let pairs = p * (p - 1) / 2;
    let mut out = Array2::zeros((pairs, s));
    let mut idx = 0;
    for j in 0..p {
        for k in (j + 1)..p {
            for h in 0..q {
                let src = sym.source[[j, k, h]];
                let other = if src == j { k } else { j };
                let r = regressor_index(src, other).expect("distinct nodes");
                let d = &draws[src];
                for i in 0..s {
                    out[[idx, i]] += d.alpha[[i, r, h]] * x[h];
                }
            }
            idx += 1;
        }
    }
    Ok(out)
}

/// Edge posterior probabilities at `x`: per draw the symmetrized
/// coefficients give `theta~(x)`, which is thresholded by that draw's
/// `t_j` of the regression in question.
pub fn epp_edge(draws: &[PosteriorDraws], sym: &SymmetricAlpha, x: ArrayView1<'_, f64>) -> Result<EdgeProbs> {
    let theta = symmetric_theta(draws, sym, x)?;
    let (p, _, s) = check_draws(draws)?;
    let mut epp = Array2::zeros((p, p));
    let mut pos = Array2::zeros((p, p));
    let mut neg = Array2::zeros((p, p));
    let mut idx = 0;
    for j in 0..p {
        for k in (j + 1)..p {
            for (a, b) in [(j, k), (k, j)] {
                let t = &draws[a].t;
                let (mut np, mut nn) = (0usize, 0usize);
                for i in 0..s {
                    let th = theta[[idx, i]];
                    if th.abs() > t[i] {
                        if th > 0.0 {
                            np += 1;
                        } else {
                            nn += 1;
                        }
                    }
                }
                pos[[a, b]] = np as f64 / s as f64;
                neg[[a, b]] = nn as f64 / s as f64;
                epp[[a, b]] = (np + nn) as f64 / s as f64;
            }
            idx += 1;
        }
    }
    Ok(EdgeProbs { epp, pos, neg })
}

/// Symmetrizes a directed ePP matrix. Returns the symmetric matrix and the
/// regression chosen for each pair (ties go to the smaller node index).
pub fn symmetrize_epp(epp: &Array2<f64>, rule: EdgeRule) -> Result<(Array2<f64>, Array2<usize>)> {
    let (p, p2) = epp.dim();
    if p != p2 {
        return Err(Error::Dimension("ePP matrix must be square".into()));
    }
    let mut out = Array2::zeros((p, p));
    let mut chosen = Array2::zeros((p, p));
    for j in 0..p {
        chosen[[j, j]] = j;
        for k in (j + 1)..p {
            let (a, b) = (epp[[j, k]], epp[[k, j]]);
            let take_j = match rule {
                EdgeRule::Max => a >= b,
                EdgeRule::Min => a <= b,
            };
            let (v, c) = if take_j { (a, j) } else { (b, k) };
            out[[j, k]] = v;
            out[[k, j]] = v;
            chosen[[j, k]] = c;
            chosen[[k, j]] = c;
        }
    }
    Ok((out, chosen))
}

/// `+1` when the positive mass strictly exceeds the negative mass, else `-1`.
pub fn edge_sign(pos: f64, neg: f64) -> i8 {
    if pos > neg {
        1
    } else {
        -1
    }
}

/// An undirected covariate-level edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationEdge {
    pub node_a: usize,
    pub node_b: usize,
    pub covariate: usize,
    pub alpha_hat: f64,
    pub pip: f64,
    pub sign: i8,
}

/// Thresholded network for one covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationNetwork {
    pub covariate: usize,
    pub edges: Vec<PopulationEdge>,
    pub degrees: Vec<usize>,
}

/// One network per covariate with the edges whose symmetrized PIP passes `cutoff`.
pub fn population_network(sym: &SymmetricAlpha, cutoff: Cutoff) -> Vec<PopulationNetwork> {
    let (p, _, q) = sym.pip.dim();
    (0..q)
        .map(|h| {
            let mut edges = Vec::new();
            let mut degrees = vec![0; p];
            for a in 0..p {
                for b in (a + 1)..p {
                    let pip = sym.pip[[a, b, h]];
                    if cutoff.selects(pip) {
                        let alpha = sym.alpha[[a, b, h]];
                        degrees[a] += 1;
                        degrees[b] += 1;
                        edges.push(PopulationEdge {
                            node_a: a,
                            node_b: b,
                            covariate: h,
                            alpha_hat: alpha,
                            pip,
                            sign: if alpha > 0.0 { 1 } else { -1 },
                        });
                    }
                }
            }
            PopulationNetwork { covariate: h, edges, degrees }
        })
        .collect()
}

/// An undirected individual-level edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualEdge {
    pub node_a: usize,
    pub node_b: usize,
    pub epp: f64,
    pub sign: i8,
}

/// Symmetrized ePP, signs and selected edges at one covariate vector.
#[derive(Debug, Clone, PartialEq)]
pub struct IndividualNetwork {
    pub epp: Array2<f64>,
    /// Sign of each pair from the chosen direction, regardless of selection.
    pub sign: Array2<i8>,
    pub edges: Vec<IndividualEdge>,
}

pub fn individual_network(probs: &EdgeProbs, rule: EdgeRule, cutoff: Cutoff) -> Result<IndividualNetwork> {
    let (epp, chosen) = symmetrize_epp(&probs.epp, rule)?;
    let p = epp.nrows();
    let mut sign = Array2::zeros((p, p));
    let mut edges = Vec::new();
    for a in 0..p {
        for b in (a + 1)..p {
            let c = chosen[[a, b]];
            let other = if c == a { b } else { a };
            let s = edge_sign(probs.pos[[c, other]], probs.neg[[c, other]]);
            sign[[a, b]] = s;
            sign[[b, a]] = s;
            if cutoff.selects(epp[[a, b]]) {
                edges.push(IndividualEdge { node_a: a, node_b: b, epp: epp[[a, b]], sign: s });
            }
        }
    }
    Ok(IndividualNetwork { epp, sign, edges })
}

/// Default percentiles of the varied covariate.
pub const DEFAULT_PERCENTILES: [f64; 5] = [5.0, 25.0, 50.0, 75.0, 95.0];

/// Linear-interpolation sample percentile (`0..=100`).
pub fn percentile(values: &[f64], pct: f64) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (pct / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Query vectors with component `h` at each percentile of column `h` and the
/// remaining components at their column means.
pub fn percentile_queries(x: ArrayView2<'_, f64>, h: usize, percentiles: &[f64]) -> Result<Vec<Array1<f64>>> {
    if h >= x.ncols() || x.nrows() == 0 {
        return Err(Error::Dimension(format!("covariate {h} out of range")));
    }
    let means: Array1<f64> = x.mean_axis(ndarray::Axis(0)).expect("non-empty");
    let col: Vec<f64> = x.column(h).to_vec();
    Ok(percentiles
        .iter()
        .map(|&pct| {
            let mut q = means.clone();
            q[h] = percentile(&col, pct);
            q
        })
        .collect())
}

/// Individual networks along the percentiles of covariate `h`.
pub fn percentile_networks(
    draws: &[PosteriorDraws],
    sym: &SymmetricAlpha,
    x: ArrayView2<'_, f64>,
    h: usize,
    percentiles: &[f64],
    rule: EdgeRule,
    cutoff: Cutoff,
) -> Result<Vec<(f64, IndividualNetwork)>> {
    percentile_queries(x, h, percentiles)?
        .into_iter()
        .zip(percentiles)
        .map(|(query, &pct)| {
            let probs = epp_edge(draws, sym, query.view())?;
            Ok((pct, individual_network(&probs, rule, cutoff)?))
        })
        .collect()
}
