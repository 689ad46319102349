use serde::{Deserialize, Serialize};

use crate::linalg::{add_outer, matvec};

/// Which terms the softmax denominator sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// Positive plus negatives (standard InfoNCE).
    #[default]
    Standard,
    /// Negatives only.
    NegativesOnly,
}

/// Loss and its derivatives w.r.t. each similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct SimGrad {
    pub loss: f64,
    pub d_pos: f64,
    pub d_negs: Vec<f64>,
}

/// InfoNCE on precomputed similarities, stabilised by a max-shift.
pub fn info_nce_from_sims(s_pos: f64, s_negs: &[f64], tau: f64, denom: Denominator) -> SimGrad {
    assert!(tau > 0.0, "temperature must be positive");
    assert!(!s_negs.is_empty(), "need at least one negative");
    let zp = s_pos / tau;
    let zn: Vec<f64> = s_negs.iter().map(|s| s / tau).collect();
    let include_pos = denom == Denominator::Standard;
    let m = zn
        .iter()
        .copied()
        .chain(include_pos.then_some(zp))
        .fold(f64::NEG_INFINITY, f64::max);
    let en: Vec<f64> = zn.iter().map(|z| (z - m).exp()).collect();
    let ep = if include_pos { (zp - m).exp() } else { 0.0 };
    let total = ep + en.iter().sum::<f64>();
    let lse = m + total.ln();
    let loss = lse - zp;
    let p_pos = ep / total;
    SimGrad {
        loss,
        d_pos: (p_pos - 1.0) / tau,
        d_negs: en.iter().map(|e| e / total / tau).collect(),
    }
}

/// `W x` normalised, plus the norm of `W x`.
pub(crate) fn project(w: &[f64], d: usize, x: &[f64]) -> (Vec<f64>, f64) {
    let mut y = matvec(w, d, d, x);
    let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        y.iter_mut().for_each(|v| *v /= n);
    }
    (y, n)
}

/// Adds to `grad` the contribution of `dL/du` for `u = Wx/|Wx|`.
fn backprop_normalized(grad: &mut [f64], d: usize, u: &[f64], norm: f64, g_u: &[f64], x: &[f64]) {
    if norm == 0.0 {
        return;
    }
    let dot: f64 = u.iter().zip(g_u).map(|(a, b)| a * b).sum();
    let g_x: Vec<f64> = g_u.iter().zip(u).map(|(g, ui)| (g - dot * ui) / norm).collect();
    add_outer(grad, d, 1.0, &g_x, x);
}

/// InfoNCE over projected, re-normalised vectors with gradient w.r.t. the
/// row-major `d × d` projection `w`.
pub fn info_nce_loss(
    w: &[f64],
    d: usize,
    problem: &[f64],
    positive: &[f64],
    negatives: &[&[f64]],
    tau: f64,
    denom: Denominator,
) -> (f64, Vec<f64>) {
    let (u, nu) = project(w, d, problem);
    let (vp, np) = project(w, d, positive);
    let vns: Vec<(Vec<f64>, f64)> = negatives.iter().map(|n| project(w, d, n)).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let s_pos = dot(&u, &vp);
    let s_negs: Vec<f64> = vns.iter().map(|(v, _)| dot(&u, v)).collect();
    let sg = info_nce_from_sims(s_pos, &s_negs, tau, denom);

    let mut grad = vec![0.0; d * d];
    let mut g_u: Vec<f64> = vp.iter().map(|v| sg.d_pos * v).collect();
    for ((v, _), dn) in vns.iter().zip(&sg.d_negs) {
        for (g, vi) in g_u.iter_mut().zip(v) {
            *g += dn * vi;
        }
    }
    backprop_normalized(&mut grad, d, &u, nu, &g_u, problem);
    let g_vp: Vec<f64> = u.iter().map(|x| sg.d_pos * x).collect();
    backprop_normalized(&mut grad, d, &vp, np, &g_vp, positive);
    for (((v, n), dn), x) in vns.iter().zip(&sg.d_negs).zip(negatives) {
        let g_v: Vec<f64> = u.iter().map(|ui| dn * ui).collect();
        backprop_normalized(&mut grad, d, v, *n, &g_v, x);
    }
    (sg.loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::normalize;
    use crate::util::rng;
    use rand::Rng;

    #[test]
    fn symmetric_case_is_ln2() {
        for tau in [0.05, 0.5, 1.0, 3.0] {
            for s in [-0.7, 0.0, 0.9] {
                let g = info_nce_from_sims(s, &[s], tau, Denominator::Standard);
                assert!((g.loss - std::f64::consts::LN_2).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn hand_evaluated_closed_form() {
        let g = info_nce_from_sims(1.0, &[-1.0], 1.0, Denominator::Standard);
        assert!((g.loss - (1.0 + (-2.0f64).exp()).ln()).abs() < 1e-12);
        assert!((g.loss - 0.12693).abs() < 1e-5);
        let g = info_nce_from_sims(1.0, &[-1.0], 1.0, Denominator::NegativesOnly);
        assert!((g.loss - (-2.0)).abs() < 1e-12);
    }

    #[test]
    fn monotone_in_similarities() {
        let base = info_nce_from_sims(0.2, &[0.1, -0.3], 0.1, Denominator::Standard).loss;
        assert!(info_nce_from_sims(0.3, &[0.1, -0.3], 0.1, Denominator::Standard).loss < base);
        assert!(info_nce_from_sims(0.2, &[0.2, -0.3], 0.1, Denominator::Standard).loss > base);
        assert!(info_nce_from_sims(0.2, &[0.1, -0.2], 0.1, Denominator::Standard).loss > base);
    }

    #[test]
    fn stable_for_small_tau() {
        let g = info_nce_from_sims(1.0, &[-1.0, 0.99], 1e-4, Denominator::Standard);
        assert!(g.loss.is_finite() && g.loss >= 0.0);
    }

    fn unit(r: &mut impl Rng, d: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
        normalize(&mut v);
        v
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut r = rng(42);
        let d = 5;
        for denom in [Denominator::Standard, Denominator::NegativesOnly] {
            let w: Vec<f64> = (0..d * d)
                .map(|i| if i % (d + 1) == 0 { 1.0 } else { 0.0 } + r.random_range(-0.3..0.3))
                .collect();
            let q = unit(&mut r, d);
            let p = unit(&mut r, d);
            let negs: Vec<Vec<f64>> = (0..3).map(|_| unit(&mut r, d)).collect();
            let nr: Vec<&[f64]> = negs.iter().map(|v| v.as_slice()).collect();
            let (_, g) = info_nce_loss(&w, d, &q, &p, &nr, 0.5, denom);
            let eps = 1e-5;
            for i in 0..d * d {
                let mut wp = w.clone();
                wp[i] += eps;
                let lp = info_nce_loss(&wp, d, &q, &p, &nr, 0.5, denom).0;
                wp[i] -= 2.0 * eps;
                let lm = info_nce_loss(&wp, d, &q, &p, &nr, 0.5, denom).0;
                let num = (lp - lm) / (2.0 * eps);
                let err = (num - g[i]).abs() / num.abs().max(g[i].abs()).max(1e-6);
                assert!(err < 1e-4, "w[{i}]: numeric {num} analytic {}", g[i]);
            }
        }
    }
}
