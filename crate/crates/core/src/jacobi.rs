//! Gauss–Jacobi quadrature rules on [-1, 1] for the weight
//! (1 − s)^a (1 + s)^b, a, b > −1.
//!
//! Nodes and weights come from the eigen-decomposition of the symmetric
//! tridiagonal Jacobi matrix of the monic recurrence (Golub–Welsch).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::special::beta;

/// Nodes and weights of an n-point Gauss–Jacobi rule.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiRule {
    pub n: usize,
    pub a_exp: f64,
    pub b_exp: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl JacobiRule {
    /// ∫_{-1}^{1} (1−s)^a (1+s)^b ds = 2^{a+b+1} B(a+1, b+1).
    pub fn weight_mass(a_exp: f64, b_exp: f64) -> f64 {
        (a_exp + b_exp + 1.0).exp2() * beta(a_exp + 1.0, b_exp + 1.0).expect("exponents > -1")
    }

    /// Σ w_i g(s_i).
    pub fn apply<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * g(s))
            .sum()
    }
}

/// Builds the n-point rule for weight (1−s)^a_exp (1+s)^b_exp.
pub fn jacobi_rule(n: usize, a_exp: f64, b_exp: f64) -> Result<JacobiRule> {
    if n == 0 {
        return Err(Error::Domain(
            "a quadrature rule needs at least one node".into(),
        ));
    }
    if !(a_exp > -1.0 && b_exp > -1.0) {
        return Err(Error::Domain(format!(
            "Jacobi exponents must exceed -1, got a = {a_exp}, b = {b_exp}"
        )));
    }
    let (a, b) = (a_exp, b_exp);
    let ab = a + b;

    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    diag[0] = (b - a) / (ab + 2.0);
    for k in 1..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        diag[k] = (b * b - a * a) / (s * (s + 2.0));
        let beta_k = if k == 1 {
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
        off[k - 1] = beta_k.sqrt();
    }

    let mut m = DMatrix::<f64>::from_diagonal(&DVector::from_vec(diag));
    for k in 0..n - 1 {
        m[(k, k + 1)] = off[k];
        m[(k + 1, k)] = off[k];
    }
    let eig = SymmetricEigen::new(m);

    let mass = JacobiRule::weight_mass(a, b);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mass * v * v)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));

    let (nodes, weights) = pairs.into_iter().unzip();
    Ok(JacobiRule {
        n,
        a_exp,
        b_exp,
        nodes,
        weights,
    })
}

type RuleKey = (usize, u64, u64);

/// Same as [`jacobi_rule`] but memoised; rules are immutable and shared.
pub fn cached_jacobi_rule(n: usize, a_exp: f64, b_exp: f64) -> Result<Arc<JacobiRule>> {
    static CACHE: OnceLock<Mutex<HashMap<RuleKey, Arc<JacobiRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (n, a_exp.to_bits(), b_exp.to_bits());
    if let Some(rule) = cache.lock().unwrap().get(&key) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(jacobi_rule(n, a_exp, b_exp)?);
    cache
        .lock()
        .unwrap()
        .entry(key)
        .or_insert_with(|| Arc::clone(&rule));
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Moments m_k = ∫ s^k (1−s)^a (1+s)^b ds from integration by parts:
    /// (k + a + b + 2) m_{k+1} = k m_{k−1} + (b − a) m_k.
    fn weighted_moments(count: usize, a: f64, b: f64) -> Vec<f64> {
        let mut m = vec![JacobiRule::weight_mass(a, b)];
        for k in 0..count.saturating_sub(1) {
            let prev = if k == 0 { 0.0 } else { m[k - 1] };
            let next = (k as f64 * prev + (b - a) * m[k]) / (k as f64 + a + b + 2.0);
            m.push(next);
        }
        m
    }

    #[test]
    fn single_node_legendre() {
        let rule = jacobi_rule(1, 0.0, 0.0).unwrap();
        assert_eq!(rule.nodes.len(), 1);
        assert!(rule.nodes[0].abs() < 1e-15);
        assert!((rule.weights[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn weight_sum_matches_beta_identity() {
        let rule = jacobi_rule(8, -0.5, 0.0).unwrap();
        let sum: f64 = rule.weights.iter().sum();
        assert!((sum - 2.0 * 2f64.sqrt()).abs() / sum < 1e-12, "{sum}");
    }

    #[test]
    fn chebyshev_mass() {
        let rule = jacobi_rule(16, -0.5, -0.5).unwrap();
        let sum: f64 = rule.weights.iter().sum();
        assert!((sum - PI).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(jacobi_rule(4, -1.0, 0.0).is_err());
        assert!(jacobi_rule(4, 0.0, -1.5).is_err());
        assert!(jacobi_rule(0, 0.0, 0.0).is_err());
    }

    #[test]
    fn exact_on_monomials() {
        for &(a, b) in &[
            (0.0, 0.0),
            (-0.5, 0.0),
            (0.0, -0.5),
            (-0.3, -0.7),
            (-0.7, 0.5),
            (1.5, 2.0),
        ] {
            for n in [1usize, 2, 5, 16, 64] {
                let rule = jacobi_rule(n, a, b).unwrap();
                let moments = weighted_moments(2 * n, a, b);
                for (k, &want) in moments.iter().enumerate() {
                    let got = rule.apply(|s| s.powi(k as i32));
                    // odd moments of symmetric weights vanish; scale by ∫|s|^k w
                    let scale = rule.apply(|s| s.abs().powi(k as i32));
                    assert!(
                        (got - want).abs() <= 1e-10 * want.abs().max(scale),
                        "n={n} a={a} b={b} k={k}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn nodes_sorted_and_interior() {
        let rule = jacobi_rule(128, -0.5, -0.25).unwrap();
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(rule.nodes.iter().all(|&x| x > -1.0 && x < 1.0));
        assert!(rule.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn cache_returns_shared_rule() {
        let r1 = cached_jacobi_rule(12, -0.25, 0.0).unwrap();
        let r2 = cached_jacobi_rule(12, -0.25, 0.0).unwrap();
        assert!(Arc::ptr_eq(&r1, &r2));
    }
}
