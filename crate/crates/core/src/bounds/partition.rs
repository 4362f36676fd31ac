//! Splitting a violation budget σ across several exponential error terms.
//!
//! Minimizes `Σ_i a_i e^{-θ_i σ_i}` over `σ_i >= 0`, `Σ σ_i = σ`. The
//! objective is convex, so the KKT conditions characterize the optimum:
//! every term with a positive share has the same marginal
//! `a_i θ_i e^{-θ_i σ_i} = λ`, every term with a zero share has
//! `a_i θ_i <= λ`.

use crate::error::{require_positive, Error, Result};
use crate::traffic::ExpError;

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Optimal `Σ a_i e^{-θ_i σ_i}`, not capped at one.
    pub value: f64,
    /// σ share of each input term, in input order.
    pub shares: Vec<f64>,
    /// Probability contribution of each input term, in input order.
    pub probabilities: Vec<f64>,
}

impl Partition {
    /// The value as a probability.
    pub fn probability(&self) -> f64 {
        self.value.min(1.0)
    }
}

pub fn partition(terms: &[ExpError], sigma: f64) -> Result<Partition> {
    if terms.is_empty() {
        return Err(Error::Empty("error terms"));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param(
            "sigma",
            format!("must be finite and >= 0, got {sigma}"),
        ));
    }
    let mut shares = vec![0.0; terms.len()];

    // Terms ordered by their marginal at zero, k_i = ln(a_i θ_i), largest first.
    let mut order: Vec<(usize, f64)> = terms
        .iter()
        .enumerate()
        .filter(|(_, e)| !e.is_zero())
        .map(|(i, e)| (i, (e.amplitude() * e.decay()).ln()))
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    if !order.is_empty() && sigma > 0.0 {
        // With the top m terms active, Σ σ_i = σ is linear in ln λ:
        // ln λ = (Σ k_i / θ_i - σ) / Σ 1/θ_i.
        let mut num = 0.0;
        let mut den = 0.0;
        let mut log_lambda = f64::NAN;
        let mut active = 0;
        for (m, &(i, k)) in order.iter().enumerate() {
            let theta = terms[i].decay();
            num += k / theta;
            den += 1.0 / theta;
            log_lambda = (num - sigma) / den;
            active = m + 1;
            let next_k = order.get(m + 1).map_or(f64::NEG_INFINITY, |o| o.1);
            if log_lambda >= next_k {
                break;
            }
        }
        for &(i, k) in &order[..active] {
            shares[i] = ((k - log_lambda) / terms[i].decay()).max(0.0);
        }
        // Remove rounding drift so the shares sum to σ exactly.
        let total: f64 = shares.iter().sum();
        if total > 0.0 {
            let scale = sigma / total;
            shares.iter_mut().for_each(|s| *s *= scale);
        }
    }

    let probabilities: Vec<f64> = terms
        .iter()
        .zip(&shares)
        .map(|(e, &s)| e.uncapped(s))
        .collect();
    let value = probabilities.iter().sum();
    Ok(Partition {
        value,
        shares,
        probabilities,
    })
}

/// `min(1, inf_{Σσ_i = σ} Σ ε_i(σ_i))`.
pub fn partition_infimum(terms: &[ExpError], sigma: f64) -> Result<f64> {
    Ok(partition(terms, sigma)?.probability())
}

/// Smallest σ >= 0 with `partition(terms, σ).value <= epsilon`.
///
/// Terms that share one decay θ and all carry a positive share invert in
/// closed form, `σ = (n/θ) ln(n G / ε)` with `G` the geometric mean of the
/// amplitudes. Otherwise the monotone value is bisected.
pub fn partition_quantile(terms: &[ExpError], epsilon: f64) -> Result<f64> {
    require_positive("epsilon", epsilon)?;
    if terms.is_empty() {
        return Err(Error::Empty("error terms"));
    }
    let live: Vec<ExpError> = terms.iter().copied().filter(|e| !e.is_zero()).collect();
    if live.is_empty() || partition(&live, 0.0)?.value <= epsilon {
        return Ok(0.0);
    }
    let theta = live[0].decay();
    if live.iter().all(|e| e.decay() == theta) {
        let n = live.len() as f64;
        let log_g = live.iter().map(|e| e.amplitude().ln()).sum::<f64>() / n;
        let sigma = n / theta * ((n / epsilon).ln() + log_g);
        let min_log_a = live
            .iter()
            .map(|e| e.amplitude().ln())
            .fold(f64::INFINITY, f64::min);
        // every share σ/n + (ln a_i - ln G)/θ is non-negative
        if sigma >= 0.0 && theta * sigma / n >= log_g - min_log_a {
            return Ok(sigma);
        }
    }
    let total_amplitude: f64 = live.iter().map(ExpError::amplitude).sum();
    let min_decay = live
        .iter()
        .map(ExpError::decay)
        .fold(f64::INFINITY, f64::min);
    let n = live.len() as f64;
    // equal split gives value <= Σa e^{-θ_min σ/n}
    let mut hi = n / min_decay * (total_amplitude / epsilon).ln().max(0.0);
    let mut lo = 0.0;
    while partition(&live, hi)?.value > epsilon {
        hi *= 2.0;
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if partition(&live, mid)?.value > epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Collapses several error terms into one exponential bound valid for all
/// σ >= 0.
///
/// With a common decay θ and `n` non-zero terms the optimal split gives
/// `n G e^{-θσ/n}`. That expression is exact where every share is positive
/// and exceeds one elsewhere provided `n · min a_i >= 1`, so it is a valid
/// bound under that condition. Otherwise, and for mixed decays, the equal
/// split `(Σ a_i) e^{-θ_min σ/n}` is used.
pub fn combine(terms: &[ExpError]) -> ExpError {
    let live: Vec<&ExpError> = terms.iter().filter(|e| !e.is_zero()).collect();
    match live.as_slice() {
        [] => ExpError::zero(),
        [one] => **one,
        _ => {
            let n = live.len() as f64;
            let theta = live[0].decay();
            let min_a = live
                .iter()
                .map(|e| e.amplitude())
                .fold(f64::INFINITY, f64::min);
            if live.iter().all(|e| e.decay() == theta) && n * min_a >= 1.0 {
                let log_g = live.iter().map(|e| e.amplitude().ln()).sum::<f64>() / n;
                ExpError::new(n * log_g.exp(), theta / n).expect("positive amplitude and decay")
            } else {
                let sum_a: f64 = live.iter().map(|e| e.amplitude()).sum();
                let min_decay = live.iter().map(|e| e.decay()).fold(f64::INFINITY, f64::min);
                ExpError::new(sum_a, min_decay / n).expect("positive amplitude and decay")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(a: f64, theta: f64) -> ExpError {
        ExpError::new(a, theta).unwrap()
    }

    fn grid_min(terms: &[ExpError], sigma: f64, steps: usize) -> f64 {
        assert_eq!(terms.len(), 2);
        (0..=steps)
            .map(|k| {
                let s1 = sigma * k as f64 / steps as f64;
                terms[0].uncapped(s1) + terms[1].uncapped(sigma - s1)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn identical_terms_split_equally() {
        let h = 4;
        let a = 1.0 / (1.0 - (-0.3f64).exp());
        let terms = vec![e(a, 2.0); h + 1];
        let sigma = 7.5;
        let p = partition(&terms, sigma).unwrap();
        let n = (h + 1) as f64;
        let expected = n * a * (-2.0 * sigma / n).exp();
        assert!((p.value - expected).abs() <= 1e-14 * expected);
        for s in &p.shares {
            assert!((s - sigma / n).abs() < 1e-12);
        }
    }

    #[test]
    fn single_term_takes_everything() {
        let t = e(3.0, 0.5);
        let p = partition(&[t], 4.0).unwrap();
        assert_eq!(p.shares, vec![4.0]);
        assert_eq!(p.value, t.uncapped(4.0));
    }

    #[test]
    fn unequal_amplitudes_match_kkt_and_grid() {
        let theta = 1.5;
        let terms = [e(1.0, theta), e(2f64.exp(), theta)];
        for &sigma in &[0.5, 1.0, 2.0, 5.0, 12.0] {
            let p = partition(&terms, sigma).unwrap();
            let s1 = (sigma / 2.0 - 1.0 / theta).max(0.0);
            let s2 = sigma - s1;
            assert!(
                (p.shares[0] - s1).abs() < 1e-12,
                "σ={sigma}: {:?}",
                p.shares
            );
            assert!((p.shares[1] - s2).abs() < 1e-12);
            let brute = grid_min(&terms, sigma, 200_000);
            assert!(p.value <= brute + 1e-12);
            assert!(p.value >= brute - 1e-6 * brute);
        }
    }

    #[test]
    fn mixed_decays_match_grid() {
        let terms = [e(4.0, 0.3), e(1.5, 2.0)];
        for &sigma in &[0.1, 1.0, 3.0, 10.0, 40.0] {
            let p = partition(&terms, sigma).unwrap();
            let brute = grid_min(&terms, sigma, 400_000);
            assert!(p.value <= brute * (1.0 + 1e-12));
            assert!(p.value >= brute * (1.0 - 1e-6));
        }
    }

    #[test]
    fn zero_terms_contribute_nothing() {
        let p = partition(&[ExpError::zero(), ExpError::zero()], 3.0).unwrap();
        assert_eq!(p.value, 0.0);
        let p = partition(&[ExpError::zero(), e(1.0, 1.0)], 3.0).unwrap();
        assert_eq!(p.shares, vec![0.0, 3.0]);
        assert!(partition(&[], 1.0).is_err());
        assert_eq!(partition_quantile(&[ExpError::zero()], 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn quantile_inverts_value() {
        let cases: Vec<Vec<ExpError>> = vec![
            vec![e(50.0, 1e-3); 6],
            vec![e(1.0, 1.0), e(2f64.exp(), 1.0)],
            vec![e(3.0, 0.2), e(1.2, 5.0), e(10.0, 1.0)],
            vec![e(1e-3, 1.0), e(1.0, 1.0)],
        ];
        for terms in cases {
            for &eps in &[0.5, 1e-3, 1e-9] {
                let s = partition_quantile(&terms, eps).unwrap();
                let v = partition(&terms, s).unwrap().value;
                assert!((v - eps).abs() <= 1e-9 * eps, "{terms:?} ε={eps}: {v}");
            }
        }
    }

    #[test]
    fn combine_is_an_upper_bound() {
        let sets = [
            vec![e(1.0, 1.0), e(1.0, 1.0)],
            vec![e(1.0, 1.0), e(20.0, 1.0)],
            vec![e(0.1, 1.0), e(0.2, 1.0)],
            vec![e(1.0, 1.0), e(1.0, 3.0)],
        ];
        for terms in &sets {
            let c = combine(terms);
            for k in 0..200 {
                let sigma = k as f64 * 0.1;
                let exact = partition_infimum(terms, sigma).unwrap();
                assert!(
                    c.eval(sigma) >= exact * (1.0 - 1e-12),
                    "{terms:?} at {sigma}"
                );
            }
        }
        assert_eq!(combine(&[ExpError::zero(), e(2.0, 1.0)]), e(2.0, 1.0));
    }
}
