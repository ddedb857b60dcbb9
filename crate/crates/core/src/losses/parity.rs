//! Absolute Pearson correlation and the statistical-parity loss built on it.

use crate::error::{Error, Result};
use crate::losses::{TermValue, EPS};

/// `|cov(u, v)| / (std(u)·std(v) + ε)`, clipped to `[0, 1]`.
pub fn pearson_abs_corr(u: &[f64], v: &[f64]) -> Result<f64> {
    Ok(pearson_abs_corr_grad(u, v)?.value)
}

/// Absolute correlation and its gradient with respect to `u`.
///
/// A constant `u` or `v` is degenerate: value 0, zero gradient.
pub fn pearson_abs_corr_grad(u: &[f64], v: &[f64]) -> Result<TermValue> {
    if u.len() != v.len() {
        return Err(Error::dim(format!(
            "correlation of lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let n = u.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "correlation needs at least 2 samples".into(),
        ));
    }
    let nf = n as f64;
    let mu = u.iter().sum::<f64>() / nf;
    let mv = v.iter().sum::<f64>() / nf;
    let mut cov = 0.0;
    let mut var_u = 0.0;
    let mut var_v = 0.0;
    for (&a, &b) in u.iter().zip(v) {
        cov += (a - mu) * (b - mv);
        var_u += (a - mu) * (a - mu);
        var_v += (b - mv) * (b - mv);
    }
    cov /= nf;
    var_u /= nf;
    var_v /= nf;
    if var_u <= 0.0 || var_v <= 0.0 {
        return Ok(TermValue::degenerate(n));
    }
    let (su, sv) = (var_u.sqrt(), var_v.sqrt());
    let denom = su * sv + EPS;
    let r = cov / denom;
    if !r.is_finite() {
        return Err(Error::overflow("correlation"));
    }
    let value = r.abs().min(1.0);
    // d|r|/du_j = sign(r)·[ (v_j − μv)/(N·denom) − cov·sv·(u_j − μu)/(N·su·denom²) ]
    let sign = r.signum();
    let grad = if r.abs() >= 1.0 {
        vec![0.0; n]
    } else {
        u.iter()
            .zip(v)
            .map(|(&a, &b)| {
                sign * ((b - mv) / (nf * denom) - cov * sv * (a - mu) / (nf * su * denom * denom))
            })
            .collect()
    };
    Ok(TermValue {
        value,
        grad,
        degenerate: false,
    })
}

/// Statistical-parity loss: absolute correlation between scores and group
/// membership. Two groups use a single 0/1 indicator; more groups sum the
/// correlation against each one-hot column.
pub fn loss_sp(scores: &[f64], pv: &[u32]) -> Result<TermValue> {
    if scores.len() != pv.len() {
        return Err(Error::dim(format!(
            "{} scores for {} group ids",
            scores.len(),
            pv.len()
        )));
    }
    let mut ids: Vec<u32> = pv.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        return Ok(TermValue::degenerate(scores.len()));
    }
    let columns: &[u32] = if ids.len() == 2 { &ids[1..] } else { &ids };
    let mut total = TermValue::zero(scores.len());
    for &g in columns {
        let indicator: Vec<f64> = pv.iter().map(|&p| (p == g) as u8 as f64).collect();
        total.accumulate(&pearson_abs_corr_grad(scores, &indicator)?, 1.0);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let u = [1.0, 2.5, -3.0, 4.0];
        assert!((pearson_abs_corr(&u, &u).unwrap() - 1.0).abs() < 1e-8);
        let a = [1.0, -1.0, 1.0, -1.0];
        let b = [1.0, 1.0, -1.0, -1.0];
        assert_eq!(pearson_abs_corr(&a, &b).unwrap(), 0.0);
        let r = pearson_abs_corr(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-7);
        assert!(pearson_abs_corr(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn constant_input_is_degenerate() {
        let t = loss_sp(&[2.0, 2.0, 2.0, 2.0], &[0, 0, 1, 1]).unwrap();
        assert_eq!(t.value, 0.0);
        assert!(t.degenerate);
        let single = loss_sp(&[1.0, 2.0], &[0, 0]).unwrap();
        assert!(single.degenerate);
    }

    #[test]
    fn indicator_scores_give_one() {
        let pv = [0, 1, 0, 0, 1, 0];
        let s: Vec<f64> = pv.iter().map(|&p| p as f64).collect();
        assert!((loss_sp(&s, &pv).unwrap().value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn paired_independent_scores_give_near_zero() {
        // each group receives the same multiset of scores
        let base = [0.3, 1.7, 2.2, 0.9, 5.1, 0.4, 3.3, 2.8];
        let mut s = Vec::new();
        let mut pv = Vec::new();
        for &x in &base {
            s.extend([x, x, x, x, x]);
            pv.extend([0, 0, 0, 0, 1]);
        }
        assert!(loss_sp(&s, &pv).unwrap().value < 0.05);
    }

    #[test]
    fn three_groups_sum_three_terms() {
        let pv = [0, 1, 2, 0, 1, 2, 0, 0, 1];
        let s = [0.1, 0.5, 0.9, 0.2, 0.4, 1.3, 0.05, 0.3, 0.7];
        let total = loss_sp(&s, &pv).unwrap().value;
        let by_hand: f64 = (0..3)
            .map(|g| {
                let ind: Vec<f64> = pv.iter().map(|&p| (p == g) as u8 as f64).collect();
                pearson_abs_corr(&s, &ind).unwrap()
            })
            .sum();
        assert!((total - by_hand).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let u = vec![0.3, -1.2, 2.0, 0.7, 1.1];
        let v = vec![1.0, 0.0, 1.0, 0.0, 0.0];
        let g = pearson_abs_corr_grad(&u, &v).unwrap().grad;
        let h = 1e-6;
        for j in 0..u.len() {
            let mut up = u.clone();
            up[j] += h;
            let mut dn = u.clone();
            dn[j] -= h;
            let fd = (pearson_abs_corr(&up, &v).unwrap() - pearson_abs_corr(&dn, &v).unwrap()) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-7, "{j}: {fd} vs {}", g[j]);
        }
    }
}
