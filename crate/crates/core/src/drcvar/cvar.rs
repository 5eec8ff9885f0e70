use crate::distributions::MASS_TOL;
use crate::error::{check_dim, Error, Result};

/// Checks `gamma` lies strictly inside `(0, 1)`.
pub fn check_level(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidLevel(gamma))
    }
}

/// `CVaR_{1-gamma}` of a discrete loss: `inf_tau tau + E[(f - tau)+] / gamma`.
pub fn cvar(values: &[f64], weights: &[f64], gamma: f64) -> Result<f64> {
    Ok(cvar_with_threshold(values, weights, gamma)?.0)
}

/// Uniform weights.
pub fn empirical_cvar(values: &[f64], gamma: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let w = vec![1.0 / values.len() as f64; values.len()];
    cvar(values, &w, gamma)
}

/// Returns `(cvar, tau*)` with `tau*` the smallest minimizer, i.e. the
/// smallest atom `v` with `P(f > v) <= gamma`.
pub fn cvar_with_threshold(values: &[f64], weights: &[f64], gamma: f64) -> Result<(f64, f64)> {
    check_level(gamma)?;
    check_dim(values.len(), weights.len())?;
    if values.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("loss values"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidWeights(
            "weights must be finite and non-negative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut below = 0.0;
    let mut tau = values[order[order.len() - 1]];
    let mut k = 0;
    while k < order.len() {
        let v = values[order[k]];
        while k < order.len() && values[order[k]] == v {
            below += weights[order[k]];
            k += 1;
        }
        if 1.0 - below <= gamma + MASS_TOL {
            tau = v;
            break;
        }
    }
    // tail sum from the largest value down
    let tail: f64 = order
        .iter()
        .rev()
        .map(|&i| weights[i] * (values[i] - tau).max(0.0))
        .sum();
    Ok((tau + tail / gamma, tau))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_loss() {
        for g in [0.01, 0.5, 0.99] {
            assert_eq!(empirical_cvar(&[3.5; 7], g).unwrap(), 3.5);
        }
    }

    #[test]
    fn one_to_ten_at_twenty_percent() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        let (c, tau) = cvar_with_threshold(&v, &[0.1; 10], 0.2).unwrap();
        assert!((c - 9.5).abs() < 1e-12);
        assert_eq!(tau, 8.0);
    }

    #[test]
    fn near_one_level_is_the_mean() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert!((empirical_cvar(&v, 0.999).unwrap() - 5.5).abs() < 1e-2);
    }

    #[test]
    fn small_level_is_the_max() {
        assert_eq!(
            empirical_cvar(&[1.0, -4.0, 2.5, 0.0, 2.0], 0.05).unwrap(),
            2.5
        );
    }

    #[test]
    fn rejects_bad_level_and_weights() {
        assert!(matches!(
            empirical_cvar(&[1.0], 0.0),
            Err(Error::InvalidLevel(_))
        ));
        assert!(matches!(
            empirical_cvar(&[1.0], 1.0),
            Err(Error::InvalidLevel(_))
        ));
        assert!(cvar(&[1.0, 2.0], &[0.3, 0.3], 0.5).is_err());
    }
}
