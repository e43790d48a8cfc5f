use super::DiagnosticsError;

const SUSPICION_TOLERANCE: f64 = 1e-9;
const SUSPICION_MAGNITUDE: f64 = 1e6;

/// True when `r` sits on a multiple of 1/4: the signature of a difference
/// of two large numbers that were rounded to a coarse grid.
pub fn is_suspicious(r: f64) -> bool {
    if !r.is_finite() || r.abs() >= SUSPICION_MAGNITUDE {
        return false;
    }
    let q = 4.0 * r;
    (q - q.round()).abs() < SUSPICION_TOLERANCE
}

/// Fraction of log acceptance ratios that look quantized.
pub fn roundoff_suspicion(log_accept_ratios: &[f64]) -> Result<f64, DiagnosticsError> {
    if log_accept_ratios.is_empty() {
        return Err(DiagnosticsError::Empty);
    }
    let flagged = log_accept_ratios.iter().filter(|&&r| is_suspicious(r)).count();
    Ok(flagged as f64 / log_accept_ratios.len() as f64)
}

/// `n / sum(1 / p_i)`.
pub fn harmonic_mean_acceptance(accept_probs: &[f64]) -> Result<f64, DiagnosticsError> {
    if accept_probs.is_empty() {
        return Err(DiagnosticsError::Empty);
    }
    if let Some(&p) = accept_probs.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
        return Err(DiagnosticsError::InvalidProbability(p));
    }
    let inv: f64 = accept_probs.iter().map(|p| 1.0 / p).sum();
    Ok(accept_probs.len() as f64 / inv)
}

/// `min(1, exp(log_accept_ratio))`, floored so it can enter a harmonic mean.
pub fn accept_prob(log_accept_ratio: f64, floor: f64) -> f64 {
    if log_accept_ratio.is_nan() {
        return floor;
    }
    log_accept_ratio.min(0.0).exp().max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_multiples_flagged() {
        let f = roundoff_suspicion(&[-0.25, -0.3137861, 0.5, -1.0]).unwrap();
        assert_eq!(f, 0.75);
    }

    #[test]
    fn non_finite_and_huge_not_flagged() {
        for r in [f64::NEG_INFINITY, f64::NAN, 2e6, -1e6] {
            assert!(!is_suspicious(r), "{r}");
        }
        assert!(is_suspicious(0.0));
        assert!(is_suspicious(-999_999.75));
    }

    #[test]
    fn empty_inputs_rejected() {
        assert_eq!(roundoff_suspicion(&[]), Err(DiagnosticsError::Empty));
        assert_eq!(harmonic_mean_acceptance(&[]), Err(DiagnosticsError::Empty));
    }

    #[test]
    fn harmonic_examples() {
        assert_eq!(harmonic_mean_acceptance(&[0.5, 0.5]).unwrap(), 0.5);
        let h = harmonic_mean_acceptance(&[1.0, 0.5]).unwrap();
        assert!((h - 2.0 / 3.0).abs() <= f64::EPSILON * (2.0 / 3.0));
        let mut probs = vec![0.9; 63];
        probs.push(1e-6);
        assert!(harmonic_mean_acceptance(&probs).unwrap() < 6.4e-5);
    }

    #[test]
    fn harmonic_rejects_out_of_range() {
        assert!(harmonic_mean_acceptance(&[0.5, 0.0]).is_err());
        assert!(harmonic_mean_acceptance(&[1.5]).is_err());
        assert!(harmonic_mean_acceptance(&[f64::NAN]).is_err());
    }

    #[test]
    fn accept_prob_clamps() {
        assert_eq!(accept_prob(0.3, 1e-10), 1.0);
        assert_eq!(accept_prob(f64::NEG_INFINITY, 1e-10), 1e-10);
        assert_eq!(accept_prob(f64::NAN, 1e-10), 1e-10);
        assert!((accept_prob(-1.0, 1e-10) - (-1.0f64).exp()).abs() < 1e-16);
    }
}
