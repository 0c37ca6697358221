//! Least-squares slope fit and the TITO symbol-count rule.

use super::tracking::DelayTrack;
use crate::analysis::pilot_regressor;
use crate::error::{Error, Result};
use crate::ofdm::OfdmConfig;

/// LS slope of `y` against `x`, in the centred form of the normal
/// equations.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: format!("{} points", x.len()), got: format!("{} points", y.len()) });
    }
    if x.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (sxy, sxx) = x.iter().zip(y).fold((0.0, 0.0), |(a, b), (&xi, &yi)| {
        let dx = xi - mx;
        (a + dx * (yi - my), b + dx * dx)
    });
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("regressor has zero spread".into()));
    }
    Ok(sxy / sxx)
}

/// δ̂ from the first `m_used` migrations against
/// `x_k = k·ΔM_pil(N+N_CP)T_s`.
pub fn ls_sfo(track: &DelayTrack, m_used: usize, cfg: &OfdmConfig) -> Result<f64> {
    if m_used < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: m_used });
    }
    if m_used > track.len() {
        return Err(Error::TooFewPoints { needed: m_used, got: track.len() });
    }
    let x: Vec<f64> = (0..m_used).map(|k| pilot_regressor(k, cfg)).collect();
    ls_slope(&x, &track.migrations[..m_used])
}

/// Number of leading pilot symbols whose consecutive migration steps all
/// stay within `(1+ε)·|δ_max|`; at least 2.
pub fn tito_select(track: &DelayTrack, delta_max: f64, epsilon: f64, cfg: &OfdmConfig) -> Result<usize> {
    if track.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: track.len() });
    }
    if !(delta_max.abs() > 0.0) || !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need delta_max > 0 and epsilon >= 0, got {delta_max} and {epsilon}"
        )));
    }
    let limit = (1.0 + epsilon) * delta_max.abs();
    let period = cfg.pilot_symbol_period();
    for m in 1..track.len() {
        let slope = (track.migrations[m] - track.migrations[m - 1]) / period;
        if slope.abs() > limit {
            return Ok(m.max(2));
        }
    }
    Ok(track.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let cfg = OfdmConfig::table1();
        let delta = 123.456e-6;
        let t = DelayTrack::from_migrations((0..1024).map(|k| delta * pilot_regressor(k, &cfg)).collect());
        let est = ls_sfo(&t, 1024, &cfg).unwrap();
        assert!((est / delta - 1.0).abs() < 1e-12);
        let est = ls_sfo(&t, 2, &cfg).unwrap();
        assert!((est / delta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_track_gives_zero() {
        let cfg = OfdmConfig::desk();
        let t = DelayTrack::from_migrations(vec![0.0; 50]);
        assert_eq!(ls_sfo(&t, 50, &cfg).unwrap(), 0.0);
        assert!(ls_sfo(&t, 1, &cfg).is_err());
        assert!(ls_sfo(&t, 51, &cfg).is_err());
    }

    #[test]
    fn tito_examples() {
        let cfg = OfdmConfig::table1();
        let dmax = 1e-3;
        let p = cfg.pilot_symbol_period();
        let clean = DelayTrack::from_migrations((0..300).map(|k| 0.5 * dmax * k as f64 * p).collect());
        assert_eq!(tito_select(&clean, dmax, 0.1, &cfg).unwrap(), 300);
        let mut mig = Vec::new();
        let mut acc = 0.0;
        for k in 0..300 {
            if k > 0 {
                acc += if k >= 100 { 3.0 * dmax * p } else { 0.5 * dmax * p };
            }
            mig.push(acc);
        }
        let jump = DelayTrack::from_migrations(mig);
        assert_eq!(tito_select(&jump, dmax, 0.1, &cfg).unwrap(), 100);
        let early = DelayTrack::from_migrations(vec![0.0, 1.0, 2.0]);
        assert_eq!(tito_select(&early, dmax, 0.1, &cfg).unwrap(), 2);
        assert!(tito_select(&DelayTrack::from_migrations(vec![0.0]), dmax, 0.1, &cfg).is_err());
    }
}
