use crate::error::{Error, Result};

const MASS_TOL: f64 = 1e-9;

/// Earth mover's distance between two equal-mass vectors with unit ground
/// distance between adjacent bins.
///
/// In one dimension optimal transport has the closed form
/// `sum_j |cumsum(p1 - p2)_j|`.
pub fn emd_1d(p1: &[f64], p2: &[f64]) -> Result<f64> {
    if p1.len() != p2.len() {
        return Err(Error::InvalidArgument(format!("length mismatch: {} vs {}", p1.len(), p2.len())));
    }
    let (t1, t2): (f64, f64) = (p1.iter().sum(), p2.iter().sum());
    if (t1 - t2).abs() > MASS_TOL * t1.abs().max(t2.abs()).max(1.0) {
        return Err(Error::InvalidArgument(format!("unequal total mass: {t1} vs {t2}")));
    }
    let mut carry = 0.0;
    let mut total = 0.0;
    for (a, b) in p1.iter().zip(p2) {
        carry += a - b;
        total += carry.abs();
    }
    Ok(total)
}

/// Distance between `masses` and the uniform vector of the same total mass
/// over the same bins. Zero for fewer than two bins.
pub fn skew_of(masses: &[f64]) -> f64 {
    if masses.len() < 2 {
        return 0.0;
    }
    let avg = masses.iter().sum::<f64>() / masses.len() as f64;
    let mut carry = 0.0;
    let mut total = 0.0;
    for &m in masses {
        carry += m - avg;
        total += carry.abs();
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors_have_zero_distance() {
        assert_eq!(emd_1d(&[0.3, 0.7, 1.0], &[0.3, 0.7, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn moving_unit_mass_one_bin() {
        assert_eq!(emd_1d(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn half_masses_two_bins_apart() {
        assert_eq!(emd_1d(&[0.5, 0.5, 0.0, 0.0], &[0.0, 0.0, 0.5, 0.5]).unwrap(), 2.0);
    }

    #[test]
    fn unequal_mass_is_an_error() {
        assert!(emd_1d(&[1.0, 0.0], &[0.0, 2.0]).is_err());
        assert!(emd_1d(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn skew_of_point_mass_in_first_of_four_bins() {
        assert!((skew_of(&[1.0, 0.0, 0.0, 0.0]) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn skew_of_uniform_and_single_bin_is_zero() {
        assert_eq!(skew_of(&[2.0, 2.0, 2.0]), 0.0);
        assert_eq!(skew_of(&[5.0]), 0.0);
        assert_eq!(skew_of(&[]), 0.0);
    }
}
