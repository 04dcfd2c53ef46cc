//! Small dense-vector helpers shared by every solver.
//!
//! The positive part enters both the feasibility measure (the plus-norm
//! `‖v‖₊ = sqrt(Σ max(v_j,0)²)`) and the multiplier projection onto the
//! nonnegative orthant, so they live here rather than in any one algorithm.

/// Euclidean norm of the component-wise positive part.
///
/// Returns 0 for the empty vector.
pub fn plus_norm(v: &[f64]) -> f64 {
    v.iter()
        .map(|&x| {
            let p = x.max(0.0);
            p * p
        })
        .sum::<f64>()
        .sqrt()
}

/// Component-wise projection onto the nonnegative orthant.
///
/// Idempotent; signed zeros are normalized to +0.
pub fn project_nonneg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect()
}

/// In-place variant of [`project_nonneg`] for hot loops.
pub fn project_nonneg_inplace(v: &mut [f64]) {
    for x in v.iter_mut() {
        if !(*x > 0.0) {
            *x = 0.0;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// `a += s * b`
pub fn axpy(a: &mut [f64], s: f64, b: &[f64]) {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter_mut().zip(b) {
        *x += s * y;
    }
}

/// Euclidean distance between two vectors.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Bitwise equality of two f64 slices (the atom-merging criterion).
pub fn bits_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plus_norm_clips_negatives() {
        assert_eq!(plus_norm(&[-1.0, 2.0]), 2.0);
        assert_eq!(plus_norm(&[0.0, 0.0]), 0.0);
        assert_eq!(plus_norm(&[3.0, 4.0]), 5.0);
        assert_eq!(plus_norm(&[]), 0.0);
    }

    #[test]
    fn plus_norm_zero_iff_nonpositive() {
        assert_eq!(plus_norm(&[-3.0, 0.0, -0.5]), 0.0);
        assert!(plus_norm(&[-3.0, 1e-100]) > 0.0);
    }

    #[test]
    fn project_examples() {
        assert_eq!(project_nonneg(&[-1.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(project_nonneg(&[0.0, 0.0]), vec![0.0, 0.0]);
        // signed zero normalized to +0
        let p = project_nonneg(&[5.0, -0.0]);
        assert_eq!(p, vec![5.0, 0.0]);
        assert_eq!(p[1].to_bits(), 0u64);
    }

    #[test]
    fn project_idempotent() {
        let v = vec![-2.0, 0.0, 3.5, -0.0];
        let once = project_nonneg(&v);
        let twice = project_nonneg(&once);
        assert!(bits_equal(&once, &twice));
    }
}
