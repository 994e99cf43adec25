use crate::error::{Error, Result};

/// Tertile boundaries of `ratings` as order statistics.
///
/// The boundary for fraction `q` is the element at 1-based rank
/// `floor(q * n) + 1` of the sorted list (clamped to `n`), so a 3-element
/// list yields its second and third elements and a 6-element list splits
/// into three bins of two.
pub fn tertile_thresholds(ratings: &[f64]) -> Result<(f64, f64)> {
    if ratings.is_empty() {
        return Err(Error::Argument("cannot discretize an empty rating list".into()));
    }
    if let Some(r) = ratings.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::Range(format!("rating {r} is outside [0, 1]")));
    }
    let mut sorted = ratings.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let at = |num: usize| {
        let rank = (num * n / 3 + 1).min(n);
        sorted[rank - 1]
    };
    Ok((at(1), at(2)))
}

/// Maps real ratings in `[0, 1]` onto `{-1, 0, +1}` by empirical tertiles.
///
/// `r < t1` gives -1, `t1 <= r < t2` gives 0 and `r >= t2` gives +1. When
/// both boundaries coincide every rating maps to 0.
pub fn discretize_ratings(ratings: &[f64]) -> Result<Vec<i8>> {
    let (t1, t2) = tertile_thresholds(ratings)?;
    if t1 == t2 {
        return Ok(vec![0; ratings.len()]);
    }
    Ok(ratings
        .iter()
        .map(|&r| {
            if r < t1 {
                -1
            } else if r < t2 {
                0
            } else {
                1
            }
        })
        .collect())
}
