use super::MetricError;
use crate::label::TriageLabel;

/// Cohen's kappa over the four-class space. `Ok(None)` when chance agreement
/// is 1 (both raters constant and equal), where kappa is undefined.
pub fn cohens_kappa(a: &[TriageLabel], b: &[TriageLabel]) -> Result<Option<f64>, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(MetricError::Empty);
    }
    let n = a.len() as f64;
    let mut agree = 0usize;
    let mut marg_a = [0usize; 4];
    let mut marg_b = [0usize; 4];
    for (x, y) in a.iter().zip(b) {
        if x == y {
            agree += 1;
        }
        marg_a[x.index()] += 1;
        marg_b[y.index()] += 1;
    }
    let po = agree as f64 / n;
    let pe: f64 = (0..4).map(|k| (marg_a[k] as f64 / n) * (marg_b[k] as f64 / n)).sum();
    if (1.0 - pe).abs() < 1e-15 {
        return Ok(None);
    }
    Ok(Some((po - pe) / (1.0 - pe)))
}
