use std::cmp::Ordering;

use super::HarnessError;

/// 1-based ranks with ties given the mean of the ranks they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|a, b| xs[*a].partial_cmp(&xs[*b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64, HarnessError> {
    if a.len() != b.len() {
        return Err(HarnessError::Data(format!(
            "rankings have different lengths ({} and {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(HarnessError::Data("need at least two items to correlate".into()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(HarnessError::Data("rankings must be finite".into()));
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(HarnessError::Data("correlation is undefined for a constant ranking".into()));
    }
    Ok((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}
