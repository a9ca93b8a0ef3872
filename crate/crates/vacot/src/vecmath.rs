//! Small dense-vector helpers shared by the simulated backend, the mock
//! scorers, and the training core.

/// Dot product. Panics in debug builds on length mismatch.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity, defined as 0 when either vector has zero norm.
pub(crate) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}

/// Normalizes to unit L2 norm; zero vectors map to the uniform unit vector so
/// callers always receive a valid embedding.
pub(crate) fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    if n == 0.0 {
        let u = 1.0 / (a.len().max(1) as f64).sqrt();
        return vec![u; a.len().max(1)];
    }
    a.iter().map(|x| x / n).collect()
}

/// Component-wise mean of equally sized vectors; `None` for an empty slice.
pub(crate) fn mean(vectors: &[&[f64]]) -> Option<Vec<f64>> {
    let first = vectors.first()?;
    let mut out = vec![0.0; first.len()];
    for v in vectors {
        debug_assert_eq!(v.len(), out.len());
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += x;
        }
    }
    let n = vectors.len() as f64;
    for o in &mut out {
        *o /= n;
    }
    Some(out)
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
