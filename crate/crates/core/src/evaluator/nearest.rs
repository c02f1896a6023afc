use super::EvalError;
use crate::trainer::EmbeddingTable;

/// Cosine of the angle between `a` and `b`; 0 when either is the zero vector.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// The `n` entities most cosine-similar to `entity`, excluding itself.
/// Equal similarities are ordered by identifier. Asking for more neighbours
/// than exist returns all of them.
pub fn cosine_nearest(entity: &str, n: usize, table: &EmbeddingTable) -> Result<Vec<(String, f64)>, EvalError> {
    let q = table
        .index_of(entity)
        .ok_or_else(|| EvalError::UnknownEntity(entity.to_string()))?;
    let query = table.row(q);
    let mut scored: Vec<(&str, f64)> = (0..table.len())
        .filter(|&i| i != q)
        .map(|i| (table.name(i), cosine_similarity(query, table.row(i))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    scored.truncate(n);
    Ok(scored.into_iter().map(|(e, s)| (e.to_string(), s)).collect())
}
