//! Plaintext reference similarities, written for obviousness rather than
//! speed. Used as ground truth for the encrypted pipeline.

use crate::encvec::{PlainVector, WeightMatrix};
use crate::error::{Error, Result};
use crate::simeval::{SimilarityKind, SimilarityResult};

fn check_dims(a: &PlainVector, b: &PlainVector) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

fn dot(a: &[i64], b: &[i64]) -> i128 {
    a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum()
}

fn result(kind: SimilarityKind, similarity: f64) -> SimilarityResult {
    SimilarityResult {
        kind,
        similarity,
        distance: 1.0 - similarity,
    }
}

fn cosine(a: &PlainVector, b: &PlainVector) -> Result<f64> {
    check_dims(a, b)?;
    let (a, b) = (a.elements(), b.elements());
    let (na, nb) = (dot(a, a), dot(b, b));
    if na == 0 || nb == 0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot(a, b) as f64 / ((na as f64).sqrt() * (nb as f64).sqrt()))
}

pub fn plain_cosine(a: &PlainVector, b: &PlainVector) -> Result<SimilarityResult> {
    Ok(result(SimilarityKind::Cosine, cosine(a, b)?))
}

pub fn plain_angular(a: &PlainVector, b: &PlainVector) -> Result<SimilarityResult> {
    let theta = cosine(a, b)?.clamp(-1.0, 1.0).acos();
    let distance = 2.0 * theta / std::f64::consts::PI;
    Ok(SimilarityResult {
        kind: SimilarityKind::Angular,
        similarity: 1.0 - distance,
        distance,
    })
}

pub fn plain_tanimoto(a: &PlainVector, b: &PlainVector) -> Result<SimilarityResult> {
    check_dims(a, b)?;
    let (a, b) = (a.elements(), b.elements());
    let ab = dot(a, b);
    let den = dot(a, a) + dot(b, b) - ab;
    if den == 0 {
        return Err(Error::DegenerateTanimoto);
    }
    Ok(result(SimilarityKind::Tanimoto, ab as f64 / den as f64))
}

/// Soft cosine with real-valued weights.
pub fn plain_soft_cosine(
    a: &PlainVector,
    b: &PlainVector,
    w: &WeightMatrix,
) -> Result<SimilarityResult> {
    check_dims(a, b)?;
    if w.dim() != a.len() {
        return Err(Error::DimensionMismatch {
            left: w.dim(),
            right: a.len(),
        });
    }
    let form = |x: &[i64], y: &[i64]| -> f64 {
        let mut total = 0.0;
        for (k, &xk) in x.iter().enumerate() {
            for (l, &yl) in y.iter().enumerate() {
                total += w.get(k, l) * xk as f64 * yl as f64;
            }
        }
        total
    };
    let (a, b) = (a.elements(), b.elements());
    let (da, db) = (form(a, a), form(b, b));
    if da <= 0.0 || db <= 0.0 {
        return Err(Error::InvalidWeightMatrix);
    }
    Ok(result(
        SimilarityKind::SoftCosine,
        form(a, b) / (da.sqrt() * db.sqrt()),
    ))
}

/// `|actual - expected| <= tol * max(|actual|, |expected|)`, with exact
/// equality required when both are zero.
pub fn within_relative(actual: f64, expected: f64, tol: f64) -> bool {
    (actual - expected).abs() <= tol * actual.abs().max(expected.abs())
}

/// Dispatches on `kind`; soft cosine requires `weights`.
pub fn plain_similarity(
    a: &PlainVector,
    b: &PlainVector,
    kind: SimilarityKind,
    weights: Option<&WeightMatrix>,
) -> Result<SimilarityResult> {
    match kind {
        SimilarityKind::Cosine => plain_cosine(a, b),
        SimilarityKind::Angular => plain_angular(a, b),
        SimilarityKind::Tanimoto => plain_tanimoto(a, b),
        SimilarityKind::SoftCosine => {
            plain_soft_cosine(a, b, weights.ok_or(Error::MissingWeights)?)
        }
    }
}
