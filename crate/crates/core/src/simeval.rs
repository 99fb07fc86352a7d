//! Similarity measures evaluated over encrypted vectors.
//!
//! Every measure reduces to a handful of integer aggregates (dot product,
//! squared norms, or weighted double sums). Those are formed on ciphertexts,
//! decrypted exactly, and only then turned into reals.
//!
//! Two aggregation strategies exist, one per nonce mode:
//!
//! * shared nonce: all ciphertexts carry the same mask `R`, so
//!   `sum_k c_{i,k} c_{j,k} mod p` equals `R^2 * sum_k x_{i,k} x_{j,k}`
//!   and a single decryption (dividing by `R^2`) recovers the aggregate.
//! * fresh nonces: masks differ per element, so each product term stays a
//!   separate ciphertext and is decrypted individually before summing.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::elgamal::{self, Ciphertext, PrivateKey, PublicParams};
use crate::encvec::{EncryptedVector, EncryptedWeight, EncryptedWeightMatrix, NonceMode};
use crate::error::{Error, Result};
use crate::modmath;
use crate::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimilarityKind {
    Cosine,
    Angular,
    Tanimoto,
    SoftCosine,
}

impl SimilarityKind {
    pub const ALL: [SimilarityKind; 4] = [
        SimilarityKind::Cosine,
        SimilarityKind::Angular,
        SimilarityKind::Tanimoto,
        SimilarityKind::SoftCosine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SimilarityKind::Cosine => "cosine",
            SimilarityKind::Angular => "angular",
            SimilarityKind::Tanimoto => "tanimoto",
            SimilarityKind::SoftCosine => "soft_cosine",
        }
    }
}

impl fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(SimilarityKind::Cosine),
            "angular" => Ok(SimilarityKind::Angular),
            "tanimoto" => Ok(SimilarityKind::Tanimoto),
            "soft" | "soft_cosine" => Ok(SimilarityKind::SoftCosine),
            other => Err(Error::InvalidParameter(format!(
                "unknown similarity kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateKind {
    Dot,
    Norm,
    SqDiff,
    SoftCross,
    SoftSelf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AggregatePayload {
    /// `residue = R^mask_power * value mod p`, with `R = c1^q`.
    Shared {
        residue: BigUint,
        c1: BigUint,
        mask_power: u32,
    },
    /// Product ciphertexts, one per term.
    Fresh { terms: Vec<Ciphertext> },
}

/// An encrypted aggregate together with worst-case magnitudes derived from
/// the operands' declared bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateCipher {
    pub kind: AggregateKind,
    pub payload: AggregatePayload,
    /// Bound on the magnitude of the whole aggregate.
    pub bound: BigUint,
    /// Bound on the magnitude of a single term.
    pub term_bound: BigUint,
}

fn check_pair(ci: &EncryptedVector, cj: &EncryptedVector) -> Result<()> {
    if ci.len() != cj.len() {
        return Err(Error::DimensionMismatch {
            left: ci.len(),
            right: cj.len(),
        });
    }
    if ci.mode() != cj.mode() {
        return Err(Error::ModeMismatch);
    }
    if ci.shared_c1() != cj.shared_c1() {
        return Err(Error::NonceMismatch);
    }
    Ok(())
}

fn sum_biguint<F>(n: usize, exec: Exec, term: F) -> BigUint
where
    F: Fn(usize) -> BigUint + Sync + Send,
{
    match exec {
        Exec::Sequential => (0..n).map(term).sum(),
        Exec::Parallel => (0..n).into_par_iter().map(term).sum(),
    }
}

fn map_terms<T, F>(n: usize, exec: Exec, term: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Exec::Sequential => (0..n).map(term).collect(),
        Exec::Parallel => (0..n).into_par_iter().map(term).collect(),
    }
}

/// Pairwise aggregate `sum_k f(c_{i,k}, c_{j,k})`.
fn pairwise(
    params: &PublicParams,
    ci: &EncryptedVector,
    cj: &EncryptedVector,
    kind: AggregateKind,
    exec: Exec,
) -> Result<AggregateCipher> {
    check_pair(ci, cj)?;
    let n = ci.len();
    let p = params.modulus();
    let (bi, bj) = (BigUint::from(ci.bound()), BigUint::from(cj.bound()));
    let term_bound = match kind {
        AggregateKind::SqDiff => {
            let s = &bi + &bj;
            &s * &s
        }
        _ => &bi * &bj,
    };
    let bound = &term_bound * BigUint::from(n);
    let (a, b) = (ci.elements(), cj.elements());
    let payload = match ci.shared_c1() {
        Some(c1) => {
            let sum = match kind {
                AggregateKind::SqDiff => sum_biguint(n, exec, |k| {
                    let (x, y) = (&a[k].c2, &b[k].c2);
                    let diff = if x >= y { x - y } else { y - x };
                    &diff * &diff
                }),
                _ => sum_biguint(n, exec, |k| &a[k].c2 * &b[k].c2),
            };
            AggregatePayload::Shared {
                residue: sum % p,
                c1: c1.clone(),
                mask_power: 2,
            }
        }
        None => {
            if kind == AggregateKind::SqDiff {
                return Err(Error::InvalidParameter(
                    "difference aggregates need a shared nonce".into(),
                ));
            }
            AggregatePayload::Fresh {
                terms: map_terms(n, exec, |k| elgamal::hom_mul(params, &a[k], &b[k])),
            }
        }
    };
    Ok(AggregateCipher {
        kind,
        payload,
        bound,
        term_bound,
    })
}

/// Encrypted dot product.
pub fn hom_dot(
    params: &PublicParams,
    ci: &EncryptedVector,
    cj: &EncryptedVector,
) -> Result<AggregateCipher> {
    pairwise(params, ci, cj, AggregateKind::Dot, Exec::Sequential)
}

/// Encrypted squared norm.
pub fn hom_norm_sq(params: &PublicParams, ci: &EncryptedVector) -> Result<AggregateCipher> {
    pairwise(params, ci, ci, AggregateKind::Norm, Exec::Sequential)
}

/// Encrypted squared Euclidean distance `sum_k (x_{i,k} - x_{j,k})^2`.
///
/// Only defined under a shared nonce: `c_{i,k} - c_{j,k} = (x_{i,k} - x_{j,k}) R`.
pub fn hom_sq_diff(
    params: &PublicParams,
    ci: &EncryptedVector,
    cj: &EncryptedVector,
) -> Result<AggregateCipher> {
    pairwise(params, ci, cj, AggregateKind::SqDiff, Exec::Sequential)
}

/// The three weighted double sums of soft cosine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoftAggregateCipher {
    pub num: AggregateCipher,
    pub den_i: AggregateCipher,
    pub den_j: AggregateCipher,
    pub scale: u64,
}

fn weighted(
    params: &PublicParams,
    cw: &EncryptedWeightMatrix,
    x: &EncryptedVector,
    y: &EncryptedVector,
    kind: AggregateKind,
    exec: Exec,
) -> AggregateCipher {
    let n = x.len();
    let p = params.modulus();
    let term_bound =
        BigUint::from(cw.scale()) * BigUint::from(x.bound()) * BigUint::from(y.bound());
    let bound = &term_bound * BigUint::from(n) * BigUint::from(n);
    let (a, b) = (x.elements(), y.elements());
    let payload = match x.shared_c1() {
        Some(c1) => {
            // sum_k c_{x,k} * (sum_l w_{k,l} c_{y,l})
            let sum = sum_biguint(n, exec, |k| {
                let inner: BigUint = (0..n)
                    .filter_map(|l| match cw.get(k, l) {
                        EncryptedWeight::Zero => None,
                        EncryptedWeight::Cipher(w) => Some(&w.c2 * &b[l].c2),
                    })
                    .sum();
                &a[k].c2 * (inner % p)
            });
            AggregatePayload::Shared {
                residue: sum % p,
                c1: c1.clone(),
                mask_power: 3,
            }
        }
        None => {
            let rows = map_terms(n, exec, |k| {
                (0..n)
                    .filter_map(|l| match cw.get(k, l) {
                        EncryptedWeight::Zero => None,
                        EncryptedWeight::Cipher(w) => Some(elgamal::hom_mul(
                            params,
                            &elgamal::hom_mul(params, w, &a[k]),
                            &b[l],
                        )),
                    })
                    .collect::<Vec<_>>()
            });
            AggregatePayload::Fresh {
                terms: rows.into_iter().flatten().collect(),
            }
        }
    };
    AggregateCipher {
        kind,
        payload,
        bound,
        term_bound,
    }
}

pub fn hom_soft_sums(
    params: &PublicParams,
    cw: &EncryptedWeightMatrix,
    ci: &EncryptedVector,
    cj: &EncryptedVector,
) -> Result<SoftAggregateCipher> {
    hom_soft_sums_with(params, cw, ci, cj, Exec::Sequential)
}

pub fn hom_soft_sums_with(
    params: &PublicParams,
    cw: &EncryptedWeightMatrix,
    ci: &EncryptedVector,
    cj: &EncryptedVector,
    exec: Exec,
) -> Result<SoftAggregateCipher> {
    check_pair(ci, cj)?;
    if cw.dim() != ci.len() {
        return Err(Error::DimensionMismatch {
            left: cw.dim(),
            right: ci.len(),
        });
    }
    if cw.mode() != ci.mode() {
        return Err(Error::ModeMismatch);
    }
    if cw.shared_c1() != ci.shared_c1() {
        return Err(Error::NonceMismatch);
    }
    Ok(SoftAggregateCipher {
        num: weighted(params, cw, ci, cj, AggregateKind::SoftCross, exec),
        den_i: weighted(params, cw, ci, ci, AggregateKind::SoftSelf, exec),
        den_j: weighted(params, cw, cj, cj, AggregateKind::SoftSelf, exec),
        scale: cw.scale(),
    })
}

fn overflow(agg: &AggregateCipher, what: &str) -> Error {
    Error::AggregateOverflow(format!("{:?} {what}", agg.kind))
}

/// Decrypts an aggregate, refusing any result the modulus cannot represent
/// unambiguously.
pub fn decrypt_aggregate(
    params: &PublicParams,
    sk: &PrivateKey,
    agg: &AggregateCipher,
) -> Result<BigInt> {
    decrypt_aggregate_with(params, sk, agg, Exec::Sequential)
}

pub fn decrypt_aggregate_with(
    params: &PublicParams,
    sk: &PrivateKey,
    agg: &AggregateCipher,
    exec: Exec,
) -> Result<BigInt> {
    let half = params.half_range();
    match &agg.payload {
        AggregatePayload::Shared { .. } => {
            if agg.bound > *half {
                return Err(overflow(agg, "bound exceeds (p-1)/2"));
            }
        }
        AggregatePayload::Fresh { .. } => {
            if agg.term_bound > *half {
                return Err(overflow(agg, "term bound exceeds (p-1)/2"));
            }
        }
    }
    let value = decrypt_terms(params, sk, agg, exec, Some(&agg.term_bound))?;
    if value.magnitude() > &agg.bound {
        return Err(overflow(agg, "decrypted value exceeds its bound"));
    }
    Ok(value)
}

/// Decrypts without any capacity check; a wrapped aggregate comes back as
/// its centered residue. For diagnostics only.
pub fn decrypt_aggregate_unchecked(
    params: &PublicParams,
    sk: &PrivateKey,
    agg: &AggregateCipher,
) -> Result<BigInt> {
    decrypt_terms(params, sk, agg, Exec::Sequential, None)
}

fn decrypt_terms(
    params: &PublicParams,
    sk: &PrivateKey,
    agg: &AggregateCipher,
    exec: Exec,
    term_bound: Option<&BigUint>,
) -> Result<BigInt> {
    let p = params.modulus();
    match &agg.payload {
        AggregatePayload::Shared {
            residue,
            c1,
            mask_power,
        } => {
            let mask = sk.mask(params, c1)?;
            let mask = mask.modpow(&BigUint::from(*mask_power), p);
            let inv = modmath::mod_inv(&BigInt::from_biguint(Sign::Plus, mask), p)
                .map_err(|_| Error::CorruptCiphertext)?;
            Ok(params.lift(residue * inv % p))
        }
        AggregatePayload::Fresh { terms } => {
            let values = map_terms(terms.len(), exec, |t| {
                let v = elgamal::decrypt(params, sk, &terms[t]).map_err(|e| e.at_element(t))?;
                match term_bound {
                    Some(b) if v.magnitude() > b => {
                        Err(overflow(agg, "term exceeds its bound").at_element(t))
                    }
                    _ => Ok(v),
                }
            });
            values.into_iter().sum()
        }
    }
}

/// Decrypted pairwise aggregates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateSums {
    pub dot: BigInt,
    pub norm_i_sq: BigInt,
    pub norm_j_sq: BigInt,
}

impl AggregateSums {
    /// Exact plaintext aggregates, for comparison against decrypted ones.
    pub fn from_plain(a: &[i64], b: &[i64]) -> Self {
        let dot = |x: &[i64], y: &[i64]| -> BigInt {
            x.iter().zip(y).map(|(&u, &v)| BigInt::from(u) * v).sum()
        };
        AggregateSums {
            dot: dot(a, b),
            norm_i_sq: dot(a, a),
            norm_j_sq: dot(b, b),
        }
    }

    fn satisfies_cauchy_schwarz(&self) -> bool {
        !self.norm_i_sq.is_negative()
            && !self.norm_j_sq.is_negative()
            && &self.dot * &self.dot <= &self.norm_i_sq * &self.norm_j_sq
    }
}

/// Decrypted soft-cosine double sums, each carrying one factor of `scale`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoftAggregateSums {
    pub num: BigInt,
    pub den_i: BigInt,
    pub den_j: BigInt,
    pub scale: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityResult {
    pub kind: SimilarityKind,
    pub similarity: f64,
    pub distance: f64,
}

fn to_f64(v: &BigInt) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

fn cosine_value(sums: &AggregateSums) -> Result<f64> {
    if !sums.norm_i_sq.is_positive() || !sums.norm_j_sq.is_positive() {
        return Err(Error::ZeroVector);
    }
    Ok(to_f64(&sums.dot) / (to_f64(&sums.norm_i_sq).sqrt() * to_f64(&sums.norm_j_sq).sqrt()))
}

pub fn finalize_cosine(sums: &AggregateSums) -> Result<SimilarityResult> {
    let s = cosine_value(sums)?;
    Ok(SimilarityResult {
        kind: SimilarityKind::Cosine,
        similarity: s,
        distance: 1.0 - s,
    })
}

pub fn finalize_angular(sums: &AggregateSums) -> Result<SimilarityResult> {
    let c = cosine_value(sums)?.clamp(-1.0, 1.0);
    let d = 2.0 * c.acos() / PI;
    Ok(SimilarityResult {
        kind: SimilarityKind::Angular,
        similarity: 1.0 - d,
        distance: d,
    })
}

pub fn finalize_tanimoto(sums: &AggregateSums) -> Result<SimilarityResult> {
    let den = &sums.norm_i_sq + &sums.norm_j_sq - &sums.dot;
    tanimoto_ratio(&sums.dot, &den)
}

/// Tanimoto from the dot product and the squared Euclidean distance; the
/// denominator `|a|^2 + |b|^2 - a.b` equals `|a - b|^2 + a.b`.
pub fn finalize_tanimoto_diff(dot: &BigInt, sq_diff: &BigInt) -> Result<SimilarityResult> {
    tanimoto_ratio(dot, &(sq_diff + dot))
}

fn tanimoto_ratio(dot: &BigInt, den: &BigInt) -> Result<SimilarityResult> {
    if den.is_zero() {
        return Err(Error::DegenerateTanimoto);
    }
    let s = to_f64(dot) / to_f64(den);
    Ok(SimilarityResult {
        kind: SimilarityKind::Tanimoto,
        similarity: s,
        distance: 1.0 - s,
    })
}

pub fn finalize_soft_cosine(sums: &SoftAggregateSums) -> Result<SimilarityResult> {
    if !sums.den_i.is_positive() || !sums.den_j.is_positive() {
        return Err(Error::InvalidWeightMatrix);
    }
    // one factor of the scale in each sum cancels in the ratio
    let s = to_f64(&sums.num) / (to_f64(&sums.den_i).sqrt() * to_f64(&sums.den_j).sqrt());
    Ok(SimilarityResult {
        kind: SimilarityKind::SoftCosine,
        similarity: s,
        distance: 1.0 - s,
    })
}

/// Forms and decrypts the dot product and both squared norms.
pub fn encrypted_sums(
    params: &PublicParams,
    sk: &PrivateKey,
    ci: &EncryptedVector,
    cj: &EncryptedVector,
) -> Result<AggregateSums> {
    encrypted_sums_with(params, sk, ci, cj, Exec::Sequential)
}

pub fn encrypted_sums_with(
    params: &PublicParams,
    sk: &PrivateKey,
    ci: &EncryptedVector,
    cj: &EncryptedVector,
    exec: Exec,
) -> Result<AggregateSums> {
    let dec = |agg: AggregateCipher| decrypt_aggregate_with(params, sk, &agg, exec);
    let sums = AggregateSums {
        dot: dec(pairwise(params, ci, cj, AggregateKind::Dot, exec)?)?,
        norm_i_sq: dec(pairwise(params, ci, ci, AggregateKind::Norm, exec)?)?,
        norm_j_sq: dec(pairwise(params, cj, cj, AggregateKind::Norm, exec)?)?,
    };
    if !sums.satisfies_cauchy_schwarz() {
        return Err(Error::AggregateOverflow(
            "decrypted aggregates violate Cauchy-Schwarz".into(),
        ));
    }
    Ok(sums)
}

pub fn encrypted_soft_sums(
    params: &PublicParams,
    sk: &PrivateKey,
    cw: &EncryptedWeightMatrix,
    ci: &EncryptedVector,
    cj: &EncryptedVector,
) -> Result<SoftAggregateSums> {
    encrypted_soft_sums_with(params, sk, cw, ci, cj, Exec::Sequential)
}

pub fn encrypted_soft_sums_with(
    params: &PublicParams,
    sk: &PrivateKey,
    cw: &EncryptedWeightMatrix,
    ci: &EncryptedVector,
    cj: &EncryptedVector,
    exec: Exec,
) -> Result<SoftAggregateSums> {
    let agg = hom_soft_sums_with(params, cw, ci, cj, exec)?;
    let dec = |a: &AggregateCipher| decrypt_aggregate_with(params, sk, a, exec);
    Ok(SoftAggregateSums {
        num: dec(&agg.num)?,
        den_i: dec(&agg.den_i)?,
        den_j: dec(&agg.den_j)?,
        scale: agg.scale,
    })
}

/// Full pipeline: aggregate on ciphertexts, decrypt, finalize.
pub fn encrypted_similarity(
    params: &PublicParams,
    sk: &PrivateKey,
    ci: &EncryptedVector,
    cj: &EncryptedVector,
    kind: SimilarityKind,
    weights: Option<&EncryptedWeightMatrix>,
) -> Result<SimilarityResult> {
    encrypted_similarity_with(params, sk, ci, cj, kind, weights, Exec::Sequential)
}

pub fn encrypted_similarity_with(
    params: &PublicParams,
    sk: &PrivateKey,
    ci: &EncryptedVector,
    cj: &EncryptedVector,
    kind: SimilarityKind,
    weights: Option<&EncryptedWeightMatrix>,
    exec: Exec,
) -> Result<SimilarityResult> {
    match kind {
        SimilarityKind::Cosine => finalize_cosine(&encrypted_sums_with(params, sk, ci, cj, exec)?),
        SimilarityKind::Angular => {
            finalize_angular(&encrypted_sums_with(params, sk, ci, cj, exec)?)
        }
        SimilarityKind::Tanimoto => {
            check_pair(ci, cj)?;
            let diff_bound = {
                let s = BigUint::from(ci.bound()) + BigUint::from(cj.bound());
                &s * &s * BigUint::from(ci.len())
            };
            if ci.mode() == NonceMode::Shared && diff_bound <= *params.half_range() {
                // two aggregates instead of three
                let dec = |agg: AggregateCipher| decrypt_aggregate_with(params, sk, &agg, exec);
                let dot = dec(pairwise(params, ci, cj, AggregateKind::Dot, exec)?)?;
                let sq_diff = dec(pairwise(params, ci, cj, AggregateKind::SqDiff, exec)?)?;
                finalize_tanimoto_diff(&dot, &sq_diff)
            } else {
                finalize_tanimoto(&encrypted_sums_with(params, sk, ci, cj, exec)?)
            }
        }
        SimilarityKind::SoftCosine => {
            let cw = weights.ok_or(Error::MissingWeights)?;
            finalize_soft_cosine(&encrypted_soft_sums_with(params, sk, cw, ci, cj, exec)?)
        }
    }
}
