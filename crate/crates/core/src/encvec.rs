//! Element-wise encryption of integer vectors and feature-weight matrices.
//!
//! Vectors carry a declared element bound `B` so that the modulus capacity
//! can be checked before any aggregate is formed. Real-valued feature
//! weights enter the integer plaintext domain by fixed-point scaling with a
//! denominator `S`.
//!
//! Zero plaintexts cannot be encrypted in a multiplicative scheme. Callers
//! holding sparse data must either shift every element by a constant offset
//! before encryption (the zero-offset convention) or drop zero coordinates
//! from both vectors, since a zero coordinate contributes nothing to any
//! of the supported aggregates.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use rand::Rng;
use rayon::prelude::*;

use crate::elgamal::{self, Ciphertext, PrivateKey, PublicParams};
use crate::error::{Error, Result};
use crate::simeval::SimilarityKind;
use crate::Exec;

/// Default fixed-point denominator for real-valued weights.
pub const DEFAULT_WEIGHT_SCALE: u64 = 1_000_000;

/// Plaintext integer vector with a declared element bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlainVector {
    elements: Vec<i64>,
    bound: u64,
}

impl PlainVector {
    pub fn new(elements: Vec<i64>, bound: u64) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some(index) = elements.iter().position(|x| x.unsigned_abs() > bound) {
            return Err(Error::ElementOutOfBound { index, bound });
        }
        Ok(PlainVector { elements, bound })
    }

    /// Uses the largest element magnitude as the bound.
    pub fn from_elements(elements: Vec<i64>) -> Result<Self> {
        let bound = elements.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
        Self::new(elements, bound)
    }

    pub fn elements(&self) -> &[i64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }
}

/// Nonce assignment of an encrypted vector or weight matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonceMode {
    /// Independent nonce per element.
    Fresh,
    /// One nonce for every element; permits ciphertext-side sums.
    Shared,
}

impl fmt::Display for NonceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NonceMode::Fresh => "fresh",
            NonceMode::Shared => "shared",
        })
    }
}

/// A nonce reused across elements: its public `c1 = g^r` and mask `R = Q^r`.
///
/// Anyone who learns the mask can unmask every ciphertext built from it, so
/// it never leaves the encrypting (or key-holding) party.
#[derive(Clone, PartialEq, Eq)]
pub struct SharedNonce {
    c1: BigUint,
    mask: BigUint,
}

impl fmt::Debug for SharedNonce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SharedNonce")
            .field("c1", &self.c1)
            .finish_non_exhaustive()
    }
}

fn warn_shared() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| {
        log::warn!(
            "shared-nonce encryption: all elements reuse one nonce; ciphertext ratios reveal plaintext ratios"
        )
    });
}

impl SharedNonce {
    pub fn from_exponent(params: &PublicParams, r: &BigUint) -> Result<Self> {
        if *r == BigUint::from(0u32) || *r > params.modulus() - 2u32 {
            return Err(Error::InvalidParameter("nonce must lie in [1, p-2]".into()));
        }
        warn_shared();
        Ok(SharedNonce {
            c1: params.generator().modpow(r, params.modulus()),
            mask: params.public_key().modpow(r, params.modulus()),
        })
    }

    pub fn random<R: Rng + ?Sized>(params: &PublicParams, rng: &mut R) -> Self {
        let r = params.random_nonce(rng);
        Self::from_exponent(params, &r).expect("random nonce lies in [1, p-2]")
    }

    /// Rebuilds the mask from a published `c1` using the private key.
    pub fn recover(params: &PublicParams, sk: &PrivateKey, c1: &BigUint) -> Result<Self> {
        let mask = sk.mask(params, c1)?;
        Ok(SharedNonce {
            c1: c1.clone(),
            mask,
        })
    }

    pub fn c1(&self) -> &BigUint {
        &self.c1
    }

    pub fn encrypt(&self, params: &PublicParams, m: &BigInt) -> Result<Ciphertext> {
        let residue = params.encode(m)?;
        Ok(Ciphertext {
            c1: self.c1.clone(),
            c2: residue * &self.mask % params.modulus(),
        })
    }
}

/// How to draw nonces when encrypting a collection.
#[derive(Debug, Clone, Copy)]
pub enum EncryptMode<'a> {
    Fresh,
    Shared(&'a SharedNonce),
}

/// Encrypts each value, drawing fresh nonces sequentially from `rng` first so
/// the result does not depend on `exec`.
fn encrypt_values<R: Rng + ?Sized>(
    params: &PublicParams,
    values: &[i64],
    mode: EncryptMode<'_>,
    rng: &mut R,
    exec: Exec,
) -> Result<Vec<Ciphertext>> {
    match mode {
        EncryptMode::Shared(nonce) => {
            let one = |(i, &x): (usize, &i64)| {
                nonce
                    .encrypt(params, &BigInt::from(x))
                    .map_err(|e| e.at_element(i))
            };
            match exec {
                Exec::Sequential => values.iter().enumerate().map(one).collect(),
                Exec::Parallel => values.par_iter().enumerate().map(one).collect(),
            }
        }
        EncryptMode::Fresh => {
            let nonces: Vec<BigUint> = values.iter().map(|_| params.random_nonce(rng)).collect();
            let one = |(i, (&x, r)): (usize, (&i64, &BigUint))| {
                elgamal::encrypt_with_nonce(params, &BigInt::from(x), r)
                    .map_err(|e| e.at_element(i))
            };
            match exec {
                Exec::Sequential => values.iter().zip(&nonces).enumerate().map(one).collect(),
                Exec::Parallel => values
                    .par_iter()
                    .zip(nonces.par_iter())
                    .enumerate()
                    .map(one)
                    .collect(),
            }
        }
    }
}

/// Ciphertexts of a [`PlainVector`], plus its bound and nonce mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedVector {
    elements: Vec<Ciphertext>,
    bound: u64,
    shared_c1: Option<BigUint>,
}

impl EncryptedVector {
    /// Assembles a vector from stored ciphertexts. With `shared_c1` set,
    /// every element must carry that `c1`.
    pub fn from_parts(
        elements: Vec<Ciphertext>,
        bound: u64,
        shared_c1: Option<BigUint>,
    ) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some(c1) = &shared_c1 {
            if elements.iter().any(|ct| ct.c1 != *c1) {
                return Err(Error::ModeMismatch);
            }
        }
        Ok(EncryptedVector {
            elements,
            bound,
            shared_c1,
        })
    }

    pub fn elements(&self) -> &[Ciphertext] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn mode(&self) -> NonceMode {
        if self.shared_c1.is_some() {
            NonceMode::Shared
        } else {
            NonceMode::Fresh
        }
    }

    /// The common `c1` in shared-nonce mode.
    pub fn shared_c1(&self) -> Option<&BigUint> {
        self.shared_c1.as_ref()
    }

    /// First `n` elements, keeping bound and mode.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::DimensionMismatch {
                left: n,
                right: self.len(),
            });
        }
        Ok(EncryptedVector {
            elements: self.elements[..n].to_vec(),
            bound: self.bound,
            shared_c1: self.shared_c1.clone(),
        })
    }
}

pub fn encrypt_vector<R: Rng + ?Sized>(
    params: &PublicParams,
    v: &PlainVector,
    mode: EncryptMode<'_>,
    rng: &mut R,
) -> Result<EncryptedVector> {
    encrypt_vector_with(params, v, mode, rng, Exec::Sequential)
}

pub fn encrypt_vector_with<R: Rng + ?Sized>(
    params: &PublicParams,
    v: &PlainVector,
    mode: EncryptMode<'_>,
    rng: &mut R,
    exec: Exec,
) -> Result<EncryptedVector> {
    if let Some(index) = v.elements().iter().position(|&x| x == 0) {
        return Err(Error::ZeroElement { index });
    }
    let elements = encrypt_values(params, v.elements(), mode, rng, exec)?;
    let shared_c1 = match mode {
        EncryptMode::Fresh => None,
        EncryptMode::Shared(nonce) => Some(nonce.c1().clone()),
    };
    Ok(EncryptedVector {
        elements,
        bound: v.bound(),
        shared_c1,
    })
}

fn to_i64(value: BigInt, index: usize) -> Result<i64> {
    i64::try_from(value).map_err(|_| Error::PlaintextOutOfRange.at_element(index))
}

pub fn decrypt_vector(
    params: &PublicParams,
    sk: &PrivateKey,
    cv: &EncryptedVector,
) -> Result<PlainVector> {
    let elements = cv
        .elements()
        .iter()
        .enumerate()
        .map(|(i, ct)| {
            elgamal::decrypt(params, sk, ct)
                .map_err(|e| e.at_element(i))
                .and_then(|m| to_i64(m, i))
        })
        .collect::<Result<Vec<_>>>()?;
    let bound = elements
        .iter()
        .map(|x| x.unsigned_abs())
        .max()
        .unwrap_or(0)
        .max(cv.bound());
    PlainVector::new(elements, bound)
}

/// Symmetric real weight matrix with unit diagonal, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    values: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::InvalidWeights(format!(
                "expected {} entries for dimension {n}, got {}",
                n * n,
                values.len()
            )));
        }
        for k in 0..n {
            if values[k * n + k] != 1.0 {
                return Err(Error::InvalidWeights(format!(
                    "diagonal entry {k} is not 1"
                )));
            }
            for l in 0..n {
                let w = values[k * n + l];
                if !w.is_finite() || w.abs() > 1.0 {
                    return Err(Error::InvalidWeights(format!(
                        "entry ({k}, {l}) = {w} outside [-1, 1]"
                    )));
                }
                if w != values[l * n + k] {
                    return Err(Error::InvalidWeights(format!(
                        "entries ({k}, {l}) and ({l}, {k}) differ"
                    )));
                }
            }
        }
        Ok(WeightMatrix { n, values })
    }

    pub fn identity(n: usize) -> Self {
        let mut values = vec![0.0; n * n];
        for k in 0..n {
            values[k * n + k] = 1.0;
        }
        WeightMatrix { n, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.values[k * self.n + l]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Weight between features `k` and `l` as the cosine of the two-entry
/// columns `(a_k, b_k)` and `(a_l, b_l)`.
pub fn feature_similarity_weights(a: &PlainVector, b: &PlainVector) -> Result<WeightMatrix> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    let cols: Vec<(f64, f64)> = a
        .elements()
        .iter()
        .zip(b.elements())
        .map(|(&x, &y)| (x as f64, y as f64))
        .collect();
    let norms: Vec<f64> = cols.iter().map(|(x, y)| x.hypot(*y)).collect();
    if let Some(index) = norms.iter().position(|&norm| norm == 0.0) {
        return Err(Error::UndefinedFeatureWeight { index });
    }
    let mut values = vec![0.0; n * n];
    for k in 0..n {
        values[k * n + k] = 1.0;
        for l in k + 1..n {
            let dot = cols[k].0 * cols[l].0 + cols[k].1 * cols[l].1;
            let w = (dot / (norms[k] * norms[l])).clamp(-1.0, 1.0);
            values[k * n + l] = w;
            values[l * n + k] = w;
        }
    }
    Ok(WeightMatrix { n, values })
}

/// Fixed-point weights `round(w * S)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledWeightMatrix {
    n: usize,
    scale: u64,
    values: Vec<i64>,
}

impl ScaledWeightMatrix {
    pub fn new(n: usize, scale: u64, values: Vec<i64>) -> Result<Self> {
        if scale == 0 || scale > i64::MAX as u64 {
            return Err(Error::InvalidWeights(format!("invalid scale {scale}")));
        }
        if n == 0 || values.len() != n * n {
            return Err(Error::InvalidWeights(format!(
                "expected {} entries for dimension {n}, got {}",
                n * n,
                values.len()
            )));
        }
        for k in 0..n {
            if values[k * n + k] != scale as i64 {
                return Err(Error::InvalidWeights(format!(
                    "diagonal entry {k} is not the scale {scale}"
                )));
            }
            for l in 0..n {
                let w = values[k * n + l];
                if w.unsigned_abs() > scale {
                    return Err(Error::InvalidWeights(format!(
                        "entry ({k}, {l}) = {w} exceeds the scale"
                    )));
                }
                if w != values[l * n + k] {
                    return Err(Error::InvalidWeights(format!(
                        "entries ({k}, {l}) and ({l}, {k}) differ"
                    )));
                }
            }
        }
        Ok(ScaledWeightMatrix { n, scale, values })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn get(&self, k: usize, l: usize) -> i64 {
        self.values[k * self.n + l]
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// The real weights these integers stand for.
    pub fn dequantize(&self) -> WeightMatrix {
        let s = self.scale as f64;
        let mut values: Vec<f64> = self.values.iter().map(|&w| w as f64 / s).collect();
        for k in 0..self.n {
            values[k * self.n + k] = 1.0;
        }
        WeightMatrix { n: self.n, values }
    }
}

pub fn scale_weights(w: &WeightMatrix, scale: u64) -> Result<ScaledWeightMatrix> {
    let s = scale as f64;
    let values = w.values().iter().map(|&x| (x * s).round() as i64).collect();
    ScaledWeightMatrix::new(w.dim(), scale, values)
}

/// One encrypted weight; zero weights stay as a plaintext marker and are
/// skipped by the homomorphic sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EncryptedWeight {
    Zero,
    Cipher(Ciphertext),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedWeightMatrix {
    n: usize,
    scale: u64,
    entries: Vec<EncryptedWeight>,
    shared_c1: Option<BigUint>,
}

impl EncryptedWeightMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn get(&self, k: usize, l: usize) -> &EncryptedWeight {
        &self.entries[k * self.n + l]
    }

    pub fn mode(&self) -> NonceMode {
        if self.shared_c1.is_some() {
            NonceMode::Shared
        } else {
            NonceMode::Fresh
        }
    }

    pub fn shared_c1(&self) -> Option<&BigUint> {
        self.shared_c1.as_ref()
    }
}

pub fn encrypt_weights<R: Rng + ?Sized>(
    params: &PublicParams,
    sw: &ScaledWeightMatrix,
    mode: EncryptMode<'_>,
    rng: &mut R,
) -> Result<EncryptedWeightMatrix> {
    let nonzero: Vec<i64> = sw.values().iter().copied().filter(|&w| w != 0).collect();
    let mut ciphers = encrypt_values(params, &nonzero, mode, rng, Exec::Sequential)?.into_iter();
    let entries = sw
        .values()
        .iter()
        .map(|&w| {
            if w == 0 {
                EncryptedWeight::Zero
            } else {
                EncryptedWeight::Cipher(ciphers.next().expect("one ciphertext per nonzero weight"))
            }
        })
        .collect();
    let shared_c1 = match mode {
        EncryptMode::Fresh => None,
        EncryptMode::Shared(nonce) => Some(nonce.c1().clone()),
    };
    Ok(EncryptedWeightMatrix {
        n: sw.dim(),
        scale: sw.scale(),
        entries,
        shared_c1,
    })
}

pub fn decrypt_weights(
    params: &PublicParams,
    sk: &PrivateKey,
    cw: &EncryptedWeightMatrix,
) -> Result<ScaledWeightMatrix> {
    let values = cw
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| match e {
            EncryptedWeight::Zero => Ok(0),
            EncryptedWeight::Cipher(ct) => elgamal::decrypt(params, sk, ct)
                .map_err(|err| err.at_element(i))
                .and_then(|m| to_i64(m, i)),
        })
        .collect::<Result<Vec<_>>>()?;
    ScaledWeightMatrix::new(cw.n, cw.scale, values)
}

/// Outcome of comparing the worst-case aggregate with `(p-1)/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityReport {
    pub passes: bool,
    /// Worst-case aggregate magnitude for the requested bound.
    pub required: BigUint,
    /// `(p-1)/2`.
    pub limit: BigUint,
    /// Largest element bound that still passes.
    pub max_bound: BigUint,
}

/// Checks that every aggregate for `kind` fits below the modulus:
/// `n * B^2` for the pairwise measures, `n^2 * S * B^2` for soft cosine.
pub fn capacity_check(
    params: &PublicParams,
    n: usize,
    bound: u64,
    scale: u64,
    kind: SimilarityKind,
) -> CapacityReport {
    let n = BigUint::from(n);
    let factor = match kind {
        SimilarityKind::SoftCosine => &n * &n * BigUint::from(scale),
        _ => n,
    };
    let b = BigUint::from(bound);
    let required = &factor * &b * &b;
    let limit = params.half_range().clone();
    let max_bound = if factor == BigUint::from(0u32) {
        limit.clone()
    } else {
        (&limit / &factor).sqrt()
    };
    CapacityReport {
        passes: required <= limit,
        required,
        limit,
        max_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elgamal::{keygen, KeyPair, KeySize};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy() -> KeyPair {
        KeyPair::toy(5).unwrap()
    }

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(42)
    }

    #[test]
    fn plain_vector_invariants() {
        assert!(matches!(
            PlainVector::from_elements(vec![]),
            Err(Error::EmptyVector)
        ));
        assert!(matches!(
            PlainVector::new(vec![1, -6], 5),
            Err(Error::ElementOutOfBound { index: 1, bound: 5 })
        ));
        assert_eq!(
            PlainVector::from_elements(vec![1, -7, 3]).unwrap().bound(),
            7
        );
    }

    #[test]
    fn shared_toy_vector_matches_masked_values() {
        let keys = toy();
        let nonce = SharedNonce::from_exponent(&keys.public, &BigUint::from(2u32)).unwrap();
        let v = PlainVector::from_elements(vec![1, 2, 3]).unwrap();
        let cv = encrypt_vector(&keys.public, &v, EncryptMode::Shared(&nonce), &mut rng()).unwrap();
        let c2: Vec<BigUint> = cv.elements().iter().map(|ct| ct.c2.clone()).collect();
        assert_eq!(
            c2,
            vec![59_049u32, 118_098, 177_147]
                .into_iter()
                .map(BigUint::from)
                .collect::<Vec<_>>()
        );
        assert!(cv.elements().iter().all(|ct| ct.c1 == BigUint::from(9u32)));
        assert_eq!(cv.mode(), NonceMode::Shared);
        assert_eq!(decrypt_vector(&keys.public, &keys.private, &cv).unwrap(), v);
    }

    #[test]
    fn fresh_mode_uses_distinct_nonces() {
        let keys = keygen(KeySize::Bits(128), &mut rng()).unwrap();
        let v = PlainVector::from_elements((1..=50).collect()).unwrap();
        let cv = encrypt_vector(&keys.public, &v, EncryptMode::Fresh, &mut rng()).unwrap();
        let mut c1s: Vec<&BigUint> = cv.elements().iter().map(|ct| &ct.c1).collect();
        c1s.sort();
        c1s.dedup();
        assert_eq!(c1s.len(), 50);
        assert_eq!(cv.mode(), NonceMode::Fresh);
    }

    #[test]
    fn zero_element_rejected() {
        let keys = toy();
        let v = PlainVector::from_elements(vec![1, 0, 3]).unwrap();
        let err = encrypt_vector(&keys.public, &v, EncryptMode::Fresh, &mut rng()).unwrap_err();
        assert!(matches!(err, Error::ZeroElement { index: 1 }));
        assert!(err.to_string().contains("zero-offset convention"));
    }

    #[test]
    fn negative_elements_round_trip() {
        let keys = toy();
        let v = PlainVector::from_elements(vec![-3, 4, -1000]).unwrap();
        let cv = encrypt_vector(&keys.public, &v, EncryptMode::Fresh, &mut rng()).unwrap();
        assert_eq!(
            decrypt_vector(&keys.public, &keys.private, &cv)
                .unwrap()
                .elements(),
            v.elements()
        );
    }

    #[test]
    fn decrypt_error_names_element() {
        let keys = toy();
        let v = PlainVector::from_elements(vec![1, 2]).unwrap();
        let cv = encrypt_vector(&keys.public, &v, EncryptMode::Fresh, &mut rng()).unwrap();
        let mut elements = cv.elements().to_vec();
        elements[1].c2 = BigUint::from(0u32);
        let broken = EncryptedVector::from_parts(elements, 2, None).unwrap();
        let err = decrypt_vector(&keys.public, &keys.private, &broken).unwrap_err();
        assert!(matches!(err, Error::Element { index: 1, .. }));
    }

    #[test]
    fn feature_weights_worked_example() {
        let a = PlainVector::from_elements(vec![1, 2, 3]).unwrap();
        let b = PlainVector::from_elements(vec![1, 3, 5]).unwrap();
        let w = feature_similarity_weights(&a, &b).unwrap();
        assert!((w.get(0, 1) - 0.98058).abs() < 1e-5);
        assert!((w.get(0, 2) - 0.97014).abs() < 1e-5);
        assert!((w.get(1, 2) - 0.99887).abs() < 1e-5);
        for k in 0..3 {
            assert_eq!(w.get(k, k), 1.0);
        }
        // oracle: cos of columns (1,1) and (2,3)
        let direct = (1.0 * 2.0 + 1.0 * 3.0) / (2f64.sqrt() * 13f64.sqrt());
        assert!((w.get(0, 1) - direct).abs() < 1e-15);
    }

    #[test]
    fn feature_weights_reject_zero_column() {
        let a = PlainVector::from_elements(vec![1, 0, 3]).unwrap();
        let b = PlainVector::from_elements(vec![1, 0, 5]).unwrap();
        assert!(matches!(
            feature_similarity_weights(&a, &b),
            Err(Error::UndefinedFeatureWeight { index: 1 })
        ));
    }

    #[test]
    fn scaling_rounds() {
        let mut values = WeightMatrix::identity(2).values().to_vec();
        values[1] = 0.98058;
        values[2] = 0.98058;
        let w = WeightMatrix::new(2, values).unwrap();
        let s = scale_weights(&w, 100_000).unwrap();
        assert_eq!(s.get(0, 1), 98_058);
        assert_eq!(s.get(0, 0), 100_000);

        let id = scale_weights(&WeightMatrix::identity(3), 7).unwrap();
        assert_eq!(id.values(), &[7, 0, 0, 0, 7, 0, 0, 0, 7]);

        let mut values = WeightMatrix::identity(2).values().to_vec();
        values[1] = 0.49;
        values[2] = 0.49;
        let coarse = scale_weights(&WeightMatrix::new(2, values).unwrap(), 1).unwrap();
        assert_eq!(coarse.get(0, 1), 0);
    }

    #[test]
    fn weight_matrix_validation() {
        assert!(WeightMatrix::new(2, vec![1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(WeightMatrix::new(2, vec![0.9, 0.5, 0.5, 1.0]).is_err());
        assert!(WeightMatrix::new(2, vec![1.0, 1.5, 1.5, 1.0]).is_err());
        assert!(ScaledWeightMatrix::new(2, 10, vec![10, 3, 4, 10]).is_err());
        assert!(ScaledWeightMatrix::new(2, 10, vec![10, 11, 11, 10]).is_err());
    }

    #[test]
    fn weights_encrypt_and_round_trip() {
        let keys = toy();
        let a = PlainVector::from_elements(vec![1, 2, 3]).unwrap();
        let b = PlainVector::from_elements(vec![1, 3, 5]).unwrap();
        let sw = scale_weights(&feature_similarity_weights(&a, &b).unwrap(), 100_000).unwrap();
        for shared in [false, true] {
            let nonce = SharedNonce::random(&keys.public, &mut rng());
            let mode = if shared {
                EncryptMode::Shared(&nonce)
            } else {
                EncryptMode::Fresh
            };
            let cw = encrypt_weights(&keys.public, &sw, mode, &mut rng()).unwrap();
            assert_eq!(
                decrypt_weights(&keys.public, &keys.private, &cw).unwrap(),
                sw
            );
            match cw.get(1, 1) {
                EncryptedWeight::Cipher(ct) => assert_eq!(
                    elgamal::decrypt(&keys.public, &keys.private, ct).unwrap(),
                    BigInt::from(100_000)
                ),
                EncryptedWeight::Zero => panic!("diagonal must be encrypted"),
            }
        }
    }

    #[test]
    fn zero_weights_become_markers() {
        let keys = toy();
        let sw = scale_weights(&WeightMatrix::identity(2), 10).unwrap();
        let cw = encrypt_weights(&keys.public, &sw, EncryptMode::Fresh, &mut rng()).unwrap();
        assert_eq!(cw.get(0, 1), &EncryptedWeight::Zero);
        assert!(matches!(cw.get(0, 0), EncryptedWeight::Cipher(_)));
    }

    #[test]
    fn capacity_examples() {
        let keys = toy();
        let r = capacity_check(&keys.public, 3, 5, 1, SimilarityKind::Cosine);
        assert!(r.passes);
        assert_eq!(r.required, BigUint::from(75u32));
        let r = capacity_check(&keys.public, 3, 5, 100_000, SimilarityKind::SoftCosine);
        assert!(r.passes);
        assert_eq!(r.required, BigUint::from(22_500_000u32));
        // largest bound passes, one more fails
        let max: u64 = r.max_bound.clone().try_into().unwrap();
        assert!(capacity_check(&keys.public, 3, max, 100_000, SimilarityKind::SoftCosine).passes);
        assert!(
            !capacity_check(
                &keys.public,
                3,
                max + 1,
                100_000,
                SimilarityKind::SoftCosine
            )
            .passes
        );
    }

    #[test]
    fn capacity_at_1024_bits() {
        let keys = keygen(
            KeySize::Strength(crate::elgamal::SecurityStrength::Bits80),
            &mut ChaCha20Rng::seed_from_u64(80),
        )
        .unwrap();
        let r = capacity_check(
            &keys.public,
            1000,
            1_000_000,
            1_000_000,
            SimilarityKind::SoftCosine,
        );
        assert!(r.passes);
        assert_eq!(r.required, BigUint::from(10u32).pow(24));
    }

    proptest! {
        #[test]
        fn vector_round_trip_both_modes(
            xs in proptest::collection::vec((1i64..1_000_000).prop_union(-1_000_000i64..-1), 1..20),
            shared in any::<bool>(),
            seed in any::<u64>(),
        ) {
            let keys = toy();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let nonce = SharedNonce::random(&keys.public, &mut rng);
            let mode = if shared { EncryptMode::Shared(&nonce) } else { EncryptMode::Fresh };
            let v = PlainVector::from_elements(xs).unwrap();
            let cv = encrypt_vector(&keys.public, &v, mode, &mut rng).unwrap();
            if shared {
                prop_assert!(cv.elements().iter().all(|ct| &ct.c1 == nonce.c1()));
            }
            prop_assert_eq!(decrypt_vector(&keys.public, &keys.private, &cv).unwrap(), v);
        }

        #[test]
        fn feature_weights_symmetric_unit_diagonal(
            pairs in proptest::collection::vec((-1000i64..1000, 1i64..1000), 1..12),
        ) {
            let (a, b): (Vec<i64>, Vec<i64>) = pairs.into_iter().unzip();
            let a = PlainVector::from_elements(a).unwrap_or_else(|_| unreachable!());
            let b = PlainVector::from_elements(b).unwrap();
            let w = feature_similarity_weights(&a, &b).unwrap();
            // re-validates symmetry, unit diagonal and range
            prop_assert!(WeightMatrix::new(w.dim(), w.values().to_vec()).is_ok());
        }
    }
}
