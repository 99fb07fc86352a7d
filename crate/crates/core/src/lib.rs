//! Similarity search over ElGamal-encrypted integer vectors.
//!
//! ElGamal is multiplicatively homomorphic: the componentwise product of two
//! ciphertexts decrypts to the product of their plaintexts. Combined with a
//! shared encryption nonce, sums of such products can also be formed on
//! ciphertexts, which is enough to evaluate dot products, squared norms and
//! weighted double sums. Cosine, angular, Tanimoto and soft cosine
//! similarity are then finalized over the reals after decryption.
//!
//! ```
//! use homsim::elgamal::KeyPair;
//! use homsim::encvec::{encrypt_vector, EncryptMode, PlainVector, SharedNonce};
//! use homsim::simeval::{encrypted_similarity, SimilarityKind};
//! use num_bigint::BigUint;
//!
//! let keys = KeyPair::toy(5).unwrap();
//! let nonce = SharedNonce::from_exponent(&keys.public, &BigUint::from(2u32)).unwrap();
//! let mut rng = rand::thread_rng();
//! let a = PlainVector::from_elements(vec![1, 2, 3]).unwrap();
//! let b = PlainVector::from_elements(vec![1, 3, 5]).unwrap();
//! let ca = encrypt_vector(&keys.public, &a, EncryptMode::Shared(&nonce), &mut rng).unwrap();
//! let cb = encrypt_vector(&keys.public, &b, EncryptMode::Shared(&nonce), &mut rng).unwrap();
//! let r = encrypted_similarity(&keys.public, &keys.private, &ca, &cb, SimilarityKind::Cosine, None)
//!     .unwrap();
//! assert!((r.similarity - 0.99386).abs() < 1e-5);
//! ```

pub mod bench;
pub mod elgamal;
pub mod encvec;
pub mod error;
pub mod format;
pub mod modmath;
pub mod oracle;
pub mod simeval;

pub use error::{Error, Result};

/// Whether independent per-element work runs on the rayon pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Sequential,
    Parallel,
}
