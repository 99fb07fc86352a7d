//! ElGamal over `Z_p^*` with signed plaintexts and the multiplicative
//! homomorphism.
//!
//! A ciphertext of `m` under nonce `r` is `(g^r, m * Q^r) mod p`. Plaintexts
//! are signed integers with `1 <= |m| <= (p-1)/2`; negatives are stored as
//! `p + m` and recovered by a centered lift on decryption. Zero has no image
//! in the multiplicative group and is rejected.

use std::fmt;

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::modmath::{self, PRIME_ROUNDS};

/// Modulus used by the small worked example (`p = 2932031007403`, `g = 3`).
pub const TOY_MODULUS: u64 = 2_932_031_007_403;
pub const TOY_GENERATOR: u64 = 3;

/// Largest modulus generated as a safe prime. Beyond this, keygen switches
/// to a prime with a large prime-order subgroup.
pub const SAFE_PRIME_MAX_BITS: u64 = 4096;

/// NIST security strength and its equivalent modulus length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SecurityStrength {
    Bits80,
    Bits112,
    Bits128,
    Bits192,
    Bits256,
}

impl SecurityStrength {
    pub const ALL: [SecurityStrength; 5] = [
        SecurityStrength::Bits80,
        SecurityStrength::Bits112,
        SecurityStrength::Bits128,
        SecurityStrength::Bits192,
        SecurityStrength::Bits256,
    ];

    pub fn bits_of_security(self) -> u32 {
        match self {
            SecurityStrength::Bits80 => 80,
            SecurityStrength::Bits112 => 112,
            SecurityStrength::Bits128 => 128,
            SecurityStrength::Bits192 => 192,
            SecurityStrength::Bits256 => 256,
        }
    }

    pub fn modulus_bits(self) -> u64 {
        match self {
            SecurityStrength::Bits80 => 1024,
            SecurityStrength::Bits112 => 2048,
            SecurityStrength::Bits128 => 3072,
            SecurityStrength::Bits192 => 7680,
            SecurityStrength::Bits256 => 15360,
        }
    }

    pub fn from_bits_of_security(bits: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.bits_of_security() == bits)
    }
}

impl fmt::Display for SecurityStrength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bits_of_security())
    }
}

/// What size of key to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeySize {
    /// The fixed toy modulus with generator 3; only the secret is random.
    Toy,
    Strength(SecurityStrength),
    Bits(u64),
}

impl KeySize {
    pub fn modulus_bits(self) -> u64 {
        match self {
            KeySize::Toy => BigUint::from(TOY_MODULUS).bits(),
            KeySize::Strength(s) => s.modulus_bits(),
            KeySize::Bits(b) => b,
        }
    }
}

/// Public half of a key: modulus `p`, generator `g`, public key `Q = g^q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicParams {
    modulus: BigUint,
    generator: BigUint,
    public_key: BigUint,
    half: BigUint,
}

impl PublicParams {
    /// Validates ranges and runs a full-strength primality check on `p`.
    pub fn new(modulus: BigUint, generator: BigUint, public_key: BigUint) -> Result<Self> {
        if modulus < BigUint::from(5u32) || !modmath::is_probable_prime(&modulus, PRIME_ROUNDS) {
            return Err(Error::InvalidParameter(
                "modulus is not a prime >= 5".into(),
            ));
        }
        Self::checked_ranges(modulus, generator, public_key)
    }

    fn checked_ranges(modulus: BigUint, generator: BigUint, public_key: BigUint) -> Result<Self> {
        let p_minus_2 = &modulus - 2u32;
        if generator < BigUint::from(2u32) || generator > p_minus_2 {
            return Err(Error::InvalidParameter(
                "generator must lie in [2, p-2]".into(),
            ));
        }
        if public_key.is_zero() || public_key >= modulus {
            return Err(Error::InvalidParameter(
                "public key must lie in [1, p-1]".into(),
            ));
        }
        let half = (&modulus - 1u32) >> 1u32;
        Ok(PublicParams {
            modulus,
            generator,
            public_key,
            half,
        })
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn generator(&self) -> &BigUint {
        &self.generator
    }

    pub fn public_key(&self) -> &BigUint {
        &self.public_key
    }

    pub fn modulus_bits(&self) -> u64 {
        self.modulus.bits()
    }

    /// `(p - 1) / 2`, the largest encodable plaintext magnitude.
    pub fn half_range(&self) -> &BigUint {
        &self.half
    }

    /// Uniform nonce in `[1, p-2]`.
    pub fn random_nonce<R: Rng + ?Sized>(&self, rng: &mut R) -> BigUint {
        rng.gen_biguint_range(&BigUint::one(), &(&self.modulus - 1u32))
    }

    /// Maps a signed plaintext to its residue, enforcing `1 <= |m| <= (p-1)/2`.
    pub(crate) fn encode(&self, m: &BigInt) -> Result<BigUint> {
        if m.is_zero() {
            return Err(Error::ZeroPlaintext);
        }
        if m.magnitude() > &self.half {
            return Err(Error::PlaintextOutOfRange);
        }
        Ok(modmath::reduce(m, &self.modulus))
    }

    /// Centered lift of a residue into `(-p/2, p/2]`.
    pub(crate) fn lift(&self, v: BigUint) -> BigInt {
        if v <= self.half {
            BigInt::from_biguint(Sign::Plus, v)
        } else {
            BigInt::from_biguint(Sign::Plus, v)
                - BigInt::from_biguint(Sign::Plus, self.modulus.clone())
        }
    }

    pub(crate) fn in_group(&self, v: &BigUint) -> bool {
        !v.is_zero() && *v < self.modulus
    }
}

/// Secret exponent `q`.
#[derive(Clone, PartialEq, Eq)]
pub struct PrivateKey {
    exponent: BigUint,
}

impl fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PrivateKey(..)")
    }
}

impl PrivateKey {
    pub fn exponent(&self) -> &BigUint {
        &self.exponent
    }

    /// Recomputes the mask `c1^q` a ciphertext was blinded with.
    pub fn mask(&self, params: &PublicParams, c1: &BigUint) -> Result<BigUint> {
        if !params.in_group(c1) {
            return Err(Error::CorruptCiphertext);
        }
        Ok(c1.modpow(&self.exponent, &params.modulus))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub public: PublicParams,
    pub private: PrivateKey,
}

impl KeyPair {
    /// Builds a key pair from `p`, `g` and the secret `q`, deriving `Q`.
    pub fn from_secret(modulus: BigUint, generator: BigUint, secret: BigUint) -> Result<Self> {
        if modulus < BigUint::from(5u32) {
            return Err(Error::InvalidParameter(
                "modulus is not a prime >= 5".into(),
            ));
        }
        let public_key = generator.modpow(&secret, &modulus);
        let public = PublicParams::new(modulus, generator, public_key)?;
        Self::assemble(public, secret)
    }

    /// Pairs public parameters with a secret, checking `Q = g^q`.
    pub fn assemble(public: PublicParams, secret: BigUint) -> Result<Self> {
        if secret.is_zero() || secret > &public.modulus - 2u32 {
            return Err(Error::InvalidParameter(
                "private exponent must lie in [1, p-2]".into(),
            ));
        }
        if public.generator.modpow(&secret, &public.modulus) != public.public_key {
            return Err(Error::InvalidParameter(
                "public key does not match private exponent".into(),
            ));
        }
        Ok(KeyPair {
            public,
            private: PrivateKey { exponent: secret },
        })
    }

    /// The worked-example key: toy modulus, `g = 3`, caller-chosen secret.
    pub fn toy(secret: u64) -> Result<Self> {
        Self::from_secret(
            BigUint::from(TOY_MODULUS),
            BigUint::from(TOY_GENERATOR),
            BigUint::from(secret),
        )
    }
}

/// Subgroup order used for moduli above [`SAFE_PRIME_MAX_BITS`].
fn subgroup_order_bits(modulus_bits: u64) -> u64 {
    if modulus_bits <= 7680 {
        384
    } else {
        512
    }
}

/// Generates a key pair. The secret `q` is uniform in `[2, p-2]`.
pub fn keygen<R: Rng + ?Sized>(size: KeySize, rng: &mut R) -> Result<KeyPair> {
    let (modulus, generator) = match size {
        KeySize::Toy => (BigUint::from(TOY_MODULUS), BigUint::from(TOY_GENERATOR)),
        _ => {
            let bits = size.modulus_bits();
            if bits < 16 {
                return Err(Error::InvalidParameter(format!(
                    "modulus must have at least 16 bits, got {bits}"
                )));
            }
            if bits <= SAFE_PRIME_MAX_BITS {
                let pair = modmath::gen_safe_prime(bits, rng)?;
                let g = modmath::find_generator(&pair, rng);
                (pair.p, g)
            } else {
                let group = modmath::gen_subgroup_prime(bits, subgroup_order_bits(bits), rng)?;
                let g = modmath::find_subgroup_generator(&group, rng);
                (group.p, g)
            }
        }
    };
    let secret = rng.gen_biguint_range(&BigUint::from(2u32), &(&modulus - 1u32));
    let public_key = generator.modpow(&secret, &modulus);
    // primality already established by the generator
    let public = PublicParams::checked_ranges(modulus, generator, public_key)?;
    Ok(KeyPair {
        public,
        private: PrivateKey { exponent: secret },
    })
}

/// ElGamal ciphertext `(c1, c2)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ciphertext {
    pub c1: BigUint,
    pub c2: BigUint,
}

/// Encrypts `m` under a fresh nonce.
pub fn encrypt<R: Rng + ?Sized>(
    params: &PublicParams,
    m: &BigInt,
    rng: &mut R,
) -> Result<Ciphertext> {
    let r = params.random_nonce(rng);
    encrypt_with_nonce(params, m, &r)
}

/// Encrypts `m` under the given nonce `r` in `[1, p-2]`.
pub fn encrypt_with_nonce(params: &PublicParams, m: &BigInt, r: &BigUint) -> Result<Ciphertext> {
    if r.is_zero() || *r > &params.modulus - 2u32 {
        return Err(Error::InvalidParameter("nonce must lie in [1, p-2]".into()));
    }
    let residue = params.encode(m)?;
    let c1 = params.generator.modpow(r, &params.modulus);
    let mask = params.public_key.modpow(r, &params.modulus);
    Ok(Ciphertext {
        c1,
        c2: residue * mask % &params.modulus,
    })
}

/// Raw residue `c2 * (c1^q)^-1 mod p`, before the centered lift.
pub(crate) fn unmask(params: &PublicParams, sk: &PrivateKey, ct: &Ciphertext) -> Result<BigUint> {
    if !params.in_group(&ct.c2) {
        return Err(Error::CorruptCiphertext);
    }
    let mask = sk.mask(params, &ct.c1)?;
    let inv = modmath::mod_inv(&BigInt::from(mask), &params.modulus)
        .map_err(|_| Error::CorruptCiphertext)?;
    Ok(&ct.c2 * inv % &params.modulus)
}

/// Decrypts to the signed plaintext.
pub fn decrypt(params: &PublicParams, sk: &PrivateKey, ct: &Ciphertext) -> Result<BigInt> {
    Ok(params.lift(unmask(params, sk, ct)?))
}

/// Componentwise product; decrypts to the product of the plaintexts.
pub fn hom_mul(params: &PublicParams, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
    Ciphertext {
        c1: &a.c1 * &b.c1 % &params.modulus,
        c2: &a.c2 * &b.c2 % &params.modulus,
    }
}
