//! Modular big-integer arithmetic and prime/generator generation.
//!
//! Prime searches draw a random odd starting point, sieve a window of
//! candidates against every small prime below 2^16, and only run
//! Miller-Rabin on the survivors. All searches consume randomness solely
//! from the caller's generator, so a seeded generator yields a reproducible
//! prime.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Miller-Rabin rounds used for every prime this module emits.
pub const PRIME_ROUNDS: u32 = 64;

/// Trial division bound for `is_probable_prime`.
const SMALL_PRIME_BOUND: u32 = 1 << 16;
/// Candidate sieves use every prime below this.
const SIEVE_PRIME_BOUND: u32 = 1 << 20;
const SIEVE_WINDOW: usize = 1 << 14;

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = SIEVE_PRIME_BOUND as usize;
        let mut is_composite = vec![false; n];
        let mut primes = Vec::new();
        for i in 2..n {
            if !is_composite[i] {
                primes.push(i as u32);
                let mut j = i * i;
                while j < n {
                    is_composite[j] = true;
                    j += i;
                }
            }
        }
        primes
    })
}

fn check_modulus(m: &BigUint) -> Result<()> {
    if *m < BigUint::from(2u32) {
        return Err(Error::InvalidModulus);
    }
    Ok(())
}

/// Reduces a signed integer to its representative in `[0, m)`.
pub fn reduce(a: &BigInt, m: &BigUint) -> BigUint {
    let m_signed = BigInt::from_biguint(Sign::Plus, m.clone());
    a.mod_floor(&m_signed)
        .to_biguint()
        .expect("mod_floor by a positive modulus is non-negative")
}

/// `base^exp mod m` by Montgomery square-and-multiply.
pub fn mod_pow(base: &BigInt, exp: &BigUint, m: &BigUint) -> Result<BigUint> {
    check_modulus(m)?;
    Ok(reduce(base, m).modpow(exp, m))
}

/// Inverse of `a` modulo `m` via the extended Euclidean algorithm.
pub fn mod_inv(a: &BigInt, m: &BigUint) -> Result<BigUint> {
    check_modulus(m)?;
    let m_signed = BigInt::from_biguint(Sign::Plus, m.clone());
    let a = a.mod_floor(&m_signed);
    let egcd = a.extended_gcd(&m_signed);
    if !egcd.gcd.is_one() {
        return Err(Error::NoModularInverse);
    }
    Ok(reduce(&egcd.x, m))
}

/// Probabilistic primality test: trial division by the primes below 2^16,
/// then `rounds` Miller-Rabin rounds (base 2 first, then random bases).
///
/// Bases come from the thread-local generator; use
/// [`is_probable_prime_with`] to supply one.
pub fn is_probable_prime(n: &BigUint, rounds: u32) -> bool {
    is_probable_prime_with(n, rounds, &mut rand::thread_rng())
}

pub fn is_probable_prime_with<R: Rng + ?Sized>(n: &BigUint, rounds: u32, rng: &mut R) -> bool {
    if *n <= BigUint::one() {
        return false;
    }
    let bound = BigUint::from(SMALL_PRIME_BOUND);
    for &s in primes_below(&bound) {
        if *n == BigUint::from(s) {
            return true;
        }
        if (n % s).is_zero() {
            return false;
        }
    }
    if *n < &bound * &bound {
        // no factor below sqrt(n)
        return true;
    }
    miller_rabin(n, rounds.max(1), rng)
}

/// Miller-Rabin on an odd `n >= 5`.
fn miller_rabin<R: Rng + ?Sized>(n: &BigUint, rounds: u32, rng: &mut R) -> bool {
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    let n_minus_1 = n - &one;
    let s = n_minus_1
        .trailing_zeros()
        .expect("n - 1 is nonzero for n >= 5");
    let d = &n_minus_1 >> s;

    for round in 0..rounds {
        let a = if round == 0 {
            two.clone()
        } else {
            rng.gen_biguint_range(&two, &n_minus_1)
        };
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        let mut composite = true;
        for _ in 1..s {
            x = &x * &x % n;
            if x == n_minus_1 {
                composite = false;
                break;
            }
        }
        if composite {
            return false;
        }
    }
    true
}

/// Arithmetic progression `start + step * i` used by the window sieve.
struct Progression {
    start: BigUint,
    step: BigUint,
}

fn inv_mod_small(b: u64, s: u64) -> u64 {
    // extended Euclid; b and s are coprime
    let (mut r0, mut r1) = (s as i64, (b % s) as i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    t0.rem_euclid(s as i64) as u64
}

/// Marks every index `i < len` for which some progression term is divisible
/// by a prime in `primes`. Callers guarantee every term exceeds every prime.
fn sieve_window(progressions: &[Progression], len: usize, primes: &[u32]) -> Vec<bool> {
    let mut composite = vec![false; len];
    for &s in primes.iter().filter(|&&s| s > 2) {
        let s64 = u64::from(s);
        for prog in progressions {
            let a = (&prog.start % s).to_u64().unwrap_or(0);
            let b = (&prog.step % s).to_u64().unwrap_or(0);
            if b == 0 {
                continue;
            }
            let first = (s64 - a) % s64 * inv_mod_small(b, s64) % s64;
            let mut i = first as usize;
            while i < len {
                composite[i] = true;
                i += s as usize;
            }
        }
    }
    composite
}

/// Sieve primes strictly below `limit`.
fn primes_below(limit: &BigUint) -> &'static [u32] {
    let all = small_primes();
    let cut = match limit.to_u32() {
        Some(l) => all.partition_point(|&s| s < l),
        None => all.len(),
    };
    &all[..cut]
}

/// Random odd integer with exactly `bits` bits and the top two bits set.
fn random_candidate<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    let mut c = rng.gen_biguint(bits);
    c.set_bit(bits - 1, true);
    c.set_bit(bits - 2, true);
    c.set_bit(0, true);
    c
}

/// Random prime with exactly `bits` bits (top two bits set).
pub fn gen_prime<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> Result<BigUint> {
    if bits < 16 {
        return Err(Error::InvalidParameter(format!(
            "prime size must be at least 16 bits, got {bits}"
        )));
    }
    let upper = BigUint::one() << bits;
    let min = BigUint::from(3u32) << (bits - 2);
    let primes = primes_below(&min);
    loop {
        let start = random_candidate(bits, rng);
        let room = ((&upper - &start - 1u32) >> 1u32) + 1u32;
        let len = room.to_usize().unwrap_or(SIEVE_WINDOW).min(SIEVE_WINDOW);
        let two = BigUint::from(2u32);
        let marks = sieve_window(
            &[Progression {
                start: start.clone(),
                step: two.clone(),
            }],
            len,
            primes,
        );
        for (i, _) in marks.iter().enumerate().filter(|(_, &m)| !m) {
            let candidate = &start + &two * i;
            if miller_rabin(&candidate, PRIME_ROUNDS, rng) {
                return Ok(candidate);
            }
        }
    }
}

/// Safe prime `p = 2u + 1` with `u` prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafePrimePair {
    pub p: BigUint,
    pub u: BigUint,
}

impl SafePrimePair {
    /// Checks both primality conditions and the `p = 2u + 1` relation.
    pub fn verify(&self, rounds: u32) -> bool {
        self.p == (&self.u << 1u32) + 1u32
            && is_probable_prime(&self.u, rounds)
            && is_probable_prime(&self.p, rounds)
    }
}

/// Generates a safe prime of exactly `bits` bits.
///
/// `u` is drawn with `bits - 1` bits and its top two bits set, so `p` has
/// exactly `bits` bits. A window of `u` candidates is sieved against both
/// `u` and `2u + 1` before any exponentiation.
pub fn gen_safe_prime<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> Result<SafePrimePair> {
    if bits < 16 {
        return Err(Error::InvalidParameter(format!(
            "safe prime size must be at least 16 bits, got {bits}"
        )));
    }
    let u_bits = bits - 1;
    let upper = BigUint::one() << u_bits;
    let u_min = BigUint::from(3u32) << (u_bits - 2);
    let primes = primes_below(&u_min);
    let two = BigUint::from(2u32);
    loop {
        let u0 = random_candidate(u_bits, rng);
        let room = ((&upper - &u0 - 1u32) >> 1u32) + 1u32;
        let len = room.to_usize().unwrap_or(SIEVE_WINDOW).min(SIEVE_WINDOW);
        let progressions = [
            Progression {
                start: u0.clone(),
                step: two.clone(),
            },
            Progression {
                start: (&u0 << 1u32) + 1u32,
                step: BigUint::from(4u32),
            },
        ];
        let marks = sieve_window(&progressions, len, primes);
        for (i, _) in marks.iter().enumerate().filter(|(_, &m)| !m) {
            let u = &u0 + &two * i;
            let p = (&u << 1u32) + 1u32;
            if miller_rabin(&p, PRIME_ROUNDS, rng) && miller_rabin(&u, PRIME_ROUNDS, rng) {
                return Ok(SafePrimePair { p, u });
            }
        }
    }
}

/// Finds a generator of the full multiplicative group of a safe prime.
///
/// The group has order `2u`, so `g` generates it iff `g^2 != 1` and
/// `g^u != 1`.
pub fn find_generator<R: Rng + ?Sized>(pair: &SafePrimePair, rng: &mut R) -> BigUint {
    let two = BigUint::from(2u32);
    let p_minus_1 = &pair.p - 1u32;
    let one = BigUint::one();
    loop {
        // [2, p-2]
        let g = rng.gen_biguint_range(&two, &p_minus_1);
        if g.modpow(&two, &pair.p) != one && g.modpow(&pair.u, &pair.p) != one {
            return g;
        }
    }
}

/// Prime `p = 2 * cofactor * order + 1` with a large prime-order subgroup.
///
/// Used for moduli where a safe-prime search is impractical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgroupPrime {
    pub p: BigUint,
    pub order: BigUint,
}

/// Generates `p` of exactly `bits` bits with a prime `order` of
/// `order_bits` bits dividing `p - 1`.
pub fn gen_subgroup_prime<R: Rng + ?Sized>(
    bits: u64,
    order_bits: u64,
    rng: &mut R,
) -> Result<SubgroupPrime> {
    if order_bits < 16 || bits < order_bits + 8 {
        return Err(Error::InvalidParameter(format!(
            "cannot fit a {order_bits}-bit subgroup into a {bits}-bit modulus"
        )));
    }
    let order = gen_prime(order_bits, rng)?;
    let step = &order << 1u32;
    let lo = BigUint::from(3u32) << (bits - 2);
    let hi = BigUint::one() << bits;
    // p = step * k + 1 with p in [lo, hi)
    let k_min = (&lo - 1u32 + &step - 1u32) / &step;
    let k_max = (&hi - 2u32) / &step;
    let primes = primes_below(&lo);
    loop {
        let k0 = rng.gen_biguint_range(&k_min, &(&k_max + 1u32));
        let room = &k_max - &k0 + 1u32;
        let len = room.to_usize().unwrap_or(SIEVE_WINDOW).min(SIEVE_WINDOW);
        let start = &step * &k0 + 1u32;
        let marks = sieve_window(
            &[Progression {
                start: start.clone(),
                step: step.clone(),
            }],
            len,
            primes,
        );
        for (i, _) in marks.iter().enumerate().filter(|(_, &m)| !m) {
            let p = &start + &step * i;
            if miller_rabin(&p, PRIME_ROUNDS, rng) {
                return Ok(SubgroupPrime { p, order });
            }
        }
    }
}

/// Finds an element of exact order `group.order`.
pub fn find_subgroup_generator<R: Rng + ?Sized>(group: &SubgroupPrime, rng: &mut R) -> BigUint {
    let two = BigUint::from(2u32);
    let p_minus_1 = &group.p - 1u32;
    let cofactor = &p_minus_1 / &group.order;
    loop {
        let h = rng.gen_biguint_range(&two, &p_minus_1);
        let g = h.modpow(&cofactor, &group.p);
        if !g.is_one() {
            return g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    const TOY_P: u64 = 2_932_031_007_403;

    #[test]
    fn small_inverses() {
        for &s in &small_primes()[1..40] {
            let s = u64::from(s);
            for b in 1..s {
                assert_eq!(b * inv_mod_small(b, s) % s, 1, "{b} mod {s}");
            }
        }
        assert_eq!(inv_mod_small(4, 1_048_573) * 4 % 1_048_573, 1);
    }

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn ubig(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn is_prime_brute(n: u64) -> bool {
        n >= 2
            && (2..)
                .take_while(|d| d * d <= n)
                .all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn mod_pow_toy_values() {
        let p = ubig(TOY_P);
        assert_eq!(mod_pow(&big(3), &ubig(5), &p).unwrap(), ubig(243));
        assert_eq!(mod_pow(&big(243), &ubig(2), &p).unwrap(), ubig(59049));
        assert_eq!(mod_pow(&big(12345), &ubig(0), &p).unwrap(), ubig(1));
        assert_eq!(mod_pow(&big(-2), &ubig(3), &ubig(11)).unwrap(), ubig(3));
    }

    #[test]
    fn mod_pow_rejects_degenerate_modulus() {
        assert!(matches!(
            mod_pow(&big(3), &ubig(2), &ubig(0)),
            Err(Error::InvalidModulus)
        ));
        assert!(matches!(
            mod_pow(&big(3), &ubig(2), &ubig(1)),
            Err(Error::InvalidModulus)
        ));
    }

    #[test]
    fn mod_inv_examples() {
        assert_eq!(mod_inv(&big(3), &ubig(7)).unwrap(), ubig(5));
        let p = ubig(TOY_P);
        let inv = mod_inv(&big(59049), &p).unwrap();
        assert_eq!(inv.clone() * 59049u32 % &p, ubig(1));
        assert!(matches!(
            mod_inv(&big(6), &ubig(9)),
            Err(Error::NoModularInverse)
        ));
        assert_eq!(mod_inv(&big(-3), &ubig(7)).unwrap(), ubig(2));
    }

    #[test]
    fn primality_examples() {
        assert!(is_probable_prime(&ubig(TOY_P), 64));
        assert!(!is_probable_prime(&ubig(1), 64));
        assert!(!is_probable_prime(&ubig(0), 64));
        assert!(is_probable_prime(&ubig(2), 64));
        assert!(is_probable_prime(&ubig(65521), 64));
        assert!(!is_probable_prime(&ubig(65521 * 65519), 64));
        // Carmichael number
        assert!(!is_probable_prime(&ubig(561), 64));
        assert!(!is_probable_prime(&ubig(3_215_031_751), 64));
    }

    #[test]
    fn product_of_two_generated_primes_is_composite() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let a = gen_prime(64, &mut rng).unwrap();
        let b = gen_prime(64, &mut rng).unwrap();
        assert_eq!(a.bits(), 64);
        assert!(is_probable_prime(&a, 64) && is_probable_prime(&b, 64));
        assert!(!is_probable_prime(&(&a * &b), 64));
    }

    #[test]
    fn small_safe_prime_verified_by_brute_force() {
        for seed in 0..20 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let pair = gen_safe_prime(16, &mut rng).unwrap();
            let p = pair.p.to_u64().unwrap();
            assert_eq!(pair.p.bits(), 16);
            assert!(is_prime_brute(p), "p = {p}");
            assert!(is_prime_brute((p - 1) / 2), "u = {}", (p - 1) / 2);
            assert_eq!(pair.u, ubig((p - 1) / 2));
        }
    }

    #[test]
    fn safe_prime_1024_bits() {
        let mut rng = ChaCha20Rng::seed_from_u64(80);
        let pair = gen_safe_prime(1024, &mut rng).unwrap();
        assert_eq!(pair.p.bits(), 1024);
        assert!(pair.verify(64));
    }

    #[test]
    fn safe_prime_is_deterministic_per_seed() {
        let a = gen_safe_prime(256, &mut ChaCha20Rng::seed_from_u64(5)).unwrap();
        let b = gen_safe_prime(256, &mut ChaCha20Rng::seed_from_u64(5)).unwrap();
        let c = gen_safe_prime(256, &mut ChaCha20Rng::seed_from_u64(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn safe_prime_rejects_tiny_sizes() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(gen_safe_prime(15, &mut rng).is_err());
    }

    #[test]
    fn generator_of_eleven_by_enumeration() {
        // powers of 2 mod 11 cover all ten residues
        let mut seen: Vec<u64> = (1..=10).map(|e| (1u64 << e) % 11).collect();
        seen.sort_unstable();
        assert_eq!(seen, (1..=10).collect::<Vec<_>>());

        let pair = SafePrimePair {
            p: ubig(11),
            u: ubig(5),
        };
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..50 {
            let g = find_generator(&pair, &mut rng).to_u64().unwrap();
            let order = (1..=10u64)
                .find(|&e| {
                    mod_pow(&big(g as i64), &ubig(e), &ubig(11))
                        .unwrap()
                        .is_one()
                })
                .unwrap();
            assert_eq!(order, 10, "g = {g}");
        }
    }

    #[test]
    fn generator_has_u_power_minus_one() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let pair = gen_safe_prime(256, &mut rng).unwrap();
        for _ in 0..5 {
            let g = find_generator(&pair, &mut rng);
            assert!(!g.is_one());
            assert_eq!(g.modpow(&pair.u, &pair.p), &pair.p - 1u32);
        }
    }

    #[test]
    fn subgroup_prime_structure() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let group = gen_subgroup_prime(512, 160, &mut rng).unwrap();
        assert_eq!(group.p.bits(), 512);
        assert_eq!(group.order.bits(), 160);
        assert!(is_probable_prime(&group.p, 64));
        assert!(is_probable_prime(&group.order, 64));
        assert!(((&group.p - 1u32) % &group.order).is_zero());
        let g = find_subgroup_generator(&group, &mut rng);
        assert!(g.modpow(&group.order, &group.p).is_one());
        assert!(!g.is_one());
    }

    proptest! {
        #[test]
        fn mod_inv_multiplies_back(a in 1u64..TOY_P) {
            let p = ubig(TOY_P);
            let inv = mod_inv(&big(a as i64), &p).unwrap();
            prop_assert_eq!(inv * a % &p, ubig(1));
        }

        #[test]
        fn mod_pow_is_multiplicative(a in 0u64..1 << 40, b in 0u64..1 << 40, e in 0u64..1 << 20, m in 2u64..1 << 40) {
            let m_big = ubig(m);
            let lhs = mod_pow(&big(((a as u128 * b as u128) % m as u128) as i64), &ubig(e), &m_big).unwrap();
            let rhs = mod_pow(&big(a as i64), &ubig(e), &m_big).unwrap()
                * mod_pow(&big(b as i64), &ubig(e), &m_big).unwrap() % &m_big;
            prop_assert_eq!(lhs, rhs);
        }
    }
}
