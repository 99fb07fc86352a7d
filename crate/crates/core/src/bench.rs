//! Timing harness: per security strength, encrypt two random vectors and
//! evaluate every similarity over the ciphertexts, reporting CSV rows
//! `strength,operation,total_ms`.
//!
//! Similarity values are checked against the plaintext oracle before any
//! row is returned, so a bench run doubles as a correctness run.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::elgamal::{keygen, KeyPair, KeySize, SecurityStrength};
use crate::encvec::{
    capacity_check, encrypt_vector_with, encrypt_weights, feature_similarity_weights,
    scale_weights, EncryptMode, NonceMode, PlainVector, SharedNonce, DEFAULT_WEIGHT_SCALE,
};
use crate::error::{Error, Result};
use crate::oracle::{plain_similarity, within_relative};
use crate::simeval::{encrypted_similarity_with, SimilarityKind};
use crate::Exec;

pub const CSV_HEADER: &str = "strength,operation,total_ms";

/// Relative tolerance for cosine, angular and Tanimoto against the oracle.
pub const EXACT_KIND_TOLERANCE: f64 = 1e-12;
/// Absolute tolerance for fixed-point soft cosine against real weights.
pub const SOFT_COSINE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BenchStrength {
    Toy,
    Level(SecurityStrength),
}

impl BenchStrength {
    pub fn key_size(self) -> KeySize {
        match self {
            BenchStrength::Toy => KeySize::Toy,
            BenchStrength::Level(s) => KeySize::Strength(s),
        }
    }
}

impl fmt::Display for BenchStrength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchStrength::Toy => f.write_str("toy"),
            BenchStrength::Level(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for BenchStrength {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "toy" {
            return Ok(BenchStrength::Toy);
        }
        s.parse::<u32>()
            .ok()
            .and_then(SecurityStrength::from_bits_of_security)
            .map(BenchStrength::Level)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown strength {s:?}; expected toy, 80, 112, 128, 192 or 256"
                ))
            })
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub strengths: Vec<BenchStrength>,
    pub n: usize,
    pub bound: u64,
    pub reps: u32,
    pub seed: u64,
    pub mode: NonceMode,
    /// Dimension used for the soft-cosine row; its cost is quadratic in n.
    pub soft_n: usize,
    pub scale: u64,
    pub exec: Exec,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            strengths: vec![
                BenchStrength::Level(SecurityStrength::Bits80),
                BenchStrength::Level(SecurityStrength::Bits112),
                BenchStrength::Level(SecurityStrength::Bits128),
            ],
            n: 1000,
            bound: 1000,
            reps: 1,
            seed: 0,
            mode: NonceMode::Shared,
            soft_n: 100,
            scale: DEFAULT_WEIGHT_SCALE,
            exec: Exec::Sequential,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        if self.strengths.is_empty() {
            return bad("at least one strength is required");
        }
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if self.soft_n == 0 || self.soft_n > self.n {
            return bad("soft-n must be between 1 and n");
        }
        if self.bound == 0 {
            return bad("element bound must be at least 1");
        }
        if self.reps == 0 {
            return bad("reps must be at least 1");
        }
        if self.scale == 0 {
            return bad("weight scale must be at least 1");
        }
        Ok(())
    }

    fn suffix(&self) -> &'static str {
        match self.exec {
            Exec::Sequential => "",
            Exec::Parallel => "_par",
        }
    }
}

/// Operations in report order.
pub const OPERATIONS: [&str; 5] = ["encrypt", "cosine", "angular", "tanimoto", "soft_cosine"];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub strength: BenchStrength,
    pub operation: String,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{:.3}\n",
                row.strength, row.operation, row.total_ms
            ));
        }
        out
    }

    /// Looks up a row by strength and operation name (suffix included).
    pub fn get(&self, strength: BenchStrength, operation: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.strength == strength && r.operation == operation)
            .map(|r| r.total_ms)
    }
}

pub fn random_vector<R: Rng + ?Sized>(n: usize, bound: u64, rng: &mut R) -> PlainVector {
    let elements = (0..n).map(|_| rng.gen_range(1..=bound as i64)).collect();
    PlainVector::new(elements, bound).expect("elements lie within the bound")
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Generates the keys for one strength from a seed-derived stream.
pub fn bench_keys(strength: BenchStrength, seed: u64) -> Result<KeyPair> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(1 + strength_tag(strength));
    keygen(strength.key_size(), &mut rng)
}

fn strength_tag(strength: BenchStrength) -> u64 {
    match strength {
        BenchStrength::Toy => 0,
        BenchStrength::Level(s) => s.bits_of_security() as u64,
    }
}

/// Runs the benchmark, generating keys with [`bench_keys`].
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    run_bench_with_keys(config, |s| bench_keys(s, config.seed))
}

/// Runs the benchmark with caller-supplied keys, so expensive keys can be
/// reused across runs.
pub fn run_bench_with_keys<F>(config: &BenchConfig, mut keys_for: F) -> Result<BenchReport>
where
    F: FnMut(BenchStrength) -> Result<KeyPair>,
{
    config.validate()?;
    let mut strengths = config.strengths.clone();
    strengths.sort();
    strengths.dedup();

    // the same vectors at every strength
    let mut vec_rng = ChaCha20Rng::seed_from_u64(config.seed);
    let a = random_vector(config.n, config.bound, &mut vec_rng);
    let b = random_vector(config.n, config.bound, &mut vec_rng);
    let a_soft = PlainVector::new(a.elements()[..config.soft_n].to_vec(), config.bound)?;
    let b_soft = PlainVector::new(b.elements()[..config.soft_n].to_vec(), config.bound)?;
    let weights = feature_similarity_weights(&a_soft, &b_soft)?;
    let scaled = scale_weights(&weights, config.scale)?;

    let mut report = BenchReport::default();
    for strength in strengths {
        let keys = keys_for(strength)?;
        let params = &keys.public;
        for (kind, n) in [
            (SimilarityKind::Cosine, config.n),
            (SimilarityKind::SoftCosine, config.soft_n),
        ] {
            let cap = capacity_check(params, n, config.bound, config.scale, kind);
            if !cap.passes {
                return Err(Error::CapacityExceeded(format!(
                    "strength {strength}: {kind} needs {} but (p-1)/2 is {}",
                    cap.required, cap.limit
                )));
            }
        }
        info!(
            "bench strength {strength}: {}-bit modulus",
            params.modulus_bits()
        );

        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        rng.set_stream(1000 + strength_tag(strength));
        // encryption time includes drawing the shared nonce
        let mut encrypt_ms = 0.0;
        let mut encrypted = None;
        for _ in 0..config.reps {
            let start = Instant::now();
            let nonce = match config.mode {
                NonceMode::Shared => Some(SharedNonce::random(params, &mut rng)),
                NonceMode::Fresh => None,
            };
            let mode = match &nonce {
                Some(n) => EncryptMode::Shared(n),
                None => EncryptMode::Fresh,
            };
            let ca = encrypt_vector_with(params, &a, mode, &mut rng, config.exec)?;
            let cb = encrypt_vector_with(params, &b, mode, &mut rng, config.exec)?;
            encrypt_ms += elapsed_ms(start);
            encrypted = Some((ca, cb, nonce));
        }
        let (ca, cb, nonce) = encrypted.expect("reps >= 1");
        let mode = match &nonce {
            Some(n) => EncryptMode::Shared(n),
            None => EncryptMode::Fresh,
        };
        let (ca_soft, cb_soft) = (ca.prefix(config.soft_n)?, cb.prefix(config.soft_n)?);
        let cw = encrypt_weights(params, &scaled, mode, &mut rng)?;

        let mut rows = vec![("encrypt", encrypt_ms / config.reps as f64)];
        for kind in SimilarityKind::ALL {
            let soft = kind == SimilarityKind::SoftCosine;
            let (ci, cj) = if soft {
                (&ca_soft, &cb_soft)
            } else {
                (&ca, &cb)
            };
            let w = soft.then_some(&cw);
            let mut total = 0.0;
            let mut result = None;
            for _ in 0..config.reps {
                let start = Instant::now();
                let r =
                    encrypted_similarity_with(params, &keys.private, ci, cj, kind, w, config.exec)?;
                total += elapsed_ms(start);
                result = Some(r);
            }
            let got = result.expect("reps >= 1").similarity;
            let (pa, pb) = if soft { (&a_soft, &b_soft) } else { (&a, &b) };
            let expected = plain_similarity(pa, pb, kind, Some(&weights))?.similarity;
            let ok = if soft {
                (got - expected).abs() <= SOFT_COSINE_TOLERANCE
            } else {
                within_relative(got, expected, EXACT_KIND_TOLERANCE)
            };
            if !ok {
                return Err(Error::BenchMismatch(format!(
                    "strength {strength}, {kind}: encrypted {got} vs oracle {expected}"
                )));
            }
            rows.push((kind.name(), total / config.reps as f64));
        }
        report
            .rows
            .extend(rows.into_iter().map(|(op, ms)| BenchRow {
                strength,
                operation: format!("{op}{}", config.suffix()),
                total_ms: ms,
            }));
    }
    Ok(report)
}
