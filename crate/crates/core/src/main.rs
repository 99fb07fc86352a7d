use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use homsim::bench::{run_bench, BenchConfig, BenchStrength};
use homsim::elgamal::{keygen, KeySize, SecurityStrength};
use homsim::encvec::{
    capacity_check, encrypt_vector_with, encrypt_weights, feature_similarity_weights,
    scale_weights, EncryptMode, NonceMode, SharedNonce, DEFAULT_WEIGHT_SCALE,
};
use homsim::format;
use homsim::simeval::{encrypted_similarity, SimilarityKind};
use homsim::{Error, Exec};

#[derive(Parser)]
#[command(
    name = "homsim",
    version,
    about = "Similarity over ElGamal-encrypted vectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a key pair, writing <out>.pub and <out>.key.
    Keygen(KeygenArgs),
    /// Encrypt plaintext vector files.
    Encrypt(EncryptArgs),
    /// Compute a similarity between two ciphertext vector files.
    Similarity(SimilarityArgs),
    /// Derive a scaled feature-similarity weight file from two plaintext vectors.
    Weights(WeightsArgs),
    /// Time encryption and similarity across security strengths (CSV on stdout).
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fresh,
    Shared,
}

impl From<ModeArg> for NonceMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fresh => NonceMode::Fresh,
            ModeArg::Shared => NonceMode::Shared,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Cosine,
    Angular,
    Tanimoto,
    #[value(alias = "soft_cosine")]
    Soft,
}

impl From<KindArg> for SimilarityKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Cosine => SimilarityKind::Cosine,
            KindArg::Angular => SimilarityKind::Angular,
            KindArg::Tanimoto => SimilarityKind::Tanimoto,
            KindArg::Soft => SimilarityKind::SoftCosine,
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct KeySizeArgs {
    /// NIST security strength in bits.
    #[arg(long, value_parser = ["80", "112", "128", "192", "256"])]
    strength: Option<String>,
    /// Explicit modulus length in bits.
    #[arg(long, value_parser = clap::value_parser!(u64).range(16..))]
    bits: Option<u64>,
    /// The fixed toy modulus p = 2932031007403, g = 3.
    #[arg(long)]
    toy: bool,
}

#[derive(Args)]
struct KeygenArgs {
    #[command(flatten)]
    size: KeySizeArgs,
    /// Output path stem.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EncryptArgs {
    /// Public key file.
    #[arg(long = "pub")]
    public: PathBuf,
    /// Plaintext vector files; in shared mode all share one nonce.
    #[arg(required = true)]
    vectors: Vec<PathBuf>,
    /// One output path per input vector.
    #[arg(long, required = true)]
    out: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "shared")]
    mode: ModeArg,
    /// Explicit shared nonce exponent r (shared mode only). Lets separate
    /// invocations produce compatible ciphertexts.
    #[arg(long)]
    nonce: Option<BigUint>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimilarityArgs {
    /// Private key file.
    #[arg(long)]
    key: PathBuf,
    left: PathBuf,
    right: PathBuf,
    #[arg(long, value_enum, default_value = "cosine")]
    kind: KindArg,
    /// Scaled weight file, required for soft cosine.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct WeightsArgs {
    left: PathBuf,
    right: PathBuf,
    /// Fixed-point scale S.
    #[arg(long, default_value_t = DEFAULT_WEIGHT_SCALE)]
    scale: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated strengths: toy, 80, 112, 128, 192, 256.
    #[arg(long, value_delimiter = ',', default_value = "80,112,128")]
    strengths: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Element bound B; elements are drawn from [1, B].
    #[arg(long = "bound", default_value_t = 1000)]
    bound: u64,
    #[arg(long, default_value_t = 1)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "shared")]
    mode: ModeArg,
    /// Dimension for the soft-cosine row.
    #[arg(long, default_value_t = 100)]
    soft_n: usize,
    #[arg(long, default_value_t = DEFAULT_WEIGHT_SCALE)]
    scale: u64,
    /// Run per-element work on all cores; rows get a `_par` suffix.
    #[arg(long)]
    parallel: bool,
}

/// Usage errors exit 1, data and crypto errors exit 2.
enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CmdResult = Result<(), Failure>;

fn rng_from(seed: Option<u64>) -> ChaCha20Rng {
    match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_entropy(),
    }
}

fn cmd_keygen(args: KeygenArgs) -> CmdResult {
    let size = if args.size.toy {
        KeySize::Toy
    } else if let Some(bits) = args.size.bits {
        KeySize::Bits(bits)
    } else {
        let s: u32 = args
            .size
            .strength
            .as_deref()
            .unwrap_or_default()
            .parse()
            .unwrap_or(0);
        let strength = SecurityStrength::from_bits_of_security(s)
            .ok_or_else(|| Failure::Usage(format!("unknown strength {s}")))?;
        KeySize::Strength(strength)
    };
    let keys = keygen(size, &mut rng_from(args.seed))?;
    format::save_key_pair(&args.out, &keys)?;
    println!("modulus_bits={}", keys.public.modulus_bits());
    Ok(())
}

fn cmd_encrypt(args: EncryptArgs) -> CmdResult {
    if args.vectors.len() != args.out.len() {
        return Err(Failure::Usage(format!(
            "{} vector files but {} --out paths",
            args.vectors.len(),
            args.out.len()
        )));
    }
    let mode = NonceMode::from(args.mode);
    if args.nonce.is_some() && mode == NonceMode::Fresh {
        return Err(Failure::Usage("--nonce only applies to shared mode".into()));
    }
    let params = format::load_public_key(&args.public)?;
    let mut rng = rng_from(args.seed);
    let nonce = match (mode, &args.nonce) {
        (NonceMode::Fresh, _) => None,
        (NonceMode::Shared, Some(r)) => Some(SharedNonce::from_exponent(&params, r)?),
        (NonceMode::Shared, None) => Some(SharedNonce::random(&params, &mut rng)),
    };
    let enc_mode = match &nonce {
        Some(n) => EncryptMode::Shared(n),
        None => EncryptMode::Fresh,
    };
    for (input, output) in args.vectors.iter().zip(&args.out) {
        let v = format::parse_plain_vector(&read(input)?).map_err(|e| in_file(input, e))?;
        let cap = capacity_check(&params, v.len(), v.bound(), 1, SimilarityKind::Cosine);
        if !cap.passes {
            return Err(Error::CapacityExceeded(format!(
                "n*B^2 = {} exceeds (p-1)/2 = {}; B must be at most {}",
                cap.required, cap.limit, cap.max_bound
            ))
            .into());
        }
        let cv = encrypt_vector_with(&params, &v, enc_mode, &mut rng, Exec::Sequential)?;
        fs::write(output, format::encrypted_vector_to_string(&cv)).map_err(Error::from)?;
    }
    Ok(())
}

fn cmd_similarity(args: SimilarityArgs) -> CmdResult {
    let kind = SimilarityKind::from(args.kind);
    let soft = kind == SimilarityKind::SoftCosine;
    if soft && args.weights.is_none() {
        return Err(Failure::Usage("--kind soft requires --weights".into()));
    }
    if !soft && args.weights.is_some() {
        return Err(Failure::Usage(
            "--weights only applies to --kind soft".into(),
        ));
    }
    let keys = format::load_private_key(&args.key)?;
    let left =
        format::parse_encrypted_vector(&read(&args.left)?).map_err(|e| in_file(&args.left, e))?;
    let right =
        format::parse_encrypted_vector(&read(&args.right)?).map_err(|e| in_file(&args.right, e))?;
    let cw = match &args.weights {
        None => None,
        Some(path) => {
            let sw = format::parse_weights(&read(path)?).map_err(|e| in_file(path, e))?;
            let cap = capacity_check(
                &keys.public,
                left.len(),
                left.bound().max(right.bound()),
                sw.scale(),
                kind,
            );
            if !cap.passes {
                return Err(Error::CapacityExceeded(format!(
                    "n^2*S*B^2 = {} exceeds (p-1)/2 = {}",
                    cap.required, cap.limit
                ))
                .into());
            }
            let mut rng = rng_from(args.seed);
            let cw = match left.shared_c1() {
                Some(c1) => {
                    let nonce = SharedNonce::recover(&keys.public, &keys.private, c1)?;
                    encrypt_weights(&keys.public, &sw, EncryptMode::Shared(&nonce), &mut rng)?
                }
                None => encrypt_weights(&keys.public, &sw, EncryptMode::Fresh, &mut rng)?,
            };
            Some(cw)
        }
    };
    let r = encrypted_similarity(
        &keys.public,
        &keys.private,
        &left,
        &right,
        kind,
        cw.as_ref(),
    )?;
    println!("similarity={:.5} distance={:.5}", r.similarity, r.distance);
    Ok(())
}

fn cmd_weights(args: WeightsArgs) -> CmdResult {
    let a = format::parse_plain_vector(&read(&args.left)?).map_err(|e| in_file(&args.left, e))?;
    let b = format::parse_plain_vector(&read(&args.right)?).map_err(|e| in_file(&args.right, e))?;
    let w = feature_similarity_weights(&a, &b)?;
    let sw = scale_weights(&w, args.scale)?;
    fs::write(&args.out, format::weights_to_string(&sw)).map_err(Error::from)?;
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    let strengths = args
        .strengths
        .iter()
        .map(|s| s.parse::<BenchStrength>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let config = BenchConfig {
        strengths,
        n: args.n,
        bound: args.bound,
        reps: args.reps,
        seed: args.seed,
        mode: args.mode.into(),
        soft_n: args.soft_n,
        scale: args.scale,
        exec: if args.parallel {
            Exec::Parallel
        } else {
            Exec::Sequential
        },
    };
    config
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let report = run_bench(&config)?;
    print!("{}", report.to_csv());
    Ok(())
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(Error::from)
}

fn in_file(path: &Path, e: Error) -> Failure {
    Failure::Data(Error::InvalidParameter(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Keygen(a) => cmd_keygen(a),
        Command::Encrypt(a) => cmd_encrypt(a),
        Command::Similarity(a) => cmd_similarity(a),
        Command::Weights(a) => cmd_weights(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
