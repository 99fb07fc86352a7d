//! Text file formats for keys, vectors and weight matrices.
//!
//! Every format is line-oriented with decimal integers:
//!
//! * public key (`.pub`): `p=`, `g=`, `Q=` lines
//! * private key (`.key`): the public lines plus `q=`
//! * plaintext vector: `n=<dec>` then `n` signed decimal lines
//! * ciphertext vector: `n=`, `mode=fresh|shared`, `c1=` (shared only, the
//!   common first component), `B=` (element bound), then `n` lines `<c1> <c2>`
//! * weight matrix: `n=`, `S=`, then `n*n` scaled entries row-major

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use num_bigint::BigUint;

use crate::elgamal::{Ciphertext, KeyPair, PublicParams};
use crate::encvec::{EncryptedVector, NonceMode, PlainVector, ScaledWeightMatrix};
use crate::error::{Error, Result};

fn parse_unsigned(s: &str, line: usize) -> Result<BigUint> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::parse(
            line,
            format!("expected a decimal integer, got {s:?}"),
        ));
    }
    BigUint::parse_bytes(s.as_bytes(), 10)
        .ok_or_else(|| Error::parse(line, format!("expected a decimal integer, got {s:?}")))
}

fn parse_u64(s: &str, line: usize) -> Result<u64> {
    parse_unsigned(s, line)?
        .try_into()
        .map_err(|_| Error::parse(line, format!("value {s} too large")))
}

fn parse_signed(s: &str, line: usize) -> Result<i64> {
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let magnitude = parse_u64(digits, line)?;
    let value = if neg {
        0i64.checked_sub_unsigned(magnitude)
    } else {
        i64::try_from(magnitude).ok()
    };
    value.ok_or_else(|| Error::parse(line, format!("value {s} out of range")))
}

/// Non-blank lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn key_value(line: &str, lineno: usize) -> Result<(&str, &str)> {
    line.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| Error::parse(lineno, format!("expected key=value, got {line:?}")))
}

/// Parses a `key=value` file whose keys must be exactly `expected`.
fn parse_fields(text: &str, expected: &[&str]) -> Result<HashMap<String, BigUint>> {
    let mut fields = HashMap::new();
    let mut last = 0;
    for (lineno, line) in lines(text) {
        last = lineno;
        let (key, value) = key_value(line, lineno)?;
        if !expected.contains(&key) {
            return Err(Error::parse(lineno, format!("unexpected field {key:?}")));
        }
        if fields
            .insert(key.to_string(), parse_unsigned(value, lineno)?)
            .is_some()
        {
            return Err(Error::parse(lineno, format!("duplicate field {key:?}")));
        }
    }
    if let Some(missing) = expected.iter().find(|k| !fields.contains_key(**k)) {
        return Err(Error::parse(last + 1, format!("missing field {missing:?}")));
    }
    Ok(fields)
}

pub fn public_key_to_string(params: &PublicParams) -> String {
    format!(
        "p={}\ng={}\nQ={}\n",
        params.modulus(),
        params.generator(),
        params.public_key()
    )
}

pub fn private_key_to_string(keys: &KeyPair) -> String {
    format!(
        "{}q={}\n",
        public_key_to_string(&keys.public),
        keys.private.exponent()
    )
}

pub fn parse_public_key(text: &str) -> Result<PublicParams> {
    let mut f = parse_fields(text, &["p", "g", "Q"])?;
    PublicParams::new(
        f.remove("p").unwrap(),
        f.remove("g").unwrap(),
        f.remove("Q").unwrap(),
    )
}

pub fn parse_private_key(text: &str) -> Result<KeyPair> {
    let mut f = parse_fields(text, &["p", "g", "Q", "q"])?;
    let public = PublicParams::new(
        f.remove("p").unwrap(),
        f.remove("g").unwrap(),
        f.remove("Q").unwrap(),
    )?;
    KeyPair::assemble(public, f.remove("q").unwrap())
}

/// Writes `<stem>.pub` and `<stem>.key`.
pub fn save_key_pair(stem: &Path, keys: &KeyPair) -> Result<()> {
    fs::write(
        stem.with_extension("pub"),
        public_key_to_string(&keys.public),
    )?;
    fs::write(stem.with_extension("key"), private_key_to_string(keys))?;
    Ok(())
}

pub fn load_public_key(path: &Path) -> Result<PublicParams> {
    parse_public_key(&fs::read_to_string(path)?)
}

pub fn load_private_key(path: &Path) -> Result<KeyPair> {
    parse_private_key(&fs::read_to_string(path)?)
}

fn parse_count(header: Option<(usize, &str)>, key: &str) -> Result<(usize, u64)> {
    let (lineno, line) = header.ok_or_else(|| Error::parse(1, format!("missing {key}= header")))?;
    let (k, v) = key_value(line, lineno)?;
    if k != key {
        return Err(Error::parse(
            lineno,
            format!("expected {key}= header, got {k:?}"),
        ));
    }
    Ok((lineno, parse_u64(v, lineno)?))
}

fn check_no_trailing<'a>(mut rest: impl Iterator<Item = (usize, &'a str)>) -> Result<()> {
    match rest.next() {
        Some((lineno, _)) => Err(Error::parse(lineno, "unexpected extra line")),
        None => Ok(()),
    }
}

pub fn plain_vector_to_string(v: &PlainVector) -> String {
    let mut out = format!("n={}\n", v.len());
    for x in v.elements() {
        out.push_str(&format!("{x}\n"));
    }
    out
}

pub fn parse_plain_vector(text: &str) -> Result<PlainVector> {
    let mut it = lines(text);
    let (header_line, n) = parse_count(it.next(), "n")?;
    let mut elements = Vec::with_capacity(n as usize);
    let mut last = header_line;
    for _ in 0..n {
        let (lineno, line) = it
            .next()
            .ok_or_else(|| Error::parse(last + 1, format!("expected {n} elements")))?;
        last = lineno;
        elements.push(parse_signed(line, lineno)?);
    }
    check_no_trailing(it)?;
    PlainVector::from_elements(elements).map_err(|e| Error::parse(header_line, e.to_string()))
}

pub fn encrypted_vector_to_string(v: &EncryptedVector) -> String {
    let mut out = format!("n={}\nmode={}\n", v.len(), v.mode());
    if let Some(c1) = v.shared_c1() {
        out.push_str(&format!("c1={c1}\n"));
    }
    out.push_str(&format!("B={}\n", v.bound()));
    for ct in v.elements() {
        out.push_str(&format!("{} {}\n", ct.c1, ct.c2));
    }
    out
}

pub fn parse_encrypted_vector(text: &str) -> Result<EncryptedVector> {
    let mut it = lines(text).peekable();
    let (header_line, n) = parse_count(it.next(), "n")?;
    let mut mode = None;
    let mut c1 = None;
    let mut bound = None;
    let mut last = header_line;
    while let Some(&(lineno, line)) = it.peek() {
        if !line.contains('=') {
            break;
        }
        it.next();
        last = lineno;
        let (key, value) = key_value(line, lineno)?;
        let duplicate = match key {
            "mode" => mode
                .replace(match value {
                    "fresh" => NonceMode::Fresh,
                    "shared" => NonceMode::Shared,
                    other => {
                        return Err(Error::parse(lineno, format!("unknown mode {other:?}")));
                    }
                })
                .is_some(),
            "c1" => c1.replace(parse_unsigned(value, lineno)?).is_some(),
            "B" => bound.replace(parse_u64(value, lineno)?).is_some(),
            other => return Err(Error::parse(lineno, format!("unexpected header {other:?}"))),
        };
        if duplicate {
            return Err(Error::parse(lineno, format!("duplicate header {key:?}")));
        }
    }
    let mode = mode.ok_or_else(|| Error::parse(last + 1, "missing mode= header"))?;
    let bound = bound.ok_or_else(|| Error::parse(last + 1, "missing B= header"))?;
    match (mode, &c1) {
        (NonceMode::Shared, None) => {
            return Err(Error::parse(last + 1, "shared mode requires a c1= header"));
        }
        (NonceMode::Fresh, Some(_)) => {
            return Err(Error::parse(
                header_line,
                "fresh mode must not carry a c1= header",
            ));
        }
        _ => {}
    }
    let mut elements = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let (lineno, line) = it
            .next()
            .ok_or_else(|| Error::parse(last + 1, format!("expected {n} ciphertexts")))?;
        last = lineno;
        let mut parts = line.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(lineno, "expected \"<c1> <c2>\""));
        };
        let ct = Ciphertext {
            c1: parse_unsigned(a, lineno)?,
            c2: parse_unsigned(b, lineno)?,
        };
        if c1.as_ref().is_some_and(|shared| *shared != ct.c1) {
            return Err(Error::parse(lineno, "c1 differs from the shared c1 header"));
        }
        elements.push(ct);
    }
    check_no_trailing(it)?;
    EncryptedVector::from_parts(elements, bound, c1)
        .map_err(|e| Error::parse(header_line, e.to_string()))
}

pub fn weights_to_string(w: &ScaledWeightMatrix) -> String {
    let mut out = format!("n={}\nS={}\n", w.dim(), w.scale());
    for x in w.values() {
        out.push_str(&format!("{x}\n"));
    }
    out
}

pub fn parse_weights(text: &str) -> Result<ScaledWeightMatrix> {
    let mut it = lines(text);
    let (header_line, n) = parse_count(it.next(), "n")?;
    let (scale_line, scale) = parse_count(it.next(), "S")?;
    let count = (n as usize)
        .checked_mul(n as usize)
        .ok_or_else(|| Error::parse(header_line, "dimension too large"))?;
    let mut values = Vec::with_capacity(count);
    let mut last = scale_line;
    for _ in 0..count {
        let (lineno, line) = it
            .next()
            .ok_or_else(|| Error::parse(last + 1, format!("expected {count} weight entries")))?;
        last = lineno;
        values.push(parse_signed(line, lineno)?);
    }
    check_no_trailing(it)?;
    ScaledWeightMatrix::new(n as usize, scale, values)
        .map_err(|e| Error::parse(header_line, e.to_string()))
}
