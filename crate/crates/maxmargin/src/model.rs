//! The persisted artifact: hyperplane, penalty, feature codec, class map,
//! and training diagnostics. The file format is a human-inspectable UTF-8
//! header with hex-encoded little-endian floats for every numeric value that
//! must round-trip bit-exactly, closed by a SHA-256 checksum line.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::data::{ClassMap, ColumnCodec, FeatureCodec, UnknownCategory};
use crate::error::{Error, Result};
use crate::linalg::dot;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "maxmargin-model";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelDiagnostics {
    pub iterations: usize,
    pub final_mu: f64,
    pub support_vector_count: usize,
    pub converged: bool,
}

/// A trained classifier. Immutable after construction; scoring is safe from
/// any number of threads.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub w: Vec<f64>,
    pub beta: f64,
    pub tau: f64,
    pub codec: FeatureCodec,
    pub class_map: ClassMap,
    /// Label column position in dense inputs, kept so scoring can drop it.
    pub label_col: usize,
    pub diagnostics: ModelDiagnostics,
}

/// Confusion counts plus the headline accuracy percentage.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub total: usize,
    pub correct: usize,
    pub true_positive: usize,
    pub true_negative: usize,
    pub false_positive: usize,
    pub false_negative: usize,
}

impl Evaluation {
    pub fn accuracy_percent(&self) -> f64 {
        self.correct as f64 / self.total as f64 * 100.0
    }
}

impl SvmModel {
    /// Margin of an already-encoded feature vector: `w'x - beta`.
    pub fn margin_encoded(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) - self.beta
    }

    /// Score one raw row. Zero margin maps to the positive class.
    pub fn predict(&self, tokens: &[String], unknown: UnknownCategory) -> Result<(String, f64)> {
        let x = self.codec.encode_tokens(tokens, unknown)?;
        let margin = self.margin_encoded(&x);
        let token = self.class_map.token(if margin >= 0.0 { 1 } else { -1 });
        Ok((token.to_string(), margin))
    }

    /// Accuracy over labeled rows given as `(label token, feature tokens)`.
    pub fn evaluate<'a>(
        &self,
        rows: impl Iterator<Item = (&'a str, &'a [String])>,
        unknown: UnknownCategory,
    ) -> Result<Evaluation> {
        let mut eval = Evaluation {
            total: 0,
            correct: 0,
            true_positive: 0,
            true_negative: 0,
            false_positive: 0,
            false_negative: 0,
        };
        for (label, features) in rows {
            let truth = self.class_map.to_sign(label).ok_or_else(|| {
                Error::Config(format!("label {label:?} is not in the model's class map"))
            })?;
            let (_, margin) = self.predict(features, unknown)?;
            let predicted: i8 = if margin >= 0.0 { 1 } else { -1 };
            eval.total += 1;
            match (predicted, truth) {
                (1, 1) => {
                    eval.true_positive += 1;
                    eval.correct += 1;
                }
                (-1, -1) => {
                    eval.true_negative += 1;
                    eval.correct += 1;
                }
                (1, -1) => eval.false_positive += 1,
                (-1, 1) => eval.false_negative += 1,
                _ => unreachable!(),
            }
        }
        if eval.total == 0 {
            return Err(Error::Config("cannot evaluate an empty dataset".into()));
        }
        Ok(eval)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        let body = self.serialize();
        let digest = Sha256::digest(body.as_bytes());
        out.write_all(body.as_bytes())?;
        writeln!(out, "checksum sha256 {}", hex_bytes(&digest))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SvmModel> {
        let mut raw = String::new();
        BufReader::new(File::open(path)?).read_to_string(&mut raw)?;
        Self::deserialize(&raw)
    }

    fn serialize(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{MAGIC} {FORMAT_VERSION}\n"));
        s.push_str(&format!("m {}\n", self.codec.m));
        s.push_str(&format!("tau {}\n", f64_to_hex(self.tau)));
        s.push_str(&format!("label-col {}\n", self.label_col));
        s.push_str(&format!("class +1 {}\n", escape(&self.class_map.positive)));
        s.push_str(&format!("class -1 {}\n", escape(&self.class_map.negative)));
        s.push_str(&format!("columns {}\n", self.codec.columns.len()));
        for col in &self.codec.columns {
            match col {
                ColumnCodec::Numeric { mean, std } => {
                    s.push_str(&format!("numeric {} {}\n", f64_to_hex(*mean), f64_to_hex(*std)));
                }
                ColumnCodec::Categorical { tokens } => {
                    s.push_str(&format!("categorical {}", tokens.len()));
                    for t in tokens {
                        s.push(' ');
                        s.push_str(&escape(t));
                    }
                    s.push('\n');
                }
            }
        }
        s.push_str("w");
        for x in &self.w {
            s.push(' ');
            s.push_str(&f64_to_hex(*x));
        }
        s.push('\n');
        s.push_str(&format!("beta {}\n", f64_to_hex(self.beta)));
        s.push_str(&format!(
            "diagnostics iterations {} final-mu {} support-vectors {} converged {}\n",
            self.diagnostics.iterations,
            f64_to_hex(self.diagnostics.final_mu),
            self.diagnostics.support_vector_count,
            u8::from(self.diagnostics.converged),
        ));
        s
    }

    fn deserialize(raw: &str) -> Result<SvmModel> {
        let checksum_at = raw
            .rfind("checksum sha256 ")
            .ok_or_else(|| Error::Model("file is truncated: no checksum line".into()))?;
        let body = &raw[..checksum_at];
        let stated = raw[checksum_at..]
            .trim_end()
            .strip_prefix("checksum sha256 ")
            .expect("prefix was just located");
        let digest = hex_bytes(&Sha256::digest(body.as_bytes()));
        if digest != stated {
            return Err(Error::Model("checksum mismatch: file is corrupt".into()));
        }

        let mut lines = body.lines();
        let head = lines
            .next()
            .ok_or_else(|| Error::Model("empty model file".into()))?;
        let version: u32 = head
            .strip_prefix(MAGIC)
            .map(str::trim)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Model(format!("not a model file: {head:?}")))?;
        if version != FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported format version {version} (this build reads {FORMAT_VERSION})"
            )));
        }

        fn field<'a>(lines: &mut impl Iterator<Item = &'a str>, prefix: &str) -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Model(format!("missing {prefix:?} line")))?;
            line.strip_prefix(prefix)
                .map(|v| v.trim().to_string())
                .ok_or_else(|| Error::Model(format!("expected {prefix:?}, got {line:?}")))
        }

        let m: usize = parse_field(&field(&mut lines, "m ")?, "m")?;
        let tau = hex_to_f64(&field(&mut lines, "tau ")?)?;
        let label_col: usize = parse_field(&field(&mut lines, "label-col ")?, "label-col")?;
        let positive = unescape(&field(&mut lines, "class +1 ")?)?;
        let negative = unescape(&field(&mut lines, "class -1 ")?)?;
        let column_count: usize = parse_field(&field(&mut lines, "columns ")?, "columns")?;

        let mut columns = Vec::with_capacity(column_count);
        for _ in 0..column_count {
            let line = lines
                .next()
                .ok_or_else(|| Error::Model("missing column line".into()))?;
            let mut parts = line.split(' ');
            match parts.next() {
                Some("numeric") => {
                    let mean = hex_to_f64(parts.next().unwrap_or_default())?;
                    let std = hex_to_f64(parts.next().unwrap_or_default())?;
                    columns.push(ColumnCodec::Numeric { mean, std });
                }
                Some("categorical") => {
                    let count: usize = parse_field(parts.next().unwrap_or_default(), "category count")?;
                    let tokens: Result<Vec<String>> = parts.take(count).map(unescape).collect();
                    let tokens = tokens?;
                    if tokens.len() != count {
                        return Err(Error::Model("category list shorter than declared".into()));
                    }
                    columns.push(ColumnCodec::Categorical { tokens });
                }
                other => return Err(Error::Model(format!("unknown column kind {other:?}"))),
            }
        }

        let w_line = field(&mut lines, "w")?;
        let w: Result<Vec<f64>> = w_line.split_whitespace().map(hex_to_f64).collect();
        let w = w?;
        if w.len() != m {
            return Err(Error::Model(format!("weight vector has {} entries, header says {m}", w.len())));
        }
        let beta = hex_to_f64(&field(&mut lines, "beta ")?)?;

        let diag_line = field(&mut lines, "diagnostics ")?;
        let parts: Vec<&str> = diag_line.split_whitespace().collect();
        if parts.len() != 8 {
            return Err(Error::Model("malformed diagnostics line".into()));
        }
        let diagnostics = ModelDiagnostics {
            iterations: parse_field(parts[1], "iterations")?,
            final_mu: hex_to_f64(parts[3])?,
            support_vector_count: parse_field(parts[5], "support-vectors")?,
            converged: parts[7] == "1",
        };

        let codec = FeatureCodec { columns, m };
        Ok(SvmModel {
            w,
            beta,
            tau,
            codec,
            class_map: ClassMap { positive, negative },
            label_col,
            diagnostics,
        })
    }
}

fn parse_field<T: std::str::FromStr>(value: &str, name: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Model(format!("bad {name} value {value:?}")))
}

/// Little-endian byte hex of an f64; 16 characters, bit-exact.
pub fn f64_to_hex(x: f64) -> String {
    hex_bytes(&x.to_le_bytes())
}

pub fn hex_to_f64(s: &str) -> Result<f64> {
    if s.len() != 16 {
        return Err(Error::Model(format!("bad float literal {s:?}")));
    }
    let mut bytes = [0u8; 8];
    for (i, b) in bytes.iter_mut().enumerate() {
        *b = u8::from_str_radix(&s[2 * i..2 * i + 2], 16)
            .map_err(|_| Error::Model(format!("bad float literal {s:?}")))?;
    }
    Ok(f64::from_le_bytes(bytes))
}

fn hex_bytes(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Percent-escape whitespace, newlines, and the escape character itself so
/// tokens survive the line-oriented format.
fn escape(token: &str) -> String {
    let mut out = String::with_capacity(token.len());
    for b in token.bytes() {
        match b {
            b' ' | b'%' | b'\n' | b'\r' | b'\t' => out.push_str(&format!("%{b:02x}")),
            _ => out.push(b as char),
        }
    }
    out
}

fn unescape<S: AsRef<str>>(token: S) -> Result<String> {
    let token = token.as_ref();
    let bytes = token.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            if i + 3 > bytes.len() {
                return Err(Error::Model(format!("bad escape in {token:?}")));
            }
            let hex = std::str::from_utf8(&bytes[i + 1..i + 3])
                .map_err(|_| Error::Model(format!("bad escape in {token:?}")))?;
            out.push(
                u8::from_str_radix(hex, 16)
                    .map_err(|_| Error::Model(format!("bad escape in {token:?}")))?,
            );
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| Error::Model(format!("bad escape in {token:?}")))
}
