//! Experiment configuration: a strict TOML schema.
//!
//! Every scalar that carries a range restriction is a validated newtype, so
//! violations are reported during deserialization with the line of the
//! offending value. Unknown keys are errors. Names referring to other blocks
//! keep their spans for resolution errors.
//!
//! ```toml
//! [system.torus]
//! dim = 1
//! rank = 1
//! angles = [["1/2*sqrt(2)"]]
//!
//! [obs.f0]
//! kind = "char"
//! freq = [1]
//!
//! [obs.f1]
//! kind = "char"
//! freq = [-1]
//!
//! [poly.q]
//! coords = ["sqrt(2)*x"]
//!
//! [correlation]
//! functions = ["f0", "f1"]
//! polys = ["q"]
//! range = [0, 100]
//! ```

use std::collections::BTreeMap;
use std::fmt;

use nilcorr_core::averaging::AveragingScheme;
use nilcorr_core::poly::{BracketKind, Coefficient, VectorPolynomial};
use serde::{Deserialize, Serialize};
use toml::Spanned;

pub type Name = Spanned<String>;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemBlock>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub obs: BTreeMap<String, ObsBlock>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub poly: BTreeMap<String, PolyBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<CorrelationBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub average: Option<AverageBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equidist: Option<EquidistBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suspend: Option<SuspendBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nilseq: Option<NilseqBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approx: Option<ApproxBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputBlock>,
}

/// Exactly one of the two systems.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum SystemBlock {
    Torus(TorusBlock),
    Heisenberg(HeisenbergBlock),
}

/// A `ℤ^rank`-action by rotations of `𝕋^dim`; `angles` is `rank × dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusBlock {
    pub dim: Positive,
    pub rank: Positive,
    pub angles: Vec<Vec<CoefLit>>,
}

/// Left translations by commuting elements `g = (x, y, z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeisenbergBlock {
    pub g: Vec<[CoefLit; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObsBlock {
    /// `amp · e(freq · x)`.
    Char {
        freq: Vec<i64>,
        #[serde(default = "unit_amp")]
        amp: [f64; 2],
    },
    /// The constant `c`.
    Const { c: [f64; 2] },
    /// `Σ amp · e(freq · x)`.
    Trig { terms: Vec<TermBlock> },
}

fn unit_amp() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermBlock {
    pub freq: Vec<i64>,
    pub amp: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyBlock {
    pub coords: PolyLit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrationKind {
    #[default]
    Auto,
    Exact,
    Quadrature,
}

/// `functions[0]` is `f₀`, `functions[i]` drives iterate `i` with
/// `polys[i−1]`. A function may be an inline product `a*b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationBlock {
    pub functions: Vec<Name>,
    pub polys: Vec<Name>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brackets: Option<Vec<Bracket>>,
    #[serde(default)]
    pub integration: IntegrationKind,
    #[serde(default = "default_points")]
    pub quadrature_points: Positive,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<IndexRange>,
}

fn default_points() -> Positive {
    Positive(4096)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AverageBlock {
    pub schemes: Vec<Scheme>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquidistBlock {
    pub poly: Name,
    pub deltas: Vec<Delta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<IndexRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primes: Option<PrimeLimit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ap: Option<Progression>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuspendBlock {
    pub delta: Delta,
    pub range: IndexRange,
    /// Range for the exceptional fraction; defaults to `range`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exceptional_range: Option<IndexRange>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceKind {
    Torus,
    Heisenberg,
}

/// `ψ(n) = F(gⁿx)`. `F` names an observable block or `"example"`, the
/// function `e({x}/√2)` on the circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NilseqBlock {
    pub space: SpaceKind,
    pub g: Vec<CoefLit>,
    pub x: Vec<f64>,
    #[serde(rename = "F")]
    pub f: Name,
    /// Mollifier width across `discontinuities`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollify: Option<Width>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discontinuities: Option<Vec<f64>>,
    pub step: Positive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub length: Positive,
    pub windows: Positive,
    pub max_start: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxBlock {
    pub schemes: Vec<Scheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleBlock {
    pub epsilon: Epsilon,
    /// Indices on which the correlation engine is checked against the
    /// closed form.
    pub identity_range: IndexRange,
    pub schemes: Vec<Scheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: String,
}

/// An integer `≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Positive(pub u32);

impl TryFrom<i64> for Positive {
    type Error = String;

    fn try_from(v: i64) -> Result<Self, String> {
        u32::try_from(v)
            .ok()
            .filter(|&v| v >= 1)
            .map(Positive)
            .ok_or_else(|| format!("expected an integer in [1, 2^32), got {v}"))
    }
}

impl From<Positive> for i64 {
    fn from(p: Positive) -> i64 {
        i64::from(p.0)
    }
}

fn open_unit(what: &str, v: f64) -> Result<f64, String> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{what} outside (0,1)"))
    }
}

/// `δ ∈ (0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Delta(pub f64);

impl TryFrom<f64> for Delta {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, String> {
        open_unit("delta", v).map(Delta)
    }
}

impl From<Delta> for f64 {
    fn from(d: Delta) -> f64 {
        d.0
    }
}

/// `ε ∈ (0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Epsilon(pub f64);

impl TryFrom<f64> for Epsilon {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, String> {
        open_unit("epsilon", v).map(Epsilon)
    }
}

impl From<Epsilon> for f64 {
    fn from(e: Epsilon) -> f64 {
        e.0
    }
}

/// Mollifier width `w ∈ (0, 1/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Width(pub f64);

impl TryFrom<f64> for Width {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, String> {
        if v > 0.0 && v < 0.5 {
            Ok(Width(v))
        } else {
            Err("mollifier width outside (0,1/2)".into())
        }
    }
}

impl From<Width> for f64 {
    fn from(w: Width) -> f64 {
        w.0
    }
}

/// `[M, N]` with `M < N`, read as the half-open `[M, N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[i64; 2]", into = "[i64; 2]")]
pub struct IndexRange {
    pub start: i64,
    pub end: i64,
}

impl TryFrom<[i64; 2]> for IndexRange {
    type Error = String;

    fn try_from([start, end]: [i64; 2]) -> Result<Self, String> {
        if start < end {
            Ok(IndexRange { start, end })
        } else {
            Err(format!("empty range [{start}, {end})"))
        }
    }
}

impl From<IndexRange> for [i64; 2] {
    fn from(r: IndexRange) -> [i64; 2] {
        [r.start, r.end]
    }
}

impl fmt::Display for IndexRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// `N ≥ 2` for prime ranges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct PrimeLimit(pub u64);

impl TryFrom<i64> for PrimeLimit {
    type Error = String;

    fn try_from(v: i64) -> Result<Self, String> {
        if v >= 2 {
            Ok(PrimeLimit(v as u64))
        } else {
            Err(format!("prime range needs N ≥ 2, got {v}"))
        }
    }
}

impl From<PrimeLimit> for i64 {
    fn from(p: PrimeLimit) -> i64 {
        p.0 as i64
    }
}

/// `[r, s]` with `r ≥ 1`: the progression `rp + s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[i64; 2]", into = "[i64; 2]")]
pub struct Progression {
    pub r: i64,
    pub s: i64,
}

impl TryFrom<[i64; 2]> for Progression {
    type Error = String;

    fn try_from([r, s]: [i64; 2]) -> Result<Self, String> {
        if r >= 1 {
            Ok(Progression { r, s })
        } else {
            Err(format!("progression needs r ≥ 1, got {r}"))
        }
    }
}

impl From<Progression> for [i64; 2] {
    fn from(p: Progression) -> [i64; 2] {
        [p.r, p.s]
    }
}

/// `cesaro:M:N` or `primes:N:r:s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Scheme(pub AveragingScheme);

impl TryFrom<String> for Scheme {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse().map(Scheme).map_err(|e: nilcorr_core::Error| e.to_string())
    }
}

impl From<Scheme> for String {
    fn from(s: Scheme) -> String {
        s.0.to_string()
    }
}

/// `floor`, `ceil` or `nearest`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Bracket(pub BracketKind);

impl TryFrom<String> for Bracket {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        BracketKind::from_name(&s)
            .map(Bracket)
            .ok_or_else(|| format!("unknown bracket `{s}`; expected floor, ceil or nearest"))
    }
}

impl From<Bracket> for String {
    fn from(b: Bracket) -> String {
        b.0.name().to_string()
    }
}

/// A coefficient literal, kept with its source text.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CoefLit {
    pub text: String,
    pub value: Coefficient,
}

impl PartialEq for CoefLit {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl TryFrom<String> for CoefLit {
    type Error = String;

    fn try_from(text: String) -> Result<Self, String> {
        let value = Coefficient::parse(&text).map_err(|e| format!("coefficient `{text}`: {e}"))?;
        Ok(CoefLit { text, value })
    }
}

impl From<CoefLit> for String {
    fn from(c: CoefLit) -> String {
        c.text
    }
}

/// Polynomial coordinates, kept with their source text.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct PolyLit {
    pub text: Vec<String>,
    pub value: VectorPolynomial,
}

impl PartialEq for PolyLit {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl TryFrom<Vec<String>> for PolyLit {
    type Error = String;

    fn try_from(text: Vec<String>) -> Result<Self, String> {
        let value = VectorPolynomial::parse(&text).map_err(|e| format!("polynomial: {e}"))?;
        Ok(PolyLit { text, value })
    }
}

impl From<PolyLit> for Vec<String> {
    fn from(p: PolyLit) -> Vec<String> {
        p.text
    }
}

/// A configuration error, with the 1-based line when known.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            message: message.into(),
        }
    }

    /// An error located at byte offset `at` of `source`.
    pub fn at(source: &str, at: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line_of(source, at)),
            message: message.into(),
        }
    }
}

pub fn line_of(source: &str, offset: usize) -> usize {
    source.as_bytes()[..offset.min(source.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1
}

/// Parses and validates the schema. Cross-block references are resolved
/// later, when the experiment is built.
pub fn parse_config(source: &str) -> Result<Config, ConfigError> {
    toml::from_str(source).map_err(|e| {
        let message = e.message().trim().to_string();
        let message = if message.starts_with("duplicate key") || message.contains("duplicate") {
            format!("duplicate definition ({message})")
        } else {
            message
        };
        ConfigError {
            line: e.span().map(|s| line_of(source, s.start)),
            message,
        }
    })
}

/// Canonical TOML text of a configuration; `parse_config` inverts it.
pub fn print_config(config: &Config) -> String {
    toml::to_string(config).expect("configurations serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[system.torus]
dim = 1
rank = 1
angles = [["1/2*sqrt(2)"]]

[obs.f0]
kind = "char"
freq = [1]

[obs.f1]
kind = "char"
freq = [-1]

[poly.q]
coords = ["sqrt(2)*x"]

[correlation]
functions = ["f0", "f1"]
polys = ["q"]
range = [0, 100]
"#;

    #[test]
    fn minimal_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        let corr = c.correlation.as_ref().unwrap();
        assert_eq!(corr.quadrature_points, Positive(4096));
        assert_eq!(corr.integration, IntegrationKind::Auto);
        assert_eq!(corr.brackets, None);
        assert_eq!(parse_config(&print_config(&c)).unwrap(), c);
    }

    #[test]
    fn delta_out_of_range_has_line() {
        let text = "[suspend]\nrange = [1, 10]\ndelta = 1.5\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.message.contains("delta outside (0,1)"), "{err}");
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn duplicates_and_unknown_keys() {
        let text = "[poly.q]\ncoords = [\"x\"]\n\n[poly.q]\ncoords = [\"x^2\"]\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.message.contains("duplicate definition"), "{err}");
        assert_eq!(err.line, Some(4));
        let err = parse_config("[poly.q]\ncoords = [\"x\"]\ncoord = 1\n").unwrap_err();
        assert!(err.message.contains("unknown field"), "{err}");
        assert!(parse_config("[poly.q]\ncoords = [\"x +\"]\n").is_err());
        assert!(parse_config("[average]\nschemes = [\"cesaro:5:5\"]\n").is_err());
    }
}
