//! Scan configuration files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize};

use crate::classifier::{DecayProfile, ExactPoint, SystemConfig};
use crate::error::{invalid, Error, Result};
use crate::lair::LairControls;

/// An exact rational, written in JSON either as a string (`"0.1"`,
/// `"-2e-3"`, `"1/3"`) or as a number. Strings are the reliable form: they
/// are parsed digit by digit, so `"0.1"` is exactly one tenth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decimal(pub BigRational);

impl Decimal {
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl FromStr for Decimal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_decimal(s).map(Decimal)
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Num(serde_json::Number),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Str(s) => s,
            Raw::Num(n) => n.to_string(),
        };
        parse_decimal(&text).map(Decimal).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Decimal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

/// Parses `[+-]digits[.digits][(e|E)[+-]digits]`, or a quotient of two such
/// numbers, into an exact rational.
pub fn parse_decimal(text: &str) -> Result<BigRational> {
    if let Some((num, den)) = text.split_once('/') {
        let den = parse_plain(den, text)?;
        if den.is_zero() {
            return Err(Error::InvalidInput(format!("zero denominator in {text:?}")));
        }
        return Ok(parse_plain(num, text)? / den);
    }
    parse_plain(text, text)
}

fn parse_plain(part: &str, text: &str) -> Result<BigRational> {
    let bad = || Error::InvalidInput(format!("not a decimal number: {text:?}"));
    let s = part.trim();
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !(int_part.bytes().all(|b| b.is_ascii_digit()) && frac_part.bytes().all(|b| b.is_ascii_digit())) {
        return Err(bad());
    }
    if exponent.unsigned_abs() > 400 {
        return Err(bad());
    }
    let all = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(all.parse::<BigInt>().map_err(|_| bad())?);
    let shift = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let scale = num_traits::pow(ten, shift.unsigned_abs() as usize);
    if shift >= 0 {
        value *= scale;
    } else {
        value /= scale;
    }
    Ok(if negative { -value } else { value })
}

/// The profile exponents a scan can sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Lambda,
    Mu,
    Nu,
    Xi,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::Lambda => "lambda",
            Param::Mu => "mu",
            Param::Nu => "nu",
            Param::Xi => "xi",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Param::Lambda => "λ",
            Param::Mu => "μ",
            Param::Nu => "ν",
            Param::Xi => "ξ",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixed {
    #[serde(default = "default_dimension")]
    pub dimension: u32,
    pub alpha: Decimal,
    pub beta: Decimal,
    #[serde(default)]
    pub lambda: Option<Decimal>,
    #[serde(default)]
    pub mu: Option<Decimal>,
    #[serde(default)]
    pub nu: Option<Decimal>,
    #[serde(default)]
    pub xi: Option<Decimal>,
    #[serde(default = "one")]
    pub l_p: f64,
    #[serde(default = "one")]
    pub l_q: f64,
    #[serde(default = "euler")]
    pub r_start: f64,
}

fn default_dimension() -> u32 {
    3
}

fn one() -> f64 {
    1.0
}

fn euler() -> f64 {
    std::f64::consts::E
}

impl Fixed {
    fn pinned(&self, p: Param) -> Option<&Decimal> {
        match p {
            Param::Lambda => self.lambda.as_ref(),
            Param::Mu => self.mu.as_ref(),
            Param::Nu => self.nu.as_ref(),
            Param::Xi => self.xi.as_ref(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: Param,
    pub min: Decimal,
    pub max: Decimal,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    Classify,
    Lair,
    Iterate,
    Shoot,
}

/// Iteration probe: `k` steps on a log grid `[r_start, e^log_end]`, then
/// oscillation quantities over a geometric schedule of window radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterateSettings {
    pub k: usize,
    pub log_end: f64,
    pub nodes: usize,
    pub a: f64,
    pub b: f64,
    pub schedule_ratio: f64,
    pub schedule_count: usize,
}

impl Default for IterateSettings {
    fn default() -> Self {
        IterateSettings {
            k: 3,
            log_end: 20.0,
            nodes: 600,
            a: 1.5,
            b: 2.0,
            schedule_ratio: 2.0,
            schedule_count: 12,
        }
    }
}

/// Shooting probe: a log grid of center values per cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShootSettings {
    pub data_min: f64,
    pub data_max: f64,
    pub data_count: usize,
    pub horizon: f64,
    pub cap: f64,
}

impl Default for ShootSettings {
    fn default() -> Self {
        ShootSettings {
            data_min: 1e-2,
            data_max: 1.0,
            data_count: 3,
            horizon: 1e3,
            cap: 1e8,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSettings {
    pub lair: LairControls,
    pub iterate: IterateSettings,
    pub shoot: ShootSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub fixed: Fixed,
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub include_critical_lines: bool,
    #[serde(default)]
    pub symmetric_mode: bool,
    #[serde(default = "default_probes")]
    pub probes: Vec<Probe>,
    #[serde(default)]
    pub probe_settings: ProbeSettings,
    #[serde(default)]
    pub output_csv: Option<PathBuf>,
    #[serde(default)]
    pub output_svg: Option<PathBuf>,
}

fn default_probes() -> Vec<Probe> {
    vec![Probe::Classify]
}

impl ScanSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ScanSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("scan config: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        ScanSpec::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return invalid(format!("a scan sweeps one or two axes, got {}", self.axes.len()));
        }
        if self.axes.len() == 2 && self.axes[0].param == self.axes[1].param {
            return invalid("the two axes must sweep different parameters");
        }
        for ax in &self.axes {
            if ax.count < 2 {
                return invalid(format!("axis {} needs count >= 2", ax.param.name()));
            }
            if ax.min.0 >= ax.max.0 {
                return invalid(format!("axis {} needs min < max", ax.param.name()));
            }
            if self.fixed.pinned(ax.param).is_some() {
                return invalid(format!("{} is both pinned and swept", ax.param.name()));
            }
        }
        if self.probes.is_empty() {
            return invalid("at least one probe is required");
        }
        self.system_config()?;
        // hypotheses depend on alpha, beta only, so one check covers every cell
        let profile = DecayProfile {
            l_p: self.fixed.l_p,
            l_q: self.fixed.l_q,
            r_start: self.fixed.r_start,
            ..DecayProfile::default()
        };
        profile.validate()?;
        crate::classifier::classify_exact(&self.base_point(), self.symmetric_mode)?;
        let it = &self.probe_settings.iterate;
        if self.probes.contains(&Probe::Iterate) {
            crate::iteration::WindowParams::new(1, 1, it.a, it.b)?;
            if it.log_end <= self.fixed.r_start.ln() || it.nodes < 2 || it.k == 0 {
                return invalid("iterate probe needs k >= 1, nodes >= 2 and e^log_end above r_start");
            }
        }
        let sh = &self.probe_settings.shoot;
        if self.probes.contains(&Probe::Shoot)
            && !(sh.data_min > 0.0 && sh.data_max >= sh.data_min && sh.data_count >= 1 && sh.cap > sh.data_max)
        {
            return invalid("shoot probe needs 0 < data_min <= data_max < cap and data_count >= 1");
        }
        Ok(())
    }

    pub fn system_config(&self) -> Result<SystemConfig> {
        SystemConfig::new(
            self.fixed.dimension,
            self.fixed.alpha.to_f64(),
            self.fixed.beta.to_f64(),
        )
    }

    /// The exact point with every swept parameter at zero.
    pub fn base_point(&self) -> ExactPoint {
        let get = |p: Param| self.fixed.pinned(p).map_or_else(BigRational::zero, |d| d.0.clone());
        ExactPoint {
            alpha: self.fixed.alpha.0.clone(),
            beta: self.fixed.beta.0.clone(),
            lambda: get(Param::Lambda),
            mu: get(Param::Mu),
            nu: get(Param::Nu),
            xi: get(Param::Xi),
        }
    }

    /// Output paths: explicit entries resolve against `base_dir`; defaults
    /// are `<stem>.csv` and `<stem>.svg` in `base_dir`.
    pub fn output_paths(&self, base_dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
        let csv = self
            .output_csv
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{stem}.csv")));
        let svg = self
            .output_svg
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{stem}.svg")));
        (base_dir.join(csv), base_dir.join(svg))
    }
}

pub(crate) fn set_param(point: &mut ExactPoint, p: Param, value: BigRational) {
    match p {
        Param::Lambda => point.lambda = value,
        Param::Mu => point.mu = value,
        Param::Nu => point.nu = value,
        Param::Xi => point.xi = value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_decimal("0.1").unwrap(), rat(1, 10));
        assert_eq!(parse_decimal("-2.50").unwrap(), rat(-5, 2));
        assert_eq!(parse_decimal("+3").unwrap(), rat(3, 1));
        assert_eq!(parse_decimal("1.5e-3").unwrap(), rat(3, 2000));
        assert_eq!(parse_decimal("2E2").unwrap(), rat(200, 1));
        assert_eq!(parse_decimal(".5").unwrap(), rat(1, 2));
        assert_eq!(parse_decimal("-1/3").unwrap(), rat(-1, 3));
        assert_eq!(parse_decimal("0.5/1.5").unwrap(), rat(1, 3));
        for bad in ["", "-", "1.2.3", "abc", "1e", "1e99999", "0x10", "1/0", "1/2/3", "/2"] {
            assert!(parse_decimal(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn json_numbers_and_strings() {
        let spec = ScanSpec::from_json(
            r#"{"fixed": {"alpha": 2, "beta": "2", "lambda": 0.1},
                "axes": [{"param": "mu", "min": "0", "max": 5, "count": 3}]}"#,
        )
        .unwrap();
        assert_eq!(spec.fixed.lambda.as_ref().unwrap().0, rat(1, 10));
        assert_eq!(spec.probes, vec![Probe::Classify]);
        assert_eq!(spec.fixed.dimension, 3);
    }

    #[test]
    fn invalid_specs() {
        let cases = [
            r#"{"fixed": {"alpha": 2, "beta": 2}, "axes": []}"#,
            r#"{"fixed": {"alpha": 2, "beta": 2}, "axes": [{"param": "mu", "min": 1, "max": 0, "count": 3}]}"#,
            r#"{"fixed": {"alpha": 2, "beta": 2}, "axes": [{"param": "mu", "min": 0, "max": 1, "count": 1}]}"#,
            r#"{"fixed": {"alpha": 2, "beta": 2, "mu": 1}, "axes": [{"param": "mu", "min": 0, "max": 1, "count": 3}]}"#,
            r#"{"fixed": {"alpha": 0.5, "beta": 1}, "axes": [{"param": "mu", "min": 0, "max": 1, "count": 3}]}"#,
            r#"{"fixed": {"alpha": 2, "beta": 2}, "axes": [{"param": "alpha", "min": 0, "max": 1, "count": 3}]}"#,
            r#"{"fixed": {"alpha": 2, "beta": 2}, "axes": [{"param": "mu", "min": 0, "max": 1, "count": 3}], "colour": 1}"#,
        ];
        for c in cases {
            let err = ScanSpec::from_json(c).unwrap_err();
            assert!(err.is_input_error(), "{c}: {err}");
        }
    }

    #[test]
    fn output_defaults_follow_stem() {
        let spec = ScanSpec::from_json(
            r#"{"fixed": {"alpha": 2, "beta": 2}, "axes": [{"param": "mu", "min": 0, "max": 1, "count": 2}]}"#,
        )
        .unwrap();
        let (c, s) = spec.output_paths(Path::new("/tmp/x"), "fig9");
        assert_eq!(c, PathBuf::from("/tmp/x/fig9.csv"));
        assert_eq!(s, PathBuf::from("/tmp/x/fig9.svg"));
    }
}
