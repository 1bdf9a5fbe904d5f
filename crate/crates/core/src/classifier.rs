//! Closed-form regime conditions.
//!
//! Nonexistence of nontrivial nonnegative entire solutions is decided by six
//! conditions on `(α, β, λ, μ, ν, ξ)`; existence of positive entire solutions
//! by four more. The lower envelope of the coefficients is used for the first
//! family, the upper envelope for the second.
//!
//! Every condition is a conjunction of sign tests on affine-in-each-variable
//! expressions. Signs are computed exactly: a floating-point filter settles
//! the clear cases and anything near zero is re-evaluated in exact rational
//! arithmetic on the stored values, so `λ = 2` or `2 − μ + β(2 − λ) = 0` are
//! recognised only when they hold exactly.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub dimension: u32,
    pub alpha: f64,
    pub beta: f64,
}

impl SystemConfig {
    pub fn new(dimension: u32, alpha: f64, beta: f64) -> Result<Self> {
        let cfg = SystemConfig { dimension, alpha, beta };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 3 {
            return Err(Error::InvalidInput(format!(
                "dimension must be at least 3, got {}",
                self.dimension
            )));
        }
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::NonFinite("alpha/beta".into()));
        }
        if self.alpha <= 0.0 || self.beta <= 0.0 {
            return Err(Error::Hypothesis(format!(
                "alpha and beta must be positive (alpha = {}, beta = {})",
                self.alpha, self.beta
            )));
        }
        let point = FloatPoint::from_parts(self, &DecayProfile::default());
        if sign(&point, Expr::CouplingMinusOne) != Ordering::Greater {
            return Err(Error::Hypothesis(format!(
                "alpha * beta must exceed 1 (alpha = {}, beta = {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// `N − 2`, the exponent of the radial fundamental solution.
    pub fn kernel_power(&self) -> f64 {
        f64::from(self.dimension) - 2.0
    }
}

/// Power-log envelope shared by the lower bound (nonexistence) and the upper
/// bound (existence):
/// `p̃(r) ~ L_p r^(-λ) (ln r)^(-ν)`, `q̃(r) ~ L_q r^(-μ) (ln r)^(-ξ)` for
/// `r ≥ r_start > 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub lambda: f64,
    pub nu: f64,
    pub mu: f64,
    pub xi: f64,
    pub l_p: f64,
    pub l_q: f64,
    pub r_start: f64,
}

impl Default for DecayProfile {
    fn default() -> Self {
        DecayProfile {
            lambda: 0.0,
            nu: 0.0,
            mu: 0.0,
            xi: 0.0,
            l_p: 1.0,
            l_q: 1.0,
            r_start: std::f64::consts::E,
        }
    }
}

impl DecayProfile {
    pub fn exponents(lambda: f64, nu: f64, mu: f64, xi: f64) -> Self {
        DecayProfile {
            lambda,
            nu,
            mu,
            xi,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda, self.nu, self.mu, self.xi, self.l_p, self.l_q, self.r_start];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("decay profile".into()));
        }
        if self.l_p <= 0.0 || self.l_q <= 0.0 {
            return Err(Error::InvalidInput("envelope constants must be positive".into()));
        }
        if self.r_start <= 1.0 {
            return Err(Error::InvalidInput(format!(
                "onset radius must exceed 1, got {}",
                self.r_start
            )));
        }
        Ok(())
    }
}

/// Identifier of a single theorem condition, e.g. `T1.iii` or `T3.i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConditionId {
    /// Nonexistence condition, index 1..=6.
    Nonexistence(u8),
    /// Existence condition, index 1..=4.
    Existence(u8),
}

const ROMAN: [&str; 6] = ["i", "ii", "iii", "iv", "v", "vi"];

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ConditionId::Nonexistence(i) => write!(f, "T1.{}", ROMAN[usize::from(i) - 1]),
            ConditionId::Existence(i) => write!(f, "T3.{}", ROMAN[usize::from(i) - 1]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    Nonexistence,
    Existence,
    Undetermined,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VerdictKind::Nonexistence => "Nonexistence",
            VerdictKind::Existence => "Existence",
            VerdictKind::Undetermined => "Undetermined",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    #[serde(rename = "conditions")]
    pub satisfied_conditions: Vec<String>,
    pub symmetric_mode: bool,
}

impl Verdict {
    fn from_conditions(t1: &[bool; 6], t3: &[bool; 4], symmetric_mode: bool) -> Verdict {
        let nonexistence: Vec<String> = t1
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| ConditionId::Nonexistence(i as u8 + 1).to_string())
            .collect();
        if !nonexistence.is_empty() {
            return Verdict {
                kind: VerdictKind::Nonexistence,
                satisfied_conditions: nonexistence,
                symmetric_mode,
            };
        }
        let existence: Vec<String> = t3
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| ConditionId::Existence(i as u8 + 1).to_string())
            .collect();
        let kind = if existence.is_empty() {
            VerdictKind::Undetermined
        } else {
            VerdictKind::Existence
        };
        Verdict {
            kind,
            satisfied_conditions: existence,
            symmetric_mode,
        }
    }
}

/// The scalar expressions whose signs drive all conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expr {
    /// `2 − μ + β(2 − λ)`
    BalanceV,
    /// `2 − λ + α(2 − μ)`
    BalanceU,
    /// `1 − ξ − βν`
    LogBalanceV,
    /// `1 − ν − αξ`
    LogBalanceU,
    /// `1 − ξ + β(1 − ν)`
    CriticalLogV,
    /// `1 − ν + α(1 − ξ)`
    CriticalLogU,
    /// `λ − 2`
    LambdaMinusTwo,
    /// `μ − 2`
    MuMinusTwo,
    /// `α − 1`
    AlphaMinusOne,
    /// `β − 1`
    BetaMinusOne,
    /// `αβ − 1`
    CouplingMinusOne,
}

impl Expr {
    pub const ALL: [Expr; 11] = [
        Expr::BalanceV,
        Expr::BalanceU,
        Expr::LogBalanceV,
        Expr::LogBalanceU,
        Expr::CriticalLogV,
        Expr::CriticalLogU,
        Expr::LambdaMinusTwo,
        Expr::MuMinusTwo,
        Expr::AlphaMinusOne,
        Expr::BetaMinusOne,
        Expr::CouplingMinusOne,
    ];
}

/// Parameter point that can report the sign of every [`Expr`].
pub trait SignSource {
    fn sign_of(&self, e: Expr) -> Ordering;
}

pub fn sign(point: &impl SignSource, e: Expr) -> Ordering {
    point.sign_of(e)
}

/// Exact parameter point; what the scanner works with.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactPoint {
    pub alpha: BigRational,
    pub beta: BigRational,
    pub lambda: BigRational,
    pub mu: BigRational,
    pub nu: BigRational,
    pub xi: BigRational,
}

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl ExactPoint {
    /// Exact rational image of the stored floating-point values.
    pub fn from_f64(cfg: &SystemConfig, prof: &DecayProfile) -> Self {
        ExactPoint {
            alpha: rat(cfg.alpha),
            beta: rat(cfg.beta),
            lambda: rat(prof.lambda),
            mu: rat(prof.mu),
            nu: rat(prof.nu),
            xi: rat(prof.xi),
        }
    }

    pub fn eval(&self, e: Expr) -> BigRational {
        let one = BigRational::one();
        let two = int(2);
        match e {
            Expr::BalanceV => &two - &self.mu + &self.beta * (&two - &self.lambda),
            Expr::BalanceU => &two - &self.lambda + &self.alpha * (&two - &self.mu),
            Expr::LogBalanceV => &one - &self.xi - &self.beta * &self.nu,
            Expr::LogBalanceU => &one - &self.nu - &self.alpha * &self.xi,
            Expr::CriticalLogV => &one - &self.xi + &self.beta * (&one - &self.nu),
            Expr::CriticalLogU => &one - &self.nu + &self.alpha * (&one - &self.xi),
            Expr::LambdaMinusTwo => &self.lambda - &two,
            Expr::MuMinusTwo => &self.mu - &two,
            Expr::AlphaMinusOne => &self.alpha - &one,
            Expr::BetaMinusOne => &self.beta - &one,
            Expr::CouplingMinusOne => &self.alpha * &self.beta - &one,
        }
    }

    /// Swaps the roles of `(α, λ, ν)` and `(β, μ, ξ)`.
    pub fn swapped(&self) -> Self {
        ExactPoint {
            alpha: self.beta.clone(),
            beta: self.alpha.clone(),
            lambda: self.mu.clone(),
            mu: self.lambda.clone(),
            nu: self.xi.clone(),
            xi: self.nu.clone(),
        }
    }
}

fn rational_sign(x: &BigRational) -> Ordering {
    if x.is_zero() {
        Ordering::Equal
    } else if x.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

impl SignSource for ExactPoint {
    fn sign_of(&self, e: Expr) -> Ordering {
        rational_sign(&self.eval(e))
    }
}

/// Floating-point point with an exact fallback for near-zero expressions.
#[derive(Clone, Copy, Debug)]
struct FloatPoint {
    cfg: SystemConfig,
    prof: DecayProfile,
}

impl FloatPoint {
    fn from_parts(cfg: &SystemConfig, prof: &DecayProfile) -> Self {
        FloatPoint { cfg: *cfg, prof: *prof }
    }

    /// Value and a magnitude bound `Σ|terms|` used for the rounding filter.
    fn eval(&self, e: Expr) -> (f64, f64) {
        let (a, b) = (self.cfg.alpha, self.cfg.beta);
        let p = &self.prof;
        let (l, m, n, x) = (p.lambda, p.mu, p.nu, p.xi);
        match e {
            Expr::BalanceV => (2.0 - m + b * (2.0 - l), 2.0 + m.abs() + b.abs() * (2.0 + l.abs())),
            Expr::BalanceU => (2.0 - l + a * (2.0 - m), 2.0 + l.abs() + a.abs() * (2.0 + m.abs())),
            Expr::LogBalanceV => (1.0 - x - b * n, 1.0 + x.abs() + (b * n).abs()),
            Expr::LogBalanceU => (1.0 - n - a * x, 1.0 + n.abs() + (a * x).abs()),
            Expr::CriticalLogV => (1.0 - x + b * (1.0 - n), 1.0 + x.abs() + b.abs() * (1.0 + n.abs())),
            Expr::CriticalLogU => (1.0 - n + a * (1.0 - x), 1.0 + n.abs() + a.abs() * (1.0 + x.abs())),
            Expr::LambdaMinusTwo => (l - 2.0, l.abs() + 2.0),
            Expr::MuMinusTwo => (m - 2.0, m.abs() + 2.0),
            Expr::AlphaMinusOne => (a - 1.0, a.abs() + 1.0),
            Expr::BetaMinusOne => (b - 1.0, b.abs() + 1.0),
            Expr::CouplingMinusOne => (a * b - 1.0, (a * b).abs() + 1.0),
        }
    }
}

impl SignSource for FloatPoint {
    fn sign_of(&self, e: Expr) -> Ordering {
        let (value, magnitude) = self.eval(e);
        // At most five rounded operations per expression.
        let bound = 8.0 * f64::EPSILON * magnitude;
        if value > bound {
            Ordering::Greater
        } else if value < -bound {
            Ordering::Less
        } else {
            ExactPoint::from_f64(&self.cfg, &self.prof).sign_of(e)
        }
    }
}

fn check_coupling(point: &impl SignSource) -> Result<()> {
    if point.sign_of(Expr::CouplingMinusOne) != Ordering::Greater {
        return Err(Error::Hypothesis("alpha * beta must exceed 1".into()));
    }
    Ok(())
}

fn check_nonexistence_hypotheses(point: &impl SignSource, symmetric_mode: bool) -> Result<()> {
    check_coupling(point)?;
    if !symmetric_mode
        && (point.sign_of(Expr::AlphaMinusOne) == Ordering::Less || point.sign_of(Expr::BetaMinusOne) == Ordering::Less)
    {
        return Err(Error::Hypothesis(
            "nonexistence conditions require alpha >= 1 and beta >= 1 \
             unless symmetric mode is enabled (radial solutions only)"
                .into(),
        ));
    }
    Ok(())
}

fn nonexistence_flags(s: &impl SignSource) -> [bool; 6] {
    use Ordering::*;
    let pos = |e| s.sign_of(e) == Greater;
    let zero = |e| s.sign_of(e) == Equal;
    let neg = |e| s.sign_of(e) == Less;
    let both_critical = zero(Expr::LambdaMinusTwo) && zero(Expr::MuMinusTwo);
    [
        pos(Expr::BalanceV),
        pos(Expr::BalanceU),
        zero(Expr::BalanceV) && neg(Expr::LambdaMinusTwo) && pos(Expr::LogBalanceV),
        zero(Expr::BalanceU) && neg(Expr::MuMinusTwo) && pos(Expr::LogBalanceU),
        both_critical && pos(Expr::CriticalLogV),
        both_critical && pos(Expr::CriticalLogU),
    ]
}

fn existence_flags(s: &impl SignSource) -> [bool; 4] {
    use Ordering::*;
    let zero = |e| s.sign_of(e) == Equal;
    let neg = |e| s.sign_of(e) == Less;
    [
        neg(Expr::BalanceV) && neg(Expr::BalanceU),
        zero(Expr::BalanceV) && neg(Expr::LambdaMinusTwo) && neg(Expr::LogBalanceV),
        zero(Expr::BalanceU) && neg(Expr::MuMinusTwo) && neg(Expr::LogBalanceU),
        zero(Expr::LambdaMinusTwo) && zero(Expr::MuMinusTwo) && neg(Expr::CriticalLogV) && neg(Expr::CriticalLogU),
    ]
}

fn validated_point(cfg: &SystemConfig, prof: &DecayProfile) -> Result<FloatPoint> {
    if cfg.dimension < 3 {
        return Err(Error::InvalidInput(format!(
            "dimension must be at least 3, got {}",
            cfg.dimension
        )));
    }
    let values = [cfg.alpha, cfg.beta, prof.lambda, prof.mu, prof.nu, prof.xi];
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("classifier parameters".into()));
    }
    if cfg.alpha <= 0.0 || cfg.beta <= 0.0 {
        return Err(Error::Hypothesis("alpha and beta must be positive".into()));
    }
    Ok(FloatPoint::from_parts(cfg, prof))
}

/// Nonexistence conditions (i)–(vi), in order.
pub fn theorem1_conditions(cfg: &SystemConfig, prof: &DecayProfile, symmetric_mode: bool) -> Result<[bool; 6]> {
    let point = validated_point(cfg, prof)?;
    check_nonexistence_hypotheses(&point, symmetric_mode)?;
    Ok(nonexistence_flags(&point))
}

/// Existence conditions (i)–(iv), in order. Only `αβ > 1` is required.
pub fn theorem3_conditions(cfg: &SystemConfig, prof: &DecayProfile) -> Result<[bool; 4]> {
    let point = validated_point(cfg, prof)?;
    check_coupling(&point)?;
    Ok(existence_flags(&point))
}

pub fn classify(cfg: &SystemConfig, prof: &DecayProfile, symmetric_mode: bool) -> Result<Verdict> {
    let t1 = theorem1_conditions(cfg, prof, symmetric_mode)?;
    let t3 = theorem3_conditions(cfg, prof)?;
    Ok(Verdict::from_conditions(&t1, &t3, symmetric_mode))
}

pub fn theorem1_conditions_exact(point: &ExactPoint, symmetric_mode: bool) -> Result<[bool; 6]> {
    check_nonexistence_hypotheses(point, symmetric_mode)?;
    Ok(nonexistence_flags(point))
}

pub fn theorem3_conditions_exact(point: &ExactPoint) -> Result<[bool; 4]> {
    if point.alpha.is_negative() || point.alpha.is_zero() || point.beta.is_negative() || point.beta.is_zero() {
        return Err(Error::Hypothesis("alpha and beta must be positive".into()));
    }
    check_coupling(point)?;
    Ok(existence_flags(point))
}

/// Classification on exact rational parameters.
pub fn classify_exact(point: &ExactPoint, symmetric_mode: bool) -> Result<Verdict> {
    let t3 = theorem3_conditions_exact(point)?;
    let t1 = theorem1_conditions_exact(point, symmetric_mode)?;
    Ok(Verdict::from_conditions(&t1, &t3, symmetric_mode))
}

/// `σ_k = −ξ − βν + (α^k β^k − 1)(1 − ξ − βν) αβ / (αβ − 1)`, the log
/// exponent of `u_{2k+1}^β` in the critical case `2 − μ + β(2 − λ) = 0`.
pub fn sigma_k(cfg: &SystemConfig, prof: &DecayProfile, k: u32) -> f64 {
    let ab = cfg.alpha * cfg.beta;
    let log_balance = 1.0 - prof.xi - cfg.beta * prof.nu;
    -prof.xi - cfg.beta * prof.nu + (ab.powi(k as i32) - 1.0) * log_balance * ab / (ab - 1.0)
}

/// Predicted growth of the iterates in the critical case
/// `2 − μ + β(2 − λ) = 0, λ < 2`:
/// `v_{2k} ≳ (ln r)^{a_k}` and `u_{2k+1} ≳ r^{2−λ} (ln r)^{α a_k − ν}` with
/// `a_k = (α^k β^k − 1)(1 − βν − ξ)/(αβ − 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalGrowth {
    pub v_even_log_exponent: f64,
    pub u_odd_power_exponent: f64,
    pub u_odd_log_exponent: f64,
}

pub fn critical_growth(cfg: &SystemConfig, prof: &DecayProfile, k: u32) -> CriticalGrowth {
    let ab = cfg.alpha * cfg.beta;
    let a_k = (ab.powi(k as i32) - 1.0) * (1.0 - cfg.beta * prof.nu - prof.xi) / (ab - 1.0);
    CriticalGrowth {
        v_even_log_exponent: a_k,
        u_odd_power_exponent: 2.0 - prof.lambda,
        u_odd_log_exponent: cfg.alpha * a_k - prof.nu,
    }
}
