//! Lair's sufficient conditions for existence of positive entire solutions.
//!
//! For radial coefficients the system has positive entire solutions when
//! `αβ > 1` and at least one of
//!
//! ```text
//!     ∫_0^∞ t p(t) ( t^{2−N} ∫_0^t s^{N−3} ∫_0^s τ q(τ) dτ ds )^α dt < ∞      (by q)
//!     ∫_0^∞ t q(t) ( t^{2−N} ∫_0^t s^{N−3} ∫_0^s τ p(τ) dτ ds )^β dt < ∞      (by p)
//! ```
//!
//! holds. Convergence of an improper integral cannot be decided from finitely
//! many samples, so each condition is evaluated on a doubling schedule of
//! truncation radii and reported as converged, divergent or inconclusive.
//!
//! All three nested integrals are accumulated in a single left-to-right
//! sweep over panels (a fixed fine block on `[0, 1]`, log-spaced panels
//! beyond), with nested Gauss–Legendre rules inside each panel and adaptive
//! bisection of panels whose halves disagree with the whole.

use serde::{Deserialize, Serialize};

use crate::classifier::SystemConfig;
use crate::error::{invalid, Error, Result};
use crate::field::Radial;
use crate::quadrature::GaussLegendre;

const GAUSS_ORDER: usize = 10;
const UNIT_PANELS: usize = 8;
const MAX_DEPTH: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LairControls {
    /// First truncation radius; must exceed 1.
    pub t0: f64,
    /// Number of doublings after `t0`.
    pub j_max: usize,
    /// Relative agreement required between successive truncations.
    pub rel_tol: f64,
    /// Required excess of the fitted tail decay order over 1.
    pub gamma_margin: f64,
    /// Minimum octave growth ratio minus one for a divergence signature.
    pub div_tol: f64,
    pub panels_per_octave: usize,
    /// Relative tolerance of the per-panel adaptive quadrature.
    pub quad_tol: f64,
}

impl Default for LairControls {
    fn default() -> Self {
        LairControls {
            t0: 8.0,
            j_max: 24,
            rel_tol: 1e-4,
            gamma_margin: 0.05,
            div_tol: 1e-3,
            panels_per_octave: 8,
            quad_tol: 1e-11,
        }
    }
}

impl LairControls {
    fn validate(&self) -> Result<()> {
        if !(self.t0 > 1.0 && self.t0.is_finite()) {
            return invalid("lair t0 must be a finite value above 1");
        }
        if self.panels_per_octave == 0 {
            return invalid("panels_per_octave must be positive");
        }
        if !(self.rel_tol > 0.0 && self.quad_tol > 0.0 && self.div_tol > 0.0 && self.gamma_margin >= 0.0) {
            return invalid("lair tolerances must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailStatus {
    Converged,
    Divergent,
    Inconclusive,
}

/// Outcome of one condition. Serializes to exactly `value`, `converged`,
/// `tail_exponent`, `truncation_radius`, `history`; the three-way status is
/// kept alongside for callers that need to tell divergence from
/// inconclusiveness.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub converged: bool,
    /// Fitted decay order `γ` of the outer integrand over the last octave
    /// (`g(t) ~ t^{−γ}`); infinite when the integrand vanishes there.
    pub tail_exponent: f64,
    pub truncation_radius: f64,
    pub history: Vec<[f64; 2]>,
    #[serde(skip)]
    pub status: TailStatus,
}

#[derive(Clone, Copy, Debug, Default)]
struct Cumulative {
    /// `∫_0^t τ f(τ) dτ`
    first: f64,
    /// `∫_0^t s^{N−3} first(s) ds`
    second: f64,
    /// `∫_0^t x w(x) (x^{2−N} second(x))^e dx`
    outer: f64,
}

struct NestedSweep<'a> {
    kernel_power: i32,
    dimension: u32,
    inner: &'a dyn Radial,
    outer: Option<(&'a dyn Radial, f64)>,
    gl: GaussLegendre,
    tol: f64,
}

impl<'a> NestedSweep<'a> {
    fn new(cfg: &SystemConfig, inner: &'a dyn Radial, outer: Option<(&'a dyn Radial, f64)>, tol: f64) -> Self {
        NestedSweep {
            kernel_power: cfg.dimension as i32 - 3,
            dimension: cfg.dimension,
            inner,
            outer,
            gl: GaussLegendre::new(GAUSS_ORDER),
            tol,
        }
    }

    fn inner_at(&self, tau: f64) -> Result<f64> {
        let v = self.inner.value(tau);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("coefficient sample at t = {tau}")));
        }
        Ok(v)
    }

    fn first_increment(&self, a: f64, x: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (tau, w) in self.gl.mapped(a, x) {
            acc += w * tau * self.inner_at(tau)?;
        }
        Ok(acc)
    }

    fn second_increment(&self, a: f64, x: f64, first_a: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (s, w) in self.gl.mapped(a, x) {
            let first = first_a + self.first_increment(a, s)?;
            acc += w * s.powi(self.kernel_power) * first;
        }
        Ok(acc)
    }

    fn outer_value(&self, t: f64, second: f64) -> Result<f64> {
        let (field, exponent) = match self.outer {
            Some(o) => o,
            None => return Ok(0.0),
        };
        let w = field.value(t);
        if !w.is_finite() {
            return Err(Error::NonFinite(format!("coefficient sample at t = {t}")));
        }
        if w == 0.0 {
            return Ok(0.0);
        }
        let inner = second * t.powi(2 - self.dimension as i32);
        Ok(t * w * inner.powf(exponent))
    }

    fn panel(&self, a: f64, b: f64, st: Cumulative) -> Result<Cumulative> {
        let first = st.first + self.first_increment(a, b)?;
        let second = st.second + self.second_increment(a, b, st.first)?;
        let mut outer = st.outer;
        if self.outer.is_some() {
            let mut acc = 0.0;
            for (t, w) in self.gl.mapped(a, b) {
                let sec = st.second + self.second_increment(a, t, st.first)?;
                acc += w * self.outer_value(t, sec)?;
            }
            outer += acc;
        }
        Ok(Cumulative { first, second, outer })
    }

    fn close(&self, x: f64, y: f64) -> bool {
        (x - y).abs() <= self.tol * y.abs().max(x.abs())
    }

    fn advance(&self, a: f64, b: f64, st: Cumulative, depth: u32) -> Result<Cumulative> {
        let whole = self.panel(a, b, st)?;
        let mid = 0.5 * (a + b);
        let left = self.panel(a, mid, st)?;
        let split = self.panel(mid, b, left)?;
        let agree = self.close(whole.first, split.first)
            && self.close(whole.second, split.second)
            && self.close(whole.outer, split.outer);
        if agree || depth >= MAX_DEPTH {
            return Ok(split);
        }
        let left = self.advance(a, mid, st, depth + 1)?;
        self.advance(mid, b, left, depth + 1)
    }
}

/// Panel breakpoints from 0 to `end`: a uniform block on `[0, min(end, 1)]`,
/// then `per_octave` log-uniform panels per doubling.
fn breakpoints(end: f64, per_octave: usize) -> Vec<f64> {
    let unit_end = end.min(1.0);
    let mut pts: Vec<f64> = (0..=UNIT_PANELS)
        .map(|i| unit_end * i as f64 / UNIT_PANELS as f64)
        .collect();
    if end > 1.0 {
        let panels = ((end.log2()) * per_octave as f64).ceil().max(1.0) as usize;
        let step = end.ln() / panels as f64;
        pts.extend((1..=panels).map(|i| if i == panels { end } else { (step * i as f64).exp() }));
    }
    pts
}

/// `t^{2−N} ∫_0^t s^{N−3} ∫_0^s τ q(τ) dτ ds`.
pub fn lair_inner(cfg: &SystemConfig, q: &dyn Radial, t: f64) -> Result<f64> {
    cfg.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return invalid(format!("lair_inner needs a positive finite radius, got {t}"));
    }
    let sweep = NestedSweep::new(cfg, q, None, 1e-12);
    let pts = breakpoints(t, LairControls::default().panels_per_octave);
    let mut st = Cumulative::default();
    for w in pts.windows(2) {
        st = sweep.advance(w[0], w[1], st, 0)?;
    }
    Ok(st.second * t.powi(2 - cfg.dimension as i32))
}

/// `t · outer(t) · lair_inner(inner, t)^exponent`.
pub fn outer_integrand(
    cfg: &SystemConfig,
    outer: &dyn Radial,
    inner: &dyn Radial,
    exponent: f64,
    t: f64,
) -> Result<f64> {
    let w = outer.value(t);
    if !w.is_finite() {
        return Err(Error::NonFinite(format!("coefficient sample at t = {t}")));
    }
    Ok(t * w * lair_inner(cfg, inner, t)?.powf(exponent))
}

fn fit_decay_order(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, g)| *g > 0.0 && g.is_finite())
        .map(|(t, g)| (t.ln(), g.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    -sxy / sxx
}

/// Evaluates `∫_0^T t·outer(t)·(inner-nested(t))^exponent dt` for
/// `T = t0 · 2^j`, stopping at the first convergence or divergence signature.
pub fn lair_condition(
    cfg: &SystemConfig,
    outer: &dyn Radial,
    inner: &dyn Radial,
    outer_exponent: f64,
    controls: &LairControls,
) -> Result<IntegralEstimate> {
    cfg.validate()?;
    controls.validate()?;
    if !(outer_exponent > 0.0 && outer_exponent.is_finite()) {
        return invalid("outer exponent must be positive");
    }
    let sweep = NestedSweep::new(cfg, inner, Some((outer, outer_exponent)), controls.quad_tol);
    let ppo = controls.panels_per_octave;

    let mut st = Cumulative::default();
    let mut history: Vec<[f64; 2]> = Vec::new();
    // outer integrand at the breakpoints of the most recent octave
    let mut octave: Vec<(f64, f64)> = Vec::new();
    let mut segment_start = 0.0;
    let mut tail_exponent = f64::INFINITY;
    let mut status = TailStatus::Inconclusive;

    for j in 0..=controls.j_max {
        let target = controls.t0 * 2f64.powi(j as i32);
        let pts: Vec<f64> = if j == 0 {
            breakpoints(target, ppo)
        } else {
            let step = std::f64::consts::LN_2 / ppo as f64;
            (0..=ppo)
                .map(|i| match i {
                    0 => segment_start,
                    i if i == ppo => target,
                    i => segment_start * (step * i as f64).exp(),
                })
                .collect()
        };
        for w in pts.windows(2) {
            st = sweep.advance(w[0], w[1], st, 0)?;
            let t = w[1];
            if t >= target / 2.0 * (1.0 - 1e-12) {
                octave.push((t, sweep.outer_value(t, st.second)?));
            }
        }
        tail_exponent = fit_decay_order(&octave);
        octave.clear();
        octave.push((target, sweep.outer_value(target, st.second)?));
        segment_start = target;

        let value = st.outer;
        history.push([target, value]);
        if !value.is_finite() {
            status = TailStatus::Divergent;
            break;
        }
        if j == 0 {
            continue;
        }
        let prev = history[j - 1][1];
        let diff = value - prev;
        let agrees = diff <= controls.rel_tol * value.abs() || (value == 0.0 && prev == 0.0);
        if agrees && tail_exponent > 1.0 + controls.gamma_margin {
            status = TailStatus::Converged;
            break;
        }
        if j >= 2 && prev > 0.0 && value / prev >= 1.0 + controls.div_tol && tail_exponent <= 1.0 {
            status = TailStatus::Divergent;
            break;
        }
    }

    let last = *history.last().expect("at least one truncation");
    Ok(IntegralEstimate {
        value: last[1],
        converged: status == TailStatus::Converged,
        tail_exponent,
        truncation_radius: last[0],
        history,
        status,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LairVerdict {
    /// The condition with outer coefficient `p` and nested `q` converged.
    ExistenceByQ,
    /// The condition with outer coefficient `q` and nested `p` converged.
    ExistenceByP,
    /// Both conditions show a divergence signature. This is not a proof of
    /// nonexistence: the conditions are only sufficient.
    NeitherDetected,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct LairReport {
    pub verdict: LairVerdict,
    pub by_q: IntegralEstimate,
    pub by_q_status: TailStatus,
    pub by_p: IntegralEstimate,
    pub by_p_status: TailStatus,
    pub note: &'static str,
}

const NOTE_NEITHER: &str = "neither sufficient condition converged; this does not establish nonexistence";
const NOTE_FOUND: &str = "a sufficient condition for positive entire solutions converged numerically";
const NOTE_INCONCLUSIVE: &str = "truncation schedule exhausted without a convergence or divergence signature";

pub fn lair_verdict(cfg: &SystemConfig, p: &dyn Radial, q: &dyn Radial, controls: &LairControls) -> Result<LairReport> {
    cfg.validate()?;
    let by_q = lair_condition(cfg, p, q, cfg.alpha, controls)?;
    let by_p = lair_condition(cfg, q, p, cfg.beta, controls)?;
    let (verdict, note) = if by_q.converged {
        (LairVerdict::ExistenceByQ, NOTE_FOUND)
    } else if by_p.converged {
        (LairVerdict::ExistenceByP, NOTE_FOUND)
    } else if by_q.status == TailStatus::Divergent && by_p.status == TailStatus::Divergent {
        (LairVerdict::NeitherDetected, NOTE_NEITHER)
    } else {
        (LairVerdict::Inconclusive, NOTE_INCONCLUSIVE)
    };
    Ok(LairReport {
        verdict,
        by_q_status: by_q.status,
        by_p_status: by_p.status,
        by_q,
        by_p,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg3() -> SystemConfig {
        SystemConfig::new(3, 2.0, 2.0).unwrap()
    }

    fn capped(t: f64) -> f64 {
        if t <= 1.0 {
            1.0
        } else {
            t.powi(-5)
        }
    }

    #[test]
    fn inner_of_constant_is_cubic_over_six() {
        for t in [0.3, 1.0, 7.5, 123.0] {
            let got = lair_inner(&cfg3(), &|_: f64| 1.0, t).unwrap();
            assert!((got / (t * t / 6.0) - 1.0).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn inner_in_higher_dimension() {
        // N = 5, q = 1: t^{-3} ∫ s^2 s^2/2 ds = t^2/10
        let cfg = SystemConfig::new(5, 2.0, 2.0).unwrap();
        let got = lair_inner(&cfg, &|_: f64| 1.0, 4.0).unwrap();
        assert!((got - 1.6).abs() < 1e-12);
    }

    #[test]
    fn inner_of_zero_is_zero() {
        assert_eq!(lair_inner(&cfg3(), &|_: f64| 0.0, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn inner_of_capped_decay() {
        // closed form A(t) - B(t)/t with A = 1/2 + (1 - t^-3)/3, B = 1/3 + (1 - t^-2)/2
        let got = lair_inner(&cfg3(), &capped, 10.0).unwrap();
        assert!((got / 0.750_166_666_666_666_7 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_finite_samples_are_rejected() {
        let err = lair_inner(&cfg3(), &|t: f64| if t > 2.0 { f64::NAN } else { 1.0 }, 5.0).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn zero_outer_converges_immediately() {
        let est = lair_condition(&cfg3(), &|_: f64| 0.0, &|_: f64| 1.0, 2.0, &LairControls::default()).unwrap();
        assert!(est.converged);
        assert_eq!(est.value, 0.0);
        assert_eq!(est.history.len(), 2);
    }

    #[test]
    fn json_has_exactly_the_documented_fields() {
        let est = lair_condition(&cfg3(), &capped, &capped, 2.0, &LairControls::default()).unwrap();
        let v = serde_json::to_value(&est).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            ["converged", "history", "tail_exponent", "truncation_radius", "value"]
        );
        assert!(v["history"][0].as_array().unwrap().len() == 2);
    }

    #[test]
    fn history_is_nondecreasing() {
        let est = lair_condition(&cfg3(), &|_: f64| 1.0, &|_: f64| 1.0, 2.0, &LairControls::default()).unwrap();
        assert!(est.history.windows(2).all(|w| w[1][1] >= w[0][1]));
        assert_eq!(est.status, TailStatus::Divergent);
        assert!((est.tail_exponent + 5.0).abs() < 1e-6);
        let ratio = est.history[2][1] / est.history[1][1];
        assert!((ratio / 64.0 - 1.0).abs() < 1e-3, "ratio {ratio}");
    }

    #[test]
    fn rejects_bad_controls() {
        let c = LairControls {
            t0: 1.0,
            ..Default::default()
        };
        assert!(lair_condition(&cfg3(), &capped, &capped, 2.0, &c).is_err());
    }
}
