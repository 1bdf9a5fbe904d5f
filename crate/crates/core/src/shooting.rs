//! Radial shooting from the origin.
//!
//! For radial data the system becomes
//!
//! ```text
//!     (r^{N−1} u′)′ = r^{N−1} p(r) v^α,   (r^{N−1} v′)′ = r^{N−1} q(r) u^β,
//!     u(0) = u0, v(0) = v0, u′(0) = v′(0) = 0,
//! ```
//!
//! integrated as a first-order system in `(u, U, v, V)` with
//! `U = r^{N−1} u′`. A trajectory either reaches the horizon or crosses the
//! cap. Neither outcome proves anything about entire solutions; both are
//! numerical evidence, and only radial solutions are probed.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::classifier::SystemConfig;
use crate::error::{invalid, Error, Result};
use crate::field::{fmt_f64, Radial};

/// Maximum number of trajectory samples kept in a result.
pub const MAX_TRAJECTORY_POINTS: usize = 4096;

/// The vertical-asymptote check looks at accepted steps taken after
/// `max(u, v)` first exceeded `cap / ASYMPTOTE_SPAN`.
const ASYMPTOTE_SPAN: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepControls {
    /// Radius of the series step off the origin; also the first RK step.
    pub initial_step: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for StepControls {
    fn default() -> Self {
        StepControls {
            initial_step: 1e-4,
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone)]
pub struct ShootingProblem {
    pub config: SystemConfig,
    pub p: Arc<dyn Radial>,
    pub q: Arc<dyn Radial>,
    pub u0: f64,
    pub v0: f64,
    pub horizon: f64,
    pub cap: f64,
    pub controls: StepControls,
}

impl fmt::Debug for ShootingProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ShootingProblem")
            .field("config", &self.config)
            .field("u0", &self.u0)
            .field("v0", &self.v0)
            .field("horizon", &self.horizon)
            .field("cap", &self.cap)
            .field("controls", &self.controls)
            .finish_non_exhaustive()
    }
}

impl ShootingProblem {
    /// Problem with horizon `10³`, cap `10⁸` and default step controls.
    pub fn new(config: SystemConfig, p: Arc<dyn Radial>, q: Arc<dyn Radial>, u0: f64, v0: f64) -> Self {
        ShootingProblem {
            config,
            p,
            q,
            u0,
            v0,
            horizon: 1e3,
            cap: 1e8,
            controls: StepControls::default(),
        }
    }

    pub fn with_data(&self, u0: f64, v0: f64) -> Self {
        ShootingProblem { u0, v0, ..self.clone() }
    }

    pub fn with_horizon(self, horizon: f64) -> Self {
        ShootingProblem { horizon, ..self }
    }

    pub fn with_cap(self, cap: f64) -> Self {
        ShootingProblem { cap, ..self }
    }

    pub fn with_controls(self, controls: StepControls) -> Self {
        ShootingProblem { controls, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let vals = [
            self.u0,
            self.v0,
            self.horizon,
            self.cap,
            self.controls.rtol,
            self.controls.atol,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("shooting parameters".into()));
        }
        if self.u0 <= 0.0 || self.v0 <= 0.0 {
            return invalid("center values u0, v0 must be positive");
        }
        if self.horizon <= 0.0 {
            return invalid("horizon must be positive");
        }
        if self.cap <= self.u0.max(self.v0) {
            return invalid("cap must exceed max(u0, v0)");
        }
        let c = &self.controls;
        if !(c.rtol > 0.0 && c.atol > 0.0) {
            return invalid("tolerances must be positive");
        }
        if !(c.initial_step > 0.0 && c.initial_step < self.horizon) {
            return invalid("initial step must lie in (0, horizon)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    GlobalToHorizon,
    BlowUp,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::GlobalToHorizon => "GlobalToHorizon",
            Outcome::BlowUp => "BlowUp",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShootingResult {
    pub outcome: Outcome,
    /// Radius where `max(u, v)` reaches the cap.
    pub blowup_radius: Option<f64>,
    /// Cap reached without the step collapse of a vertical asymptote.
    pub soft: bool,
    /// `(r, u, v)` samples, decimated to at most [`MAX_TRAJECTORY_POINTS`].
    pub trajectory: Vec<[f64; 3]>,
    pub max_values: (f64, f64),
    /// Relative increase of `max(u, v)` over `[horizon/2, horizon]`.
    pub last_octave_growth: Option<f64>,
    pub steps: usize,
}

impl ShootingResult {
    /// Blow-up radius, or the horizon for global trajectories.
    pub fn terminal_radius(&self) -> f64 {
        self.trajectory.last().map_or(0.0, |t| t[0])
    }

    /// `r,u,v` CSV of the sampled trajectory.
    pub fn write_trajectory_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["r", "u", "v"])?;
        for t in &self.trajectory {
            out.write_record([fmt_f64(t[0]), fmt_f64(t[1]), fmt_f64(t[2])])?;
        }
        out.flush()?;
        Ok(())
    }
}

type State = [f64; 4];

struct System<'a> {
    np1: i32,
    alpha: f64,
    beta: f64,
    p: &'a dyn Radial,
    q: &'a dyn Radial,
}

impl System<'_> {
    fn rhs(&self, r: f64, y: &State) -> State {
        let w = r.powi(self.np1);
        let u = y[0].max(0.0);
        let v = y[2].max(0.0);
        [
            y[1] / w,
            w * self.p.value(r) * v.powf(self.alpha),
            y[3] / w,
            w * self.q.value(r) * u.powf(self.beta),
        ]
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step; returns the fifth-order solution and the
/// embedded error estimate.
fn dp_step(sys: &System<'_>, r: f64, y: &State, h: f64) -> (State, State) {
    let mut k = [[0.0; 4]; 7];
    k[0] = sys.rhs(r, y);
    for s in 1..7 {
        let mut ys = *y;
        for (c, a) in A[s].iter().enumerate().take(s) {
            for i in 0..4 {
                ys[i] += h * a * k[c][i];
            }
        }
        k[s] = sys.rhs(r + C[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut err = [0.0; 4];
    for s in 0..7 {
        for i in 0..4 {
            y5[i] += h * B5[s] * k[s][i];
            err[i] += h * (B5[s] - B4[s]) * k[s][i];
        }
    }
    (y5, err)
}

fn error_norm(err: &State, y0: &State, y1: &State, c: &StepControls) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        let scale = c.atol + c.rtol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / scale).powi(2);
    }
    (acc / 4.0).sqrt()
}

fn monotone(prev: &State, next: &State) -> bool {
    next.iter().zip(prev).all(|(n, p)| n >= p) && next[1] >= 0.0 && next[3] >= 0.0
}

pub fn shoot(prob: &ShootingProblem) -> Result<ShootingResult> {
    prob.validate()?;
    let cfg = &prob.config;
    let sys = System {
        np1: cfg.dimension as i32 - 1,
        alpha: cfg.alpha,
        beta: cfg.beta,
        p: prob.p.as_ref(),
        q: prob.q.as_ref(),
    };
    let ctl = &prob.controls;
    let n = f64::from(cfg.dimension);

    let mut points: Vec<[f64; 3]> = vec![[0.0, prob.u0, prob.v0]];
    // series step off the origin
    let r1 = ctl.initial_step;
    let pu = prob.p.value(0.0) * prob.v0.powf(cfg.alpha);
    let qv = prob.q.value(0.0) * prob.u0.powf(cfg.beta);
    let mut r = r1;
    let mut y: State = [
        prob.u0 + pu * r1 * r1 / (2.0 * n),
        pu * r1.powi(cfg.dimension as i32) / n,
        prob.v0 + qv * r1 * r1 / (2.0 * n),
        qv * r1.powi(cfg.dimension as i32) / n,
    ];
    if y.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("series start".into()));
    }
    points.push([r, y[0], y[2]]);

    let mut h = r1;
    let mut steps = 0usize;
    let mut recent: Vec<f64> = Vec::new();
    let mut outcome = Outcome::GlobalToHorizon;
    let mut blowup_radius = None;
    let mut soft = false;

    if y[0].max(y[2]) >= prob.cap {
        outcome = Outcome::BlowUp;
        blowup_radius = Some(r);
        soft = true;
    }

    while outcome == Outcome::GlobalToHorizon && r < prob.horizon {
        if steps >= ctl.max_steps {
            return Err(Error::StepUnderflow { r, step: h });
        }
        let mut step = h.min(prob.horizon - r);
        let last = step >= prob.horizon - r;
        if step < 1e-14 * r {
            return Err(Error::StepUnderflow { r, step });
        }
        let (y_new, err) = dp_step(&sys, r, &y, step);
        let norm = error_norm(&err, &y, &y_new, ctl);
        let finite = y_new.iter().all(|x| x.is_finite()) && norm.is_finite();
        if !finite || norm > 1.0 || !monotone(&y, &y_new) {
            let factor = if finite && norm > 0.0 {
                (0.9 * norm.powf(-0.2)).clamp(0.1, 0.5)
            } else {
                0.25
            };
            h = step * factor;
            continue;
        }
        steps += 1;
        let factor = if norm == 0.0 {
            5.0
        } else {
            (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        let r_new = if last { prob.horizon } else { r + step };
        let top = y_new[0].max(y_new[2]);
        if top >= prob.cap {
            // refine the crossing inside the step
            let (mut lo, mut hi) = (0.0, step);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let (ym, _) = dp_step(&sys, r, &y, mid);
                if ym[0].max(ym[2]) >= prob.cap || !ym.iter().all(|x| x.is_finite()) {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-13 * (r + hi) {
                    break;
                }
            }
            step = hi;
            let (yc, _) = dp_step(&sys, r, &y, step);
            let rc = r + step;
            // the truncated final step says nothing about the step controller
            soft = !vertical_asymptote(&recent);
            points.push([rc, yc[0], yc[2]]);
            y = yc;
            outcome = Outcome::BlowUp;
            blowup_radius = Some(rc);
            break;
        }
        if top * ASYMPTOTE_SPAN >= prob.cap {
            recent.push(step);
        }
        y = y_new;
        r = r_new;
        points.push([r, y[0], y[2]]);
        h = step * factor;
    }

    let last_octave_growth = if outcome == Outcome::GlobalToHorizon {
        let half = prob.horizon / 2.0;
        let at_half = interp_point(&points, half);
        let end = y[0].max(y[2]);
        let mid = at_half.0.max(at_half.1);
        (mid > 0.0).then(|| (end - mid) / mid)
    } else {
        None
    };

    Ok(ShootingResult {
        outcome,
        blowup_radius,
        soft,
        trajectory: decimate(points),
        max_values: (y[0], y[2]),
        last_octave_growth,
        steps,
    })
}

/// Step collapse while `max(u, v)` climbs the last `ASYMPTOTE_SPAN`-fold
/// to the cap: the final step must be at most half the first one. Slow
/// (exponential or polynomial) growth keeps or lengthens the step.
fn vertical_asymptote(steps: &[f64]) -> bool {
    match (steps.first(), steps.last()) {
        (Some(&h0), Some(&h1)) if steps.len() >= 2 => h1 <= 0.5 * h0,
        _ => false,
    }
}

fn interp_point(points: &[[f64; 3]], r: f64) -> (f64, f64) {
    let i = points.partition_point(|p| p[0] < r);
    if i == 0 {
        return (points[0][1], points[0][2]);
    }
    if i >= points.len() {
        let p = points[points.len() - 1];
        return (p[1], p[2]);
    }
    let (a, b) = (points[i - 1], points[i]);
    let t = (r - a[0]) / (b[0] - a[0]);
    (a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2]))
}

fn decimate(points: Vec<[f64; 3]>) -> Vec<[f64; 3]> {
    let n = points.len();
    if n <= MAX_TRAJECTORY_POINTS {
        return points;
    }
    let m = MAX_TRAJECTORY_POINTS;
    (0..m).map(|i| points[i * (n - 1) / (m - 1)]).collect()
}

/// `count` log-spaced values on `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
        return invalid(format!("log range needs 0 < lo <= hi, got [{lo}, {hi}]"));
    }
    match count {
        0 => invalid("log range needs at least one point"),
        1 => Ok(vec![lo]),
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            Ok((0..count)
                .map(|i| match i {
                    0 => lo,
                    i if i == count - 1 => hi,
                    i => (a + (b - a) * i as f64 / (count - 1) as f64).exp(),
                })
                .collect())
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub u0: f64,
    pub v0: f64,
    pub outcome: Option<Outcome>,
    pub soft: bool,
    /// Blow-up radius, or the horizon for global trajectories.
    pub radius_or_horizon: f64,
    pub max_u: f64,
    pub max_v: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub points: Vec<SweepPoint>,
    /// Fraction of points that reached the horizon.
    pub global_fraction: f64,
    pub blowup_fraction: f64,
    pub min_blowup_radius: Option<f64>,
    pub failures: usize,
}

impl SweepSummary {
    /// `u0,v0,outcome,radius_or_horizon,max_u,max_v`; failed points carry
    /// the outcome `Error` and empty numeric fields.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["u0", "v0", "outcome", "radius_or_horizon", "max_u", "max_v"])?;
        for p in &self.points {
            match p.outcome {
                Some(o) => out.write_record([
                    fmt_f64(p.u0),
                    fmt_f64(p.v0),
                    o.to_string(),
                    fmt_f64(p.radius_or_horizon),
                    fmt_f64(p.max_u),
                    fmt_f64(p.max_v),
                ])?,
                None => out.write_record([
                    fmt_f64(p.u0),
                    fmt_f64(p.v0),
                    "Error".to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                ])?,
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Shoots from every `(u0, v0)` of a log-spaced grid. Per-point failures are
/// recorded, not fatal; points are ordered `u0`-major.
pub fn initial_data_sweep(
    template: &ShootingProblem,
    u0_range: (f64, f64),
    v0_range: (f64, f64),
    counts: (usize, usize),
) -> Result<SweepSummary> {
    let us = log_space(u0_range.0, u0_range.1, counts.0)?;
    let vs = log_space(v0_range.0, v0_range.1, counts.1)?;
    let grid: Vec<(f64, f64)> = us.iter().flat_map(|&u| vs.iter().map(move |&v| (u, v))).collect();
    let run = |&(u0, v0): &(f64, f64)| -> SweepPoint {
        match shoot(&template.with_data(u0, v0)) {
            Ok(res) => SweepPoint {
                u0,
                v0,
                outcome: Some(res.outcome),
                soft: res.soft,
                radius_or_horizon: res.terminal_radius(),
                max_u: res.max_values.0,
                max_v: res.max_values.1,
                error: None,
            },
            Err(e) => SweepPoint {
                u0,
                v0,
                outcome: None,
                soft: false,
                radius_or_horizon: f64::NAN,
                max_u: f64::NAN,
                max_v: f64::NAN,
                error: Some(e.to_string()),
            },
        }
    };
    #[cfg(feature = "parallel")]
    let points: Vec<SweepPoint> = {
        use rayon::prelude::*;
        crate::with_pool(|| grid.par_iter().map(run).collect())
    };
    #[cfg(not(feature = "parallel"))]
    let points: Vec<SweepPoint> = grid.iter().map(run).collect();

    let total = points.len() as f64;
    let global = points
        .iter()
        .filter(|p| p.outcome == Some(Outcome::GlobalToHorizon))
        .count();
    let blow = points.iter().filter(|p| p.outcome == Some(Outcome::BlowUp)).count();
    let min_blowup_radius = points
        .iter()
        .filter(|p| p.outcome == Some(Outcome::BlowUp))
        .map(|p| p.radius_or_horizon)
        .min_by(f64::total_cmp);
    Ok(SweepSummary {
        global_fraction: global as f64 / total,
        blowup_fraction: blow as f64 / total,
        min_blowup_radius,
        failures: points.iter().filter(|p| p.outcome.is_none()).count(),
        points,
    })
}
