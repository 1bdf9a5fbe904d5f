//! Lower-bound recurrences for radial averages of entire solutions.
//!
//! Starting from `u_0 = v_0 = 1`,
//!
//! ```text
//!     u_k(r) = 1/(N−2) ∫_ρ^r s p̃(s) [1 − (s/r)^{N−2}] v_{k−1}^α(s) ds
//!     v_k(r) = 1/(N−2) ∫_ρ^r s q̃(s) [1 − (s/r)^{N−2}] u_{k−1}^β(s) ds
//! ```
//!
//! Any nontrivial nonnegative entire solution has spherical averages bounded
//! below by constant multiples of these iterates. Plugging them into the
//! window functionals
//!
//! ```text
//!     y_k(R) = ∫_R^{aR} (aR − s)^m s^{1−m} p̃(s) v_k^α(s) ds
//!     z_k(R) = ∫_R^{aR} (aR − s)^n s^{1−n} q̃(s) u_k^β(s) ds
//! ```
//!
//! yields the oscillation quantities whose unboundedness in `R` rules out
//! entire solutions. Everything here is evaluated on a log-uniform radial
//! grid; divergence is only ever reported as a fitted growth signature.

use std::io::Write;

use serde::Serialize;

use crate::classifier::SystemConfig;
use crate::error::{invalid, Error, Result};
use crate::field::{fmt_f64, Radial, RadialTable};
use crate::quadrature::{interp_log_linear, trapezoid};

/// Iterates above this value are treated as overflow.
pub const SATURATION: f64 = 1e300;

/// Intervals integrated with the start factor split off, per `√γ`; past
/// them the exponential interpolant is off by about `γ/(12 j²)` relative.
const FACTORED_SPAN: f64 = 30.0;

/// Beyond this the Gauss rule no longer resolves `x^order` on one interval.
const MAX_VANISHING_ORDER: f64 = 24.0;

/// Extra sample points inserted per grid interval in window integrals.
const WINDOW_SUBDIVISION: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    log_step: f64,
}

impl RadialGrid {
    /// `count` nodes log-uniformly spaced on `[start, end]`.
    pub fn log_uniform(start: f64, end: f64, count: usize) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) {
            return Err(Error::NonFinite("grid bounds".into()));
        }
        if start <= 0.0 || end <= start {
            return invalid(format!("grid needs 0 < start < end, got [{start}, {end}]"));
        }
        if count < 2 {
            return invalid("grid needs at least two nodes");
        }
        let (l0, l1) = (start.ln(), end.ln());
        let log_step = (l1 - l0) / (count - 1) as f64;
        let nodes = (0..count)
            .map(|i| match i {
                0 => start,
                i if i == count - 1 => end,
                i => (l0 + log_step * i as f64).exp(),
            })
            .collect();
        Ok(RadialGrid { nodes, log_step })
    }

    /// Grid start `max(r0, e)`, keeping `ln r ≥ 1` wherever profiles are used.
    pub fn default_start(r0: f64) -> f64 {
        r0.max(std::f64::consts::E)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn log_step(&self) -> f64 {
        self.log_step
    }

    pub fn ratio(&self) -> f64 {
        self.log_step.exp()
    }
}

/// `u_k`, `v_k` on a grid, together with the reduced profiles they were
/// built from.
#[derive(Clone, Debug)]
pub struct IterationState {
    pub k: usize,
    pub grid: RadialGrid,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub config: SystemConfig,
    pub p_profile: RadialTable,
    pub q_profile: RadialTable,
    pub saturated: bool,
    /// Leading behavior of `u`, `v` at the grid start.
    pub start: [StartBehavior; 2],
}

/// `u ≈ coefficient · x^order` as `x = ln(r/r₀) → 0`; NaN fields when
/// unknown (a coefficient vanishing at the start).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StartBehavior {
    pub order: f64,
    pub coefficient: f64,
}

impl StartBehavior {
    const UNKNOWN: StartBehavior = StartBehavior {
        order: f64::NAN,
        coefficient: f64::NAN,
    };

    fn constant(value: f64) -> Self {
        StartBehavior {
            order: 0.0,
            coefficient: value,
        }
    }
}

impl IterationState {
    /// `k = 0` state with profiles sampled from `p`, `q` at the grid nodes.
    pub fn new(config: SystemConfig, grid: RadialGrid, p: &dyn Radial, q: &dyn Radial) -> Result<Self> {
        let p_profile = RadialTable::sample(p, grid.nodes())?;
        let q_profile = RadialTable::sample(q, grid.nodes())?;
        Self::from_profiles(config, grid, p_profile, q_profile)
    }

    /// `k = 0` state from tabulated profiles, resampled onto the grid.
    pub fn from_profiles(
        config: SystemConfig,
        grid: RadialGrid,
        p_profile: RadialTable,
        q_profile: RadialTable,
    ) -> Result<Self> {
        config.validate()?;
        let on_grid = |t: RadialTable| -> Result<RadialTable> {
            if t.radii() == grid.nodes() {
                Ok(t)
            } else {
                RadialTable::sample(&t, grid.nodes())
            }
        };
        let p_profile = on_grid(p_profile)?;
        let q_profile = on_grid(q_profile)?;
        let n = grid.len();
        Ok(IterationState {
            k: 0,
            grid,
            u: vec![1.0; n],
            v: vec![1.0; n],
            config,
            p_profile,
            q_profile,
            saturated: false,
            start: [StartBehavior::constant(1.0); 2],
        })
    }

    /// One step of the recurrence. A step whose values exceed
    /// [`SATURATION`] returns a state flagged `saturated` with values capped;
    /// iterating a saturated state is an error.
    pub fn iterate(&self) -> Result<IterationState> {
        if self.saturated {
            return Err(Error::Saturated(self.k));
        }
        let cfg = &self.config;
        let r0 = self.grid.start();
        let u_new = self.next_component(self.p_profile.values(), &self.v, self.start[1], cfg.alpha, r0);
        let v_new = self.next_component(self.q_profile.values(), &self.u, self.start[0], cfg.beta, r0);
        let (u_new, ub) = u_new;
        let (v_new, vb) = v_new;
        let mut saturated = false;
        let mut cap = |xs: Vec<f64>| -> Vec<f64> {
            xs.into_iter()
                .map(|x| {
                    if x.is_nan() || x > SATURATION {
                        saturated = true;
                        SATURATION
                    } else {
                        x
                    }
                })
                .collect()
        };
        let u = cap(u_new);
        let v = cap(v_new);
        Ok(IterationState {
            k: self.k + 1,
            grid: self.grid.clone(),
            u,
            v,
            config: self.config,
            p_profile: self.p_profile.clone(),
            q_profile: self.q_profile.clone(),
            saturated,
            start: [ub, vb],
        })
    }

    /// One component of the recurrence, with the start behavior it inherits:
    /// `g ≈ G₀ x^γ` gives `out ≈ G₀ x^{γ+2} / ((γ+1)(γ+2))`.
    fn next_component(
        &self,
        coef: &[f64],
        prev: &[f64],
        prev_start: StartBehavior,
        e: f64,
        r0: f64,
    ) -> (Vec<f64>, StartBehavior) {
        let kp = self.config.kernel_power();
        let lead = if coef[0] <= 0.0 {
            StartBehavior::UNKNOWN
        } else if prev[0] > 0.0 {
            StartBehavior {
                order: 0.0,
                coefficient: r0 * r0 * coef[0] * prev[0].powf(e),
            }
        } else {
            StartBehavior {
                order: e * prev_start.order,
                coefficient: r0 * r0 * coef[0] * prev_start.coefficient.powf(e),
            }
        };
        let out = recurrence(&self.grid, coef, prev, e, kp, lead);
        let g = lead.order;
        let next = StartBehavior {
            order: g + 2.0,
            coefficient: lead.coefficient / ((g + 1.0) * (g + 2.0)),
        };
        (out, next)
    }

    /// Iterates until `k == target` or saturation, whichever comes first.
    pub fn advance_to(self, target: usize) -> Result<IterationState> {
        let mut st = self;
        while st.k < target && !st.saturated {
            st = st.iterate()?;
        }
        Ok(st)
    }

    pub fn u_at(&self, r: f64) -> f64 {
        interp_log_linear(self.grid.nodes(), &self.u, r)
    }

    pub fn v_at(&self, r: f64) -> f64 {
        interp_log_linear(self.grid.nodes(), &self.v, r)
    }

    /// `# k=.. alpha=.. beta=.. N=..` followed by `r,u_k,v_k` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# k={} alpha={} beta={} N={}",
            self.k, self.config.alpha, self.config.beta, self.config.dimension
        )?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["r", "u_k", "v_k"])?;
        for ((r, u), v) in self.grid.nodes().iter().zip(&self.u).zip(&self.v) {
            out.write_record([fmt_f64(*r), fmt_f64(*u), fmt_f64(*v)])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `out(r_i) = 1/(N−2) ∫_{r_0}^{r_i} s·coef(s)·[1 − (s/r_i)^{N−2}]·prev(s)^e ds`.
///
/// In `t = ln s` the integrand is `g(t)·(1 − e^{(N−2)(t − t_i)})` with
/// `g = s² coef prev^e`. On each grid interval `g` is interpolated
/// exponentially and integrated against the exact kernel, so power-law
/// profiles are reproduced to rounding.
///
/// Iterates vanish at the inner radius like `x^γ`, `x = t − t_0`, which
/// exponential interpolation resolves poorly within a few dozen intervals
/// of the start. When `lead` (`g ≈ G₀ x^γ`) is known, those intervals
/// integrate `x^γ·h(x)` with `h` interpolated exponentially from `h(0) = G₀`
/// instead. Other zeros at a left interval end use an order read off the
/// next two nodes.
fn recurrence(
    grid: &RadialGrid,
    coef: &[f64],
    prev: &[f64],
    exponent: f64,
    kernel_power: f64,
    lead: StartBehavior,
) -> Vec<f64> {
    let order = lead.order;
    let nodes = grid.nodes();
    let logs: Vec<f64> = nodes.iter().map(|r| r.ln()).collect();
    // log-space keeps overflow of prev^e visible as +inf instead of NaN
    let lg: Vec<f64> = nodes
        .iter()
        .zip(coef)
        .zip(prev)
        .map(|((s, c), p)| {
            if *c == 0.0 || *p == 0.0 {
                f64::NEG_INFINITY
            } else {
                2.0 * s.ln() + c.ln() + exponent * p.ln()
            }
        })
        .collect();
    // order of vanishing of g at the left end of each interval, where it applies
    let orders: Vec<f64> = (0..nodes.len().saturating_sub(1))
        .map(|j| {
            if lg[j] != f64::NEG_INFINITY || !lg[j + 1].is_finite() || j + 2 >= nodes.len() || !lg[j + 2].is_finite() {
                return f64::NAN;
            }
            let spread = ((logs[j + 2] - logs[j]) / (logs[j + 1] - logs[j])).ln();
            (lg[j + 2] - lg[j + 1]) / spread
        })
        .collect();
    let factored = if order > 0.0 && order.is_finite() && lg[0] == f64::NEG_INFINITY {
        ((FACTORED_SPAN * order.sqrt()).ceil() as usize).min(nodes.len().saturating_sub(1))
    } else {
        0
    };
    // ln h = ln g − γ ln x on the factored intervals
    let lh: Vec<f64> = (0..=factored)
        .map(|j| {
            if j == 0 {
                let h0 = lead.coefficient.ln();
                if h0.is_finite() {
                    return h0;
                }
            }
            let j = j.max(1);
            lg[j] - order * (logs[j] - logs[0]).ln()
        })
        .collect();
    let at = |i: usize| -> f64 {
        let mut acc = 0.0;
        for j in 0..i {
            let delta = logs[j + 1] - logs[j];
            let d = logs[i] - logs[j];
            acc += if j < factored {
                let x0 = logs[j] - logs[0];
                let slope = (lh[j + 1] - lh[j]) / delta;
                gauss(delta, |x| {
                    let lg = order * (x0 + x).ln() + lh[j] + slope * x;
                    lg.exp() * -(-kernel_power * (d - x)).exp_m1()
                })
            } else {
                interval_integral(lg[j], lg[j + 1], orders[j], delta, kernel_power, d, j + 1 == i)
            };
        }
        acc / kernel_power
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        crate::with_pool(|| (0..nodes.len()).into_par_iter().map(at).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..nodes.len()).map(at).collect()
    }
}

/// `(e^z − 1)/z`.
fn exprel(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.exp_m1() / z
    }
}

/// `∫_0^δ g(x)·(1 − e^{−c(d − x)}) dx` for the interval interpolant of `g`
/// through `e^{lg0}`, `e^{lg1}`; `d ≥ δ` is the distance from the interval
/// start to the evaluation node. `order` is the vanishing order used when
/// `g` is zero at the left end (NaN falls back to a linear interpolant).
fn interval_integral(lg0: f64, lg1: f64, order: f64, delta: f64, c: f64, d: f64, last: bool) -> f64 {
    if lg0 == f64::NEG_INFINITY && lg1 == f64::NEG_INFINITY {
        return 0.0;
    }
    let kernel = |x: f64| -(-c * (d - x)).exp_m1();
    if lg0 == f64::NEG_INFINITY && lg1.is_finite() && order > 0.0 && order <= MAX_VANISHING_ORDER {
        let g1 = lg1.exp();
        return gauss(delta, |x| g1 * (x / delta).powf(order) * kernel(x));
    }
    if !(lg0.is_finite() && lg1.is_finite()) {
        let (g0, g1) = (lg0.exp(), lg1.exp());
        return gauss(delta, |x| (g0 + (g1 - g0) * x / delta) * kernel(x));
    }
    let b = (lg1 - lg0) / delta;
    if last {
        // the closed form below cancels when the kernel vanishes at x = δ
        return gauss(delta, |x| (lg0 + b * x).exp() * kernel(x));
    }
    // evaluate every exponential from its smaller end so nothing overflows early
    let plain = if b >= 0.0 {
        lg1.exp() * delta * exprel(-b * delta)
    } else {
        lg0.exp() * delta * exprel(b * delta)
    };
    let k = b + c;
    let damped = if k >= 0.0 {
        (lg1 - c * (d - delta)).exp() * delta * exprel(-k * delta)
    } else {
        (lg0 - c * d).exp() * delta * exprel(k * delta)
    };
    (plain - damped).max(0.0)
}

/// Eight-point Gauss–Legendre rule on `[0, δ]`.
fn gauss(delta: f64, f: impl Fn(f64) -> f64) -> f64 {
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let h = 0.5 * delta;
    let mut acc = 0.0;
    for (x, w) in X.iter().zip(W) {
        acc += w * (f(h * (1.0 - x)) + f(h * (1.0 + x)));
    }
    acc * h
}

/// Window shape `(m, n, a, b)`, with `1 < a < b ≤ 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindowParams {
    pub m: u32,
    pub n: u32,
    pub a: f64,
    pub b: f64,
}

impl Default for WindowParams {
    fn default() -> Self {
        WindowParams {
            m: 1,
            n: 1,
            a: 1.5,
            b: 2.0,
        }
    }
}

impl WindowParams {
    pub fn new(m: u32, n: u32, a: f64, b: f64) -> Result<Self> {
        if m == 0 || n == 0 {
            return invalid("window orders m, n must be positive");
        }
        if !(1.0 < a && a < b && b <= 2.0) {
            return invalid(format!("window needs 1 < a < b <= 2, got a = {a}, b = {b}"));
        }
        Ok(WindowParams { m, n, a, b })
    }

    /// Checks that `r^{1−m} p̃` and `r^{1−n} q̃` are nonincreasing on the grid.
    pub fn check_monotone(&self, state: &IterationState) -> Result<()> {
        if !weighted_nonincreasing(&state.p_profile, self.m) {
            return invalid(format!("r^(1-m) p is not nonincreasing on the grid for m = {}", self.m));
        }
        if !weighted_nonincreasing(&state.q_profile, self.n) {
            return invalid(format!("r^(1-n) q is not nonincreasing on the grid for n = {}", self.n));
        }
        Ok(())
    }

    /// Smallest admissible `(m, n)` for the profiles of `state`.
    pub fn minimal_orders(state: &IterationState) -> Result<(u32, u32)> {
        let m = minimal_monotone_order(&state.p_profile)?
            .ok_or_else(|| Error::InvalidInput("no admissible m <= 64 for p".into()))?;
        let n = minimal_monotone_order(&state.q_profile)?
            .ok_or_else(|| Error::InvalidInput("no admissible n <= 64 for q".into()))?;
        Ok((m, n))
    }
}

fn weighted_nonincreasing(profile: &RadialTable, order: u32) -> bool {
    let e = 1.0 - f64::from(order);
    profile
        .radii()
        .windows(2)
        .zip(profile.values().windows(2))
        .all(|(r, v)| {
            let lo = r[0].powf(e) * v[0];
            let hi = r[1].powf(e) * v[1];
            hi <= lo * (1.0 + 1e-12)
        })
}

/// Smallest `m ≥ 1` with `r^{1−m} profile(r)` nonincreasing across all
/// consecutive nodes; `None` if no `m ≤ 64` works.
pub fn minimal_monotone_order(profile: &RadialTable) -> Result<Option<u32>> {
    if profile.is_empty() {
        return invalid("profile is empty");
    }
    if profile.values().iter().any(|&v| v <= 0.0) {
        return invalid("monotone order needs a positive profile");
    }
    Ok((1..=64).find(|&m| weighted_nonincreasing(profile, m)))
}

/// Sample abscissae on `[lo, hi]`: both ends, the grid nodes strictly inside,
/// and geometric subdivisions of every interval.
fn window_abscissae(grid: &RadialGrid, lo: f64, hi: f64) -> Vec<f64> {
    let mut knots = vec![lo];
    knots.extend(grid.nodes().iter().copied().filter(|&r| r > lo && r < hi));
    knots.push(hi);
    let mut out = Vec::with_capacity(knots.len() * WINDOW_SUBDIVISION);
    for w in knots.windows(2) {
        let ratio = (w[1] / w[0]).powf(1.0 / WINDOW_SUBDIVISION as f64);
        let mut x = w[0];
        for _ in 0..WINDOW_SUBDIVISION {
            out.push(x);
            x *= ratio;
        }
    }
    out.push(hi);
    out
}

fn check_range(grid: &RadialGrid, lo: f64, hi: f64) -> Result<()> {
    let slack = 1e-12;
    if !(lo.is_finite() && hi.is_finite()) || lo < grid.start() * (1.0 - slack) || hi > grid.end() * (1.0 + slack) {
        return invalid(format!(
            "window [{lo}, {hi}] lies outside the grid [{}, {}]",
            grid.start(),
            grid.end()
        ));
    }
    Ok(())
}

/// `(y_k(R), z_k(R))`.
pub fn window_functionals(state: &IterationState, w: &WindowParams, r: f64) -> Result<(f64, f64)> {
    let top = w.a * r;
    check_range(&state.grid, r, top)?;
    let xs = window_abscissae(&state.grid, r, top);
    let cfg = &state.config;
    let (m, n) = (f64::from(w.m), f64::from(w.n));
    let ys: Vec<f64> = xs
        .iter()
        .map(|&s| {
            let p = state.p_profile.interpolate(s);
            if p == 0.0 {
                return 0.0;
            }
            (top - s).max(0.0).powf(m) * s.powf(1.0 - m) * p * state.v_at(s).powf(cfg.alpha)
        })
        .collect();
    let zs: Vec<f64> = xs
        .iter()
        .map(|&s| {
            let q = state.q_profile.interpolate(s);
            if q == 0.0 {
                return 0.0;
            }
            (top - s).max(0.0).powf(n) * s.powf(1.0 - n) * q * state.u_at(s).powf(cfg.beta)
        })
        .collect();
    Ok((trapezoid(&xs, &ys), trapezoid(&xs, &zs)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Functional {
    Y,
    Z,
}

/// The oscillation quantity of the chosen family at `R`:
///
/// ```text
///     Z:  z_k^{(αβ−1)/((m+1)β+n+1)}(R) ∫_{aR}^{bR} (s^{1−n} q̃ (s^{1−m} p̃)^β)^{1/((m+1)β+n+1)} ds
///     Y:  y_k^{(αβ−1)/((n+1)α+m+1)}(R) ∫_{aR}^{bR} (s^{1−m} p̃ (s^{1−n} q̃)^α)^{1/((n+1)α+m+1)} ds
/// ```
pub fn oscillation_quantity(state: &IterationState, w: &WindowParams, r: f64, which: Functional) -> Result<f64> {
    check_range(&state.grid, r, w.b * r)?;
    let (y, z) = window_functionals(state, w, r)?;
    let cfg = &state.config;
    let (alpha, beta) = (cfg.alpha, cfg.beta);
    let (m, n) = (f64::from(w.m), f64::from(w.n));
    let coupling = alpha * beta - 1.0;
    let (base, denom) = match which {
        Functional::Y => (y, (n + 1.0) * alpha + m + 1.0),
        Functional::Z => (z, (m + 1.0) * beta + n + 1.0),
    };
    if base == 0.0 {
        return Ok(0.0);
    }
    let xs = window_abscissae(&state.grid, w.a * r, w.b * r);
    let gs: Vec<f64> = xs
        .iter()
        .map(|&s| {
            let p = s.powf(1.0 - m) * state.p_profile.interpolate(s);
            let q = s.powf(1.0 - n) * state.q_profile.interpolate(s);
            let inner = match which {
                Functional::Y => p * q.powf(alpha),
                Functional::Z => q * p.powf(beta),
            };
            inner.powf(1.0 / denom)
        })
        .collect();
    Ok(base.powf(coupling / denom) * trapezoid(&xs, &gs))
}

/// `count` radii `R_j = R_0 · ratio^j`, placed so that the last window
/// `[R, bR]` ends at the grid end.
pub fn window_schedule(grid: &RadialGrid, w: &WindowParams, ratio: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || ratio <= 1.0 {
        return invalid("schedule needs at least two radii and ratio > 1");
    }
    let last = grid.end() / w.b;
    let first = last / ratio.powi(count as i32 - 1);
    if first < grid.start() {
        return invalid(format!(
            "schedule of {count} radii with ratio {ratio} does not fit the grid"
        ));
    }
    Ok((0..count).map(|j| first * ratio.powi(j as i32)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GrowthModel {
    /// `value ~ r^e`
    PowerOfR,
    /// `value ~ (ln r)^e`
    PowerOfLnR,
    /// `value ~ (ln ln r)^e`
    PowerOfLnLnR,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    pub exponent: f64,
    /// RMS deviation of `ln value` from the fitted line.
    pub residual: f64,
}

/// Least-squares slope of `ln value` against the model coordinate over the
/// upper half of the samples (sorted by radius). Only that half has to be
/// positive, so iterates vanishing at the inner radius can be passed whole.
pub fn fit_growth_exponent(samples: &[(f64, f64)], model: GrowthModel) -> Result<GrowthFit> {
    if samples.len() < 8 {
        return invalid(format!("growth fit needs at least 8 samples, got {}", samples.len()));
    }
    if samples.iter().any(|&(r, v)| !r.is_finite() || !v.is_finite()) {
        return invalid("growth fit needs finite samples");
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let upper = &sorted[sorted.len() / 2..];
    if upper.iter().any(|&(_, v)| v <= 0.0) {
        return invalid("growth fit needs positive values over the upper half");
    }
    let coord = |r: f64| -> Result<f64> {
        let x = match model {
            GrowthModel::PowerOfR => r.ln(),
            GrowthModel::PowerOfLnR => r.ln().ln(),
            GrowthModel::PowerOfLnLnR => r.ln().ln().ln(),
        };
        if x.is_finite() {
            Ok(x)
        } else {
            invalid(format!("radius {r} is outside the domain of {model:?}"))
        }
    };
    let pts: Vec<(f64, f64)> = upper
        .iter()
        .map(|&(r, v)| Ok((coord(r)?, v.ln())))
        .collect::<Result<_>>()?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("growth fit needs distinct radii");
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(GrowthFit {
        exponent: slope,
        residual,
    })
}

/// Oscillation quantity along a schedule of radii, with a fitted growth
/// order in `ln R`. A positive order with small residual is a divergence
/// signature, not a proof.
#[derive(Clone, Debug, Serialize)]
pub struct OscillationProbe {
    pub which: Functional,
    pub k: usize,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub fit: Option<GrowthFit>,
    pub divergence_signature: bool,
}

/// Residual bound for a fit to count as a divergence signature.
pub const SIGNATURE_RESIDUAL: f64 = 0.2;

pub fn oscillation_probe(
    state: &IterationState,
    w: &WindowParams,
    radii: &[f64],
    which: Functional,
) -> Result<OscillationProbe> {
    let values: Vec<f64> = radii
        .iter()
        .map(|&r| oscillation_quantity(state, w, r, which))
        .collect::<Result<_>>()?;
    let samples: Vec<(f64, f64)> = radii.iter().copied().zip(values.iter().copied()).collect();
    let fit = if values.iter().all(|&v| v > 0.0 && v.is_finite()) {
        fit_growth_exponent(&samples, GrowthModel::PowerOfLnR).ok()
    } else {
        None
    };
    let divergence_signature = fit.is_some_and(|f| f.exponent > 0.0 && f.residual < SIGNATURE_RESIDUAL);
    Ok(OscillationProbe {
        which,
        k: state.k,
        radii: radii.to_vec(),
        values,
        fit,
        divergence_signature,
    })
}

/// `1 − (s/r)^{N−2}` without cancellation, for `0 < s ≤ r`.
fn kernel(dimension: u32, s: f64, r: f64) -> f64 {
    let x = s / r;
    let mut sum = 0.0;
    let mut pow = 1.0;
    for _ in 0..dimension - 2 {
        sum += pow;
        pow *= x;
    }
    (r - s) / r * sum
}

/// Randomized check of the two kernel lower bounds on `R ≤ s ≤ r ≤ bR`:
///
/// ```text
///     1 − (s/r)^{N−2} ≥ (N−2)/b^{N−2} · ((r − s)/s)^m
///     1 − (s/r)^{N−2} ≥ (r − s)/r
/// ```
///
/// Comparisons allow four ulps of rounding on the right-hand side.
pub fn kernel_bounds_check(dimension: u32, b: f64, m: u32, trials: usize, seed: u64) -> bool {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    if dimension < 3 || !(b > 1.0 && b <= 2.0) || m == 0 {
        return false;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let np = f64::from(dimension) - 2.0;
    let c = np / b.powf(np);
    let slack = 1.0 - 4.0 * f64::EPSILON;
    for _ in 0..trials {
        let big_r = (rng.random::<f64>() * 20.0 - 10.0).exp();
        let s = big_r * (1.0 + (b - 1.0) * rng.random::<f64>());
        let r = s + (b * big_r - s) * rng.random::<f64>();
        let r = r.min(b * big_r).max(s);
        let k = kernel(dimension, s, r);
        let first = c * ((r - s) / s).powi(m as i32);
        let second = (r - s) / r;
        if k < first * slack || k < second * slack {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg3() -> SystemConfig {
        SystemConfig::new(3, 2.0, 2.0).unwrap()
    }

    #[test]
    fn grid_is_geometric() {
        let g = RadialGrid::log_uniform(2.0, 2000.0, 301).unwrap();
        let ratio = g.ratio();
        for w in g.nodes().windows(2) {
            assert!((w[1] / w[0] / ratio - 1.0).abs() < 1e-12);
        }
        assert_eq!(g.start(), 2.0);
        assert_eq!(g.end(), 2000.0);
        assert!(RadialGrid::log_uniform(2.0, 1.0, 10).is_err());
        assert!(RadialGrid::log_uniform(0.0, 1.0, 10).is_err());
    }

    #[test]
    fn zeroth_iterate_is_one() {
        let g = RadialGrid::log_uniform(3.0, 30.0, 16).unwrap();
        let st = IterationState::new(cfg3(), g, &|r: f64| 1.0 / r, &|r: f64| 1.0 / r).unwrap();
        assert_eq!(st.k, 0);
        assert!(st.u.iter().chain(&st.v).all(|&x| x == 1.0));
    }

    #[test]
    fn first_iterate_matches_closed_form() {
        let g = RadialGrid::log_uniform(1.0, 1e3, 512).unwrap();
        let st = IterationState::new(cfg3(), g, &|r: f64| 1.0 / r, &|r: f64| 1.0 / r).unwrap();
        let st = st.iterate().unwrap();
        assert_eq!(st.u[0], 0.0);
        for (r, u) in st.grid.nodes().iter().zip(&st.u).skip(1) {
            let want = r / 2.0 - 1.0 + 1.0 / (2.0 * r);
            assert!((u / want - 1.0).abs() < 1e-9, "r={r} got {u} want {want}");
        }
        let at2 = st.u_at(2.0);
        assert!((at2 / 0.25 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn start_behavior_is_tracked() {
        // u_1 = cosh x − 1 ≈ x²/2 for p̃ = 1/s from r₀ = 1
        let g = RadialGrid::log_uniform(1.0, 1e3, 2000).unwrap();
        let st = IterationState::new(cfg3(), g, &|r: f64| 1.0 / r, &|r: f64| 1.0 / r).unwrap();
        let st = st.advance_to(2).unwrap();
        // v_1 ≈ x²/2, so g ≈ (x²/2)² = x⁴/4 and u_2 ≈ x⁶/120
        assert_eq!(st.start[0].order, 6.0);
        assert!((st.start[0].coefficient - 1.0 / 120.0).abs() < 1e-15);
        let x = st.grid.log_step();
        let lead = x.powi(6) / 120.0;
        assert!((st.u[1] / lead - 1.0).abs() < 1e-2, "{} vs {lead}", st.u[1]);
    }

    #[test]
    fn zero_coefficient_gives_zero_iterates() {
        let g = RadialGrid::log_uniform(3.0, 300.0, 64).unwrap();
        let st = IterationState::new(cfg3(), g, &|_: f64| 0.0, &|r: f64| 1.0 / r).unwrap();
        let st = st.advance_to(3).unwrap();
        assert!(st.u.iter().all(|&x| x == 0.0));
        let w = WindowParams::new(1, 1, 1.5, 2.0).unwrap();
        let (y, _) = window_functionals(&st, &w, 10.0).unwrap();
        assert_eq!(y, 0.0);
    }

    #[test]
    fn saturation_halts() {
        let g = RadialGrid::log_uniform(3.0, 1e30, 400).unwrap();
        let st = IterationState::new(cfg3(), g, &|_: f64| 1.0, &|_: f64| 1.0).unwrap();
        let st = st.advance_to(20).unwrap();
        assert!(st.saturated);
        assert!(st.k < 20);
        assert!(matches!(st.iterate(), Err(Error::Saturated(_))));
        assert!(st.u.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn window_integral_of_constants() {
        let g = RadialGrid::log_uniform(1.1, 10.0, 40).unwrap();
        let st = IterationState::new(cfg3(), g, &|_: f64| 1.0, &|_: f64| 1.0).unwrap();
        let w = WindowParams::new(1, 1, 1.5, 2.0).unwrap();
        let (y, z) = window_functionals(&st, &w, 2.0).unwrap();
        assert!((z - 0.5).abs() < 1e-12, "z = {z}");
        assert!((y - 0.5).abs() < 1e-12);
    }

    #[test]
    fn window_outside_grid_is_rejected() {
        let g = RadialGrid::log_uniform(2.0, 10.0, 40).unwrap();
        let st = IterationState::new(cfg3(), g, &|_: f64| 1.0, &|_: f64| 1.0).unwrap();
        let w = WindowParams::default();
        assert!(window_functionals(&st, &w, 8.0).is_err());
        assert!(window_functionals(&st, &w, 1.0).is_err());
        assert!(oscillation_quantity(&st, &w, 6.0, Functional::Z).is_err());
    }

    #[test]
    fn window_params_validation() {
        assert!(WindowParams::new(1, 1, 1.0, 2.0).is_err());
        assert!(WindowParams::new(1, 1, 1.5, 2.5).is_err());
        assert!(WindowParams::new(1, 1, 1.7, 1.6).is_err());
        assert!(WindowParams::new(0, 1, 1.5, 2.0).is_err());
    }

    #[test]
    fn monotone_orders() {
        let radii: Vec<f64> = (0..50).map(|i| 2.0 * 1.1f64.powi(i)).collect();
        let table = |e: f64| RadialTable::new(radii.clone(), radii.iter().map(|r| r.powf(e)).collect()).unwrap();
        assert_eq!(minimal_monotone_order(&table(-2.0)).unwrap(), Some(1));
        assert_eq!(minimal_monotone_order(&table(0.5)).unwrap(), Some(2));
        assert_eq!(minimal_monotone_order(&table(2.5)).unwrap(), Some(4));
        assert_eq!(minimal_monotone_order(&table(70.0)).unwrap(), None);
        let zero = RadialTable::new(radii.clone(), vec![0.0; radii.len()]).unwrap();
        assert!(minimal_monotone_order(&zero).is_err());
    }

    #[test]
    fn growth_fit_recovers_power() {
        let samples: Vec<(f64, f64)> = (1..=20)
            .map(|i| {
                let r = 10f64.powi(i);
                (r, 3.0 * r.powf(1.5))
            })
            .collect();
        let fit = fit_growth_exponent(&samples, GrowthModel::PowerOfR).unwrap();
        assert!((fit.exponent - 1.5).abs() < 1e-6);
        assert!(fit.residual < 1e-9);
        let lnr: Vec<(f64, f64)> = (1..=20)
            .map(|i| {
                let r = 10f64.powi(i);
                (r, 0.7 * r.ln().powf(-0.25))
            })
            .collect();
        let fit = fit_growth_exponent(&lnr, GrowthModel::PowerOfLnR).unwrap();
        assert!((fit.exponent + 0.25).abs() < 1e-9);
        assert!(fit_growth_exponent(&samples[..5], GrowthModel::PowerOfR).is_err());
        // zeros are tolerated in the lower half only
        let mut low = samples.clone();
        low[3].1 = 0.0;
        assert!(fit_growth_exponent(&low, GrowthModel::PowerOfR).is_ok());
        let mut high = samples.clone();
        high[15].1 = 0.0;
        assert!(fit_growth_exponent(&high, GrowthModel::PowerOfR).is_err());
        high[15].1 = f64::NAN;
        assert!(fit_growth_exponent(&high, GrowthModel::PowerOfR).is_err());
    }

    #[test]
    fn kernel_degenerate_and_random() {
        assert_eq!(kernel(5, 3.0, 3.0), 0.0);
        assert!(kernel_bounds_check(3, 2.0, 1, 10_000, 1));
        assert!(kernel_bounds_check(5, 2.0, 3, 10_000, 2));
        assert!(kernel_bounds_check(4, 1.5, 2, 10_000, 3));
    }

    #[test]
    fn csv_has_header_comment() {
        let g = RadialGrid::log_uniform(3.0, 30.0, 8).unwrap();
        let st = IterationState::new(cfg3(), g, &|r: f64| 1.0 / r, &|r: f64| 1.0 / r).unwrap();
        let mut buf = Vec::new();
        st.iterate().unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# k=1 alpha=2 beta=2 N=3");
        assert_eq!(lines.next().unwrap(), "r,u_k,v_k");
        assert_eq!(lines.count(), 8);
    }
}
