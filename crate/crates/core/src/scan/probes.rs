//! Numerical probes attached to scan cells.
//!
//! A probe only produces `Tension` when its outcome contradicts the verdict
//! qualitatively:
//!
//! - a converged Lair integral in a Nonexistence cell,
//! - a divergence signature of the oscillation quantity in an Existence cell,
//! - a shooting trajectory that reaches the horizon in a Nonexistence cell.
//!
//! The converse outcomes (no signature, blow-up for some data, divergent
//! Lair integrals) are compatible with every verdict because the underlying
//! criteria are one-sided.

use std::sync::Arc;

use serde::Serialize;

use super::spec::{Probe, ScanSpec};
use super::{Agreement, RegionCell};
use crate::classifier::{ExactPoint, SystemConfig, VerdictKind};
use crate::error::Result;
use crate::field::{PowerLog, Radial};
use crate::iteration::{
    minimal_monotone_order, oscillation_probe, window_schedule, Functional, IterationState, RadialGrid, WindowParams,
};
use crate::lair::{lair_verdict, LairVerdict};
use crate::shooting::{initial_data_sweep, ShootingProblem};

#[derive(Clone, Debug, Serialize)]
pub struct LairProbe {
    pub verdict: LairVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterateProbe {
    /// Iterate the quantities were evaluated at; below the requested `k`
    /// when the next step saturated.
    pub k: usize,
    pub saturated: bool,
    pub m: u32,
    pub n: u32,
    pub y_order: Option<f64>,
    pub z_order: Option<f64>,
    pub divergence_signature: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShootProbe {
    pub global_fraction: f64,
    pub blowup_fraction: f64,
    pub min_blowup_radius: Option<f64>,
    pub failures: usize,
}

struct Coefficients {
    cfg: SystemConfig,
    p: PowerLog,
    q: PowerLog,
}

fn coefficients(spec: &ScanSpec, point: &ExactPoint) -> Result<Coefficients> {
    use num_traits::ToPrimitive;
    let f = |x: &num_rational::BigRational| x.to_f64().unwrap_or(f64::NAN);
    let fx = &spec.fixed;
    Ok(Coefficients {
        cfg: spec.system_config()?,
        p: PowerLog::new(fx.l_p, f(&point.lambda), f(&point.nu), fx.r_start)?,
        q: PowerLog::new(fx.l_q, f(&point.mu), f(&point.xi), fx.r_start)?,
    })
}

pub(super) fn run(spec: &ScanSpec, point: &ExactPoint, cell: &mut RegionCell) {
    let wanted = |p: Probe| spec.probes.contains(&p);
    if !(wanted(Probe::Lair) || wanted(Probe::Iterate) || wanted(Probe::Shoot)) {
        return;
    }
    let co = match coefficients(spec, point) {
        Ok(c) => c,
        Err(e) => {
            cell.errors.push(e.to_string());
            return;
        }
    };
    if wanted(Probe::Lair) {
        match lair_verdict(&co.cfg, &co.p, &co.q, &spec.probe_settings.lair) {
            Ok(r) => cell.lair = Some(LairProbe { verdict: r.verdict }),
            Err(e) => cell.errors.push(format!("lair: {e}")),
        }
    }
    if wanted(Probe::Iterate) {
        match iterate_probe(spec, &co) {
            Ok(r) => cell.iterate = Some(r),
            Err(e) => cell.errors.push(format!("iterate: {e}")),
        }
    }
    if wanted(Probe::Shoot) {
        match shoot_probe(spec, &co) {
            Ok(r) => cell.shoot = Some(r),
            Err(e) => cell.errors.push(format!("shoot: {e}")),
        }
    }
    cell.agreement = agreement(cell);
}

fn iterate_probe(spec: &ScanSpec, co: &Coefficients) -> Result<IterateProbe> {
    let it = &spec.probe_settings.iterate;
    let start = RadialGrid::default_start(spec.fixed.r_start);
    let grid = RadialGrid::log_uniform(start, it.log_end.exp(), it.nodes)?;
    let mut state = IterationState::new(co.cfg, grid, &co.p, &co.q)?;
    let mut saturated = false;
    while state.k < it.k {
        let next = state.iterate()?;
        if next.saturated {
            saturated = true;
            break;
        }
        state = next;
    }
    let m = minimal_monotone_order(&state.p_profile)?
        .ok_or_else(|| crate::Error::InvalidInput("no admissible window order m".into()))?;
    let n = minimal_monotone_order(&state.q_profile)?
        .ok_or_else(|| crate::Error::InvalidInput("no admissible window order n".into()))?;
    let w = WindowParams::new(m, n, it.a, it.b)?;
    let radii = window_schedule(&state.grid, &w, it.schedule_ratio, it.schedule_count)?;
    let y = oscillation_probe(&state, &w, &radii, Functional::Y)?;
    let z = oscillation_probe(&state, &w, &radii, Functional::Z)?;
    Ok(IterateProbe {
        k: state.k,
        saturated,
        m,
        n,
        y_order: y.fit.map(|f| f.exponent),
        z_order: z.fit.map(|f| f.exponent),
        divergence_signature: y.divergence_signature || z.divergence_signature,
    })
}

fn shoot_probe(spec: &ScanSpec, co: &Coefficients) -> Result<ShootProbe> {
    let sh = &spec.probe_settings.shoot;
    let p: Arc<dyn Radial> = Arc::new(co.p);
    let q: Arc<dyn Radial> = Arc::new(co.q);
    let template = ShootingProblem::new(co.cfg, p, q, sh.data_min, sh.data_min)
        .with_horizon(sh.horizon)
        .with_cap(sh.cap);
    let range = (sh.data_min, sh.data_max);
    let sweep = initial_data_sweep(&template, range, range, (sh.data_count, sh.data_count))?;
    Ok(ShootProbe {
        global_fraction: sweep.global_fraction,
        blowup_fraction: sweep.blowup_fraction,
        min_blowup_radius: sweep.min_blowup_radius,
        failures: sweep.failures,
    })
}

fn agreement(cell: &RegionCell) -> Agreement {
    if cell.lair.is_none() && cell.iterate.is_none() && cell.shoot.is_none() {
        return Agreement::NotProbed;
    }
    let kind = cell.verdict.kind;
    let lair_found = cell
        .lair
        .as_ref()
        .is_some_and(|l| matches!(l.verdict, LairVerdict::ExistenceByQ | LairVerdict::ExistenceByP));
    let diverges = cell.iterate.as_ref().is_some_and(|i| i.divergence_signature);
    let global = cell.shoot.as_ref().is_some_and(|s| s.global_fraction > 0.0);
    let tension = match kind {
        VerdictKind::Nonexistence => lair_found || global,
        VerdictKind::Existence => diverges,
        VerdictKind::Undetermined => false,
    };
    if tension {
        Agreement::Tension
    } else {
        Agreement::Consistent
    }
}
