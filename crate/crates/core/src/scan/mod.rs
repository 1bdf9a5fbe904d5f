//! Parameter-plane scans: classify every point of a one- or two-axis grid
//! over `(λ, μ, ν, ξ)`, optionally run numerical probes per cell, and emit a
//! region CSV plus an SVG map.
//!
//! Grid values are exact rationals. With `include_critical_lines` the grid
//! is augmented by the values where a condition expression vanishes, so the
//! equality cases of the theorems actually occur on the grid.

mod probes;
pub mod spec;
mod svg;

use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::classifier::{
    classify_exact, theorem1_conditions_exact, theorem3_conditions_exact, ExactPoint, Expr, Verdict, VerdictKind,
};
use crate::error::Result;

pub use probes::{IterateProbe, LairProbe, ShootProbe};
pub use spec::{parse_decimal, Axis, Decimal, Param, Probe, ScanSpec};

/// Expressions whose zero sets bound the regions of the map.
const BOUNDARY_EXPRS: [Expr; 8] = [
    Expr::BalanceV,
    Expr::BalanceU,
    Expr::LogBalanceV,
    Expr::LogBalanceU,
    Expr::CriticalLogV,
    Expr::CriticalLogU,
    Expr::LambdaMinusTwo,
    Expr::MuMinusTwo,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Agreement {
    Consistent,
    Tension,
    NotProbed,
}

impl std::fmt::Display for Agreement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Agreement::Consistent => "Consistent",
            Agreement::Tension => "Tension",
            Agreement::NotProbed => "NotProbed",
        })
    }
}

/// Values of one swept parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisGrid {
    pub param: Param,
    pub values: Vec<BigRational>,
}

impl AxisGrid {
    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(to_f64).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionCell {
    pub coordinates: Vec<f64>,
    #[serde(skip)]
    pub exact: Vec<BigRational>,
    pub verdict: Verdict,
    pub lair: Option<LairProbe>,
    pub iterate: Option<IterateProbe>,
    pub shoot: Option<ShootProbe>,
    /// Probe failures; the scan continues past them.
    pub errors: Vec<String>,
    pub agreement: Agreement,
}

#[derive(Clone, Debug)]
pub struct ScanOutput {
    pub axes: Vec<AxisGrid>,
    pub cells: Vec<RegionCell>,
    pub csv: String,
    pub svg: String,
}

impl ScanOutput {
    pub fn count(&self, kind: VerdictKind) -> usize {
        self.cells.iter().filter(|c| c.verdict.kind == kind).count()
    }

    pub fn write_files(&self, csv_path: &Path, svg_path: &Path) -> Result<()> {
        std::fs::write(csv_path, &self.csv)?;
        std::fs::write(svg_path, &self.svg)?;
        Ok(())
    }
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `e(point) = c + Σ coef_i · x_i` in the swept parameters.
struct Affine {
    constant: BigRational,
    coefs: Vec<BigRational>,
}

fn affine(base: &ExactPoint, params: &[Param], e: Expr) -> Affine {
    let constant = base.eval(e);
    let coefs = params
        .iter()
        .map(|&p| {
            let mut pt = base.clone();
            spec::set_param(&mut pt, p, BigRational::from_integer(BigInt::from(1)));
            pt.eval(e) - &constant
        })
        .collect();
    Affine { constant, coefs }
}

/// Regular grid values plus, optionally, the critical values of each axis.
pub fn axis_grids(spec: &ScanSpec) -> Vec<AxisGrid> {
    let mut grids: Vec<AxisGrid> = spec
        .axes
        .iter()
        .map(|ax| {
            let span = &ax.max.0 - &ax.min.0;
            let steps = BigRational::from_integer(BigInt::from(ax.count - 1));
            let values = (0..ax.count)
                .map(|i| &ax.min.0 + &span * BigRational::from_integer(BigInt::from(i)) / &steps)
                .collect();
            AxisGrid {
                param: ax.param,
                values,
            }
        })
        .collect();
    if spec.include_critical_lines {
        let extra = critical_values(spec);
        for (g, (ax, more)) in grids.iter_mut().zip(spec.axes.iter().zip(extra)) {
            g.values
                .extend(more.into_iter().filter(|v| *v >= ax.min.0 && *v <= ax.max.0));
            g.values.sort();
            g.values.dedup();
        }
    }
    grids
}

/// Per axis: roots of expressions that depend on that axis alone, and the
/// coordinates of pairwise crossings of boundary lines.
fn critical_values(spec: &ScanSpec) -> Vec<Vec<BigRational>> {
    let params: Vec<Param> = spec.axes.iter().map(|a| a.param).collect();
    let base = spec.base_point();
    let lines: Vec<Affine> = BOUNDARY_EXPRS
        .iter()
        .map(|&e| affine(&base, &params, e))
        .filter(|a| a.coefs.iter().any(|c| !c.is_zero()))
        .collect();
    let mut out = vec![Vec::new(); params.len()];
    for l in &lines {
        let nonzero: Vec<usize> = (0..params.len()).filter(|&i| !l.coefs[i].is_zero()).collect();
        if let [i] = nonzero[..] {
            out[i].push(-&l.constant / &l.coefs[i]);
        }
    }
    if params.len() == 2 {
        for (k, l1) in lines.iter().enumerate() {
            for l2 in &lines[k + 1..] {
                let det = &l1.coefs[0] * &l2.coefs[1] - &l1.coefs[1] * &l2.coefs[0];
                if det.is_zero() {
                    continue;
                }
                // a1 x + b1 y = -c1, a2 x + b2 y = -c2
                let x = (-&l1.constant * &l2.coefs[1] + &l2.constant * &l1.coefs[1]) / &det;
                let y = (-&l2.constant * &l1.coefs[0] + &l1.constant * &l2.coefs[0]) / &det;
                out[0].push(x);
                out[1].push(y);
            }
        }
    }
    out
}

/// The exact parameter point of a cell.
pub fn cell_point(spec: &ScanSpec, coords: &[BigRational]) -> ExactPoint {
    let mut pt = spec.base_point();
    for (ax, v) in spec.axes.iter().zip(coords) {
        spec::set_param(&mut pt, ax.param, v.clone());
    }
    pt
}

fn evaluate_cell(spec: &ScanSpec, coords: Vec<BigRational>) -> Result<RegionCell> {
    let point = cell_point(spec, &coords);
    let t1 = theorem1_conditions_exact(&point, spec.symmetric_mode)?;
    let t3 = theorem3_conditions_exact(&point)?;
    assert!(
        !(t1.iter().any(|&b| b) && t3.iter().any(|&b| b)),
        "nonexistence and existence conditions hold together at {coords:?}"
    );
    let verdict = classify_exact(&point, spec.symmetric_mode)?;
    let mut cell = RegionCell {
        coordinates: coords.iter().map(to_f64).collect(),
        exact: coords,
        verdict,
        lair: None,
        iterate: None,
        shoot: None,
        errors: Vec::new(),
        agreement: Agreement::NotProbed,
    };
    probes::run(spec, &point, &mut cell);
    Ok(cell)
}

/// Evaluates every cell (in parallel when enabled) and renders the CSV and
/// SVG. Cells are ordered with the first axis outermost; output is
/// deterministic for a fixed spec.
pub fn run_scan(spec: &ScanSpec) -> Result<ScanOutput> {
    spec.validate()?;
    let axes = axis_grids(spec);
    let coords: Vec<Vec<BigRational>> = match &axes[..] {
        [a] => a.values.iter().map(|x| vec![x.clone()]).collect(),
        [a, b] => a
            .values
            .iter()
            .flat_map(|x| b.values.iter().map(move |y| vec![x.clone(), y.clone()]))
            .collect(),
        _ => unreachable!("validated axis count"),
    };
    #[cfg(feature = "parallel")]
    let cells: Result<Vec<RegionCell>> = {
        use rayon::prelude::*;
        crate::with_pool(|| coords.into_par_iter().map(|c| evaluate_cell(spec, c)).collect())
    };
    #[cfg(not(feature = "parallel"))]
    let cells: Result<Vec<RegionCell>> = coords.into_iter().map(|c| evaluate_cell(spec, c)).collect();
    let cells = cells?;
    let csv = region_csv(&cells)?;
    let svg = svg::render(spec, &axes, &cells);
    Ok(ScanOutput { axes, cells, csv, svg })
}

/// `axis1,axis2,verdict,conditions,probe_agreement`.
pub fn region_csv(cells: &[RegionCell]) -> Result<String> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["axis1", "axis2", "verdict", "conditions", "probe_agreement"])?;
    for c in cells {
        let axis2 = c.coordinates.get(1).map(|v| v.to_string()).unwrap_or_default();
        out.write_record([
            c.coordinates[0].to_string(),
            axis2,
            c.verdict.kind.to_string(),
            c.verdict.satisfied_conditions.join(";"),
            c.agreement.to_string(),
        ])?;
    }
    let bytes = out.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
