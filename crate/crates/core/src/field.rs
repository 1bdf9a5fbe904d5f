//! Coefficient functions `p`, `q` and radial profiles.

use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::quadrature::interp_log_linear;

/// A nonnegative function of the radius.
pub trait Radial: Send + Sync {
    fn value(&self, r: f64) -> f64;
}

impl<F> Radial for F
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn value(&self, r: f64) -> f64 {
        self(r)
    }
}

/// `L r^(-power) (ln r)^(-log_power)` for `r ≥ r_start`, held at its
/// `r_start` value below the onset so the function stays continuous on
/// `[0, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLog {
    pub constant: f64,
    pub power: f64,
    pub log_power: f64,
    pub r_start: f64,
}

impl PowerLog {
    pub fn new(constant: f64, power: f64, log_power: f64, r_start: f64) -> Result<Self> {
        if !(constant.is_finite() && power.is_finite() && log_power.is_finite() && r_start.is_finite()) {
            return Err(Error::NonFinite("power-log parameters".into()));
        }
        if constant <= 0.0 {
            return invalid("power-log constant must be positive");
        }
        if r_start <= 1.0 {
            return invalid(format!("power-log onset radius must exceed 1, got {r_start}"));
        }
        Ok(PowerLog {
            constant,
            power,
            log_power,
            r_start,
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.max(self.r_start);
        self.constant * (-self.power * r.ln() - self.log_power * r.ln().ln()).exp()
    }
}

impl Radial for PowerLog {
    fn value(&self, r: f64) -> f64 {
        self.eval(r)
    }
}

/// Tabulated radial values, interpolated log-linearly and extended
/// constantly beyond both ends.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialTable {
    radii: Vec<f64>,
    values: Vec<f64>,
}

impl RadialTable {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return invalid("radial table is empty");
        }
        if radii.len() != values.len() {
            return invalid("radial table columns differ in length");
        }
        if radii.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("radial table entry".into()));
        }
        if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("radial table radii must be positive and strictly increasing");
        }
        if values.iter().any(|&v| v < 0.0) {
            return invalid("radial table values must be nonnegative");
        }
        Ok(RadialTable { radii, values })
    }

    /// Samples `f` on `radii`.
    pub fn sample(f: &dyn Radial, radii: &[f64]) -> Result<Self> {
        let values = radii.iter().map(|&r| f.value(r)).collect();
        RadialTable::new(radii.to_vec(), values)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn interpolate(&self, r: f64) -> f64 {
        interp_log_linear(&self.radii, &self.values, r)
    }

    /// Writes the two-column `r,value` CSV.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["r", "value"])?;
        for (r, v) in self.radii.iter().zip(&self.values) {
            out.write_record([fmt_f64(*r), fmt_f64(*v)])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .from_reader(r);
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 2 {
                return invalid("radial table rows need exactly two columns");
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("not a number: {s:?}")))
            };
            radii.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        RadialTable::new(radii, values)
    }
}

impl Radial for RadialTable {
    fn value(&self, r: f64) -> f64 {
        self.interpolate(r)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Radial part of an angular-product field.
#[derive(Clone, Debug, PartialEq)]
pub enum RadialPart {
    PowerLog(PowerLog),
    Table(RadialTable),
}

impl RadialPart {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialPart::PowerLog(p) => p.eval(r),
            RadialPart::Table(t) => t.interpolate(r),
        }
    }
}

type AngularFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Strictly positive continuous function on the unit sphere, evaluated at a
/// unit vector.
#[derive(Clone)]
pub struct AngularFactor {
    name: String,
    f: AngularFn,
}

impl AngularFactor {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        AngularFactor {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, direction: &[f64]) -> f64 {
        (self.f)(direction)
    }
}

impl fmt::Debug for AngularFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AngularFactor").field("name", &self.name).finish()
    }
}

/// A coefficient `p` or `q` on `R^N`.
#[derive(Clone, Debug)]
pub enum CoefficientField {
    PowerLog(PowerLog),
    RadialTable(RadialTable),
    AngularProduct { radial: RadialPart, angular: AngularFactor },
}

impl CoefficientField {
    /// Value at `r · direction` for a unit vector `direction`.
    pub fn eval(&self, r: f64, direction: &[f64]) -> f64 {
        match self {
            CoefficientField::PowerLog(p) => p.eval(r),
            CoefficientField::RadialTable(t) => t.interpolate(r),
            CoefficientField::AngularProduct { radial, angular } => radial.eval(r) * angular.eval(direction),
        }
    }

    /// The radial value when the field is spherically symmetric.
    pub fn radial_value(&self, r: f64) -> Option<f64> {
        match self {
            CoefficientField::PowerLog(p) => Some(p.eval(r)),
            CoefficientField::RadialTable(t) => Some(t.interpolate(r)),
            CoefficientField::AngularProduct { .. } => None,
        }
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self, CoefficientField::AngularProduct { .. })
    }
}
