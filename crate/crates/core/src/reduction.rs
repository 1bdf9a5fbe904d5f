//! Reduction of a general coefficient to a radial profile.
//!
//! For an exponent `e > 1` the reduced value at radius `r` is the power mean
//! of order `1/(1 − e)` of the field over the sphere `|x| = r`:
//!
//! ```text
//!     p̃(r) = ( (1/(ω_N r^{N−1})) ∮ p^{1/(1−e)} dS )^{1−e}
//! ```
//!
//! and for `e = 1` it is the minimum over the sphere. A radially symmetric
//! field reduces to itself.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::field::{CoefficientField, RadialTable};
use crate::quadrature::GaussLegendre;

/// Field values below this are treated as zeros of the coefficient.
pub const ZERO_THRESHOLD: f64 = 1e-300;

/// Total node cap for the minimum-refinement loop.
pub const MAX_SPHERE_NODES: usize = 1 << 20;

/// Surface area `ω_N = 2 π^{N/2} / Γ(N/2)` of the unit sphere in `R^N`.
pub fn surface_area(dimension: u32) -> Result<f64> {
    if dimension < 2 {
        return invalid(format!("surface area needs dimension >= 2, got {dimension}"));
    }
    let half = f64::from(dimension) / 2.0;
    Ok(2.0 * (half * PI.ln() - libm::lgamma(half)).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SphereScheme {
    /// Gauss–Legendre in the polar cosine times a uniform azimuth grid
    /// (`N = 3` only). `node_count` is the number of polar nodes; the
    /// azimuth uses twice as many.
    ProductGauss,
    /// Equal-weight random directions, any `N ≥ 3`.
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SphereQuadrature {
    pub scheme: SphereScheme,
    pub node_count: usize,
    pub seed: u64,
}

impl SphereQuadrature {
    pub fn product_gauss(node_count: usize) -> Self {
        SphereQuadrature {
            scheme: SphereScheme::ProductGauss,
            node_count,
            seed: 0,
        }
    }

    pub fn monte_carlo(node_count: usize, seed: u64) -> Self {
        SphereQuadrature {
            scheme: SphereScheme::MonteCarlo,
            node_count,
            seed,
        }
    }

    fn doubled(&self) -> Self {
        SphereQuadrature {
            node_count: self.node_count * 2,
            ..*self
        }
    }

    fn total_nodes(&self) -> usize {
        match self.scheme {
            SphereScheme::ProductGauss => 2 * self.node_count * self.node_count,
            SphereScheme::MonteCarlo => self.node_count,
        }
    }

    /// Unit directions and weights; weights sum to `ω_N`.
    pub fn nodes(&self, dimension: u32) -> Result<SphereNodes> {
        if self.node_count == 0 {
            return invalid("sphere quadrature needs at least one node");
        }
        if dimension < 3 {
            return invalid("sphere quadrature needs dimension >= 3");
        }
        match self.scheme {
            SphereScheme::ProductGauss => {
                if dimension != 3 {
                    return invalid("product Gauss sphere rule is only available for N = 3");
                }
                let gl = GaussLegendre::new(self.node_count);
                let n_phi = 2 * self.node_count;
                let dphi = 2.0 * PI / n_phi as f64;
                let mut points = Vec::with_capacity(3 * gl.nodes.len() * n_phi);
                let mut weights = Vec::with_capacity(gl.nodes.len() * n_phi);
                for (&z, &w) in gl.nodes.iter().zip(&gl.weights) {
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    for j in 0..n_phi {
                        let phi = (j as f64 + 0.5) * dphi;
                        points.extend_from_slice(&[rho * phi.cos(), rho * phi.sin(), z]);
                        weights.push(w * dphi);
                    }
                }
                Ok(SphereNodes {
                    dimension,
                    points,
                    weights,
                })
            }
            SphereScheme::MonteCarlo => {
                let dim = dimension as usize;
                let area = surface_area(dimension)?;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let mut points = Vec::with_capacity(dim * self.node_count);
                let mut buf = vec![0.0; dim];
                for _ in 0..self.node_count {
                    loop {
                        for x in buf.iter_mut() {
                            *x = StandardNormal.sample(&mut rng);
                        }
                        let norm = buf.iter().map(|x| x * x).sum::<f64>().sqrt();
                        if norm > 1e-12 {
                            points.extend(buf.iter().map(|x| x / norm));
                            break;
                        }
                    }
                }
                let w = area / self.node_count as f64;
                Ok(SphereNodes {
                    dimension,
                    points,
                    weights: vec![w; self.node_count],
                })
            }
        }
    }
}

/// Directions on the unit sphere (flattened, `dimension` coordinates each)
/// with quadrature weights.
#[derive(Clone, Debug)]
pub struct SphereNodes {
    pub dimension: u32,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SphereNodes {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points
            .chunks_exact(self.dimension as usize)
            .zip(self.weights.iter().copied())
    }
}

fn sample_field(field: &CoefficientField, r: f64, nodes: &SphereNodes) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(nodes.len());
    for (dir, _) in nodes.iter() {
        let v = field.eval(r, dir);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("field sample at r = {r}")));
        }
        if v < 0.0 {
            return invalid(format!("negative field sample {v} at r = {r}"));
        }
        out.push(v);
    }
    Ok(out)
}

/// Power mean of order `1/(1 − exponent)` evaluated in log space.
fn negative_order_mean(values: &[f64], nodes: &SphereNodes, exponent: f64) -> f64 {
    if values.iter().any(|&v| v < ZERO_THRESHOLD) {
        return 0.0;
    }
    let order = 1.0 / (1.0 - exponent);
    let total: f64 = nodes.weights.iter().sum();
    let logs: Vec<f64> = values.iter().map(|v| order * v.ln()).collect();
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let acc: f64 = logs.iter().zip(&nodes.weights).map(|(l, w)| w * (l - peak).exp()).sum();
    let log_mean = peak + (acc / total).ln();
    ((1.0 - exponent) * log_mean).exp()
}

fn node_minimum(field: &CoefficientField, r: f64, dimension: u32, quad: &SphereQuadrature) -> Result<f64> {
    let mut current = *quad;
    let nodes = current.nodes(dimension)?;
    let mut best = sample_field(field, r, &nodes)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    loop {
        let next = current.doubled();
        if next.total_nodes() > MAX_SPHERE_NODES {
            return Ok(best);
        }
        let nodes = next.nodes(dimension)?;
        let refined = sample_field(field, r, &nodes)?
            .into_iter()
            .fold(f64::INFINITY, f64::min)
            .min(best);
        let change = (best - refined).abs();
        best = refined;
        current = next;
        if change <= 1e-6 * best.abs() {
            return Ok(best);
        }
    }
}

/// Reduced coefficient at radius `r`. `exponent` is the power that the
/// *other* unknown carries in this coefficient's equation (`α` for `p`,
/// `β` for `q`).
pub fn reduce_coefficient(
    field: &CoefficientField,
    exponent: f64,
    r: f64,
    dimension: u32,
    quad: &SphereQuadrature,
) -> Result<f64> {
    if !exponent.is_finite() || !r.is_finite() {
        return Err(Error::NonFinite("reduction exponent or radius".into()));
    }
    if exponent < 1.0 {
        return invalid(format!(
            "reduced coefficients are defined for exponents >= 1 only, got {exponent}"
        ));
    }
    if r <= 0.0 {
        return invalid("reduction radius must be positive");
    }
    if exponent == 1.0 {
        return node_minimum(field, r, dimension, quad);
    }
    let nodes = quad.nodes(dimension)?;
    let values = sample_field(field, r, &nodes)?;
    Ok(negative_order_mean(&values, &nodes, exponent))
}

/// Spherical arithmetic mean at radius `r`; used as the order-one upper bound
/// of the reduction.
pub fn arithmetic_mean(field: &CoefficientField, r: f64, dimension: u32, quad: &SphereQuadrature) -> Result<f64> {
    let nodes = quad.nodes(dimension)?;
    let values = sample_field(field, r, &nodes)?;
    let total: f64 = nodes.weights.iter().sum();
    Ok(values.iter().zip(&nodes.weights).map(|(v, w)| v * w).sum::<f64>() / total)
}

/// Reduced profile on a grid of radii. Every radius uses the same node set,
/// so the result does not depend on evaluation order.
pub fn reduced_profile(
    field: &CoefficientField,
    exponent: f64,
    grid: &[f64],
    dimension: u32,
    quad: &SphereQuadrature,
) -> Result<RadialTable> {
    if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("reduction grid must be positive and strictly increasing");
    }
    let eval = |r: &f64| reduce_coefficient(field, exponent, *r, dimension, quad);
    #[cfg(feature = "parallel")]
    let values: Result<Vec<f64>> = {
        use rayon::prelude::*;
        crate::with_pool(|| grid.par_iter().map(eval).collect())
    };
    #[cfg(not(feature = "parallel"))]
    let values: Result<Vec<f64>> = grid.iter().map(eval).collect();
    RadialTable::new(grid.to_vec(), values?)
}
