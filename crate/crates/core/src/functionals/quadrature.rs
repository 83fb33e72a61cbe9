use std::f64::consts::{PI, TAU};

use crate::geom::{Direction, Vector};

/// Equal-weight node sets on S^{d-1} for the normalized spherical measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "scheme", content = "nodes", rename_all = "snake_case")]
pub enum QuadratureScheme {
    /// Planar: exact perimeter/pi for polygons, 4096 uniform angles otherwise.
    #[serde(rename = "exact_2d")]
    Exact2D,
    #[serde(rename = "uniform_angles_2d")]
    UniformAngles2D(usize),
    /// Antipodally symmetrized Fibonacci lattice on S^2.
    #[serde(rename = "spherical_design_3d")]
    SphericalDesign3D(usize),
    /// Antipodally symmetrized Halton points pushed to the sphere, any d.
    Qmc(usize),
}

/// Node count behind `Exact2D` for bodies without a vertex cycle.
pub const EXACT2D_FALLBACK_NODES: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct SphericalQuadrature {
    nodes: Vec<Direction>,
    weights: Vec<f64>,
    scheme: QuadratureScheme,
    dim: usize,
}

impl SphericalQuadrature {
    pub fn new(dim: usize, scheme: QuadratureScheme) -> Self {
        let nodes = match scheme {
            QuadratureScheme::Exact2D => uniform_angle_nodes(EXACT2D_FALLBACK_NODES),
            QuadratureScheme::UniformAngles2D(n) => uniform_angle_nodes(n),
            QuadratureScheme::SphericalDesign3D(n) => fibonacci_nodes(n),
            QuadratureScheme::Qmc(n) => halton_nodes(dim, n),
        };
        let w = 1.0 / nodes.len() as f64;
        let dim = nodes[0].dim();
        Self { weights: vec![w; nodes.len()], nodes, scheme, dim }
    }

    /// Exact2D in the plane, a 2048-node Fibonacci set in R^3, 4096 QMC
    /// nodes above.
    pub fn default_for(dim: usize) -> Self {
        match dim {
            2 => Self::new(2, QuadratureScheme::Exact2D),
            3 => Self::new(3, QuadratureScheme::SphericalDesign3D(2048)),
            d => Self::new(d, QuadratureScheme::Qmc(4096)),
        }
    }

    pub fn uniform_angles(n: usize) -> Self {
        Self::new(2, QuadratureScheme::UniformAngles2D(n))
    }

    pub fn nodes(&self) -> &[Direction] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scheme(&self) -> QuadratureScheme {
        self.scheme
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn into_nodes(self) -> Vec<Direction> {
        self.nodes
    }

    /// `sum w_i f(u_i)`.
    pub fn integrate<F: FnMut(&Direction) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(u, w)| w * f(u)).sum()
    }
}

fn uniform_angle_nodes(n: usize) -> Vec<Direction> {
    assert!(n >= 4 && n % 2 == 0, "uniform angle rule needs an even node count >= 4");
    (0..n).map(|k| Direction::from_angle(TAU * k as f64 / n as f64)).collect()
}

/// Half of the nodes from a Fibonacci spiral, the other half their antipodes.
/// Nodes are ordered along a serpentine path through latitude bands, which
/// keeps successive directions close (good for warm-started LPs).
fn fibonacci_nodes(n: usize) -> Vec<Direction> {
    assert!(n >= 8 && n % 2 == 0, "Fibonacci rule needs an even node count >= 8");
    let half = n / 2;
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut pts: Vec<Vector> = (0..half)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / half as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vector::new3(r * phi.cos(), r * phi.sin(), z)
        })
        .collect();
    let anti: Vec<Vector> = pts.iter().map(|p| -*p).collect();
    pts.extend(anti);
    serpentine(&mut pts);
    pts.into_iter().map(|p| Direction::new(p).expect("unit")).collect()
}

fn serpentine(pts: &mut [Vector]) {
    let bands = ((pts.len() as f64).sqrt() / 2.0).ceil().max(1.0) as usize;
    let band_of = |p: &Vector| (((1.0 - p[2]) / 2.0 * bands as f64) as usize).min(bands - 1);
    pts.sort_by(|a, b| {
        let (ba, bb) = (band_of(a), band_of(b));
        ba.cmp(&bb).then_with(|| {
            let (pa, pb) = (a[1].atan2(a[0]), b[1].atan2(b[0]));
            if ba % 2 == 0 {
                pa.total_cmp(&pb)
            } else {
                pb.total_cmp(&pa)
            }
        })
    });
}

fn halton_nodes(dim: usize, n: usize) -> Vec<Direction> {
    use statrs::distribution::{ContinuousCDF, Normal};
    const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];
    assert!(n >= 4 && n % 2 == 0, "QMC rule needs an even node count >= 4");
    let normal = Normal::standard();
    let mut out = Vec::with_capacity(n);
    let mut i = 1u64;
    while out.len() < n {
        let mut v = Vector::zeros(dim);
        for k in 0..dim {
            v[k] = normal.inverse_cdf(radical_inverse(i, PRIMES[k]));
        }
        i += 1;
        if let Ok(u) = Direction::new(v) {
            out.push(u);
            out.push(u.negate());
        }
    }
    out
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}
