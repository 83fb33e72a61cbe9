//! K-cells: the intersection of the halfspaces containing K that are bounded
//! by process hyperplanes missing K, built from a hyperplane sample, from a
//! mark set, or (for `K = B^d`) from polar points.
//!
//! Every cell carries the box guard of its window. A cell is exact when it
//! stays inside the sampling window, because the hyperplanes that were not
//! sampled miss the window and cannot cut it; otherwise it is flagged as
//! truncated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{mean_width, SphericalQuadrature, SupportOracle};
use crate::geom::{ConvexBody, Direction, Halfspace, Vector, Window, GEOM_TOL};
use crate::sampler::{sample_kappa0_points, HyperplaneSample, HyperplaneSampler, MarkSet, RngStream};
use crate::support::{polar_hrep, polygon_from_halfspaces_2d, HRep, SupportSolver};

/// Coarse node count behind the circumradius bound used for pruning.
const PRUNE_NODES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellSource {
    HyperplaneProcess,
    MarkCoupling,
    PolarPoints,
}

#[derive(Clone, Debug)]
pub struct KCell {
    pub hrep: HRep,
    pub truncated: bool,
    pub source: CellSource,
    pub body_ref: ConvexBody,
    /// Region inside which the cell is exact.
    pub window: Window,
    geometry: Geometry,
}

#[derive(Clone, Debug)]
enum Geometry {
    /// Counterclockwise vertex cycle.
    Polygon(Vec<Vector>),
    /// Support values at the default quadrature nodes and the circumradius.
    Lp { rep: HRep, node_supports: Vec<f64>, circumradius: f64 },
}

impl KCell {
    /// Resolves the cell's geometry and truncation flag. The body must lie
    /// in every halfspace and `hrep.interior` must be interior to the cell.
    pub fn from_hrep(hrep: HRep, source: CellSource, body_ref: ConvexBody, window: Window) -> Result<Self> {
        if hrep.guard.is_none() {
            return Err(Error::InvalidParameter("K-cells need a guard".into()));
        }
        let d = hrep.dim();
        let (geometry, truncated) = if d == 2 {
            let vertices = polygon_from_halfspaces_2d(&hrep)?;
            let truncated = vertices.iter().any(|v| window.escapes(v));
            (Geometry::Polygon(vertices), truncated)
        } else {
            lp_geometry(&hrep, &window)?
        };
        Ok(Self { hrep, truncated, source, body_ref, window, geometry })
    }

    pub fn dim(&self) -> usize {
        self.hrep.dim()
    }

    /// Vertex cycle for planar cells.
    pub fn vertices(&self) -> Option<&[Vector]> {
        match &self.geometry {
            Geometry::Polygon(v) => Some(v),
            Geometry::Lp { .. } => None,
        }
    }

    pub fn support(&self, u: &Direction) -> Result<f64> {
        match &self.geometry {
            Geometry::Polygon(vs) => Ok(vs.iter().map(|v| u.dot(v)).fold(f64::NEG_INFINITY, f64::max)),
            Geometry::Lp { rep, .. } => Ok(SupportSolver::new(rep).support(u)?.bounded()?.value),
        }
    }

    /// `W(Z)` under the given rule; exact perimeter/π for planar cells.
    pub fn mean_width(&self, quad: &SphericalQuadrature) -> Result<f64> {
        mean_width(self, quad)
    }

    /// `R_o(Z)`, exact for planar cells.
    pub fn circumradius(&self) -> f64 {
        match &self.geometry {
            Geometry::Polygon(vs) => vs.iter().map(Vector::norm).fold(0.0, f64::max),
            Geometry::Lp { circumradius, .. } => *circumradius,
        }
    }
}

impl SupportOracle for KCell {
    fn dim(&self) -> usize {
        self.hrep.dim()
    }

    fn vertex_cycle_2d(&self) -> Result<Option<Vec<Vector>>> {
        Ok(self.vertices().map(<[Vector]>::to_vec))
    }

    fn supports(&self, dirs: &[Direction]) -> Result<Vec<f64>> {
        match &self.geometry {
            Geometry::Polygon(_) => dirs.iter().map(|u| self.support(u)).collect(),
            Geometry::Lp { rep, .. } => {
                let mut solver = SupportSolver::new(rep);
                dirs.iter().map(|u| Ok(solver.support(u)?.bounded()?.value)).collect()
            }
        }
    }

    fn cached_supports(&self, quad: &SphericalQuadrature) -> Option<Vec<f64>> {
        match &self.geometry {
            Geometry::Lp { node_supports, .. }
                if quad.scheme() == SphericalQuadrature::default_for(self.dim()).scheme() =>
            {
                Some(node_supports.clone())
            }
            _ => None,
        }
    }
}

/// LP evaluation at the default nodes after dropping constraints that
/// cannot touch the cell. Truncation: a guard facet is active at some
/// optimum, or some optimal vertex leaves the window.
fn lp_geometry(hrep: &HRep, window: &Window) -> Result<(Geometry, bool)> {
    let d = hrep.dim();
    let rep = hrep.pruned_outside(circumradius_bound(hrep)?);
    let quad = SphericalQuadrature::default_for(d);
    let mut solver = SupportSolver::new(&rep);
    let mut node_supports = Vec::with_capacity(quad.len());
    let mut truncated = false;
    let mut scored = Vec::with_capacity(quad.len());
    for u in quad.nodes() {
        let r = solver.support(u)?.bounded()?;
        truncated |= r.active_guard;
        match r.point {
            Some(x) => {
                truncated |= window.escapes(&x);
                scored.push((x.norm(), x));
            }
            None => truncated |= r.value > window.size() - GEOM_TOL,
        }
        node_supports.push(r.value);
    }
    // Refine R_o by the ascent u <- x/|x| from the best nodes.
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut circumradius = scored.first().map_or(0.0, |s| s.0);
    for (r0, x0) in scored.iter().take(8) {
        let (mut r, mut x) = (*r0, *x0);
        for _ in 0..50 {
            let Ok(u) = Direction::new(x) else { break };
            let next = solver.support(&u)?.bounded()?;
            let Some(y) = next.point else { break };
            truncated |= window.escapes(&y) || next.active_guard;
            if y.norm() <= r + 1e-14 {
                break;
            }
            r = y.norm();
            x = y;
        }
        circumradius = circumradius.max(r);
    }
    Ok((Geometry::Lp { rep, node_supports, circumradius }, truncated))
}

/// Upper bound on `R_o` of a guarded cell: with nodes whose caps of angular
/// radius θ cover the sphere, `|x| <= max_i h(u_i) / cos θ`.
fn circumradius_bound(hrep: &HRep) -> Result<f64> {
    let d = hrep.dim();
    let guard = hrep.guard.expect("guarded").size() * (d as f64).sqrt();
    if d != 3 {
        return Ok(guard);
    }
    let quad = SphericalQuadrature::new(3, crate::functionals::QuadratureScheme::SphericalDesign3D(PRUNE_NODES));
    let mut solver = SupportSolver::new(hrep);
    let mut hmax = 0.0f64;
    for u in quad.nodes() {
        hmax = hmax.max(solver.support(u)?.bounded()?.value);
    }
    let cos = covering_cos_3d();
    Ok((hmax / cos).min(guard) + GEOM_TOL)
}

/// Cosine of the covering radius of the pruning node set, measured once on
/// a dense point set and widened by 20% in angle.
fn covering_cos_3d() -> f64 {
    use std::sync::OnceLock;
    static COS: OnceLock<f64> = OnceLock::new();
    *COS.get_or_init(|| {
        let coarse = SphericalQuadrature::new(3, crate::functionals::QuadratureScheme::SphericalDesign3D(PRUNE_NODES));
        let dense = SphericalQuadrature::new(3, crate::functionals::QuadratureScheme::SphericalDesign3D(200_000));
        let worst = dense
            .nodes()
            .iter()
            .map(|p| coarse.nodes().iter().map(|u| u.dot(p.vector())).fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min);
        (1.2 * worst.clamp(-1.0, 1.0).acos()).cos()
    })
}

/// Box guard at the window's size, interior point at K's reference point.
fn guarded(halfspaces: Vec<Halfspace>, window: &Window, body: &ConvexBody) -> HRep {
    HRep::with_guard(halfspaces, Window::Box { half_side: window.size() }, body.reference_point())
}

/// The K-cell of one hyperplane sample.
pub fn kcell_from_sample(sample: &HyperplaneSample) -> Result<KCell> {
    let rep = guarded(sample.halfspaces.clone(), &sample.window, &sample.body_ref);
    KCell::from_hrep(rep, CellSource::HyperplaneProcess, sample.body_ref.clone(), sample.window)
}

/// `Z_K` at intensity n from the hyperplanes meeting `window`.
pub fn build_kcell(k: &ConvexBody, n: f64, window: Window, stream: &RngStream) -> Result<KCell> {
    let sample = HyperplaneSampler::new(k, window)?.sample(n, stream)?;
    kcell_from_sample(&sample)
}

/// `P(η,K)`: one halfspace `<x,u> <= h(K,u) + t` per mark, inside the guard
/// box of half-side `t_max / 2`. Marks with `t <= t_max` cover every
/// hyperplane that meets the guard box, so the cell is exact unless it
/// touches the guard.
pub fn build_from_marks(marks: &MarkSet, k: &ConvexBody) -> Result<KCell> {
    let half = marks.t_max / 2.0;
    let halfspaces = marks
        .marks
        .iter()
        .map(|(u, t)| Ok(Halfspace::new(*u, k.support(u)? + t)))
        .collect::<Result<Vec<_>>>()?;
    let window = Window::Box { half_side: half };
    let rep = guarded(halfspaces, &window, k);
    KCell::from_hrep(rep, CellSource::MarkCoupling, k.clone(), window)
}

/// The polar of the Poisson points with intensity `n κ_0` in `B^d \ B_r`,
/// distributed as `Z_{B^d}` restricted to the window of radius `1/r`.
pub fn build_polar_cell(dim: usize, n: f64, r: f64, stream: &RngStream) -> Result<KCell> {
    let points = sample_kappa0_points(dim, n, r, stream)?;
    polar_cell_from_points(dim, &points, r)
}

pub fn polar_cell_from_points(dim: usize, points: &[Vector], r: f64) -> Result<KCell> {
    let window = Window::Ball { radius: 1.0 / r };
    let guard = Window::Box { half_side: 1.0 / r };
    let rep = if points.is_empty() {
        HRep::with_guard(Vec::new(), guard, Vector::zeros(dim))
    } else {
        polar_hrep(points, Some(guard))?
    };
    KCell::from_hrep(rep, CellSource::PolarPoints, ConvexBody::unit_ball(dim), window)
}
