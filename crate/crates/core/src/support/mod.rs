//! Support functions of H-polytopes, exact planar halfspace intersection, and
//! the support function of a polar body.

mod polygon;
mod simplex;

use crate::error::{Error, Result};
use crate::geom::{Direction, Halfspace, Vector, Window, GEOM_TOL};

pub use polygon::{convex_hull_2d, edge_normals_2d, perimeter, polygon_from_halfspaces_2d};
use simplex::{DualSimplex, LpOutcome};

/// Halfspace representation with an optional box guard.
///
/// Constraints are the listed halfspaces followed by the guard facets; guard
/// facets are flagged so truncation can be detected.
#[derive(Clone, Debug, PartialEq)]
pub struct HRep {
    pub halfspaces: Vec<Halfspace>,
    pub guard: Option<Window>,
    pub interior: Vector,
}

impl HRep {
    pub fn new(halfspaces: Vec<Halfspace>, interior: Vector) -> Self {
        Self { halfspaces, guard: None, interior }
    }

    pub fn with_guard(halfspaces: Vec<Halfspace>, guard: Window, interior: Vector) -> Self {
        Self { halfspaces, guard: Some(guard), interior }
    }

    pub fn dim(&self) -> usize {
        self.interior.dim()
    }

    /// All constraints, guard facets last.
    pub fn constraints(&self) -> impl Iterator<Item = Halfspace> + '_ {
        let guard = self.guard.map(|g| g.guard_halfspaces(self.dim())).unwrap_or_default();
        self.halfspaces.iter().copied().chain(guard)
    }

    pub fn num_guard_facets(&self) -> usize {
        if self.guard.is_some() {
            2 * self.dim()
        } else {
            0
        }
    }

    pub fn is_feasible_interior(&self) -> bool {
        self.constraints().all(|h| h.slack(&self.interior) > GEOM_TOL)
    }

    /// Drops constraints that cannot touch a set contained in the
    /// origin-centred ball of radius `radius`. Guard facets are kept.
    pub fn pruned_outside(&self, radius: f64) -> HRep {
        HRep {
            halfspaces: self
                .halfspaces
                .iter()
                .filter(|h| h.offset <= radius + GEOM_TOL)
                .copied()
                .collect(),
            guard: self.guard,
            interior: self.interior,
        }
    }
}

const GUARD_MULTIPLIER_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportResult {
    pub value: f64,
    /// A guard facet carries a positive dual multiplier at the optimum, so
    /// the value is cut by the guard.
    pub active_guard: bool,
    /// An optimal point, when the optimal face is pinned down by the basis.
    pub point: Option<Vector>,
}

/// Outcome of a support evaluation; unboundedness is an ordinary result.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Support {
    Bounded(SupportResult),
    Unbounded,
}

impl Support {
    pub fn bounded(self) -> Result<SupportResult> {
        match self {
            Support::Bounded(r) => Ok(r),
            Support::Unbounded => Err(Error::Unbounded),
        }
    }
}

/// Reusable per-thread solver for many directions over one H-representation.
/// Successive directions warm-start from the previous optimal basis.
#[derive(Debug, Clone)]
pub struct SupportSolver {
    lp: DualSimplex,
    first_guard: usize,
    last_basis: Option<Vec<usize>>,
}

impl SupportSolver {
    pub fn new(rep: &HRep) -> Self {
        let lp = DualSimplex::new(
            rep.dim(),
            rep.constraints().map(|h| (*h.normal.vector(), h.offset)),
            rep.interior,
        );
        Self { first_guard: rep.halfspaces.len(), lp, last_basis: None }
    }

    pub fn support(&mut self, u: &Direction) -> Result<Support> {
        let outcome = self.lp.solve(u, self.last_basis.as_deref());
        match outcome {
            LpOutcome::Optimal { value, point, basis, multipliers } => {
                // The guard matters only through a positive dual multiplier;
                // a guard facet that is merely tight on a degenerate optimal
                // face does not change the value.
                let active_guard = basis
                    .iter()
                    .zip(&multipliers)
                    .any(|(&i, &lambda)| i >= self.first_guard && i < self.lp.num_constraints() && lambda > GUARD_MULTIPLIER_TOL);
                if point.is_some() {
                    self.last_basis = Some(basis);
                }
                Ok(Support::Bounded(SupportResult { value, active_guard, point }))
            }
            LpOutcome::Unbounded => Ok(Support::Unbounded),
            LpOutcome::Infeasible => Err(Error::Infeasible),
        }
    }
}

/// `max <x,u>` over the H-representation, by the dense simplex method.
pub fn support_hrep(rep: &HRep, u: &Direction) -> Result<Support> {
    if u.dim() != rep.dim() {
        return Err(Error::Dimension { expected: rep.dim(), found: u.dim() });
    }
    SupportSolver::new(rep).support(u)
}

/// Support function of the polar `{y : <y,x_i> <= 1 for all i}` of
/// `conv(points)`.
pub fn polar_support(points: &[Vector], u: &Direction) -> Result<Support> {
    support_hrep(&polar_hrep(points, None)?, u)
}

/// Halfspaces `<y, x_i> <= 1`, stored with unit normals `x_i/|x_i|` and
/// offsets `1/|x_i|`.
pub fn polar_hrep(points: &[Vector], guard: Option<Window>) -> Result<HRep> {
    let Some(first) = points.first() else {
        return Err(Error::InvalidParameter("polar of an empty point set".into()));
    };
    let halfspaces = points
        .iter()
        .map(|x| {
            let r = x.norm();
            Ok(Halfspace::new(Direction::new(*x)?, 1.0 / r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HRep { halfspaces, guard, interior: Vector::zeros(first.dim()) })
}
