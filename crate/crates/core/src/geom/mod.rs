//! Vectors, hyperplanes, convex bodies and their support functions.
//!
//! Every direction-dependent quantity is evaluated at unit vectors only; the
//! support function is never extended by positive homogeneity. Geometric
//! predicates share one absolute tolerance, [`GEOM_TOL`], in length units, so
//! callers are expected to pass bodies of size O(1).

mod body_json;
mod vector;

use crate::error::{Error, Result};
use crate::support::{self, HRep, Support};

pub use body_json::{diagnose_body, BodySpec};
pub use vector::{Direction, Vector, MAX_DIM};

/// Absolute tolerance for geometric predicates (length units).
pub const GEOM_TOL: f64 = 1e-9;

/// The closed halfspace `{x : <x, normal> <= offset}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: Direction,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Direction, offset: f64) -> Self {
        Self { normal, offset }
    }

    #[inline]
    pub fn slack(&self, x: &Vector) -> f64 {
        self.offset - self.normal.dot(x)
    }

    #[inline]
    pub fn contains(&self, x: &Vector) -> bool {
        self.slack(x) >= -GEOM_TOL
    }

    pub fn translate(&self, v: &Vector) -> Self {
        Self { normal: self.normal, offset: self.offset + self.normal.dot(v) }
    }

    pub fn boundary(&self) -> Hyperplane {
        Hyperplane::new(self.normal, self.offset)
    }
}

/// An unoriented hyperplane `H(u, tau) = {x : <x,u> = tau}`.
///
/// Stored in canonical orientation: the first nonzero coordinate of the normal
/// is positive. `H(u,tau)` and `H(-u,-tau)` therefore have identical fields and
/// the derived equality identifies them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperplane {
    normal: Direction,
    offset: f64,
}

impl Hyperplane {
    pub fn new(normal: Direction, offset: f64) -> Self {
        let first = normal.vector().as_slice().iter().find(|c| **c != 0.0).copied();
        if first.is_some_and(|c| c < 0.0) {
            Self { normal: normal.negate(), offset: -offset }
        } else {
            Self { normal, offset }
        }
    }

    pub fn normal(&self) -> &Direction {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Same point set up to `GEOM_TOL`.
    pub fn approx_eq(&self, other: &Hyperplane) -> bool {
        (self.offset - other.offset).abs() <= GEOM_TOL
            && (*self.normal.vector() - *other.normal.vector()).max_abs() <= GEOM_TOL
    }

    /// The closed halfspace bounded by `self` that contains `p`.
    pub fn halfspace_containing(&self, p: &Vector) -> Halfspace {
        if self.normal.dot(p) <= self.offset {
            Halfspace::new(self.normal, self.offset)
        } else {
            Halfspace::new(self.normal.negate(), -self.offset)
        }
    }

    /// Orientation with nonnegative offset, `(u, |tau|)`.
    pub fn with_nonnegative_offset(&self) -> (Direction, f64) {
        if self.offset >= 0.0 {
            (self.normal, self.offset)
        } else {
            (self.normal.negate(), -self.offset)
        }
    }

    /// True iff the hyperplane is disjoint from `body`.
    pub fn misses(&self, body: &ConvexBody) -> Result<bool> {
        let hi = body.support(&self.normal)?;
        let lo = -body.support(&self.normal.negate())?;
        Ok(self.offset > hi + GEOM_TOL || self.offset < lo - GEOM_TOL)
    }
}

/// A convex body given by one of several explicit representations.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexBody {
    Ball { center: Vector, radius: f64 },
    VPolytope { vertices: Vec<Vector> },
    /// `{x : <x,u_i> <= tau_i}` with a strictly interior point.
    HPolytope { halfspaces: Vec<Halfspace>, interior: Vector },
    /// Minkowski combination `sum w_i K_i`, realized through `h = sum w_i h_i`.
    SupportCombo { terms: Vec<(f64, ConvexBody)> },
}

impl ConvexBody {
    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn unit_ball(dim: usize) -> Self {
        Self::Ball { center: Vector::zeros(dim), radius: 1.0 }
    }

    pub fn vpolytope(vertices: Vec<Vector>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(Error::InvalidParameter("vpolytope needs at least one vertex".into()));
        };
        let d = first.dim();
        if let Some(v) = vertices.iter().find(|v| v.dim() != d) {
            return Err(Error::Dimension { expected: d, found: v.dim() });
        }
        Ok(Self::VPolytope { vertices })
    }

    /// Like [`ConvexBody::vpolytope`] but additionally requires d+1 affinely
    /// independent vertices, as needed for a body with interior.
    pub fn full_dimensional_vpolytope(vertices: Vec<Vector>) -> Result<Self> {
        let body = Self::vpolytope(vertices)?;
        if let Self::VPolytope { vertices } = &body {
            if affine_rank(vertices) < vertices[0].dim() {
                return Err(Error::InvalidParameter("vpolytope vertices are not full-dimensional".into()));
            }
        }
        Ok(body)
    }

    pub fn hpolytope(halfspaces: Vec<Halfspace>, interior: Vector) -> Result<Self> {
        for (i, hs) in halfspaces.iter().enumerate() {
            if hs.normal.dim() != interior.dim() {
                return Err(Error::Dimension { expected: interior.dim(), found: hs.normal.dim() });
            }
            if hs.slack(&interior) <= GEOM_TOL {
                return Err(Error::InvalidParameter(format!(
                    "interior point does not strictly satisfy constraint {i}"
                )));
            }
        }
        Ok(Self::HPolytope { halfspaces, interior })
    }

    pub fn support_combo(terms: Vec<(f64, ConvexBody)>) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::InvalidParameter("empty support combination".into()));
        };
        let d = first.dim();
        for (w, b) in &terms {
            if !(*w >= 0.0) {
                return Err(Error::InvalidParameter(format!("negative combination weight {w}")));
            }
            if b.dim() != d {
                return Err(Error::Dimension { expected: d, found: b.dim() });
            }
        }
        Ok(Self::SupportCombo { terms })
    }

    /// `(1-alpha) K + alpha L`.
    pub fn convex_combination(k: &ConvexBody, l: &ConvexBody, alpha: f64) -> Result<Self> {
        Self::support_combo(vec![(1.0 - alpha, k.clone()), (alpha, l.clone())])
    }

    /// Axis-parallel cube `[-half, half]^d` as a V-polytope.
    pub fn cube(dim: usize, half: f64) -> Self {
        let vertices = (0..1usize << dim)
            .map(|mask| {
                let mut v = Vector::zeros(dim);
                for i in 0..dim {
                    v[i] = if mask >> i & 1 == 1 { half } else { -half };
                }
                v
            })
            .collect();
        Self::VPolytope { vertices }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { center, .. } => center.dim(),
            Self::VPolytope { vertices } => vertices[0].dim(),
            Self::HPolytope { interior, .. } => interior.dim(),
            Self::SupportCombo { terms } => terms[0].1.dim(),
        }
    }

    /// `h(K,u) = sup <x,u>` over the body.
    pub fn support(&self, u: &Direction) -> Result<f64> {
        Ok(self.support_point(u)?.0)
    }

    /// Support value together with a maximizing point.
    pub fn support_point(&self, u: &Direction) -> Result<(f64, Vector)> {
        match self {
            Self::Ball { center, radius } => {
                Ok((u.dot(center) + radius, center.axpy(*radius, u.vector())))
            }
            Self::VPolytope { vertices } => {
                let mut best = (f64::NEG_INFINITY, vertices[0]);
                for v in vertices {
                    let s = u.dot(v);
                    if s > best.0 {
                        best = (s, *v);
                    }
                }
                Ok(best)
            }
            Self::HPolytope { halfspaces, interior } => {
                let rep = HRep::new(halfspaces.clone(), *interior);
                match support::support_hrep(&rep, u)? {
                    Support::Bounded(r) => Ok((r.value, r.point.unwrap_or(*interior))),
                    Support::Unbounded => Err(Error::Unbounded),
                }
            }
            Self::SupportCombo { terms } => {
                let mut value = 0.0;
                let mut point = Vector::zeros(u.dim());
                for (w, body) in terms {
                    if *w == 0.0 {
                        continue;
                    }
                    let (h, x) = body.support_point(u)?;
                    value += w * h;
                    point = point.axpy(*w, &x);
                }
                Ok((value, point))
            }
        }
    }

    /// A point that is interior for full-dimensional bodies; used for
    /// centering and for orienting halfspaces.
    pub fn reference_point(&self) -> Vector {
        match self {
            Self::Ball { center, .. } => *center,
            Self::VPolytope { vertices } => {
                let mut c = Vector::zeros(vertices[0].dim());
                for v in vertices {
                    c = c + *v;
                }
                c.scale(1.0 / vertices.len() as f64)
            }
            Self::HPolytope { interior, .. } => *interior,
            Self::SupportCombo { terms } => {
                let mut c = Vector::zeros(terms[0].1.dim());
                for (w, b) in terms {
                    c = c.axpy(*w, &b.reference_point());
                }
                c
            }
        }
    }

    pub fn translate(&self, v: &Vector) -> Self {
        match self {
            Self::Ball { center, radius } => Self::Ball { center: *center + *v, radius: *radius },
            Self::VPolytope { vertices } => {
                Self::VPolytope { vertices: vertices.iter().map(|x| *x + *v).collect() }
            }
            Self::HPolytope { halfspaces, interior } => Self::HPolytope {
                halfspaces: halfspaces.iter().map(|h| h.translate(v)).collect(),
                interior: *interior + *v,
            },
            Self::SupportCombo { terms } => {
                // Translating one term with positive weight moves the sum.
                let total: f64 = terms.iter().map(|(w, _)| w).sum();
                Self::SupportCombo {
                    terms: terms
                        .iter()
                        .map(|(w, b)| (*w, b.translate(&v.scale(1.0 / total))))
                        .collect(),
                }
            }
        }
    }

    /// Translate so the reference point sits at the origin.
    pub fn centered(&self) -> Self {
        self.translate(&-self.reference_point())
    }

    /// `R_o(K)`: radius of the smallest origin-centred ball containing K.
    pub fn circumradius_origin(&self) -> Result<f64> {
        match self {
            Self::Ball { center, radius } => Ok(center.norm() + radius),
            Self::VPolytope { vertices } => Ok(vertices.iter().map(Vector::norm).fold(0.0, f64::max)),
            _ => {
                if let Some(poly) = self.vertex_cycle_2d()? {
                    return Ok(poly.iter().map(Vector::norm).fold(0.0, f64::max));
                }
                circumradius_by_ascent(self.dim(), |u| self.support_point(u))
            }
        }
    }

    /// Counterclockwise vertex cycle for planar polygons; `None` when the
    /// body is not a polygon (a ball or a combination involving one) or
    /// `d != 2`.
    pub fn vertex_cycle_2d(&self) -> Result<Option<Vec<Vector>>> {
        if self.dim() != 2 {
            return Ok(None);
        }
        match self {
            Self::Ball { .. } => Ok(None),
            Self::VPolytope { vertices } => Ok(Some(support::convex_hull_2d(vertices))),
            Self::HPolytope { halfspaces, interior } => {
                let rep = HRep::new(halfspaces.clone(), *interior);
                Ok(Some(support::polygon_from_halfspaces_2d(&rep)?))
            }
            Self::SupportCombo { terms } => {
                // Minkowski combination of polygons: its edge normals are the
                // union of the summands' edge normals.
                let mut normals = Vec::new();
                for (_, b) in terms {
                    match b.vertex_cycle_2d()? {
                        Some(cycle) => normals.extend(support::edge_normals_2d(&cycle)),
                        None => return Ok(None),
                    }
                }
                let interior = self.reference_point();
                let halfspaces = normals
                    .into_iter()
                    .map(|u| Ok(Halfspace::new(u, self.support(&u)?)))
                    .collect::<Result<Vec<_>>>()?;
                let rep = HRep::new(halfspaces, interior);
                Ok(Some(support::polygon_from_halfspaces_2d(&rep)?))
            }
        }
    }

    /// Checks `self ⊆ other` through support dominance on the given directions.
    pub fn contained_in(&self, other: &ConvexBody, dirs: &[Direction]) -> Result<bool> {
        for u in dirs {
            if self.support(u)? > other.support(u)? + GEOM_TOL {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Maximizes `||x||` over a body given its support oracle: coarse scan over
/// many directions, then the fixed-point ascent `u <- x*(u)/||x*(u)||`, which
/// never decreases `||x*||` and stops at a vertex of locally maximal norm.
pub(crate) fn circumradius_by_ascent<F>(dim: usize, mut oracle: F) -> Result<f64>
where
    F: FnMut(&Direction) -> Result<(f64, Vector)>,
{
    let dirs = crate::functionals::SphericalQuadrature::default_for(dim).into_nodes();
    let mut scored = Vec::with_capacity(dirs.len());
    for u in &dirs {
        let (_, x) = oracle(u)?;
        scored.push((x.norm(), *u));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = scored[0].0;
    for (_, start) in scored.iter().take(8) {
        let mut u = *start;
        let mut r = 0.0;
        for _ in 0..100 {
            let (_, x) = oracle(&u)?;
            let nx = x.norm();
            if nx <= r + 1e-14 || nx == 0.0 {
                r = r.max(nx);
                break;
            }
            r = nx;
            u = Direction::new_unchecked(x.scale(1.0 / nx));
        }
        best = best.max(r);
    }
    Ok(best)
}

fn affine_rank(points: &[Vector]) -> usize {
    let d = points[0].dim();
    let mut rows: Vec<Vector> = points[1..].iter().map(|p| *p - points[0]).collect();
    let mut rank = 0;
    for col in 0..d {
        let Some(piv) = (rank..rows.len()).max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()))
        else {
            break;
        };
        if rows[piv][col].abs() < GEOM_TOL {
            continue;
        }
        rows.swap(rank, piv);
        let p = rows[rank];
        for r in rows.iter_mut().skip(rank + 1) {
            let f = r[col] / p[col];
            *r = r.axpy(-f, &p);
        }
        rank += 1;
    }
    rank
}

/// Sampling/truncation window around the body.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    /// Centred ball of radius R.
    Ball { radius: f64 },
    /// Centred cube of half-side R.
    Box { half_side: f64 },
}

impl Window {
    /// The default policy `R = 4 max(1, R_o(K))`, as a ball.
    pub fn for_body(body: &ConvexBody) -> Result<Self> {
        Ok(Self::Ball { radius: 4.0 * body.circumradius_origin()?.max(1.0) })
    }

    pub fn size(&self) -> f64 {
        match self {
            Self::Ball { radius } => *radius,
            Self::Box { half_side } => *half_side,
        }
    }

    pub fn support(&self, u: &Direction) -> f64 {
        match self {
            Self::Ball { radius } => *radius,
            Self::Box { half_side } => {
                half_side * u.vector().as_slice().iter().map(|c| c.abs()).sum::<f64>()
            }
        }
    }

    /// Closed-form mean width, `W(B^d) = 2` normalization.
    pub fn mean_width(&self, dim: usize) -> f64 {
        match self {
            Self::Ball { radius } => 2.0 * radius,
            Self::Box { half_side } => {
                // E|u_1| under the uniform law on S^{d-1}.
                let d = dim as f64;
                let e_abs = (statrs::function::gamma::ln_gamma(d / 2.0)
                    - statrs::function::gamma::ln_gamma((d + 1.0) / 2.0))
                .exp()
                    / std::f64::consts::PI.sqrt();
                2.0 * half_side * d * e_abs
            }
        }
    }

    /// True iff `x` lies outside the window, up to `GEOM_TOL` inward.
    pub fn escapes(&self, x: &Vector) -> bool {
        match self {
            Self::Ball { radius } => x.norm() > radius - GEOM_TOL,
            Self::Box { half_side } => x.max_abs() > half_side - GEOM_TOL,
        }
    }

    /// Box guard facets `±x_i <= R` (2d halfspaces).
    pub fn guard_halfspaces(&self, dim: usize) -> Vec<Halfspace> {
        let r = self.size();
        (0..dim)
            .flat_map(|i| {
                let e = Direction::axis(dim, i);
                [Halfspace::new(e, r), Halfspace::new(e.negate(), r)]
            })
            .collect()
    }

    pub fn to_body(&self, dim: usize) -> ConvexBody {
        match self {
            Self::Ball { radius } => ConvexBody::Ball { center: Vector::zeros(dim), radius: *radius },
            Self::Box { half_side } => ConvexBody::cube(dim, *half_side),
        }
    }

    /// Errors with `WindowTooSmall` unless `h(K,u) <= h(window,u)` on `dirs`.
    pub fn check_contains(&self, body: &ConvexBody, dirs: &[Direction]) -> Result<()> {
        for u in dirs {
            let hk = body.support(u)?;
            let hw = self.support(u);
            if hw < hk - GEOM_TOL {
                return Err(Error::WindowTooSmall { window: hw, body: hk });
            }
        }
        Ok(())
    }
}

/// Hausdorff distance of convex bodies as `max_u |h(K,u) - h(L,u)|` over the
/// quadrature nodes.
pub fn hausdorff_distance(
    k: &ConvexBody,
    l: &ConvexBody,
    quad: &crate::functionals::SphericalQuadrature,
) -> Result<f64> {
    let mut best = 0.0f64;
    for u in quad.nodes() {
        best = best.max((k.support(u)? - l.support(u)?).abs());
    }
    Ok(best)
}

/// Exact Hausdorff distance of two convex polygons (ccw vertex cycles).
///
/// Between consecutive merged edge-normal angles both maximizing vertices
/// `p`, `q` are fixed, so the gap is `<p - q, u(theta)>`: its extremes lie at
/// the interval ends or where `u` is parallel to `±(p - q)`.
pub fn hausdorff_distance_polygons(p: &[Vector], q: &[Vector]) -> f64 {
    use std::f64::consts::TAU;
    let mut angles: Vec<f64> = support::edge_normals_2d(p)
        .iter()
        .chain(support::edge_normals_2d(q).iter())
        .map(|u| u.vector()[1].atan2(u.vector()[0]).rem_euclid(TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    if angles.is_empty() {
        angles.push(0.0);
    }
    let argmax = |poly: &[Vector], u: &Direction| {
        *poly.iter().max_by(|a, b| u.dot(a).total_cmp(&u.dot(b))).expect("nonempty polygon")
    };
    let eval = |theta: f64| {
        let u = Direction::from_angle(theta);
        (u.dot(&argmax(p, &u)) - u.dot(&argmax(q, &u))).abs()
    };
    let mut best = 0.0f64;
    let k = angles.len();
    for i in 0..k {
        let a = angles[i];
        let b = if i + 1 < k { angles[i + 1] } else { angles[0] + TAU };
        best = best.max(eval(a));
        let mid = Direction::from_angle(0.5 * (a + b));
        let diff = argmax(p, &mid) - argmax(q, &mid);
        if diff.norm() > 0.0 {
            for s in [1.0, -1.0] {
                let phi = (s * diff[1]).atan2(s * diff[0]).rem_euclid(TAU);
                for cand in [phi, phi + TAU] {
                    if cand > a && cand < b {
                        best = best.max(eval(cand));
                    }
                }
            }
        }
    }
    best
}

/// Exact planar Hausdorff distance for disks and polygons. A disk is
/// compared with a polygon through `h(L,u) - <c,u> - ρ`, whose extremes sit
/// at vertex directions (maximum) and edge normals (minimum, when the centre
/// lies in the polygon).
pub fn hausdorff_distance_exact_2d(k: &ConvexBody, l: &ConvexBody) -> Result<f64> {
    if k.dim() != 2 || l.dim() != 2 {
        return Err(Error::Dimension { expected: 2, found: k.dim().max(l.dim()) });
    }
    match (k, l) {
        (ConvexBody::Ball { center: c1, radius: r1 }, ConvexBody::Ball { center: c2, radius: r2 }) => {
            Ok(c1.distance(c2) + (r1 - r2).abs())
        }
        (ConvexBody::Ball { center, radius }, poly) | (poly, ConvexBody::Ball { center, radius }) => {
            let cycle = poly
                .vertex_cycle_2d()?
                .ok_or_else(|| Error::InvalidParameter("exact Hausdorff distance needs polygons or disks".into()))?;
            let normals = support::edge_normals_2d(&cycle);
            let offsets: Vec<f64> = normals
                .iter()
                .map(|u| cycle.iter().map(|v| u.dot(&(*v - *center))).fold(f64::NEG_INFINITY, f64::max))
                .collect();
            if offsets.iter().any(|h| *h < 0.0) {
                return Err(Error::InvalidParameter("disk centre must lie in the polygon".into()));
            }
            let far = cycle.iter().map(|v| v.distance(center)).fold(0.0, f64::max);
            let near = offsets.iter().copied().fold(f64::INFINITY, f64::min);
            Ok((far - radius).abs().max((radius - near).abs()))
        }
        _ => {
            let (Some(p), Some(q)) = (k.vertex_cycle_2d()?, l.vertex_cycle_2d()?) else {
                return Err(Error::InvalidParameter("exact Hausdorff distance needs polygons or disks".into()));
            };
            Ok(hausdorff_distance_polygons(&p, &q))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::SphericalQuadrature;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(half: f64) -> ConvexBody {
        ConvexBody::cube(2, half)
    }

    #[test]
    fn support_examples() {
        let u = Direction::axis(2, 0);
        assert_eq!(ConvexBody::unit_ball(2).support(&Direction::from_angle(0.7)).unwrap(), 1.0);
        assert_eq!(square(0.5).support(&u).unwrap(), 0.5);
        let combo =
            ConvexBody::support_combo(vec![(0.5, ConvexBody::unit_ball(2)), (0.5, square(0.5))]).unwrap();
        assert!((combo.support(&u).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn circumradius_examples() {
        assert_eq!(ConvexBody::unit_ball(2).circumradius_origin().unwrap(), 1.0);
        let cross = ConvexBody::vpolytope(vec![
            Vector::new2(1.0, 0.0),
            Vector::new2(0.0, 1.0),
            Vector::new2(-1.0, 0.0),
            Vector::new2(0.0, -1.0),
        ])
        .unwrap();
        assert_eq!(cross.circumradius_origin().unwrap(), 1.0);
        let off = ConvexBody::ball(Vector::new2(3.0, 0.0), 1.0).unwrap();
        assert_eq!(off.circumradius_origin().unwrap(), 4.0);
    }

    #[test]
    fn circumradius_of_hpolytope_3d() {
        // Cube [-1,1]^3 as halfspaces: R_o = sqrt(3).
        let w = Window::Box { half_side: 1.0 };
        let cube = ConvexBody::hpolytope(w.guard_halfspaces(3), Vector::zeros(3)).unwrap();
        let r = cube.circumradius_origin().unwrap();
        assert!((r - 3f64.sqrt()).abs() < 1e-9, "{r}");
        let unbounded =
            ConvexBody::hpolytope(vec![Halfspace::new(Direction::axis(3, 0), 1.0)], Vector::zeros(3)).unwrap();
        assert_eq!(unbounded.circumradius_origin(), Err(Error::Unbounded));
    }

    #[test]
    fn hausdorff_examples() {
        let q = SphericalQuadrature::uniform_angles(4096);
        let b1 = ConvexBody::unit_ball(2);
        let b2 = ConvexBody::ball(Vector::zeros(2), 2.0).unwrap();
        assert!((hausdorff_distance(&b1, &b2, &q).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(hausdorff_distance(&b1, &b1, &q).unwrap(), 0.0);
        let sq = square(0.5);
        let shifted = sq.translate(&Vector::new2(0.3, 0.0));
        // Dense-grid oracle.
        let mut brute = 0.0f64;
        for k in 0..100_000 {
            let u = Direction::from_angle(k as f64 * std::f64::consts::TAU / 100_000.0);
            brute = brute.max((sq.support(&u).unwrap() - shifted.support(&u).unwrap()).abs());
        }
        assert!((brute - 0.3).abs() < 1e-12);
        assert!((hausdorff_distance(&sq, &shifted, &q).unwrap() - 0.3).abs() < 1e-12);
        let p = sq.vertex_cycle_2d().unwrap().unwrap();
        let pq = shifted.vertex_cycle_2d().unwrap().unwrap();
        assert!((hausdorff_distance_polygons(&p, &pq) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn exact_planar_hausdorff_for_disks() {
        let b = ConvexBody::unit_ball(2);
        let b2 = ConvexBody::ball(Vector::zeros(2), 2.0).unwrap();
        assert_eq!(hausdorff_distance_exact_2d(&b, &b2).unwrap(), 1.0);
        let sq = square(0.9);
        let exact = hausdorff_distance_exact_2d(&b, &sq).unwrap();
        assert!((exact - (0.9 * 2f64.sqrt() - 1.0)).abs() < 1e-15);
        let dense = hausdorff_distance(&b, &sq, &SphericalQuadrature::uniform_angles(100_000)).unwrap();
        assert!((exact - dense).abs() < 1e-8, "{exact} vs {dense}");
        assert!((hausdorff_distance_exact_2d(&square(0.5), &b).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn polygon_hausdorff_matches_dense_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mk = |rng: &mut ChaCha8Rng| {
                let pts: Vec<Vector> = (0..8)
                    .map(|_| Vector::new2(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                support::convex_hull_2d(&pts)
            };
            let (p, q) = (mk(&mut rng), mk(&mut rng));
            let exact = hausdorff_distance_polygons(&p, &q);
            let pb = ConvexBody::vpolytope(p.clone()).unwrap();
            let qb = ConvexBody::vpolytope(q.clone()).unwrap();
            let steps = 200_000;
            let mut dense = 0.0f64;
            for k in 0..steps {
                let u = Direction::from_angle(k as f64 * std::f64::consts::TAU / steps as f64);
                dense = dense.max((pb.support(&u).unwrap() - qb.support(&u).unwrap()).abs());
            }
            // The support gap is Lipschitz in the angle with constant at most
            // R_o(P) + R_o(Q), which bounds what the grid can miss.
            let lip = pb.circumradius_origin().unwrap() + qb.circumradius_origin().unwrap();
            let slack = lip * std::f64::consts::PI / steps as f64;
            assert!(exact >= dense - 1e-12 && exact - dense <= slack, "{exact} vs {dense}");
        }
    }

    #[test]
    fn hyperplane_orientation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let d = rng.random_range(2..=3);
            let mut v = Vector::zeros(d);
            for i in 0..d {
                v[i] = rng.random_range(-1.0..1.0);
            }
            let u = Direction::new(v).unwrap();
            let tau = rng.random_range(-3.0..3.0);
            assert_eq!(Hyperplane::new(u, tau), Hyperplane::new(u.negate(), -tau));
            assert!(Hyperplane::new(u, tau).approx_eq(&Hyperplane::new(u.negate(), -tau)));
        }
    }

    #[test]
    fn vpolytope_union_support_is_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in [2usize, 3] {
            let pts = |rng: &mut ChaCha8Rng| -> Vec<Vector> {
                (0..6)
                    .map(|_| {
                        let mut v = Vector::zeros(d);
                        for i in 0..d {
                            v[i] = rng.random_range(-1.0..1.0);
                        }
                        v
                    })
                    .collect()
            };
            let (v, w) = (pts(&mut rng), pts(&mut rng));
            let union: Vec<Vector> = v.iter().chain(w.iter()).copied().collect();
            let (bv, bw, bu) = (
                ConvexBody::vpolytope(v).unwrap(),
                ConvexBody::vpolytope(w).unwrap(),
                ConvexBody::vpolytope(union).unwrap(),
            );
            for _ in 0..1000 {
                let mut g = Vector::zeros(d);
                for i in 0..d {
                    g[i] = rng.random_range(-1.0..1.0);
                }
                let u = Direction::new(g).unwrap();
                let lhs = bu.support(&u).unwrap();
                let rhs = bv.support(&u).unwrap().max(bw.support(&u).unwrap());
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn nested_bodies_hausdorff_is_one_sided_max() {
        let q = SphericalQuadrature::uniform_angles(1024);
        let k = square(0.5);
        let l = ConvexBody::unit_ball(2);
        assert!(k.contained_in(&l, q.nodes()).unwrap());
        let one_sided = q
            .nodes()
            .iter()
            .map(|u| l.support(u).unwrap() - k.support(u).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(hausdorff_distance(&k, &l, &q).unwrap(), one_sided);
    }

    #[test]
    fn window_properties() {
        let b = Window::Ball { radius: 2.0 };
        assert_eq!(b.mean_width(2), 4.0);
        let bx = Window::Box { half_side: 1.0 };
        // Square of side 2: perimeter 8, W = 8/pi.
        assert!((bx.mean_width(2) - 8.0 / std::f64::consts::PI).abs() < 1e-12);
        // Cube [-1,1]^3: W = 3 (sum of edge lengths / (2 pi) * pi ... = 3).
        assert!((bx.mean_width(3) - 3.0).abs() < 1e-12);
        let q = SphericalQuadrature::uniform_angles(64);
        assert!(b.check_contains(&ConvexBody::unit_ball(2), q.nodes()).is_ok());
        assert!(matches!(
            Window::Ball { radius: 0.5 }.check_contains(&ConvexBody::unit_ball(2), q.nodes()),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn full_dimensional_check() {
        let flat = vec![Vector::new2(0.0, 0.0), Vector::new2(1.0, 1.0), Vector::new2(2.0, 2.0)];
        assert!(ConvexBody::full_dimensional_vpolytope(flat).is_err());
        let tri = vec![Vector::new2(0.0, 0.0), Vector::new2(1.0, 0.0), Vector::new2(0.0, 1.0)];
        assert!(ConvexBody::full_dimensional_vpolytope(tri).is_ok());
    }

    #[test]
    fn translated_combo_moves_support() {
        let combo =
            ConvexBody::convex_combination(&ConvexBody::unit_ball(2), &square(0.5), 0.3).unwrap();
        let v = Vector::new2(0.2, -0.4);
        let t = combo.translate(&v);
        let u = Direction::from_angle(1.1);
        assert!((t.support(&u).unwrap() - combo.support(&u).unwrap() - u.dot(&v)).abs() < 1e-12);
    }
}
