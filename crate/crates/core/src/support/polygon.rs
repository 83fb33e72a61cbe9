//! Exact planar halfspace intersection by polar duality.
//!
//! With interior point p and slacks `s_i = b_i - <a_i,p>`, each constraint
//! maps to the dual point `a_i / s_i`. The non-redundant constraints are the
//! vertices of the dual hull, in the same cyclic order as the polygon's
//! edges, and the region is bounded iff the origin is interior to that hull.

use std::f64::consts::TAU;

use super::HRep;
use crate::error::{Error, Result};
use crate::geom::{Direction, Vector};

/// Constraint pairs closer than this in normal angle are merged.
const PARALLEL_ANGLE: f64 = 1e-10;

#[inline]
fn cross(o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain over `(point, tag)`; returns tags of the strict
/// hull in counterclockwise order.
fn hull_indices(pts: &mut [([f64; 2], usize)]) -> Vec<usize> {
    pts.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.0[1].total_cmp(&b.0[1])));
    let n = pts.len();
    if n < 3 {
        return pts.iter().map(|p| p.1).collect();
    }
    let mut hull: Vec<([f64; 2], usize)> = Vec::with_capacity(2 * n);
    for p in pts.iter() {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2].0, &hull[hull.len() - 1].0, &p.0) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(&hull[hull.len() - 2].0, &hull[hull.len() - 1].0, &p.0) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull.into_iter().map(|p| p.1).collect()
}

/// Counterclockwise strict convex hull of planar points.
pub fn convex_hull_2d(points: &[Vector]) -> Vec<Vector> {
    let mut tagged: Vec<([f64; 2], usize)> =
        points.iter().enumerate().map(|(i, p)| ([p[0], p[1]], i)).collect();
    hull_indices(&mut tagged).into_iter().map(|i| points[i]).collect()
}

/// Outward unit normals of the edges of a ccw polygon.
pub fn edge_normals_2d(cycle: &[Vector]) -> Vec<Direction> {
    let n = cycle.len();
    if n < 2 {
        return Vec::new();
    }
    (0..n)
        .filter_map(|i| {
            let e = cycle[(i + 1) % n] - cycle[i];
            Direction::new(Vector::new2(e[1], -e[0])).ok()
        })
        .collect()
}

pub fn perimeter(cycle: &[Vector]) -> f64 {
    let n = cycle.len();
    if n < 2 {
        return 0.0;
    }
    (0..n).map(|i| cycle[i].distance(&cycle[(i + 1) % n])).sum()
}

/// Vertex cycle (counterclockwise) of a bounded planar H-representation,
/// guard facets included. Redundant constraints do not produce vertices.
pub fn polygon_from_halfspaces_2d(rep: &HRep) -> Result<Vec<Vector>> {
    if rep.dim() != 2 {
        return Err(Error::Dimension { expected: 2, found: rep.dim() });
    }
    let p = rep.interior;
    // (angle, normal, slack)
    let mut cons: Vec<(f64, [f64; 2], f64)> = rep
        .constraints()
        .map(|h| {
            let a = h.normal.vector();
            (a[1].atan2(a[0]).rem_euclid(TAU), [a[0], a[1]], h.slack(&p))
        })
        .collect();
    if let Some(c) = cons.iter().find(|c| !(c.2 > 0.0)) {
        return Err(Error::InvalidParameter(format!("interior point violates a constraint (slack {})", c.2)));
    }
    cons.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, [f64; 2], f64)> = Vec::with_capacity(cons.len());
    for c in cons {
        match merged.last_mut() {
            Some(last) if c.0 - last.0 < PARALLEL_ANGLE => {
                if c.2 < last.2 {
                    *last = c;
                }
            }
            _ => merged.push(c),
        }
    }
    if merged.len() >= 2 {
        let (first, last) = (merged[0], merged[merged.len() - 1]);
        if first.0 + TAU - last.0 < PARALLEL_ANGLE {
            if last.2 < first.2 {
                merged[0] = last;
            }
            merged.pop();
        }
    }
    if merged.len() < 3 {
        return Err(Error::Unbounded);
    }
    let mut dual: Vec<([f64; 2], usize)> = merged
        .iter()
        .enumerate()
        .map(|(i, c)| ([c.1[0] / c.2, c.1[1] / c.2], i))
        .collect();
    let hull = hull_indices(&mut dual);
    let k = hull.len();
    if k < 3 {
        return Err(Error::Unbounded);
    }
    let origin = [0.0, 0.0];
    let dual_pt = |i: usize| [merged[i].1[0] / merged[i].2, merged[i].1[1] / merged[i].2];
    for e in 0..k {
        if cross(&dual_pt(hull[e]), &dual_pt(hull[(e + 1) % k]), &origin) <= 0.0 {
            return Err(Error::Unbounded);
        }
    }
    let mut vertices = Vec::with_capacity(k);
    for e in 0..k {
        let (i, j) = (hull[e], hull[(e + 1) % k]);
        let (ai, si) = (merged[i].1, merged[i].2);
        let (aj, sj) = (merged[j].1, merged[j].2);
        let det = ai[0] * aj[1] - ai[1] * aj[0];
        let y0 = (si * aj[1] - sj * ai[1]) / det;
        let y1 = (ai[0] * sj - aj[0] * si) / det;
        vertices.push(Vector::new2(p[0] + y0, p[1] + y1));
    }
    Ok(vertices)
}
