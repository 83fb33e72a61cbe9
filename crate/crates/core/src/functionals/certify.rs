//! Quadrature-free planar oracles used to certify `K[t]` evaluations.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::{ConvexBody, Vector};
use crate::sampler::RngStream;
use crate::support::{convex_hull_2d, perimeter};

/// Exact `W(K^x) - W(K)` in the plane, for disks (closed form) and polygons
/// (hull perimeter).
pub fn planar_width_gain_exact(k: &ConvexBody, x: &Vector) -> Result<f64> {
    if k.dim() != 2 || x.dim() != 2 {
        return Err(Error::Dimension { expected: 2, found: k.dim().max(x.dim()) });
    }
    if let ConvexBody::Ball { center, radius } = k {
        let q = x.distance(center) / radius;
        if q <= 1.0 {
            return Ok(0.0);
        }
        return Ok(radius * 2.0 / PI * ((q * q - 1.0).sqrt() - (1.0 / q).acos()));
    }
    let cycle = k
        .vertex_cycle_2d()?
        .ok_or_else(|| Error::InvalidParameter("exact planar gain needs a disk or a polygon".into()))?;
    let mut pts = cycle.clone();
    pts.push(*x);
    let gain = (perimeter(&convex_hull_2d(&pts)) - perimeter(&cycle)) / PI;
    Ok(gain.max(0.0))
}

/// Brute-force `W(K[t]) - W(K)` in the plane: uniform points in the outer
/// parallel shell `{0 < dist(x, K) <= δ}` are kept when their exact gain is
/// at most t, and the hull of K and the kept points is measured. δ is fitted
/// to `K[t]` by pilot passes so that the budget lands near its boundary.
pub fn kt_width_gain_by_rejection(k: &ConvexBody, t: f64, samples: usize, rng: &RngStream) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("level t must be positive, got {t}")));
    }
    let shell = Shell::new(k)?;
    let mut delta = k.circumradius_origin()? + 1.0;
    let mut g = rng.rng();
    let mut draw = |delta: f64, count: usize| -> Result<(Vec<Vector>, f64)> {
        let mut kept = Vec::new();
        let mut reach = 0.0f64;
        for _ in 0..count {
            let (x, dist) = shell.sample(delta, &mut g);
            if planar_width_gain_exact(k, &x)? <= t {
                reach = reach.max(dist);
                kept.push(x);
            }
        }
        Ok((kept, reach))
    };
    // Pilot passes: grow until the kept set stays clear of the shell's outer
    // edge, then shrink the shell onto it.
    loop {
        let (_, reach) = draw(delta, (samples / 20).max(1000))?;
        if reach < 0.95 * delta {
            delta = (reach * 1.05).max(1e-12);
            break;
        }
        delta *= 2.0;
    }
    let (kept, reach) = draw(delta, samples)?;
    if reach >= 0.999 * delta {
        // The pilot under-shot; fall back to a wider shell.
        let (kept, _) = draw(2.0 * delta, samples)?;
        return hull_gain(k, &kept);
    }
    hull_gain(k, &kept)
}

/// Outer parallel shell of a disk or a convex polygon, split into pieces of
/// known area: an annulus, or edge rectangles and vertex sectors.
enum Shell {
    Disk { center: Vector, radius: f64 },
    Polygon { cycle: Vec<Vector> },
}

impl Shell {
    fn new(k: &ConvexBody) -> Result<Self> {
        if k.dim() != 2 {
            return Err(Error::Dimension { expected: 2, found: k.dim() });
        }
        if let ConvexBody::Ball { center, radius } = k {
            return Ok(Self::Disk { center: *center, radius: *radius });
        }
        let cycle = k
            .vertex_cycle_2d()?
            .ok_or_else(|| Error::InvalidParameter("rejection oracle needs a disk or a polygon".into()))?;
        Ok(Self::Polygon { cycle })
    }

    /// A uniform point of the shell of width δ and its distance to K.
    fn sample<R: Rng>(&self, delta: f64, g: &mut R) -> (Vector, f64) {
        match self {
            Self::Disk { center, radius } => {
                let (a, b) = (radius * radius, (radius + delta) * (radius + delta));
                let rho = g.random_range(a..b).sqrt();
                let theta = g.random_range(0.0..2.0 * PI);
                (*center + Vector::new2(rho * theta.cos(), rho * theta.sin()), rho - radius)
            }
            Self::Polygon { cycle } => {
                let m = cycle.len();
                let edges: f64 = (0..m).map(|i| cycle[i].distance(&cycle[(i + 1) % m])).sum();
                // Vertex sectors tile a full disk of radius δ.
                let sector_area = PI * delta * delta;
                let pick = g.random_range(0.0..edges * delta + sector_area);
                let ccw = signed_area(cycle) > 0.0;
                let outward = |a: &Vector, b: &Vector| {
                    let e = (*b - *a).scale(1.0 / a.distance(b));
                    if ccw { Vector::new2(e[1], -e[0]) } else { Vector::new2(-e[1], e[0]) }
                };
                if pick < edges * delta {
                    let mut s = pick / delta;
                    for i in 0..m {
                        let (a, b) = (cycle[i], cycle[(i + 1) % m]);
                        let len = a.distance(&b);
                        if s < len || i == m - 1 {
                            let d = g.random_range(0.0..delta);
                            let x = a.axpy(s.min(len) / len, &(b - a)).axpy(d, &outward(&a, &b));
                            return (x, d);
                        }
                        s -= len;
                    }
                    unreachable!()
                }
                // A uniform point of the δ-disk, attached to the vertex whose
                // normal cone contains its direction.
                let rho = delta * g.random::<f64>().sqrt();
                let theta = g.random_range(0.0..2.0 * PI);
                let dir = Vector::new2(theta.cos(), theta.sin());
                let apex = (0..m)
                    .max_by(|&i, &j| dir.dot(&cycle[i]).total_cmp(&dir.dot(&cycle[j])))
                    .expect("nonempty cycle");
                (cycle[apex].axpy(rho, &dir), rho)
            }
        }
    }
}

fn signed_area(cycle: &[Vector]) -> f64 {
    let m = cycle.len();
    (0..m).map(|i| cycle[i][0] * cycle[(i + 1) % m][1] - cycle[(i + 1) % m][0] * cycle[i][1]).sum::<f64>() / 2.0
}

fn hull_gain(k: &ConvexBody, kept: &[Vector]) -> Result<f64> {
    let mut pts = kept.to_vec();
    match k {
        // Points on the circle lie in K, so the hull stays inside K[t].
        ConvexBody::Ball { center, radius } => pts.extend((0..4096).map(|i| {
            let a = 2.0 * PI * i as f64 / 4096.0;
            *center + Vector::new2(radius * a.cos(), radius * a.sin())
        })),
        _ => pts.extend(k.vertex_cycle_2d()?.into_iter().flatten()),
    }
    let w_hull = perimeter(&convex_hull_2d(&pts)) / PI;
    let w_k = match k {
        ConvexBody::Ball { radius, .. } => 2.0 * radius,
        _ => perimeter(&k.vertex_cycle_2d()?.expect("polygon")) / PI,
    };
    Ok((w_hull - w_k).max(0.0))
}
