use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mean_width, SphericalQuadrature, SupportOracle};
use crate::error::{Error, Result};
use crate::geom::{ConvexBody, Direction, Hyperplane, Vector, GEOM_TOL};
use crate::support::{convex_hull_2d, perimeter};

/// Number of rays used to trace the boundary of `K[t]` in the plane.
const PLANAR_RAYS: usize = 2048;
const MULTISTART: usize = 8;

/// The convex function `x -> W(K^x) - W(K)`, evaluated as
/// `2 Σ w_i max(0, <x,u_i> - h(K,u_i))` with `h(K,·)` cached at the nodes.
#[derive(Clone, Debug)]
pub struct WidthGainField<'a> {
    body: &'a ConvexBody,
    quad: &'a SphericalQuadrature,
    /// Node coordinates, flat, d per node.
    nodes: Vec<f64>,
    /// `2 w_i`, paired with `h_i`.
    weights: Vec<f64>,
    h: Vec<f64>,
    center: Vector,
    dim: usize,
}

impl<'a> WidthGainField<'a> {
    pub fn new(body: &'a ConvexBody, quad: &'a SphericalQuadrature) -> Result<Self> {
        if body.dim() != quad.dim() {
            return Err(Error::Dimension { expected: quad.dim(), found: body.dim() });
        }
        let h = body.supports(quad.nodes())?;
        let nodes = quad.nodes().iter().flat_map(|u| u.vector().to_vec()).collect();
        Ok(Self {
            body,
            quad,
            nodes,
            weights: quad.weights().iter().map(|w| 2.0 * w).collect(),
            h,
            center: body.reference_point(),
            dim: body.dim(),
        })
    }

    pub fn body(&self) -> &ConvexBody {
        self.body
    }

    pub fn gain(&self, x: &Vector) -> f64 {
        let d = self.dim;
        let xs = x.as_slice();
        let mut total = 0.0;
        for (i, (h, w)) in self.h.iter().zip(&self.weights).enumerate() {
            let u = &self.nodes[i * d..(i + 1) * d];
            let mut s = 0.0;
            for k in 0..d {
                s += u[k] * xs[k];
            }
            if s > *h {
                total += w * (s - h);
            }
        }
        total
    }

    /// A subgradient of the gain at x.
    fn subgradient(&self, x: &Vector) -> Vector {
        let d = self.dim;
        let mut g = Vector::zeros(d);
        for (i, (h, w)) in self.h.iter().zip(&self.weights).enumerate() {
            let u = &self.nodes[i * d..(i + 1) * d];
            let s: f64 = (0..d).map(|k| u[k] * x[k]).sum();
            if s > *h {
                for k in 0..d {
                    g[k] += w * u[k];
                }
            }
        }
        g
    }

    /// `m(H)` and a minimizer. Among (numerically) tied minimizers the foot
    /// of the perpendicular from the origin, the smallest-norm point of H,
    /// is preferred.
    pub fn min_on_hyperplane(&self, h: &Hyperplane) -> Result<(f64, Vector)> {
        if !h.misses(self.body)? {
            return Err(Error::HitsBody);
        }
        let d = self.dim;
        // Orient so the body lies on the negative side.
        let (u, tau) = {
            let hs = h.halfspace_containing(&self.center);
            (hs.normal, hs.offset)
        };
        let base = u.vector().scale(tau);
        let basis = orthonormal_complement(&u);
        let point = |z: &[f64]| {
            let mut x = base;
            for (k, b) in basis.iter().enumerate() {
                x = x.axpy(z[k], b);
            }
            x
        };
        let f = |z: &[f64]| self.gain(&point(z));
        let scale = self.body.circumradius_origin()? + tau.abs() + 1.0;

        let best_z = if d == 2 {
            let (z, _) = golden_section(|s| f(&[s]), -2.0 * scale, 2.0 * scale, 1e-13);
            vec![z]
        } else {
            self.multistart_subgradient(&u, &basis, &point, scale)
        };
        let (mut value, mut x) = (f(&best_z), point(&best_z));
        let foot_value = self.gain(&base);
        if foot_value <= value + 1e-12 {
            value = foot_value.min(value);
            x = base;
        }
        Ok((value, x))
    }

    fn multistart_subgradient(
        &self,
        u: &Direction,
        basis: &[Vector],
        point: &impl Fn(&[f64]) -> Vector,
        scale: f64,
    ) -> Vec<f64> {
        let m = basis.len();
        let to_z = |x: &Vector| basis.iter().map(|b| b.dot(x)).collect::<Vec<f64>>();
        // Deterministic starts: the projected body centre, then random
        // points of H within the scale box.
        let mut rng = ChaCha8Rng::seed_from_u64(0x6d48);
        let mut starts = vec![to_z(&self.center.axpy(-u.dot(&self.center), u.vector()))];
        while starts.len() < MULTISTART {
            starts.push((0..m).map(|_| rng.random_range(-scale..scale)).collect());
        }
        let f = |z: &[f64]| self.gain(&point(z));
        let mut best = (f64::INFINITY, starts[0].clone());
        for start in starts {
            let mut z = start;
            let mut local = (f(&z), z.clone());
            for k in 0..400 {
                let g = self.subgradient(&point(&z));
                let gz: Vec<f64> = basis.iter().map(|b| b.dot(&g)).collect();
                let norm = gz.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm < 1e-15 {
                    break;
                }
                let step = 0.5 * scale / ((k + 1) as f64).sqrt();
                for (zi, gi) in z.iter_mut().zip(&gz) {
                    *zi -= step * gi / norm;
                }
                let v = f(&z);
                if v < local.0 {
                    local = (v, z.clone());
                }
            }
            // Coordinate polish with shrinking brackets.
            let mut z = local.1.clone();
            let mut width = scale / 8.0;
            for _ in 0..30 {
                for c in 0..m {
                    let z0 = z[c];
                    let (zc, _) = golden_section(
                        |s| {
                            let mut zz = z.clone();
                            zz[c] = s;
                            f(&zz)
                        },
                        z0 - width,
                        z0 + width,
                        1e-12,
                    );
                    z[c] = zc;
                }
                width *= 0.5;
            }
            let v = f(&z);
            if v < local.0 {
                local = (v, z);
            }
            if local.0 < best.0 {
                best = local;
            }
        }
        best.1
    }

    /// Support of `K[t]` in direction u through the hyperplane picture:
    /// `h(K[t],u) = sup{s : m(H(u,s)) <= t}`, found by bisection on s.
    pub fn kt_support(&self, u: &Direction, t: f64) -> Result<f64> {
        let hk = self.body.support(u)?;
        let m_at = |s: f64| -> Result<f64> {
            Ok(self.min_on_hyperplane(&Hyperplane::new(*u, s))?.0)
        };
        let mut lo = hk + 2.0 * GEOM_TOL;
        if m_at(lo)? > t {
            return Ok(hk);
        }
        let mut hi = hk + 1.0;
        while m_at(hi)? <= t {
            lo = hi;
            hi = hk + 2.0 * (hi - hk);
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if m_at(mid)? <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Distance from the centre along `v` to the level set `gain = t`.
    fn radial_extent(&self, v: &Vector, t: f64) -> f64 {
        let g = |s: f64| self.gain(&self.center.axpy(s, v));
        let (mut lo, mut hi) = (0.0, 1.0);
        while g(hi) <= t {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if g(mid) <= t {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 {
                break;
            }
        }
        lo
    }

    /// `W(K[t]) - W(K)`. The boundary of the convex sublevel set is traced by
    /// bisection along rays from the body's reference point; in the plane
    /// the traced points are hulled and measured exactly, otherwise their
    /// support function is integrated over the quadrature nodes.
    pub fn kt_width_gain(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("level t must be positive, got {t}")));
        }
        let wk = mean_width(self.body, self.quad)?;
        let wkt = if self.dim == 2 {
            let pts: Vec<Vector> = (0..PLANAR_RAYS)
                .map(|k| {
                    let v = *Direction::from_angle(std::f64::consts::TAU * k as f64 / PLANAR_RAYS as f64).vector();
                    self.center.axpy(self.radial_extent(&v, t), &v)
                })
                .collect();
            perimeter(&convex_hull_2d(&pts)) / std::f64::consts::PI
        } else {
            let pts: Vec<Vector> = self
                .quad
                .nodes()
                .iter()
                .map(|u| self.center.axpy(self.radial_extent(u.vector(), t), u.vector()))
                .collect();
            let h: Vec<f64> = self
                .quad
                .nodes()
                .iter()
                .zip(&self.h)
                .map(|(u, hk)| pts.iter().map(|p| u.dot(p)).fold(*hk, f64::max))
                .collect();
            2.0 * h.iter().zip(self.quad.weights()).map(|(h, w)| h * w).sum::<f64>()
        };
        Ok((wkt - wk).max(0.0))
    }
}

/// Golden-section search for the minimum of a unimodal function on `[a,b]`.
pub(crate) fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Orthonormal basis of the complement of u by Gram–Schmidt on the axes.
pub(crate) fn orthonormal_complement(u: &Direction) -> Vec<Vector> {
    let d = u.dim();
    let mut basis: Vec<Vector> = Vec::with_capacity(d - 1);
    let mut axes: Vec<usize> = (0..d).collect();
    // Start from the axes least aligned with u.
    axes.sort_by(|&a, &b| u.vector()[a].abs().total_cmp(&u.vector()[b].abs()));
    for i in axes {
        let mut v = Vector::basis(d, i);
        v = v.axpy(-u.dot(&v), u.vector());
        for b in &basis {
            v = v.axpy(-b.dot(&v), b);
        }
        let n = v.norm();
        if n > 1e-8 {
            basis.push(v.scale(1.0 / n));
        }
        if basis.len() == d - 1 {
            break;
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn planar_ball_gain(rho: f64) -> f64 {
        if rho <= 1.0 {
            0.0
        } else {
            2.0 / PI * ((rho * rho - 1.0).sqrt() - (1.0 / rho).acos())
        }
    }

    #[test]
    fn gain_vanishes_inside_and_is_convex() {
        let q = SphericalQuadrature::default_for(2);
        let k = ConvexBody::cube(2, 0.5);
        let f = WidthGainField::new(&k, &q).unwrap();
        assert_eq!(f.gain(&Vector::new2(0.1, -0.4)), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let x = Vector::new2(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let y = Vector::new2(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let mid = (x + y).scale(0.5);
            assert!(f.gain(&mid) <= 0.5 * (f.gain(&x) + f.gain(&y)) + 1e-12);
        }
    }

    #[test]
    fn min_on_hyperplane_symmetric_case() {
        let q = SphericalQuadrature::default_for(2);
        let b = ConvexBody::unit_ball(2);
        let f = WidthGainField::new(&b, &q).unwrap();
        let h = Hyperplane::new(Direction::axis(2, 0), 2.0);
        let (m, x) = f.min_on_hyperplane(&h).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-9 && x[1].abs() < 1e-6, "{x:?}");
        assert!((m - f.gain(&Vector::new2(2.0, 0.0))).abs() < 1e-9);
        // Grid oracle over H.
        let grid = (-4000..=4000)
            .map(|k| f.gain(&Vector::new2(2.0, k as f64 * 1e-3)))
            .fold(f64::INFINITY, f64::min);
        assert!(m <= grid + 1e-12);
        assert!((m - planar_ball_gain(2.0)).abs() < 1e-6);
    }

    #[test]
    fn min_on_hyperplane_errors_and_limits() {
        let q = SphericalQuadrature::default_for(2);
        let b = ConvexBody::unit_ball(2);
        let f = WidthGainField::new(&b, &q).unwrap();
        assert_eq!(f.min_on_hyperplane(&Hyperplane::new(Direction::axis(2, 0), 0.5)), Err(Error::HitsBody));
        let (m_near, _) = f.min_on_hyperplane(&Hyperplane::new(Direction::axis(2, 1), 1.0001)).unwrap();
        let (m_far, _) = f.min_on_hyperplane(&Hyperplane::new(Direction::axis(2, 1), 1.1)).unwrap();
        assert!(m_near < 1e-5 && m_near < m_far);
    }

    #[test]
    fn min_on_hyperplane_translation_invariant() {
        let q = SphericalQuadrature::default_for(2);
        let k = ConvexBody::cube(2, 0.5);
        let v = Vector::new2(0.7, -0.3);
        let kt = k.translate(&v);
        let u = Direction::from_angle(0.4);
        let h = Hyperplane::new(u, 1.2);
        let ht = Hyperplane::new(u, 1.2 + u.dot(&v));
        let (a, _) = WidthGainField::new(&k, &q).unwrap().min_on_hyperplane(&h).unwrap();
        let (b, _) = WidthGainField::new(&kt, &q).unwrap().min_on_hyperplane(&ht).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} {b}");
    }

    #[test]
    fn min_on_hyperplane_3d_ball() {
        let q = SphericalQuadrature::default_for(3);
        let b = ConvexBody::unit_ball(3);
        let f = WidthGainField::new(&b, &q).unwrap();
        let u = Direction::new(Vector::new3(1.0, 2.0, -0.5)).unwrap();
        let (m, x) = f.min_on_hyperplane(&Hyperplane::new(u, 1.5)).unwrap();
        // The node set is only approximately rotation invariant, so the
        // minimizer sits near, not at, the foot of the perpendicular.
        let foot = u.vector().scale(1.5);
        let at_foot = f.gain(&foot);
        assert!(m <= at_foot + 1e-12);
        assert!(at_foot - m < 1e-3 * at_foot, "{m} vs {at_foot}");
        assert!(x.distance(&foot) < 0.05, "{x:?}");
    }

    #[test]
    fn kt_routes_agree_for_square() {
        let q = SphericalQuadrature::default_for(2);
        let k = ConvexBody::cube(2, 0.5);
        let f = WidthGainField::new(&k, &q).unwrap();
        let t = 0.05;
        // Radial trace vs hyperplane route at a few directions.
        for theta in [0.0, 0.3, PI / 4.0, 1.2] {
            let u = Direction::from_angle(theta);
            let via_planes = f.kt_support(&u, t).unwrap();
            let v = *u.vector();
            // Coarse scan over ray angles, then golden section around the best.
            let reach = |phi: f64| {
                let w = Direction::from_angle(phi);
                v.dot(&f.center.axpy(f.radial_extent(w.vector(), t), w.vector()))
            };
            let best = (0..720).map(|k| k as f64 * PI / 360.0).max_by(|a, b| reach(*a).total_cmp(&reach(*b))).unwrap();
            let (_, neg) = golden_section(|phi| -reach(phi), best - PI / 360.0, best + PI / 360.0, 1e-12);
            let radial = -neg;
            assert!((via_planes - radial).abs() < 1e-6, "{theta}: {via_planes} {radial}");
        }
    }

    #[test]
    fn kt_width_gain_ball_closed_form() {
        let q = SphericalQuadrature::default_for(2);
        let b = ConvexBody::unit_ball(2);
        let f = WidthGainField::new(&b, &q).unwrap();
        for t in [0.01, 0.1, 0.5] {
            let (rho, _) = golden_section(|r| (planar_ball_gain(r) - t).abs(), 1.0, 5.0, 1e-14);
            let expect = 2.0 * (rho - 1.0);
            let got = f.kt_width_gain(t).unwrap();
            assert!((got - expect).abs() < 1e-4 * expect.max(1e-3), "t={t}: {got} vs {expect}");
        }
        assert!(f.kt_width_gain(1e-9).unwrap() < 1e-4);
        let a = f.kt_width_gain(0.05).unwrap();
        let c = f.kt_width_gain(0.1).unwrap();
        assert!(a <= c);
    }

    #[test]
    fn complement_is_orthonormal() {
        let u = Direction::new(Vector::new3(0.2, -0.9, 0.3)).unwrap();
        let b = orthonormal_complement(&u);
        assert_eq!(b.len(), 2);
        for v in &b {
            assert!(v.dot(u.vector()).abs() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        assert!(b[0].dot(&b[1]).abs() < 1e-12);
    }
}
