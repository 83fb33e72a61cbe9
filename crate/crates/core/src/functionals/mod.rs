//! Mean width and the width-gain functionals built on it.
//!
//! Convention: `W(K) = 2 ∫ h(K,u) σ(du)` with σ the normalized spherical
//! measure, so `W(B^d) = 2` and, in the plane, `W(P) = perimeter(P)/π`. Under
//! this normalization the hyperplanes meeting L but missing K ⊆ L have motion-
//! invariant measure `W(L) - W(K)`.

mod certify;
mod gain;
mod quadrature;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::{ConvexBody, Direction, Vector, Window, GEOM_TOL};
use crate::sampler::{uniform_direction, RngStream};
use crate::support;

pub use certify::{kt_width_gain_by_rejection, planar_width_gain_exact};
pub use gain::WidthGainField;
pub use quadrature::{QuadratureScheme, SphericalQuadrature, EXACT2D_FALLBACK_NODES};

/// Anything with a support function that mean width can be taken of.
pub trait SupportOracle {
    fn dim(&self) -> usize;

    /// Counterclockwise vertex cycle when the object is a planar polygon.
    fn vertex_cycle_2d(&self) -> Result<Option<Vec<Vector>>>;

    fn supports(&self, dirs: &[Direction]) -> Result<Vec<f64>>;

    fn closed_form_mean_width(&self) -> Option<f64> {
        None
    }

    /// Support values at the nodes of `quad`, when already known.
    fn cached_supports(&self, _quad: &SphericalQuadrature) -> Option<Vec<f64>> {
        None
    }
}

impl SupportOracle for ConvexBody {
    fn dim(&self) -> usize {
        ConvexBody::dim(self)
    }

    fn vertex_cycle_2d(&self) -> Result<Option<Vec<Vector>>> {
        ConvexBody::vertex_cycle_2d(self)
    }

    fn supports(&self, dirs: &[Direction]) -> Result<Vec<f64>> {
        match self {
            ConvexBody::HPolytope { halfspaces, interior } => {
                let mut solver = support::SupportSolver::new(&support::HRep::new(halfspaces.clone(), *interior));
                dirs.iter().map(|u| Ok(solver.support(u)?.bounded()?.value)).collect()
            }
            _ => dirs.iter().map(|u| self.support(u)).collect(),
        }
    }

    fn closed_form_mean_width(&self) -> Option<f64> {
        match self {
            ConvexBody::Ball { radius, .. } => Some(2.0 * radius),
            _ => None,
        }
    }
}

/// `W = 2 Σ w_i h(u_i)`, or perimeter/π for planar polygons under the
/// `Exact2D` scheme.
pub fn mean_width<B: SupportOracle + ?Sized>(body: &B, quad: &SphericalQuadrature) -> Result<f64> {
    if body.dim() != quad.dim() {
        return Err(Error::Dimension { expected: quad.dim(), found: body.dim() });
    }
    if let Some(w) = body.closed_form_mean_width() {
        return Ok(w);
    }
    if quad.scheme() == QuadratureScheme::Exact2D {
        if let Some(cycle) = body.vertex_cycle_2d()? {
            return Ok(support::perimeter(&cycle) / std::f64::consts::PI);
        }
    }
    let h = match body.cached_supports(quad) {
        Some(h) => h,
        None => body.supports(quad.nodes())?,
    };
    Ok(2.0 * h.iter().zip(quad.weights()).map(|(h, w)| h * w).sum::<f64>())
}

/// `μ{H : H ∩ L ≠ ∅, H ∩ K = ∅} = W(L) - W(K)` for `K ⊆ L`.
pub fn separating_measure(k: &ConvexBody, l: &ConvexBody, quad: &SphericalQuadrature) -> Result<f64> {
    let hk = k.supports(quad.nodes())?;
    let hl = l.supports(quad.nodes())?;
    let worst = hk.iter().zip(&hl).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
    if worst > GEOM_TOL {
        return Err(Error::NotNested(worst));
    }
    Ok(mean_width(l, quad)? - mean_width(k, quad)?)
}

/// Monte Carlo estimate of the separating measure with its standard error:
/// draw hyperplanes from μ restricted to those meeting the window and
/// rescale the separating fraction by `W(window)`.
pub fn separating_measure_mc(
    k: &ConvexBody,
    l: &ConvexBody,
    window: &Window,
    samples: usize,
    rng: &RngStream,
) -> Result<(f64, f64)> {
    let d = k.dim();
    let mut g = rng.rng();
    let w_window = window.mean_width(d);
    // Accept u with probability (h(W,u) + h(W,-u)) / max, a constant for balls.
    let h_max = window.size() * (d as f64).sqrt();
    let mut hits = 0usize;
    let mut drawn = 0usize;
    while drawn < samples {
        let u = uniform_direction(&mut g, d);
        let span = 2.0 * window.support(&u);
        if g.random::<f64>() * 2.0 * h_max > span {
            continue;
        }
        let tau = g.random_range(-window.support(&u.negate())..window.support(&u));
        drawn += 1;
        let hit_l = tau <= l.support(&u)? && tau >= -l.support(&u.negate())?;
        let hit_k = tau <= k.support(&u)? && tau >= -k.support(&u.negate())?;
        if hit_l && !hit_k {
            hits += 1;
        }
    }
    let f = hits as f64 / samples as f64;
    Ok((f * w_window, w_window * (f * (1.0 - f) / samples as f64).sqrt()))
}

/// `W(K^x) - W(K)` with `K^x = conv(K ∪ {x})`.
pub fn width_gain(k: &ConvexBody, x: &Vector, quad: &SphericalQuadrature) -> Result<f64> {
    Ok(WidthGainField::new(k, quad)?.gain(x))
}

/// `m(H) = min over x ∈ H of W(K^x) - W(K)`, with a minimizer.
pub fn min_gain_on_hyperplane(
    k: &ConvexBody,
    h: &crate::geom::Hyperplane,
    quad: &SphericalQuadrature,
) -> Result<(f64, Vector)> {
    WidthGainField::new(k, quad)?.min_on_hyperplane(h)
}

/// `W(K[t]) - W(K)` where `K[t] = {x : W(K^x) - W(K) <= t}`.
pub fn kt_width_gain(k: &ConvexBody, t: f64, quad: &SphericalQuadrature) -> Result<f64> {
    WidthGainField::new(k, quad)?.kt_width_gain(t)
}

/// `e^{-1} [W(K[1/n]) - W(K)]`, a lower bound for `E W(Z_K) - W(K)` at
/// intensity n.
pub fn lower_bound_estimate(k: &ConvexBody, n: f64, quad: &SphericalQuadrature) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::InvalidParameter(format!("intensity must be positive, got {n}")));
    }
    Ok((-1.0f64).exp() * kt_width_gain(k, 1.0 / n, quad)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square() -> ConvexBody {
        ConvexBody::cube(2, 0.5)
    }

    #[test]
    fn mean_width_examples() {
        let exact = SphericalQuadrature::default_for(2);
        assert_eq!(mean_width(&ConvexBody::unit_ball(2), &exact).unwrap(), 2.0);
        assert_eq!(mean_width(&ConvexBody::unit_ball(3), &SphericalQuadrature::default_for(3)).unwrap(), 2.0);
        assert!((mean_width(&square(), &exact).unwrap() - 4.0 / PI).abs() < 1e-12);
        // Oracle: 10^6-node angular rule.
        let dense = SphericalQuadrature::uniform_angles(1_000_000);
        assert!((mean_width(&square(), &dense).unwrap() - 4.0 / PI).abs() < 1e-9);
        // Degenerate segment of length 0.8: 2l/pi.
        let seg = ConvexBody::vpolytope(vec![Vector::new2(-0.4, 0.0), Vector::new2(0.4, 0.0)]).unwrap();
        assert!((mean_width(&seg, &dense).unwrap() - 1.6 / PI).abs() < 1e-9);
        assert!((mean_width(&seg, &exact).unwrap() - 1.6 / PI).abs() < 1e-12);
    }

    #[test]
    fn mean_width_cube_3d() {
        // Unit cube: W = 3/2 under the W(B)=2 normalization.
        let q = SphericalQuadrature::default_for(3);
        let w = mean_width(&ConvexBody::cube(3, 0.5), &q).unwrap();
        assert!((w - 1.5).abs() < 2e-3, "{w}");
    }

    #[test]
    fn quadrature_converges_on_polygons() {
        let exact = 4.0 / PI;
        let e1 = (mean_width(&square(), &SphericalQuadrature::uniform_angles(100)).unwrap() - exact).abs();
        let e2 = (mean_width(&square(), &SphericalQuadrature::uniform_angles(202)).unwrap() - exact).abs();
        assert!(e2 < e1 / 3.0, "{e1} {e2}");
        let fine = (mean_width(&square(), &SphericalQuadrature::uniform_angles(65_536 + 2)).unwrap() - exact).abs();
        assert!(fine < 1e-9, "{fine}");
    }

    #[test]
    fn separating_measure_examples() {
        let q = SphericalQuadrature::default_for(2);
        let b1 = ConvexBody::unit_ball(2);
        let b2 = ConvexBody::ball(Vector::zeros(2), 2.0).unwrap();
        assert_eq!(separating_measure(&b1, &b2, &q).unwrap(), 2.0);
        assert_eq!(separating_measure(&b1, &b1, &q).unwrap(), 0.0);
        assert!(matches!(separating_measure(&b2, &b1, &q), Err(Error::NotNested(_))));
        // K + B^2 via support combination.
        let sum = ConvexBody::support_combo(vec![(1.0, square()), (1.0, b1.clone())]).unwrap();
        let dense = SphericalQuadrature::uniform_angles(65_536);
        let v = separating_measure(&square(), &sum, &dense).unwrap();
        assert!((v - 2.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn width_gain_examples() {
        let q = SphericalQuadrature::default_for(2);
        let b = ConvexBody::unit_ball(2);
        assert_eq!(width_gain(&b, &Vector::new2(0.3, 0.2), &q).unwrap(), 0.0);
        // (2/pi)(2 sin(pi/3) - pi/3)
        let oracle = 2.0 / PI * (2.0 * (PI / 3.0).sin() - PI / 3.0);
        assert!((oracle - 0.43599).abs() < 1e-5);
        let g2 = width_gain(&b, &Vector::new2(2.0, 0.0), &q).unwrap();
        assert!((g2 - oracle).abs() < 1e-6, "{g2} vs {oracle}");
        let g3 = width_gain(&b, &Vector::new2(3.0, 0.0), &q).unwrap();
        assert!(g3 > g2);
    }

    #[test]
    fn lower_bound_monotone_in_n() {
        let q = SphericalQuadrature::default_for(2);
        let b = ConvexBody::unit_ball(2);
        let a = lower_bound_estimate(&b, 16.0, &q).unwrap();
        let c = lower_bound_estimate(&b, 64.0, &q).unwrap();
        assert!(a > c && c > 0.0);
        assert!(lower_bound_estimate(&b, 0.0, &q).is_err());
    }

    #[test]
    fn separating_mc_agrees() {
        let b1 = ConvexBody::unit_ball(2);
        let b2 = ConvexBody::ball(Vector::zeros(2), 2.0).unwrap();
        let (est, se) =
            separating_measure_mc(&b1, &b2, &Window::Ball { radius: 3.0 }, 20_000, &RngStream::new(5, 0)).unwrap();
        assert!((est - 2.0).abs() < 4.0 * se, "{est} ± {se}");
    }
}
