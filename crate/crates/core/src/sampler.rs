//! Reproducible samplers: the restricted isotropic Poisson hyperplane
//! process, the point process with intensity `n κ_0`, and the mark process
//! on `S^{d-1} × [0, ∞)`.
//!
//! Every draw comes from a [`RngStream`], a ChaCha8 generator keyed by
//! `(master_seed, stream_id)`. ChaCha is counter based, so streams are
//! independent by construction and a replication's output does not depend on
//! which thread runs it.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{mean_width, SphericalQuadrature};
use crate::geom::{ConvexBody, Direction, Halfspace, Hyperplane, Vector, Window, GEOM_TOL};

/// Words reserved per sub-stream inside one ChaCha stream.
const SUBSTREAM_WORDS: u128 = 1 << 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    /// Generator positioned at the start of the stream.
    pub fn rng(&self) -> ChaCha8Rng {
        self.substream(0)
    }

    /// Generator for the `k`-th disjoint block of this stream, for callers
    /// that need several independent draws per replication.
    pub fn substream(&self, k: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng.set_word_pos(k as u128 * SUBSTREAM_WORDS);
        rng
    }
}

/// Uniform direction on `S^{d-1}` by normalizing a standard Gaussian vector.
pub fn uniform_direction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Direction {
    loop {
        let mut v = Vector::zeros(dim);
        for k in 0..dim {
            v[k] = StandardNormal.sample(rng);
        }
        if let Ok(u) = Direction::new(v) {
            return u;
        }
    }
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as usize
}

/// Finite marks `(u, t)` with `0 <= t <= t_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkSet {
    pub marks: Vec<(Direction, f64)>,
    pub t_max: f64,
}

/// Hyperplanes of the process that meet the window and miss K, stored as
/// the halfspaces bounded by them that contain K.
///
/// Each hyperplane also carries a uniform label in `[0,1)`; keeping those
/// with label below `m/n` is an exact Poisson thinning to intensity m, so one
/// sample serves a whole intensity grid.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperplaneSample {
    pub halfspaces: Vec<Halfspace>,
    pub labels: Vec<f64>,
    pub intensity: f64,
    pub window: Window,
    pub body_ref: ConvexBody,
}

impl HyperplaneSample {
    pub fn hyperplanes(&self) -> Vec<Hyperplane> {
        self.halfspaces.iter().map(Halfspace::boundary).collect()
    }

    pub fn len(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.halfspaces.is_empty()
    }

    /// The sub-sample at intensity `n <= self.intensity`.
    pub fn thinned(&self, n: f64) -> Result<HyperplaneSample> {
        if !(n > 0.0) || n > self.intensity * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "thinning intensity {n} outside (0, {}]",
                self.intensity
            )));
        }
        let keep = n / self.intensity;
        let (halfspaces, labels) = self
            .halfspaces
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| **l < keep)
            .map(|(h, l)| (*h, *l / keep))
            .unzip();
        Ok(HyperplaneSample {
            halfspaces,
            labels,
            intensity: n,
            window: self.window,
            body_ref: self.body_ref.clone(),
        })
    }
}

/// Hyperplane sampler for a fixed `(K, window)` pair, with the containment
/// check and `W(K)` computed once.
#[derive(Clone, Debug)]
pub struct HyperplaneSampler {
    body: ConvexBody,
    window: Window,
    /// `W(window) - W(K)`.
    measure: f64,
    /// Range of offsets covering every `[h(K,u), h(window,u)]`.
    tau_lo: f64,
    tau_hi: f64,
}

impl HyperplaneSampler {
    pub fn new(body: &ConvexBody, window: Window) -> Result<Self> {
        let d = body.dim();
        let quad = SphericalQuadrature::default_for(d);
        window.check_contains(body, quad.nodes())?;
        let measure = window.mean_width(d) - mean_width(body, &quad)?;
        let h_min = min_support(body, quad.nodes())?;
        let tau_hi = match window {
            Window::Ball { radius } => radius,
            Window::Box { half_side } => half_side * (d as f64).sqrt(),
        };
        // Quadrature only brackets the minimum support; pad it.
        let tau_lo = h_min - 0.05 * (tau_hi - h_min) - GEOM_TOL;
        Ok(Self { body: body.clone(), window, measure: measure.max(0.0), tau_lo, tau_hi })
    }

    /// `W(window) - W(K)`, the expected count per unit intensity.
    pub fn measure(&self) -> f64 {
        self.measure
    }

    /// Draws the hyperplanes at intensity n. Candidates `(u, τ)` are Poisson
    /// on `S^{d-1} × [τ_lo, τ_hi]` with intensity `2n σ ⊗ λ` and are kept iff
    /// `h(K,u) < τ <= h(window,u)`; the survivors are Poisson with mean
    /// `n (W(window) - W(K))` and directions weighted by the gap
    /// `h(window,u) - h(K,u)`.
    pub fn sample(&self, n: f64, stream: &RngStream) -> Result<HyperplaneSample> {
        if !(n > 0.0) {
            return Err(Error::InvalidParameter(format!("intensity must be positive, got {n}")));
        }
        let d = self.body.dim();
        let mut rng = stream.rng();
        let candidates = poisson(&mut rng, 2.0 * n * (self.tau_hi - self.tau_lo));
        let mut halfspaces = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..candidates {
            let u = uniform_direction(&mut rng, d);
            let tau = rng.random_range(self.tau_lo..self.tau_hi);
            let label: f64 = rng.random();
            let hk = self.body.support(&u)?;
            let hw = self.window.support(&u);
            if hw < hk - GEOM_TOL {
                return Err(Error::WindowTooSmall { window: hw, body: hk });
            }
            if hk < self.tau_lo {
                return Err(Error::InvalidParameter("offset range does not cover the body".into()));
            }
            if tau > hk && tau <= hw {
                halfspaces.push(Halfspace::new(u, tau));
                labels.push(label);
            }
        }
        Ok(HyperplaneSample { halfspaces, labels, intensity: n, window: self.window, body_ref: self.body.clone() })
    }
}

fn min_support(body: &ConvexBody, dirs: &[Direction]) -> Result<f64> {
    let mut m = f64::INFINITY;
    for u in dirs {
        m = m.min(body.support(u)?);
    }
    Ok(m)
}

/// Hyperplanes meeting `window` and missing K at intensity n.
pub fn sample_hyperplanes(k: &ConvexBody, window: Window, n: f64, stream: &RngStream) -> Result<HyperplaneSample> {
    HyperplaneSampler::new(k, window)?.sample(n, stream)
}

/// Points of the Poisson process with intensity `n κ_0` in `B^d \ B_r`.
/// `κ_0` has density `(2/ω_d) |x|^{-(d+1)}`, so the count has mean
/// `2n(1/r - 1)` in every dimension.
pub fn sample_kappa0_points(dim: usize, n: f64, r: f64, stream: &RngStream) -> Result<Vec<Vector>> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!("inner radius must lie in (0,1), got {r}")));
    }
    if !(n > 0.0) {
        return Err(Error::InvalidParameter(format!("intensity must be positive, got {n}")));
    }
    let mut rng = stream.rng();
    let count = poisson(&mut rng, 2.0 * n * (1.0 / r - 1.0));
    Ok((0..count)
        .map(|_| {
            let u = uniform_direction(&mut rng, dim);
            let v: f64 = rng.random();
            let rho = 1.0 / (1.0 / r - v * (1.0 / r - 1.0));
            u.vector().scale(rho)
        })
        .collect())
}

/// Marks of the Poisson process on `S^{d-1} × [0, t_max]` with intensity
/// `2n σ ⊗ λ`.
pub fn sample_marks(dim: usize, n: f64, t_max: f64, stream: &RngStream) -> Result<MarkSet> {
    if !(t_max > 0.0) {
        return Err(Error::InvalidParameter(format!("t_max must be positive, got {t_max}")));
    }
    if !(n > 0.0) {
        return Err(Error::InvalidParameter(format!("intensity must be positive, got {n}")));
    }
    let mut rng = stream.rng();
    let count = poisson(&mut rng, 2.0 * n * t_max);
    let marks = (0..count)
        .map(|_| {
            let u = uniform_direction(&mut rng, dim);
            (u, rng.random_range(0.0..t_max))
        })
        .collect();
    Ok(MarkSet { marks, t_max })
}

/// `Δ(H(u,τ)) = u/τ` for a hyperplane missing the closed unit ball.
pub fn pushforward_delta(h: &Hyperplane) -> Result<Vector> {
    let (u, tau) = h.with_nonnegative_offset();
    if tau <= 1.0 {
        return Err(Error::HitsUnitBall(tau));
    }
    Ok(u.vector().scale(1.0 / tau))
}
