//! Dense-tableau simplex for `max <u,x>` subject to `<a_i,x> <= b_i`.
//!
//! The primal has d free variables and m constraints, with m up to a few
//! thousand and d <= 6. We solve the dual
//!
//! ```text
//! min  sum s_i lambda_i   s.t.  sum lambda_i a_i = u,  lambda >= 0,
//! ```
//!
//! with `s_i = b_i - <a_i, p>` for the known interior point p. The tableau is
//! d rows by m columns, so one pivot costs O(dm). Dual infeasibility after
//! phase 1 is exactly primal unboundedness in direction u. The entering
//! column is chosen by the most negative reduced cost; after a run of
//! degenerate pivots the solver switches to Bland's rule, which cannot cycle.

use crate::geom::{Direction, Vector};

const PIVOT_TOL: f64 = 1e-11;
const OPT_TOL: f64 = 1e-12;
const PHASE1_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 8;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { value: f64, point: Option<Vector>, basis: Vec<usize>, multipliers: Vec<f64> },
    Unbounded,
    Infeasible,
}

/// Constraint data in flat layout plus a reusable tableau.
#[derive(Debug, Clone)]
pub(crate) struct DualSimplex {
    dim: usize,
    normals: Vec<f64>,
    slacks: Vec<f64>,
    interior: Vector,
    dir: Vector,
    tab: Vec<f64>,
    rhs: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
    dead_rows: Vec<bool>,
}

impl DualSimplex {
    /// `constraints` yields `(a_i, b_i)`; every slack at `interior` must be
    /// positive.
    pub fn new<I>(dim: usize, constraints: I, interior: Vector) -> Self
    where
        I: IntoIterator<Item = (Vector, f64)>,
    {
        let mut normals = Vec::new();
        let mut slacks = Vec::new();
        for (a, b) in constraints {
            normals.extend_from_slice(a.as_slice());
            slacks.push(b - a.dot(&interior));
        }
        Self {
            dim,
            normals,
            slacks,
            interior,
            dir: Vector::zeros(dim),
            tab: Vec::new(),
            rhs: Vec::new(),
            obj: Vec::new(),
            basis: Vec::new(),
            ncols: 0,
            dead_rows: Vec::new(),
        }
    }

    pub fn num_constraints(&self) -> usize {
        self.slacks.len()
    }

    #[inline]
    fn normal(&self, i: usize) -> &[f64] {
        &self.normals[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.tab[r * self.ncols + c]
    }

    /// Solves in direction `u`, first trying `warm` as a starting basis.
    pub fn solve(&mut self, u: &Direction, warm: Option<&[usize]>) -> LpOutcome {
        let m = self.num_constraints();
        if m == 0 {
            return LpOutcome::Unbounded;
        }
        self.dir = *u.vector();
        if let Some(b) = warm {
            if self.try_warm_start(u, b) {
                return self.phase2();
            }
        }
        self.cold_start(u);
        if !self.run(true) {
            // Phase 1 cannot be unbounded (objective bounded below by 0).
            return LpOutcome::Infeasible;
        }
        let infeas: f64 = (0..self.dim).filter(|&r| self.basis[r] >= m).map(|r| self.rhs[r]).sum();
        if infeas > PHASE1_TOL {
            return LpOutcome::Unbounded;
        }
        self.drive_out_artificials();
        self.phase2()
    }

    fn phase2(&mut self) -> LpOutcome {
        self.set_phase2_objective();
        if !self.run(false) {
            return LpOutcome::Infeasible;
        }
        self.extract()
    }

    fn cold_start(&mut self, u: &Direction) {
        let (d, m) = (self.dim, self.num_constraints());
        self.ncols = m + d;
        self.tab.clear();
        self.tab.resize(d * self.ncols, 0.0);
        self.rhs.clear();
        self.dead_rows.clear();
        self.dead_rows.resize(d, false);
        for r in 0..d {
            let sign = if u.vector()[r] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..m {
                self.tab[r * self.ncols + j] = sign * self.normals[j * d + r];
            }
            self.tab[r * self.ncols + m + r] = 1.0;
            self.rhs.push(sign * u.vector()[r]);
        }
        self.basis = (m..m + d).collect();
        // Phase-1 reduced costs: c_j - sum_r T[r][j] with c = 1 on artificials.
        self.obj.clear();
        self.obj.resize(self.ncols, 0.0);
        for j in 0..m {
            self.obj[j] = -(0..d).map(|r| self.at(r, j)).sum::<f64>();
        }
    }

    fn try_warm_start(&mut self, u: &Direction, warm: &[usize]) -> bool {
        let (d, m) = (self.dim, self.num_constraints());
        if warm.len() != d || warm.iter().any(|&i| i >= m) {
            return false;
        }
        // Columns of B are a_{warm[r]}; factor B once.
        let mut bmat = vec![0.0; d * d];
        for (c, &i) in warm.iter().enumerate() {
            for r in 0..d {
                bmat[r * d + c] = self.normals[i * d + r];
            }
        }
        let Some(lu) = Lu::factor(bmat, d) else { return false };
        let lambda = lu.solve(u.vector().as_slice());
        if lambda.iter().any(|l| *l < -1e-12) {
            return false;
        }
        self.ncols = m;
        self.tab.clear();
        self.tab.resize(d * m, 0.0);
        let mut col = vec![0.0; d];
        for j in 0..m {
            col.copy_from_slice(self.normal(j));
            let x = lu.solve(&col);
            for r in 0..d {
                self.tab[r * m + j] = x[r];
            }
        }
        self.rhs = lambda.into_iter().map(|l| l.max(0.0)).collect();
        self.basis = warm.to_vec();
        self.dead_rows.clear();
        self.dead_rows.resize(d, false);
        true
    }

    fn set_phase2_objective(&mut self) {
        let (d, m) = (self.dim, self.num_constraints());
        self.obj.clear();
        self.obj.resize(self.ncols, 0.0);
        for j in 0..m {
            let mut z = 0.0;
            for r in 0..d {
                let bi = self.basis[r];
                if bi < m {
                    z += self.slacks[bi] * self.at(r, j);
                }
            }
            self.obj[j] = self.slacks[j] - z;
        }
        // Artificial columns never re-enter.
        for j in m..self.ncols {
            self.obj[j] = f64::INFINITY;
        }
    }

    fn drive_out_artificials(&mut self) {
        let (d, m) = (self.dim, self.num_constraints());
        for r in 0..d {
            if self.basis[r] < m {
                continue;
            }
            let best = (0..m)
                .filter(|&j| !self.basis.contains(&j))
                .max_by(|&a, &b| self.at(r, a).abs().total_cmp(&self.at(r, b).abs()));
            match best {
                Some(j) if self.at(r, j).abs() > 1e-9 => self.pivot(r, j),
                _ => self.dead_rows[r] = true,
            }
        }
    }

    /// Returns false if the objective is unbounded below (no ratio-test row).
    fn run(&mut self, phase1: bool) -> bool {
        let d = self.dim;
        let limit = if phase1 { self.ncols } else { self.num_constraints() };
        let mut degenerate = 0usize;
        for _ in 0..MAX_PIVOTS {
            let bland = degenerate >= DEGENERATE_RUN;
            let mut enter = None;
            let mut most = -OPT_TOL;
            for j in 0..limit {
                let c = self.obj[j];
                if c < most {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    most = c;
                }
            }
            let Some(j) = enter else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..d {
                if self.dead_rows[r] {
                    continue;
                }
                let a = self.at(r, j);
                if a > PIVOT_TOL {
                    let ratio = self.rhs[r] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-15
                                || (ratio <= lratio + 1e-15 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else { return false };
            if ratio <= 1e-14 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, j);
        }
        true
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let (d, nc) = (self.dim, self.ncols);
        let p = self.at(r, j);
        for c in 0..nc {
            self.tab[r * nc + c] /= p;
        }
        self.rhs[r] /= p;
        let prow_start = r * nc;
        for rr in 0..d {
            if rr == r {
                continue;
            }
            let f = self.at(rr, j);
            if f != 0.0 {
                for c in 0..nc {
                    let v = self.tab[prow_start + c];
                    self.tab[rr * nc + c] -= f * v;
                }
                self.rhs[rr] -= f * self.rhs[r];
                self.tab[rr * nc + j] = 0.0;
            }
        }
        let f = self.obj[j];
        if f != 0.0 && f.is_finite() {
            for c in 0..nc {
                let v = self.tab[prow_start + c];
                if self.obj[c].is_finite() {
                    self.obj[c] -= f * v;
                }
            }
            self.obj[j] = 0.0;
        }
        self.basis[r] = j;
    }

    /// Recovers the primal optimum from the basic constraints `A_B y = s_B`.
    fn extract(&self) -> LpOutcome {
        let (d, m) = (self.dim, self.num_constraints());
        let dual_value: f64 = (0..d)
            .filter(|&r| self.basis[r] < m)
            .map(|r| self.slacks[self.basis[r]] * self.rhs[r])
            .sum();
        if self.basis.iter().all(|&b| b < m) {
            let mut amat = vec![0.0; d * d];
            for (r, &i) in self.basis.iter().enumerate() {
                amat[r * d..(r + 1) * d].copy_from_slice(self.normal(i));
            }
            if let Some(lu) = Lu::factor(amat, d) {
                let rhs: Vec<f64> = self.basis.iter().map(|&i| self.slacks[i]).collect();
                let y = lu.solve(&rhs);
                let mut x = self.interior;
                for k in 0..d {
                    x[k] += y[k];
                }
                let value = self.dir_dot(&x);
                return LpOutcome::Optimal {
                    value,
                    point: Some(x),
                    basis: self.basis.clone(),
                    multipliers: self.rhs.clone(),
                };
            }
        }
        let value = dual_value + self.dir_dot(&self.interior);
        LpOutcome::Optimal { value, point: None, basis: self.basis.clone(), multipliers: self.rhs.clone() }
    }

    fn dir_dot(&self, x: &Vector) -> f64 {
        self.dir.dot(x)
    }
}

/// Small dense LU with partial pivoting.
struct Lu {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Vec<f64>, n: usize) -> Option<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| a[x * n + k].abs().total_cmp(&a[y * n + k].abs()))?;
            if a[p * n + k].abs() < 1e-12 * scale {
                return None;
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            for r in k + 1..n {
                let f = a[r * n + k] / a[k * n + k];
                a[r * n + k] = f;
                for c in k + 1..n {
                    a[r * n + c] -= f * a[k * n + c];
                }
            }
        }
        Some(Self { n, a, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            for c in 0..r {
                x[r] -= self.a[r * n + c] * x[c];
            }
        }
        for r in (0..n).rev() {
            for c in r + 1..n {
                x[r] -= self.a[r * n + c] * x[c];
            }
            x[r] /= self.a[r * n + r];
        }
        x
    }
}
