//! Eigenvalues below a threshold for symmetric tridiagonal operators.
//!
//! Counting uses the Sturm pivot recurrence, eigenvalues are isolated by
//! bisection on the count, and eigenvectors come from inverse iteration with
//! a partially pivoted tridiagonal LU factorization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{GridFunction, TridiagOperator};
use crate::par::{self, Exec};

/// Pivots smaller than this are replaced by `-PIVMIN` in the Sturm recurrence.
const PIVMIN: f64 = 1e-300;
const SEED: u64 = 0x5eed_1d5c_0ffe_e000;
const MAX_INVERSE_ITERATIONS: usize = 50;
const RESTARTS: u64 = 3;
/// Residual and cluster thresholds, relative to `‖T‖`.
pub const RESIDUAL_REL: f64 = 1e-8;
pub const CLUSTER_REL: f64 = 1e-8;

/// Sorted eigenvalues below `threshold` and their grid-normalized eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSet {
    pub threshold: f64,
    pub values: Vec<f64>,
    pub vectors: Vec<GridFunction>,
    /// Eigenvalues within the bisection tolerance of the threshold, on either side.
    pub near_threshold: usize,
}

impl EigenSet {
    pub fn empty(threshold: f64) -> Self {
        EigenSet {
            threshold,
            values: Vec::new(),
            vectors: Vec::new(),
            near_threshold: 0,
        }
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest `‖T u - λ u‖₂` over the pairs, with `u` scaled to unit Euclidean norm.
    pub fn max_residual(&self, t: &TridiagOperator) -> f64 {
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(&lam, v)| {
                let s = v.dx().sqrt();
                let u: Vec<f64> = v.values().iter().map(|x| x * s).collect();
                residual(t, lam, &u)
            })
            .fold(0.0, f64::max)
    }
}

/// Number of eigenvalues of `t` strictly below `eps`.
pub fn sturm_count(t: &TridiagOperator, eps: f64) -> usize {
    let diag = t.diag();
    let off_sq = t.off_sq();
    let mut count = 0;
    let mut q = diag[0] - eps;
    if q.abs() < PIVMIN {
        q = -PIVMIN;
    }
    if q < 0.0 {
        count += 1;
    }
    for k in 1..diag.len() {
        q = diag[k] - eps - off_sq[k - 1] / q;
        if q.abs() < PIVMIN {
            q = -PIVMIN;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Every eigenvalue below `eps`, ascending, each bisected to a bracket of
/// width at most `tol (1 + |eps|)` (or to floating-point resolution).
pub fn eigenvalues_below(t: &TridiagOperator, eps: f64, tol: f64) -> Vec<f64> {
    eigenvalues_below_with(t, eps, tol, Exec::default())
}

pub fn eigenvalues_below_with(t: &TridiagOperator, eps: f64, tol: f64, exec: Exec) -> Vec<f64> {
    let m = sturm_count(t, eps);
    if m == 0 {
        return Vec::new();
    }
    let gl = t.gershgorin_lower();
    let lower = gl - 4.0 * f64::EPSILON * t.norm_bound().max(1.0) - PIVMIN;
    let width = tol * (1.0 + eps.abs());
    par::map_indexed(exec, m, |k| bisect_index(t, k, lower, eps, width))
}

fn bisect_index(t: &TridiagOperator, k: usize, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    // invariant: count(lo) <= k < count(hi)
    loop {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= width || mid <= lo || mid >= hi {
            return mid;
        }
        if sturm_count(t, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Partially pivoted LU of `T - λI`.
struct ShiftedLu {
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    dl: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn new(t: &TridiagOperator, lambda: f64) -> Self {
        let n = t.n();
        let tiny = f64::EPSILON * t.norm_bound().max(f64::MIN_POSITIVE);
        let mut d: Vec<f64> = t.diag().iter().map(|a| a - lambda).collect();
        let mut du = t.off().to_vec();
        let mut dl = t.off().to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        ShiftedLu {
            d,
            du,
            du2,
            dl,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn euclid_norm(x: &[f64]) -> f64 {
    // scaled to survive the large growth of a near-singular solve
    let big = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if big == 0.0 || !big.is_finite() {
        return big;
    }
    big * x.iter().map(|v| (v / big) * (v / big)).sum::<f64>().sqrt()
}

fn residual(t: &TridiagOperator, lambda: f64, u: &[f64]) -> f64 {
    let tu = t.apply(u);
    euclid_norm(
        &tu.iter()
            .zip(u)
            .map(|(a, b)| a - lambda * b)
            .collect::<Vec<_>>(),
    )
}

/// Removes the components along `basis` (unit Euclidean vectors).
fn project_out(x: &mut [f64], basis: &[Vec<f64>]) {
    for q in basis {
        let c: f64 = x.iter().zip(q).map(|(a, b)| a * b).sum();
        for (xi, qi) in x.iter_mut().zip(q) {
            *xi -= c * qi;
        }
    }
}

fn normalize(x: &mut [f64]) -> bool {
    let nrm = euclid_norm(x);
    if !(nrm > 0.0 && nrm.is_finite()) {
        return false;
    }
    for v in x.iter_mut() {
        *v /= nrm;
    }
    true
}

/// Sign convention: the entry of largest magnitude is positive.
fn fix_sign(x: &mut [f64]) {
    let mut best = 0usize;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    if x[best] < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
}

/// Eigenvector for the eigenvalue approximation `lambda`, normalized so that
/// `Δx Σ Ψ_j² = 1` and orthogonal to every function in `orthogonal_to`.
pub fn eigenvector(
    t: &TridiagOperator,
    lambda: f64,
    orthogonal_to: &[GridFunction],
) -> Result<GridFunction> {
    let n = t.n();
    let norm = t.norm_bound().max(f64::MIN_POSITIVE);
    let lu = ShiftedLu::new(t, lambda);
    let basis: Vec<Vec<f64>> = orthogonal_to
        .iter()
        .map(|g| {
            let mut q = g.values().to_vec();
            normalize(&mut q);
            q
        })
        .collect();

    let mut last_residual = f64::INFINITY;
    for attempt in 0..=RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED.wrapping_add(attempt));
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        project_out(&mut x, &basis);
        if !normalize(&mut x) {
            continue;
        }
        let mut converged = false;
        for _ in 0..MAX_INVERSE_ITERATIONS {
            lu.solve(&mut x);
            if x.iter().any(|v| !v.is_finite()) {
                break;
            }
            project_out(&mut x, &basis);
            if !normalize(&mut x) {
                break;
            }
            let r = residual(t, lambda, &x);
            last_residual = r;
            if converged {
                // one refinement step past the residual test
                fix_sign(&mut x);
                let s = 1.0 / t.dx().sqrt();
                let values = x.iter().map(|v| v * s).collect();
                return Ok(GridFunction::from_raw(values, t.dx(), t.length()));
            }
            if r <= RESIDUAL_REL * norm {
                converged = true;
            }
        }
    }
    Err(Error::NoConvergence {
        what: "inverse iteration",
        iterations: MAX_INVERSE_ITERATIONS,
        residual: last_residual,
    })
}

/// All eigenpairs below `eps`. Eigenvalues closer than `1e-8 ‖T‖` are treated
/// as a cluster and their vectors explicitly orthogonalized.
pub fn spectrum_below(t: &TridiagOperator, eps: f64, tol: f64) -> Result<EigenSet> {
    spectrum_below_with(t, eps, tol, Exec::default())
}

pub fn spectrum_below_with(
    t: &TridiagOperator,
    eps: f64,
    tol: f64,
    exec: Exec,
) -> Result<EigenSet> {
    if eps <= t.gershgorin_lower() {
        return Ok(EigenSet::empty(eps));
    }
    let values = eigenvalues_below_with(t, eps, tol, exec);
    let cluster = CLUSTER_REL * t.norm_bound();
    let mut vectors: Vec<GridFunction> = Vec::with_capacity(values.len());
    for (k, &lam) in values.iter().enumerate() {
        let neighbours: Vec<GridFunction> = (0..k)
            .filter(|&j| (values[j] - lam).abs() < cluster)
            .map(|j| vectors[j].clone())
            .collect();
        vectors.push(eigenvector(t, lam, &neighbours)?);
    }
    let w = tol * (1.0 + eps.abs());
    let near_threshold = sturm_count(t, eps + w) - sturm_count(t, eps - w);
    Ok(EigenSet {
        threshold: eps,
        values,
        vectors,
        near_threshold,
    })
}
