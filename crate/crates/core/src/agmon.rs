//! Agmon distance for `U^h - ε` and exponential-decay diagnostics for
//! computed eigenvectors.

use crate::error::{Error, Result};
use crate::model::{GridFunction, WellPotential};
use crate::params::SystemParams;
use crate::quad::adaptive_simpson;

const QUAD_TOL: f64 = 1e-13;
const MIN_WINDOW_POINTS: usize = 8;

fn integrand<'a>(well: &WellPotential, p: &'a SystemParams, eps: f64) -> impl Fn(f64) -> f64 + 'a {
    let well = *well;
    move |t| (well.rescaled(p, t) - eps).max(0.0).sqrt()
}

/// Agmon length `∫ (U^h - ε)₊^{1/2}` of the straight segment from `x` to `y`.
pub fn agmon_between(x: f64, y: f64, eps: f64, p: &SystemParams) -> f64 {
    let well = WellPotential::new(p.u0);
    let (a, b) = if x <= y { (x, y) } else { (y, x) };
    // split at the well edges so the quadrature never straddles a kink of U^h
    let mut cuts = vec![a];
    for c in [p.x0 - p.h, p.x0, p.x0 + p.h] {
        if c > a && c < b {
            cuts.push(c);
        }
    }
    cuts.push(b);
    let g = integrand(&well, p, eps);
    cuts.windows(2)
        .map(|w| adaptive_simpson(&g, w[0], w[1], QUAD_TOL))
        .sum()
}

/// `d(x, ω^h)` with `ω^h = [x₀ - h, x₀ + h]`; zero inside the well support.
pub fn agmon_distance(x: f64, eps: f64, p: &SystemParams) -> f64 {
    let lo = p.x0 - p.h;
    let hi = p.x0 + p.h;
    if x >= lo && x <= hi {
        0.0
    } else if x < lo {
        agmon_between(x, lo, eps, p)
    } else {
        agmon_between(hi, x, eps, p)
    }
}

/// `φ(x) = (1 - δ) d(x, ω^h)`.
pub fn weight_function(x: f64, eps: f64, p: &SystemParams) -> Result<f64> {
    let delta = p.delta_agmon;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!(
            "delta_agmon must lie in (0, 1), got {delta}"
        )));
    }
    Ok((1.0 - delta) * agmon_distance(x, eps, p))
}

/// Smallest `d(x_j, ω^h) - |ε|^{1/2} (|x_j - x₀| - h)` over the given nodes.
/// Non-negative when the comparison bound holds.
pub fn comparison_margin(nodes: &[f64], eps: f64, p: &SystemParams) -> f64 {
    let c0 = eps.abs().sqrt();
    nodes
        .iter()
        .map(|&x| agmon_distance(x, eps, p) - c0 * ((x - p.x0).abs() - p.h))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    /// Expected rate coefficient `(1 - δ)|ε|^{1/2}`.
    pub c0: f64,
    /// Fitted decay rate of `|Ψ|` per unit length; the slower of the two sides.
    pub fitted_rate: f64,
    /// Lower bound for `fitted_rate · h` used by the checks, `0.9 c0`.
    pub target: f64,
    /// `‖e^{c0 |x - x₀|/h} Ψ‖_{L²}`.
    pub weighted_norm: f64,
    /// `‖h e^{c0 |x - x₀|/h} Ψ'‖_{L²}`, with `Ψ'` on cell midpoints.
    pub weighted_grad_norm: f64,
    /// Right-hand fit interval; the left one is its mirror image.
    pub window: (f64, f64),
    /// Sides whose window had enough points, as `(left, right)`.
    pub sides_used: (bool, bool),
    /// Whether `ε_i ≤ ε < 0`, the hypothesis of the decay estimate.
    pub applicable: bool,
}

impl DecayReport {
    pub fn rate_times_h(&self, h: f64) -> f64 {
        self.fitted_rate * h
    }

    pub fn passes(&self, h: f64) -> bool {
        self.applicable && self.rate_times_h(h) >= self.target
    }
}

/// Least-squares slope of `log|Ψ|` against distance from `x₀`; `None` if the
/// window holds fewer than 8 usable nodes.
fn fit_side(psi: &GridFunction, x0: f64, lo: f64, hi: f64) -> Option<f64> {
    let mut pts = Vec::new();
    for (j, &v) in psi.values().iter().enumerate() {
        let x = psi.x(j);
        if x >= lo && x <= hi && v != 0.0 {
            pts.push(((x - x0).abs(), v.abs().ln()));
        }
    }
    if pts.len() < MIN_WINDOW_POINTS {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(-sxy / sxx)
}

/// Checks the exponential decay of the eigenvector `psi` (eigenvalue
/// `eps_i`) against the rate predicted for energies below `eps`.
///
/// Fits on `[x₀ + 2h, x₀ + min(6h, (L - x₀)/2)]` and its mirror image
/// `[x₀ - min(6h, x₀/2), x₀ - 2h]`. A side with fewer than 8 nodes is skipped;
/// if both are, the result is [`Error::EmptyWindow`].
pub fn verify_decay(
    psi: &GridFunction,
    eps_i: f64,
    eps: f64,
    p: &SystemParams,
) -> Result<DecayReport> {
    let c0 = (1.0 - p.delta_agmon) * eps.abs().sqrt();
    let h = p.h;
    let x0 = p.x0;
    let right = (x0 + 2.0 * h, x0 + (6.0 * h).min((p.length - x0) / 2.0));
    let left = (x0 - (6.0 * h).min(x0 / 2.0), x0 - 2.0 * h);
    let fit_l = if left.0 < left.1 {
        fit_side(psi, x0, left.0, left.1)
    } else {
        None
    };
    let fit_r = if right.0 < right.1 {
        fit_side(psi, x0, right.0, right.1)
    } else {
        None
    };
    let fitted_rate = match (fit_l, fit_r) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => {
            let count = |lo: f64, hi: f64| {
                (0..psi.len())
                    .filter(|&j| psi.x(j) >= lo && psi.x(j) <= hi)
                    .count()
            };
            return Err(Error::EmptyWindow {
                points: count(left.0, left.1).max(count(right.0, right.1)),
            });
        }
    };

    let dx = psi.dx();
    let weight = |x: f64| (c0 * (x - x0).abs() / h).exp();
    let weighted_norm = (dx
        * psi
            .values()
            .iter()
            .enumerate()
            .map(|(j, v)| (weight(psi.x(j)) * v).powi(2))
            .sum::<f64>())
    .sqrt();
    let nodes = psi.node_values();
    let weighted_grad_norm = (dx
        * nodes
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let xm = (k as f64 + 0.5) * dx;
                (h * weight(xm) * (w[1] - w[0]) / dx).powi(2)
            })
            .sum::<f64>())
    .sqrt();

    Ok(DecayReport {
        c0,
        fitted_rate,
        target: 0.9 * c0,
        weighted_norm,
        weighted_grad_norm,
        window: right,
        sides_used: (fit_l.is_some(), fit_r.is_some()),
        applicable: eps_i <= eps && eps < 0.0,
    })
}
