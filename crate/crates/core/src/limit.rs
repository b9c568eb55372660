//! The `h -> 0` limit: the whole-line spectrum of `H₀ = -d²/dy² + U`, the
//! height `θ` of the limit potential at the well, the tent `V₀` and the point
//! measure `μ = (Σ f(e_i + θ)) δ_{x₀}`.

use crate::eigen::eigenvalues_below;
use crate::error::{Error, Result};
use crate::model::{Grid, GridFunction, PartitionFunction, TridiagOperator, WellPotential};
use crate::params::SystemParams;
use crate::poisson::{green_kernel, Measure};

const START_RADIUS: f64 = 15.0;
const MAX_RADIUS: f64 = 240.0;
const START_SPACING: f64 = 0.01;
/// Largest truncated problem we are willing to bisect.
const MAX_NODES: usize = 4_000_000;
const BISECT_TOL: f64 = 1e-14;

/// Bound states `e_1 < … < e_N < 0` of `H₀` on the whole line.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSpectrum {
    pub values: Vec<f64>,
    /// Half-width of the truncated domain `[-R, R]` that was accepted.
    pub radius: f64,
    /// Finest grid spacing entering the extrapolation.
    pub spacing: f64,
    /// Last change of the extrapolated values under refinement.
    pub error_estimate: f64,
}

impl ReferenceSpectrum {
    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `e_i` for `i ≥ 1`, with `e_i = 0` past the last bound state.
    pub fn value(&self, i: usize) -> f64 {
        assert!(i >= 1, "levels are numbered from 1");
        self.values.get(i - 1).copied().unwrap_or(0.0)
    }

    pub fn ground(&self) -> Option<f64> {
        self.values.first().copied()
    }
}

fn truncated_levels(well: &WellPotential, radius: f64, spacing: f64) -> Option<Vec<f64>> {
    let cells = (2.0 * radius / spacing).round() as usize;
    if cells > MAX_NODES {
        return None;
    }
    let n = cells - 1;
    let k = 1.0 / (spacing * spacing);
    let diag = (1..=n)
        .map(|j| 2.0 * k + well.eval(-radius + j as f64 * spacing))
        .collect();
    let t = TridiagOperator::new(diag, vec![-k; n - 1]).ok()?;
    Some(eigenvalues_below(&t, 0.0, BISECT_TOL))
}

fn extrapolate(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    coarse
        .iter()
        .zip(fine)
        .map(|(c, f)| f + (f - c) / 3.0)
        .collect()
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Converges the truncated spectrum on `[-R, R]` in the grid spacing.
/// Returns the extrapolated levels, the finest spacing and the last change.
fn levels_at_radius(well: &WellPotential, radius: f64, tol: f64) -> Result<(Vec<f64>, f64, f64)> {
    let mut spacing = START_SPACING;
    let fail = |spacing: f64| Error::NoConvergence {
        what: "reference spectrum refinement",
        iterations: (START_SPACING / spacing).log2().round() as usize,
        residual: f64::NAN,
    };
    let mut coarse = truncated_levels(well, radius, spacing).ok_or_else(|| fail(spacing))?;
    let mut previous: Option<Vec<f64>> = None;
    loop {
        spacing *= 0.5;
        let fine = truncated_levels(well, radius, spacing).ok_or_else(|| fail(spacing))?;
        if fine.len() == coarse.len() {
            let ext = extrapolate(&coarse, &fine);
            if let Some(prev) = &previous {
                if prev.len() == ext.len() {
                    let change = max_change(prev, &ext);
                    if change < tol {
                        return Ok((ext, spacing, change));
                    }
                }
            }
            previous = Some(ext);
        } else {
            previous = None;
        }
        coarse = fine;
    }
}

/// Negative eigenvalues of `-u'' + U u` on the line, by Dirichlet truncation
/// to `[-R, R]` and Richardson-extrapolated refinement in the spacing. `R`
/// doubles from 15 until the accepted values move by less than `tol`.
/// Only values below `-10 tol` count as bound states.
pub fn reference_spectrum(well: &WellPotential, tol: f64) -> Result<ReferenceSpectrum> {
    let cut = -10.0 * tol;
    let bound = |v: Vec<f64>| v.into_iter().filter(|&e| e < cut).collect::<Vec<_>>();
    let mut radius = START_RADIUS;
    let (levels, _, mut err) = levels_at_radius(well, radius, tol)?;
    let mut current = bound(levels);
    while radius < MAX_RADIUS {
        radius *= 2.0;
        let (levels, spacing, e) = levels_at_radius(well, radius, tol)?;
        let next = bound(levels);
        let settled = next.len() == current.len() && max_change(&next, &current) < tol;
        current = next;
        err = e;
        if settled {
            return Ok(ReferenceSpectrum {
                values: current,
                radius,
                spacing,
                error_estimate: err,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "reference spectrum truncation",
        iterations: (radius / START_RADIUS).log2() as usize,
        residual: err,
    })
}

/// The occupation threshold must sit above the ground level of `H₀`.
pub fn check_condition(rs: &ReferenceSpectrum, f: &PartitionFunction) -> Result<()> {
    match rs.ground() {
        None => Err(Error::ConditionViolated(
            "the reference operator has no bound state".into(),
        )),
        Some(e1) if e1 >= f.eps_s => Err(Error::ConditionViolated(format!(
            "ground level e1 = {e1} is not below eps_S = {}",
            f.eps_s
        ))),
        Some(_) => Ok(()),
    }
}

/// `Σ_{i ≤ N} f(e_i + θ)`. Levels past `N` would add `f(θ) = 0`.
pub fn occupied_sum(rs: &ReferenceSpectrum, f: &PartitionFunction, theta: f64) -> f64 {
    rs.values.iter().map(|&e| f.eval(e + theta)).sum()
}

/// `G(θ) = θ - x₀(1 - x₀/L) Σ f(e_i + θ)`.
pub fn theta_residual(
    rs: &ReferenceSpectrum,
    f: &PartitionFunction,
    p: &SystemParams,
    theta: f64,
) -> f64 {
    theta - green_kernel(p.x0, p.x0, p.length) * occupied_sum(rs, f, theta)
}

/// Unique root of the strictly increasing `G` on `[0, ε_S - e_1]`, by bisection.
pub fn solve_theta(rs: &ReferenceSpectrum, f: &PartitionFunction, p: &SystemParams) -> Result<f64> {
    let g = |t: f64| theta_residual(rs, f, p, t);
    let g0 = g(0.0);
    let e1 = rs.ground().unwrap_or(0.0);
    if g0 >= 0.0 || e1 >= f.eps_s {
        return Err(Error::BracketError { g0 });
    }
    Ok(bisect_increasing(g, 0.0, f.eps_s - e1, p.tol_root))
}

/// Root of an increasing `g` with `g(lo) < 0 < g(hi)`, to `|g| ≤ tol` or
/// floating-point resolution of the bracket.
fn bisect_increasing<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm.abs() <= tol || mid <= lo || mid >= hi {
            return mid;
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Piecewise-linear limit potential with peak `θ` at `x₀` and zero ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tent {
    pub x0: f64,
    pub peak: f64,
    pub length: f64,
}

impl Tent {
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.x0 {
            self.peak * (x / self.x0)
        } else {
            self.peak * ((self.length - x) / (self.length - self.x0))
        }
    }

    pub fn left_slope(&self) -> f64 {
        self.peak / self.x0
    }

    pub fn right_slope(&self) -> f64 {
        -self.peak / (self.length - self.x0)
    }

    /// `V₀'(x₀+) - V₀'(x₀-)`, which equals minus the atom weight.
    pub fn slope_jump(&self) -> f64 {
        self.right_slope() - self.left_slope()
    }

    pub fn sample(&self, grid: &Grid) -> GridFunction {
        GridFunction::from_fn(grid, |x| self.eval(x))
    }
}

/// `V₀`, written through its peak value so that `V₀(x₀) = θ` holds exactly.
pub fn limit_potential(theta: f64, p: &SystemParams) -> Tent {
    Tent {
        x0: p.x0,
        peak: theta,
        length: p.length,
    }
}

/// `μ = Σ f(e_i + θ) δ_{x₀}`.
pub fn limit_measure(
    theta: f64,
    rs: &ReferenceSpectrum,
    f: &PartitionFunction,
    p: &SystemParams,
) -> Measure {
    Measure::atom(p.x0, occupied_sum(rs, f, theta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSolution {
    pub reference: ReferenceSpectrum,
    pub theta: f64,
    /// `G(θ)` at the returned root.
    pub theta_residual: f64,
    pub potential: Tent,
    pub measure: Measure,
    pub weight: f64,
    /// Number of limit levels `e_i + θ` below `ε_S`.
    pub n_occupied: usize,
    /// Number of shifted levels `e_i + θ` below zero.
    pub n_bound_shifted: usize,
    pub eps_s: f64,
}

impl LimitSolution {
    /// `e_i + θ` for the occupied levels.
    pub fn shifted_levels(&self) -> Vec<f64> {
        self.reference
            .values
            .iter()
            .map(|e| e + self.theta)
            .filter(|&x| x < self.eps_s)
            .collect()
    }
}

/// Runs the whole limit computation for `p`.
pub fn solve_limit(p: &SystemParams) -> Result<LimitSolution> {
    let well = WellPotential::new(p.u0);
    let f = PartitionFunction::from_params(p);
    let rs = reference_spectrum(&well, p.tol_ref)?;
    solve_limit_from(rs, &f, p)
}

pub fn solve_limit_from(
    rs: ReferenceSpectrum,
    f: &PartitionFunction,
    p: &SystemParams,
) -> Result<LimitSolution> {
    check_condition(&rs, f)?;
    let theta = solve_theta(&rs, f, p)?;
    let measure = limit_measure(theta, &rs, f, p);
    let weight = occupied_sum(&rs, f, theta);
    let n_occupied = rs.values.iter().filter(|&&e| e + theta < f.eps_s).count();
    let n_bound_shifted = rs.values.iter().filter(|&&e| e + theta < 0.0).count();
    Ok(LimitSolution {
        theta_residual: theta_residual(&rs, f, p, theta),
        potential: limit_potential(theta, p),
        measure,
        weight,
        n_occupied,
        n_bound_shifted,
        eps_s: f.eps_s,
        theta,
        reference: rs,
    })
}
