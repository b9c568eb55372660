//! CSV tables and SVG line plots. Every renderer returns a `String` so output
//! can be compared byte for byte; the `write_*` functions put them on disk.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::{ConvergenceReport, SingleRun};
use crate::limit::LimitSolution;
use crate::model::Grid;
use crate::scf::ScfSolution;

pub const SWEEP_HEADER: &str =
    "h,n_grid,Nh,iters,sup_err,holder_err,pair_const,pair_x,pair_sin,mass,runtime_ms";
pub const SPECTRUM_HEADER: &str = "h,i,eps_i,e_i_plus_theta,gap";
pub const DECAY_HEADER: &str = "h,i,fitted_rate_times_h,target,weighted_norm";

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

/// `sweep.csv`. Runtimes are written as `NA` unless `timings` is set, which
/// keeps repeated runs byte-identical.
pub fn render_sweep_csv(report: &ConvergenceReport, timings: bool) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in &report.rows {
        match &row.outcome {
            Ok((run, m)) => {
                let rt = if timings {
                    format!("{:.3}", run.runtime_ms)
                } else {
                    "NA".into()
                };
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    row.h,
                    run.n_grid,
                    run.occupied(),
                    run.scf.iterations,
                    num(m.sup_err),
                    num(m.holder_err),
                    num(m.pairings[0]),
                    num(m.pairings[1]),
                    num(m.pairings[2]),
                    num(m.mass),
                    rt
                );
            }
            Err(_) => {
                let _ = writeln!(out, "{},NA,NA,NA,NA,NA,NA,NA,NA,NA,NA", row.h);
            }
        }
    }
    out
}

/// `spectrum.csv`: occupied nonlinear levels against `e_i + θ` (with
/// `e_i = 0` past the last reference level).
pub fn render_spectrum_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from(SPECTRUM_HEADER);
    out.push('\n');
    let lim = &report.limit;
    for (row, run) in report
        .rows
        .iter()
        .filter_map(|r| r.run().map(|run| (r, run)))
    {
        for (k, &e) in run.scf.spectrum.values.iter().enumerate() {
            let target = lim.reference.value(k + 1) + lim.theta;
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                row.h,
                k + 1,
                num(e),
                num(target),
                num((e - target).abs())
            );
        }
    }
    out
}

/// `decay.csv` for the given runs.
pub fn render_decay_csv<'a, I: IntoIterator<Item = &'a SingleRun>>(runs: I) -> String {
    let mut out = String::from(DECAY_HEADER);
    out.push('\n');
    for run in runs {
        let h = run.h();
        for (i, d) in &run.decay {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                h,
                i + 1,
                num(d.rate_times_h(h)),
                num(d.target),
                num(d.weighted_norm)
            );
        }
    }
    out
}

/// Samples of `V₀` on `grid`, endpoints included.
pub fn render_limit_csv(limit: &LimitSolution, grid: &Grid) -> String {
    let mut out = String::from("x,V0\n");
    for j in 0..=grid.n() + 1 {
        let x = j as f64 * grid.dx();
        let _ = writeln!(out, "{},{}", num(x), num(limit.potential.eval(x)));
    }
    out
}

/// Per-attempt trace of the fixed-point loop.
pub fn render_trace_csv(scf: &ScfSolution) -> String {
    let mut out = String::from("iteration,tau,residual,J,accepted\n");
    for t in &scf.trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            t.iteration,
            num(t.tau),
            num(t.residual),
            num(t.energy),
            u8::from(t.accepted)
        );
    }
    out
}

/// `x, V, n, U^h` at the interior nodes of a single run.
pub fn render_solution_csv(run: &SingleRun) -> String {
    let mut out = String::from("x,V,density,well\n");
    let s = &run.scf;
    let well = crate::model::WellPotential::new(run.params.u0);
    for j in 0..s.potential.len() {
        let x = s.potential.x(j);
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(x),
            num(s.potential.values()[j]),
            num(s.density.values()[j]),
            num(well.rescaled(&run.params, x))
        );
    }
    out
}

/// Single-run spectrum table: `i, eps_i, linear e_i^h`.
pub fn render_levels_csv(run: &SingleRun) -> String {
    let mut out = String::from("i,eps_i,e_i_linear\n");
    for (k, &e) in run.scf.spectrum.values.iter().enumerate() {
        let lin = run
            .linear_values
            .get(k)
            .map_or("NA".to_string(), |&v| num(v));
        let _ = writeln!(out, "{},{},{}", k + 1, num(e), lin);
    }
    out
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

struct Plot {
    title: String,
    xlabel: String,
    ylabel: String,
    log: bool,
    series: Vec<Series>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const ML: f64 = 80.0;
const MR: f64 = 160.0;
const MT: f64 = 40.0;
const MB: f64 = 50.0;

impl Plot {
    fn new(title: &str, xlabel: &str, ylabel: &str, log: bool) -> Self {
        Plot {
            title: title.into(),
            xlabel: xlabel.into(),
            ylabel: ylabel.into(),
            log,
            series: Vec::new(),
        }
    }

    fn add(&mut self, label: impl Into<String>, points: Vec<(f64, f64)>, dashed: bool) {
        let points = if self.log {
            points
                .into_iter()
                .filter(|&(x, y)| x > 0.0 && y > 0.0)
                .map(|(x, y)| (x.log10(), y.log10()))
                .collect()
        } else {
            points
        };
        self.series.push(Series {
            label: label.into(),
            points,
            dashed,
        });
    }

    fn render(&self) -> String {
        let pts = self.series.iter().flat_map(|s| s.points.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 <= 0.0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 <= 0.0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
        let pw = W - ML - MR;
        let ph = H - MT - MB;
        let sx = |x: f64| ML + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| MT + (y1 - y) / (y1 - y0) * ph;
        let tick = |v: f64| {
            if self.log {
                format!("{:.2e}", 10f64.powf(v))
            } else {
                format!("{v:.3}")
            }
        };

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            ML + pw / 2.0,
            self.title
        );
        let _ = writeln!(
            s,
            r#"<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                sx(fx),
                MT + ph + 16.0,
                tick(fx)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                ML - 6.0,
                sy(fy) + 4.0,
                tick(fy)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            ML + pw / 2.0,
            H - 12.0,
            self.xlabel
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            MT + ph / 2.0,
            MT + ph / 2.0,
            self.ylabel
        );
        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let path: Vec<String> = series
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let dash = if series.dashed {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                path.join(" ")
            );
            if self.log {
                for p in &path {
                    let (cx, cy) = p.split_once(',').unwrap();
                    let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>"#);
                }
            }
            let ly = MT + 14.0 + 16.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#,
                W - MR + 10.0,
                W - MR + 30.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}">{}</text>"#,
                W - MR + 36.0,
                ly + 4.0,
                series.label
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// `V^h` for every row overlaid on `V₀`.
pub fn plot_potentials(report: &ConvergenceReport) -> String {
    let mut plot = Plot::new("Self-consistent potentials and limit tent", "x", "V", false);
    for row in &report.rows {
        if let Some(run) = row.run() {
            let v = run.scf.potential.node_values();
            let dx = run.scf.potential.dx();
            let pts = v
                .iter()
                .enumerate()
                .map(|(j, &y)| (j as f64 * dx, y))
                .collect();
            plot.add(format!("h = {}", row.h), pts, false);
        }
    }
    let tent = report.limit.potential;
    plot.add(
        "V0",
        vec![(0.0, 0.0), (tent.x0, tent.peak), (tent.length, 0.0)],
        true,
    );
    plot.render()
}

/// Error metrics against `h` on log-log axes.
pub fn plot_errors(report: &ConvergenceReport) -> String {
    let mut plot = Plot::new("Distance to the limit", "h", "error", true);
    let names = ["sup", "Holder", "pair 1", "pair x", "pair sin"];
    for (k, name) in names.iter().enumerate() {
        let pts = report
            .rows
            .iter()
            .filter_map(|r| {
                r.metrics().map(|m| {
                    let y = match k {
                        0 => m.sup_err,
                        1 => m.holder_err,
                        i => m.pairings[i - 2],
                    };
                    (r.h, y)
                })
            })
            .collect();
        plot.add(*name, pts, false);
    }
    plot.render()
}

/// Occupied levels against `h` with the limit levels `e_i + θ` dashed.
pub fn plot_spectrum(report: &ConvergenceReport) -> String {
    let mut plot = Plot::new("Occupied levels", "h", "energy", false);
    let max_levels = report
        .rows
        .iter()
        .filter_map(|r| r.run())
        .map(|r| r.occupied())
        .max()
        .unwrap_or(0);
    for i in 0..max_levels {
        let pts = report
            .rows
            .iter()
            .filter_map(|r| {
                r.run()
                    .and_then(|run| run.scf.spectrum.values.get(i).map(|&e| (r.h, e)))
            })
            .collect();
        plot.add(format!("level {}", i + 1), pts, false);
    }
    let (hmin, hmax) = report
        .rows
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), r| {
            (a.min(r.h), b.max(r.h))
        });
    if hmin.is_finite() {
        for (i, e) in report.limit.shifted_levels().iter().enumerate() {
            plot.add(
                format!("e{} + theta", i + 1),
                vec![(hmin, *e), (hmax, *e)],
                true,
            );
        }
    }
    plot.render()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes `(name, contents)` pairs under `dir`, creating it if needed.
pub fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut paths = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = dir.join(name);
        write_file(&path, contents)?;
        paths.push(path);
    }
    Ok(paths)
}

/// The sweep outputs: three CSV tables and three SVG plots.
pub fn sweep_files(report: &ConvergenceReport, timings: bool) -> Vec<(&'static str, String)> {
    vec![
        ("sweep.csv", render_sweep_csv(report, timings)),
        ("spectrum.csv", render_spectrum_csv(report)),
        (
            "decay.csv",
            render_decay_csv(report.rows.iter().filter_map(|r| r.run())),
        ),
        ("potential.svg", plot_potentials(report)),
        ("errors.svg", plot_errors(report)),
        ("spectrum.svg", plot_spectrum(report)),
    ]
}

pub fn write_sweep(report: &ConvergenceReport, dir: &Path, timings: bool) -> Result<Vec<PathBuf>> {
    write_all(dir, &sweep_files(report, timings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run_sweep;
    use crate::par::Exec;
    use crate::params::SystemParams;

    fn report() -> ConvergenceReport {
        run_sweep(&SystemParams::default(), &[0.1, 0.05], Exec::Parallel).unwrap()
    }

    #[test]
    fn empty_report_gives_headers_only() {
        let mut r = report();
        r.rows.clear();
        assert_eq!(render_sweep_csv(&r, false), format!("{SWEEP_HEADER}\n"));
        assert_eq!(render_spectrum_csv(&r), format!("{SPECTRUM_HEADER}\n"));
        assert_eq!(
            render_decay_csv(std::iter::empty()),
            format!("{DECAY_HEADER}\n")
        );
        assert!(plot_potentials(&r).ends_with("</svg>\n"));
        assert!(plot_spectrum(&r).ends_with("</svg>\n"));
    }

    #[test]
    fn sweep_csv_shape() {
        let r = report();
        let csv = render_sweep_csv(&r, false);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0.1,"));
        assert!(lines[1].ends_with(",NA"));
        assert_eq!(lines[1].split(',').count(), 11);
        let timed = render_sweep_csv(&r, true);
        assert!(!timed.lines().nth(1).unwrap().ends_with(",NA"));
    }

    #[test]
    fn six_files_written_and_stable() {
        let r = report();
        let dir = tempfile::tempdir().unwrap();
        let paths = write_sweep(&r, dir.path(), false).unwrap();
        assert_eq!(paths.len(), 6);
        assert_eq!(
            paths
                .iter()
                .filter(|p| p.extension().unwrap() == "csv")
                .count(),
            3
        );
        let first: Vec<Vec<u8>> = paths.iter().map(|p| fs::read(p).unwrap()).collect();
        write_sweep(&r, dir.path(), false).unwrap();
        let second: Vec<Vec<u8>> = paths.iter().map(|p| fs::read(p).unwrap()).collect();
        assert_eq!(first, second);
    }

    #[test]
    fn limit_csv_peaks_at_theta() {
        let r = report();
        let grid = Grid::uniform(1.0, 9);
        let csv = render_limit_csv(&r.limit, &grid);
        assert_eq!(csv.lines().count(), 12);
        assert!(csv.lines().nth(1).unwrap().ends_with(&num(0.0)));
    }
}
