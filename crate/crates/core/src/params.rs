//! Problem configuration and the `key = value` config format.

use std::path::Path;

use crate::error::{Error, Result};

/// Physical and numerical configuration of one Schrödinger-Poisson problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Domain length `L`; the domain is `(0, L)`.
    pub length: f64,
    /// Well center `x₀ ∈ (0, L)`.
    pub x0: f64,
    /// Semiclassical parameter; also the well radius.
    pub h: f64,
    /// Depth scale of the well profile.
    pub u0: f64,
    /// Occupation threshold `ε_S < 0`.
    pub eps_s: f64,
    /// Amplitude of the occupation function.
    pub amplitude: f64,
    /// Target number of grid cells per unit of `h`.
    pub points_per_well: usize,
    /// Cap on the interior grid size.
    pub n_max: usize,
    pub tol_eig: f64,
    pub tol_scf: f64,
    pub tol_root: f64,
    /// Tolerance for the whole-line reference spectrum.
    pub tol_ref: f64,
    /// `δ` in the Agmon weight `(1 - δ) d(x, ω^h)`.
    pub delta_agmon: f64,
    /// Hölder exponent used by the convergence metrics.
    pub holder_alpha: f64,
    pub max_iter: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            length: 1.0,
            x0: 0.4,
            h: 0.05,
            u0: 10.0,
            eps_s: -1.2,
            amplitude: 4.0,
            points_per_well: 20,
            n_max: 400_001,
            tol_eig: 1e-13,
            tol_scf: 1e-11,
            tol_root: 1e-14,
            tol_ref: 1e-8,
            delta_agmon: 0.1,
            holder_alpha: 0.5,
            max_iter: 500,
        }
    }
}

impl SystemParams {
    pub fn with_h(&self, h: f64) -> Self {
        SystemParams { h, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.length > 0.0 && self.length.is_finite()) {
            return fail(format!("L must be positive, got {}", self.length));
        }
        if !(self.x0 > 0.0 && self.x0 < self.length) {
            return fail(format!("x0 must lie in (0, L), got {}", self.x0));
        }
        if !(self.h > 0.0) {
            return fail(format!("h must be positive, got {}", self.h));
        }
        if !(self.x0 - self.h > 0.0 && self.x0 + self.h < self.length) {
            return fail(format!(
                "well support [{}, {}] is not inside (0, {})",
                self.x0 - self.h,
                self.x0 + self.h,
                self.length
            ));
        }
        if !(self.u0 >= 0.0 && self.u0.is_finite()) {
            return fail(format!("U0 must be non-negative, got {}", self.u0));
        }
        if !(self.eps_s < 0.0) {
            return fail(format!("eps_S must be negative, got {}", self.eps_s));
        }
        if !(self.amplitude > 0.0) {
            return fail(format!("A must be positive, got {}", self.amplitude));
        }
        if self.points_per_well < 10 {
            return fail(format!(
                "points_per_well must be at least 10, got {}",
                self.points_per_well
            ));
        }
        if self.n_max == 0 {
            return fail("n_max must be positive".into());
        }
        for (name, v) in [
            ("tol_eig", self.tol_eig),
            ("tol_scf", self.tol_scf),
            ("tol_root", self.tol_root),
            ("tol_ref", self.tol_ref),
        ] {
            if !(v > 0.0) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.delta_agmon > 0.0 && self.delta_agmon < 1.0) {
            return fail(format!(
                "delta_agmon must lie in (0, 1), got {}",
                self.delta_agmon
            ));
        }
        if !(self.holder_alpha > 0.0 && self.holder_alpha < 1.0) {
            return fail(format!(
                "holder_alpha must lie in (0, 1), got {}",
                self.holder_alpha
            ));
        }
        if self.max_iter == 0 {
            return fail("max_iter must be positive".into());
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut p = SystemParams::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            p.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_kv_str(&text)
    }

    /// Sets one field by its config key.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn real(v: &str) -> std::result::Result<f64, String> {
            v.parse::<f64>()
                .map_err(|_| format!("`{v}` is not a number"))
        }
        fn count(v: &str) -> std::result::Result<usize, String> {
            // allow `4e5`-style integers
            let x = real(v)?;
            if x < 0.0 || x.fract() != 0.0 || x > usize::MAX as f64 {
                return Err(format!("`{v}` is not a non-negative integer"));
            }
            Ok(x as usize)
        }
        match key {
            "L" => self.length = real(value)?,
            "x0" | "x₀" => self.x0 = real(value)?,
            "h" => self.h = real(value)?,
            "U0" | "U₀" => self.u0 = real(value)?,
            "eps_S" | "ε_S" => self.eps_s = real(value)?,
            "A" => self.amplitude = real(value)?,
            "points_per_well" => self.points_per_well = count(value)?,
            "n_max" => self.n_max = count(value)?,
            "tol_eig" => self.tol_eig = real(value)?,
            "tol_scf" => self.tol_scf = real(value)?,
            "tol_root" => self.tol_root = real(value)?,
            "tol_ref" => self.tol_ref = real(value)?,
            "delta_agmon" | "δ_agmon" => self.delta_agmon = real(value)?,
            "holder_alpha" | "alpha" => self.holder_alpha = real(value)?,
            "max_iter" => self.max_iter = count(value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Renders the configuration in the same format [`from_kv_str`](Self::from_kv_str) reads.
    pub fn to_kv_string(&self) -> String {
        format!(
            "L = {}\nx0 = {}\nh = {}\nU0 = {}\neps_S = {}\nA = {}\npoints_per_well = {}\n\
             n_max = {}\ntol_eig = {:e}\ntol_scf = {:e}\ntol_root = {:e}\ntol_ref = {:e}\n\
             delta_agmon = {}\nholder_alpha = {}\nmax_iter = {}\n",
            self.length,
            self.x0,
            self.h,
            self.u0,
            self.eps_s,
            self.amplitude,
            self.points_per_well,
            self.n_max,
            self.tol_eig,
            self.tol_scf,
            self.tol_root,
            self.tol_ref,
            self.delta_agmon,
            self.holder_alpha,
            self.max_iter
        )
    }
}
