//! Run configuration: defaults, presets, flat `key=value` files and
//! command-line overrides, resolved in that order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::coin::{CoinAngleField, TabulatedAngles};
use crate::schwarzschild::SchwarzschildParams;
use crate::walk::LatticeGrid;
use crate::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QWALK_OUT_DIR";

/// Every configuration key, in header order.
pub const KEYS: &[&str] = &[
    "field",
    "theta0",
    "amp",
    "wavenumber",
    "omega",
    "table",
    "rg",
    "lambda",
    "epsilon",
    "sites",
    "x_min",
    "steps",
    "x0",
    "dx0",
    "spin_mix",
    "stride",
    "heatmap",
    "geodesic_starts",
    "geodesic_signs",
    "geodesic_dt",
    "t_max",
    "out_dir",
    "seed",
    "panel",
    "epsilons",
    "t_final",
    "strobe_omega",
    "strobe_tscale",
    "strobe_sigma",
    "strobe_steps",
];

/// Standard deviation of the initial density: the figure's Gaussian has
/// variance 2.5.
pub const FIGURE_DX0: f64 = 1.581_138_830_084_189_8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Constant,
    Smooth,
    Schwarzschild,
    Tabulated,
}

impl FieldKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldKind::Constant => "constant",
            FieldKind::Smooth => "smooth",
            FieldKind::Schwarzschild => "schwarzschild",
            FieldKind::Tabulated => "tabulated",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "constant" => FieldKind::Constant,
            "smooth" => FieldKind::Smooth,
            "schwarzschild" => FieldKind::Schwarzschild,
            "tabulated" => FieldKind::Tabulated,
            _ => return None,
        })
    }
}

/// The four black-hole panels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Panel {
    A,
    B,
    C,
    D,
}

impl Panel {
    pub const ALL: [Panel; 4] = [Panel::A, Panel::B, Panel::C, Panel::D];

    pub fn as_str(&self) -> &'static str {
        match self {
            Panel::A => "a",
            Panel::B => "b",
            Panel::C => "c",
            Panel::D => "d",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Panel::A),
            "b" => Ok(Panel::B),
            "c" => Ok(Panel::C),
            "d" => Ok(Panel::D),
            _ => Err(Error::Config(format!("panel: expected one of a, b, c, d, got `{s}`"))),
        }
    }

    /// `(λ, X0)`. The λ values are reconstructions; (c) starts on the
    /// horizon and (d) between the horizon and the domain boundary.
    pub fn defaults(&self) -> (f64, f64) {
        match self {
            Panel::A => (1.5, 50.5),
            Panel::B => (1.0, 50.5),
            Panel::C => (1.0, 100.0),
            Panel::D => (0.7, 180.0),
        }
    }
}

/// Settings applied between the defaults and any file or flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    None,
    Panel(Panel),
    /// Smooth field and small packet for the ε sweep.
    Converge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub field: FieldKind,
    pub theta0: f64,
    pub amp: f64,
    pub wavenumber: f64,
    pub omega: f64,
    pub table: Option<PathBuf>,
    pub rg: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub sites: usize,
    pub x_min: f64,
    pub steps: u64,
    pub x0: f64,
    pub dx0: f64,
    pub spin_mix: (Complex64, Complex64),
    /// Snapshot every `stride` steps.
    pub stride: u64,
    pub heatmap: bool,
    /// `(T0, X0)` pairs; empty means a single start at `(0, x0)`.
    pub geodesic_starts: Vec<(f64, f64)>,
    pub geodesic_signs: Vec<i8>,
    pub geodesic_dt: f64,
    pub t_max: f64,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub panel: Option<Panel>,
    pub epsilons: Vec<f64>,
    pub t_final: f64,
    pub strobe_omega: f64,
    pub strobe_tscale: f64,
    pub strobe_sigma: i8,
    pub strobe_steps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            field: FieldKind::Schwarzschild,
            theta0: std::f64::consts::FRAC_PI_4,
            amp: 0.2,
            wavenumber: 0.1,
            omega: 0.1,
            table: None,
            rg: 150.0,
            lambda: 1.0,
            epsilon: 0.5,
            sites: 4096,
            x_min: -10.0,
            steps: 600,
            x0: 50.5,
            dx0: FIGURE_DX0,
            spin_mix: (Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)),
            stride: 10,
            heatmap: false,
            geodesic_starts: Vec::new(),
            geodesic_signs: vec![-1, 1],
            geodesic_dt: 0.05,
            t_max: 300.0,
            out_dir: PathBuf::from("out"),
            seed: 0,
            panel: None,
            epsilons: vec![0.1, 0.05, 0.025],
            t_final: 10.0,
            strobe_omega: 0.3,
            strobe_tscale: 1.0,
            strobe_sigma: -1,
            strobe_steps: 64,
        }
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.trim().parse::<T>().map_err(|e| bad(key, format!("cannot parse `{v}`: {e}")))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(key, s)).collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn apply_preset(&mut self, preset: Preset) {
        match preset {
            Preset::None => {}
            Preset::Panel(p) => {
                let (lambda, x0) = p.defaults();
                self.field = FieldKind::Schwarzschild;
                self.lambda = lambda;
                self.x0 = x0;
                self.panel = Some(p);
            }
            Preset::Converge => {
                self.field = FieldKind::Constant;
                self.theta0 = std::f64::consts::FRAC_PI_4;
                self.x0 = 0.0;
                self.dx0 = 1.0;
            }
        }
    }

    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "field" => {
                self.field = FieldKind::parse(v)
                    .ok_or_else(|| bad(key, format!("expected constant, smooth, schwarzschild or tabulated, got `{v}`")))?
            }
            "theta0" => self.theta0 = num(key, v)?,
            "amp" => self.amp = num(key, v)?,
            "wavenumber" => self.wavenumber = num(key, v)?,
            "omega" => self.omega = num(key, v)?,
            "table" => self.table = (!v.is_empty()).then(|| PathBuf::from(v)),
            "rg" => self.rg = num(key, v)?,
            "lambda" => self.lambda = num(key, v)?,
            "epsilon" => self.epsilon = num(key, v)?,
            "sites" => self.sites = num(key, v)?,
            "x_min" => self.x_min = num(key, v)?,
            "steps" => self.steps = num(key, v)?,
            "x0" => self.x0 = num(key, v)?,
            "dx0" => self.dx0 = num(key, v)?,
            "spin_mix" => {
                let parts: Vec<f64> = list(key, v)?;
                let [a, b, c, d] = parts[..] else {
                    return Err(bad(key, format!("expected `re_L,im_L,re_R,im_R`, got `{v}`")));
                };
                self.spin_mix = (Complex64::new(a, b), Complex64::new(c, d));
            }
            "stride" => self.stride = num(key, v)?,
            "heatmap" => {
                self.heatmap = match v {
                    "1" | "true" | "yes" => true,
                    "0" | "false" | "no" => false,
                    _ => return Err(bad(key, format!("expected true or false, got `{v}`"))),
                }
            }
            "geodesic_starts" => {
                self.geodesic_starts = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|pair| {
                        let (t, x) = pair
                            .split_once(':')
                            .ok_or_else(|| bad(key, format!("expected `T:X` pairs, got `{pair}`")))?;
                        Ok((num(key, t)?, num(key, x)?))
                    })
                    .collect::<Result<_>>()?
            }
            "geodesic_signs" => self.geodesic_signs = list(key, v)?,
            "geodesic_dt" => self.geodesic_dt = num(key, v)?,
            "t_max" => self.t_max = num(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "seed" => self.seed = num(key, v)?,
            "panel" => self.panel = if v.is_empty() { None } else { Some(Panel::parse(v)?) },
            "epsilons" => self.epsilons = list(key, v)?,
            "t_final" => self.t_final = num(key, v)?,
            "strobe_omega" => self.strobe_omega = num(key, v)?,
            "strobe_tscale" => self.strobe_tscale = num(key, v)?,
            "strobe_sigma" => self.strobe_sigma = num(key, v)?,
            "strobe_steps" => self.strobe_steps = num(key, v)?,
            _ => return Err(Error::Config(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// The value of `key` as it would appear in a config file.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "field" => self.field.as_str().to_string(),
            "theta0" => self.theta0.to_string(),
            "amp" => self.amp.to_string(),
            "wavenumber" => self.wavenumber.to_string(),
            "omega" => self.omega.to_string(),
            "table" => self.table.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            "rg" => self.rg.to_string(),
            "lambda" => self.lambda.to_string(),
            "epsilon" => self.epsilon.to_string(),
            "sites" => self.sites.to_string(),
            "x_min" => self.x_min.to_string(),
            "steps" => self.steps.to_string(),
            "x0" => self.x0.to_string(),
            "dx0" => self.dx0.to_string(),
            "spin_mix" => {
                let (l, r) = self.spin_mix;
                join(&[l.re, l.im, r.re, r.im])
            }
            "stride" => self.stride.to_string(),
            "heatmap" => self.heatmap.to_string(),
            "geodesic_starts" => {
                self.geodesic_starts.iter().map(|(t, x)| format!("{t}:{x}")).collect::<Vec<_>>().join(",")
            }
            "geodesic_signs" => join(&self.geodesic_signs),
            "geodesic_dt" => self.geodesic_dt.to_string(),
            "t_max" => self.t_max.to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            "seed" => self.seed.to_string(),
            "panel" => self.panel.map(|p| p.as_str().to_string()).unwrap_or_default(),
            "epsilons" => join(&self.epsilons),
            "t_final" => self.t_final.to_string(),
            "strobe_omega" => self.strobe_omega.to_string(),
            "strobe_tscale" => self.strobe_tscale.to_string(),
            "strobe_sigma" => self.strobe_sigma.to_string(),
            "strobe_steps" => self.strobe_steps.to_string(),
            _ => return None,
        })
    }

    /// Apply a flat `key=value` text. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("config line {}: expected `key=value`, got `{line}`", n + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Resolve defaults, the output-directory environment variable, the
    /// preset, an optional config file and then command-line overrides.
    pub fn resolve(preset: Preset, file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
            cfg.out_dir = PathBuf::from(dir);
        }
        cfg.apply_preset(preset);
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("theta0", self.theta0),
            ("amp", self.amp),
            ("wavenumber", self.wavenumber),
            ("omega", self.omega),
            ("rg", self.rg),
            ("lambda", self.lambda),
            ("epsilon", self.epsilon),
            ("x_min", self.x_min),
            ("x0", self.x0),
            ("dx0", self.dx0),
            ("geodesic_dt", self.geodesic_dt),
            ("t_max", self.t_max),
            ("t_final", self.t_final),
            ("strobe_omega", self.strobe_omega),
            ("strobe_tscale", self.strobe_tscale),
        ];
        for (k, v) in finite {
            if !v.is_finite() {
                return Err(bad(k, format!("must be finite, got {v}")));
            }
        }
        let (l, r) = self.spin_mix;
        if ![l.re, l.im, r.re, r.im].iter().all(|v| v.is_finite()) || l.norm_sqr() + r.norm_sqr() == 0.0 {
            return Err(bad("spin_mix", "must be finite and nonzero"));
        }
        let positive = [
            ("epsilon", self.epsilon),
            ("dx0", self.dx0),
            ("rg", self.rg),
            ("lambda", self.lambda),
            ("geodesic_dt", self.geodesic_dt),
            ("t_final", self.t_final),
            ("strobe_tscale", self.strobe_tscale),
        ];
        for (k, v) in positive {
            if v <= 0.0 {
                return Err(bad(k, format!("must be positive, got {v}")));
            }
        }
        if self.t_max < 0.0 {
            return Err(bad("t_max", format!("must be nonnegative, got {}", self.t_max)));
        }
        if self.sites < 2 {
            return Err(bad("sites", format!("need at least 2 sites, got {}", self.sites)));
        }
        if self.stride == 0 {
            return Err(bad("stride", "must be at least 1"));
        }
        if self.field == FieldKind::Tabulated && self.table.is_none() {
            return Err(bad("table", "required when field=tabulated"));
        }
        if let Some(s) = self.geodesic_signs.iter().find(|s| **s != 1 && **s != -1) {
            return Err(bad("geodesic_signs", format!("signs must be -1 or 1, got {s}")));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(bad("epsilons", format!("entries must be positive, got {e}")));
        }
        if self.strobe_sigma != 1 && self.strobe_sigma != -1 {
            return Err(bad("strobe_sigma", format!("must be -1 or 1, got {}", self.strobe_sigma)));
        }
        if self.strobe_steps < 4 {
            return Err(bad("strobe_steps", format!("need at least 4, got {}", self.strobe_steps)));
        }
        Ok(())
    }

    /// `# key=value ...` with every key.
    pub fn header_line(&self) -> String {
        let mut s = String::from("#");
        for k in KEYS {
            let _ = write!(s, " {k}={}", self.get(k).unwrap_or_default());
        }
        s
    }

    pub fn grid(&self) -> Result<LatticeGrid> {
        LatticeGrid::from_extent(self.sites, self.epsilon, self.x_min)
    }

    pub fn bh_params(&self) -> Result<SchwarzschildParams> {
        SchwarzschildParams::new(self.rg, self.lambda)
    }

    pub fn build_field(&self) -> Result<CoinAngleField> {
        Ok(match self.field {
            FieldKind::Constant => CoinAngleField::Constant { theta: self.theta0 },
            FieldKind::Smooth => CoinAngleField::SmoothTest {
                theta0: self.theta0,
                amplitude: self.amp,
                wavenumber: self.wavenumber,
                omega: self.omega,
            },
            FieldKind::Schwarzschild => CoinAngleField::Schwarzschild(self.bh_params()?),
            FieldKind::Tabulated => {
                let path = self.table.as_ref().ok_or_else(|| bad("table", "required when field=tabulated"))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| bad("table", format!("cannot read {}: {e}", path.display())))?;
                CoinAngleField::UserTabulated(TabulatedAngles::parse(&text)?)
            }
        })
    }

    /// Geodesic starting points, defaulting to `(0, x0)`.
    pub fn starts(&self) -> Vec<(f64, f64)> {
        if self.geodesic_starts.is_empty() {
            vec![(0.0, self.x0)]
        } else {
            self.geodesic_starts.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_key_round_trips() {
        let cfg = RunConfig {
            geodesic_starts: vec![(0.0, 100.0), (1.5, 20.25)],
            panel: Some(Panel::C),
            table: Some(PathBuf::from("angles.txt")),
            ..RunConfig::default()
        };
        let mut back = RunConfig::default();
        for k in KEYS {
            back.set(k, &cfg.get(k).unwrap()).unwrap();
        }
        assert_eq!(back, cfg);
    }

    #[test]
    fn header_lists_keys_in_order() {
        let h = RunConfig::default().header_line();
        assert!(h.starts_with("# field=schwarzschild theta0="));
        let names: Vec<&str> = h[2..].split(' ').map(|kv| kv.split_once('=').unwrap().0).collect();
        assert_eq!(names, KEYS);
    }

    #[test]
    fn later_layers_win() {
        let mut cfg = RunConfig::default();
        cfg.apply_preset(Preset::Panel(Panel::D));
        assert_eq!((cfg.lambda, cfg.x0), (0.7, 180.0));
        cfg.apply_text("# comment\nlambda = 0.8\n\nx0=150 # trailing\n").unwrap();
        assert_eq!((cfg.lambda, cfg.x0), (0.8, 150.0));
        cfg.set("lambda", "0.9").unwrap();
        assert_eq!(cfg.lambda, 0.9);
    }

    #[test]
    fn messages_name_the_field() {
        let mut cfg = RunConfig::default();
        let e = cfg.set("epsilon", "abc").unwrap_err().to_string();
        assert!(e.contains("epsilon"), "{e}");
        cfg.epsilon = -1.0;
        let e = cfg.validate().unwrap_err().to_string();
        assert!(e.contains("epsilon") && e.contains("positive"), "{e}");
        assert!(cfg.set("nope", "1").unwrap_err().to_string().contains("nope"));
        let e = RunConfig { stride: 0, ..RunConfig::default() }.validate().unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn tabulated_needs_a_table() {
        let mut cfg = RunConfig::default();
        cfg.set("field", "tabulated").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().starts_with("configuration error: table"));
    }
}
