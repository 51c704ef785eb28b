//! The quantum coin `B(θ)` and the coin-angle fields that drive a walk.

use num_complex::Complex64;

use crate::schwarzschild::{self, SchwarzschildParams};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A 2×2 complex matrix on the spin basis `(b_L, b_R)`, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoinMatrix {
    pub entries: [Complex64; 4],
}

impl CoinMatrix {
    pub const IDENTITY: CoinMatrix = CoinMatrix {
        entries: [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ],
    };

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        CoinMatrix { entries: [a, b, c, d] }
    }

    #[inline]
    pub fn apply(&self, left: Complex64, right: Complex64) -> (Complex64, Complex64) {
        let [a, b, c, d] = self.entries;
        (a * left + b * right, c * left + d * right)
    }

    pub fn mul(&self, rhs: &CoinMatrix) -> CoinMatrix {
        let [a, b, c, d] = self.entries;
        let [e, f, g, h] = rhs.entries;
        CoinMatrix::new(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
    }

    pub fn adjoint(&self) -> CoinMatrix {
        let [a, b, c, d] = self.entries;
        CoinMatrix::new(a.conj(), c.conj(), b.conj(), d.conj())
    }

    pub fn det(&self) -> Complex64 {
        let [a, b, c, d] = self.entries;
        a * d - b * c
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_deviation(&self, other: &CoinMatrix) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

/// `B(θ) = [[-cos θ, i sin θ], [-i sin θ, cos θ]]`.
pub fn build_coin(theta: f64) -> Result<CoinMatrix> {
    if !theta.is_finite() {
        return Err(Error::InvalidInput(format!("coin angle must be finite, got {theta}")));
    }
    let (s, c) = theta.sin_cos();
    Ok(coin_from_cos_sin(c, s))
}

#[inline]
pub(crate) fn coin_from_cos_sin(c: f64, s: f64) -> CoinMatrix {
    CoinMatrix::new(
        Complex64::new(-c, 0.0),
        I * s,
        -I * s,
        Complex64::new(c, 0.0),
    )
}

/// Anything that assigns a coin angle to a point `(T, X)` of dimensionless
/// space-time.
///
/// Implementations must be pure. `gradient` returns `(θ_T, θ_X)`; the default
/// `cos_sin` and `cos_gradient` derive from `angle` and `gradient`, and kinds
/// with a closed form for `cos θ` override them.
pub trait AngleField: Sync {
    fn angle(&self, t: f64, x: f64) -> Result<f64>;

    fn gradient(&self, t: f64, x: f64) -> Result<(f64, f64)>;

    fn cos_sin(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        let (s, c) = self.angle(t, x)?.sin_cos();
        Ok((c, s))
    }

    /// `(∂_T cos θ, ∂_X cos θ)`.
    fn cos_gradient(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        let s = self.angle(t, x)?.sin();
        let (dt, dx) = self.gradient(t, x)?;
        Ok((-s * dt, -s * dx))
    }
}

/// Angles sampled on a regular `(T, X)` grid, evaluated by bilinear
/// interpolation. Only continuous, so not suitable for convergence studies.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedAngles {
    pub t0: f64,
    pub dt: f64,
    pub x0: f64,
    pub dx: f64,
    pub nt: usize,
    pub nx: usize,
    /// Row-major, one row per time sample.
    pub values: Vec<f64>,
}

impl TabulatedAngles {
    pub fn new(t0: f64, dt: f64, x0: f64, dx: f64, nt: usize, nx: usize, values: Vec<f64>) -> Result<Self> {
        if nt < 2 || nx < 2 {
            return Err(Error::InvalidInput("tabulated field needs at least 2×2 samples".into()));
        }
        if !(dt > 0.0 && dx > 0.0) || !t0.is_finite() || !x0.is_finite() {
            return Err(Error::InvalidInput("tabulated field spacings must be positive".into()));
        }
        if values.len() != nt * nx {
            return Err(Error::InvalidInput(format!(
                "tabulated field expects {} values, got {}",
                nt * nx,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("tabulated angles must be finite".into()));
        }
        Ok(TabulatedAngles { t0, dt, x0, dx, nt, nx, values })
    }

    /// Parse whitespace-separated `T X theta` rows (`#` starts a comment).
    /// Rows must cover a full tensor grid, ordered by T then X.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|w| w.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("angle table line {}: {e}", lineno + 1)))?;
            if nums.len() != 3 {
                return Err(Error::Config(format!("angle table line {}: expected `T X theta`", lineno + 1)));
            }
            rows.push((nums[0], nums[1], nums[2]));
        }
        let Some(&(t0, x0, _)) = rows.first() else {
            return Err(Error::Config("angle table is empty".into()));
        };
        let nx = rows.iter().take_while(|r| r.0 == t0).count();
        if nx < 2 || rows.len() % nx != 0 {
            return Err(Error::Config("angle table is not a full T×X grid".into()));
        }
        let nt = rows.len() / nx;
        let dx = rows[1].1 - x0;
        let dt = if nt > 1 { rows[nx].0 - t0 } else { 0.0 };
        for (k, &(t, x, _)) in rows.iter().enumerate() {
            let (it, ix) = (k / nx, k % nx);
            let (te, xe) = (t0 + it as f64 * dt, x0 + ix as f64 * dx);
            if (t - te).abs() > 1e-9 * (1.0 + te.abs()) || (x - xe).abs() > 1e-9 * (1.0 + xe.abs()) {
                return Err(Error::Config(format!("angle table row {} is off the regular grid", k + 1)));
            }
        }
        TabulatedAngles::new(t0, dt, x0, dx, nt, nx, rows.into_iter().map(|r| r.2).collect())
    }

    fn t_end(&self) -> f64 {
        self.t0 + (self.nt - 1) as f64 * self.dt
    }

    fn x_end(&self) -> f64 {
        self.x0 + (self.nx - 1) as f64 * self.dx
    }

    fn contains(&self, t: f64, x: f64) -> bool {
        t >= self.t0 && t <= self.t_end() && x >= self.x0 && x <= self.x_end()
    }

    fn bilinear(&self, t: f64, x: f64) -> Result<f64> {
        if !self.contains(t, x) {
            return Err(Error::Domain(format!(
                "(T, X) = ({t}, {x}) outside tabulated range [{}, {}] × [{}, {}]",
                self.t0,
                self.t_end(),
                self.x0,
                self.x_end()
            )));
        }
        let ft = (t - self.t0) / self.dt;
        let fx = (x - self.x0) / self.dx;
        let it = (ft.floor() as usize).min(self.nt - 2);
        let ix = (fx.floor() as usize).min(self.nx - 2);
        let (wt, wx) = (ft - it as f64, fx - ix as f64);
        let v = |a: usize, b: usize| self.values[a * self.nx + b];
        Ok((1.0 - wt) * ((1.0 - wx) * v(it, ix) + wx * v(it, ix + 1))
            + wt * ((1.0 - wx) * v(it + 1, ix) + wx * v(it + 1, ix + 1)))
    }

    /// Central difference of step `h`, falling back to one-sided at the edges.
    fn difference(&self, t: f64, x: f64, along_t: bool) -> Result<f64> {
        let h = if along_t { self.dt } else { self.dx };
        let at = |d: f64| if along_t { (t + d, x) } else { (t, x + d) };
        let (tp, xp) = at(h);
        let (tm, xm) = at(-h);
        let fwd = self.contains(tp, xp);
        let bwd = self.contains(tm, xm);
        match (bwd, fwd) {
            (true, true) => Ok((self.bilinear(tp, xp)? - self.bilinear(tm, xm)?) / (2.0 * h)),
            (false, true) => Ok((self.bilinear(tp, xp)? - self.bilinear(t, x)?) / h),
            (true, false) => Ok((self.bilinear(t, x)? - self.bilinear(tm, xm)?) / h),
            (false, false) => Err(Error::Domain(format!("no room for a difference at ({t}, {x})"))),
        }
    }
}

/// The coin-angle field kinds shipped with the simulator.
#[derive(Clone, Debug, PartialEq)]
pub enum CoinAngleField {
    Constant { theta: f64 },
    /// `θ(T, X) = θ₀ + a sin(kX) cos(ωT)`.
    SmoothTest { theta0: f64, amplitude: f64, wavenumber: f64, omega: f64 },
    /// Radial Schwarzschild field in Lemaître coordinates, clamped outside
    /// its validity domain. Continuous everywhere, but `θ` has a square-root
    /// cusp on the domain boundary and `cos θ` is not differentiable at the
    /// singularity.
    Schwarzschild(SchwarzschildParams),
    UserTabulated(TabulatedAngles),
}

impl CoinAngleField {
    pub fn kind_name(&self) -> &'static str {
        match self {
            CoinAngleField::Constant { .. } => "constant",
            CoinAngleField::SmoothTest { .. } => "smooth",
            CoinAngleField::Schwarzschild(_) => "schwarzschild",
            CoinAngleField::UserTabulated(_) => "tabulated",
        }
    }

    /// Whether the kind is twice differentiable everywhere.
    pub fn is_smooth(&self) -> bool {
        matches!(self, CoinAngleField::Constant { .. } | CoinAngleField::SmoothTest { .. })
    }
}

impl AngleField for CoinAngleField {
    fn angle(&self, t: f64, x: f64) -> Result<f64> {
        match self {
            CoinAngleField::Constant { theta } => Ok(*theta),
            CoinAngleField::SmoothTest { theta0, amplitude, wavenumber, omega } => {
                Ok(theta0 + amplitude * (wavenumber * x).sin() * (omega * t).cos())
            }
            CoinAngleField::Schwarzschild(p) => Ok(schwarzschild::coin_angle_bh(p, t, x)),
            CoinAngleField::UserTabulated(tab) => tab.bilinear(t, x),
        }
    }

    fn gradient(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        match self {
            CoinAngleField::Constant { .. } => Ok((0.0, 0.0)),
            CoinAngleField::SmoothTest { amplitude, wavenumber, omega, .. } => {
                let (sx, cx) = (wavenumber * x).sin_cos();
                let (st, ct) = (omega * t).sin_cos();
                Ok((-amplitude * omega * sx * st, amplitude * wavenumber * cx * ct))
            }
            CoinAngleField::Schwarzschild(p) => Ok(schwarzschild::angle_gradient_bh(p, t, x)),
            CoinAngleField::UserTabulated(tab) => {
                Ok((tab.difference(t, x, true)?, tab.difference(t, x, false)?))
            }
        }
    }

    fn cos_sin(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        match self {
            CoinAngleField::Schwarzschild(p) => {
                let c = schwarzschild::cos_theta_bh(p, t, x);
                Ok((c, (1.0 - c * c).max(0.0).sqrt()))
            }
            _ => {
                let (s, c) = self.angle(t, x)?.sin_cos();
                Ok((c, s))
            }
        }
    }

    fn cos_gradient(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        match self {
            CoinAngleField::Schwarzschild(p) => Ok(schwarzschild::cos_gradient_bh(p, t, x)),
            _ => {
                let s = self.angle(t, x)?.sin();
                let (dt, dx) = self.gradient(t, x)?;
                Ok((-s * dt, -s * dx))
            }
        }
    }
}

/// Evaluate `field` at `(T, X)`.
pub fn eval_angle<F: AngleField + ?Sized>(field: &F, t: f64, x: f64) -> Result<f64> {
    field.angle(t, x)
}
