//! Radial Schwarzschild geometry in Lemaître coordinates `(T, X) = (τ, λρ)`.
//!
//! The coin field is `cos θ = λ √(r / r_g)` on the domain `𝒟` where
//! `λT ≤ X ≤ λT + 2 r_g / (3λ²)`. Outside `𝒟` it is clamped: `θ = 0` beyond
//! the right edge (free propagation at unit speed) and `θ = π/2` behind the
//! singularity line `X = λT`. Both clamps are continuous.

use std::f64::consts::FRAC_PI_2;

use crate::coin::CoinAngleField;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchwarzschildParams {
    pub rg: f64,
    pub lambda: f64,
}

impl SchwarzschildParams {
    pub fn new(rg: f64, lambda: f64) -> Result<Self> {
        if !(rg > 0.0 && rg.is_finite()) {
            return Err(Error::Config(format!("rg must be positive and finite, got {rg}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive and finite, got {lambda}")));
        }
        Ok(SchwarzschildParams { rg, lambda })
    }

    /// Position of the singularity `r = 0` at time `t`.
    pub fn singularity_x(&self, t: f64) -> f64 {
        self.lambda * t
    }

    /// Position of the event horizon `r = r_g` at time `t`.
    pub fn horizon_x(&self, t: f64) -> f64 {
        self.lambda * t + 2.0 / 3.0 * self.lambda * self.rg
    }

    /// Right edge of `𝒟`, where `cos θ` reaches 1.
    pub fn domain_boundary_x(&self, t: f64) -> f64 {
        self.lambda * t + 2.0 * self.rg / (3.0 * self.lambda * self.lambda)
    }

    /// `X/λ − T`, clamped at zero on the singularity line.
    fn lemaitre_gap(&self, t: f64, x: f64) -> f64 {
        (x / self.lambda - t).max(0.0)
    }
}

/// `r(T, X) = [ (3/2)(X/λ − T) ]^{2/3} r_g^{1/3}`, defined for `X ≥ λT`.
pub fn radius(p: &SchwarzschildParams, t: f64, x: f64) -> Result<f64> {
    if x < p.singularity_x(t) {
        return Err(Error::Domain(format!(
            "radius undefined at (T, X) = ({t}, {x}): requires X ≥ λT = {}",
            p.singularity_x(t)
        )));
    }
    let q = (1.5 * p.lemaitre_gap(t, x) / p.rg).cbrt();
    Ok(p.rg * q * q)
}

/// `λT ≤ X ≤ λT + 2 r_g / (3λ²)`.
pub fn in_domain_d(p: &SchwarzschildParams, t: f64, x: f64) -> bool {
    x >= p.singularity_x(t) && x <= p.domain_boundary_x(t)
}

/// Clamped `cos θ ∈ [0, 1]`.
pub fn cos_theta_bh(p: &SchwarzschildParams, t: f64, x: f64) -> f64 {
    if x < p.singularity_x(t) {
        return 0.0;
    }
    // λ √(r/r_g) = λ ((3/2)(X/λ − T)/r_g)^{1/3}
    (p.lambda * (1.5 * p.lemaitre_gap(t, x) / p.rg).cbrt()).min(1.0)
}

pub fn coin_angle_bh(p: &SchwarzschildParams, t: f64, x: f64) -> f64 {
    if x < p.singularity_x(t) {
        return FRAC_PI_2;
    }
    cos_theta_bh(p, t, x).acos()
}

/// `(∂_T cos θ, ∂_X cos θ)`. On the clamp seams the one-sided limit from the
/// clamped side (zero) is returned.
pub fn cos_gradient_bh(p: &SchwarzschildParams, t: f64, x: f64) -> (f64, f64) {
    let gap = x / p.lambda - t;
    if gap <= 0.0 || cos_theta_bh(p, t, x) >= 1.0 {
        return (0.0, 0.0);
    }
    let k = (1.5 / p.rg).cbrt() / (3.0 * gap.cbrt().powi(2));
    (-p.lambda * k, k)
}

/// `(θ_T, θ_X)`, zero on the clamp seams.
pub fn angle_gradient_bh(p: &SchwarzschildParams, t: f64, x: f64) -> (f64, f64) {
    let c = cos_theta_bh(p, t, x);
    let s = (1.0 - c * c).max(0.0).sqrt();
    if s == 0.0 {
        return (0.0, 0.0);
    }
    let (ct, cx) = cos_gradient_bh(p, t, x);
    (-ct / s, -cx / s)
}

pub fn make_bh_field(p: SchwarzschildParams) -> CoinAngleField {
    CoinAngleField::Schwarzschild(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    ReachedSingularity,
    LeftGrid,
    MaxTime,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ReachedSingularity => "reached-singularity",
            Termination::LeftGrid => "left-grid",
            Termination::MaxTime => "max-time",
        }
    }
}

/// A null geodesic `dX/dT = s cos θ(T, X)` sampled at every integrator step.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicTrack {
    pub sign: i8,
    pub samples: Vec<(f64, f64)>,
    pub termination: Termination,
}

impl GeodesicTrack {
    pub fn t_range(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    pub fn end(&self) -> (f64, f64) {
        self.samples[self.samples.len() - 1]
    }

    /// Linear interpolation of the track at time `t`, `None` outside its range.
    pub fn x_at(&self, t: f64) -> Option<f64> {
        let (t0, t1) = self.t_range();
        if t < t0 || t > t1 {
            return None;
        }
        let k = self.samples.partition_point(|s| s.0 < t);
        if k == 0 {
            return Some(self.samples[0].1);
        }
        let (ta, xa) = self.samples[k - 1];
        let (tb, xb) = self.samples[k];
        Some(xa + (xb - xa) * (t - ta) / (tb - ta))
    }
}

/// Integrate a radial null geodesic with classical RK4.
///
/// Stops when the track comes within `λ dT` of the singularity line, reaches
/// `t_max`, or leaves `window` (an `[x_lo, x_hi]` range) when one is given.
pub fn integrate_null_geodesic(
    p: &SchwarzschildParams,
    start: (f64, f64),
    sign: i8,
    dt: f64,
    t_max: f64,
    window: Option<(f64, f64)>,
) -> Result<GeodesicTrack> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("geodesic step must be positive, got {dt}")));
    }
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidInput(format!("geodesic sign must be ±1, got {sign}")));
    }
    let (t0, x0) = start;
    if !t0.is_finite() || !x0.is_finite() || !t_max.is_finite() {
        return Err(Error::InvalidInput("geodesic start and t_max must be finite".into()));
    }
    if x0 < p.singularity_x(t0) {
        return Err(Error::Domain(format!(
            "geodesic start ({t0}, {x0}) violates X ≥ λT (λT = {})",
            p.singularity_x(t0)
        )));
    }
    let s = f64::from(sign);
    let rhs = |t: f64, x: f64| s * cos_theta_bh(p, t, x);
    let mut samples = vec![(t0, x0)];
    let (mut t, mut x) = (t0, x0);
    let near_singularity = |t: f64, x: f64| x - p.singularity_x(t) < dt * p.lambda;
    let outside = |x: f64| window.is_some_and(|(lo, hi)| x < lo || x > hi);

    let termination = loop {
        if near_singularity(t, x) {
            break Termination::ReachedSingularity;
        }
        if outside(x) {
            break Termination::LeftGrid;
        }
        if t >= t_max {
            break Termination::MaxTime;
        }
        // sample times are t0 + k dT, not accumulated sums
        let t_next = (t0 + (samples.len() as f64) * dt).min(t_max);
        let h = t_next - t;
        let k1 = rhs(t, x);
        let k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
        let k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
        let k4 = rhs(t_next, x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = t_next;
        samples.push((t, x));
    };
    Ok(GeodesicTrack { sign, samples, termination })
}
