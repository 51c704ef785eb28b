//! The continuum description of the two-step walk.
//!
//! In the spin basis `(b_L, b_R)` the limit obeys `Ψ_T + cos θ P Ψ_X = Q Ψ`.
//! Rotating to the eigenbasis `(b₋, b₊)` of `P` decouples it into two
//! transport equations
//!
//! ```text
//! ψ⁻_T − cos θ ψ⁻_X + (θ_X/2) sin θ ψ⁻ = 0
//! ψ⁺_T + cos θ ψ⁺_X − (θ_X/2) sin θ ψ⁺ = 0
//! ```
//!
//! which [`evolve_pde`] integrates with a first-order upwind scheme. This is
//! an oracle for the walk, independent of the lattice kernel. The module
//! also carries the metric `diag(1, −1/cos²θ)`, its diad and gamma matrices.
//! Everything here assumes `cos θ > 0`.

use num_complex::Complex64;

use crate::coin::{coin_from_cos_sin, AngleField, CoinMatrix};
use crate::walk::compensated_sum;
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub type Spinor = (Complex64, Complex64);

/// Change of basis from `(b_L, b_R)` to `(b₋, b₊)` with
/// `b₋ = i cos(θ/2) b_L − sin(θ/2) b_R` and `b₊ = i sin(θ/2) b_L + cos(θ/2) b_R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinBasisRotation {
    pub theta: f64,
    pub b_minus: Spinor,
    pub b_plus: Spinor,
}

impl SpinBasisRotation {
    pub fn new(theta: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        SpinBasisRotation {
            theta,
            b_minus: (I * c, Complex64::new(-s, 0.0)),
            b_plus: (I * s, Complex64::new(c, 0.0)),
        }
    }

    /// Columns are `b₋` and `b₊`.
    pub fn matrix(&self) -> CoinMatrix {
        CoinMatrix::new(self.b_minus.0, self.b_plus.0, self.b_minus.1, self.b_plus.1)
    }

    /// Components `(ψ⁻, ψ⁺) = (⟨b₋|Ψ⟩, ⟨b₊|Ψ⟩)`.
    pub fn to_eigenbasis(&self, psi: Spinor) -> Spinor {
        (
            self.b_minus.0.conj() * psi.0 + self.b_minus.1.conj() * psi.1,
            self.b_plus.0.conj() * psi.0 + self.b_plus.1.conj() * psi.1,
        )
    }

    pub fn from_eigenbasis(&self, comps: Spinor) -> Spinor {
        (
            comps.0 * self.b_minus.0 + comps.1 * self.b_plus.0,
            comps.0 * self.b_minus.1 + comps.1 * self.b_plus.1,
        )
    }
}

/// Components of `psi` on `(b₋, b₊)` at angle `theta`.
pub fn to_eigenbasis(psi: Spinor, theta: f64) -> Spinor {
    SpinBasisRotation::new(theta).to_eigenbasis(psi)
}

/// `P(θ)`; identical in form to the coin `B(θ)`.
pub fn p_matrix(theta: f64) -> CoinMatrix {
    let (s, c) = theta.sin_cos();
    coin_from_cos_sin(c, s)
}

/// `Q(θ, θ_T, θ_X)` on `(b_L, b_R)`.
pub fn q_matrix(theta: f64, theta_t: f64, theta_x: f64) -> CoinMatrix {
    let (s2, c2) = (2.0 * theta).sin_cos();
    CoinMatrix::new(
        Complex64::new(-theta_x * s2 / 2.0, 0.0),
        0.5 * I * (theta_t - theta_x * c2),
        0.5 * I * (theta_t + theta_x * c2),
        Complex64::new(theta_x * s2 / 2.0, 0.0),
    )
}

/// `Ψ_T + cos θ P Ψ_X − Q Ψ` at `point`, with central differences of step `h`.
pub fn pde_residual_lr<P, F>(psi: P, field: &F, point: (f64, f64), h: f64) -> Result<Spinor>
where
    P: Fn(f64, f64) -> Spinor,
    F: AngleField + ?Sized,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("difference step must be positive, got {h}")));
    }
    let (t, x) = point;
    let diff = |a: Spinor, b: Spinor| ((a.0 - b.0) / (2.0 * h), (a.1 - b.1) / (2.0 * h));
    let psi_t = diff(psi(t + h, x), psi(t - h, x));
    let psi_x = diff(psi(t, x + h), psi(t, x - h));
    let center = psi(t, x);
    let theta = field.angle(t, x)?;
    let (theta_t, theta_x) = field.gradient(t, x)?;
    let transport = p_matrix(theta).apply(psi_x.0, psi_x.1);
    let source = q_matrix(theta, theta_t, theta_x).apply(center.0, center.1);
    let c = theta.cos();
    Ok((psi_t.0 + c * transport.0 - source.0, psi_t.1 + c * transport.1 - source.1))
}

fn positive_cos<F: AngleField + ?Sized>(field: &F, t: f64, x: f64) -> Result<f64> {
    let (c, _) = field.cos_sin(t, x)?;
    if c > 0.0 {
        Ok(c)
    } else {
        Err(Error::Domain(format!("cos θ = {c} ≤ 0 at (T, X) = ({t}, {x})")))
    }
}

/// Covariant metric `G = diag(1, −1/cos²θ)` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metric2D {
    pub g_tt: f64,
    pub g_xx: f64,
}

impl Metric2D {
    pub fn at<F: AngleField + ?Sized>(field: &F, t: f64, x: f64) -> Result<Self> {
        let c = positive_cos(field, t, x)?;
        Ok(Metric2D { g_tt: 1.0, g_xx: -1.0 / (c * c) })
    }

    pub fn determinant(&self) -> f64 {
        self.g_tt * self.g_xx
    }

    /// `√(−G)`, the weight of the volume element `𝒟_G X = √(−G) dX`.
    pub fn volume_weight(&self) -> f64 {
        (-self.determinant()).sqrt()
    }

    pub fn inner(&self, u: (f64, f64), v: (f64, f64)) -> f64 {
        self.g_tt * u.0 * v.0 + self.g_xx * u.1 * v.1
    }
}

pub const GAMMA0: CoinMatrix = CoinMatrix {
    entries: [
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
    ],
};

pub const GAMMA1: CoinMatrix = CoinMatrix {
    entries: [
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 0.0),
    ],
};

/// Orthonormal frame `e₀ = e_T`, `e₁ = cos θ e_X`, as `(T, X)` components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diad {
    pub e0: (f64, f64),
    pub e1: (f64, f64),
}

impl Diad {
    pub fn at<F: AngleField + ?Sized>(field: &F, t: f64, x: f64) -> Result<Self> {
        let c = positive_cos(field, t, x)?;
        Ok(Diad { e0: (1.0, 0.0), e1: (0.0, c) })
    }
}

/// Largest entry of `|γ⁰γ⁰ − I|`, `|γ¹γ¹ + I|` and `|γ⁰γ¹ + γ¹γ⁰|`.
pub fn gamma_algebra_defect() -> f64 {
    let neg_id = CoinMatrix::new(-CoinMatrix::IDENTITY.entries[0], ZERO, ZERO, -CoinMatrix::IDENTITY.entries[3]);
    let zero = CoinMatrix::new(ZERO, ZERO, ZERO, ZERO);
    let a = GAMMA0.mul(&GAMMA1);
    let b = GAMMA1.mul(&GAMMA0);
    let anti = CoinMatrix::new(a.entries[0] + b.entries[0], a.entries[1] + b.entries[1], a.entries[2] + b.entries[2], a.entries[3] + b.entries[3]);
    GAMMA0
        .mul(&GAMMA0)
        .max_deviation(&CoinMatrix::IDENTITY)
        .max(GAMMA1.mul(&GAMMA1).max_deviation(&neg_id))
        .max(anti.max_deviation(&zero))
}

/// Max over `points` of `|G(e_a, e_b) − η_ab|`, `η = diag(1, −1)`.
pub fn diad_orthonormality_check<F: AngleField + ?Sized>(field: &F, points: &[(f64, f64)]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &(t, x) in points {
        let g = Metric2D::at(field, t, x)?;
        let d = Diad::at(field, t, x)?;
        let dev = [
            (g.inner(d.e0, d.e0) - 1.0).abs(),
            g.inner(d.e0, d.e1).abs(),
            (g.inner(d.e1, d.e1) + 1.0).abs(),
        ];
        worst = dev.iter().copied().fold(worst, f64::max);
    }
    Ok(worst)
}

/// `ψ⁻`, `ψ⁺` on the uniform grid `X_i = x_min + i h` at time `time`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuumState {
    pub x_min: f64,
    pub h: f64,
    pub time: f64,
    pub minus: Vec<Complex64>,
    pub plus: Vec<Complex64>,
}

impl ContinuumState {
    /// Sample `psi_lr` on the grid and rotate each node to `(b₋, b₊)`.
    pub fn from_lr<F, P>(x_min: f64, h: f64, nodes: usize, time: f64, field: &F, psi_lr: P) -> Result<Self>
    where
        F: AngleField + ?Sized,
        P: Fn(f64) -> Spinor,
    {
        if !(h > 0.0 && h.is_finite()) || nodes < 2 {
            return Err(Error::Config(format!("continuum grid needs h > 0 and at least 2 nodes (h={h}, nodes={nodes})")));
        }
        let mut minus = Vec::with_capacity(nodes);
        let mut plus = Vec::with_capacity(nodes);
        for i in 0..nodes {
            let x = x_min + i as f64 * h;
            let (m, p) = to_eigenbasis(psi_lr(x), field.angle(time, x)?);
            minus.push(m);
            plus.push(p);
        }
        Ok(ContinuumState { x_min, h, time, minus, plus })
    }

    /// Gaussian density `exp(−(X−X₀)²/(2ΔX₀²)) / (√(2π) ΔX₀)` carried by the
    /// normalized spinor `spin_mix`, so that `∫ |Ψ|² dX = 1`.
    pub fn gaussian<F: AngleField + ?Sized>(
        x_min: f64,
        h: f64,
        nodes: usize,
        field: &F,
        x0: f64,
        dx0: f64,
        spin_mix: Spinor,
    ) -> Result<Self> {
        let w = (spin_mix.0.norm_sqr() + spin_mix.1.norm_sqr()).sqrt();
        if !(w > 0.0) || !(dx0 > 0.0) {
            return Err(Error::Config("gaussian needs a nonzero spinor and positive width".into()));
        }
        let amp = (2.0 * std::f64::consts::PI).powf(-0.25) / dx0.sqrt();
        ContinuumState::from_lr(x_min, h, nodes, 0.0, field, |x| {
            let z = (x - x0) / dx0;
            let root = amp * (-0.25 * z * z).exp() / w;
            (spin_mix.0 * root, spin_mix.1 * root)
        })
    }

    pub fn len(&self) -> usize {
        self.minus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minus.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.h
    }

    /// `|ψ⁻|² + |ψ⁺|²` per node.
    pub fn density(&self) -> Vec<f64> {
        self.minus.iter().zip(&self.plus).map(|(m, p)| m.norm_sqr() + p.norm_sqr()).collect()
    }

    /// `π(T) = ∫ dX (|ψ⁻|² + |ψ⁺|²)`, trapezoid rule.
    pub fn probability(&self) -> f64 {
        trapezoid(&self.density(), self.h)
    }

    /// Back to `(b_L, b_R)` components.
    pub fn to_lr<F: AngleField + ?Sized>(&self, field: &F) -> Result<Vec<Spinor>> {
        (0..self.len())
            .map(|i| {
                let rot = SpinBasisRotation::new(field.angle(self.time, self.x(i))?);
                Ok(rot.from_eigenbasis((self.minus[i], self.plus[i])))
            })
            .collect()
    }

    /// `Φ = Ψ √cos θ`, on `(b₋, b₊)`.
    pub fn rescaled<F: AngleField + ?Sized>(&self, field: &F) -> Result<Vec<Spinor>> {
        (0..self.len())
            .map(|i| {
                let r = positive_cos(field, self.time, self.x(i))?.sqrt();
                Ok((self.minus[i] * r, self.plus[i] * r))
            })
            .collect()
    }
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values {
        [] => 0.0,
        [v] => *v * h,
        [first, .., last] => h * (compensated_sum(values.iter().copied()) - 0.5 * (first + last)),
    }
}

/// `∫ 𝒟_G X |Φ|² = ∫ dX |Φ|² / cos θ`, trapezoid rule.
pub fn dirac_norm<F: AngleField + ?Sized>(state: &ContinuumState, field: &F) -> Result<f64> {
    let phi = state.rescaled(field)?;
    let weighted = (0..state.len())
        .map(|i| {
            let c = positive_cos(field, state.time, state.x(i))?;
            Ok((phi[i].0.norm_sqr() + phi[i].1.norm_sqr()) / c)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(trapezoid(&weighted, state.h))
}

/// First-order upwind transport of one component with velocity `v_i` and
/// linear source rate `k_i`; no inflow from outside the grid.
fn upwind(a: &[Complex64], v: &[f64], k: &[f64], nu: f64, dt: f64, out: &mut [Complex64]) {
    let n = a.len();
    for i in 0..n {
        let here = a[i];
        let grad = if v[i] >= 0.0 {
            here - if i > 0 { a[i - 1] } else { ZERO }
        } else {
            (if i + 1 < n { a[i + 1] } else { ZERO }) - here
        };
        out[i] = here - nu * v[i] * grad + dt * k[i] * here;
    }
}

/// Advance the transport equations by `steps` steps of `dt`.
///
/// Coefficients are frozen per cell at the step midpoint `T + dt/2`; the
/// source `∓(θ_X/2) sin θ ψ∓` is written as `±(∂_X cos θ / 2) ψ∓`.
pub fn evolve_pde<F: AngleField + ?Sized>(state: &ContinuumState, field: &F, dt: f64, steps: usize) -> Result<ContinuumState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    if dt > state.h * (1.0 + 1e-12) {
        return Err(Error::Config(format!("CFL violated: dT = {dt} > h = {}", state.h)));
    }
    let n = state.len();
    let nu = dt / state.h;
    let mut cur = state.clone();
    let mut next_m = vec![ZERO; n];
    let mut next_p = vec![ZERO; n];
    let (mut vel_m, mut vel_p) = (vec![0.0; n], vec![0.0; n]);
    let (mut src_m, mut src_p) = (vec![0.0; n], vec![0.0; n]);
    let t0 = state.time;
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        let tm = t + 0.5 * dt;
        for i in 0..n {
            let x = cur.x(i);
            let (c, _) = field.cos_sin(tm, x)?;
            let (_, c_x) = field.cos_gradient(tm, x)?;
            vel_p[i] = c;
            vel_m[i] = -c;
            src_p[i] = -0.5 * c_x;
            src_m[i] = 0.5 * c_x;
        }
        upwind(&cur.minus, &vel_m, &src_m, nu, dt, &mut next_m);
        upwind(&cur.plus, &vel_p, &src_p, nu, dt, &mut next_p);
        std::mem::swap(&mut cur.minus, &mut next_m);
        std::mem::swap(&mut cur.plus, &mut next_p);
        cur.time = t0 + (k + 1) as f64 * dt;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::CoinAngleField;
    use crate::schwarzschild::{make_bh_field, SchwarzschildParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, SQRT_2};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigenbasis_at_zero() {
        let psi = (c(0.3, -0.2), c(0.1, 0.7));
        let (m, p) = to_eigenbasis(psi, 0.0);
        assert!((m - (-I * psi.0)).norm() < 1e-16);
        assert!((p - psi.1).norm() < 1e-16);
    }

    #[test]
    fn eigenbasis_at_right_angle() {
        let (m, p) = to_eigenbasis((c(1.0, 0.0), c(0.0, 0.0)), FRAC_PI_2);
        let want = c(0.0, -1.0 / SQRT_2);
        assert!((m - want).norm() < 1e-15 && (p - want).norm() < 1e-15);
    }

    #[test]
    fn rotation_is_unitary_and_diagonalizes_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let eps4 = 4.0 * f64::EPSILON;
        for _ in 0..1000 {
            let theta = rng.gen_range(-PI..PI);
            let rot = SpinBasisRotation::new(theta);
            let u = rot.matrix();
            assert!(u.adjoint().mul(&u).max_deviation(&CoinMatrix::IDENTITY) < eps4);
            let p = p_matrix(theta);
            let pm = p.apply(rot.b_minus.0, rot.b_minus.1);
            let pp = p.apply(rot.b_plus.0, rot.b_plus.1);
            assert!((pm.0 + rot.b_minus.0).norm() < 1e-14 && (pm.1 + rot.b_minus.1).norm() < 1e-14);
            assert!((pp.0 - rot.b_plus.0).norm() < 1e-14 && (pp.1 - rot.b_plus.1).norm() < 1e-14);
            let psi = (c(rng.gen(), rng.gen()), c(rng.gen(), rng.gen()));
            let e = rot.to_eigenbasis(psi);
            let n0 = psi.0.norm_sqr() + psi.1.norm_sqr();
            assert!((e.0.norm_sqr() + e.1.norm_sqr() - n0).abs() < 1e-14);
            let back = rot.from_eigenbasis(e);
            assert!((back.0 - psi.0).norm() < 1e-15 && (back.1 - psi.1).norm() < 1e-15);
        }
    }

    #[test]
    fn residual_of_zero_and_bad_step() {
        let f = CoinAngleField::SmoothTest { theta0: 0.5, amplitude: 0.2, wavenumber: 0.1, omega: 0.1 };
        let zero = |_: f64, _: f64| (ZERO, ZERO);
        let r = pde_residual_lr(zero, &f, (1.0, 2.0), 0.01).unwrap();
        assert_eq!((r.0, r.1), (ZERO, ZERO));
        assert!(matches!(pde_residual_lr(zero, &f, (1.0, 2.0), 0.0), Err(Error::InvalidInput(_))));
        assert!(matches!(pde_residual_lr(zero, &f, (1.0, 2.0), -1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn residual_of_non_solution_stays_finite() {
        let f = CoinAngleField::Constant { theta: 0.7 };
        // static Gaussian in b_L only: not transported, so not a solution
        let psi = |_: f64, x: f64| (c((-x * x).exp(), 0.0), ZERO);
        let norm = |h: f64| {
            let r = pde_residual_lr(psi, &f, (0.0, 0.3), h).unwrap();
            (r.0.norm_sqr() + r.1.norm_sqr()).sqrt()
        };
        let (a, b) = (norm(1e-2), norm(1e-3));
        assert!(a > 0.1 && b > 0.1 && (a - b).abs() < 1e-3);
    }

    #[test]
    fn metric_and_diad() {
        let fields = [
            CoinAngleField::Constant { theta: 0.4 },
            CoinAngleField::SmoothTest { theta0: 0.5, amplitude: 0.2, wavenumber: 0.1, omega: 0.1 },
        ];
        let pts: Vec<(f64, f64)> = (0..50).map(|k| (0.3 * k as f64, -7.0 + 0.7 * k as f64)).collect();
        for f in &fields {
            for &(t, x) in &pts {
                let g = Metric2D::at(f, t, x).unwrap();
                let cos = f.angle(t, x).unwrap().cos();
                assert!((g.volume_weight() * cos - 1.0).abs() < 1e-14);
                assert!(g.g_tt * g.g_xx < 0.0);
            }
            assert!(diad_orthonormality_check(f, &pts).unwrap() < 1e-13);
        }
        assert_eq!(gamma_algebra_defect(), 0.0);
    }

    #[test]
    fn diad_on_schwarzschild_domain() {
        let p = SchwarzschildParams::new(150.0, 1.0).unwrap();
        let f = make_bh_field(p);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts: Vec<(f64, f64)> = (0..100)
            .map(|_| {
                let t = rng.gen_range(0.0..200.0);
                // strictly inside so that cos θ > 0
                (t, p.singularity_x(t) + rng.gen_range(1e-3..1.0) * (p.domain_boundary_x(t) - p.singularity_x(t)))
            })
            .collect();
        assert!(diad_orthonormality_check(&f, &pts).unwrap() < 1e-13);
        assert!(matches!(diad_orthonormality_check(&f, &[(10.0, 10.0)]), Err(Error::Domain(_))));
    }

    fn gaussian_state<F: AngleField>(f: &F, x0: f64, sigma: f64, h: f64, lo: f64, hi: f64, mix: Spinor) -> ContinuumState {
        let n = ((hi - lo) / h).round() as usize + 1;
        ContinuumState::gaussian(lo, h, n, f, x0, sigma, mix).unwrap()
    }

    fn peak(values: &[f64], xs: impl Fn(usize) -> f64) -> f64 {
        let i = values.iter().enumerate().fold(0, |b, (i, v)| if *v > values[b] { i } else { b });
        xs(i)
    }

    #[test]
    fn flat_transport_is_exact_shift() {
        let f = CoinAngleField::Constant { theta: 0.0 };
        let h = 0.05;
        // pure b₊ = b_R content moves right
        let s = gaussian_state(&f, 0.0, 1.0, h, -20.0, 40.0, (ZERO, c(1.0, 0.0)));
        let out = evolve_pde(&s, &f, h, 200).unwrap();
        let d: Vec<f64> = out.plus.iter().map(|a| a.norm_sqr()).collect();
        assert!((peak(&d, |i| out.x(i)) - 10.0).abs() <= h);
        for i in 200..out.len() {
            assert!((out.plus[i] - s.plus[i - 200]).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_angle_speed() {
        let f = CoinAngleField::Constant { theta: FRAC_PI_3 };
        let h = 0.02;
        let rot = SpinBasisRotation::new(FRAC_PI_3);
        for (mix, dir) in [(rot.b_plus, 1.0), (rot.b_minus, -1.0)] {
            let s = gaussian_state(&f, 0.0, 1.0, h, -20.0, 20.0, mix);
            let t_end = 10.0;
            let out = evolve_pde(&s, &f, h, (t_end / h).round() as usize).unwrap();
            let d = out.density();
            let x_peak = peak(&d, |i| out.x(i));
            assert!((x_peak - dir * t_end / 2.0).abs() <= 2.0 * h, "peak at {x_peak}");
        }
    }

    #[test]
    fn smooth_field_conserves_probability() {
        let f = CoinAngleField::SmoothTest { theta0: 0.5, amplitude: 0.2, wavenumber: 0.1, omega: 0.1 };
        let h = 0.05;
        let s = gaussian_state(&f, 0.0, 3.0, h, -90.0, 90.0, (c(1.0, 0.0), c(0.0, 1.0)));
        let p0 = s.probability();
        let out = evolve_pde(&s, &f, h, 1000).unwrap();
        assert!(((out.probability() - p0) / p0).abs() < 0.02);
        assert!((out.time - 50.0).abs() < 1e-12);
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let f = CoinAngleField::Constant { theta: 0.2 };
        let s = gaussian_state(&f, 0.0, 1.0, 0.1, -10.0, 10.0, (c(1.0, 0.0), ZERO));
        assert!(matches!(evolve_pde(&s, &f, 0.11, 1), Err(Error::Config(_))));
    }

    #[test]
    fn dirac_norm_identities() {
        let f = CoinAngleField::SmoothTest { theta0: 0.5, amplitude: 0.2, wavenumber: 0.1, omega: 0.1 };
        let s = gaussian_state(&f, 1.0, 2.0, 0.05, -30.0, 30.0, (c(1.0, 0.0), c(0.0, 1.0)));
        assert!((dirac_norm(&s, &f).unwrap() - 1.0).abs() < 1e-6);
        assert!((dirac_norm(&s, &f).unwrap() - s.probability()).abs() < 1e-12);
        let mut z = s.clone();
        z.minus.iter_mut().chain(z.plus.iter_mut()).for_each(|a| *a = ZERO);
        assert_eq!(dirac_norm(&z, &f).unwrap(), 0.0);
        let bad = CoinAngleField::Constant { theta: 2.0 };
        assert!(matches!(dirac_norm(&s, &bad), Err(Error::Domain(_))));
    }

    #[test]
    fn lr_round_trip() {
        let f = CoinAngleField::SmoothTest { theta0: 0.5, amplitude: 0.2, wavenumber: 0.3, omega: 0.1 };
        let psi = |x: f64| (c(x.sin(), 0.2), c(0.1, x.cos()));
        let s = ContinuumState::from_lr(-3.0, 0.1, 61, 0.0, &f, psi).unwrap();
        let lr = s.to_lr(&f).unwrap();
        for (i, v) in lr.iter().enumerate() {
            let w = psi(s.x(i));
            assert!((v.0 - w.0).norm() < 1e-15 && (v.1 - w.1).norm() < 1e-15);
        }
    }

    /// Central-difference residual of the discrete upwind solution shrinks
    /// linearly with the grid, consistent with a first-order scheme.
    #[test]
    fn residual_of_numerical_solution_is_first_order() {
        let f = CoinAngleField::SmoothTest { theta0: 0.8, amplitude: 0.1, wavenumber: 0.2, omega: 0.1 };
        let residual_at = |h: f64| {
            let s = gaussian_state(&f, 0.0, 1.0, h, -15.0, 15.0, (c(1.0, 0.0), c(0.0, 1.0)));
            let t_mid = 2.0;
            let k = (t_mid / h).round() as usize;
            let before = evolve_pde(&s, &f, h, k - 1).unwrap();
            let at = evolve_pde(&before, &f, h, 1).unwrap();
            let after = evolve_pde(&at, &f, h, 1).unwrap();
            let frames = [before.to_lr(&f).unwrap(), at.to_lr(&f).unwrap(), after.to_lr(&f).unwrap()];
            let x_probe = 1.2;
            let lookup = |t: f64, x: f64| {
                let it = ((t - t_mid) / h).round() as isize + 1;
                let ix = ((x - s.x_min) / h).round() as usize;
                frames[it as usize][ix]
            };
            let r = pde_residual_lr(lookup, &f, (at.time, x_probe), h).unwrap();
            (r.0.norm_sqr() + r.1.norm_sqr()).sqrt()
        };
        let coarse = residual_at(0.02);
        let fine = residual_at(0.01);
        let ratio = coarse / fine;
        assert!((ratio - 2.0).abs() < 0.6, "ratio {ratio}");
    }
}
