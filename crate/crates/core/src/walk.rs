//! Exact lattice evolution of the walk and probability bookkeeping.
//!
//! One step maps `(ψ^L_{j,m+1}, ψ^R_{j,m−1})` through `B(θ_{j,m})` into
//! `(ψ^L_{j+1,m}, ψ^R_{j+1,m})`. The lattice is finite; amplitude flowing in
//! from beyond either end is zero, which reproduces the walk on `ℤ` exactly
//! as long as nothing reaches the ends. [`run`] enforces that with a guard.

use num_complex::Complex64;

use crate::coin::AngleField;
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Finite window of the lattice `ℤ` with `Δt = Δx = ε` (unit time and length
/// scales, so lattice speed is 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeGrid {
    sites: usize,
    epsilon: f64,
    origin: i64,
}

impl LatticeGrid {
    /// `origin` is the lattice index `m` of array slot 0.
    pub fn new(sites: usize, epsilon: f64, origin: i64) -> Result<Self> {
        if sites == 0 {
            return Err(Error::Config("lattice needs at least one site".into()));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive and finite, got {epsilon}")));
        }
        Ok(LatticeGrid { sites, epsilon, origin })
    }

    /// Grid whose first site is the lattice point nearest to `x_min`.
    pub fn from_extent(sites: usize, epsilon: f64, x_min: f64) -> Result<Self> {
        if !x_min.is_finite() {
            return Err(Error::Config("x_min must be finite".into()));
        }
        LatticeGrid::new(sites, epsilon, (x_min / epsilon).round() as i64)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn dt(&self) -> f64 {
        self.epsilon
    }

    pub fn dx(&self) -> f64 {
        self.epsilon
    }

    /// Lattice index `m` of array slot `i`.
    pub fn lattice_index(&self, i: usize) -> i64 {
        self.origin + i as i64
    }

    /// `x_m = m Δx` for array slot `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.lattice_index(i) as f64 * self.epsilon
    }

    /// `t_j = j Δt`.
    pub fn t(&self, j: u64) -> f64 {
        j as f64 * self.epsilon
    }

    pub fn x_first(&self) -> f64 {
        self.x(0)
    }

    pub fn x_last(&self) -> f64 {
        self.x(self.sites - 1)
    }
}

/// Two-component amplitudes at one time index, stored as interleaved
/// `(ψ^L, ψ^R)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkState {
    grid: LatticeGrid,
    time_index: u64,
    amplitudes: Vec<Complex64>,
}

impl WalkState {
    pub fn zeros(grid: LatticeGrid, time_index: u64) -> Self {
        WalkState { grid, time_index, amplitudes: vec![ZERO; 2 * grid.sites] }
    }

    /// Build from interleaved `(ψ^L, ψ^R)` amplitudes.
    pub fn from_amplitudes(grid: LatticeGrid, time_index: u64, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 2 * grid.sites {
            return Err(Error::InvalidInput(format!(
                "expected {} interleaved amplitudes, got {}",
                2 * grid.sites,
                amplitudes.len()
            )));
        }
        Ok(WalkState { grid, time_index, amplitudes })
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn time_index(&self) -> u64 {
        self.time_index
    }

    pub fn time(&self) -> f64 {
        self.grid.t(self.time_index)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn left(&self, i: usize) -> Complex64 {
        self.amplitudes[2 * i]
    }

    pub fn right(&self, i: usize) -> Complex64 {
        self.amplitudes[2 * i + 1]
    }

    pub fn pairs(&self) -> impl ExactSizeIterator<Item = (Complex64, Complex64)> + '_ {
        self.amplitudes.chunks_exact(2).map(|p| (p[0], p[1]))
    }

    /// Per-site probability `|ψ^L|² + |ψ^R|²`.
    pub fn density(&self) -> Vec<f64> {
        self.pairs().map(|(l, r)| l.norm_sqr() + r.norm_sqr()).collect()
    }

    /// Largest per-amplitude modulus of the difference with `other`.
    pub fn max_deviation(&self, other: &WalkState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Gaussian density `n₀(X) ∝ exp(−(X − X₀)²/(2 ΔX₀²))` carried by the spinor
/// `spin_mix`, renormalized so that the discrete total probability is 1.
pub fn init_gaussian(grid: LatticeGrid, x0: f64, dx0: f64, spin_mix: (Complex64, Complex64)) -> Result<WalkState> {
    if !(dx0 > 0.0 && dx0.is_finite()) || !x0.is_finite() {
        return Err(Error::Config(format!("gaussian needs finite center and positive width, got x0={x0}, dx0={dx0}")));
    }
    if x0 - 8.0 * dx0 < grid.x_first() || x0 + 8.0 * dx0 > grid.x_last() {
        return Err(Error::Config(format!(
            "gaussian support [{}, {}] (8 standard deviations) exceeds grid [{}, {}]",
            x0 - 8.0 * dx0,
            x0 + 8.0 * dx0,
            grid.x_first(),
            grid.x_last()
        )));
    }
    let weight = spin_mix.0.norm_sqr() + spin_mix.1.norm_sqr();
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(Error::Config("spin mix must be a nonzero finite spinor".into()));
    }
    let mut amplitudes = Vec::with_capacity(2 * grid.sites());
    for i in 0..grid.sites() {
        let z = (grid.x(i) - x0) / dx0;
        let root = (-0.25 * z * z).exp();
        amplitudes.push(spin_mix.0 * root);
        amplitudes.push(spin_mix.1 * root);
    }
    let mut state = WalkState { grid, time_index: 0, amplitudes };
    let norm = total_probability(&state).sqrt();
    state.amplitudes.iter_mut().for_each(|a| *a /= norm);
    Ok(state)
}

/// `(cos θ, sin θ)` at every site for time index `j`.
fn coin_row<F: AngleField + ?Sized>(field: &F, grid: &LatticeGrid, j: u64, row: &mut Vec<(f64, f64)>) -> Result<()> {
    let t = grid.t(j);
    row.clear();
    for i in 0..grid.sites() {
        row.push(field.cos_sin(t, grid.x(i))?);
    }
    Ok(())
}

/// One step of the walk, written into `out`.
pub fn step_into<F: AngleField + ?Sized>(
    state: &WalkState,
    field: &F,
    row: &mut Vec<(f64, f64)>,
    out: &mut WalkState,
) -> Result<()> {
    let grid = state.grid;
    let n = grid.sites();
    coin_row(field, &grid, state.time_index, row)?;
    let a = &state.amplitudes;
    out.grid = grid;
    out.time_index = state.time_index + 1;
    out.amplitudes.resize(2 * n, ZERO);
    let o = &mut out.amplitudes;
    for i in 0..n {
        let from_right = if i + 1 < n { a[2 * (i + 1)] } else { ZERO };
        let from_left = if i > 0 { a[2 * (i - 1) + 1] } else { ZERO };
        let (c, s) = row[i];
        o[2 * i] = -c * from_right + I * s * from_left;
        o[2 * i + 1] = -I * s * from_right + c * from_left;
    }
    Ok(())
}

/// Advance one time step.
pub fn step<F: AngleField + ?Sized>(state: &WalkState, field: &F) -> Result<WalkState> {
    let mut out = WalkState::zeros(state.grid, state.time_index);
    let mut row = Vec::with_capacity(state.grid.sites());
    step_into(state, field, &mut row, &mut out)?;
    Ok(out)
}

/// Advance two time steps through the composed two-step equations, with
/// `c_{jm} = cos θ_{jm}` and `s_{jm} = sin θ_{jm}`. Intermediate sites beyond
/// the lattice carry no amplitude, matching [`step`] applied twice.
pub fn step_s2<F: AngleField + ?Sized>(state: &WalkState, field: &F) -> Result<WalkState> {
    let grid = state.grid;
    let n = grid.sites();
    let mut now = Vec::with_capacity(n);
    let mut next = Vec::with_capacity(n);
    coin_row(field, &grid, state.time_index, &mut now)?;
    coin_row(field, &grid, state.time_index + 1, &mut next)?;
    let left = |i: isize| if i >= 0 && (i as usize) < n { state.amplitudes[2 * i as usize] } else { ZERO };
    let right = |i: isize| if i >= 0 && (i as usize) < n { state.amplitudes[2 * i as usize + 1] } else { ZERO };
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let m = i as isize;
        let (c1, s1) = next[i];
        let (mut l, mut r) = (ZERO, ZERO);
        if i + 1 < n {
            let (c0, s0) = now[i + 1];
            let (lp, rm) = (left(m + 2), right(m));
            l += c1 * (c0 * lp - I * s0 * rm);
            r += s1 * (I * c0 * lp + s0 * rm);
        }
        if i > 0 {
            let (c0, s0) = now[i - 1];
            let (lm, rmm) = (left(m), right(m - 2));
            l += s1 * (s0 * lm + I * c0 * rmm);
            r -= c1 * (I * s0 * lm - c0 * rmm);
        }
        out.push(l);
        out.push(r);
    }
    Ok(WalkState { grid, time_index: state.time_index + 2, amplitudes: out })
}

/// Undo one step. `state` is at time index `j + 1`; the coins used are those
/// of time `j`.
pub fn step_inverse<F: AngleField + ?Sized>(state: &WalkState, field: &F) -> Result<WalkState> {
    if state.time_index == 0 {
        return Err(Error::InvalidInput("cannot step back from time index 0".into()));
    }
    let grid = state.grid;
    let n = grid.sites();
    let mut row = Vec::with_capacity(n);
    coin_row(field, &grid, state.time_index - 1, &mut row)?;
    let a = &state.amplitudes;
    let mut out = vec![ZERO; 2 * n];
    // B is its own inverse: (ψ^L_{j,m+1}, ψ^R_{j,m−1}) = B(θ_{j,m}) Ψ_{j+1,m}
    for i in 0..n {
        let (c, s) = row[i];
        let (l, r) = (a[2 * i], a[2 * i + 1]);
        if i + 1 < n {
            out[2 * (i + 1)] = -c * l + I * s * r;
        }
        if i > 0 {
            out[2 * (i - 1) + 1] = -I * s * l + c * r;
        }
    }
    Ok(WalkState { grid, time_index: state.time_index - 1, amplitudes: out })
}

/// States of `history` whose time index is a multiple of `n`.
pub fn stroboscope(history: &[WalkState], n: u64) -> Result<Vec<&WalkState>> {
    if n == 0 {
        return Err(Error::InvalidInput("stroboscope period must be positive".into()));
    }
    if history.windows(2).any(|w| w[1].time_index != w[0].time_index + 1) {
        return Err(Error::InvalidInput("history must hold consecutive time indices".into()));
    }
    Ok(history.iter().filter(|s| s.time_index % n == 0).collect())
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// `π_j = Σ_m (|ψ^L_{j,m}|² + |ψ^R_{j,m}|²)`.
pub fn total_probability(state: &WalkState) -> f64 {
    compensated_sum(state.amplitudes.iter().map(|a| a.norm_sqr()))
}

/// Probability held by the `width` outermost sites at each end.
pub fn boundary_probability(state: &WalkState, width: usize) -> f64 {
    let n = state.grid.sites();
    let w = width.min(n);
    let d = state.density();
    compensated_sum(d[..w].iter().copied().chain(d[n - w..].iter().copied()))
}

/// Trips a run when amplitude reaches the lattice ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryGuard {
    pub width: usize,
    pub tolerance: f64,
}

impl Default for BoundaryGuard {
    fn default() -> Self {
        BoundaryGuard { width: 4, tolerance: 1e-12 }
    }
}

impl BoundaryGuard {
    pub fn check(&self, state: &WalkState) -> Result<()> {
        let p = boundary_probability(state, self.width);
        if p > self.tolerance {
            return Err(Error::Guard(format!(
                "boundary probability {p:e} exceeds {:e} at time index {}; enlarge the grid",
                self.tolerance, state.time_index
            )));
        }
        Ok(())
    }
}

/// Run `steps` steps from `initial`, calling `observe` on the initial state
/// and after every step. Double-buffered; the guard is checked every step.
pub fn run<F, O>(initial: WalkState, field: &F, steps: u64, guard: Option<BoundaryGuard>, mut observe: O) -> Result<WalkState>
where
    F: AngleField + ?Sized,
    O: FnMut(&WalkState),
{
    if let Some(g) = guard {
        g.check(&initial)?;
    }
    observe(&initial);
    let mut current = initial;
    let mut spare = WalkState::zeros(current.grid, current.time_index);
    let mut row = Vec::with_capacity(current.grid.sites());
    for _ in 0..steps {
        step_into(&current, field, &mut row, &mut spare)?;
        std::mem::swap(&mut current, &mut spare);
        if let Some(g) = guard {
            g.check(&current)?;
        }
        observe(&current);
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::CoinAngleField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn random_state(grid: LatticeGrid, pad: usize, rng: &mut ChaCha8Rng) -> WalkState {
        let n = grid.sites();
        let amps = (0..2 * n)
            .map(|k| {
                let i = k / 2;
                if i < pad || i + pad >= n {
                    ZERO
                } else {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                }
            })
            .collect();
        let mut s = WalkState::from_amplitudes(grid, 0, amps).unwrap();
        let norm = total_probability(&s).sqrt();
        s.amplitudes.iter_mut().for_each(|a| *a /= norm);
        s
    }

    fn grid(n: usize) -> LatticeGrid {
        LatticeGrid::new(n, 0.1, -(n as i64) / 2).unwrap()
    }

    #[test]
    fn grid_coordinates() {
        let g = LatticeGrid::new(10, 0.5, -3).unwrap();
        assert_eq!(g.x(0), -1.5);
        assert_eq!(g.x(3), 0.0);
        assert_eq!(g.t(4), 2.0);
        assert!(LatticeGrid::new(0, 0.5, 0).is_err());
        assert!(LatticeGrid::new(4, 0.0, 0).is_err());
        let e = LatticeGrid::from_extent(100, 0.5, -10.0).unwrap();
        assert_eq!(e.origin(), -20);
    }

    #[test]
    fn gaussian_is_normalized() {
        let g = LatticeGrid::from_extent(400, 0.5, 0.0).unwrap();
        let mix = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
        let s = init_gaussian(g, 50.5, 2.5, mix).unwrap();
        assert!((total_probability(&s) - 1.0).abs() < 1e-15);
        // equal weight in both components
        let l: f64 = s.pairs().map(|p| p.0.norm_sqr()).sum();
        assert!((l - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gaussian_too_wide_is_config_error() {
        let g = LatticeGrid::from_extent(200, 0.5, 0.0).unwrap();
        let mix = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
        assert!(matches!(init_gaussian(g, 50.0, 50.0, mix), Err(Error::Config(_))));
        assert!(matches!(init_gaussian(g, 50.0, 0.0, mix), Err(Error::Config(_))));
        assert!(matches!(init_gaussian(g, 50.0, 1.0, (ZERO, ZERO)), Err(Error::Config(_))));
    }

    #[test]
    fn delta_like_gaussian_sits_on_one_site() {
        let g = LatticeGrid::from_extent(200, 0.5, 0.0).unwrap();
        let mix = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
        let s = init_gaussian(g, 50.0, 0.05, mix).unwrap();
        let d = s.density();
        assert!((d[100] - 1.0).abs() < 1e-15);
        assert!((total_probability(&s) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_angle_is_pure_transport() {
        let g = grid(64);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_state(g, 3, &mut rng);
        let next = step(&s, &CoinAngleField::Constant { theta: 0.0 }).unwrap();
        for i in 1..63 {
            assert_eq!(next.left(i), -s.left(i + 1));
            assert_eq!(next.right(i), s.right(i - 1));
        }
        assert_eq!(next.time_index(), 1);
    }

    #[test]
    fn right_angle_swaps_components() {
        let g = grid(64);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_state(g, 3, &mut rng);
        let f = CoinAngleField::Constant { theta: FRAC_PI_2 };
        let next = step(&s, &f).unwrap();
        for i in 1..63 {
            assert!((next.left(i) - I * s.right(i - 1)).norm() < 1e-16);
            assert!((next.right(i) + I * s.left(i + 1)).norm() < 1e-16);
        }
        let two = step_s2(&s, &f).unwrap();
        assert!(two.max_deviation(&s) < 1e-15);
    }

    #[test]
    fn s2_zero_angle_double_shift() {
        let g = grid(64);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_state(g, 4, &mut rng);
        let two = step_s2(&s, &CoinAngleField::Constant { theta: 0.0 }).unwrap();
        for i in 2..62 {
            assert_eq!(two.left(i), s.left(i + 2));
            assert_eq!(two.right(i), s.right(i - 2));
        }
    }

    #[test]
    fn s2_matches_two_steps_with_boundaries() {
        let g = grid(40);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // no padding: amplitude at the very ends exercises the zero-inflow rule
        let s = random_state(g, 0, &mut rng);
        let f = CoinAngleField::SmoothTest { theta0: 0.4, amplitude: 0.5, wavenumber: 1.3, omega: 2.0 };
        let a = step(&step(&s, &f).unwrap(), &f).unwrap();
        let b = step_s2(&s, &f).unwrap();
        assert!(a.max_deviation(&b) < 1e-14);
        assert_eq!(b.time_index(), 2);
    }

    #[test]
    fn one_step_conserves_probability() {
        let g = grid(256);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = CoinAngleField::SmoothTest { theta0: 0.5, amplitude: 0.2, wavenumber: 0.7, omega: 0.3 };
        for _ in 0..20 {
            let s = random_state(g, 2, &mut rng);
            let p0 = total_probability(&s);
            let p1 = total_probability(&step(&s, &f).unwrap());
            assert!((p1 - p0).abs() < 1e-14 * p0);
        }
    }

    #[test]
    fn checkerboard_support() {
        let g = grid(64);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut s = random_state(g, 2, &mut rng);
        for (k, a) in s.amplitudes.iter_mut().enumerate() {
            if g.lattice_index(k / 2) % 2 != 0 {
                *a = ZERO;
            }
        }
        let f = CoinAngleField::SmoothTest { theta0: 0.5, amplitude: 0.2, wavenumber: 0.7, omega: 0.3 };
        let next = step(&s, &f).unwrap();
        for (i, d) in next.density().iter().enumerate() {
            if g.lattice_index(i) % 2 == 0 {
                assert_eq!(*d, 0.0);
            }
        }
    }

    #[test]
    fn inverse_step_reconstructs() {
        let g = grid(128);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_state(g, 2, &mut rng);
        let f = CoinAngleField::SmoothTest { theta0: 0.5, amplitude: 0.4, wavenumber: 0.9, omega: 0.3 };
        let back = step_inverse(&step(&s, &f).unwrap(), &f).unwrap();
        assert!(back.max_deviation(&s) < 1e-13);
        assert_eq!(back.time_index(), 0);
        assert!(step_inverse(&s, &f).is_err());
    }

    #[test]
    fn stroboscope_selection() {
        let g = grid(16);
        let f = CoinAngleField::Constant { theta: FRAC_PI_2 };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut history = vec![random_state(g, 3, &mut rng)];
        for _ in 0..4 {
            history.push(step(history.last().unwrap(), &f).unwrap());
        }
        assert_eq!(stroboscope(&history, 1).unwrap().len(), 5);
        let two = stroboscope(&history, 2).unwrap();
        assert_eq!(two.iter().map(|s| s.time_index()).collect::<Vec<_>>(), vec![0, 2, 4]);
        for s in &two {
            assert!(s.max_deviation(&history[0]) < 1e-15);
        }
        assert!(matches!(stroboscope(&history, 0), Err(Error::InvalidInput(_))));
        let gap = vec![history[0].clone(), history[2].clone()];
        assert!(stroboscope(&gap, 2).is_err());
    }

    #[test]
    fn zero_state_has_zero_probability() {
        assert_eq!(total_probability(&WalkState::zeros(grid(8), 0)), 0.0);
    }

    #[test]
    fn guard_trips_when_amplitude_reaches_the_ends() {
        let g = LatticeGrid::new(80, 0.5, 0).unwrap();
        let mix = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
        let s = init_gaussian(g, 20.0, 1.0, mix).unwrap();
        let f = CoinAngleField::Constant { theta: 0.0 };
        let err = run(s.clone(), &f, 60, Some(BoundaryGuard::default()), |_| {}).unwrap_err();
        assert!(matches!(err, Error::Guard(_)));
        let mut seen = 0;
        let end = run(s, &f, 10, Some(BoundaryGuard::default()), |_| seen += 1).unwrap();
        assert_eq!(seen, 11);
        assert_eq!(end.time_index(), 10);
    }

    #[test]
    fn run_matches_repeated_step() {
        let g = grid(128);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_state(g, 20, &mut rng);
        let f = CoinAngleField::SmoothTest { theta0: 0.5, amplitude: 0.2, wavenumber: 0.7, omega: 0.3 };
        let mut manual = s.clone();
        for _ in 0..7 {
            manual = step(&manual, &f).unwrap();
        }
        let ran = run(s, &f, 7, None, |_| {}).unwrap();
        assert_eq!(ran, manual);
    }
}
