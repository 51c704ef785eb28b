//! Post-processing of walk runs: smoothed densities, branch peaks, deviation
//! from geodesics, walk-vs-continuum convergence and the scalar stroboscope
//! example.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coin::{AngleField, CoinAngleField};
use crate::continuum::{evolve_pde, to_eigenbasis, ContinuumState, Spinor};
use crate::schwarzschild::GeodesicTrack;
use crate::walk::{self, compensated_sum, BoundaryGuard, LatticeGrid, WalkState};
use crate::{Error, Result};

/// Branches lighter than this fraction of the frame total have no peak.
pub const BRANCH_MASS_FLOOR: f64 = 1e-6;

/// `[1/4, 1/2, 1/4]` stencil, i.e. the mean of the two pair averages
/// `(n_{m−1}+n_m)/2` and `(n_m+n_{m+1})/2`. Kills the period-2Δx
/// checkerboard. Wraps around the ends, so the total is preserved.
pub fn smooth_density(raw: &[f64]) -> Vec<f64> {
    let n = raw.len();
    if n < 3 {
        return raw.to_vec();
    }
    (0..n)
        .map(|i| 0.25 * raw[(i + n - 1) % n] + 0.5 * raw[i] + 0.25 * raw[(i + 1) % n])
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityFrame {
    pub time_index: u64,
    pub time: f64,
    pub raw: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub total: f64,
}

/// Walk density `n(T_j, X_m)` over a sequence of snapshots.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    pub x: Vec<f64>,
    pub dx: f64,
    pub frames: Vec<DensityFrame>,
}

impl DensityField {
    pub fn new(grid: &LatticeGrid) -> Self {
        DensityField { x: (0..grid.sites()).map(|i| grid.x(i)).collect(), dx: grid.dx(), frames: Vec::new() }
    }

    pub fn from_states<'a>(grid: &LatticeGrid, states: impl IntoIterator<Item = &'a WalkState>) -> Self {
        let mut field = DensityField::new(grid);
        states.into_iter().for_each(|s| field.push(s));
        field
    }

    pub fn push(&mut self, state: &WalkState) {
        let raw = state.density();
        let smoothed = smooth_density(&raw);
        let total = compensated_sum(raw.iter().copied());
        self.frames.push(DensityFrame { time_index: state.time_index(), time: state.time(), raw, smoothed, total });
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeakTrajectory {
    pub branch: Branch,
    /// `(T, X_peak)`.
    pub samples: Vec<(f64, f64)>,
    /// First time the two branches were separated by a density dip.
    pub separated_at: Option<f64>,
}

impl PeakTrajectory {
    /// Samples from the separation time on.
    pub fn resolved(&self) -> &[(f64, f64)] {
        match self.separated_at {
            Some(t0) => &self.samples[self.samples.partition_point(|s| s.0 < t0)..],
            None => &[],
        }
    }
}

/// Sub-grid position of the maximum at `i` from a parabola through its
/// neighbours.
fn refine_peak(values: &[f64], xs: &[f64], i: usize, dx: f64) -> f64 {
    if i == 0 || i + 1 >= values.len() {
        return xs[i];
    }
    let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
    let curvature = a - 2.0 * b + c;
    if curvature >= 0.0 {
        return xs[i];
    }
    xs[i] + (0.5 * (a - c) / curvature).clamp(-0.5, 0.5) * dx
}

/// First index of the maximum over `range` (ties go to the smaller X).
fn argmax(values: &[f64], range: std::ops::Range<usize>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in range {
        if best.is_none_or(|b| values[i] > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Follow the left and right density peaks on either side of a moving split.
///
/// The split starts at `split_point`. Once the two peaks are separated by a
/// dip below half the lower peak, the split moves to the bottom of that dip.
pub fn track_peaks(density: &DensityField, split_point: f64) -> Result<(PeakTrajectory, PeakTrajectory)> {
    if density.is_empty() || density.x.is_empty() {
        return Err(Error::InvalidInput("density field has no frames".into()));
    }
    let xs = &density.x;
    let n = xs.len();
    let mut split = xs.partition_point(|&x| x < split_point);
    let mut left = PeakTrajectory { branch: Branch::Left, samples: Vec::new(), separated_at: None };
    let mut right = PeakTrajectory { branch: Branch::Right, samples: Vec::new(), separated_at: None };
    for frame in &density.frames {
        let d = &frame.smoothed;
        let total = compensated_sum(d.iter().copied());
        if total <= 0.0 {
            continue;
        }
        let floor = BRANCH_MASS_FLOOR * total;
        let mass_l = compensated_sum(d[..split].iter().copied());
        let mass_r = compensated_sum(d[split..].iter().copied());
        let li = if mass_l > floor { argmax(d, 0..split) } else { None };
        let ri = if mass_r > floor { argmax(d, split..n) } else { None };
        if let Some(i) = li {
            left.samples.push((frame.time, refine_peak(d, xs, i, density.dx)));
        }
        if let Some(i) = ri {
            right.samples.push((frame.time, refine_peak(d, xs, i, density.dx)));
        }
        if let (Some(l), Some(r)) = (li, ri) {
            if r > l + 1 {
                let lowest = (l + 1..r).fold(l + 1, |b, i| if d[i] < d[b] { i } else { b });
                if d[lowest] < 0.5 * d[l].min(d[r]) {
                    split = lowest;
                    if left.separated_at.is_none() {
                        left.separated_at = Some(frame.time);
                        right.separated_at = Some(frame.time);
                    }
                }
            }
        }
    }
    Ok((left, right))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviationSample {
    pub time: f64,
    pub peak_x: f64,
    pub geodesic_x: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviationSeries {
    pub samples: Vec<DeviationSample>,
    pub max: f64,
    pub mean: f64,
}

impl DeviationSeries {
    /// Largest deviation over the samples accepted by `keep`.
    pub fn max_where(&self, keep: impl Fn(&DeviationSample) -> bool) -> f64 {
        self.samples.iter().filter(|s| keep(s)).map(|s| s.deviation).fold(0.0, f64::max)
    }
}

/// `|X_peak(T) − X_geo(T)|` over the common time range.
pub fn geodesic_deviation(peaks: &PeakTrajectory, track: &GeodesicTrack) -> Result<DeviationSeries> {
    let samples: Vec<DeviationSample> = peaks
        .samples
        .iter()
        .filter_map(|&(t, x)| {
            track.x_at(t).map(|g| DeviationSample { time: t, peak_x: x, geodesic_x: g, deviation: (x - g).abs() })
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::InvalidInput("peak trajectory and geodesic share no time range".into()));
    }
    let max = samples.iter().map(|s| s.deviation).fold(0.0, f64::max);
    let mean = samples.iter().map(|s| s.deviation).sum::<f64>() / samples.len() as f64;
    Ok(DeviationSeries { samples, max, mean })
}

/// Initial data and resolution choices for [`convergence_study`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceSetup {
    pub x0: f64,
    pub dx0: f64,
    pub spin_mix: Spinor,
    /// Continuum nodes per lattice spacing; the oracle runs at `h = ε / refinement`.
    pub refinement: usize,
}

impl Default for ConvergenceSetup {
    fn default() -> Self {
        ConvergenceSetup {
            x0: 0.0,
            dx0: 1.0,
            spin_mix: (Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)),
            refinement: 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub l2_error: f64,
    /// `log₂(e_{i−1}/e_i)` against the previous (coarser) row.
    pub order: Option<f64>,
}

/// L² distance between the walk density (per unit length) and the continuum
/// density after `t_final`, for one lattice spacing.
fn density_error(field: &CoinAngleField, epsilon: f64, t_final: f64, setup: &ConvergenceSetup) -> Result<f64> {
    let steps = (t_final / epsilon).round();
    if (steps * epsilon - t_final).abs() > 1e-9 * t_final.max(1.0) || !(steps as u64).is_multiple_of(2) {
        return Err(Error::Config(format!(
            "t_final = {t_final} must be an even number of steps of epsilon = {epsilon}"
        )));
    }
    let steps = steps as u64;
    let half_width = 8.0 * setup.dx0 + t_final + 4.0;
    let m_lo = ((setup.x0 - half_width) / epsilon).floor() as i64;
    let m_hi = ((setup.x0 + half_width) / epsilon).ceil() as i64;
    let grid = LatticeGrid::new((m_hi - m_lo + 1) as usize, epsilon, m_lo)?;

    let initial = walk::init_gaussian(grid, setup.x0, setup.dx0, setup.spin_mix)?;
    let mut strobed: Option<WalkState> = None;
    walk::run(initial, field, steps, Some(BoundaryGuard::default()), |s| {
        if s.time_index() == steps {
            strobed = Some(s.clone());
        }
    })?;
    let end = strobed.expect("run observes the final state");
    let t_end = end.time();

    let r = setup.refinement.max(1);
    let h = epsilon / r as f64;
    let nodes = r * (grid.sites() - 1) + 1;
    let oracle = ContinuumState::gaussian(grid.x_first(), h, nodes, field, setup.x0, setup.dx0, setup.spin_mix)?;
    let oracle = evolve_pde(&oracle, field, h, r * steps as usize)?;
    let reference = oracle.density();

    let mut sq = Vec::with_capacity(grid.sites());
    for (i, (l, rr)) in end.pairs().enumerate() {
        let (m, p) = to_eigenbasis((l, rr), field.angle(t_end, grid.x(i))?);
        let walk_density = (m.norm_sqr() + p.norm_sqr()) / epsilon;
        let diff = walk_density - reference[r * i];
        sq.push(diff * diff * epsilon);
    }
    Ok(compensated_sum(sq).sqrt())
}

/// Compare the two-step walk to the continuum oracle for halving `epsilons`.
pub fn convergence_study(
    field: &CoinAngleField,
    epsilons: &[f64],
    t_final: f64,
    setup: &ConvergenceSetup,
) -> Result<Vec<ConvergenceRow>> {
    if !field.is_smooth() {
        return Err(Error::Config(format!("convergence study needs a smooth field, got kind `{}`", field.kind_name())));
    }
    if epsilons.is_empty() {
        return Err(Error::Config("convergence study needs at least one epsilon".into()));
    }
    if epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::Config("epsilons must be positive".into()));
    }
    if epsilons.windows(2).any(|w| (w[1] / w[0] - 0.5).abs() > 1e-9) {
        return Err(Error::Config("epsilons must halve from one entry to the next".into()));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Config(format!("t_final must be positive, got {t_final}")));
    }
    let errors = epsilons
        .par_iter()
        .map(|&e| density_error(field, e, t_final, setup))
        .collect::<Result<Vec<f64>>>()?;
    Ok(epsilons
        .iter()
        .zip(&errors)
        .enumerate()
        .map(|(i, (&epsilon, &l2_error))| ConvergenceRow {
            epsilon,
            l2_error,
            order: (i > 0).then(|| (errors[i - 1] / l2_error).log2()),
        })
        .collect())
}

/// Outcome of iterating `u_{j+1} = σ e^{iω𝒯} u_j` and keeping every other term.
#[derive(Clone, Debug, PartialEq)]
pub struct StroboscopeReport {
    pub omega: f64,
    pub tscale: f64,
    pub sigma: i8,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    /// `max_j ||u_j| − 1|`.
    pub modulus_error: f64,
    /// `max_j |u_j − σ^j e^{iωt_j}|`.
    pub closed_form_error: f64,
    /// `max_k |v_k − e^{2iωt_k}|` with `t_k = k𝒯`.
    pub v_error: f64,
    /// Mean of `Log(v_{k+1}/v_k)/𝒯`, the generator of `dv/dt = g v`. Only
    /// recovers `2iω` while `2|ω|𝒯 < π`.
    pub generator: Complex64,
    /// `arg(u_{j+1}/u_j) − ω𝒯`, wrapped to `(−π, π]`.
    pub phase_jumps: Vec<f64>,
}

impl StroboscopeReport {
    /// Every consecutive pair of `u` carries the extra half-turn.
    pub fn has_pi_jump(&self) -> bool {
        !self.phase_jumps.is_empty() && self.phase_jumps.iter().all(|p| (p.abs() - std::f64::consts::PI).abs() < 1e-9)
    }
}

fn wrap_phase(p: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = p - tau * (p / tau).round();
    if w <= -std::f64::consts::PI {
        w + tau
    } else {
        w
    }
}

pub fn scalar_stroboscope_demo(omega: f64, tscale: f64, sigma: i8, steps: usize) -> Result<StroboscopeReport> {
    if steps < 4 {
        return Err(Error::InvalidInput(format!("stroboscope demo needs at least 4 steps, got {steps}")));
    }
    if sigma != 1 && sigma != -1 {
        return Err(Error::InvalidInput(format!("sigma must be ±1, got {sigma}")));
    }
    if !omega.is_finite() || !(tscale > 0.0 && tscale.is_finite()) {
        return Err(Error::InvalidInput("omega must be finite and the time scale positive".into()));
    }
    // iterate on the argument: multiplying by σ e^{iω𝒯} adds ω𝒯 (plus π when
    // σ = −1), and |u_j| then only carries the rounding of one cos/sin pair
    let turn = omega * tscale + if sigma == -1 { std::f64::consts::PI } else { 0.0 };
    let mut phase = 0.0;
    let mut u = Vec::with_capacity(steps + 1);
    u.push(Complex64::new(1.0, 0.0));
    for _ in 0..steps {
        phase = wrap_phase(phase + turn);
        u.push(Complex64::from_polar(1.0, phase));
    }
    let v: Vec<Complex64> = u.iter().step_by(2).copied().collect();

    let modulus_error = u.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    let closed_form_error = u
        .iter()
        .enumerate()
        .map(|(j, z)| {
            let sign = if sigma == -1 && j % 2 == 1 { -1.0 } else { 1.0 };
            (z - Complex64::from_polar(sign, omega * j as f64 * tscale)).norm()
        })
        .fold(0.0, f64::max);
    let v_error = v
        .iter()
        .enumerate()
        .map(|(k, z)| (z - Complex64::from_polar(1.0, 2.0 * omega * k as f64 * tscale)).norm())
        .fold(0.0, f64::max);
    let generator = v.windows(2).map(|w| (w[1] / w[0]).ln() / tscale).sum::<Complex64>() / (v.len() - 1) as f64;
    let phase_jumps = u.windows(2).map(|w| wrap_phase((w[1] / w[0]).arg() - omega * tscale)).collect();
    Ok(StroboscopeReport { omega, tscale, sigma, u, v, modulus_error, closed_form_error, v_error, generator, phase_jumps })
}
