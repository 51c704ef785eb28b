//! File-producing drivers behind the `qwalk` subcommands.
//!
//! Every file starts with the resolved configuration as a `# key=value ...`
//! line, so reruns with the same configuration are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{self, ConvergenceRow, ConvergenceSetup, DensityField, DeviationSeries, PeakTrajectory};
use crate::coin::CoinAngleField;
use crate::config::{FieldKind, Panel, RunConfig};
use crate::output::{fmt_f64, write_pgm16, Cell, TsvWriter};
use crate::schwarzschild::{self, GeodesicTrack, SchwarzschildParams};
use crate::walk::{self, BoundaryGuard, LatticeGrid, WalkState};
use crate::{Error, Result};

fn prepare(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out_dir)?;
    Ok(&cfg.out_dir)
}

fn summary(path: &Path, header: &str, entries: &[(&str, Cell)]) -> Result<()> {
    let mut w = TsvWriter::create(path, header, &["key", "value"])?;
    for (k, v) in entries {
        w.row(&[Cell::S((*k).to_string()), v.clone()])?;
    }
    w.finish()
}

fn initial_state(cfg: &RunConfig, grid: LatticeGrid) -> Result<WalkState> {
    walk::init_gaussian(grid, cfg.x0, cfg.dx0, cfg.spin_mix)
}

/// What [`cmd_walk`] produced.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkOutcome {
    pub files: Vec<PathBuf>,
    pub probabilities: Vec<f64>,
    /// `max_j |π_j − π₀| / π₀`.
    pub max_drift: f64,
}

/// Run the walk, writing density snapshots every `stride` steps, a manifest,
/// the `π_j` series and optionally a heatmap.
pub fn cmd_walk(cfg: &RunConfig) -> Result<WalkOutcome> {
    let dir = prepare(cfg)?;
    let header = cfg.header_line();
    let field = cfg.build_field()?;
    let grid = cfg.grid()?;
    let initial = initial_state(cfg, grid)?;

    let mut density = DensityField::new(&grid);
    let mut probabilities = Vec::with_capacity(cfg.steps as usize + 1);
    let last = cfg.steps;
    walk::run(initial, &field, cfg.steps, Some(BoundaryGuard::default()), |s| {
        probabilities.push(walk::total_probability(s));
        let j = s.time_index();
        if j % cfg.stride == 0 || j == last {
            density.push(s);
        }
    })?;

    let mut files = Vec::new();
    let mut manifest = Vec::new();
    for frame in &density.frames {
        let name = format!("walk_snapshot_{:06}.tsv", frame.time_index);
        let path = dir.join(&name);
        let mut w = TsvWriter::create(&path, &header, &["X", "n_raw", "n_smoothed"])?;
        for (i, &x) in density.x.iter().enumerate() {
            w.floats(&[x, frame.raw[i], frame.smoothed[i]])?;
        }
        w.finish()?;
        manifest.push((frame.time_index, frame.time, frame.total, name));
        files.push(path);
    }

    let path = dir.join("walk_manifest.tsv");
    let mut w = TsvWriter::create(&path, &header, &["time_index", "T", "total", "file"])?;
    for (j, t, total, name) in &manifest {
        w.row(&[Cell::I(*j as i64), Cell::F(*t), Cell::F(*total), Cell::S(name.clone())])?;
    }
    w.finish()?;
    files.push(path);

    let p0 = probabilities[0];
    let path = dir.join("walk_probability.tsv");
    let mut w = TsvWriter::create(&path, &header, &["time_index", "T", "pi", "relative_drift"])?;
    let mut max_drift: f64 = 0.0;
    for (j, &p) in probabilities.iter().enumerate() {
        let drift = (p - p0) / p0;
        max_drift = max_drift.max(drift.abs());
        w.row(&[Cell::I(j as i64), Cell::F(grid.t(j as u64)), Cell::F(p), Cell::F(drift)])?;
    }
    w.finish()?;
    files.push(path);

    if cfg.heatmap {
        let path = dir.join("walk_density.pgm");
        let rows: Vec<Vec<f64>> = density.frames.iter().map(|f| f.smoothed.clone()).collect();
        let comments = [
            format!("smoothed density, one row per snapshot, stride {}", cfg.stride),
            format!("x_first={} dx={}", fmt_f64(grid.x_first()), fmt_f64(grid.dx())),
        ];
        write_pgm16(&path, grid.sites(), &rows, &comments)?;
        files.push(path);
    }
    Ok(WalkOutcome { files, probabilities, max_drift })
}

/// Measurements from one black-hole panel.
#[derive(Clone, Debug, PartialEq)]
pub struct Figure1Report {
    pub panel: Option<Panel>,
    pub params: SchwarzschildParams,
    pub x0: f64,
    pub dx: f64,
    pub left: PeakTrajectory,
    pub right: PeakTrajectory,
    pub minus: GeodesicTrack,
    pub plus: GeodesicTrack,
    /// Deviations on separated frames.
    pub left_deviation: DeviationSeries,
    pub right_deviation: DeviationSeries,
    /// Largest deviation while the geodesic is at least `10Δx` from `X = λT`.
    pub left_deviation_far: f64,
    pub right_deviation_far: f64,
    /// Largest right-branch deviation closer than `10Δx` to `X = λT`.
    pub right_deviation_near: f64,
    /// Largest `|X_peak − X_horizon|` of the right branch away from `X = λT`.
    pub right_horizon_offset: f64,
    /// First time each peak comes within `Δx` of `X = λT`.
    pub left_reaches_singularity: Option<f64>,
    pub right_reaches_singularity: Option<f64>,
    /// First time the right peak lies beyond the domain boundary.
    pub right_exit_time: Option<f64>,
    /// Least-squares slope of the right peak from 20 time units after the exit.
    pub right_exit_slope: Option<f64>,
    pub max_drift: f64,
    pub files: Vec<PathBuf>,
}

fn first_reach(p: &SchwarzschildParams, samples: &[(f64, f64)], tol: f64) -> Option<f64> {
    samples.iter().find(|(t, x)| x - p.singularity_x(*t) <= tol).map(|s| s.0)
}

fn slope(samples: &[(f64, f64)]) -> Option<f64> {
    if samples.len() < 2 {
        return None;
    }
    let n = samples.len() as f64;
    let (mt, mx) = samples.iter().fold((0.0, 0.0), |(a, b), (t, x)| (a + t / n, b + x / n));
    let (num, den) = samples
        .iter()
        .fold((0.0, 0.0), |(num, den), (t, x)| (num + (t - mt) * (x - mx), den + (t - mt) * (t - mt)));
    (den > 0.0).then(|| num / den)
}

fn resolved_deviation(peaks: &PeakTrajectory, track: &GeodesicTrack) -> Result<DeviationSeries> {
    let only = PeakTrajectory { samples: peaks.resolved().to_vec(), ..peaks.clone() };
    analysis::geodesic_deviation(&only, track)
}

/// Reproduce one black-hole panel: run the walk, track both density peaks
/// and compare them with the two null geodesics from `(0, X0)`.
pub fn cmd_figure1(cfg: &RunConfig) -> Result<Figure1Report> {
    if cfg.field != FieldKind::Schwarzschild {
        return Err(Error::Config(format!("field: figure1 needs schwarzschild, got {}", cfg.field.as_str())));
    }
    let dir = prepare(cfg)?;
    let header = cfg.header_line();
    let params = cfg.bh_params()?;
    let field = CoinAngleField::Schwarzschild(params);
    let grid = cfg.grid()?;
    let dx = grid.dx();
    let initial = initial_state(cfg, grid)?;

    let mut density = DensityField::new(&grid);
    walk::run(initial, &field, cfg.steps, Some(BoundaryGuard::default()), |s| density.push(s))?;
    let totals: Vec<f64> = density.frames.iter().map(|f| f.total).collect();
    let max_drift = totals.iter().map(|p| ((p - totals[0]) / totals[0]).abs()).fold(0.0, f64::max);

    let (left, right) = analysis::track_peaks(&density, cfg.x0)?;
    let t_end = grid.t(cfg.steps).min(cfg.t_max);
    let window = Some((grid.x_first(), grid.x_last()));
    let tracks: Vec<GeodesicTrack> = [-1i8, 1]
        .par_iter()
        .map(|&s| schwarzschild::integrate_null_geodesic(&params, (0.0, cfg.x0), s, cfg.geodesic_dt, t_end, window))
        .collect::<Result<_>>()?;
    let (minus, plus) = (tracks[0].clone(), tracks[1].clone());

    let near = 10.0 * dx;
    let gap = |t: f64, x: f64| x - params.singularity_x(t);
    let (left_deviation, right_deviation) = if left.separated_at.is_some() {
        (resolved_deviation(&left, &minus)?, resolved_deviation(&right, &plus)?)
    } else {
        let empty = DeviationSeries { samples: Vec::new(), max: 0.0, mean: 0.0 };
        (empty.clone(), empty)
    };
    let left_deviation_far = left_deviation.max_where(|d| gap(d.time, d.geodesic_x) >= near);
    let right_deviation_far = right_deviation.max_where(|d| gap(d.time, d.geodesic_x) >= near);
    let right_deviation_near = right_deviation.max_where(|d| gap(d.time, d.geodesic_x) < near);
    let right_horizon_offset = right
        .resolved()
        .iter()
        .filter(|(t, x)| gap(*t, *x) >= near)
        .map(|(t, x)| (x - params.horizon_x(*t)).abs())
        .fold(0.0, f64::max);

    let left_reaches_singularity = first_reach(&params, left.resolved(), dx);
    let right_reaches_singularity = first_reach(&params, right.resolved(), dx);
    let right_exit_time = right
        .resolved()
        .iter()
        .find(|(t, x)| *x > params.domain_boundary_x(*t))
        .map(|s| s.0);
    let right_exit_slope = right_exit_time.and_then(|te| {
        let after: Vec<(f64, f64)> = right.resolved().iter().copied().filter(|s| s.0 >= te + 20.0).collect();
        slope(&after)
    });

    let tag = cfg.panel.map_or("custom", |p| p.as_str());
    let mut files = Vec::new();

    let path = dir.join(format!("figure1_{tag}.tsv"));
    let columns = [
        "T",
        "peak_left",
        "peak_right",
        "geodesic_minus",
        "geodesic_plus",
        "horizon",
        "singularity",
        "domain_boundary",
        "deviation_left",
        "deviation_right",
    ];
    let mut w = TsvWriter::create(&path, &header, &columns)?;
    let (mut li, mut ri) = (0, 0);
    let at = |samples: &[(f64, f64)], cursor: &mut usize, t: f64| {
        if samples.get(*cursor).is_some_and(|s| s.0 == t) {
            *cursor += 1;
            Some(samples[*cursor - 1].1)
        } else {
            None
        }
    };
    for frame in &density.frames {
        let t = frame.time;
        let pl = at(&left.samples, &mut li, t);
        let pr = at(&right.samples, &mut ri, t);
        let gm = minus.x_at(t);
        let gp = plus.x_at(t);
        let resolved = left.separated_at.is_some_and(|t0| t >= t0);
        let dev = |p: Option<f64>, g: Option<f64>| match (p, g) {
            (Some(p), Some(g)) if resolved => Some((p - g).abs()),
            _ => None,
        };
        w.row(&[
            Cell::F(t),
            pl.into(),
            pr.into(),
            gm.into(),
            gp.into(),
            Cell::F(params.horizon_x(t)),
            Cell::F(params.singularity_x(t)),
            Cell::F(params.domain_boundary_x(t)),
            dev(pl, gm).into(),
            dev(pr, gp).into(),
        ])?;
    }
    w.finish()?;
    files.push(path);

    let path = dir.join(format!("figure1_{tag}_summary.tsv"));
    let opt = |v: Option<f64>| Cell::from(v);
    summary(
        &path,
        &header,
        &[
            ("lambda", Cell::F(params.lambda)),
            ("x0", Cell::F(cfg.x0)),
            ("dx", Cell::F(dx)),
            ("max_probability_drift", Cell::F(max_drift)),
            ("separated_at", opt(left.separated_at)),
            ("left_deviation_far", Cell::F(left_deviation_far)),
            ("right_deviation_far", Cell::F(right_deviation_far)),
            ("right_deviation_near", Cell::F(right_deviation_near)),
            ("right_horizon_offset", Cell::F(right_horizon_offset)),
            ("left_reaches_singularity", opt(left_reaches_singularity)),
            ("right_reaches_singularity", opt(right_reaches_singularity)),
            ("right_exit_time", opt(right_exit_time)),
            ("right_exit_slope", opt(right_exit_slope)),
            ("geodesic_minus_end", Cell::S(minus.termination.as_str().into())),
            ("geodesic_plus_end", Cell::S(plus.termination.as_str().into())),
        ],
    )?;
    files.push(path);

    // crop the raster to the region the walk can reach
    let x_hi = cfg.x0 + grid.t(cfg.steps) + 8.0 * cfg.dx0;
    let width = (0..grid.sites()).take_while(|&i| grid.x(i) <= x_hi).count().max(1);
    let rows: Vec<Vec<f64>> = density.frames.iter().map(|f| f.smoothed[..width].to_vec()).collect();
    let path = dir.join(format!("figure1_{tag}.pgm"));
    let comments = [
        format!("panel {tag}: smoothed density, rows are time steps from T=0"),
        format!("x_first={} dx={} dt={}", fmt_f64(grid.x_first()), fmt_f64(dx), fmt_f64(grid.dt())),
    ];
    write_pgm16(&path, width, &rows, &comments)?;
    files.push(path);

    let path = dir.join(format!("figure1_{tag}.gp"));
    fs::write(&path, plot_script(tag))?;
    files.push(path);

    Ok(Figure1Report {
        panel: cfg.panel,
        params,
        x0: cfg.x0,
        dx,
        left,
        right,
        minus,
        plus,
        left_deviation,
        right_deviation,
        left_deviation_far,
        right_deviation_far,
        right_deviation_near,
        right_horizon_offset,
        left_reaches_singularity,
        right_reaches_singularity,
        right_exit_time,
        right_exit_slope,
        max_drift,
        files,
    })
}

fn plot_script(tag: &str) -> String {
    format!(
        "set datafile commentschars '#'\n\
         set key autotitle columnhead\n\
         set xlabel 'X'\n\
         set ylabel 'T'\n\
         set title 'panel {tag}'\n\
         f = 'figure1_{tag}.tsv'\n\
         plot f using 2:1 with lines lw 2, \\\n\
         \x20    f using 3:1 with lines lw 2, \\\n\
         \x20    f using 4:1 with lines dt 2, \\\n\
         \x20    f using 5:1 with lines dt 2, \\\n\
         \x20    f using 6:1 with lines dt 3, \\\n\
         \x20    f using 7:1 with lines dt 4, \\\n\
         \x20    f using 8:1 with lines\n"
    )
}

/// Run several panel configurations in parallel. Each writes only its own files.
pub fn cmd_figure1_many(cfgs: &[RunConfig]) -> Result<Vec<Figure1Report>> {
    cfgs.par_iter().map(cmd_figure1).collect()
}

/// Run the ε sweep and write `converge.tsv`.
pub fn cmd_converge(cfg: &RunConfig) -> Result<Vec<ConvergenceRow>> {
    let dir = prepare(cfg)?;
    let field = cfg.build_field()?;
    let setup = ConvergenceSetup { x0: cfg.x0, dx0: cfg.dx0, spin_mix: cfg.spin_mix, ..ConvergenceSetup::default() };
    let rows = analysis::convergence_study(&field, &cfg.epsilons, cfg.t_final, &setup)?;
    let mut w = TsvWriter::create(&dir.join("converge.tsv"), &cfg.header_line(), &["epsilon", "l2_error", "order"])?;
    for r in &rows {
        w.row(&[Cell::F(r.epsilon), Cell::F(r.l2_error), r.order.into()])?;
    }
    w.finish()?;
    Ok(rows)
}

/// Integrate one null geodesic per (start, sign) pair and write one file per
/// track plus an index with the termination reasons.
pub fn cmd_geodesic(cfg: &RunConfig) -> Result<Vec<(PathBuf, GeodesicTrack)>> {
    let dir = prepare(cfg)?;
    let header = cfg.header_line();
    let params = cfg.bh_params()?;
    let grid = cfg.grid()?;
    let window = Some((grid.x_first(), grid.x_last()));
    let mut jobs = Vec::new();
    for (k, &start) in cfg.starts().iter().enumerate() {
        for &sign in &cfg.geodesic_signs {
            jobs.push((k, start, sign));
        }
    }
    let tracks = jobs
        .par_iter()
        .map(|&(_, start, sign)| {
            schwarzschild::integrate_null_geodesic(&params, start, sign, cfg.geodesic_dt, cfg.t_max, window)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::new();
    let index = dir.join("geodesics.tsv");
    let mut iw = TsvWriter::create(&index, &header, &["file", "T0", "X0", "sign", "termination", "samples", "T_end", "X_end"])?;
    for ((k, start, sign), track) in jobs.into_iter().zip(tracks) {
        let name = format!("geodesic_{k:03}_{}.tsv", if sign > 0 { "plus" } else { "minus" });
        let path = dir.join(&name);
        let mut w = TsvWriter::create(&path, &header, &["T", "X", "horizon_deviation"])?;
        for &(t, x) in &track.samples {
            w.floats(&[t, x, x - params.horizon_x(t)])?;
        }
        w.finish()?;
        let (te, xe) = track.end();
        iw.row(&[
            Cell::S(name),
            Cell::F(start.0),
            Cell::F(start.1),
            Cell::I(i64::from(sign)),
            Cell::S(track.termination.as_str().into()),
            Cell::I(track.samples.len() as i64),
            Cell::F(te),
            Cell::F(xe),
        ])?;
        out.push((path, track));
    }
    iw.finish()?;
    Ok(out)
}

/// Iterate the scalar sequence and write it with a summary.
pub fn cmd_strobe_demo(cfg: &RunConfig) -> Result<analysis::StroboscopeReport> {
    let dir = prepare(cfg)?;
    let header = cfg.header_line();
    let rep = analysis::scalar_stroboscope_demo(cfg.strobe_omega, cfg.strobe_tscale, cfg.strobe_sigma, cfg.strobe_steps)?;
    let mut w = TsvWriter::create(&dir.join("strobe.tsv"), &header, &["j", "t", "re_u", "im_u", "abs_u"])?;
    for (j, u) in rep.u.iter().enumerate() {
        w.row(&[
            Cell::I(j as i64),
            Cell::F(j as f64 * rep.tscale),
            Cell::F(u.re),
            Cell::F(u.im),
            Cell::F(u.norm()),
        ])?;
    }
    w.finish()?;
    summary(
        &dir.join("strobe_summary.tsv"),
        &header,
        &[
            ("modulus_error", Cell::F(rep.modulus_error)),
            ("closed_form_error", Cell::F(rep.closed_form_error)),
            ("v_error", Cell::F(rep.v_error)),
            ("generator_re", Cell::F(rep.generator.re)),
            ("generator_im", Cell::F(rep.generator.im)),
            ("pi_jump", Cell::S(rep.has_pi_jump().to_string())),
        ],
    )?;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Preset;

    fn cfg_in(dir: &Path, preset: Preset) -> RunConfig {
        let mut c = RunConfig::default();
        c.apply_preset(preset);
        c.out_dir = dir.to_path_buf();
        c
    }

    #[test]
    fn zero_steps_writes_initial_snapshot_only() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig { steps: 0, sites: 512, ..cfg_in(dir.path(), Preset::None) };
        let out = cmd_walk(&cfg).unwrap();
        assert_eq!(out.probabilities.len(), 1);
        assert!(dir.path().join("walk_snapshot_000000.tsv").exists());
        assert!(!dir.path().join("walk_snapshot_000001.tsv").exists());
    }

    #[test]
    fn undersized_grid_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig { sites: 64, ..cfg_in(dir.path(), Preset::None) };
        assert_eq!(cmd_walk(&cfg).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn boundary_guard_trips_with_status_3() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            field: FieldKind::Constant,
            theta0: 0.0,
            sites: 200,
            x0: 50.0,
            steps: 200,
            ..cfg_in(dir.path(), Preset::None)
        };
        assert_eq!(cmd_walk(&cfg).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn geodesic_files_and_index() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig { geodesic_starts: vec![(0.0, 100.0), (0.0, 50.5)], ..cfg_in(dir.path(), Preset::None) };
        let out = cmd_geodesic(&cfg).unwrap();
        assert_eq!(out.len(), 4);
        let index = fs::read_to_string(dir.path().join("geodesics.tsv")).unwrap();
        assert_eq!(index.lines().count(), 2 + 4);
        assert!(index.contains("geodesic_001_minus.tsv\t") && index.contains("reached-singularity"));
        let bad = RunConfig { geodesic_starts: vec![(10.0, 5.0)], ..cfg.clone() };
        let e = cmd_geodesic(&bad).unwrap_err().to_string();
        assert!(e.contains("X ≥ λT"), "{e}");
        let single = RunConfig { t_max: 0.0, ..cfg };
        assert!(cmd_geodesic(&single).unwrap().iter().all(|(_, t)| t.samples.len() == 1));
    }

    #[test]
    fn strobe_demo_shows_the_half_turn() {
        let dir = tempfile::tempdir().unwrap();
        let rep = cmd_strobe_demo(&cfg_in(dir.path(), Preset::None)).unwrap();
        assert!(rep.has_pi_jump());
        assert!(dir.path().join("strobe_summary.tsv").exists());
    }
}
