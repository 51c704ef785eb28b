//! `qwalk`: run quantum-walk simulations and write their data files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};
use qwalk_core::config::{Panel, Preset, RunConfig, KEYS, OUT_DIR_ENV};
use qwalk_core::pipeline;
use qwalk_core::Result;

fn with_keys(cmd: Command) -> Command {
    let cmd = cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .value_parser(clap::value_parser!(PathBuf))
            .help("flat key=value file, applied before command-line flags"),
    );
    KEYS.iter().fold(cmd, |c, k| {
        c.arg(Arg::new(*k).long(*k).value_name("VALUE").allow_hyphen_values(true).help_heading("Configuration"))
    })
}

fn cli() -> Command {
    Command::new("qwalk")
        .about("Quantum walks with space-time dependent coins")
        .after_help(format!("{OUT_DIR_ENV} sets the default output directory."))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(with_keys(Command::new("walk").about("Run a walk and write density snapshots")))
        .subcommand(with_keys(
            Command::new("figure1")
                .about("Reproduce a black-hole panel (a, b, c, d or all)")
                .arg(Arg::new("which").value_name("PANEL").required(true).value_parser(["a", "b", "c", "d", "all"])),
        ))
        .subcommand(with_keys(Command::new("converge").about("Compare the walk with the continuum oracle over ε")))
        .subcommand(with_keys(Command::new("geodesic").about("Integrate radial null geodesics")))
        .subcommand(with_keys(Command::new("strobe-demo").about("Iterate the scalar stroboscope sequence")))
}

fn overrides(m: &ArgMatches) -> Vec<(String, String)> {
    KEYS.iter()
        .filter_map(|k| m.get_one::<String>(k).map(|v| ((*k).to_string(), v.clone())))
        .collect()
}

fn resolve(m: &ArgMatches, preset: Preset) -> Result<RunConfig> {
    RunConfig::resolve(preset, m.get_one::<PathBuf>("config").map(PathBuf::as_path), &overrides(m))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

fn figure1(m: &ArgMatches) -> Result<()> {
    let which = m.get_one::<String>("which").map(String::as_str).unwrap_or("all");
    let panels: Vec<Panel> = if which == "all" { Panel::ALL.to_vec() } else { vec![Panel::parse(which)?] };
    let cfgs = panels.iter().map(|p| resolve(m, Preset::Panel(*p))).collect::<Result<Vec<_>>>()?;
    for r in pipeline::cmd_figure1_many(&cfgs)? {
        let tag = r.panel.map_or("custom", |p| p.as_str());
        println!(
            "panel {tag}: lambda={} x0={} deviation left={:.3} right={:.3} (near singularity {:.3}) \
             singularity left={} right={} exit={} slope={}",
            r.params.lambda,
            r.x0,
            r.left_deviation_far,
            r.right_deviation_far,
            r.right_deviation_near,
            opt(r.left_reaches_singularity),
            opt(r.right_reaches_singularity),
            opt(r.right_exit_time),
            opt(r.right_exit_slope),
        );
    }
    Ok(())
}

fn run(m: &ArgMatches) -> Result<()> {
    match m.subcommand() {
        Some(("walk", sub)) => {
            let cfg = resolve(sub, Preset::None)?;
            let out = pipeline::cmd_walk(&cfg)?;
            println!(
                "wrote {} files to {}; max relative drift of pi_j {:.3e}",
                out.files.len(),
                cfg.out_dir.display(),
                out.max_drift
            );
        }
        Some(("figure1", sub)) => figure1(sub)?,
        Some(("converge", sub)) => {
            let cfg = resolve(sub, Preset::Converge)?;
            for r in pipeline::cmd_converge(&cfg)? {
                println!("epsilon={} l2_error={:.6e} order={}", r.epsilon, r.l2_error, opt(r.order));
            }
        }
        Some(("geodesic", sub)) => {
            let cfg = resolve(sub, Preset::None)?;
            for (path, track) in pipeline::cmd_geodesic(&cfg)? {
                let (t, x) = track.end();
                println!("{}: {} at T={t:.3} X={x:.3}", path.display(), track.termination.as_str());
            }
        }
        Some(("strobe-demo", sub)) => {
            let cfg = resolve(sub, Preset::None)?;
            let rep = pipeline::cmd_strobe_demo(&cfg)?;
            println!(
                "|u|-1 max {:.2e}; v error {:.2e}; generator {:.12}{:+.12}i; pi jump {}",
                rep.modulus_error,
                rep.v_error,
                rep.generator.re,
                rep.generator.im,
                rep.has_pi_jump()
            );
        }
        _ => unreachable!("subcommand is required"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    match run(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qwalk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
