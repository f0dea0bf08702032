use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use taxsim_core::config::{parse_config, parse_fraction, render_config};
use taxsim_core::output::{write_atomic, write_run};
use taxsim_core::scenarios::{
    parse_grid, preset, run_preset, run_sweep, Execution, SweepParameter, SweepSpec, PRESET_NAMES,
};
use taxsim_core::simulation::run;
use taxsim_core::{Dims, SimulationConfig};

const SWEEP_FILE: &str = "sweep.csv";

#[derive(Parser)]
#[command(name = "taxsim", version, about = "Lattice simulator of tax compliance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Base random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Number of time steps
    #[arg(long)]
    steps: Option<usize>,
    /// Lattice size, `WxH` or `L`
    #[arg(long, value_parser = parse_dims)]
    dims: Option<Dims>,
    /// Directory for CSV output
    #[arg(long, env = "TAXSIM_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a config file (defaults when omitted)
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a named preset and evaluate its expected outcomes
    Preset {
        /// Preset name; lists the presets when omitted
        name: Option<String>,
        /// Exit non-zero when an expected outcome fails
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep one parameter over a grid and locate the regime change
    Sweep {
        /// dB_max, dp_min or share_a
        #[arg(long)]
        param: String,
        /// `lo:hi`, `lo:hi:step` or a comma list
        #[arg(long)]
        grid: String,
        /// Perception threshold, e.g. `1%` or `0.05`
        #[arg(long)]
        dpmin: Option<String>,
        /// Seeds per grid value
        #[arg(long, default_value_t = 5)]
        replicas: u64,
        /// Base configuration file
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Check a config file and print it in normalized form
    Validate { file: PathBuf },
}

fn parse_dims(s: &str) -> std::result::Result<Dims, String> {
    s.parse().map_err(|e: taxsim_core::Error| e.to_string())
}

fn load_config(path: Option<&Path>) -> Result<SimulationConfig> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_config(&text).with_context(|| format!("in {}", p.display()))
        }
        None => Ok(SimulationConfig::default()),
    }
}

fn apply_common(cfg: &mut SimulationConfig, c: &Common) {
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(s) = c.steps {
        cfg.steps = s;
    }
    if let Some(d) = c.dims {
        cfg.dims = d;
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn fmt_field(m: Option<f64>) -> String {
    m.map_or_else(|| "n/a".to_string(), |m| format!("{m:.4}"))
}

fn cmd_run(config: Option<PathBuf>, common: Common) -> Result<()> {
    let mut cfg = load_config(config.as_deref())?;
    apply_common(&mut cfg, &common);
    cfg.validate()?;
    let out = run(&cfg)?;
    ensure_dir(&common.out_dir)?;
    for p in write_run(&common.out_dir, &out, cfg.output.histogram, cfg.output.society)? {
        println!("wrote {}", p.display());
    }
    println!("stationary p_noncp {:.4}", out.stationary_noncompliance());
    println!("final mean a-field {}", fmt_field(out.final_mean_a_field()));
    Ok(())
}

fn cmd_preset(name: Option<String>, strict: bool, common: Common) -> Result<bool> {
    let Some(name) = name else {
        for n in PRESET_NAMES {
            println!("{n}");
        }
        return Ok(true);
    };
    let p = preset(&name)?.with_overrides(common.seed, common.steps, common.dims);
    let results = run_preset(&p, Execution::Parallel)?;
    for r in &results {
        let dir = common.out_dir.join(&p.name).join(&r.label);
        ensure_dir(&dir)?;
        let cfg = &p.variant(&r.label).expect("result labels come from variants").config;
        write_run(&dir, &r.output, cfg.output.histogram, cfg.output.society)?;
        println!(
            "{:<10} p_noncp {:.4}  mean a-field {}",
            r.label,
            r.stationary_noncompliance,
            fmt_field(r.mean_a_field)
        );
    }
    let mut all = true;
    for check in &p.checks {
        let o = check.evaluate(&results)?;
        all &= o.passed;
        println!("{} {}", if o.passed { "PASS" } else { "FAIL" }, o.description);
    }
    Ok(all || !strict)
}

fn cmd_sweep(
    param: String,
    grid: String,
    dpmin: Option<String>,
    replicas: u64,
    config: Option<PathBuf>,
    common: Common,
) -> Result<()> {
    if replicas == 0 {
        bail!("--replicas must be at least 1");
    }
    let mut base = load_config(config.as_deref())?;
    apply_common(&mut base, &common);
    if let Some(d) = dpmin {
        base.delta_p_min = parse_fraction("dpmin", &d)?;
    }
    let spec = SweepSpec {
        parameter: param.parse::<SweepParameter>()?,
        grid: parse_grid(&grid)?,
        seeds: (0..replicas).map(|i| base.seed.wrapping_add(i)).collect(),
        base,
    };
    let table = run_sweep(&spec, Execution::Parallel)?;
    ensure_dir(&common.out_dir)?;
    let path = common.out_dir.join(SWEEP_FILE);
    write_atomic(&path, &table.to_csv()?)?;
    println!("wrote {}", path.display());
    for (v, compliant) in table.majority() {
        println!("{v:>8}  {}", if compliant { "compliant" } else { "non_compliant" });
    }
    println!("critical value {}", table.critical);
    Ok(())
}

fn cmd_validate(file: PathBuf) -> Result<()> {
    let cfg = load_config(Some(&file))?;
    print!("{}", render_config(&cfg));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, common } => cmd_run(config, common).map(|_| true),
        Command::Preset { name, strict, common } => cmd_preset(name, strict, common),
        Command::Sweep {
            param,
            grid,
            dpmin,
            replicas,
            config,
            common,
        } => cmd_sweep(param, grid, dpmin, replicas, config, common).map(|_| true),
        Command::Validate { file } => cmd_validate(file).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
