use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use pdnr::commands;
use pdnr::config::{Instant, OutputFormat, RunConfig};
use pdnr::parallel::{build_pool, worker_count};
use pdnr::{presets, RunError};

#[derive(Parser)]
#[command(name = "pdnr", version, about = "Pulse-driven parametric Kerr resonator simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean excitation number against time.
    Evolve(Common),
    /// Wigner functions at selected instants.
    Wigner {
        #[command(flatten)]
        common: Common,
        /// Instant selector (at_min_n, at_max_n, at_mid_n, at_time:<t>); repeatable, overrides the config.
        #[arg(long)]
        instant: Vec<String>,
    },
    /// Mean-field steady states and stroboscopic map.
    Semiclassical {
        #[command(flatten)]
        common: Common,
        /// Also write the stroboscopic point cloud.
        #[arg(long)]
        strobe: bool,
    },
    /// Heuristic regime label with the tested inequalities.
    Classify(Common),
    /// List the built-in presets.
    PresetList,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file, applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value = "pdnr-out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// 17 significant digits in every output.
    #[arg(long)]
    golden: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.preset {
            Some(name) => presets::find(name)
                .ok_or_else(|| RunError::UnknownPreset { name: name.clone(), available: presets::names().join(", ") })?
                .config(),
            None => RunConfig::default(),
        };
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_text(&text).with_context(|| format!("in {}", path.display()))?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(f) = self.format {
            cfg.format = match f {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
        }
        cfg.golden |= self.golden;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Evolve(c) => {
            let cfg = c.load()?;
            let pool = build_pool(worker_count()?)?;
            report(&commands::cmd_evolve(&cfg, &c.out, &pool)?);
        }
        Command::Wigner { common, instant } => {
            let mut cfg = common.load()?;
            if !instant.is_empty() {
                cfg.instants = instant
                    .iter()
                    .map(|s| Instant::parse(s).map_err(|m| RunError::Config { key: "instants".into(), message: m }))
                    .collect::<Result<_, _>>()?;
            }
            let pool = build_pool(worker_count()?)?;
            report(&commands::cmd_wigner(&cfg, &common.out, &pool)?);
        }
        Command::Semiclassical { common, strobe } => {
            let cfg = common.load()?;
            report(&commands::cmd_semiclassical(&cfg, &common.out, strobe)?);
        }
        Command::Classify(c) => println!("{}", commands::cmd_classify(&c.load()?)?),
        Command::PresetList => print!("{}", commands::cmd_preset_list()),
    }
    Ok(())
}
