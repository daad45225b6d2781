use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use risim::commands;
use risim::config::{
    env_seed, ConfigFile, HeatmapSection, OutputSection, RateSection, ScalingSection, ScenarioSection,
    SimulationSection,
};
use risim::{CliError, Result, RunConfig};
use risim_core::dump::DumpFormat;
use risim_core::geometry::{Band, Environment, Point3, WallPlacement};
use risim_core::metrics::ProfileRule;

#[derive(Parser)]
#[command(name = "risim", version, about = "RIS-assisted mmWave channel simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate channel realizations and write a dump file.
    Simulate(Common),
    /// Mean achievable rate per RIS profile and transmit power.
    Rate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        rules: Option<Vec<ProfileRule>>,
        /// Comma-separated transmit powers in dBW.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        pt_dbw: Option<Vec<f64>>,
        #[arg(long, allow_hyphen_values = true)]
        noise_dbm: Option<f64>,
    },
    /// Mean rate over a grid of Rx positions.
    Heatmap {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        xs: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        ys: Option<Vec<f64>>,
        /// Rx height for every cell; defaults to the scenario Rx height.
        #[arg(long)]
        z: Option<f64>,
        #[arg(long)]
        rule: Option<ProfileRule>,
        #[arg(long, allow_hyphen_values = true)]
        pt_dbw: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        noise_dbm: Option<f64>,
    },
    /// Mean SNR against the number of RIS elements under pure LOS.
    Scaling {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long)]
        rule: Option<ProfileRule>,
        #[arg(long, allow_hyphen_values = true)]
        pt_dbw: Option<f64>,
    },
    /// Check the scenario against the placement rules.
    Validate(Common),
    /// Print a config file with example positions for a scene.
    Recommend {
        #[arg(long, value_parser = parse_env)]
        env: Environment,
        #[arg(long, value_parser = parse_wall)]
        wall: WallPlacement,
        #[arg(long, value_parser = parse_band, default_value = "28")]
        freq: Band,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Scenario and output flags shared by the simulation commands.
#[derive(Args)]
struct Common {
    /// TOML config file; its keys override the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_env)]
    env: Option<Environment>,
    #[arg(long, value_parser = parse_band)]
    freq: Option<Band>,
    #[arg(long, value_parser = parse_wall)]
    wall: Option<WallPlacement>,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    tx: Option<Point3>,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    rx: Option<Point3>,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    ris: Option<Point3>,
    #[arg(long)]
    elements: Option<usize>,
    #[arg(long)]
    realizations: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    format: Option<DumpFormat>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_env(s: &str) -> std::result::Result<Environment, String> {
    match s.to_ascii_lowercase().as_str() {
        "inh" => Ok(Environment::InH),
        "umi" => Ok(Environment::UMi),
        _ => Err(format!("expected inh or umi, got `{s}`")),
    }
}

fn parse_wall(s: &str) -> std::result::Result<WallPlacement, String> {
    match s.to_ascii_lowercase().as_str() {
        "side" => Ok(WallPlacement::SideWall),
        "opposite" => Ok(WallPlacement::OppositeWall),
        _ => Err(format!("expected side or opposite, got `{s}`")),
    }
}

fn parse_band(s: &str) -> std::result::Result<Band, String> {
    match s {
        "28" => Ok(Band::Ghz28),
        "73" => Ok(Band::Ghz73),
        _ => Err(format!("expected 28 or 73, got `{s}`")),
    }
}

fn parse_point(s: &str) -> std::result::Result<Point3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(Point3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got `{s}`")),
    }
}

impl Common {
    fn layer(&self) -> ConfigFile {
        ConfigFile {
            scenario: ScenarioSection {
                environment: self.env,
                frequency_ghz: self.freq,
                wall: self.wall,
                tx: self.tx,
                rx: self.rx,
                ris: self.ris,
                elements: self.elements,
                ..Default::default()
            },
            simulation: SimulationSection {
                realizations: self.realizations,
                seed: self.seed,
            },
            output: OutputSection {
                format: self.format,
                path: self.out.clone(),
            },
            ..Default::default()
        }
    }

    /// Flags, then the config file on top, then defaults.
    fn resolve(&self, extra: ConfigFile) -> Result<RunConfig> {
        let mut merged = self.layer().merge(extra);
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
            merged = merged.merge(ConfigFile::parse(&text)?);
        }
        RunConfig::resolve(merged, env_seed()?)
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p.display(), e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("stdout", e)),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(common) => {
            let cfg = common.resolve(ConfigFile::default())?;
            let path = cfg.output.path.clone().ok_or(CliError::MissingKey("output.path"))?;
            let file = fs::File::create(&path).map_err(|e| CliError::io(path.display(), e))?;
            let mut w = commands::simulate(&cfg, BufWriter::new(file))?;
            w.flush().map_err(|e| CliError::io(path.display(), e))?;
            eprintln!("wrote {} realizations to {}", cfg.channel.realizations, path.display());
            Ok(())
        }
        Command::Rate {
            common,
            rules,
            pt_dbw,
            noise_dbm,
        } => {
            let cfg = common.resolve(ConfigFile {
                rate: RateSection {
                    rules,
                    pt_dbw,
                    noise_dbm,
                },
                ..Default::default()
            })?;
            emit(cfg.output.path.as_deref(), &commands::rate_table(&cfg)?)
        }
        Command::Heatmap {
            common,
            xs,
            ys,
            z,
            rule,
            pt_dbw,
            noise_dbm,
        } => {
            let cfg = common.resolve(ConfigFile {
                heatmap: HeatmapSection {
                    xs,
                    ys,
                    z,
                    rule,
                    pt_dbw,
                },
                rate: RateSection {
                    noise_dbm,
                    ..Default::default()
                },
                ..Default::default()
            })?;
            let text = commands::heatmap_with_progress(&cfg, |done, total| {
                eprint!("\rcells {done}/{total}");
                if done == total {
                    eprintln!();
                }
            })?;
            emit(cfg.output.path.as_deref(), &text)
        }
        Command::Scaling {
            common,
            n_list,
            rule,
            pt_dbw,
        } => {
            let cfg = common.resolve(ConfigFile {
                scaling: ScalingSection {
                    elements: n_list,
                    rule,
                    pt_dbw,
                },
                ..Default::default()
            })?;
            emit(cfg.output.path.as_deref(), &commands::scaling(&cfg)?)
        }
        Command::Validate(common) => {
            let cfg = common.resolve(ConfigFile::default())?;
            commands::check(&cfg)?;
            println!("ok: no violations");
            Ok(())
        }
        Command::Recommend {
            env,
            wall,
            freq,
            seed,
            out,
        } => emit(out.as_deref(), &commands::recommend(env, wall, freq, seed)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            print!("{}", commands::format_violations(e.violations()));
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
