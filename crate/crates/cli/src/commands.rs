//! Subcommand bodies. Each takes a resolved config and returns the output
//! bytes, leaving flags, files and exit codes to the binary.

use std::fmt::Write as _;
use std::io::Write;

use risim_core::channel::realize_range;
use risim_core::dump::{DumpHeader, DumpWriter};
use risim_core::geometry::{recommend_positions, validate_scenario, Band, Environment, Violation, WallPlacement};
use risim_core::metrics::{
    dbm_to_watts, dbw_to_watts, power_scaling_sweep, rate_heatmap_with_progress, rate_table as core_rate_table,
};

use crate::config::{ConfigFile, RunConfig, ScenarioSection, SimulationSection};
use crate::error::{CliError, Result};

/// Realizations generated per parallel batch while dumping.
const DUMP_BATCH: u64 = 4096;

/// Scenario violations first (exit 3), then the remaining parameters.
pub fn check(cfg: &RunConfig) -> Result<()> {
    let v = validate_scenario(&cfg.channel.scenario);
    if !v.is_empty() {
        return Err(CliError::Violations(v));
    }
    cfg.channel.validate()?;
    Ok(())
}

/// Comment block heading every text output: the resolved config and seed.
pub fn header_block(kind: &str, cfg: &RunConfig) -> String {
    let mut out = format!("# risim {kind}\n# seed: {}\n# config:\n", cfg.channel.seed);
    for line in cfg.to_toml().lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            let _ = writeln!(out, "#   {line}");
        }
    }
    out
}

pub fn simulate<W: Write>(cfg: &RunConfig, out: W) -> Result<W> {
    check(cfg)?;
    let c = &cfg.channel;
    let header = DumpHeader {
        elements: c.scenario.n_elements as u32,
        realizations: c.realizations,
        seed: c.seed,
        config: cfg.to_toml(),
    };
    let mut w = DumpWriter::new(out, cfg.output.format, header)?;
    let mut start = 0;
    while start < c.realizations {
        let end = (start + DUMP_BATCH).min(c.realizations);
        for r in realize_range(c, start..end)? {
            w.write(&r)?;
        }
        start = end;
    }
    Ok(w.finish()?)
}

/// Mean rate for every rule and transmit power.
pub fn rate_table(cfg: &RunConfig) -> Result<String> {
    check(cfg)?;
    let n0 = dbm_to_watts(cfg.rate.noise_dbm);
    let mut out = header_block("rate table", cfg);
    out.push_str("rule,pt_dbw,mean_rate,rate_std,std_error,mean_snr_db,realizations\n");
    for &rule in &cfg.rate.rules {
        let rows = core_rate_table(&cfg.channel, rule, &cfg.rate.pt_dbw, n0)?;
        for (pt, r) in cfg.rate.pt_dbw.iter().zip(rows) {
            let _ = writeln!(
                out,
                "{rule},{pt},{},{},{},{},{}",
                r.mean_rate, r.rate_std, r.std_error, r.mean_snr_db, r.count
            );
        }
    }
    Ok(out)
}

pub fn heatmap(cfg: &RunConfig) -> Result<String> {
    heatmap_with_progress(cfg, |_, _| {})
}

/// Rate at every grid point, one row per cell, `y` outer.
pub fn heatmap_with_progress<F: Fn(usize, usize)>(cfg: &RunConfig, progress: F) -> Result<String> {
    check(cfg)?;
    let h = &cfg.heatmap;
    let grid = h.grid.as_ref().ok_or(CliError::MissingKey("heatmap.xs"))?;
    let map = rate_heatmap_with_progress(
        &cfg.channel,
        grid,
        h.rule,
        dbw_to_watts(h.pt_dbw),
        dbm_to_watts(cfg.rate.noise_dbm),
        progress,
    )?;
    let mut out = header_block("rate heatmap", cfg);
    out.push_str("x,y,z,mean_rate,rate_std,std_error,mean_snr_db\n");
    for c in &map.cells {
        let r = &c.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.rx.x, c.rx.y, c.rx.z, r.mean_rate, r.rate_std, r.std_error, r.mean_snr_db
        );
    }
    Ok(out)
}

/// Mean SNR against element count under pure LOS.
pub fn scaling(cfg: &RunConfig) -> Result<String> {
    check(cfg)?;
    let s = &cfg.scaling;
    let rows = power_scaling_sweep(
        &cfg.channel,
        &s.elements,
        s.rule,
        dbw_to_watts(s.pt_dbw),
        dbm_to_watts(cfg.rate.noise_dbm),
    )?;
    let mut out = header_block("power scaling", cfg);
    out.push_str("elements,mean_snr_db,mean_rate,std_error\n");
    for p in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.n_elements, p.report.mean_snr_db, p.report.mean_rate, p.report.std_error
        );
    }
    Ok(out)
}

pub fn validate(cfg: &RunConfig) -> Vec<Violation> {
    validate_scenario(&cfg.channel.scenario)
}

/// Violation listing, one `CODE: message` per line.
pub fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| format!("{v}\n")).collect()
}

/// A config file holding the example placement for the given scene.
pub fn recommend(environment: Environment, wall: WallPlacement, band: Band, seed: Option<u64>) -> Result<String> {
    let s = recommend_positions(environment, wall);
    let layer = ConfigFile {
        scenario: ScenarioSection {
            environment: Some(environment),
            frequency_ghz: Some(band),
            wall: Some(wall),
            tx: Some(s.tx),
            rx: Some(s.rx),
            ris: Some(s.ris),
            elements: Some(s.n_elements),
            element_spacing: None,
            direct_link: Some(s.direct_link_present),
        },
        simulation: SimulationSection {
            realizations: None,
            seed,
        },
        ..Default::default()
    };
    Ok(RunConfig::resolve(layer, None)?.to_toml())
}
