//! Run configuration files.
//!
//! A config file is TOML with one table per concern. Every key is optional
//! in the file itself; keys set in a file override the matching command-line
//! flag. After merging, `scenario.environment`, `scenario.wall`,
//! `scenario.tx`, `scenario.rx` and `scenario.ris` must be present.
//!
//! ```toml
//! [scenario]
//! environment = "inh"          # inh | umi
//! frequency_ghz = 28           # 28 | 73
//! wall = "side"                # side | opposite
//! tx = [0.0, 25.0, 2.0]
//! rx = [38.0, 48.0, 1.0]
//! ris = [40.0, 50.0, 2.0]      # array center
//! elements = 256               # perfect square
//! element_spacing = 0.005      # meters, default half a wavelength
//! direct_link = true
//!
//! [simulation]
//! realizations = 1000
//! seed = 42                    # 0 ..= 2^63 - 1
//!
//! [link]                       # linear gains
//! tx_gain = 1.0
//! rx_gain = 1.0
//! element_gain_max = 3.14159
//! efficiency = 1.0
//!
//! [path_loss]                  # close-in model
//! los_exponent = 1.73
//! los_shadow_std_db = 3.02
//! nlos_exponent = 3.19
//! nlos_shadow_std_db = 8.29
//! reference_distance = 1.0
//!
//! [clusters]
//! mean_clusters = 1.8
//! max_subrays = 30
//! azimuth_spread_deg = 60.0
//! elevation_spread_deg = 20.0
//! subray_spread_deg = 5.0
//! min_distance = 1.0
//!
//! [options]
//! shadowing = true
//! scattering = true
//! los = "random"               # random | force_los | force_nlos
//! steering = "far_field"       # far_field | exact
//!
//! [rate]
//! rules = ["off", "random", "optimal"]
//! pt_dbw = [-20.0, -10.0, 0.0, 10.0]
//! noise_dbm = -100.0
//!
//! [heatmap]
//! xs = [10.0, 25.0, 40.0]
//! ys = [30.0, 42.0, 54.0]
//! z = 1.0                      # default: scenario Rx height
//! rule = "optimal"
//! pt_dbw = 0.0
//!
//! [scaling]
//! elements = [16, 64, 256, 1024]
//! rule = "optimal"
//! pt_dbw = 0.0
//!
//! [output]
//! format = "csv"               # csv | binary
//! path = "channels.csv"
//! ```

use std::path::PathBuf;

use risim_core::channel::{ChannelConfig, ChannelOptions, LosMode, Steering};
use risim_core::dump::DumpFormat;
use risim_core::geometry::{Band, Environment, Point3, Scenario, WallPlacement, DEFAULT_ELEMENTS};
use risim_core::metrics::{ProfileRule, RxGrid, DEFAULT_NOISE_DBM, DEFAULT_PT_SWEEP_DBW};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_REALIZATIONS: u64 = 1000;
pub const DEFAULT_SCALING_ELEMENTS: [usize; 4] = [16, 64, 256, 1024];

/// Environment variable consulted for the seed when neither the file nor
/// the flags set one.
pub const SEED_ENV: &str = "SIMRIS_SEED";

macro_rules! section {
    ($(#[$m:meta])* $name:ident { $($field:ident: $ty:ty),* $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $(
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }

        impl $name {
            /// Fields set in `over` win.
            pub fn merge(self, over: Self) -> Self {
                Self { $($field: over.$field.or(self.$field)),* }
            }
        }
    };
}

section!(ScenarioSection {
    environment: Environment,
    frequency_ghz: Band,
    wall: WallPlacement,
    tx: Point3,
    rx: Point3,
    ris: Point3,
    elements: usize,
    element_spacing: f64,
    direct_link: bool,
});

section!(SimulationSection {
    realizations: u64,
    seed: u64,
});

section!(LinkSection {
    tx_gain: f64,
    rx_gain: f64,
    element_gain_max: f64,
    efficiency: f64,
});

section!(PathLossSection {
    los_exponent: f64,
    los_shadow_std_db: f64,
    nlos_exponent: f64,
    nlos_shadow_std_db: f64,
    reference_distance: f64,
});

section!(ClusterSection {
    mean_clusters: f64,
    max_subrays: u32,
    azimuth_spread_deg: f64,
    elevation_spread_deg: f64,
    subray_spread_deg: f64,
    min_distance: f64,
});

section!(OptionsSection {
    shadowing: bool,
    scattering: bool,
    los: LosMode,
    steering: Steering,
});

section!(RateSection {
    rules: Vec<ProfileRule>,
    pt_dbw: Vec<f64>,
    noise_dbm: f64,
});

section!(HeatmapSection {
    xs: Vec<f64>,
    ys: Vec<f64>,
    z: f64,
    rule: ProfileRule,
    pt_dbw: f64,
});

section!(ScalingSection {
    elements: Vec<usize>,
    rule: ProfileRule,
    pt_dbw: f64,
});

section!(OutputSection {
    format: DumpFormat,
    path: PathBuf,
});

/// One config layer as written in a file or assembled from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: ScenarioSection,
    pub simulation: SimulationSection,
    pub link: LinkSection,
    pub path_loss: PathLossSection,
    pub clusters: ClusterSection,
    pub options: OptionsSection,
    pub rate: RateSection,
    pub heatmap: HeatmapSection,
    pub scaling: ScalingSection,
    pub output: OutputSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn merge(self, over: Self) -> Self {
        Self {
            scenario: self.scenario.merge(over.scenario),
            simulation: self.simulation.merge(over.simulation),
            link: self.link.merge(over.link),
            path_loss: self.path_loss.merge(over.path_loss),
            clusters: self.clusters.merge(over.clusters),
            options: self.options.merge(over.options),
            rate: self.rate.merge(over.rate),
            heatmap: self.heatmap.merge(over.heatmap),
            scaling: self.scaling.merge(over.scaling),
            output: self.output.merge(over.output),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSettings {
    pub rules: Vec<ProfileRule>,
    pub pt_dbw: Vec<f64>,
    pub noise_dbm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSettings {
    /// Absent until both axes are given.
    pub grid: Option<RxGrid>,
    pub rule: ProfileRule,
    pub pt_dbw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSettings {
    pub elements: Vec<usize>,
    pub rule: ProfileRule,
    pub pt_dbw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSettings {
    pub format: DumpFormat,
    pub path: Option<PathBuf>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub channel: ChannelConfig,
    pub rate: RateSettings,
    pub heatmap: HeatmapSettings,
    pub scaling: ScalingSettings,
    pub output: OutputSettings,
}

fn required<T>(v: Option<T>, key: &'static str) -> Result<T> {
    v.ok_or(CliError::MissingKey(key))
}

impl RunConfig {
    /// Fills defaults into a merged layer. `env_seed` is used only when the
    /// layer has no seed.
    pub fn resolve(file: ConfigFile, env_seed: Option<u64>) -> Result<Self> {
        let s = file.scenario;
        let scenario = Scenario {
            environment: required(s.environment, "scenario.environment")?,
            band: s.frequency_ghz.unwrap_or(Band::Ghz28),
            wall: required(s.wall, "scenario.wall")?,
            tx: required(s.tx, "scenario.tx")?,
            rx: required(s.rx, "scenario.rx")?,
            ris: required(s.ris, "scenario.ris")?,
            n_elements: s.elements.unwrap_or(DEFAULT_ELEMENTS),
            element_spacing: s.element_spacing,
            direct_link_present: s.direct_link.unwrap_or(true),
        };
        let seed = file.simulation.seed.or(env_seed).unwrap_or(0);
        if seed > i64::MAX as u64 {
            return Err(CliError::Invalid {
                key: "simulation.seed",
                reason: format!("{seed} exceeds {}", i64::MAX),
            });
        }
        let realizations = file.simulation.realizations.unwrap_or(DEFAULT_REALIZATIONS);
        let mut channel = ChannelConfig::new(scenario, realizations, seed);

        let l = file.link;
        channel.link.tx_gain = l.tx_gain.unwrap_or(channel.link.tx_gain);
        channel.link.rx_gain = l.rx_gain.unwrap_or(channel.link.rx_gain);
        channel.link.element_gain_max = l.element_gain_max.unwrap_or(channel.link.element_gain_max);
        channel.link.efficiency = l.efficiency.unwrap_or(channel.link.efficiency);

        let p = file.path_loss;
        let pl = &mut channel.path_loss;
        pl.los.exponent = p.los_exponent.unwrap_or(pl.los.exponent);
        pl.los.shadow_std_db = p.los_shadow_std_db.unwrap_or(pl.los.shadow_std_db);
        pl.nlos.exponent = p.nlos_exponent.unwrap_or(pl.nlos.exponent);
        pl.nlos.shadow_std_db = p.nlos_shadow_std_db.unwrap_or(pl.nlos.shadow_std_db);
        pl.reference_distance = p.reference_distance.unwrap_or(pl.reference_distance);

        let c = file.clusters;
        let cs = &mut channel.clusters;
        cs.mean_clusters = c.mean_clusters.unwrap_or(cs.mean_clusters);
        cs.max_subrays = c.max_subrays.unwrap_or(cs.max_subrays);
        cs.azimuth_spread_deg = c.azimuth_spread_deg.unwrap_or(cs.azimuth_spread_deg);
        cs.elevation_spread_deg = c.elevation_spread_deg.unwrap_or(cs.elevation_spread_deg);
        cs.subray_spread_deg = c.subray_spread_deg.unwrap_or(cs.subray_spread_deg);
        cs.min_distance = c.min_distance.unwrap_or(cs.min_distance);

        let o = file.options;
        let d = ChannelOptions::default();
        channel.options = ChannelOptions {
            shadowing: o.shadowing.unwrap_or(d.shadowing),
            scattering: o.scattering.unwrap_or(d.scattering),
            los: o.los.unwrap_or(d.los),
            steering: o.steering.unwrap_or(d.steering),
        };

        let rate = RateSettings {
            rules: file
                .rate
                .rules
                .unwrap_or_else(|| vec![ProfileRule::Off, ProfileRule::Random, ProfileRule::Optimal]),
            pt_dbw: file.rate.pt_dbw.unwrap_or_else(|| DEFAULT_PT_SWEEP_DBW.to_vec()),
            noise_dbm: file.rate.noise_dbm.unwrap_or(DEFAULT_NOISE_DBM),
        };
        if rate.rules.is_empty() || rate.pt_dbw.is_empty() {
            return Err(CliError::Invalid {
                key: "rate",
                reason: "rules and pt_dbw must be non-empty".into(),
            });
        }

        let h = file.heatmap;
        let grid = match (h.xs, h.ys) {
            (Some(xs), Some(ys)) => Some(RxGrid {
                xs,
                ys,
                z: h.z.unwrap_or(channel.scenario.rx.z),
            }),
            (None, None) => None,
            (None, Some(_)) => return Err(CliError::MissingKey("heatmap.xs")),
            (Some(_), None) => return Err(CliError::MissingKey("heatmap.ys")),
        };
        let heatmap = HeatmapSettings {
            grid,
            rule: h.rule.unwrap_or(ProfileRule::Optimal),
            pt_dbw: h.pt_dbw.unwrap_or(0.0),
        };

        let scaling = ScalingSettings {
            elements: file
                .scaling
                .elements
                .unwrap_or_else(|| DEFAULT_SCALING_ELEMENTS.to_vec()),
            rule: file.scaling.rule.unwrap_or(ProfileRule::Optimal),
            pt_dbw: file.scaling.pt_dbw.unwrap_or(0.0),
        };

        let output = OutputSettings {
            format: file.output.format.unwrap_or(DumpFormat::Csv),
            path: file.output.path,
        };

        Ok(Self {
            channel,
            rate,
            heatmap,
            scaling,
            output,
        })
    }

    /// Every resolved value as a config layer.
    pub fn to_file(&self) -> ConfigFile {
        let c = &self.channel;
        let s = &c.scenario;
        ConfigFile {
            scenario: ScenarioSection {
                environment: Some(s.environment),
                frequency_ghz: Some(s.band),
                wall: Some(s.wall),
                tx: Some(s.tx),
                rx: Some(s.rx),
                ris: Some(s.ris),
                elements: Some(s.n_elements),
                element_spacing: s.element_spacing,
                direct_link: Some(s.direct_link_present),
            },
            simulation: SimulationSection {
                realizations: Some(c.realizations),
                seed: Some(c.seed),
            },
            link: LinkSection {
                tx_gain: Some(c.link.tx_gain),
                rx_gain: Some(c.link.rx_gain),
                element_gain_max: Some(c.link.element_gain_max),
                efficiency: Some(c.link.efficiency),
            },
            path_loss: PathLossSection {
                los_exponent: Some(c.path_loss.los.exponent),
                los_shadow_std_db: Some(c.path_loss.los.shadow_std_db),
                nlos_exponent: Some(c.path_loss.nlos.exponent),
                nlos_shadow_std_db: Some(c.path_loss.nlos.shadow_std_db),
                reference_distance: Some(c.path_loss.reference_distance),
            },
            clusters: ClusterSection {
                mean_clusters: Some(c.clusters.mean_clusters),
                max_subrays: Some(c.clusters.max_subrays),
                azimuth_spread_deg: Some(c.clusters.azimuth_spread_deg),
                elevation_spread_deg: Some(c.clusters.elevation_spread_deg),
                subray_spread_deg: Some(c.clusters.subray_spread_deg),
                min_distance: Some(c.clusters.min_distance),
            },
            options: OptionsSection {
                shadowing: Some(c.options.shadowing),
                scattering: Some(c.options.scattering),
                los: Some(c.options.los),
                steering: Some(c.options.steering),
            },
            rate: RateSection {
                rules: Some(self.rate.rules.clone()),
                pt_dbw: Some(self.rate.pt_dbw.clone()),
                noise_dbm: Some(self.rate.noise_dbm),
            },
            heatmap: HeatmapSection {
                xs: self.heatmap.grid.as_ref().map(|g| g.xs.clone()),
                ys: self.heatmap.grid.as_ref().map(|g| g.ys.clone()),
                z: self.heatmap.grid.as_ref().map(|g| g.z),
                rule: Some(self.heatmap.rule),
                pt_dbw: Some(self.heatmap.pt_dbw),
            },
            scaling: ScalingSection {
                elements: Some(self.scaling.elements.clone()),
                rule: Some(self.scaling.rule),
                pt_dbw: Some(self.scaling.pt_dbw),
            },
            output: OutputSection {
                format: Some(self.output.format),
                path: self.output.path.clone(),
            },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("resolved config serializes")
    }
}

/// Parses a standalone config file.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    RunConfig::resolve(ConfigFile::parse(text)?, None)
}

/// Reads [`SEED_ENV`]; an unparsable value is a config error.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| CliError::Invalid {
            key: SEED_ENV,
            reason: format!("`{v}` is not an unsigned integer"),
        }),
        Err(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INDOOR_SIDE: &str = include_str!("../configs/indoor_side.toml");

    #[test]
    fn sample_config_matches_indoor_scenario() {
        let cfg = parse_config(INDOOR_SIDE).unwrap();
        let s = &cfg.channel.scenario;
        assert_eq!(s.environment, Environment::InH);
        assert_eq!(s.wall, WallPlacement::SideWall);
        assert_eq!(s.tx, Point3::new(0.0, 25.0, 2.0));
        assert_eq!(s.ris, Point3::new(40.0, 50.0, 2.0));
        assert_eq!(s.rx, Point3::new(38.0, 48.0, 1.0));
        assert_eq!(s.band, Band::Ghz28);
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = parse_config(INDOOR_SIDE).unwrap();
        let again = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.to_toml(), again.to_toml());

        let mut full = cfg.clone();
        full.heatmap.grid = Some(RxGrid::linspace((1.0, 9.0), (2.0, 4.0), 3, 2, 1.2).unwrap());
        full.output.path = Some("out/x.bin".into());
        full.channel.scenario.element_spacing = Some(0.004);
        full.channel.options.steering = Steering::Exact;
        assert_eq!(parse_config(&full.to_toml()).unwrap(), full);
    }

    #[test]
    fn missing_required_key_is_named() {
        let text = INDOOR_SIDE.replace("tx = ", "# tx = ");
        match parse_config(&text) {
            Err(CliError::MissingKey(k)) => assert_eq!(k, "scenario.tx"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let text = format!("{INDOOR_SIDE}\n[link]\ngain_typo = 3.0\n");
        assert!(matches!(parse_config(&text), Err(CliError::Parse(_))));
    }

    #[test]
    fn seed_precedence() {
        let base = ConfigFile::parse(INDOOR_SIDE).unwrap();
        let mut no_seed = base.clone();
        no_seed.simulation.seed = None;

        let flags = ConfigFile {
            simulation: SimulationSection {
                seed: Some(7),
                ..Default::default()
            },
            ..Default::default()
        };
        // file beats flag
        let r = RunConfig::resolve(flags.clone().merge(base.clone()), Some(9)).unwrap();
        assert_eq!(r.channel.seed, base.simulation.seed.unwrap());
        // flag beats environment
        let r = RunConfig::resolve(flags.merge(no_seed.clone()), Some(9)).unwrap();
        assert_eq!(r.channel.seed, 7);
        let r = RunConfig::resolve(no_seed.clone(), Some(9)).unwrap();
        assert_eq!(r.channel.seed, 9);
        let r = RunConfig::resolve(no_seed, None).unwrap();
        assert_eq!(r.channel.seed, 0);
    }

    #[test]
    fn overrides_reach_channel_config() {
        let text = format!(
            "{INDOOR_SIDE}\n[path_loss]\nnlos_exponent = 3.5\n[clusters]\nmax_subrays = 10\n[options]\nshadowing = false\n"
        );
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.channel.path_loss.nlos.exponent, 3.5);
        assert_eq!(cfg.channel.path_loss.los.exponent, 1.73);
        assert_eq!(cfg.channel.clusters.max_subrays, 10);
        assert_eq!(cfg.channel.clusters.mean_clusters, 1.8);
        assert!(!cfg.channel.options.shadowing);
        assert!(cfg.channel.options.scattering);
    }

    #[test]
    fn half_grid_is_an_error() {
        let text = format!("{INDOOR_SIDE}\n[heatmap]\nxs = [1.0, 2.0]\n");
        assert!(matches!(parse_config(&text), Err(CliError::MissingKey("heatmap.ys"))));
    }

    #[test]
    fn oversized_seed_rejected() {
        let mut f = ConfigFile::parse(INDOOR_SIDE).unwrap();
        f.simulation.seed = Some(u64::MAX);
        assert!(matches!(RunConfig::resolve(f, None), Err(CliError::Invalid { .. })));
    }
}
