use std::path::{Path, PathBuf};

use air_core::calibration::{CalibrationResult, SessionConfig};
use air_core::evaluation::{BenchmarkConfig, SceneSource, StandardScene};
use air_core::rig::{PanTiltState, RigModel};
use air_core::upr::EyePose;
use air_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Run configuration shared by all subcommands. Relative paths resolve
/// against the directory of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Ground-truth rig; the built-in rig when absent.
    pub rig: Option<PathBuf>,
    /// Calibration used for correction; the ground truth when absent.
    pub calibration: Option<PathBuf>,
    /// Input of `calibrate`.
    pub session: Option<PathBuf>,
    pub simulation: SessionConfig,
    pub benchmark: BenchmarkConfig,
    /// Room used by `correct` and `render-user-view`.
    pub scene: SceneSource,
    pub correction: bool,
    pub overlays: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            rig: None,
            calibration: None,
            session: None,
            simulation: SessionConfig::default(),
            benchmark: BenchmarkConfig::default(),
            scene: SceneSource::Standard(StandardScene::Oblique),
            correction: true,
            overlays: true,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub eye: Option<EyePose>,
    pub pan_deg: Option<f64>,
    pub tilt_deg: Option<f64>,
    pub no_correction: bool,
}

impl RunConfig {
    /// Loads `path` (or the defaults), applies the overrides and rewrites
    /// relative paths against the configuration's directory.
    pub fn resolve(path: Option<&Path>, o: &Overrides) -> Result<RunConfig> {
        let (mut cfg, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                let cfg: RunConfig =
                    serde_json::from_str(&text).map_err(|e| Error::json(p.display().to_string(), e))?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (cfg, base)
            }
            None => (RunConfig::default(), PathBuf::from(".")),
        };
        if let Some(seed) = o.seed {
            cfg.seed = seed;
        }
        cfg.simulation.seed = cfg.seed;
        cfg.benchmark.depth_noise.seed = cfg.seed;
        if let Some(eye) = o.eye {
            cfg.benchmark.eye = eye;
        }
        let s = cfg.benchmark.state;
        cfg.benchmark.state = PanTiltState::new(
            o.pan_deg.map_or(s.alpha, f64::to_radians),
            o.tilt_deg.map_or(s.beta, f64::to_radians),
        );
        if o.no_correction {
            cfg.correction = false;
        }
        for p in [&mut cfg.rig, &mut cfg.calibration, &mut cfg.session].into_iter().flatten() {
            *p = base.join(&*p);
        }
        if let SceneSource::File(p) = &mut cfg.scene {
            *p = base.join(&*p);
        }
        for case in std::iter::once(&mut cfg.benchmark.base).chain(cfg.benchmark.cases.iter_mut()) {
            if let SceneSource::File(p) = &mut case.scene {
                *p = base.join(&*p);
            }
        }
        cfg.simulation.validate()?;
        cfg.benchmark.validate()?;
        Ok(cfg)
    }

    pub fn truth(&self) -> Result<RigModel> {
        match &self.rig {
            Some(p) => RigModel::load(p),
            None => Ok(RigModel::default_ground_truth()),
        }
    }

    /// The rig the correction believes in.
    pub fn estimate(&self, truth: &RigModel) -> Result<RigModel> {
        match &self.calibration {
            Some(p) => Ok(CalibrationResult::load(p)?.to_rig(truth.limit)),
            None => Ok(truth.clone()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn parse_eye(s: &str) -> std::result::Result<EyePose, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}")))
        .collect::<std::result::Result<_, _>>()?;
    let [x, y, z] = v[..] else {
        return Err(format!("expected x,y,z, got {} values", v.len()));
    };
    EyePose::new(x, y, z).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eye_parsing() {
        let e = parse_eye("0.1, -0.2,1.5").unwrap();
        assert_eq!((e.e_x, e.e_y, e.e_z), (0.1, -0.2, 1.5));
        assert!(parse_eye("1,2").is_err());
        assert!(parse_eye("0,0,0").is_err());
    }

    #[test]
    fn overrides_apply() {
        let o = Overrides {
            seed: Some(7),
            pan_deg: Some(10.0),
            no_correction: true,
            ..Default::default()
        };
        let cfg = RunConfig::resolve(None, &o).unwrap();
        assert_eq!(cfg.simulation.seed, 7);
        assert_eq!(cfg.benchmark.depth_noise.seed, 7);
        assert!((cfg.benchmark.state.alpha - 10f64.to_radians()).abs() < 1e-15);
        assert!(!cfg.correction);
    }

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }
}
