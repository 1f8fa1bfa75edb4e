use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metric::{corner_dislocation, CornerSet};
use super::scenes::StandardScene;
use crate::exec::Exec;
use crate::rig::{PanTiltState, RigModel};
use crate::scene::{sense_depth, DepthNoiseModel, Hit, Raycast, Scene, DEFAULT_DISCONTINUITY_M};
use crate::upr::{upr_matrix, EyePose, UprMatrix, Viewport};
use crate::geometry::Vec3;
use crate::warp::{
    propagate_corners, render_user_view, simulate_projection_and_view, warp_to_projector, CheckerPattern, Content,
    CornerPath, PosedDevice, RasterImage, Unresolved, WorldGeometry,
};
use crate::{Error, Result};

/// Which geometry the correction is computed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometrySource {
    /// Depth image from the front camera, triangulated and lifted with the
    /// estimated rig pose.
    #[default]
    Sensed,
    /// The exact scene surfaces.
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneSource {
    Standard(StandardScene),
    File(PathBuf),
}

impl SceneSource {
    /// Relative file paths resolve against `base_dir`.
    pub fn load(&self, base_dir: &Path) -> Result<Scene> {
        match self {
            SceneSource::Standard(s) => s.build(),
            SceneSource::File(p) => Scene::load(base_dir.join(p)),
        }
    }
}

fn default_true() -> bool {
    true
}

/// One benchmark case as written in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub name: String,
    pub scene: SceneSource,
    #[serde(default = "default_true")]
    pub correction: bool,
    #[serde(default)]
    pub geometry: GeometrySource,
    /// Overrides the configuration-wide depth model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_noise: Option<DepthNoiseModel>,
}

impl CaseSpec {
    pub fn standard(scene: StandardScene, correction: bool) -> Self {
        let name = if correction {
            scene.name().to_string()
        } else {
            format!("{}_uncorrected", scene.name())
        };
        CaseSpec {
            name,
            scene: SceneSource::Standard(scene),
            correction,
            geometry: GeometrySource::Sensed,
            depth_noise: None,
        }
    }
}

/// Benchmark configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub eye: EyePose,
    pub state: PanTiltState,
    pub width_px: u32,
    pub height_px: u32,
    pub pattern: CheckerPattern,
    pub depth_noise: DepthNoiseModel,
    pub discontinuity_m: f64,
    /// Reference case; every other case is measured against its corners.
    pub base: CaseSpec,
    pub cases: Vec<CaseSpec>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        let mut cases: Vec<CaseSpec> = StandardScene::ALL[1..]
            .iter()
            .map(|s| CaseSpec::standard(*s, true))
            .collect();
        cases.push(CaseSpec::standard(StandardScene::Oblique, false));
        BenchmarkConfig {
            eye: EyePose::default_user(),
            state: PanTiltState::home(),
            width_px: 1920,
            height_px: 1080,
            pattern: CheckerPattern { rows: 7, cols: 10, square_px: 64 },
            depth_noise: DepthNoiseModel { sigma: 0.001, ..Default::default() },
            discontinuity_m: DEFAULT_DISCONTINUITY_M,
            base: CaseSpec::standard(StandardScene::Wall, true),
            cases,
        }
    }
}

impl BenchmarkConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: BenchmarkConfig =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.depth_noise.validate()?;
        self.viewport().validate()?;
        if !(self.discontinuity_m > 0.0) {
            return Err(Error::InvalidArgument("discontinuity_m must be positive".into()));
        }
        let mut names: Vec<&str> = self.cases.iter().map(|c| c.name.as_str()).collect();
        names.push(&self.base.name);
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!("case name {:?} is used twice", w[0])));
        }
        Ok(())
    }

    pub fn viewport(&self) -> Viewport {
        Viewport::for_eye(&self.eye, self.width_px, self.height_px)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// A case ready to run.
#[derive(Debug, Clone)]
pub struct BenchmarkCase {
    pub name: String,
    pub scene: Scene,
    pub correction: bool,
    pub geometry: GeometrySource,
    pub depth_noise: DepthNoiseModel,
}

impl BenchmarkCase {
    pub fn from_spec(spec: &CaseSpec, default_noise: &DepthNoiseModel, base_dir: &Path) -> Result<Self> {
        Ok(BenchmarkCase {
            name: spec.name.clone(),
            scene: spec.scene.load(base_dir)?,
            correction: spec.correction,
            geometry: spec.geometry,
            depth_noise: spec.depth_noise.unwrap_or(*default_noise),
        })
    }
}

/// The fixed part of a benchmark: the real rig, the rig the correction
/// believes in, and the viewing setup.
#[derive(Debug, Clone)]
pub struct BenchmarkSetup {
    pub truth: RigModel,
    pub estimate: RigModel,
    pub state: PanTiltState,
    pub eye: EyePose,
    pub viewport: Viewport,
    pub pattern: CheckerPattern,
    pub discontinuity_m: f64,
    pub exec: Exec,
}

impl BenchmarkSetup {
    pub fn from_config(config: &BenchmarkConfig, truth: RigModel, estimate: RigModel, exec: Exec) -> Self {
        BenchmarkSetup {
            truth,
            estimate,
            state: config.state,
            eye: config.eye,
            viewport: config.viewport(),
            pattern: config.pattern,
            discontinuity_m: config.discontinuity_m,
            exec,
        }
    }

    pub fn pattern_corners(&self) -> Vec<(usize, [f64; 2])> {
        self.pattern.corners(self.viewport.width_px, self.viewport.height_px)
    }
}

enum CaseGeometry<'a> {
    Sensed { mesh: WorldGeometry, valid_fraction: f64 },
    Truth(&'a Scene),
}

impl Raycast for CaseGeometry<'_> {
    fn raycast(&self, origin: &Vec3, direction: &Vec3) -> Option<Hit> {
        match self {
            CaseGeometry::Sensed { mesh, .. } => mesh.raycast(origin, direction),
            CaseGeometry::Truth(scene) => scene.raycast(origin, direction),
        }
    }
}

/// Everything derived from the setup for one case.
struct Prepared<'a> {
    geometry: CaseGeometry<'a>,
    upr: UprMatrix,
    estimated: PosedDevice,
    actual: PosedDevice,
    user: PosedDevice,
}

fn prepare<'a>(setup: &BenchmarkSetup, case: &'a BenchmarkCase) -> Result<Prepared<'a>> {
    let true_pose = setup.truth.rig_pose(setup.state)?;
    let est_pose = setup.estimate.rig_pose(setup.state)?;
    let geometry = match case.geometry {
        GeometrySource::Sensed => {
            let depth = sense_depth(
                &case.scene,
                &setup.truth.front_device,
                &true_pose.front_to_world,
                &case.depth_noise,
                setup.exec,
            )?;
            let mesh = WorldGeometry::from_depth(
                &depth,
                &setup.estimate.front_device,
                &est_pose.front_to_world,
                setup.discontinuity_m,
            )?;
            CaseGeometry::Sensed { mesh, valid_fraction: depth.valid_fraction() }
        }
        GeometrySource::GroundTruth => CaseGeometry::Truth(&case.scene),
    };
    let upr = upr_matrix(&setup.eye, &est_pose.rear_to_world.inverse())?;
    let (cam, cam_to_rear) = setup.viewport.user_camera(&setup.eye)?;
    Ok(Prepared {
        geometry,
        upr,
        estimated: PosedDevice::new(setup.estimate.proj_device, est_pose.proj_to_world),
        actual: PosedDevice::new(setup.truth.proj_device, true_pose.proj_to_world),
        user: PosedDevice::new(cam, true_pose.rear_to_world.compose(&cam_to_rear)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvedCorner {
    pub index: usize,
    pub reason: Unresolved,
}

/// Corners of one case as seen by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub corners: CornerSet,
    pub unresolved: Vec<UnresolvedCorner>,
    /// Fraction of valid depth pixels; absent for ground-truth geometry.
    pub valid_depth_fraction: Option<f64>,
    pub geometry_triangles: Option<usize>,
}

pub fn evaluate_case(setup: &BenchmarkSetup, case: &BenchmarkCase) -> Result<CaseOutcome> {
    let prep = prepare(setup, case)?;
    let path = CornerPath {
        geometry: &prep.geometry,
        scene: &case.scene,
        upr: &prep.upr,
        viewport: &setup.viewport,
        estimated: prep.estimated,
        actual: prep.actual,
        user: prep.user,
    };
    let mut corners = Vec::new();
    let mut unresolved = Vec::new();
    for (index, r) in propagate_corners(&setup.pattern_corners(), &path, case.correction) {
        match r {
            Ok(p) => corners.push((index, p)),
            Err(reason) => unresolved.push(UnresolvedCorner { index, reason }),
        }
    }
    let (valid_depth_fraction, geometry_triangles) = match &prep.geometry {
        CaseGeometry::Sensed { mesh, valid_fraction } => (Some(*valid_fraction), Some(mesh.triangle_count())),
        CaseGeometry::Truth(_) => (None, None),
    };
    Ok(CaseOutcome {
        corners: CornerSet::new(prep.user.device.width, prep.user.device.height, corners)?,
        unresolved,
        valid_depth_fraction,
        geometry_triangles,
    })
}

/// Images of one case: the desired view, the projector framebuffer and the
/// simulated user view.
#[derive(Debug, Clone)]
pub struct CaseImages {
    pub pass1: RasterImage,
    pub framebuffer: RasterImage,
    pub user_view: RasterImage,
}

pub fn render_case(setup: &BenchmarkSetup, case: &BenchmarkCase) -> Result<CaseImages> {
    let prep = prepare(setup, case)?;
    let pass1 = render_user_view(&Content::Checker(setup.pattern), &prep.upr, &setup.viewport, setup.exec)?;
    let framebuffer = if case.correction {
        warp_to_projector(
            &prep.geometry,
            &prep.upr,
            &setup.viewport,
            &pass1,
            &prep.estimated.device,
            &prep.estimated.to_world,
            setup.exec,
        )?
    } else {
        pass1.clone()
    };
    let user_view = simulate_projection_and_view(&case.scene, &framebuffer, &prep.actual, &prep.user, setup.exec)?;
    Ok(CaseImages { pass1, framebuffer, user_view })
}

/// Marks base corners with green boxes and case corners with red crosses.
pub fn overlay_corners(view: &RasterImage, base: &CornerSet, test: &CornerSet) -> RasterImage {
    let mut out = view.clone();
    for (_, p) in &base.corners {
        out.draw_box(p[0], p[1], 6, [0, 200, 0]);
    }
    for (_, p) in &test.corners {
        out.draw_cross(p[0], p[1], 5, [230, 0, 0]);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub name: String,
    pub correction: bool,
    pub geometry: GeometrySource,
    /// Mean corner dislocation against the base case, pixels.
    pub mean_dislocation_px: Option<f64>,
    pub per_corner_px: Vec<(usize, f64)>,
    pub resolved: usize,
    pub unresolved: Vec<UnresolvedCorner>,
    pub valid_depth_fraction: Option<f64>,
    pub geometry_triangles: Option<usize>,
    /// Set when the case could not be evaluated.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub base: String,
    pub base_corners: CornerSet,
    pub base_unresolved: Vec<UnresolvedCorner>,
    pub cases: Vec<CaseReport>,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn case(&self, name: &str) -> Option<&CaseReport> {
        self.cases.iter().find(|c| c.name == name)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "base: {} ({} corners, {} unresolved)",
            self.base,
            self.base_corners.corners.len(),
            self.base_unresolved.len()
        );
        let _ = writeln!(
            s,
            "{:<24} {:>10} {:>12} {:>9} {:>11} {:>11}",
            "case", "corrected", "mean px", "resolved", "unresolved", "valid depth"
        );
        for c in &self.cases {
            let mean = match (&c.error, c.mean_dislocation_px) {
                (Some(_), _) => "error".to_string(),
                (None, Some(m)) => format!("{m:.3}"),
                (None, None) => "-".to_string(),
            };
            let valid = c
                .valid_depth_fraction
                .map(|v| format!("{:.1}%", 100.0 * v))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:<24} {:>10} {:>12} {:>9} {:>11} {:>11}",
                c.name,
                if c.correction { "yes" } else { "no" },
                mean,
                c.resolved,
                c.unresolved.len(),
                valid
            );
            if let Some(e) = &c.error {
                let _ = writeln!(s, "    {e}");
            }
        }
        s
    }
}

/// Runs every case against the base case. A failing base aborts; a failing
/// case is recorded in its report and the run continues.
pub fn run_benchmark(setup: &BenchmarkSetup, base: &BenchmarkCase, cases: &[BenchmarkCase]) -> Result<BenchmarkReport> {
    let base_outcome = evaluate_case(setup, base).map_err(|e| e.at_stage("base case"))?;
    let reports = cases
        .iter()
        .map(|case| {
            let mut report = CaseReport {
                name: case.name.clone(),
                correction: case.correction,
                geometry: case.geometry,
                mean_dislocation_px: None,
                per_corner_px: Vec::new(),
                resolved: 0,
                unresolved: Vec::new(),
                valid_depth_fraction: None,
                geometry_triangles: None,
                error: None,
            };
            match evaluate_case(setup, case) {
                Ok(out) => {
                    report.resolved = out.corners.corners.len();
                    report.unresolved = out.unresolved;
                    report.valid_depth_fraction = out.valid_depth_fraction;
                    report.geometry_triangles = out.geometry_triangles;
                    match corner_dislocation(&base_outcome.corners, &out.corners) {
                        Ok(d) => {
                            report.mean_dislocation_px = Some(d.mean_px);
                            report.per_corner_px = d.per_corner;
                        }
                        Err(e) => report.error = Some(e.to_string()),
                    }
                }
                Err(e) => report.error = Some(e.to_string()),
            }
            report
        })
        .collect();
    Ok(BenchmarkReport {
        base: base.name.clone(),
        base_corners: base_outcome.corners,
        base_unresolved: base_outcome.unresolved,
        cases: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_setup() -> BenchmarkSetup {
        let truth = RigModel::default_ground_truth();
        let cfg = BenchmarkConfig {
            width_px: 480,
            height_px: 270,
            pattern: CheckerPattern::new(5, 7, 20).unwrap(),
            ..Default::default()
        };
        BenchmarkSetup::from_config(&cfg, truth.clone(), truth, Exec::Parallel)
    }

    fn case(scene: StandardScene, correction: bool, geometry: GeometrySource) -> BenchmarkCase {
        BenchmarkCase {
            name: scene.name().into(),
            scene: scene.build().unwrap(),
            correction,
            geometry,
            depth_noise: DepthNoiseModel::ideal(),
        }
    }

    #[test]
    fn perfect_rig_on_exact_geometry_is_exact() {
        let setup = small_setup();
        let out = evaluate_case(&setup, &case(StandardScene::Box, true, GeometrySource::GroundTruth)).unwrap();
        // Wall corners in the box's projector shadow cannot be shown.
        assert!(out.unresolved.iter().all(|u| u.reason == Unresolved::HiddenFromProjector));
        assert!(out.corners.corners.len() >= 12);
        let want: std::collections::BTreeMap<_, _> = setup.pattern_corners().into_iter().collect();
        for (k, got) in &out.corners.corners {
            let w = want[k];
            assert!((got[0] - w[0]).abs() < 1e-6 && (got[1] - w[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn failing_case_is_reported_and_run_continues() {
        let setup = small_setup();
        let base = case(StandardScene::Wall, true, GeometrySource::GroundTruth);
        let empty = BenchmarkCase {
            name: "empty".into(),
            scene: Scene::new(vec![], vec![]).unwrap(),
            correction: true,
            geometry: GeometrySource::GroundTruth,
            depth_noise: DepthNoiseModel::ideal(),
        };
        let good = case(StandardScene::Oblique, true, GeometrySource::GroundTruth);
        let report = run_benchmark(&setup, &base, &[empty, good]).unwrap();
        assert!(report.cases[0].error.is_some());
        assert!(report.cases[1].mean_dislocation_px.unwrap() < 1e-6);
        assert!(report.summary().contains("error"));
    }

    #[test]
    fn default_config_round_trips() {
        let cfg = BenchmarkConfig::default();
        let back: BenchmarkConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        back.validate().unwrap();
    }

    #[test]
    fn duplicate_case_names_rejected() {
        let mut cfg = BenchmarkConfig::default();
        cfg.cases.push(cfg.cases[0].clone());
        assert!(cfg.validate().is_err());
    }
}
