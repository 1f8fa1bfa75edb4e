use std::fs;
use std::path::{Path, PathBuf};

/// Scene paths in a resolved configuration are already complete.
const RESOLVED: &str = "";

use air_core::calibration::{run_full_calibration, simulate_session, CalibrationSession};
use air_core::evaluation::{
    evaluate_case, overlay_corners, render_case, run_benchmark, BenchmarkCase, BenchmarkSetup, CaseSpec, CornerSet,
    GeometrySource,
};
use air_core::warp::RasterImage;
use air_core::{Error, Exec, Result};

use crate::config::RunConfig;

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub exec: Exec,
}

impl Context {
    fn prepare_out(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        write_text(&self.out.join("config.json"), &self.config.to_json())
    }

    fn setup(&self) -> Result<BenchmarkSetup> {
        let truth = self.config.truth()?;
        let estimate = self.config.estimate(&truth)?;
        Ok(BenchmarkSetup::from_config(&self.config.benchmark, truth, estimate, self.exec))
    }

    fn scene_case(&self) -> Result<BenchmarkCase> {
        let spec = CaseSpec {
            name: "scene".into(),
            scene: self.config.scene.clone(),
            correction: self.config.correction,
            geometry: GeometrySource::Sensed,
            depth_noise: None,
        };
        BenchmarkCase::from_spec(&spec, &self.config.benchmark.depth_noise, Path::new(RESOLVED))
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `<stem>.ppm`, plus `<stem>.png` when built with PNG support.
pub fn write_image(dir: &Path, stem: &str, img: &RasterImage) -> Result<()> {
    img.write_ppm(dir.join(format!("{stem}.ppm")))?;
    #[cfg(feature = "png")]
    {
        let path = dir.join(format!("{stem}.png"));
        image::RgbImage::from_raw(img.width(), img.height(), img.data().to_vec())
            .expect("buffer matches dimensions")
            .save(&path)
            .map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn simulate_calib(ctx: &Context) -> Result<()> {
    ctx.prepare_out()?;
    let truth = ctx.config.truth()?;
    let session = simulate_session(&truth, &ctx.config.simulation)?;
    write_text(&ctx.out.join("rig_truth.json"), &truth.to_json())?;
    write_text(&ctx.out.join("session.json"), &session.to_json())?;
    let count = |n: Option<usize>| n.map_or("-".to_string(), |n| n.to_string());
    println!(
        "session: {} pan records, {} tilt records, {} rear corners, {} projector correspondences",
        count(session.pan.as_ref().map(|s| s.records.len())),
        count(session.tilt.as_ref().map(|s| s.records.len())),
        count(session.rear.as_ref().map(|r| r.rear_corners.len())),
        count(session.projector.as_ref().map(|s| s.records.len())),
    );
    println!("wrote {}", ctx.out.join("session.json").display());
    Ok(())
}

pub fn calibrate(ctx: &Context, session_path: Option<&Path>) -> Result<()> {
    let path = session_path
        .map(Path::to_path_buf)
        .or_else(|| ctx.config.session.clone())
        .ok_or_else(|| Error::InvalidArgument("no calibration session given (use --session or \"session\" in the config)".into()))?;
    let session = CalibrationSession::load(&path)?;
    ctx.prepare_out()?;
    // Echo the input next to the result.
    write_text(&ctx.out.join("session.json"), &session.to_json())?;
    let result = run_full_calibration(&session)?;
    let summary = result.summary();
    write_text(&ctx.out.join("calibration.json"), &result.to_json())?;
    write_text(&ctx.out.join("residuals.txt"), &summary)?;
    print!("{summary}");
    println!("wrote {}", ctx.out.join("calibration.json").display());
    Ok(())
}

pub fn correct(ctx: &Context) -> Result<()> {
    ctx.prepare_out()?;
    let setup = ctx.setup()?;
    let case = ctx.scene_case()?;
    let images = render_case(&setup, &case)?;
    write_image(&ctx.out, "pass1", &images.pass1)?;
    write_image(&ctx.out, "framebuffer", &images.framebuffer)?;
    println!(
        "wrote pass1 ({}x{}) and framebuffer ({}x{}) to {}",
        images.pass1.width(),
        images.pass1.height(),
        images.framebuffer.width(),
        images.framebuffer.height(),
        ctx.out.display()
    );
    Ok(())
}

pub fn render_user_view(ctx: &Context) -> Result<()> {
    ctx.prepare_out()?;
    let setup = ctx.setup()?;
    let case = ctx.scene_case()?;
    let images = render_case(&setup, &case)?;
    write_image(&ctx.out, "user_view", &images.user_view)?;
    let outcome = evaluate_case(&setup, &case)?;
    write_text(
        &ctx.out.join("corners.json"),
        &serde_json::to_string_pretty(&outcome).expect("outcome serializes"),
    )?;
    if ctx.config.overlays {
        let (w, h) = (setup.viewport.width_px, setup.viewport.height_px);
        let ideal = CornerSet::new(w, h, setup.pattern_corners())?;
        write_image(&ctx.out, "user_view_overlay", &overlay_corners(&images.user_view, &ideal, &outcome.corners))?;
    }
    println!(
        "{} corners resolved, {} unresolved; wrote {}",
        outcome.corners.corners.len(),
        outcome.unresolved.len(),
        ctx.out.join("user_view.ppm").display()
    );
    Ok(())
}

pub fn evaluate(ctx: &Context) -> Result<()> {
    ctx.prepare_out()?;
    let setup = ctx.setup()?;
    let bench = &ctx.config.benchmark;
    let base = BenchmarkCase::from_spec(&bench.base, &bench.depth_noise, Path::new(RESOLVED))?;
    // A case whose scene cannot be loaded is reported like any other failure.
    let mut cases = Vec::new();
    let mut load_errors = Vec::new();
    for spec in &bench.cases {
        match BenchmarkCase::from_spec(spec, &bench.depth_noise, Path::new(RESOLVED)) {
            Ok(c) => cases.push(c),
            Err(e) => load_errors.push((spec.clone(), e)),
        }
    }
    let mut report = run_benchmark(&setup, &base, &cases)?;
    for (spec, e) in load_errors {
        report.cases.push(air_core::evaluation::CaseReport {
            name: spec.name,
            correction: spec.correction,
            geometry: spec.geometry,
            mean_dislocation_px: None,
            per_corner_px: Vec::new(),
            resolved: 0,
            unresolved: Vec::new(),
            valid_depth_fraction: None,
            geometry_triangles: None,
            error: Some(e.to_string()),
        });
    }
    write_text(&ctx.out.join("report.json"), &report.to_json())?;
    let summary = report.summary();
    write_text(&ctx.out.join("report.txt"), &summary)?;
    if ctx.config.overlays {
        let dir = ctx.out.join("overlays");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for case in std::iter::once(&base).chain(&cases) {
            let rendered = render_case(&setup, case).and_then(|images| Ok((images, evaluate_case(&setup, case)?)));
            match rendered {
                Ok((images, outcome)) => write_image(
                    &dir,
                    &case.name,
                    &overlay_corners(&images.user_view, &report.base_corners, &outcome.corners),
                )?,
                Err(e) => eprintln!("warning: no overlay for {}: {e}", case.name),
            }
        }
    }
    print!("{summary}");
    Ok(())
}
