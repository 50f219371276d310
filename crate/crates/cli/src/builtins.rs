//! Built-in scenes and scene-file resolution.

use crate::{Failure, SceneArgs};
use ndsense::fock::ModeLayout;
use ndsense::scene::{CostFunction, Image, SceneFile, SceneSpec};

/// 0-vs-pi phase discrimination: one pixel, one mode, equal priors, common
/// transmittance.
pub fn phase01pi(eta: f64) -> Result<SceneFile, ndsense::Error> {
    SceneFile::new(ndsense::phase::scene(eta)?, Some(CostFunction::error_probability(2)))
}

/// Transmittance discrimination with no phase contrast (digital-memory
/// readout): one pixel, one mode, equal priors, `eta` vs `eta2`.
pub fn reading(eta: f64, eta2: f64) -> Result<SceneFile, ndsense::Error> {
    let scene = SceneSpec::new(
        ModeLayout::single_pixel(1)?,
        vec![Image::uniform(1, eta, 0.0)?, Image::uniform(1, eta2, 0.0)?],
        vec![0.5, 0.5],
    )?;
    SceneFile::new(scene, Some(CostFunction::error_probability(2)))
}

pub fn resolve_scene(args: &SceneArgs) -> Result<SceneFile, Failure> {
    match args.scene.as_str() {
        "phase01pi" => phase01pi(args.eta).map_err(Into::into),
        "reading" => reading(args.eta, args.eta2).map_err(Into::into),
        path => {
            let json = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read scene {path}: {e}")))?;
            SceneFile::from_json(&json)
                .map_err(|e| Failure::Usage(format!("invalid scene {path}: {e}")))
        }
    }
}
