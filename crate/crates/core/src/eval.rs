//! Test-split error report for clean and degraded depth.

use std::fmt::Write as _;

use crate::datagen::{Dataset, Split};
use crate::error::{Error, Result};
use crate::geometry::{cast_shadow_mask, unproject, DepthMap};
use crate::imaging::{mse, psnr_from_mse};
use crate::neural::TrainedModels;
use crate::relight::{infer_relit, InferMode, OracleInputs};

pub const TASKS: [&str; 5] = ["Albedo", "Normal", "Roughness", "Shadow", "Relight"];

/// Mean squared error per task, in [`TASKS`] order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TaskErrors(pub [f64; 5]);

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionRow {
    pub index: usize,
    pub direction: [f64; 3],
    pub held_out: bool,
    pub clean_psnr: f64,
    pub noisy_psnr: f64,
    /// The flash image used as the prediction.
    pub flash_psnr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub mode: &'static str,
    pub scenes: usize,
    pub clean: TaskErrors,
    pub noisy: TaskErrors,
    pub directions: Vec<DirectionRow>,
}

#[derive(Clone, Copy, Debug)]
pub enum EvalModels<'a> {
    /// Ground-truth maps with shadows cast from the given depth.
    Oracle,
    Network(&'a TrainedModels),
}

impl EvalReport {
    /// Mean relight PSNR over directions selected by `held_out`, for clean
    /// depth, alongside the flash baseline.
    pub fn mean_psnr(&self, held_out: bool) -> Option<(f64, f64)> {
        let rows: Vec<_> = self.directions.iter().filter(|r| r.held_out == held_out).collect();
        if rows.is_empty() {
            return None;
        }
        let n = rows.len() as f64;
        Some((
            rows.iter().map(|r| r.clean_psnr).sum::<f64>() / n,
            rows.iter().map(|r| r.flash_psnr).sum::<f64>() / n,
        ))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# relightkit evaluation");
        let _ = writeln!(s, "mode {}", self.mode);
        let _ = writeln!(s, "test_scenes {}", self.scenes);
        let _ = writeln!(s, "directions {}", self.directions.len());
        let _ = writeln!(s);
        let _ = writeln!(s, "## mse");
        let _ = write!(s, "{:<8}", "depth");
        for t in TASKS {
            let _ = write!(s, " {t:>12}");
        }
        let _ = writeln!(s);
        for (name, row) in [("Clean", &self.clean), ("Noisy", &self.noisy)] {
            let _ = write!(s, "{name:<8}");
            for v in row.0 {
                let _ = write!(s, " {v:>12.5e}");
            }
            let _ = writeln!(s);
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "## psnr_db");
        let _ = writeln!(
            s,
            "{:>5} {:>9} {:>9} {:>9} {:>4} {:>8} {:>8} {:>8}",
            "dir", "x", "y", "z", "held", "clean", "noisy", "flash"
        );
        for r in &self.directions {
            let _ = writeln!(
                s,
                "{:>5} {:>9.5} {:>9.5} {:>9.5} {:>4} {:>8.3} {:>8.3} {:>8.3}",
                r.index,
                r.direction[0],
                r.direction[1],
                r.direction[2],
                if r.held_out { "yes" } else { "no" },
                r.clean_psnr,
                r.noisy_psnr,
                r.flash_psnr
            );
        }
        s
    }
}

struct Accum {
    tasks: [f64; 5],
    relit_per_dir: Vec<f64>,
}

fn run_depth(
    dataset: &Dataset,
    models: EvalModels<'_>,
    pick: fn(&crate::datagen::DatasetSample) -> &DepthMap,
) -> Result<Accum> {
    let dirs = &dataset.manifest.directions;
    let render = &dataset.manifest.render;
    let camera = dataset.camera();
    let mut acc = Accum {
        tasks: [0.0; 5],
        relit_per_dir: vec![0.0; dirs.len()],
    };
    let mut scenes = 0;
    for (_, s) in dataset.split(Split::Test) {
        let depth = pick(s);
        let points = unproject(depth, camera)?;
        let (maps, shadows, relit) = match models {
            EvalModels::Oracle => {
                let shadows = dirs
                    .iter()
                    .map(|&d| cast_shadow_mask(&points, d, &render.shadow))
                    .collect::<Result<Vec<_>>>()?;
                let oracle = OracleInputs {
                    maps: &s.maps,
                    shadows: Some(&shadows),
                    shadow_config: &render.shadow,
                    light_intensity: render.light_intensity,
                    brdf: &render.brdf,
                };
                let relit = infer_relit(&s.flash, depth, camera, dirs, InferMode::Oracle(oracle))?;
                (s.maps.clone(), shadows, relit)
            }
            EvalModels::Network(m) => {
                let maps = m.decompose_maps(&s.flash, depth)?;
                let shadows = m.shadow_masks(&points, dirs)?;
                let feats = dirs
                    .iter()
                    .zip(shadows.iter().cloned())
                    .map(|(&d, sh)| m.features(&maps, &points, d, sh))
                    .collect::<Result<Vec<_>>>()?;
                let relit = m.synthesize(&s.flash, &feats)?;
                (maps, shadows, relit)
            }
        };
        acc.tasks[0] += mse(&maps.albedo, &s.maps.albedo)?;
        acc.tasks[1] += mse(&maps.normal, &s.maps.normal)?;
        acc.tasks[2] += mse(&maps.roughness, &s.maps.roughness)?;
        let n = dirs.len() as f64;
        for i in 0..dirs.len() {
            acc.tasks[3] += mse(&shadows[i], &s.shadows[i])? / n;
            let e = mse(&relit[i], &s.relit[i])?;
            acc.tasks[4] += e / n;
            acc.relit_per_dir[i] += e;
        }
        scenes += 1;
    }
    let k = scenes as f64;
    acc.tasks.iter_mut().for_each(|v| *v /= k);
    acc.relit_per_dir.iter_mut().for_each(|v| *v /= k);
    Ok(acc)
}

/// Errors on the test split for clean and noisy depth input. Per-direction
/// PSNR is taken from the scene-averaged MSE.
pub fn evaluate(
    dataset: &Dataset,
    models: EvalModels<'_>,
    held_out: impl Fn(usize) -> bool,
) -> Result<EvalReport> {
    let test: Vec<_> = dataset.split(Split::Test).collect();
    if test.is_empty() {
        return Err(Error::Validation("dataset has no test scenes".into()));
    }
    let clean = run_depth(dataset, models, |s| &s.depth)?;
    let noisy = run_depth(dataset, models, |s| &s.depth_noisy)?;

    let dirs = &dataset.manifest.directions;
    let mut flash = vec![0.0; dirs.len()];
    for (_, s) in &test {
        for (i, r) in s.relit.iter().enumerate() {
            flash[i] += mse(&s.flash, r)? / test.len() as f64;
        }
    }
    let directions = dirs
        .iter()
        .enumerate()
        .map(|(i, d)| DirectionRow {
            index: i,
            direction: d.vec().to_array(),
            held_out: held_out(i),
            clean_psnr: psnr_from_mse(clean.relit_per_dir[i]),
            noisy_psnr: psnr_from_mse(noisy.relit_per_dir[i]),
            flash_psnr: psnr_from_mse(flash[i]),
        })
        .collect();
    Ok(EvalReport {
        mode: match models {
            EvalModels::Oracle => "oracle",
            EvalModels::Network(_) => "network",
        },
        scenes: test.len(),
        clean: TaskErrors(clean.tasks),
        noisy: TaskErrors(noisy.tasks),
        directions,
    })
}
