use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use relightkit::brdf::MaterialMaps;
use relightkit::config::PipelineConfig;
use relightkit::datagen::{generate_dataset, load_dataset, write_dataset, Split};
use relightkit::eval::{evaluate, EvalModels};
use relightkit::geometry::{
    cast_shadow_mask, shadow_encode, unproject, CameraIntrinsics, DepthMap, LightDirection,
};
use relightkit::imaging::{read_raw, write_preview, write_raw, ImageBuffer};
use relightkit::math::Vec3;
use relightkit::neural::{load_models, save_models, train_pipeline, TrainedModels};
use relightkit::relight::{
    build_basis, infer_relit, relight_environment, EnvironmentMap, InferMode, OracleInputs,
};
use relightkit::{Error, Result};

use crate::{Cli, Command, RelightArgs};

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.set_seed(s);
    }
    cfg.validate()?;
    configure_threads(cli.deterministic)?;

    match cli.command {
        Command::Gen { out } => gen(&cfg, &out.unwrap_or_else(|| cfg.paths.data_dir.clone())),
        Command::Train { data, models } => train(
            &cfg,
            &data.unwrap_or_else(|| cfg.paths.data_dir.clone()),
            &models.unwrap_or_else(|| cfg.paths.model_dir.clone()),
        ),
        Command::Relight(args) => relight(&cfg, args),
        Command::Shadow {
            depth,
            light,
            models,
            out_dir,
        } => shadow(&cfg, &depth, &light, models.as_deref(), &out_dir),
        Command::Decompose {
            flash,
            depth,
            models,
            out_dir,
        } => decompose(&cfg, &flash, &depth, models.as_deref(), &out_dir),
        Command::Eval {
            data,
            models,
            oracle,
            report,
        } => eval(
            &cfg,
            &data.unwrap_or_else(|| cfg.paths.data_dir.clone()),
            models.as_deref(),
            oracle,
            &report.unwrap_or_else(|| cfg.paths.report.clone()),
        ),
    }
}

fn configure_threads(deterministic: bool) -> Result<()> {
    let mut threads = match std::env::var("RELIGHTKIT_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Validation(format!("RELIGHTKIT_THREADS={v:?} is not a positive integer")))?,
        Err(_) => 0,
    };
    if deterministic {
        threads = 1;
    }
    if threads > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(())
}

fn parse_light(s: &str) -> Result<LightDirection> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Validation(format!("light must be x,y,z, got {s:?}")))?;
    let [x, y, z] = parts[..] else {
        return Err(Error::Validation(format!("light must be x,y,z, got {s:?}")));
    };
    LightDirection::new(Vec3::new(x, y, z))
}

fn read_depth(path: &Path) -> Result<DepthMap> {
    DepthMap::new(read_raw(path)?)
}

fn camera_for(depth: &DepthMap) -> CameraIntrinsics {
    CameraIntrinsics::centered(depth.width(), depth.height())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_image(path: &Path, img: &ImageBuffer) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_raw(path, img)?;
    write_preview(&path.with_extension("png"), img)
}

fn gen(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let ds = generate_dataset(&cfg.dataset)?;
    write_dataset(&ds, out)?;
    println!(
        "{} scenes ({} train, {} test), {} directions -> {}",
        ds.samples.len(),
        ds.split(Split::Train).count(),
        ds.split(Split::Test).count(),
        ds.manifest.directions.len(),
        out.display()
    );
    Ok(())
}

fn train(cfg: &PipelineConfig, data: &Path, models: &Path) -> Result<()> {
    let ds = load_dataset(data)?;
    let (_, report) = train_pipeline(&ds, &cfg.train, &ds.manifest.render, |m, s| {
        let losses: Vec<String> = s.losses.iter().map(|(k, v)| format!("{k} {v:.5}")).collect();
        info!("stage {} epoch {} lr {:.1e}: {}", s.stage, s.epoch, s.learning_rate, losses.join(", "));
        save_models(m, models, s.stage, s.epoch)
    })?;
    println!("trained {} epochs -> {}", report.epochs.len(), models.display());
    Ok(())
}

fn load_oracle_maps(dir: &Path) -> Result<MaterialMaps> {
    let maps = MaterialMaps {
        albedo: read_raw(&dir.join("albedo.rlk"))?,
        normal: read_raw(&dir.join("normal.rlk"))?,
        roughness: read_raw(&dir.join("rough.rlk"))?,
    };
    maps.validate()?;
    Ok(maps)
}

fn relight(cfg: &PipelineConfig, args: RelightArgs) -> Result<()> {
    let light = args.light.as_deref().map(parse_light).transpose()?;
    let flash = read_raw(&args.flash)?;
    let depth = read_depth(&args.depth)?;
    let camera = camera_for(&depth);
    let env = args.env.as_deref().map(EnvironmentMap::read).transpose()?;

    let render = &cfg.dataset.render;
    let maps;
    let models: TrainedModels;
    let (mode, intensity) = if args.oracle {
        let dir = match &args.maps {
            Some(d) => d.clone(),
            None => args.flash.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
        };
        maps = load_oracle_maps(&dir)?;
        let oracle = OracleInputs {
            maps: &maps,
            shadows: None,
            shadow_config: &render.shadow,
            light_intensity: render.light_intensity,
            brdf: &render.brdf,
        };
        (InferMode::Oracle(oracle), render.light_intensity)
    } else {
        models = load_models(args.models.as_deref().unwrap_or(&cfg.paths.model_dir))?;
        (InferMode::Network(&models), models.light_intensity)
    };

    let img = match (light, env) {
        (Some(d), _) => infer_relit(&flash, &depth, &camera, &[d], mode)?.remove(0),
        (None, Some(env)) => {
            let basis = build_basis(&flash, &depth, &camera, &cfg.dataset.directions(), mode)?;
            relight_environment(&basis, &env, intensity)?
        }
        (None, None) => return Err(Error::Validation("relight needs --light or --env".into())),
    };
    write_image(&args.out, &img)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn shadow(cfg: &PipelineConfig, depth: &Path, light: &str, models: Option<&Path>, out: &Path) -> Result<()> {
    let d = parse_light(light)?;
    let depth = read_depth(depth)?;
    let models = models.map(load_models).transpose()?;
    let points = unproject(&depth, &camera_for(&depth))?;
    let mask = cast_shadow_mask(&points, d, &cfg.dataset.render.shadow)?;
    let encoded = shadow_encode(&points, d)?.to_image();
    let predicted = match &models {
        Some(m) => Some(m.shadow_masks(&points, &[d])?.remove(0)),
        None => None,
    };
    create_dir(out)?;
    write_image(&out.join("mask.rlk"), &mask)?;
    write_raw(&out.join("encoded.rlk"), &encoded)?;
    if let Some(p) = predicted {
        write_image(&out.join("predicted_mask.rlk"), &p)?;
    }
    println!("wrote shadow outputs to {}", out.display());
    Ok(())
}

fn decompose(cfg: &PipelineConfig, flash: &Path, depth: &Path, models: Option<&Path>, out: &Path) -> Result<()> {
    let flash = read_raw(flash)?;
    let depth = read_depth(depth)?;
    let models = load_models(models.unwrap_or(&cfg.paths.model_dir))?;
    let maps = models.decompose_maps(&flash, &depth)?;
    create_dir(out)?;
    write_image(&out.join("albedo.rlk"), &maps.albedo)?;
    write_raw(&out.join("normal.rlk"), &maps.normal)?;
    write_preview(&out.join("normal.png"), &maps.normal.map(|v| 0.5 * (v + 1.0)))?;
    write_image(&out.join("rough.rlk"), &maps.roughness)?;
    println!("wrote maps to {}", out.display());
    Ok(())
}

fn eval(cfg: &PipelineConfig, data: &Path, models: Option<&Path>, oracle: bool, report: &Path) -> Result<()> {
    let ds = load_dataset(data)?;
    let loaded = if oracle {
        None
    } else {
        Some(load_models(models.unwrap_or(&cfg.paths.model_dir))?)
    };
    let which = match &loaded {
        Some(m) => EvalModels::Network(m),
        None => EvalModels::Oracle,
    };
    let r = evaluate(&ds, which, |i| cfg.train.is_held_out(i))?;
    let text = r.to_text();
    if let Some(parent) = report.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(report, &text).map_err(|e| Error::Io {
        path: report.to_path_buf(),
        source: e,
    })?;
    println!(
        "relight mse clean {:.4e} noisy {:.4e} -> {}",
        r.clean.0[4],
        r.noisy.0[4],
        report.display()
    );
    Ok(())
}
