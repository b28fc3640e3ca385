use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{Network, NetworkKind, NetworkSpec, DEFAULT_SCALE};
use super::optim::{learning_rate, Adam};
use super::{Graph, Tensor, Var};
use crate::brdf::{shade_directional, BrdfConstants, MaterialMaps};
use crate::datagen::{derive_seed, Dataset, DatasetSample, Split};
use crate::error::{Error, Result};
use crate::geometry::{shadow_encode, unproject, CameraIntrinsics, DepthMap, LightDirection, PointImage};
use crate::imaging::ImageBuffer;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs_stage1: usize,
    pub epochs_stage2: usize,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub decay_every: usize,
    pub seed: u64,
    pub scale: f64,
    pub lambda_grad: f64,
    /// Direction `i` is withheld from training when `i % holdout_every ==
    /// holdout_every - 1`; 0 trains on every direction.
    pub holdout_every: usize,
    /// Cap on (scene, direction) pairs visited per epoch; 0 visits all.
    pub pairs_per_epoch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 4,
            epochs_stage1: 5,
            epochs_stage2: 5,
            learning_rate: 5e-4,
            lr_decay: 0.1,
            decay_every: 2,
            seed: 7,
            scale: DEFAULT_SCALE,
            lambda_grad: 1.0,
            holdout_every: 5,
            pairs_per_epoch: 0,
        }
    }
}

impl TrainConfig {
    pub fn is_held_out(&self, direction: usize) -> bool {
        self.holdout_every > 0 && direction % self.holdout_every == self.holdout_every - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Validation("batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.lr_decay > 0.0) {
            return Err(Error::Validation("learning rate and decay must be positive".into()));
        }
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::Validation(format!("channel scale {} outside (0, 1]", self.scale)));
        }
        if self.holdout_every == 1 {
            return Err(Error::Validation("holdout_every = 1 withholds every direction".into()));
        }
        Ok(())
    }
}

/// The three trained networks plus the shading settings used for `I_render`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModels {
    pub decompose: Network,
    pub shadow: Network,
    pub synthesis: Network,
    pub light_intensity: [f64; 3],
    pub brdf: BrdfConstants,
}

/// Everything SynthesisNet sees besides the flash image.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisFeatures {
    pub maps: MaterialMaps,
    pub shadow: ImageBuffer,
    pub render: ImageBuffer,
    pub encoded: ImageBuffer,
}

/// 17 channels in the order shadow, render, flash, albedo, normal,
/// roughness, encoded points.
pub fn synthesis_input(flash: &ImageBuffer, f: &SynthesisFeatures) -> Result<Tensor> {
    Tensor::from_channels(&[
        &f.shadow,
        &f.render,
        flash,
        &f.maps.albedo,
        &f.maps.normal,
        &f.maps.roughness,
        &f.encoded,
    ])
}

fn decompose_input(flash: &ImageBuffer, depth: &DepthMap) -> Result<Tensor> {
    Tensor::from_channels(&[flash, depth.image()])
}

fn encoded_image(points: &PointImage, omega: LightDirection) -> Result<ImageBuffer> {
    Ok(shadow_encode(points, omega)?.to_image())
}

impl TrainedModels {
    pub fn init(cfg: &TrainConfig, light_intensity: [f64; 3], brdf: BrdfConstants) -> Result<Self> {
        let net = |k: NetworkKind, stream| -> Result<Network> {
            Ok(Network::new(NetworkSpec::build(k, cfg.scale)?, derive_seed(cfg.seed, 0, stream)))
        };
        Ok(TrainedModels {
            decompose: net(NetworkKind::Decompose, 100)?,
            shadow: net(NetworkKind::Shadow, 101)?,
            synthesis: net(NetworkKind::Synthesis, 102)?,
            light_intensity,
            brdf,
        })
    }

    pub fn network(&self, kind: NetworkKind) -> &Network {
        match kind {
            NetworkKind::Decompose => &self.decompose,
            NetworkKind::Shadow => &self.shadow,
            NetworkKind::Synthesis => &self.synthesis,
        }
    }

    /// Albedo, unit normals and roughness from a flash image and depth.
    pub fn decompose_maps(&self, flash: &ImageBuffer, depth: &DepthMap) -> Result<MaterialMaps> {
        let out = self.decompose.predict(decompose_input(flash, depth)?)?;
        Ok(MaterialMaps {
            albedo: out[0].to_image(0)?,
            normal: out[1].to_image(0)?,
            roughness: out[2].to_image(0)?,
        })
    }

    /// Soft visibility in `(0, 1)` for each direction.
    pub fn shadow_masks(&self, points: &PointImage, dirs: &[LightDirection]) -> Result<Vec<ImageBuffer>> {
        let mut out = Vec::with_capacity(dirs.len());
        for chunk in dirs.chunks(8) {
            let enc = chunk
                .iter()
                .map(|&d| encoded_image(points, d))
                .collect::<Result<Vec<_>>>()?;
            let batch = Tensor::from_images(&enc.iter().collect::<Vec<_>>())?;
            let pred = self.shadow.predict(batch)?.remove(0);
            for i in 0..chunk.len() {
                out.push(pred.to_image(i)?);
            }
        }
        Ok(out)
    }

    /// Network inputs for one direction given already-decomposed maps and a
    /// shadow prediction.
    pub fn features(
        &self,
        maps: &MaterialMaps,
        points: &PointImage,
        omega: LightDirection,
        shadow: ImageBuffer,
    ) -> Result<SynthesisFeatures> {
        let render = shade_directional(maps, points, omega, self.light_intensity, None, &self.brdf)?;
        Ok(SynthesisFeatures {
            maps: maps.clone(),
            shadow,
            render,
            encoded: encoded_image(points, omega)?,
        })
    }

    pub fn synthesize(&self, flash: &ImageBuffer, features: &[SynthesisFeatures]) -> Result<Vec<ImageBuffer>> {
        let mut out = Vec::with_capacity(features.len());
        for chunk in features.chunks(8) {
            let parts = chunk
                .iter()
                .map(|f| synthesis_input(flash, f))
                .collect::<Result<Vec<_>>>()?;
            let pred = self.synthesis.predict(Tensor::cat_batch(&parts)?)?.remove(0);
            for i in 0..chunk.len() {
                out.push(pred.to_image(i)?);
            }
        }
        Ok(out)
    }

    /// Full network relight of one view for each direction.
    pub fn relight(
        &self,
        flash: &ImageBuffer,
        depth: &DepthMap,
        camera: &CameraIntrinsics,
        dirs: &[LightDirection],
    ) -> Result<Vec<ImageBuffer>> {
        let points = unproject(depth, camera)?;
        let maps = self.decompose_maps(flash, depth)?;
        let shadows = self.shadow_masks(&points, dirs)?;
        let feats = dirs
            .iter()
            .zip(shadows)
            .map(|(&d, s)| self.features(&maps, &points, d, s))
            .collect::<Result<Vec<_>>>()?;
        self.synthesize(flash, &feats)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub stage: u8,
    pub epoch: usize,
    pub learning_rate: f64,
    pub steps: usize,
    /// Mean loss per term over the epoch's steps.
    pub losses: Vec<(String, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochSummary>,
}

struct SceneData<'a> {
    sample: &'a DatasetSample,
    points: PointImage,
    input: Tensor,
    albedo: Tensor,
    normal: Tensor,
    roughness: Tensor,
}

fn check_dataset(dataset: &Dataset, cfg: &TrainConfig) -> Result<()> {
    let n_dirs = dataset.manifest.directions.len();
    if dataset.split(Split::Train).count() == 0 {
        return Err(Error::Validation("dataset has no training scenes".into()));
    }
    if (0..n_dirs).all(|i| cfg.is_held_out(i)) {
        return Err(Error::Validation("every direction is held out".into()));
    }
    for (r, s) in dataset.split(Split::Train) {
        if s.relit.len() != n_dirs || s.shadows.len() != n_dirs {
            return Err(Error::Validation(format!(
                "scene {} is missing relit or shadow channels",
                r.path
            )));
        }
        s.maps.validate().map_err(|e| Error::Validation(e.to_string()))?;
        if s.width() % 32 != 0 || s.height() % 32 != 0 {
            return Err(Error::Validation(format!(
                "image size {}x{} is not a multiple of 32",
                s.width(),
                s.height()
            )));
        }
    }
    Ok(())
}

/// One optimizer's worth of training state.
struct Trainee {
    adam: Adam,
}

impl Trainee {
    fn new(net: &Network) -> Self {
        Trainee {
            adam: Adam::new(net.params()),
        }
    }

    /// Builds a loss with `f`, backpropagates and applies one Adam step.
    fn step(
        &mut self,
        net: &mut Network,
        lr: f64,
        f: impl FnOnce(&mut Graph, &Network, &[Var]) -> Result<Vec<Var>>,
    ) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let params = net.bind(&mut g, true);
        let terms = f(&mut g, net, &params)?;
        let mut total = terms[0];
        for &t in &terms[1..] {
            total = g.add(total, t)?;
        }
        let values: Vec<f64> = terms.iter().map(|&t| g.value(t).item()).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Training(format!("non-finite loss {values:?} in `{}`", net.spec.name)));
        }
        g.backward(total)?;
        let grads: Vec<Tensor> = params.iter().map(|&p| g.grad(p)).collect();
        self.adam.step(net.params_mut(), &grads, lr)?;
        Ok(values)
    }
}

fn batch_of<'a>(parts: impl Iterator<Item = &'a Tensor>) -> Result<Tensor> {
    Tensor::cat_batch(&parts.cloned().collect::<Vec<_>>())
}

fn image_tensor(img: &ImageBuffer) -> Result<Tensor> {
    Tensor::from_images(&[img])
}

/// Two-stage training: ShadowNet and DecomposeNet first, then SynthesisNet on
/// the frozen outputs of both. `on_epoch` sees the models after every epoch.
pub fn train_pipeline(
    dataset: &Dataset,
    cfg: &TrainConfig,
    render: &crate::datagen::RenderSettings,
    mut on_epoch: impl FnMut(&TrainedModels, &EpochSummary) -> Result<()>,
) -> Result<(TrainedModels, TrainReport)> {
    cfg.validate()?;
    check_dataset(dataset, cfg)?;
    let camera = dataset.camera();
    let mut models = TrainedModels::init(cfg, render.light_intensity, render.brdf.clone())?;
    let dirs = &dataset.manifest.directions;

    let scenes = dataset
        .split(Split::Train)
        .map(|(_, s)| {
            Ok(SceneData {
                sample: s,
                points: unproject(&s.depth, camera)?,
                input: decompose_input(&s.flash, &s.depth)?,
                albedo: image_tensor(&s.maps.albedo)?,
                normal: image_tensor(&s.maps.normal)?,
                roughness: image_tensor(&s.maps.roughness)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_pairs: Vec<(usize, usize)> = (0..scenes.len())
        .flat_map(|s| (0..dirs.len()).map(move |d| (s, d)))
        .filter(|&(_, d)| !cfg.is_held_out(d))
        .collect();
    let epoch_pairs = |stage: u64, epoch: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, epoch as u64, stage));
        let mut p = all_pairs.clone();
        p.shuffle(&mut rng);
        if cfg.pairs_per_epoch > 0 {
            p.truncate(cfg.pairs_per_epoch);
        }
        p
    };
    let mut report = TrainReport::default();

    // stage 1: shadow and decomposition
    let mut shadow_opt = Trainee::new(&models.shadow);
    let mut decomp_opt = Trainee::new(&models.decompose);
    for epoch in 0..cfg.epochs_stage1 {
        let lr = learning_rate(cfg.learning_rate, cfg.lr_decay, cfg.decay_every, epoch);
        let mut sums = [0.0; 4];
        let mut steps = 0;
        for batch in epoch_pairs(1, epoch).chunks(cfg.batch_size) {
            let enc = batch
                .iter()
                .map(|&(s, d)| image_tensor(&encoded_image(&scenes[s].points, dirs[d])?))
                .collect::<Result<Vec<_>>>()?;
            let masks = batch
                .iter()
                .map(|&(s, d)| image_tensor(&scenes[s].sample.shadows[d]))
                .collect::<Result<Vec<_>>>()?;
            let x = Tensor::cat_batch(&enc)?;
            let y = Tensor::cat_batch(&masks)?;
            let l = shadow_opt.step(&mut models.shadow, lr, |g, net, p| {
                let xi = g.input(x);
                let out = net.forward(g, p, xi)?;
                Ok(vec![g.bce(out[0], &y)?])
            })?;
            sums[0] += l[0];

            let pick = |f: for<'s> fn(&'s SceneData) -> &'s Tensor| {
                batch_of(batch.iter().map(|&(s, _)| f(&scenes[s])))
            };
            let x = pick(|s| &s.input)?;
            let (ya, yn, yr) = (pick(|s| &s.albedo)?, pick(|s| &s.normal)?, pick(|s| &s.roughness)?);
            let l = decomp_opt.step(&mut models.decompose, lr, |g, net, p| {
                let xi = g.input(x);
                let out = net.forward(g, p, xi)?;
                Ok(vec![
                    g.l1_grad(out[0], &ya, cfg.lambda_grad)?,
                    g.l1_grad(out[1], &yn, cfg.lambda_grad)?,
                    g.bce(out[2], &yr)?,
                ])
            })?;
            for (acc, v) in sums[1..].iter_mut().zip(&l) {
                *acc += v;
            }
            steps += 1;
        }
        let names = ["shadow", "albedo", "normal", "roughness"];
        let summary = summarize(1, epoch, lr, steps, &names, &sums);
        info!("stage 1 epoch {epoch}: {:?}", summary.losses);
        on_epoch(&models, &summary)?;
        report.epochs.push(summary);
    }

    // stage 2: synthesis on frozen predictions
    let train_dirs: Vec<usize> = (0..dirs.len()).filter(|&d| !cfg.is_held_out(d)).collect();
    let train_omegas: Vec<LightDirection> = train_dirs.iter().map(|&d| dirs[d]).collect();
    let mut cache: Vec<Vec<Option<SynthesisFeatures>>> = Vec::with_capacity(scenes.len());
    for s in &scenes {
        let maps = models.decompose_maps(&s.sample.flash, &s.sample.depth)?;
        let shadows = models.shadow_masks(&s.points, &train_omegas)?;
        let mut feats = vec![None; dirs.len()];
        for (&d, sh) in train_dirs.iter().zip(shadows) {
            feats[d] = Some(models.features(&maps, &s.points, dirs[d], sh)?);
        }
        cache.push(feats);
    }
    let mut synth_opt = Trainee::new(&models.synthesis);
    for epoch in 0..cfg.epochs_stage2 {
        let lr = learning_rate(cfg.learning_rate, cfg.lr_decay, cfg.decay_every, epoch);
        let mut sum = [0.0];
        let mut steps = 0;
        for batch in epoch_pairs(2, epoch).chunks(cfg.batch_size) {
            let xs = batch
                .iter()
                .map(|&(s, d)| synthesis_input(&scenes[s].sample.flash, cache[s][d].as_ref().expect("cached pair")))
                .collect::<Result<Vec<_>>>()?;
            let ys = batch
                .iter()
                .map(|&(s, d)| image_tensor(&scenes[s].sample.relit[d]))
                .collect::<Result<Vec<_>>>()?;
            let x = Tensor::cat_batch(&xs)?;
            let y = Tensor::cat_batch(&ys)?;
            let l = synth_opt.step(&mut models.synthesis, lr, |g, net, p| {
                let xi = g.input(x);
                let out = net.forward(g, p, xi)?;
                Ok(vec![g.l1_grad(out[0], &y, cfg.lambda_grad)?])
            })?;
            sum[0] += l[0];
            steps += 1;
        }
        let summary = summarize(2, epoch, lr, steps, &["relight"], &sum);
        info!("stage 2 epoch {epoch}: {:?}", summary.losses);
        on_epoch(&models, &summary)?;
        report.epochs.push(summary);
    }
    Ok((models, report))
}

fn summarize(stage: u8, epoch: usize, lr: f64, steps: usize, names: &[&str], sums: &[f64]) -> EpochSummary {
    EpochSummary {
        stage,
        epoch,
        learning_rate: lr,
        steps,
        losses: names
            .iter()
            .zip(sums)
            .map(|(n, s)| (n.to_string(), s / steps.max(1) as f64))
            .collect(),
    }
}
