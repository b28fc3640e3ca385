use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conv::ConvGeom;
use super::{Graph, Tensor, Var};
use crate::error::{shape_err, Error, Result};

pub const LEAKY_SLOPE: f64 = 0.1;
pub const DEFAULT_SCALE: f64 = 0.25;
pub const MIN_CHANNELS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    Decompose,
    Shadow,
    Synthesis,
}

impl NetworkKind {
    pub const ALL: [NetworkKind; 3] = [NetworkKind::Decompose, NetworkKind::Shadow, NetworkKind::Synthesis];

    pub fn name(self) -> &'static str {
        match self {
            NetworkKind::Decompose => "decompose",
            NetworkKind::Shadow => "shadow",
            NetworkKind::Synthesis => "synthesis",
        }
    }
}

impl fmt::Display for NetworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NetworkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NetworkKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown network `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu,
    Identity,
    Sigmoid,
    UnitNorm,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub kernel: usize,
    pub stride: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub transposed: bool,
    pub activation: Activation,
    pub bias: bool,
}

impl LayerSpec {
    fn geom(&self) -> ConvGeom {
        ConvGeom::same(self.kernel, self.stride)
    }

    fn weight_shape(&self) -> [usize; 4] {
        let (k, i, o) = (self.kernel, self.in_channels, self.out_channels);
        if self.transposed {
            [i, o, k, k]
        } else {
            [o, i, k, k]
        }
    }

    pub fn fan_in(&self) -> usize {
        self.in_channels * self.kernel * self.kernel
    }
}

/// One decoder branch: upsampling layers, each fed the matching encoder
/// output concatenated with the previous decoder output, then a head.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderSpec {
    pub name: String,
    pub layers: Vec<LayerSpec>,
    pub head: LayerSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub name: String,
    pub scale: f64,
    pub in_channels: usize,
    pub encoder: Vec<LayerSpec>,
    pub decoders: Vec<DecoderSpec>,
}

/// Output head: name, kernel, channels, activation, bias.
#[derive(Clone, Copy, Debug)]
pub struct HeadDef {
    pub name: &'static str,
    pub kernel: usize,
    pub channels: usize,
    pub activation: Activation,
    pub bias: bool,
}

pub fn scaled_channels(c: usize, scale: f64) -> usize {
    ((c as f64 * scale).ceil() as usize).max(MIN_CHANNELS)
}

impl NetworkSpec {
    /// U-Net with `encoder` as (kernel, channels) stride-2 layers and
    /// `decoder` channels for 4×4 stride-2 transposed layers. Skip inputs are
    /// recomputed from the topology; only output channels are scaled.
    pub fn unet(
        name: &str,
        in_channels: usize,
        encoder: &[(usize, usize)],
        decoder: &[usize],
        heads: &[HeadDef],
        scale: f64,
    ) -> Result<Self> {
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::Config(format!("channel scale {scale} outside (0, 1]")));
        }
        if encoder.is_empty() || encoder.len() != decoder.len() || heads.is_empty() {
            return Err(Error::Config("u-net needs matching encoder/decoder depth".into()));
        }
        let levels = encoder.len();
        let mut enc = Vec::with_capacity(levels);
        let mut prev = in_channels;
        for (i, &(k, c)) in encoder.iter().enumerate() {
            let out = scaled_channels(c, scale);
            enc.push(LayerSpec {
                name: format!("conv{i}"),
                kernel: k,
                stride: 2,
                in_channels: prev,
                out_channels: out,
                transposed: false,
                activation: Activation::LeakyRelu,
                bias: true,
            });
            prev = out;
        }
        let decoders = heads
            .iter()
            .map(|h| {
                let mut layers = Vec::with_capacity(levels);
                let mut prev = enc[levels - 1].out_channels;
                for (j, &c) in decoder.iter().enumerate() {
                    let input = if j == 0 {
                        prev
                    } else {
                        enc[levels - 1 - j].out_channels + prev
                    };
                    let out = scaled_channels(c, scale);
                    layers.push(LayerSpec {
                        name: format!("upconv{j}"),
                        kernel: 4,
                        stride: 2,
                        in_channels: input,
                        out_channels: out,
                        transposed: true,
                        activation: Activation::LeakyRelu,
                        bias: true,
                    });
                    prev = out;
                }
                DecoderSpec {
                    name: h.name.to_string(),
                    layers,
                    head: LayerSpec {
                        name: h.name.to_string(),
                        kernel: h.kernel,
                        stride: 1,
                        in_channels: prev,
                        out_channels: h.channels,
                        transposed: false,
                        activation: h.activation,
                        bias: h.bias,
                    },
                }
            })
            .collect();
        Ok(NetworkSpec {
            name: name.to_string(),
            scale,
            in_channels,
            encoder: enc,
            decoders,
        })
    }

    pub fn build(kind: NetworkKind, scale: f64) -> Result<Self> {
        let (enc, dec, heads, input) = Self::table(kind);
        Self::unet(kind.name(), input, &enc, &dec, &heads, scale)
    }

    /// The `levels` outermost encoder/decoder layers of a network.
    pub fn truncated(kind: NetworkKind, levels: usize, scale: f64) -> Result<Self> {
        let (enc, dec, heads, input) = Self::table(kind);
        if levels == 0 || levels > enc.len() {
            return Err(Error::Config(format!("cannot keep {levels} levels")));
        }
        Self::unet(
            kind.name(),
            input,
            &enc[..levels],
            &dec[dec.len() - levels..],
            &heads,
            scale,
        )
    }

    #[allow(clippy::type_complexity)]
    fn table(kind: NetworkKind) -> (Vec<(usize, usize)>, Vec<usize>, Vec<HeadDef>, usize) {
        match kind {
            NetworkKind::Decompose => (
                vec![(6, 32), (4, 64), (4, 128), (4, 256), (4, 512)],
                vec![256, 128, 128, 64, 64],
                vec![
                    HeadDef { name: "albedo", kernel: 5, channels: 3, activation: Activation::Identity, bias: false },
                    HeadDef { name: "normal", kernel: 5, channels: 3, activation: Activation::UnitNorm, bias: true },
                    HeadDef { name: "roughness", kernel: 5, channels: 1, activation: Activation::Sigmoid, bias: true },
                ],
                4,
            ),
            NetworkKind::Shadow => (
                vec![(6, 32), (4, 64), (4, 128), (4, 256), (4, 256)],
                vec![256, 256, 128, 64, 32],
                vec![HeadDef { name: "shadow", kernel: 6, channels: 1, activation: Activation::Sigmoid, bias: true }],
                3,
            ),
            NetworkKind::Synthesis => (
                vec![(6, 64), (4, 128), (4, 128), (4, 256), (4, 256)],
                vec![512, 256, 128, 64, 32],
                vec![HeadDef { name: "relight", kernel: 5, channels: 3, activation: Activation::Identity, bias: false }],
                17,
            ),
        }
    }

    /// Every layer in parameter order.
    pub fn layers(&self) -> Vec<(String, &LayerSpec)> {
        let mut out: Vec<(String, &LayerSpec)> =
            self.encoder.iter().map(|l| (l.name.clone(), l)).collect();
        for d in &self.decoders {
            for l in &d.layers {
                out.push((format!("{}.{}", d.name, l.name), l));
            }
            out.push((format!("{}.head", d.name), &d.head));
        }
        out
    }

    /// Input size must be divisible by this.
    pub fn size_multiple(&self) -> usize {
        1 << self.encoder.len()
    }
}

/// A network specification plus its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub spec: NetworkSpec,
    names: Vec<String>,
    params: Vec<Tensor>,
}

impl Network {
    /// He-initialized weights, zero biases.
    pub fn new(spec: NetworkSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut names = Vec::new();
        let mut params = Vec::new();
        for (name, l) in spec.layers() {
            let std = (2.0 / l.fan_in() as f64).sqrt();
            names.push(format!("{name}.weight"));
            params.push(Tensor::randn(&l.weight_shape(), std, &mut rng));
            if l.bias {
                names.push(format!("{name}.bias"));
                params.push(Tensor::zeros(&[l.out_channels]));
            }
        }
        Network { spec, names, params }
    }

    pub fn from_parts(spec: NetworkSpec, names: Vec<String>, params: Vec<Tensor>) -> Result<Self> {
        let reference = Network::new(spec.clone(), 0);
        if reference.names != names
            || reference.params.len() != params.len()
            || reference.params.iter().zip(&params).any(|(a, b)| a.shape() != b.shape())
        {
            return Err(Error::Config(format!(
                "parameters do not match the `{}` specification",
                spec.name
            )));
        }
        Ok(Network { spec, names, params })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Places the parameters on `g` (trainable or constant) and returns them.
    pub fn bind(&self, g: &mut Graph, trainable: bool) -> Vec<Var> {
        self.params
            .iter()
            .map(|t| if trainable { g.param(t.clone()) } else { g.input(t.clone()) })
            .collect()
    }

    /// Runs the network on `input` with parameters previously bound by
    /// [`Network::bind`]; returns one output per head.
    pub fn forward(&self, g: &mut Graph, params: &[Var], input: Var) -> Result<Vec<Var>> {
        let (_, c, h, w) = g.value(input).dims4()?;
        let m = self.spec.size_multiple();
        if c != self.spec.in_channels || h % m != 0 || w % m != 0 {
            return Err(shape_err!(
                "`{}` needs {} channels and sizes divisible by {m}, got {c}x{h}x{w}",
                self.spec.name,
                self.spec.in_channels
            ));
        }
        let mut p = params.iter().copied();
        let mut apply = |g: &mut Graph, l: &LayerSpec, x: Var| -> Result<Var> {
            let wt = p.next().expect("bound parameters");
            let b = if l.bias { p.next() } else { None };
            let y = if l.transposed {
                g.conv_transpose(x, wt, b, l.geom())?
            } else {
                g.conv(x, wt, b, l.geom())?
            };
            Ok(match l.activation {
                Activation::LeakyRelu => g.leaky_relu(y, LEAKY_SLOPE),
                Activation::Identity => y,
                Activation::Sigmoid => g.sigmoid(y),
                Activation::UnitNorm => g.normalize(y)?,
            })
        };
        let mut skips = Vec::with_capacity(self.spec.encoder.len());
        let mut x = input;
        for l in &self.spec.encoder {
            x = apply(g, l, x)?;
            skips.push(x);
        }
        let levels = skips.len();
        let mut outputs = Vec::with_capacity(self.spec.decoders.len());
        for d in &self.spec.decoders {
            let mut y = skips[levels - 1];
            for (j, l) in d.layers.iter().enumerate() {
                if j > 0 {
                    y = g.concat(&[skips[levels - 1 - j], y])?;
                }
                y = apply(g, l, y)?;
            }
            outputs.push(apply(g, &d.head, y)?);
        }
        Ok(outputs)
    }

    /// Forward pass without gradients.
    pub fn predict(&self, input: Tensor) -> Result<Vec<Tensor>> {
        let mut g = Graph::new();
        let params = self.bind(&mut g, false);
        let x = g.input(input);
        let outs = self.forward(&mut g, &params, x)?;
        Ok(outs.into_iter().map(|v| g.value(v).clone()).collect())
    }
}
