//! Tape-based reverse-mode differentiation.
//!
//! Nodes are appended in evaluation order, so walking the tape backwards is a
//! valid topological order and every node is visited once.

use std::f64::consts::PI;
use std::sync::Arc;

use super::conv::{conv2d, conv2d_backward, conv_transpose2d, conv_transpose2d_backward, ConvGeom};
use super::Tensor;
use crate::brdf::{specular_with_droughness, BrdfConstants};
use crate::error::{shape_err, Result};
use crate::geometry::{LightDirection, PointImage};
use crate::math::Vec3;

pub const BCE_EPS: f64 = 1e-7;
const NORM_FLOOR: f64 = 1e-12;

/// Handle to a node on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

/// Per-item viewing geometry for the render op.
#[derive(Clone, Debug)]
pub struct RenderGeometry {
    pub light: LightDirection,
    /// Unit vector towards the camera; `None` for invalid pixels.
    pub view: Vec<Option<Vec3>>,
}

impl RenderGeometry {
    pub fn new(points: &PointImage, light: LightDirection) -> Self {
        let view = (0..points.height())
            .flat_map(|y| (0..points.width()).map(move |x| (x, y)))
            .map(|(x, y)| {
                if points.is_valid(x, y) {
                    (-points.at(x, y)).normalized()
                } else {
                    None
                }
            })
            .collect();
        RenderGeometry { light, view }
    }
}

#[derive(Clone, Debug)]
struct RenderCtx {
    items: Vec<RenderGeometry>,
    consts: BrdfConstants,
}

enum Op {
    Leaf,
    Conv { x: Var, w: Var, b: Option<Var>, g: ConvGeom },
    ConvT { x: Var, w: Var, b: Option<Var>, g: ConvGeom },
    LeakyRelu { x: Var, slope: f64 },
    Sigmoid { x: Var },
    Concat { parts: Vec<Var> },
    Normalize { x: Var },
    Add { a: Var, b: Var },
    Scale { x: Var, k: f64 },
    Bce { pred: Var, target: Tensor },
    L1Grad { pred: Var, target: Tensor, lambda: f64 },
    Render { albedo: Var, normal: Var, roughness: Var, intensity: Var, ctx: Arc<RenderCtx> },
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Constant leaf.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, false)
    }

    /// Leaf whose gradient is collected by [`Graph::backward`].
    pub fn param(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, true)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient after `backward`; zeros when the node did not influence the loss.
    pub fn grad(&self, v: Var) -> Tensor {
        self.grads
            .get(v.0)
            .and_then(|g| g.clone())
            .unwrap_or_else(|| Tensor::zeros(self.value(v).shape()))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Sign pattern of every leaky-ReLU input, used to spot finite-difference
    /// steps that cross a kink.
    pub fn relu_pattern(&self) -> Vec<bool> {
        let mut out = Vec::new();
        for n in &self.nodes {
            if let Op::LeakyRelu { x, .. } = n.op {
                out.extend(self.value(x).data().iter().map(|&v| v >= 0.0));
            }
        }
        out
    }

    pub fn conv(&mut self, x: Var, w: Var, b: Option<Var>, g: ConvGeom) -> Result<Var> {
        let y = conv2d(self.value(x), self.value(w), b.map(|b| self.value(b)), g)?;
        check_bias(self, b, y.shape()[1])?;
        let rg = self.rg(x) || self.rg(w) || b.is_some_and(|b| self.rg(b));
        Ok(self.push(y, Op::Conv { x, w, b, g }, rg))
    }

    pub fn conv_transpose(&mut self, x: Var, w: Var, b: Option<Var>, g: ConvGeom) -> Result<Var> {
        let y = conv_transpose2d(self.value(x), self.value(w), b.map(|b| self.value(b)), g)?;
        check_bias(self, b, y.shape()[1])?;
        let rg = self.rg(x) || self.rg(w) || b.is_some_and(|b| self.rg(b));
        Ok(self.push(y, Op::ConvT { x, w, b, g }, rg))
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Var {
        let t = self.value(x);
        let y = map(t, |v| if v >= 0.0 { v } else { slope * v });
        let rg = self.rg(x);
        self.push(y, Op::LeakyRelu { x, slope }, rg)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let y = map(self.value(x), sigmoid);
        let rg = self.rg(x);
        self.push(y, Op::Sigmoid { x }, rg)
    }

    /// Concatenation along channels of `(N, C, H, W)` tensors.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = self.value(*parts.first().ok_or_else(|| shape_err!("empty concat"))?);
        let (n, _, h, w) = first.dims4()?;
        let mut c_total = 0;
        for &p in parts {
            let (pn, pc, ph, pw) = self.value(p).dims4()?;
            if (pn, ph, pw) != (n, h, w) {
                return Err(shape_err!(
                    "concat of {:?} with {:?}",
                    self.value(p).shape(),
                    first.shape()
                ));
            }
            c_total += pc;
        }
        let mut data = Vec::with_capacity(n * c_total * h * w);
        for i in 0..n {
            for &p in parts {
                let t = self.value(p);
                let len = t.shape()[1] * h * w;
                data.extend_from_slice(&t.data()[i * len..(i + 1) * len]);
            }
        }
        let y = Tensor::from_vec(&[n, c_total, h, w], data)?;
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(y, Op::Concat { parts: parts.to_vec() }, rg))
    }

    /// Per-pixel unit Euclidean norm across channels.
    pub fn normalize(&mut self, x: Var) -> Result<Var> {
        let t = self.value(x);
        let (n, c, h, w) = t.dims4()?;
        let mut y = t.clone();
        let hw = h * w;
        for i in 0..n {
            for p in 0..hw {
                let norm = pixel_norm(t.data(), i, c, hw, p);
                for ch in 0..c {
                    y.data_mut()[(i * c + ch) * hw + p] /= norm;
                }
            }
        }
        let rg = self.rg(x);
        Ok(self.push(y, Op::Normalize { x }, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err!("add of {:?} and {:?}", ta.shape(), tb.shape()));
        }
        let mut y = ta.clone();
        y.add_assign(tb);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(y, Op::Add { a, b }, rg))
    }

    pub fn scale(&mut self, x: Var, k: f64) -> Var {
        let y = map(self.value(x), |v| k * v);
        let rg = self.rg(x);
        self.push(y, Op::Scale { x, k }, rg)
    }

    /// Mean binary cross-entropy with predictions clamped to `[ε, 1−ε]`.
    pub fn bce(&mut self, pred: Var, target: &Tensor) -> Result<Var> {
        let p = self.value(pred);
        if p.shape() != target.shape() {
            return Err(shape_err!("bce of {:?} against {:?}", p.shape(), target.shape()));
        }
        let sum: f64 = p
            .data()
            .iter()
            .zip(target.data())
            .map(|(&p, &y)| {
                let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            })
            .sum();
        let loss = Tensor::scalar(sum / p.len() as f64);
        let rg = self.rg(pred);
        Ok(self.push(
            loss,
            Op::Bce {
                pred,
                target: target.clone(),
            },
            rg,
        ))
    }

    /// Mean L1 on values plus `lambda` times the mean L1 of forward
    /// differences along x and along y.
    pub fn l1_grad(&mut self, pred: Var, target: &Tensor, lambda: f64) -> Result<Var> {
        let p = self.value(pred);
        if p.shape() != target.shape() {
            return Err(shape_err!("l1 of {:?} against {:?}", p.shape(), target.shape()));
        }
        let (n, c, h, w) = p.dims4()?;
        let d: Vec<f64> = p.data().iter().zip(target.data()).map(|(a, b)| a - b).collect();
        let mut loss = d.iter().map(|v| v.abs()).sum::<f64>() / d.len() as f64;
        if lambda != 0.0 {
            let (mut sx, mut sy) = (0.0, 0.0);
            for plane in d.chunks(h * w).take(n * c) {
                for y in 0..h {
                    for x in 0..w {
                        let v = plane[y * w + x];
                        if x + 1 < w {
                            sx += (plane[y * w + x + 1] - v).abs();
                        }
                        if y + 1 < h {
                            sy += (plane[(y + 1) * w + x] - v).abs();
                        }
                    }
                }
            }
            loss += lambda * (mean(sx, n * c * h * (w - 1)) + mean(sy, n * c * (h - 1) * w));
        }
        let rg = self.rg(pred);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::L1Grad {
                pred,
                target: target.clone(),
                lambda,
            },
            rg,
        ))
    }

    /// Closed-form one-bounce shading of `(N,3,H,W)` albedo, `(N,3,H,W)`
    /// normals and `(N,1,H,W)` roughness under RGB `intensity` (shape `[3]`).
    /// Differentiable in albedo, roughness and intensity; normals are treated
    /// as constants.
    pub fn render(
        &mut self,
        albedo: Var,
        normal: Var,
        roughness: Var,
        intensity: Var,
        items: Vec<RenderGeometry>,
        consts: BrdfConstants,
    ) -> Result<Var> {
        let (n, c, h, w) = self.value(albedo).dims4()?;
        let hw = h * w;
        if c != 3
            || self.value(normal).shape() != [n, 3, h, w]
            || self.value(roughness).shape() != [n, 1, h, w]
            || self.value(intensity).shape() != [3]
            || items.len() != n
            || items.iter().any(|g| g.view.len() != hw)
        {
            return Err(shape_err!("render inputs disagree in shape"));
        }
        let ctx = Arc::new(RenderCtx { items, consts });
        let (a, nm, r, li) = (
            self.value(albedo).data(),
            self.value(normal).data(),
            self.value(roughness).data(),
            self.value(intensity).data(),
        );
        let mut out = vec![0.0; n * 3 * hw];
        for i in 0..n {
            for p in 0..hw {
                if let Some(s) = shade_texel(&ctx, nm, r, i, hw, p) {
                    for ch in 0..3 {
                        out[(i * 3 + ch) * hw + p] =
                            (a[(i * 3 + ch) * hw + p] / PI + s.spec) * s.cos * li[ch];
                    }
                }
            }
        }
        let y = Tensor::from_vec(&[n, 3, h, w], out)?;
        let rg = self.rg(albedo) || self.rg(roughness) || self.rg(intensity);
        Ok(self.push(
            y,
            Op::Render {
                albedo,
                normal,
                roughness,
                intensity,
                ctx,
            },
            rg,
        ))
    }

    /// Propagates d(loss)/d(node) to every node that requires a gradient.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(shape_err!("backward needs a scalar loss"));
        }
        self.grads = vec![None; self.nodes.len()];
        self.grads[loss.0] = Some(Tensor::filled(self.value(loss).shape(), 1.0));
        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(g) = self.grads[i].take() else {
                continue;
            };
            let contributions = self.node_backward(i, &g);
            self.grads[i] = Some(g);
            for (v, t) in contributions {
                if !self.rg(v) {
                    continue;
                }
                match &mut self.grads[v.0] {
                    Some(acc) => acc.add_assign(&t),
                    slot => *slot = Some(t),
                }
            }
        }
        Ok(())
    }

    fn node_backward(&self, i: usize, g: &Tensor) -> Vec<(Var, Tensor)> {
        let node = &self.nodes[i];
        match &node.op {
            Op::Leaf => vec![],
            Op::Conv { x, w, b, g: geom } => {
                let (dx, dw, db) = conv2d_backward(self.value(*x), self.value(*w), *geom, g);
                with_bias(vec![(*x, dx), (*w, dw)], *b, db)
            }
            Op::ConvT { x, w, b, g: geom } => {
                let (dx, dw, db) =
                    conv_transpose2d_backward(self.value(*x), self.value(*w), *geom, g);
                with_bias(vec![(*x, dx), (*w, dw)], *b, db)
            }
            Op::LeakyRelu { x, slope } => {
                let t = self.value(*x);
                let d = zip(t, g, |v, g| if v >= 0.0 { g } else { slope * g });
                vec![(*x, d)]
            }
            Op::Sigmoid { x } => {
                let d = zip(&node.value, g, |s, g| g * s * (1.0 - s));
                vec![(*x, d)]
            }
            Op::Concat { parts } => {
                let (n, ctot, h, w) = g.dims4().expect("4-d");
                let hw = h * w;
                let mut off = 0;
                parts
                    .iter()
                    .map(|&p| {
                        let c = self.value(p).shape()[1];
                        let mut d = Vec::with_capacity(n * c * hw);
                        for item in 0..n {
                            let start = (item * ctot + off) * hw;
                            d.extend_from_slice(&g.data()[start..start + c * hw]);
                        }
                        off += c;
                        (p, Tensor::from_vec(self.value(p).shape(), d).expect("shape"))
                    })
                    .collect()
            }
            Op::Normalize { x } => {
                let t = self.value(*x);
                let (n, c, h, w) = t.dims4().expect("4-d");
                let hw = h * w;
                let y = &node.value;
                let mut d = Tensor::zeros(t.shape());
                for item in 0..n {
                    for p in 0..hw {
                        let norm = pixel_norm(t.data(), item, c, hw, p);
                        let idx = |ch: usize| (item * c + ch) * hw + p;
                        let yg: f64 = (0..c).map(|ch| y.data()[idx(ch)] * g.data()[idx(ch)]).sum();
                        let floor = norm <= NORM_FLOOR;
                        for ch in 0..c {
                            d.data_mut()[idx(ch)] = if floor {
                                g.data()[idx(ch)] / norm
                            } else {
                                (g.data()[idx(ch)] - y.data()[idx(ch)] * yg) / norm
                            };
                        }
                    }
                }
                vec![(*x, d)]
            }
            Op::Add { a, b } => vec![(*a, g.clone()), (*b, g.clone())],
            Op::Scale { x, k } => vec![(*x, map(g, |v| k * v))],
            Op::Bce { pred, target } => {
                let p = self.value(*pred);
                let scale = g.item() / p.len() as f64;
                let d = zip(p, target, |p, y| {
                    if p <= BCE_EPS || p >= 1.0 - BCE_EPS {
                        0.0
                    } else {
                        scale * ((1.0 - y) / (1.0 - p) - y / p)
                    }
                });
                vec![(*pred, d)]
            }
            Op::L1Grad {
                pred,
                target,
                lambda,
            } => {
                let p = self.value(*pred);
                let (n, c, h, w) = p.dims4().expect("4-d");
                let d: Vec<f64> = p.data().iter().zip(target.data()).map(|(a, b)| a - b).collect();
                let gs = g.item();
                let mut out: Vec<f64> = d.iter().map(|v| gs * sign(*v) / d.len() as f64).collect();
                if *lambda != 0.0 {
                    let kx = safe_inv(n * c * h * (w - 1)) * lambda * gs;
                    let ky = safe_inv(n * c * (h - 1) * w) * lambda * gs;
                    for (pi, plane) in d.chunks(h * w).enumerate() {
                        let o = &mut out[pi * h * w..(pi + 1) * h * w];
                        for y in 0..h {
                            for x in 0..w {
                                let v = plane[y * w + x];
                                if x + 1 < w {
                                    let s = kx * sign(plane[y * w + x + 1] - v);
                                    o[y * w + x + 1] += s;
                                    o[y * w + x] -= s;
                                }
                                if y + 1 < h {
                                    let s = ky * sign(plane[(y + 1) * w + x] - v);
                                    o[(y + 1) * w + x] += s;
                                    o[y * w + x] -= s;
                                }
                            }
                        }
                    }
                }
                vec![(*pred, Tensor::from_vec(p.shape(), out).expect("shape"))]
            }
            Op::Render {
                albedo,
                normal,
                roughness,
                intensity,
                ctx,
            } => {
                let (a, nm, r, li) = (
                    self.value(*albedo).data(),
                    self.value(*normal).data(),
                    self.value(*roughness).data(),
                    self.value(*intensity).data(),
                );
                let (n, _, h, w) = self.value(*albedo).dims4().expect("4-d");
                let hw = h * w;
                let mut da = Tensor::zeros(self.value(*albedo).shape());
                let mut dr = Tensor::zeros(self.value(*roughness).shape());
                let mut di = [0.0; 3];
                for i in 0..n {
                    for p in 0..hw {
                        let Some(s) = shade_texel(ctx, nm, r, i, hw, p) else {
                            continue;
                        };
                        let mut gi = 0.0;
                        for ch in 0..3 {
                            let idx = (i * 3 + ch) * hw + p;
                            let gv = g.data()[idx];
                            da.data_mut()[idx] = gv * s.cos * li[ch] / PI;
                            di[ch] += gv * (a[idx] / PI + s.spec) * s.cos;
                            gi += gv * li[ch];
                        }
                        if s.r_active {
                            dr.data_mut()[i * hw + p] = gi * s.dspec * s.cos;
                        }
                    }
                }
                vec![
                    (*albedo, da),
                    (*roughness, dr),
                    (*intensity, Tensor::from_vec(&[3], di.to_vec()).expect("shape")),
                    (*normal, Tensor::zeros(self.value(*normal).shape())),
                ]
            }
        }
    }
}

struct TexelShade {
    cos: f64,
    spec: f64,
    dspec: f64,
    r_active: bool,
}

/// Shading terms shared by the render forward and backward passes; mirrors
/// the directional renderer, including the roughness clamp.
fn shade_texel(ctx: &RenderCtx, nm: &[f64], r: &[f64], i: usize, hw: usize, p: usize) -> Option<TexelShade> {
    let geom = &ctx.items[i];
    let v = geom.view[p]?;
    let n = Vec3::new(
        nm[(i * 3) * hw + p],
        nm[(i * 3 + 1) * hw + p],
        nm[(i * 3 + 2) * hw + p],
    );
    let l = geom.light.to_light();
    let cos = n.dot(l);
    if cos <= 0.0 {
        return None;
    }
    (l + v).normalized()?;
    let raw = r[i * hw + p];
    let rc = raw.clamp(1e-4, 1.0);
    let (spec, dspec) = specular_with_droughness(n, l, v, rc, &ctx.consts);
    Some(TexelShade {
        cos,
        spec,
        dspec,
        r_active: raw > 1e-4 && raw < 1.0,
    })
}

fn check_bias(g: &Graph, b: Option<Var>, channels: usize) -> Result<()> {
    match b {
        Some(b) if g.value(b).shape() != [channels] => Err(shape_err!(
            "bias shape {:?} for {channels} channels",
            g.value(b).shape()
        )),
        _ => Ok(()),
    }
}

fn with_bias(mut v: Vec<(Var, Tensor)>, b: Option<Var>, db: Vec<f64>) -> Vec<(Var, Tensor)> {
    if let Some(b) = b {
        let n = db.len();
        v.push((b, Tensor::from_vec(&[n], db).expect("shape")));
    }
    v
}

fn pixel_norm(data: &[f64], item: usize, c: usize, hw: usize, p: usize) -> f64 {
    (0..c)
        .map(|ch| data[(item * c + ch) * hw + p].powi(2))
        .sum::<f64>()
        .sqrt()
        .max(NORM_FLOOR)
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn map(t: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::from_vec(t.shape(), t.data().iter().map(|&v| f(v)).collect()).expect("shape")
}

fn zip(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    Tensor::from_vec(a.shape(), a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect())
        .expect("shape")
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn mean(sum: f64, count: usize) -> f64 {
    sum * safe_inv(count)
}

fn safe_inv(count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        1.0 / count as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t4(data: &[f64]) -> Tensor {
        Tensor::from_vec(&[1, 1, 1, data.len()], data.to_vec()).unwrap()
    }

    #[test]
    fn leaky_relu_values_and_slopes() {
        let mut g = Graph::new();
        let x = g.param(t4(&[2.0, -1.0]));
        let y = g.leaky_relu(x, 0.1);
        assert_eq!(g.value(y).data(), &[2.0, -0.1]);
        let target = t4(&[0.0, 0.0]);
        // d/dy of mean L1 against a below-prediction target is sign/2
        let l = g.l1_grad(y, &target, 0.0).unwrap();
        g.backward(l).unwrap();
        let d = g.grad(x);
        assert!((d.data()[0] - 0.5).abs() < 1e-15);
        assert!((d.data()[1] - (-0.5 * 0.1)).abs() < 1e-15);
    }

    #[test]
    fn bce_hand_values() {
        let mut g = Graph::new();
        let p = g.input(t4(&[0.5]));
        let l = g.bce(p, &t4(&[1.0])).unwrap();
        assert!((g.value(l).item() - 2f64.ln()).abs() < 1e-12);

        let p = g.input(t4(&[0.0, 1.0, 1.0]));
        let l = g.bce(p, &t4(&[0.0, 1.0, 1.0])).unwrap();
        assert!(g.value(l).item() <= 1e-6);

        let p = g.input(t4(&[1.0 - 1e-7]));
        let l = g.bce(p, &t4(&[0.0])).unwrap();
        assert!((g.value(l).item() - (-(1e-7f64).ln())).abs() < 1e-6);
        assert!((g.value(l).item() - 16.118).abs() < 1e-3);
    }

    #[test]
    fn l1_grad_cases() {
        let target = Tensor::from_vec(&[1, 1, 2, 3], vec![0.1, 0.5, -0.3, 0.7, 0.2, 0.0]).unwrap();
        let mut g = Graph::new();
        let same = g.input(target.clone());
        let l = g.l1_grad(same, &target, 1.0).unwrap();
        assert_eq!(g.value(l).item(), 0.0);

        let shifted = g.input(Tensor::from_vec(&[1, 1, 2, 3], target.data().iter().map(|v| v + 0.25).collect()).unwrap());
        let l = g.l1_grad(shifted, &target, 1.0).unwrap();
        assert!((g.value(l).item() - 0.25).abs() < 1e-12);

        let other = g.input(Tensor::from_vec(&[1, 1, 2, 3], vec![0.0; 6]).unwrap());
        let plain = g.l1_grad(other, &target, 0.0).unwrap();
        let expect = target.data().iter().map(|v| v.abs()).sum::<f64>() / 6.0;
        assert!((g.value(plain).item() - expect).abs() < 1e-12);
    }

    #[test]
    fn normalize_gives_unit_pixels() {
        let mut g = Graph::new();
        let x = g.input(Tensor::from_vec(&[1, 3, 1, 2], vec![3.0, 1.0, 0.0, 2.0, 4.0, -2.0]).unwrap());
        let y = g.normalize(x).unwrap();
        let v = g.value(y).data();
        assert!((v[0] - 0.6).abs() < 1e-15 && (v[4] - 0.8).abs() < 1e-15);
        let n1 = (v[1] * v[1] + v[3] * v[3] + v[5] * v[5]).sqrt();
        assert!((n1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unused_branch_gets_zero_grad() {
        let mut g = Graph::new();
        let a = g.param(t4(&[1.0]));
        let b = g.param(t4(&[2.0]));
        let _unused = g.scale(b, 3.0);
        let l = g.bce(a, &t4(&[1.0])).unwrap();
        g.backward(l).unwrap();
        assert_eq!(g.grad(b).data(), &[0.0]);
    }

    #[test]
    fn shape_errors() {
        let mut g = Graph::new();
        let a = g.input(t4(&[1.0, 2.0]));
        let b = g.input(t4(&[1.0]));
        assert!(g.add(a, b).is_err());
        assert!(g.bce(a, &t4(&[1.0])).is_err());
        assert!(g.backward(a).is_err());
    }
}
