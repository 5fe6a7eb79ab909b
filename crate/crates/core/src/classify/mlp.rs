//! One-hidden-layer network on signature-image pixels.
//!
//! Inputs are binary and sparse, so the forward pass sums the weight rows of
//! the active pixels instead of multiplying a dense `κ²` vector.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::features::SignatureImage;
use crate::sampler::Label;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlpParams {
    pub hidden: usize,
    pub learn_rate: f64,
    pub epochs: usize,
    pub batch: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: 32,
            learn_rate: 0.05,
            epochs: 20,
            batch: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageMlp {
    pub kappa: usize,
    pub hidden: usize,
    /// Pixel-major input weights: row `p` holds the `hidden` weights of pixel `p`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl ImageMlp {
    pub fn train(data: &[(SignatureImage, Label)], params: &MlpParams, seed: u64) -> Result<Self> {
        if params.hidden == 0 || params.batch == 0 {
            return Err(Error::InvalidArgument(
                "hidden width and batch size must be positive".into(),
            ));
        }
        let kappa = data
            .first()
            .map(|(img, _)| img.kappa)
            .ok_or(Error::EmptyClass("original"))?;
        for (img, _) in data {
            if img.kappa != kappa {
                return Err(Error::KappaMismatch {
                    expected: kappa,
                    found: img.kappa,
                });
            }
        }
        if !data.iter().any(|(_, l)| *l == Label::Original) {
            return Err(Error::EmptyClass("original"));
        }
        if !data.iter().any(|(_, l)| *l == Label::Perturbed) {
            return Err(Error::EmptyClass("perturbed"));
        }

        let mut rng = seed::rng(seed);
        let h = params.hidden;
        let inputs = kappa * kappa;
        let a1 = (6.0 / (kappa as f64 + h as f64)).sqrt();
        let a2 = (6.0 / (h as f64 + 1.0)).sqrt();
        let mut model = Self {
            kappa,
            hidden: h,
            w1: (0..inputs * h).map(|_| rng.gen_range(-a1..a1)).collect(),
            b1: vec![0.0; h],
            w2: (0..h).map(|_| rng.gen_range(-a2..a2)).collect(),
            b2: 0.0,
        };

        let active: Vec<(Vec<u32>, f64)> = data
            .iter()
            .map(|(img, l)| (img.active_pixels(), if *l == Label::Original { 1.0 } else { 0.0 }))
            .collect();
        let mut order: Vec<usize> = (0..active.len()).collect();
        let mut hidden = vec![0.0; h];
        for epoch in 0..params.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for batch in order.chunks(params.batch) {
                let mut g_w1: Vec<(u32, Vec<f64>)> = Vec::with_capacity(batch.len());
                let mut g_b1 = vec![0.0; h];
                let mut g_w2 = vec![0.0; h];
                let mut g_b2 = 0.0;
                for &i in batch {
                    let (pixels, y) = &active[i];
                    let out = model.forward(pixels, &mut hidden);
                    let p = sigmoid(out);
                    epoch_loss += out.max(0.0) + (-out.abs()).exp().ln_1p() - y * out;
                    let d_out = p - y;
                    g_b2 += d_out;
                    let mut d_hidden = vec![0.0; h];
                    for j in 0..h {
                        g_w2[j] += d_out * hidden[j];
                        if hidden[j] > 0.0 {
                            d_hidden[j] = d_out * model.w2[j];
                        }
                    }
                    for (g, d) in g_b1.iter_mut().zip(&d_hidden) {
                        *g += d;
                    }
                    for &px in pixels {
                        g_w1.push((px, d_hidden.clone()));
                    }
                }
                let step = params.learn_rate / batch.len() as f64;
                for (px, d) in g_w1 {
                    let row = &mut model.w1[px as usize * h..(px as usize + 1) * h];
                    for (w, g) in row.iter_mut().zip(d) {
                        *w -= step * g;
                    }
                }
                for j in 0..h {
                    model.b1[j] -= step * g_b1[j];
                    model.w2[j] -= step * g_w2[j];
                }
                model.b2 -= step * g_b2;
            }
            if !epoch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
        }
        Ok(model)
    }

    fn forward(&self, pixels: &[u32], hidden: &mut [f64]) -> f64 {
        let h = self.hidden;
        hidden.copy_from_slice(&self.b1);
        for &px in pixels {
            for (a, w) in hidden.iter_mut().zip(&self.w1[px as usize * h..(px as usize + 1) * h]) {
                *a += w;
            }
        }
        let mut out = self.b2;
        for (a, w) in hidden.iter_mut().zip(&self.w2) {
            *a = a.max(0.0);
            out += *a * w;
        }
        out
    }

    pub fn predict(&self, img: &SignatureImage) -> Result<Label> {
        if img.kappa != self.kappa {
            return Err(Error::KappaMismatch {
                expected: self.kappa,
                found: img.kappa,
            });
        }
        let mut hidden = vec![0.0; self.hidden];
        let out = self.forward(&img.active_pixels(), &mut hidden);
        Ok(if out >= 0.0 { Label::Original } else { Label::Perturbed })
    }
}
