//! Single-class variational autoencoder: encode, reparametrize, decode, the
//! variational loss, and epoch training.
//!
//! The topology is fixed: one ReLU hidden layer into linear mean/log-variance
//! heads, one ReLU hidden layer out of the latent, and a sigmoid output
//! layer. Gradients are hand-derived for exactly this topology.

use crate::numerics::{
    backward_pass, forward_pass, sample_standard_normal, Activation, DenseLayer, LayerGrads, Prng,
    RmsPropState, Tensor,
};
use crate::{Error, Image, Result};
use serde::{Deserialize, Serialize};

/// Clamp bound keeping `ln` finite inside the reconstruction loss.
const BCE_EPS: f64 = 1e-7;

/// Architecture and training hyperparameters for one VAE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaeConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
}

impl VaeConfig {
    /// Defaults for 28×28 digit/fashion images: 256 hidden units, 50 latent
    /// dimensions, 40 epochs.
    pub fn mnist_family() -> Self {
        VaeConfig {
            input_dim: 784,
            hidden_dim: 256,
            latent_dim: 50,
            epochs: 40,
            batch_size: 128,
        }
    }

    /// Defaults for handwritten characters: 784 hidden units, 100 latent
    /// dimensions, 50 epochs.
    pub fn omniglot() -> Self {
        VaeConfig {
            input_dim: 784,
            hidden_dim: 784,
            latent_dim: 100,
            epochs: 50,
            batch_size: 128,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.latent_dim == 0 {
            return Err(Error::Argument(
                "vae dimensions must all be at least 1".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::Argument("vae epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("vae batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// The five dense layers of one per-class VAE.
///
/// Encoder parameters play the role of the inference ("bottom-up") weights,
/// decoder parameters the generative ("top-down") weights.
#[derive(Debug, Clone, PartialEq)]
pub struct VaeModel {
    config: VaeConfig,
    encoder_hidden: DenseLayer,
    mu_head: DenseLayer,
    logvar_head: DenseLayer,
    decoder_hidden: DenseLayer,
    decoder_out: DenseLayer,
}

/// Loss terms for one batch. `total` is exactly `reconstruction + kl`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    /// Batch mean of the per-sample pixel-summed binary cross-entropy.
    pub reconstruction: f64,
    /// Batch mean of the per-sample KL divergence to the standard normal.
    pub kl: f64,
    pub total: f64,
}

/// Parameter gradients in layer declaration order:
/// `[encoder_hidden, mu_head, logvar_head, decoder_hidden, decoder_out]`.
pub type VaeGrads = [LayerGrads; 5];

impl VaeModel {
    pub fn new(config: VaeConfig, prng: &mut Prng) -> Result<Self> {
        config.validate()?;
        Ok(VaeModel {
            config,
            encoder_hidden: DenseLayer::new(
                config.input_dim,
                config.hidden_dim,
                Activation::Relu,
                &mut prng.split(0),
            ),
            mu_head: DenseLayer::new(
                config.hidden_dim,
                config.latent_dim,
                Activation::Linear,
                &mut prng.split(1),
            ),
            logvar_head: DenseLayer::new(
                config.hidden_dim,
                config.latent_dim,
                Activation::Linear,
                &mut prng.split(2),
            ),
            decoder_hidden: DenseLayer::new(
                config.latent_dim,
                config.hidden_dim,
                Activation::Relu,
                &mut prng.split(3),
            ),
            decoder_out: DenseLayer::new(
                config.hidden_dim,
                config.input_dim,
                Activation::Sigmoid,
                &mut prng.split(4),
            ),
        })
    }

    /// Rebuild a model from five layers in declaration order.
    pub fn from_layers(config: VaeConfig, layers: [DenseLayer; 5]) -> Result<Self> {
        config.validate()?;
        let [encoder_hidden, mu_head, logvar_head, decoder_hidden, decoder_out] = layers;
        let expect = [
            (encoder_hidden.fan_in(), config.input_dim, "encoder fan_in"),
            (encoder_hidden.fan_out(), config.hidden_dim, "encoder fan_out"),
            (mu_head.fan_out(), config.latent_dim, "mu head fan_out"),
            (logvar_head.fan_out(), config.latent_dim, "logvar head fan_out"),
            (decoder_hidden.fan_in(), config.latent_dim, "decoder fan_in"),
            (decoder_out.fan_out(), config.input_dim, "decoder fan_out"),
        ];
        for (got, expected, context) in expect {
            if got != expected {
                return Err(Error::Dimension {
                    context: "vae layer shape",
                    expected,
                    got,
                });
            }
            let _ = context;
        }
        Ok(VaeModel {
            config,
            encoder_hidden,
            mu_head,
            logvar_head,
            decoder_hidden,
            decoder_out,
        })
    }

    pub fn config(&self) -> &VaeConfig {
        &self.config
    }

    /// Layers in declaration order (the checkpoint serialization order).
    pub fn layers(&self) -> [&DenseLayer; 5] {
        [
            &self.encoder_hidden,
            &self.mu_head,
            &self.logvar_head,
            &self.decoder_hidden,
            &self.decoder_out,
        ]
    }

    /// Map an image batch to the latent Gaussian parameters `(mu, logvar)`.
    pub fn encode(&self, x: &Tensor) -> Result<(Tensor, Tensor)> {
        let (h, _) = forward_pass(std::slice::from_ref(&self.encoder_hidden), x)?;
        let (mu, _) = forward_pass(std::slice::from_ref(&self.mu_head), &h)?;
        let (logvar, _) = forward_pass(std::slice::from_ref(&self.logvar_head), &h)?;
        Ok((mu, logvar))
    }

    /// Map a latent batch back to image space; outputs lie in `(0, 1)`.
    pub fn decode(&self, z: &Tensor) -> Result<Tensor> {
        let (h, _) = forward_pass(std::slice::from_ref(&self.decoder_hidden), z)?;
        let (xhat, _) = forward_pass(std::slice::from_ref(&self.decoder_out), &h)?;
        Ok(xhat)
    }

    /// Deterministic reconstruction through the latent mean (ε = 0).
    pub fn reconstruct(&self, x: &Tensor) -> Result<Tensor> {
        let (mu, _) = self.encode(x)?;
        self.decode(&mu)
    }
}

/// Reparametrization: `z = mu + exp(0.5 · logvar) ⊙ eps`.
pub fn reparameterize(mu: &Tensor, logvar: &Tensor, eps: &Tensor) -> Result<Tensor> {
    if mu.shape() != logvar.shape() || mu.shape() != eps.shape() {
        return Err(Error::Dimension {
            context: "reparameterize shapes",
            expected: mu.data().len(),
            got: eps.data().len(),
        });
    }
    let mut z = mu.clone();
    for ((z, (&lv, &e)), _) in z
        .data_mut()
        .iter_mut()
        .zip(logvar.data().iter().zip(eps.data()))
        .zip(0..)
    {
        *z += (0.5 * lv).exp() * e;
    }
    Ok(z)
}

/// Variational loss for a batch: pixel-summed binary cross-entropy plus the
/// KL divergence of `N(mu, exp(logvar))` from `N(0, I)`, both averaged over
/// the batch. Reconstructions are clamped away from 0 and 1 inside the logs.
pub fn vae_loss(x: &Tensor, xhat: &Tensor, mu: &Tensor, logvar: &Tensor) -> Result<LossBreakdown> {
    if x.shape() != xhat.shape() {
        return Err(Error::Dimension {
            context: "vae loss reconstruction shape",
            expected: x.data().len(),
            got: xhat.data().len(),
        });
    }
    if mu.shape() != logvar.shape() || mu.rows() != x.rows() {
        return Err(Error::Dimension {
            context: "vae loss latent shape",
            expected: x.rows(),
            got: mu.rows(),
        });
    }
    if let Some(&bad) = x.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Domain(format!(
            "vae loss input pixel {bad} outside [0, 1]"
        )));
    }

    let batch = x.rows() as f64;
    let mut bce_sum = 0.0f64;
    for (&xi, &xh) in x.data().iter().zip(xhat.data()) {
        let p = (xh as f64).clamp(BCE_EPS, 1.0 - BCE_EPS);
        bce_sum -= xi as f64 * p.ln() + (1.0 - xi as f64) * (1.0 - p).ln();
    }
    let mut kl_sum = 0.0f64;
    for (&m, &lv) in mu.data().iter().zip(logvar.data()) {
        let (m, lv) = (m as f64, lv as f64);
        kl_sum -= 0.5 * (1.0 + lv - m * m - lv.exp());
    }

    let reconstruction = bce_sum / batch;
    let kl = (kl_sum / batch).max(0.0);
    Ok(LossBreakdown {
        reconstruction,
        kl,
        total: reconstruction + kl,
    })
}

/// Loss and analytic parameter gradients for one batch with the noise `eps`
/// held fixed.
pub fn loss_gradients(model: &VaeModel, x: &Tensor, eps: &Tensor) -> Result<(LossBreakdown, VaeGrads)> {
    let batch = x.rows();
    let enc = std::slice::from_ref(&model.encoder_hidden);
    let mu_head = std::slice::from_ref(&model.mu_head);
    let lv_head = std::slice::from_ref(&model.logvar_head);
    let dec_hidden = std::slice::from_ref(&model.decoder_hidden);
    let dec_out = std::slice::from_ref(&model.decoder_out);

    let (h, enc_cache) = forward_pass(enc, x)?;
    let (mu, mu_cache) = forward_pass(mu_head, &h)?;
    let (logvar, lv_cache) = forward_pass(lv_head, &h)?;
    let z = reparameterize(&mu, &logvar, eps)?;
    let (dh, dec_h_cache) = forward_pass(dec_hidden, &z)?;
    let (xhat, dec_out_cache) = forward_pass(dec_out, &dh)?;

    let loss = vae_loss(x, &xhat, &mu, &logvar)?;
    let inv_batch = 1.0 / batch as f32;

    // d(loss)/d(xhat). Outside the clamp interval the loss is locally
    // constant in xhat, so the gradient there is exactly zero.
    let mut d_xhat = Tensor::zeros(xhat.shape());
    for ((g, &xh), &xi) in d_xhat.data_mut().iter_mut().zip(xhat.data()).zip(x.data()) {
        let p = xh as f64;
        if p > BCE_EPS && p < 1.0 - BCE_EPS {
            *g = (((p - xi as f64) / (p * (1.0 - p))) as f32) * inv_batch;
        }
    }

    let (g_dec_out, d_dh) = backward_pass(dec_out, &dec_out_cache, &d_xhat)?;
    let (g_dec_hidden, d_z) = backward_pass(dec_hidden, &dec_h_cache, &d_dh)?;

    // Through the reparametrization: dz/dmu = 1, dz/dlogvar = 0.5·σ·ε;
    // plus the KL terms dKL/dmu = mu, dKL/dlogvar = 0.5·(e^logvar − 1).
    let mut d_mu = d_z.clone();
    for (g, &m) in d_mu.data_mut().iter_mut().zip(mu.data()) {
        *g += m * inv_batch;
    }
    let mut d_logvar = Tensor::zeros(logvar.shape());
    for (i, g) in d_logvar.data_mut().iter_mut().enumerate() {
        let lv = logvar.data()[i];
        let sigma = (0.5 * lv).exp();
        *g = d_z.data()[i] * 0.5 * sigma * eps.data()[i] + 0.5 * (lv.exp() - 1.0) * inv_batch;
    }

    let (g_mu, d_h_mu) = backward_pass(mu_head, &mu_cache, &d_mu)?;
    let (g_lv, d_h_lv) = backward_pass(lv_head, &lv_cache, &d_logvar)?;
    let mut d_h = d_h_mu;
    for (g, &extra) in d_h.data_mut().iter_mut().zip(d_h_lv.data()) {
        *g += extra;
    }
    let (g_enc, _) = backward_pass(enc, &enc_cache, &d_h)?;

    let [g_enc] = <[LayerGrads; 1]>::try_from(g_enc).unwrap();
    let [g_mu] = <[LayerGrads; 1]>::try_from(g_mu).unwrap();
    let [g_lv] = <[LayerGrads; 1]>::try_from(g_lv).unwrap();
    let [g_dec_hidden] = <[LayerGrads; 1]>::try_from(g_dec_hidden).unwrap();
    let [g_dec_out] = <[LayerGrads; 1]>::try_from(g_dec_out).unwrap();
    Ok((loss, [g_enc, g_mu, g_lv, g_dec_hidden, g_dec_out]))
}

/// Train for `config.epochs` epochs of shuffled mini-batch RMSProp with a
/// fresh ε per sample per step. Returns the per-epoch mean total loss.
pub fn train_epochs(
    model: &mut VaeModel,
    data: &[Image],
    config: &VaeConfig,
    optimizer: &mut RmsPropState,
    prng: &mut Prng,
) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::Argument("cannot train on an empty dataset".into()));
    }
    for img in data {
        if img.len() != config.input_dim {
            return Err(Error::Dimension {
                context: "training image width",
                expected: config.input_dim,
                got: img.len(),
            });
        }
    }
    let batch_size = config.batch_size.min(data.len());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        prng.shuffle(&mut order);
        let mut loss_sum = 0.0f64;
        for chunk in order.chunks(batch_size) {
            let rows: Vec<&[f32]> = chunk.iter().map(|&i| data[i].as_slice()).collect();
            let x = Tensor::from_rows(&rows)?;
            let eps = Tensor::from_vec(
                &[chunk.len(), config.latent_dim],
                sample_standard_normal(prng, chunk.len() * config.latent_dim),
            )?;
            let (loss, grads) = loss_gradients(model, &x, &eps)?;
            if !loss.total.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite loss {} at epoch {epoch}",
                    loss.total
                )));
            }
            loss_sum += loss.total * chunk.len() as f64;
            apply_step(model, &grads, optimizer)?;
        }
        history.push(loss_sum / data.len() as f64);
    }
    Ok(history)
}

fn apply_step(model: &mut VaeModel, grads: &VaeGrads, optimizer: &mut RmsPropState) -> Result<()> {
    let (w0, b0) = model.encoder_hidden.params_mut();
    let (w1, b1) = model.mu_head.params_mut();
    let (w2, b2) = model.logvar_head.params_mut();
    let (w3, b3) = model.decoder_hidden.params_mut();
    let (w4, b4) = model.decoder_out.params_mut();
    let mut params: [&mut [f32]; 10] = [w0, b0, w1, b1, w2, b2, w3, b3, w4, b4];
    let grad_refs: [&[f32]; 10] = [
        &grads[0].weights,
        &grads[0].bias,
        &grads[1].weights,
        &grads[1].bias,
        &grads[2].weights,
        &grads[2].bias,
        &grads[3].weights,
        &grads[3].bias,
        &grads[4].weights,
        &grads[4].bias,
    ];
    optimizer.step(&mut params, &grad_refs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::pcc;
    use proptest::prelude::*;

    fn tiny_config() -> VaeConfig {
        VaeConfig {
            input_dim: 6,
            hidden_dim: 4,
            latent_dim: 2,
            epochs: 3,
            batch_size: 4,
        }
    }

    #[test]
    fn encode_decode_shapes() {
        let cfg = tiny_config();
        let model = VaeModel::new(cfg, &mut Prng::new(1)).unwrap();
        let x = Tensor::from_rows(&[vec![0.5; 6], vec![0.25; 6], vec![0.75; 6]]).unwrap();
        let (mu, logvar) = model.encode(&x).unwrap();
        assert_eq!(mu.shape(), &[3, 2]);
        assert_eq!(logvar.shape(), &[3, 2]);
        let xhat = model.decode(&mu).unwrap();
        assert_eq!(xhat.shape(), &[3, 6]);
        assert!(xhat.data().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn encode_is_deterministic() {
        let model = VaeModel::new(tiny_config(), &mut Prng::new(9)).unwrap();
        let x = Tensor::from_rows(&[vec![0.1, 0.9, 0.3, 0.6, 0.2, 0.8]]).unwrap();
        let (mu1, lv1) = model.encode(&x).unwrap();
        let (mu2, lv2) = model.encode(&x).unwrap();
        assert_eq!(mu1, mu2);
        assert_eq!(lv1, lv2);
    }

    #[test]
    fn encode_matches_hand_composed_forward() {
        let model = VaeModel::new(tiny_config(), &mut Prng::new(33)).unwrap();
        let x = vec![0.1f32, 0.7, 0.4, 0.9, 0.0, 0.55];

        // Hand arithmetic through encoder_hidden (relu) then mu_head (linear).
        let enc = &model.layers()[0];
        let mut h = vec![0.0f32; 4];
        for (j, hj) in h.iter_mut().enumerate() {
            let mut z = enc.bias()[j];
            for (i, &v) in x.iter().enumerate() {
                z += v * enc.weights()[i * 4 + j];
            }
            *hj = z.max(0.0);
        }
        let mu_head = &model.layers()[1];
        let mut mu_hand = vec![0.0f32; 2];
        for (j, mj) in mu_hand.iter_mut().enumerate() {
            let mut z = mu_head.bias()[j];
            for (i, &v) in h.iter().enumerate() {
                z += v * mu_head.weights()[i * 2 + j];
            }
            *mj = z;
        }

        let (mu, _) = model.encode(&Tensor::from_rows(&[x]).unwrap()).unwrap();
        for (a, b) in mu.data().iter().zip(&mu_hand) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn reparameterize_zero_noise_returns_mean() {
        let mu = Tensor::from_rows(&[vec![0.3, -0.7]]).unwrap();
        let lv = Tensor::from_rows(&[vec![0.5, 1.5]]).unwrap();
        let eps = Tensor::zeros(&[1, 2]);
        assert_eq!(reparameterize(&mu, &lv, &eps).unwrap(), mu);
    }

    #[test]
    fn reparameterize_unit_variance_adds_noise() {
        let mu = Tensor::from_rows(&[vec![0.3, -0.7]]).unwrap();
        let lv = Tensor::zeros(&[1, 2]);
        let eps = Tensor::from_rows(&[vec![0.25, -1.0]]).unwrap();
        let z = reparameterize(&mu, &lv, &eps).unwrap();
        assert_eq!(z.data(), &[0.55, -1.7]);
    }

    #[test]
    fn reparameterize_scales_by_exp_half_logvar() {
        // logvar = ln 4 gives σ = 2.
        let mu = Tensor::zeros(&[1, 1]);
        let lv = Tensor::from_rows(&[vec![4.0f32.ln()]]).unwrap();
        let eps = Tensor::from_rows(&[vec![1.0]]).unwrap();
        let z = reparameterize(&mu, &lv, &eps).unwrap();
        assert!((z.data()[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn kl_is_zero_for_standard_normal_posterior() {
        let x = Tensor::from_rows(&[vec![0.5]]).unwrap();
        let xhat = Tensor::from_rows(&[vec![0.5]]).unwrap();
        let mu = Tensor::zeros(&[1, 3]);
        let lv = Tensor::zeros(&[1, 3]);
        let loss = vae_loss(&x, &xhat, &mu, &lv).unwrap();
        assert_eq!(loss.kl, 0.0);
        // Single pixel at x = xhat = 0.5 costs exactly ln 2.
        assert!((loss.reconstruction - std::f64::consts::LN_2).abs() < 1e-9);
        assert_eq!(loss.total, loss.reconstruction + loss.kl);
    }

    #[test]
    fn kl_closed_form_for_shifted_mean() {
        // 1-dim latent, mu = 1, logvar = 0: KL = −0.5·(1 + 0 − 1 − 1) = 0.5.
        let x = Tensor::from_rows(&[vec![0.5]]).unwrap();
        let xhat = Tensor::from_rows(&[vec![0.5]]).unwrap();
        let mu = Tensor::from_rows(&[vec![1.0]]).unwrap();
        let lv = Tensor::zeros(&[1, 1]);
        let loss = vae_loss(&x, &xhat, &mu, &lv).unwrap();
        assert!((loss.kl - 0.5).abs() < 1e-12);
    }

    #[test]
    fn loss_rejects_pixels_outside_unit_interval() {
        let x = Tensor::from_rows(&[vec![1.5]]).unwrap();
        let xhat = Tensor::from_rows(&[vec![0.5]]).unwrap();
        let mu = Tensor::zeros(&[1, 1]);
        let lv = Tensor::zeros(&[1, 1]);
        assert!(matches!(
            vae_loss(&x, &xhat, &mu, &lv).unwrap_err(),
            Error::Domain(_)
        ));
    }

    #[test]
    fn reconstruct_is_deterministic_and_composes_encode_decode() {
        let model = VaeModel::new(tiny_config(), &mut Prng::new(4)).unwrap();
        let x = Tensor::from_rows(&[vec![0.2, 0.4, 0.6, 0.8, 0.1, 0.3]]).unwrap();
        let r1 = model.reconstruct(&x).unwrap();
        let r2 = model.reconstruct(&x).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.data().iter().all(|&v| v > 0.0 && v < 1.0));

        let (mu, logvar) = model.encode(&x).unwrap();
        let eps = Tensor::zeros(mu.shape());
        let z = reparameterize(&mu, &logvar, &eps).unwrap();
        assert_eq!(model.decode(&z).unwrap(), r1);
    }

    #[test]
    fn training_is_bit_reproducible() {
        let cfg = tiny_config();
        let data: Vec<Image> = (0..10)
            .map(|i| (0..6).map(|j| ((i * 7 + j * 3) % 10) as f32 / 10.0).collect())
            .collect();
        let run = || {
            let mut model = VaeModel::new(cfg, &mut Prng::new(77)).unwrap();
            let mut opt = RmsPropState::default();
            let mut prng = Prng::new(78);
            let history = train_epochs(&mut model, &data, &cfg, &mut opt, &mut prng).unwrap();
            (model, history)
        };
        let (m1, h1) = run();
        let (m2, h2) = run();
        assert_eq!(h1, h2);
        assert_eq!(m1, m2);
    }

    #[test]
    fn training_memorizes_a_single_image() {
        // A smooth blob: bright center fading toward the borders.
        let side = 28;
        let img: Image = (0..side * side)
            .map(|i| {
                let (r, c) = (i / side, i % side);
                let d = ((r as f32 - 13.5).powi(2) + (c as f32 - 13.5).powi(2)).sqrt();
                (1.0 - d / 14.0).clamp(0.0, 1.0)
            })
            .collect();
        let cfg = VaeConfig {
            input_dim: 784,
            hidden_dim: 64,
            latent_dim: 8,
            epochs: 200,
            batch_size: 1,
        };
        let mut model = VaeModel::new(cfg, &mut Prng::new(12)).unwrap();
        let mut opt = RmsPropState::default();
        let mut prng = Prng::new(13);
        train_epochs(&mut model, &[img.clone()], &cfg, &mut opt, &mut prng).unwrap();

        let x = Tensor::from_rows(&[img.clone()]).unwrap();
        let xhat = model.reconstruct(&x).unwrap();
        let r = pcc(&img, xhat.row(0)).unwrap();
        assert!(r > 0.9, "memorization pcc {r}");
    }

    #[test]
    fn training_loss_descends_on_synthetic_set() {
        let mut prng = Prng::new(5);
        let data: Vec<Image> = (0..50)
            .map(|_| (0..16).map(|_| prng.next_f32() * 0.5).collect())
            .collect();
        let cfg = VaeConfig {
            input_dim: 16,
            hidden_dim: 12,
            latent_dim: 3,
            epochs: 30,
            batch_size: 16,
        };
        let mut model = VaeModel::new(cfg, &mut Prng::new(6)).unwrap();
        let mut opt = RmsPropState::default();
        let mut train_prng = Prng::new(7);
        let history = train_epochs(&mut model, &data, &cfg, &mut opt, &mut train_prng).unwrap();
        let first: f64 = history[..5].iter().sum::<f64>() / 5.0;
        let last: f64 = history[history.len() - 5..].iter().sum::<f64>() / 5.0;
        assert!(last < first, "loss did not descend: first {first}, last {last}");
    }

    #[test]
    fn training_rejects_empty_data() {
        let cfg = tiny_config();
        let mut model = VaeModel::new(cfg, &mut Prng::new(1)).unwrap();
        let mut opt = RmsPropState::default();
        let mut prng = Prng::new(2);
        assert!(matches!(
            train_epochs(&mut model, &[], &cfg, &mut opt, &mut prng).unwrap_err(),
            Error::Argument(_)
        ));
    }

    proptest! {
        /// The KL term is non-negative for any (mu, logvar).
        #[test]
        fn kl_is_non_negative(
            mu_vals in proptest::collection::vec(-5.0f32..5.0, 4),
            lv_vals in proptest::collection::vec(-5.0f32..5.0, 4),
        ) {
            let x = Tensor::from_rows(&[vec![0.5]]).unwrap();
            let xhat = Tensor::from_rows(&[vec![0.5]]).unwrap();
            let mu = Tensor::from_rows(&[mu_vals]).unwrap();
            let lv = Tensor::from_rows(&[lv_vals]).unwrap();
            prop_assert!(vae_loss(&x, &xhat, &mu, &lv).unwrap().kl >= 0.0);
        }

        /// decode(encode-mean(x)) always has the shape of x.
        #[test]
        fn shape_closure(batch in 1usize..4, seed in 0u64..100) {
            let cfg = tiny_config();
            let model = VaeModel::new(cfg, &mut Prng::new(seed)).unwrap();
            let mut prng = Prng::new(seed + 1);
            let rows: Vec<Vec<f32>> = (0..batch)
                .map(|_| (0..cfg.input_dim).map(|_| prng.next_f32()).collect())
                .collect();
            let x = Tensor::from_rows(&rows).unwrap();
            let (mu, _) = model.encode(&x).unwrap();
            let xhat = model.decode(&mu).unwrap();
            prop_assert_eq!(xhat.shape(), x.shape());
        }
    }
}
