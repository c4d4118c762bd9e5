use crate::{Error, Result};

/// RMSProp optimizer state.
///
/// Keeps one running mean of squared gradients per parameter tensor. The
/// cache is allocated lazily on the first step so one state can serve any
/// parameter list whose shapes then stay fixed.
#[derive(Debug, Clone)]
pub struct RmsPropState {
    learning_rate: f32,
    decay: f32,
    epsilon: f32,
    cache: Vec<Vec<f32>>,
}

pub const DEFAULT_LEARNING_RATE: f32 = 1e-3;
pub const DEFAULT_DECAY: f32 = 0.9;
pub const DEFAULT_EPSILON: f32 = 1e-7;

impl Default for RmsPropState {
    fn default() -> Self {
        RmsPropState::new(DEFAULT_LEARNING_RATE, DEFAULT_DECAY, DEFAULT_EPSILON)
            .expect("default hyperparameters are valid")
    }
}

impl RmsPropState {
    pub fn new(learning_rate: f32, decay: f32, epsilon: f32) -> Result<Self> {
        if learning_rate <= 0.0 || epsilon <= 0.0 {
            return Err(Error::Argument(format!(
                "rmsprop hyperparameters must be strictly positive (lr={learning_rate}, eps={epsilon})"
            )));
        }
        if !(0.0..1.0).contains(&decay) || decay == 0.0 {
            return Err(Error::Argument(format!(
                "rmsprop decay must lie in (0, 1), got {decay}"
            )));
        }
        Ok(RmsPropState {
            learning_rate,
            decay,
            epsilon,
            cache: Vec::new(),
        })
    }

    pub fn learning_rate(&self) -> f32 {
        self.learning_rate
    }

    /// Per-tensor running means of squared gradients (empty before the first
    /// step).
    pub fn cache(&self) -> &[Vec<f32>] {
        &self.cache
    }

    /// One RMSProp update:
    /// `cache ← ρ·cache + (1−ρ)·g²`, `param ← param − lr·g/(√cache + ε)`.
    ///
    /// `params` and `grads` are parallel lists of equally shaped tensors.
    pub fn step(&mut self, params: &mut [&mut [f32]], grads: &[&[f32]]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Dimension {
                context: "rmsprop tensor count",
                expected: params.len(),
                got: grads.len(),
            });
        }
        if self.cache.is_empty() {
            self.cache = params.iter().map(|p| vec![0.0; p.len()]).collect();
        }
        if self.cache.len() != params.len() {
            return Err(Error::Dimension {
                context: "rmsprop cache count",
                expected: self.cache.len(),
                got: params.len(),
            });
        }

        for (t, (param, grad)) in params.iter_mut().zip(grads).enumerate() {
            if param.len() != grad.len() {
                return Err(Error::Dimension {
                    context: "rmsprop gradient shape",
                    expected: param.len(),
                    got: grad.len(),
                });
            }
            if param.len() != self.cache[t].len() {
                return Err(Error::Dimension {
                    context: "rmsprop cache shape",
                    expected: self.cache[t].len(),
                    got: param.len(),
                });
            }
            if let Some(idx) = grad.iter().position(|g| !g.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite gradient at tensor {t}, flat index {idx}"
                )));
            }
            let cache = &mut self.cache[t];
            for ((p, &g), c) in param.iter_mut().zip(grad.iter()).zip(cache.iter_mut()) {
                *c = self.decay * *c + (1.0 - self.decay) * g * g;
                *p -= self.learning_rate * g / (c.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}
