//! Single-hidden-layer perceptron trained by backpropagation with Adam.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }

    pub fn parse(s: &str) -> Option<Activation> {
        match s {
            "identity" => Some(Activation::Identity),
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            _ => None,
        }
    }

    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z`.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    /// `n_inputs × hidden`.
    pub w_in: DMatrix<f64>,
    pub b_hidden: DVector<f64>,
    /// `hidden × n_outputs`.
    pub w_out: DMatrix<f64>,
    pub b_out: DVector<f64>,
    pub activation: Activation,
}

/// Parameter-shaped gradients of the loss.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGradients {
    pub w_in: DMatrix<f64>,
    pub b_hidden: DVector<f64>,
    pub w_out: DMatrix<f64>,
    pub b_out: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpTrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    /// Epochs without improvement of the monitored loss before stopping.
    pub patience: usize,
    /// Stop once the training loss falls below this value.
    pub target_loss: f64,
    pub seed: u64,
}

impl Default for MlpTrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 2000,
            batch_size: None,
            patience: 50,
            target_loss: 0.0,
            seed: 0,
        }
    }
}

impl MlpTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate >= 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.patience >= 1
            && self.batch_size != Some(0);
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "invalid MLP training configuration: {self:?}"
            )));
        }
        Ok(())
    }
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases.
    pub fn init(
        n_inputs: usize,
        hidden_size: usize,
        n_outputs: usize,
        activation: Activation,
        rng: &mut impl Rng,
    ) -> Self {
        let glorot = |fan_in: usize, fan_out: usize, rng: &mut dyn rand::RngCore| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            DMatrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-limit..=limit))
        };
        let w_in = glorot(n_inputs, hidden_size, rng);
        let w_out = glorot(hidden_size, n_outputs, rng);
        Self {
            w_in,
            b_hidden: DVector::zeros(hidden_size),
            w_out,
            b_out: DVector::zeros(n_outputs),
            activation,
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.w_in.nrows()
    }

    pub fn hidden_size(&self) -> usize {
        self.w_in.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.w_out.ncols()
    }

    fn pre_activation(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = x * &self.w_in;
        for mut row in z.row_iter_mut() {
            row += self.b_hidden.transpose();
        }
        z
    }

    fn output(&self, hidden: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = hidden * &self.w_out;
        for mut row in out.row_iter_mut() {
            row += self.b_out.transpose();
        }
        out
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.n_inputs() {
            return Err(Error::Schema(format!(
                "network expects {} inputs, got {}",
                self.n_inputs(),
                x.ncols()
            )));
        }
        let act = self.activation;
        let hidden = self.pre_activation(x).map(|z| act.apply(z));
        Ok(self.output(&hidden))
    }

    fn params_finite(&self) -> bool {
        self.w_in
            .iter()
            .chain(self.b_hidden.iter())
            .chain(self.w_out.iter())
            .chain(self.b_out.iter())
            .all(|v| v.is_finite())
    }
}

/// Mean squared error over all rows and outputs, and its gradient with
/// respect to every parameter.
pub fn mlp_loss_and_grad(
    model: &MlpModel,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> Result<(f64, MlpGradients)> {
    if x.nrows() == 0 || x.nrows() != y.nrows() {
        return Err(Error::Schema(format!(
            "batch has {} input rows and {} target rows",
            x.nrows(),
            y.nrows()
        )));
    }
    if x.ncols() != model.n_inputs() || y.ncols() != model.n_outputs() {
        return Err(Error::Schema("batch shape does not match the network".into()));
    }
    let act = model.activation;
    let z = model.pre_activation(x);
    let hidden = z.map(|v| act.apply(v));
    let pred = model.output(&hidden);
    let diff = pred - y;
    let count = (diff.nrows() * diff.ncols()) as f64;
    let loss = diff.norm_squared() / count;

    let d_out = diff * (2.0 / count);
    let w_out = hidden.transpose() * &d_out;
    let b_out = d_out.row_sum().transpose();
    let mut d_hidden = d_out * model.w_out.transpose();
    d_hidden.zip_apply(&z, |g, zv| *g *= act.derivative(zv));
    let w_in = x.transpose() * &d_hidden;
    let b_hidden = d_hidden.row_sum().transpose();
    Ok((
        loss,
        MlpGradients {
            w_in,
            b_hidden,
            w_out,
            b_out,
        },
    ))
}

fn mse(model: &MlpModel, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
    let pred = model.predict(x)?;
    Ok((pred - y).norm_squared() / (y.nrows() * y.ncols()) as f64)
}

struct Moments {
    m: MlpGradients,
    v: MlpGradients,
    t: i32,
}

impl Moments {
    fn zeros_like(model: &MlpModel) -> Self {
        let z = MlpGradients {
            w_in: DMatrix::zeros(model.w_in.nrows(), model.w_in.ncols()),
            b_hidden: DVector::zeros(model.b_hidden.len()),
            w_out: DMatrix::zeros(model.w_out.nrows(), model.w_out.ncols()),
            b_out: DVector::zeros(model.b_out.len()),
        };
        Self {
            m: z.clone(),
            v: z,
            t: 0,
        }
    }

    fn step(&mut self, model: &mut MlpModel, g: &MlpGradients, cfg: &MlpTrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for k in 0..p.len() {
                m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
                v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        };
        update(
            model.w_in.as_mut_slice(),
            g.w_in.as_slice(),
            self.m.w_in.as_mut_slice(),
            self.v.w_in.as_mut_slice(),
        );
        update(
            model.b_hidden.as_mut_slice(),
            g.b_hidden.as_slice(),
            self.m.b_hidden.as_mut_slice(),
            self.v.b_hidden.as_mut_slice(),
        );
        update(
            model.w_out.as_mut_slice(),
            g.w_out.as_slice(),
            self.m.w_out.as_mut_slice(),
            self.v.w_out.as_mut_slice(),
        );
        update(
            model.b_out.as_mut_slice(),
            g.b_out.as_slice(),
            self.m.b_out.as_mut_slice(),
            self.v.b_out.as_mut_slice(),
        );
    }
}

/// Outcome of a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpTraining {
    pub model: MlpModel,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_loss: f64,
    pub final_train_loss: f64,
}

/// Trains a network with Adam.
///
/// The monitored loss is the validation MSE when a validation set is given
/// and the training MSE otherwise. Training stops after `max_epochs`, when
/// the monitored loss has not improved for `patience` epochs, or when the
/// training loss drops below `target_loss`; the best-monitored parameters
/// are returned.
pub fn fit_mlp(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    val: Option<(&DMatrix<f64>, &DMatrix<f64>)>,
    hidden_size: usize,
    activation: Activation,
    cfg: &MlpTrainConfig,
) -> Result<MlpTraining> {
    cfg.validate()?;
    if hidden_size == 0 {
        return Err(Error::InvalidArgument("hidden_size must be >= 1".into()));
    }
    if x.nrows() == 0 || x.nrows() != y.nrows() {
        return Err(Error::Schema(format!(
            "training set has {} input rows and {} target rows",
            x.nrows(),
            y.nrows()
        )));
    }
    let val = val.filter(|(vx, _)| vx.nrows() > 0);
    if let Some((vx, vy)) = val {
        if vx.ncols() != x.ncols() || vy.ncols() != y.ncols() || vx.nrows() != vy.nrows() {
            return Err(Error::Schema("validation set shape differs from training set".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = MlpModel::init(x.ncols(), hidden_size, y.ncols(), activation, &mut rng);
    let mut moments = Moments::zeros_like(&model);
    let n = x.nrows();
    let batch = cfg.batch_size.unwrap_or(n).min(n);
    let mut order: Vec<usize> = (0..n).collect();

    let mut best = model.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut epochs_run = 0;
    let mut train_loss = f64::INFINITY;

    for epoch in 1..=cfg.max_epochs {
        epochs_run = epoch;
        if batch < n {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch) {
            let (bx, by) = if batch == n {
                (x.clone(), y.clone())
            } else {
                (x.select_rows(chunk), y.select_rows(chunk))
            };
            let (loss, grads) = mlp_loss_and_grad(&model, &bx, &by)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            moments.step(&mut model, &grads, cfg);
        }
        if !model.params_finite() {
            return Err(Error::Divergence { epoch });
        }
        train_loss = mse(&model, x, y)?;
        let monitored = match val {
            Some((vx, vy)) => mse(&model, vx, vy)?,
            None => train_loss,
        };
        if !monitored.is_finite() || !train_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        if monitored < best_loss {
            best_loss = monitored;
            best = model.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
        if train_loss < cfg.target_loss {
            break;
        }
    }
    if cfg.max_epochs == 0 {
        best_loss = mse(&model, x, y)?;
        train_loss = best_loss;
    }
    Ok(MlpTraining {
        model: best,
        epochs_run,
        best_epoch,
        best_loss,
        final_train_loss: train_loss,
    })
}
