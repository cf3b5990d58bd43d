//! Branch-trunk operator network.
//!
//! The branch MLP maps the gas-phase initial profile sampled at the cell
//! centres to `p` coefficients, the trunk MLP maps a query `(xi*, tau*)` to `p`
//! basis values, and the prediction is
//!
//! ```text
//! y(xi, tau) = sigmoid( sum_k branch_k(ic) * trunk_k(xi, tau) + b0 )
//! ```
//!
//! The trunk is evaluated once per coordinate and shared across a batch of
//! initial conditions, so a batch prediction is one matrix product.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, FieldPredictor, Phase};
use crate::io::{load_array, save_array, ArrayData};
use crate::nn::sigmoid;
use crate::nn::{init_kaiming, init_siren, Activation, DenseLayer, Mlp, MlpCache, MlpGrads, Precision, Real};
use crate::solver::Grid;

/// Query coordinates per trunk sample.
pub const COORD_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeepONetConfig {
    /// Branch input size (number of sensor cells).
    pub sensors: usize,
    /// Hidden layers in each sub-network.
    pub hidden_layers: usize,
    /// Neurons per hidden layer.
    pub width: usize,
    /// Number of basis functions `p`.
    pub latent: usize,
    /// Trunk sine frequency.
    pub omega0: f64,
    /// Trainable scalar added before the sigmoid head.
    pub output_bias: bool,
}

impl Default for DeepONetConfig {
    /// Six hidden layers of 200 neurons, 100 basis functions, `omega0 = 20`.
    fn default() -> Self {
        Self {
            sensors: 100,
            hidden_layers: 6,
            width: 200,
            latent: 100,
            omega0: 20.0,
            output_bias: true,
        }
    }
}

impl DeepONetConfig {
    /// Reduced network for CPU-scale experiments: 3 x 64 hidden, 32 basis functions.
    pub fn desk() -> Self {
        Self {
            hidden_layers: 3,
            width: 64,
            latent: 32,
            ..Self::default()
        }
    }

    fn dims(&self, input: usize) -> Vec<usize> {
        let mut d = vec![input];
        d.extend(std::iter::repeat_n(self.width, self.hidden_layers));
        d.push(self.latent);
        d
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensors == 0 || self.latent == 0 {
            return Err(Error::invalid("model", "sensors and latent must be > 0"));
        }
        if self.hidden_layers > 0 && self.width == 0 {
            return Err(Error::invalid("width", "must be > 0"));
        }
        if !(self.omega0 > 0.0) {
            return Err(Error::invalid("omega0", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepONet<F> {
    pub config: DeepONetConfig,
    pub phase: Phase,
    pub branch: Mlp<F>,
    pub trunk: Mlp<F>,
    pub output_bias: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepONetGrads<F> {
    pub branch: MlpGrads<F>,
    pub trunk: MlpGrads<F>,
    pub output_bias: F,
}

impl<F: Real> DeepONetGrads<F> {
    /// Same order as [`DeepONet::parameters_mut`].
    pub fn slices(&self) -> Vec<&[F]> {
        let mut out = self.branch.slices();
        out.extend(self.trunk.slices());
        out.push(std::slice::from_ref(&self.output_bias));
        out
    }
}

/// Intermediates of a batch forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<F> {
    branch: MlpCache<F>,
    trunk: MlpCache<F>,
    coefficients: Array2<F>,
    basis: Array2<F>,
    output: Array2<F>,
}

fn check_coords<F: Real>(coords: &ArrayView2<F>) -> Result<()> {
    if coords.ncols() != COORD_DIM {
        return Err(Error::Shape(format!("coordinates need {COORD_DIM} columns, got {}", coords.ncols())));
    }
    let (lo, hi) = (F::zero(), F::one());
    if let Some((i, _)) = coords
        .rows()
        .into_iter()
        .enumerate()
        .find(|(_, r)| r.iter().any(|&v| !(v >= lo && v <= hi)))
    {
        return Err(Error::invalid(
            "coords",
            format!("query {i} lies outside the unit square"),
        ));
    }
    Ok(())
}

impl<F: Real> DeepONet<F> {
    /// Kaiming-initialized SiLU branch and SIREN-initialized sine trunk.
    pub fn new<R: Rng>(config: DeepONetConfig, phase: Phase, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let branch = init_kaiming(&config.dims(config.sensors), rng)?;
        let trunk = init_siren(&config.dims(COORD_DIM), config.omega0, rng)?;
        Ok(Self {
            config,
            phase,
            branch,
            trunk,
            output_bias: F::zero(),
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.branch.parameter_count() + self.trunk.parameter_count() + 1
    }

    /// Branch coefficients, `N x p`.
    pub fn coefficients(&self, ics: ArrayView2<F>) -> Result<Array2<F>> {
        self.branch.infer(ics)
    }

    /// Trunk basis values, `P x p`.
    pub fn basis(&self, coords: ArrayView2<F>) -> Result<Array2<F>> {
        check_coords(&coords)?;
        self.trunk.infer(coords)
    }

    fn head(&self, coefficients: &Array2<F>, basis: &Array2<F>) -> Array2<F> {
        let mut z = coefficients.dot(&basis.t());
        let b0 = if self.config.output_bias { self.output_bias } else { F::zero() };
        z.mapv_inplace(|v| sigmoid(v + b0));
        z
    }

    /// Predictions for every (initial condition, coordinate) pair, `N x P`.
    pub fn forward_batch(&self, ics: ArrayView2<F>, coords: ArrayView2<F>) -> Result<Array2<F>> {
        let a = self.coefficients(ics)?;
        let phi = self.basis(coords)?;
        Ok(self.head(&a, &phi))
    }

    /// Predictions for one initial condition at arbitrary points of the unit square.
    pub fn forward(&self, ic: ArrayView1<f64>, coords: &[(f64, f64)]) -> Result<Vec<f64>> {
        let ics = ic.mapv(F::lit).insert_axis(Axis(0));
        let pts = Array2::from_shape_fn((coords.len(), COORD_DIM), |(i, c)| {
            F::lit(if c == 0 { coords[i].0 } else { coords[i].1 })
        });
        let y = self.forward_batch(ics.view(), pts.view())?;
        Ok(y.row(0).iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
    }

    /// Field on the canonical grid; column 0 is `tau* = 0`.
    pub fn predict_field(&self, ic: ArrayView1<f64>, grid: &Grid) -> Result<Field> {
        let values = self.predict(ic, grid)?;
        Ok(Field::new(values, self.phase))
    }

    pub fn forward_train(&self, ics: ArrayView2<F>, coords: ArrayView2<F>) -> Result<(Array2<F>, ForwardCache<F>)> {
        check_coords(&coords)?;
        let (coefficients, branch) = self.branch.forward(ics)?;
        let (basis, trunk) = self.trunk.forward(coords)?;
        let output = self.head(&coefficients, &basis);
        Ok((
            output.clone(),
            ForwardCache {
                branch,
                trunk,
                coefficients,
                basis,
                output,
            },
        ))
    }

    /// Parameter gradients given `d loss / d prediction` (`N x P`).
    pub fn backward(&self, cache: ForwardCache<F>, grad_output: ArrayView2<F>) -> Result<DeepONetGrads<F>> {
        if grad_output.dim() != cache.output.dim() {
            return Err(Error::Shape(format!(
                "output gradient is {:?}, prediction was {:?}",
                grad_output.dim(),
                cache.output.dim()
            )));
        }
        let one = F::one();
        let mut dz = grad_output.to_owned();
        Zip::from(&mut dz)
            .and(&cache.output)
            .for_each(|d, &y| *d *= y * (one - y));
        let output_bias = if self.config.output_bias {
            dz.sum()
        } else {
            F::zero()
        };
        let d_coeff = dz.dot(&cache.basis);
        let d_basis = dz.t().dot(&cache.coefficients);
        let (branch, _) = self.branch.backward(cache.branch, d_coeff)?;
        let (trunk, _) = self.trunk.backward(cache.trunk, d_basis)?;
        Ok(DeepONetGrads {
            branch,
            trunk,
            output_bias,
        })
    }

    /// Branch tensors, trunk tensors, then the output bias.
    pub fn parameters_mut(&mut self) -> Vec<&mut [F]> {
        let mut out = self.branch.parameters_mut();
        out.extend(self.trunk.parameters_mut());
        out.push(std::slice::from_mut(&mut self.output_bias));
        out
    }

    pub fn parameters(&self) -> Vec<&[F]> {
        let mut out = self.branch.parameters();
        out.extend(self.trunk.parameters());
        out.push(std::slice::from_ref(&self.output_bias));
        out
    }

    pub fn all_finite(&self) -> bool {
        self.parameters().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    pub fn cast<G: Real>(&self) -> DeepONet<G> {
        DeepONet {
            config: self.config,
            phase: self.phase,
            branch: self.branch.cast(),
            trunk: self.trunk.cast(),
            output_bias: G::lit(self.output_bias.to_f64().unwrap_or(f64::NAN)),
        }
    }

    /// Writes `model.json` and `weights.bin` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let meta = CheckpointMeta {
            format: CHECKPOINT_FORMAT.into(),
            phase: self.phase,
            precision: F::PRECISION,
            config: self.config,
            omega0: self.config.omega0,
            latent: self.config.latent,
            output_bias: self.config.output_bias,
            branch: layer_meta(&self.branch),
            trunk: layer_meta(&self.trunk),
            parameter_count: self.parameter_count(),
            layer_order: LAYER_ORDER.into(),
        };
        fs::write(dir.join("model.json"), serde_json::to_string_pretty(&meta)?)?;
        let flat: Array1<F> = self.parameters().into_iter().flatten().copied().collect();
        save_array(dir.join("weights.bin"), flat.view())
    }
}

impl<F: Real> FieldPredictor for DeepONet<F> {
    fn phase(&self) -> Phase {
        self.phase
    }

    fn predict(&self, ic: ArrayView1<f64>, grid: &Grid) -> Result<Array2<f64>> {
        if ic.len() != self.config.sensors {
            return Err(Error::Shape(format!(
                "initial condition has {} values, model expects {}",
                ic.len(),
                self.config.sensors
            )));
        }
        let fields = self.predict_batch(ic.insert_axis(Axis(0)), grid)?;
        Ok(fields.index_axis_move(Axis(0), 0))
    }

    fn predict_batch(&self, ics: ArrayView2<f64>, grid: &Grid) -> Result<Array3<f64>> {
        if ics.ncols() != self.config.sensors {
            return Err(Error::Shape(format!(
                "initial conditions have {} values, model expects {}",
                ics.ncols(),
                self.config.sensors
            )));
        }
        let coords = grid.coordinates().mapv(F::lit);
        let y = self.forward_batch(ics.mapv(F::lit).view(), coords.view())?;
        let flat: Vec<f64> = y.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
        Array3::from_shape_vec((ics.nrows(), grid.n_x, grid.n_t), flat).map_err(|e| Error::Shape(e.to_string()))
    }
}

const CHECKPOINT_FORMAT: &str = "adsorb-deeponet/1";
const LAYER_ORDER: &str = "branch layers then trunk layers, each as weight (fan_out x fan_in, row-major) followed by bias; then the scalar output bias";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerMeta {
    pub fan_in: usize,
    pub fan_out: usize,
    pub activation: Activation,
}

fn layer_meta<F: Real>(mlp: &Mlp<F>) -> Vec<LayerMeta> {
    mlp.layers
        .iter()
        .map(|l| LayerMeta {
            fan_in: l.fan_in(),
            fan_out: l.fan_out(),
            activation: l.activation,
        })
        .collect()
}

/// Contents of `model.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format: String,
    pub phase: Phase,
    pub precision: Precision,
    pub config: DeepONetConfig,
    pub omega0: f64,
    pub latent: usize,
    pub output_bias: bool,
    pub branch: Vec<LayerMeta>,
    pub trunk: Vec<LayerMeta>,
    pub parameter_count: usize,
    pub layer_order: String,
}

fn take_mlp<F: Real>(layers: &[LayerMeta], flat: &[F], pos: &mut usize) -> Result<Mlp<F>> {
    let mut out = Vec::with_capacity(layers.len());
    for l in layers {
        let nw = l.fan_in * l.fan_out;
        if *pos + nw + l.fan_out > flat.len() {
            return Err(Error::Format("weights.bin is shorter than model.json describes".into()));
        }
        let w = Array2::from_shape_vec((l.fan_out, l.fan_in), flat[*pos..*pos + nw].to_vec())
            .map_err(|e| Error::Format(e.to_string()))?;
        *pos += nw;
        let b = Array1::from(flat[*pos..*pos + l.fan_out].to_vec());
        *pos += l.fan_out;
        out.push(DenseLayer::new(w, b, l.activation)?);
    }
    Mlp::new(out)
}

fn assemble<F: Real>(meta: &CheckpointMeta, flat: &[F]) -> Result<DeepONet<F>> {
    let mut pos = 0;
    let branch = take_mlp(&meta.branch, flat, &mut pos)?;
    let trunk = take_mlp(&meta.trunk, flat, &mut pos)?;
    if pos + 1 != flat.len() {
        return Err(Error::Format(format!(
            "weights.bin holds {} values, model.json describes {}",
            flat.len(),
            pos + 1
        )));
    }
    Ok(DeepONet {
        config: meta.config,
        phase: meta.phase,
        branch,
        trunk,
        output_bias: flat[pos],
    })
}

/// A checkpoint loaded at its stored precision.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    F64(DeepONet<f64>),
    F32(DeepONet<f32>),
}

impl AnyModel {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        for f in ["model.json", "weights.bin"] {
            if !dir.join(f).is_file() {
                return Err(Error::missing(&dir.join(f)));
            }
        }
        let meta: CheckpointMeta = serde_json::from_str(&fs::read_to_string(dir.join("model.json"))?)?;
        if meta.format != CHECKPOINT_FORMAT {
            return Err(Error::Format(format!("unknown checkpoint format `{}`", meta.format)));
        }
        let weights = load_array(dir.join("weights.bin"))?;
        if weights.shape().len() != 1 {
            return Err(Error::Format("weights.bin must be rank 1".into()));
        }
        match (meta.precision, weights) {
            (Precision::F64, ArrayData::F64(w)) => {
                Ok(AnyModel::F64(assemble(&meta, w.as_slice().expect("contiguous"))?))
            }
            (Precision::F32, ArrayData::F32(w)) => {
                Ok(AnyModel::F32(assemble(&meta, w.as_slice().expect("contiguous"))?))
            }
            _ => Err(Error::Format("weights.bin precision differs from model.json".into())),
        }
    }

    pub fn phase(&self) -> Phase {
        match self {
            AnyModel::F64(m) => m.phase,
            AnyModel::F32(m) => m.phase,
        }
    }

    pub fn to_f64(&self) -> DeepONet<f64> {
        match self {
            AnyModel::F64(m) => m.clone(),
            AnyModel::F32(m) => m.cast(),
        }
    }
}

impl FieldPredictor for AnyModel {
    fn phase(&self) -> Phase {
        AnyModel::phase(self)
    }

    fn predict(&self, ic: ArrayView1<f64>, grid: &Grid) -> Result<Array2<f64>> {
        match self {
            AnyModel::F64(m) => m.predict(ic, grid),
            AnyModel::F32(m) => m.predict(ic, grid),
        }
    }

    fn predict_batch(&self, ics: ArrayView2<f64>, grid: &Grid) -> Result<Array3<f64>> {
        match self {
            AnyModel::F64(m) => m.predict_batch(ics, grid),
            AnyModel::F32(m) => m.predict_batch(ics, grid),
        }
    }
}
