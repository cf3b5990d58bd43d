//! Dense networks with a closed-form backward pass, initializers and Adam.

mod adam;
mod init;
mod layer;

pub use adam::{AdamConfig, AdamState};
pub use init::{init_kaiming, init_siren};
pub use layer::{Activation, DenseLayer, LayerGrad, Mlp, MlpCache, MlpGrads};
pub(crate) use layer::sigmoid;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

/// Floating-point element type of network parameters.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + crate::io::Element
    + 'static
{
    const PRECISION: Precision;

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("representable constant")
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::F64;
}

impl Real for f32 {
    const PRECISION: Precision = Precision::F32;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}
