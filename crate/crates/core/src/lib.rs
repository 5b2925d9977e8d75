//! Latent-force reconstruction for lightly damped oscillators.
//!
//! The unknown force driving a single-degree-of-freedom oscillator is given a
//! squared-exponential Gaussian-process prior. Because the equation of motion
//! is linear, displacement, velocity and acceleration share that prior through
//! derivatives of the kernel, so noisy response records can be conditioned on
//! jointly and the force recovered with calibrated uncertainty.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*64` aliases at
//! the crate root are the double-precision instantiations the CLI uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gp;
pub mod kernels;
pub mod linalg;
pub mod metrics;
pub mod optim;
pub mod oscillator;
pub mod scalar;
pub mod series;
pub mod wind;

pub use error::{Error, Result};
pub use gp::{
    assemble_covariance, log_marginal_likelihood, lml_and_gradient, lml_gradient, optimize_hyperparams,
    predict_force, predict_force_marginal, training_lml, Hyperparams, Observation, OptimizerConfig,
    PosteriorCov, PosteriorForce, RestartOutcome, TrainedModel, TrainingSet,
};
pub use kernels::{cross_kernel, se_kernel, se_kernel_mixed_deriv, Channel, KernelParams, OscillatorParams};
pub use linalg::{Cholesky, Matrix};
pub use metrics::{
    analytic_signal, compare_signals, welch_psd, CompareOptions, MetricReport, PsdEstimate,
};
pub use optim::{minimize_bfgs, BfgsOptions, BfgsResult};
pub use oscillator::{
    add_noise_snr, add_noise_std, modal_decompose, modal_superpose, newmark_response, subsample_training,
    Dof, MassConvention, ModalModel, Mode, ModeSpec, Newmark, Response, SnrUnit,
};
pub use scalar::Real;
pub use series::TimeSeries;
pub use wind::{
    buffeting_loads, buffeting_modal_forces, coherence, synthesize_turbulence, von_karman_psd, AeroSection,
    Component, TurbulenceField, WindConfig,
};

pub type TimeSeriesF64 = TimeSeries<f64>;
pub type TimeSeriesF32 = TimeSeries<f32>;
pub type MatrixF64 = Matrix<f64>;
pub type KernelParamsF64 = KernelParams<f64>;
pub type OscillatorParamsF64 = OscillatorParams<f64>;
pub type HyperparamsF64 = Hyperparams<f64>;
pub type HyperparamsF32 = Hyperparams<f32>;
pub type TrainingSetF64 = TrainingSet<f64>;
pub type TrainedModelF64 = TrainedModel<f64>;
pub type PosteriorForceF64 = PosteriorForce<f64>;
pub type PosteriorForceF32 = PosteriorForce<f32>;
pub type ResponseF64 = Response<f64>;
pub type ModalModelF64 = ModalModel<f64>;
pub type WindConfigF64 = WindConfig<f64>;
pub type TurbulenceFieldF64 = TurbulenceField<f64>;
pub type AeroSectionF64 = AeroSection<f64>;
pub type MetricReportF64 = MetricReport<f64>;
pub type PsdEstimateF64 = PsdEstimate<f64>;
