//! Deep-hedging benchmark: simulation, analytic and neural hedging
//! strategies under proportional transaction costs, and the experiment
//! harness behind the `hedgebench` command-line tool.

pub mod analytic;
pub mod autodiff;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod policy;
pub mod simulation;

pub use analytic::{
    bs_delta, bs_gamma, bs_price, leland_vol, norm_cdf, norm_pdf, CostModel, MarketParams,
    OptionSpec,
};
pub use engine::{compute_zt, evaluate, HedgeReport, HedgeState, Strategy};
pub use error::{HedgeError, Result};
pub use policy::{train, MlpParams, NnStrategy, TrainConfig};
pub use simulation::{simulate_gbm, PathSet, RngSeed};
