pub mod costmodel;
pub mod dataio;
pub mod error;
pub mod itemsets;
pub mod protocols;
pub mod simnet;

pub use error::{Error, Result};

/// Exact rational scalar for cost evaluation.
pub type Rational = num_rational::Ratio<i64>;
pub type LogP = costmodel::LogPParams<f64>;
pub type ExactLogP = costmodel::LogPParams<Rational>;
pub type FactorReportF64 = costmodel::FactorReport<f64>;
pub type ExactFactorReport = costmodel::FactorReport<Rational>;
pub type CostBreakdownF64 = costmodel::CostBreakdown<f64>;
