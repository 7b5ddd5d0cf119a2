//! Sweeps that try to beat the compound binomial and compound Poisson
//! entropies, the small-rate counterexample where that succeeds, and a
//! log-concavity scan over compound Poisson families.
//!
//! Every sweep is deterministic for a fixed seed: random points are drawn
//! up front on one thread, evaluation is parallel, and rows keep input order.

mod chi;
mod scan;
mod sweep;

pub use chi::{chi_counterexample, ChiRecord, CHI_BOUNDS_BITS, CHI_LAMBDA, CHI_PARAMS};
pub use scan::{
    conjecture_scan, geometric_exact_to, LambdaGrid, QFamily, RatioRow, ScanConfig, ScanMember,
    ScanReport, ScanWitness,
};
pub use sweep::{
    verify_binomial_maxent, verify_poisson_maxent, BinomialSweep, Conditions, PoissonFamily,
    PoissonSweep, SweepPoint, SweepReport, Verdict, BASE_MARGIN,
};
