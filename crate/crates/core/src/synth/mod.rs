//! Synthetic multiview benchmarks and the correlation / outlier metrics used to score solves.

mod generate;
mod metrics;

pub use generate::{
    block_energy_ratio, gen_shared_factor, gen_with_outliers, shared_factor_parts, sparse_product,
    IndexSets, SharedFactorParts, SynthSpec, DENSITY_TOLERANCE, ENERGY_BAND,
};
pub use metrics::{
    correlation_from_products, metric1, metric2, time_to_fraction, total_correlation,
};
