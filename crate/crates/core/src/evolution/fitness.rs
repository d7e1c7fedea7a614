use crate::math;
use crate::stack::TrialRecord;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitnessError {
    #[error("no measurement bins after the settle window")]
    EmptyWindow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitnessVariant {
    /// Gaussian around a phy-layer rate target `t` (B/s) with width `sigma`.
    RateTarget { target: f64, sigma: f64 },
    ConstancyDelay { w_var: f64, w_delay: f64, d_ref: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessSpec {
    pub variant: FitnessVariant,
    /// Exponent on the delivery ratio.
    pub w_delivery: f64,
    /// Exponent on normalized efficiency.
    pub w_efficiency: f64,
    /// Efficiency that normalizes to 1.
    pub efficiency_reference: f64,
}

impl FitnessSpec {
    /// `sigma = 0.05·target`, unit weights, reference efficiency of a
    /// 1000 B payload under 38 B of headers.
    pub fn rate_target(target: f64) -> Self {
        FitnessSpec {
            variant: FitnessVariant::RateTarget { target, sigma: 0.05 * target },
            w_delivery: 1.0,
            w_efficiency: 1.0,
            efficiency_reference: 1000.0 / 1038.0,
        }
    }

    pub fn constancy_delay(w_var: f64, w_delay: f64, d_ref: f64) -> Self {
        FitnessSpec {
            variant: FitnessVariant::ConstancyDelay { w_var, w_delay, d_ref },
            ..Self::rate_target(1.0)
        }
    }
}

pub fn fitness(record: &TrialRecord, spec: &FitnessSpec) -> Result<f64, FitnessError> {
    match spec.variant {
        FitnessVariant::RateTarget { .. } => fitness_rate_target(record, spec),
        FitnessVariant::ConstancyDelay { .. } => fitness_constancy_delay(record, spec),
    }
}

/// `exp(−(r̄ − t)²/(2σ²)) · delivery^w2 · (efficiency/reference)^w3`.
pub fn fitness_rate_target(record: &TrialRecord, spec: &FitnessSpec) -> Result<f64, FitnessError> {
    let FitnessVariant::RateTarget { target, sigma } = spec.variant else {
        return fitness_constancy_delay(record, spec);
    };
    let r = record.mean_phy_rate().ok_or(FitnessError::EmptyWindow)?;
    let gauss = math::exp(-(r - target) * (r - target) / (2.0 * sigma * sigma));
    let delivery = math::pow(record.delivery_ratio(), spec.w_delivery);
    let eff = (record.efficiency() / spec.efficiency_reference).min(1.0);
    let eff = math::pow(eff, spec.w_efficiency);
    Ok((gauss * delivery * eff).clamp(0.0, 1.0))
}

/// `exp(−w_var·CoV) · exp(−w_delay·delay/d_ref)` over the post-settle phy
/// series.
pub fn fitness_constancy_delay(record: &TrialRecord, spec: &FitnessSpec) -> Result<f64, FitnessError> {
    let FitnessVariant::ConstancyDelay { w_var, w_delay, d_ref } = spec.variant else {
        return fitness_rate_target(record, spec);
    };
    let series = record.measured_phy();
    if series.is_empty() {
        return Err(FitnessError::EmptyWindow);
    }
    if record.sent == 0 {
        return Ok(0.0);
    }
    let cov = math::coefficient_of_variation(series).unwrap_or(f64::INFINITY);
    let f = math::exp(-w_var * cov) * math::exp(-w_delay * record.mean_delay / d_ref);
    Ok(if f.is_finite() { f.clamp(0.0, 1.0) } else { 0.0 })
}
