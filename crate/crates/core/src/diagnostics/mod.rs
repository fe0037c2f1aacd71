//! Monte Carlo estimators for the uniqueness and mixing criteria.

pub mod correlation;
pub mod stats;
pub mod tv;
pub mod weak_l2;

pub use correlation::{correlation_curve, CorrelationConfig, CorrelationCurve};
pub use stats::Quantiles;
pub use tv::{beta_mixing_curve, tv_decay_curve, BetaMixingConfig, BetaMixingCurve, DecayFit, TvDecayConfig, TvDecayCurve};
pub use weak_l2::{p_weak_l2_curve, weak_l2_curve, GrowthVerdict, PWeakL2Config, PWeakL2Report, WeakL2Config, WeakL2Curve};
