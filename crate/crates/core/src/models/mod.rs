//! Concrete kernel families and their serialisable specification.

mod ar;
mod bkf;
mod finite_memory;
mod link;
mod renewal;

pub use ar::{ar_l2_bounds, ArKernel, ArParams, BetaSeq, PowerTail};
pub use bkf::{BkfKernel, BkfParams, GeometricFamily};
pub use finite_memory::{FiniteMemoryKernel, FiniteMemoryParams};
pub use link::{Link, Psi};
pub use renewal::{RenewalDecay, RenewalKernel, RenewalParams};

use serde::{Deserialize, Serialize};

use crate::kernel::Kernel;
use crate::scalar::Scalar;
use crate::Error;

/// Family tag plus parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ModelSpec<T> {
    Bkf(BkfParams<T>),
    Ar(ArParams<T>),
    /// Logit chain with `β_j = c / j^{1+ε}` normalised to `Σ β_j = beta_sum`.
    Ising {
        epsilon: T,
        beta_sum: T,
        #[serde(default)]
        delta: T,
    },
    Renewal(RenewalParams<T>),
    FiniteMemory(FiniteMemoryParams<T>),
}

impl<T: Scalar> ModelSpec<T> {
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Bkf(_) => "bkf",
            ModelSpec::Ar(_) => "ar",
            ModelSpec::Ising { .. } => "ising",
            ModelSpec::Renewal(_) => "renewal",
            ModelSpec::FiniteMemory(_) => "finite-memory",
        }
    }

    pub fn build(&self) -> Result<Box<dyn Kernel<T>>, Error> {
        Ok(match self {
            ModelSpec::Bkf(p) => Box::new(BkfKernel::new(p.clone())?),
            ModelSpec::Ar(p) => Box::new(ArKernel::new(p.clone())?),
            ModelSpec::Ising { epsilon, beta_sum, delta } => Box::new(ArKernel::new(ArParams::ising(*epsilon, *beta_sum, *delta)?)?),
            ModelSpec::Renewal(p) => Box::new(RenewalKernel::new(p.clone())?),
            ModelSpec::FiniteMemory(p) => Box::new(FiniteMemoryKernel::new(p.clone())?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trips_bit_exactly() {
        let specs: Vec<ModelSpec<f64>> = vec![
            ModelSpec::Ar(ArParams::ising(0.3, 0.9, 0.0).unwrap()),
            ModelSpec::Bkf(BkfParams::geometric(5, 0.5, 4, Psi::Step { epsilon: 0.1 }, Some(0.1)).unwrap()),
            ModelSpec::Ising { epsilon: 0.8, beta_sum: 0.9, delta: 0.1 },
            ModelSpec::Renewal(RenewalParams::power_law(0.5, 0.3, 1.0)),
            ModelSpec::FiniteMemory(FiniteMemoryParams::iid(crate::Alphabet::spin(), vec![0.1, 0.9])),
        ];
        for spec in specs {
            let text = serde_json::to_string(&spec).unwrap();
            let back: ModelSpec<f64> = serde_json::from_str(&text).unwrap();
            assert_eq!(spec, back);
            assert_eq!(serde_json::to_string(&back).unwrap(), text);
            assert!(back.build().is_ok());
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"family":"renewal","q_inf":0.5,"decay":{"kind":"constant"},"typo":1}"#;
        assert!(serde_json::from_str::<ModelSpec<f64>>(text).is_err());
        let ok = r#"{"family":"renewal","q_inf":0.5,"decay":{"kind":"power-law","a":0.3,"p":1.0}}"#;
        let spec: ModelSpec<f64> = serde_json::from_str(ok).unwrap();
        assert_eq!(spec.build().unwrap().alphabet().len(), 2);
    }
}
