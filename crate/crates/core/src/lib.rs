//! Expected value of sample information when uptake of the preferred
//! treatment is imperfect.
//!
//! A decision model maps uncertain parameters to net benefit per
//! treatment. A proposed study informs a subset of the parameters. After
//! the study, market shares follow how convincing the evidence is, so the
//! value of the study is the share-weighted posterior net benefit minus
//! the share-weighted value of today's decision.
//!
//! Two estimators are provided:
//!
//! * [`nmc`]: nested Monte Carlo, simulating many datasets and sampling
//!   each posterior;
//! * [`mm`]: moment matching, which needs posterior samples for only a
//!   handful of datasets and extends across sample sizes.
//!
//! Both feed the same assembly in [`implementation`], so with a step
//! market-share function they reduce exactly to the standard value of
//! sample information.
//!
//! ```
//! use voi::prelude::*;
//!
//! let model = DecisionModel::case_study();
//! let psa = sample_prior(&PriorSpec::case_study(), &model, 2_000, 7).unwrap();
//! let shares = CurrentShares::all_on(0, 2);
//! let c = current_decision_value(&psa, &shares).unwrap();
//! assert!((c - 2_159_300.0).abs() < 5_000.0);
//! ```

pub mod config;
pub mod error;
pub mod implementation;
pub mod mm;
pub mod nmc;
pub mod psa;
pub mod rng;
pub mod run;
pub mod stats;
pub mod studies;

pub use error::{Result, VoiError};

/// The types and functions most programs need.
pub mod prelude {
    pub use crate::config::{parse_config, MethodChoice, RunConfig};
    pub use crate::error::{Result, VoiError};
    pub use crate::implementation::{
        assemble_evsi, assemble_evsi_im, current_decision_value, market_share, CurrentShares, MarketShareFunction,
        ShareRule,
    };
    pub use crate::mm::{mm_evsi_im, mm_evsi_im_by_n, MmSettings};
    pub use crate::nmc::{nmc_evsi, nmc_evsi_im, nmc_summaries, EvsiEstimate, Method};
    pub use crate::psa::{
        evpi, expected_nb, prob_cost_effective, sample_prior, DecisionModel, FixedParams, Parameter, ParameterDraw,
        PriorSpec, PsaSample,
    };
    pub use crate::studies::{StudyDesign, StudyKind};
}
