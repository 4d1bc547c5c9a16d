//! Normalized maximum likelihood codelengths, descriptive dimension, MDL model
//! selection and MDL change detection over finite alphabets.
//!
//! All codelengths are in nats.
//!
//! ```
//! use nml_ddim::family::SufficientStat;
//! use nml_ddim::learning::{mdl_learn, ModelFamily};
//! use nml_ddim::nml::Method;
//!
//! let family: ModelFamily = "fixed:0.5,0.5;bernoulli".parse()?;
//! let stat = SufficientStat::from_counts(vec![2, 18]);
//! let picked = mdl_learn(&family, &stat, Method::Exact)?;
//! assert_eq!(picked.selected().model, "bernoulli");
//! # Ok::<(), nml_ddim::Error>(())
//! ```

pub mod change;
pub mod ddim;
pub mod divergence;
pub mod error;
pub mod family;
pub mod learning;
pub mod nml;
pub mod numeric;
pub mod sim;

pub use change::{
    dms_segment, mdl_change_statistic, single_change_statistic, ChangeTestResult, Decision,
    ModelSequence, PiecewiseSource, SegmentConstraints, Segmentation,
};
pub use ddim::{DdimEstimate, DdimMethod};
pub use divergence::DistributionHandle;
pub use error::{Error, Result};
pub use family::{ModelClass, Sequence, SufficientStat};
pub use learning::{mdl_learn, ModelFamily};
pub use nml::{CodelengthReport, Method, NmlDistribution};
