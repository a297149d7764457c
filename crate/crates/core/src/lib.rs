//! Ternary message passing (TMP) decoding of LDPC codes and the tools to
//! design for it: exact density evolution, stability, weight spectra,
//! protograph optimization, quasi-cyclic lifting and Monte Carlo simulation.

pub mod channel;
pub mod construction;
pub mod de;
pub mod decoders;
pub mod ensemble;
pub mod error;
pub mod graph;
pub mod optimizer;
pub mod schedule;
pub mod sim;
pub mod spectrum;
pub mod symbol;

pub use channel::ChannelParams;
pub use construction::{girth_report, peg_lift, random_lift, CirculantLift, GirthReport, TieBreak};
pub use de::{optimize_quantizer, threshold_search, DeConfig, DeReport, Ensemble, ThresholdConfig};
pub use decoders::{bmp_decode, bp_decode, tmp_decode, DecodeResult, DecoderConfig};
pub use ensemble::{BaseMatrix, DegreeDistribution, Rational};
pub use error::{Error, Result};
pub use graph::{Edge, TannerGraph};
pub use optimizer::{evolve, select_best, Candidate, SearchConfig, Target};
pub use schedule::WeightSchedule;
pub use sim::{run_point, run_sweep, DecoderKind, ScheduleMode, SimConfig, SimRecord};
pub use spectrum::{growth_rate, spectral_shape, typical_min_distance, SpectralShape};
pub use symbol::TernarySymbol;
