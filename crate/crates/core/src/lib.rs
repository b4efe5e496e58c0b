//! Exact N=1 super topological recursion on local super spectral curves.
//!
//! Two independent solvers produce the coefficient tensors F_{g,n|2m}: the
//! residue recursion (`tr`) and the super Airy structure constraints (`airy`).
//! `svir` verifies the underlying operator algebra and `zoo` builds the
//! standard example curves.

pub mod error;
pub mod scalar;
pub mod series;

pub use error::{Error, Result};
pub use scalar::{Rat, Scalar, SymbolDef, SymbolRing};
pub use series::{BiForm, BiKind, BiSeries, DiagMode, FormalSeries, EXACT};
pub mod airy;
pub mod curve;
pub mod store;
pub mod svir;
pub mod tr;
pub mod zoo;

pub use curve::{build_bases, fit_parameters, pairing_b, pairing_f, projections_hold, CurveBases, CurveData, RawForms};
pub use store::{CorrKey, CorrTensor, Type};
pub use airy::{run_airy, run_airy_with, run_bosonic, AiryEngine, AiryOptions};
pub use tr::{run_tr, run_tr_with, Route, TrEngine, TrOptions};
pub use zoo::{random_curve, zoo_build, zoo_curve, zoo_validate, ZooReport, ZooSpec, ZOO_NAMES};
