//! Design and simulation toolkit for photon-pair sources based on
//! spontaneous four-wave mixing (SFWM) in optical fibers.
//!
//! The crate models fiber dispersion (step-index surrogate or tabulated
//! effective indices), solves the SFWM phasematching condition and traces
//! its contours, evaluates joint spectral amplitudes in four regimes,
//! extracts entanglement and heralded-purity metrics, searches the design
//! space for factorable and ultra-broadband sources, and simulates four
//! spectral-characterization methods.
//!
//! All values are immutable after construction and every operation is a
//! pure function, so the API is safe to drive from parallel workers.

pub mod charsim;
pub mod constants;
pub mod design;
pub mod fiber;
pub mod io;
pub mod jsa;
pub mod phasematch;
pub mod quantum;
pub mod special;
pub mod spline;

pub use fiber::{DispersionSample, FiberError, FiberKind, FiberModel, ModeId};
pub use jsa::{JsaError, JsaGrid, PumpSpec, Regime};
pub use phasematch::{
    Branch, GroupDelayTerms, PhasematchContour, PhasematchError, ProcessSpec, TermVariant, Wave,
    WaveAssignment,
};
pub use quantum::{MultiProcessState, NegativityReport, QuantumError, SchmidtReport};
