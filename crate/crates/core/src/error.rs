//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("pole: division by zero while evaluating `{0}`")]
    Pole(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} is not real (imaginary part {imag:e})")]
    Reality { what: String, imag: f64 },

    #[error("point z = {re} + {im}i lies outside chart `{chart}`")]
    OutsideChart { chart: String, re: f64, im: f64 },

    #[error("curvature mismatch: case requires K = {required}, chart `{chart}` has K = {found}")]
    CurvatureMismatch {
        chart: String,
        required: f64,
        found: f64,
    },

    #[error("positivity violated: {0}")]
    PositivityViolation(String),

    #[error("weight `a` is not holomorphic (|da/dzbar| = {0:e})")]
    NotHolomorphic(f64),

    #[error("map is not an isometry of the base (deviation {0:e})")]
    NotAnIsometry(f64),

    #[error("Delta = fh - |a|^2 = {0:e} is not positive")]
    NonPositiveDelta(f64),

    #[error("parameter gate: {0}")]
    ParameterGate(String),

    #[error("degenerate metric: |det G| = {0:e}")]
    DegenerateMetric(f64),

    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),

    #[error("exponent fit unstable: relative residual {0:.3}")]
    ExponentFitUnstable(f64),

    #[error("commutant dimension changed from {without} to {with} after adding a generator")]
    RankDeficientGenerators { without: usize, with: usize },

    #[error("evaluation failed inside finite-difference stencil: {0}")]
    Stencil(Box<Error>),

    #[error("invalid input: {0}")]
    Invalid(String),
}
