use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable '{0}'")]
    UnknownVariable(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("log of non-positive value {0}")]
    LogNonPositive(f64),
    #[error("sqrt of negative value {0}")]
    SqrtNegative(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("fractional power {exponent} of negative base {base}")]
    FractionalPowerOfNegative { base: f64, exponent: f64 },
    #[error("non-finite result")]
    NonFinite,
    #[error("not differentiable: {0}")]
    NonDifferentiable(&'static str),
}

/// Failure of a pointwise linear solve.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("singular system (smallest singular value {sigma_min:e}, residual {residual:e})")]
    SingularSystem { sigma_min: f64, residual: f64 },
    #[error("ill-conditioned system (condition number {kappa:e})")]
    IllConditioned { kappa: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("evaluation failed at {point:?}: {source}")]
    Evaluation {
        point: Vec<f64>,
        #[source]
        source: DomainError,
    },
    #[error("solve failed at {point:?}: {source}")]
    Solve {
        point: Vec<f64>,
        #[source]
        source: SolveError,
    },
    #[error("degree error: {0}")]
    Degree(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular map (determinant {det:e})")]
    SingularMap { det: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("axiom ({axiom}) violated at {point:?}: {detail}")]
    AxiomViolation {
        axiom: u8,
        point: Vec<f64>,
        detail: String,
    },
    #[error("orientation form vanishes at {point:?}")]
    ZeroVolume { point: Vec<f64> },
    #[error("structure has no quotient (M is not closed)")]
    QuotientMissing,
    #[error("d(lambda) is not symplectic at {point:?} (pfaffian {pfaffian:e})")]
    NotSymplectic { point: Vec<f64>, pfaffian: f64 },
    #[error("matrix is not hyperbolic (trace {trace})")]
    NotHyperbolic { trace: i64 },
    #[error("Newton iteration diverged from seed {seed:?}")]
    NewtonDivergence { seed: Vec<f64> },
    #[error("trajectory blew up at time {time}")]
    BlowUp { time: f64 },
    #[error("step {step} too large (local error estimate {estimate:e})")]
    StepTooLarge { step: f64, estimate: f64 },
    #[error("lambda does not vanish on the cylinder at {point:?} (value {value:e})")]
    ExactnessViolation { point: Vec<f64>, value: f64 },
    #[error("structure relation {relation} fails at {point:?} (residual {residual:e})")]
    RelationViolation {
        relation: String,
        point: Vec<f64>,
        residual: f64,
    },
    #[error("form is not contact at {point:?}")]
    NotContact { point: Vec<f64> },
    #[error("base form is not symplectic at {point:?}")]
    NotSymplecticBase { point: Vec<f64> },
}

impl Error {
    pub(crate) fn eval(point: &[f64], source: DomainError) -> Self {
        Error::Evaluation {
            point: point.to_vec(),
            source,
        }
    }

    pub(crate) fn solve(point: &[f64], source: SolveError) -> Self {
        Error::Solve {
            point: point.to_vec(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
