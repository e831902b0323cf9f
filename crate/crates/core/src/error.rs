//! Coarse classification of every module error, used for process exit codes.

use crate::johansen::JohansenError;
use crate::lag_selection::LagError;
use crate::mission::MissionError;
use crate::numerics::NumericsError;
use crate::panel::PanelError;
use crate::reference_data::ReferenceError;
use crate::report::ReportError;
use crate::spec_search::SpecError;
use crate::synthetic::SyntheticError;
use crate::unit_root::AdfError;
use crate::vecm::VecmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    /// Bad input or configuration.
    Validation,
    /// Singularities, non-convergence, degenerate fits.
    Numerical,
    NoAdmissibleSpecification,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Validation => 2,
            ErrorClass::Numerical => 3,
            ErrorClass::NoAdmissibleSpecification => 4,
        }
    }
}

pub trait Classify {
    fn class(&self) -> ErrorClass;
}

impl Classify for NumericsError {
    fn class(&self) -> ErrorClass {
        match self {
            NumericsError::Shape(_) | NumericsError::NonFinite { .. } | NumericsError::TooLarge(_) => {
                ErrorClass::Validation
            }
            _ => ErrorClass::Numerical,
        }
    }
}

impl Classify for PanelError {
    fn class(&self) -> ErrorClass {
        ErrorClass::Validation
    }
}

impl Classify for AdfError {
    fn class(&self) -> ErrorClass {
        match self {
            AdfError::TooShort { .. } | AdfError::SampleBelowFloor(_) => ErrorClass::Validation,
            AdfError::ConstantSeries | AdfError::ExactFit => ErrorClass::Numerical,
            AdfError::Numerics(e) => e.class(),
        }
    }
}

impl Classify for LagError {
    fn class(&self) -> ErrorClass {
        match self {
            LagError::InsufficientSample { .. } | LagError::ZeroLag => ErrorClass::Validation,
            LagError::AtLag { source, .. } => source.class(),
            LagError::SingularCovariance => ErrorClass::Numerical,
            LagError::Numerics(e) => e.class(),
            LagError::Panel(e) => e.class(),
        }
    }
}

impl Classify for JohansenError {
    fn class(&self) -> ErrorClass {
        match self {
            JohansenError::ZeroLag | JohansenError::InsufficientSample { .. } | JohansenError::UnsupportedDimension(_) => {
                ErrorClass::Validation
            }
            JohansenError::Panel(e) => e.class(),
            _ => ErrorClass::Numerical,
        }
    }
}

impl Classify for VecmError {
    fn class(&self) -> ErrorClass {
        match self {
            VecmError::NonNormalizable(_) => ErrorClass::Numerical,
            VecmError::Johansen(e) => e.class(),
            VecmError::Criteria(e) => e.class(),
            VecmError::Numerics(e) => e.class(),
            VecmError::Panel(e) => e.class(),
            _ => ErrorClass::Validation,
        }
    }
}

impl Classify for SpecError {
    fn class(&self) -> ErrorClass {
        match self {
            SpecError::NoAdmissible { .. } => ErrorClass::NoAdmissibleSpecification,
            _ => ErrorClass::Validation,
        }
    }
}

impl Classify for SyntheticError {
    fn class(&self) -> ErrorClass {
        match self {
            SyntheticError::Numerics(e) => e.class(),
            SyntheticError::Vecm(e) => e.class(),
            SyntheticError::Johansen(e) => e.class(),
            _ => ErrorClass::Validation,
        }
    }
}

impl Classify for MissionError {
    fn class(&self) -> ErrorClass {
        ErrorClass::Validation
    }
}

impl Classify for ReferenceError {
    fn class(&self) -> ErrorClass {
        ErrorClass::Validation
    }
}

impl Classify for ReportError {
    fn class(&self) -> ErrorClass {
        ErrorClass::Validation
    }
}
