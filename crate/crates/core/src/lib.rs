pub mod error;
pub mod exactfield;
pub mod formal;
pub mod hypergeom;
pub mod frobenius;
pub mod rmatrix;
pub mod graphsum;
pub mod modcurves;
pub mod lgmirror;

pub use error::{Error, Result};
pub use exactfield::{CycNum, Cyc, Field, Rational};
pub use formal::{LPoly, LogSeries, QSeries, Var};
pub use hypergeom::Target;

pub type Series = QSeries<CycNum>;
pub type Poly = LPoly<CycNum>;
