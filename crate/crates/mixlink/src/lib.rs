//! Mixed polynomials `f(u, ū, v, v̄)`: Newton boundaries, non-degeneracy, braids of face
//! functions and the links of their isolated singularities.

pub mod braids;
pub mod certify;
pub mod config;
pub mod expr;
pub mod gauss;
pub mod linker;
pub mod mixedpoly;
pub mod newton;
pub mod nondegen;
pub mod optimize;
pub mod realizer;
pub mod roots;
pub mod scalar;
pub mod status;
pub mod trig;

pub use braids::{Braid64, BraidWord, GeometricBraid};
pub use config::Config;
pub use expr::{format_poly, parse_poly, ParseError};
pub use gauss::GaussRat;
pub use linker::{link_of_singularity, LinkDescription, SolidTorusLink};
pub use mixedpoly::{ExactPoly, MixedPoly, Monomial, Var};
pub use newton::{newton_polygon, FaceRef, NewtonData, NewtonError, Weight};
pub use nondegen::{analyze, NondegReport, Verdict};
pub use realizer::{build_tower, validate_realization, Level, Tower, TowerSpec};
pub use scalar::{Coeff, Real};
pub use status::Status;
pub use trig::{Chart, LoopPoly, TrigPoly};

pub type Complex64 = num_complex::Complex<f64>;
