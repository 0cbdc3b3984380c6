//! Finite A∞ categories over ℤ, ℚ or GF(2), with checkers for the
//! associativity, functor, pre-natural transformation and homotopy
//! identities, and constructors for compositions.

mod checks;
mod cohomology;
pub mod generate;
mod instance;
mod prenat;
mod terms;

pub use checks::{
    check_ainfty, check_curvature_floer, check_functor, compose_functors, identity_functor, CheckReport, Functor, Residual,
    SignConvention,
};
pub use cohomology::{cohomology_functor, CohomologyFunctor, HomCohomology};
pub use instance::{
    add_scaled, apply, basis_vector, parse_ops, Basis, BasisJson, Chain, Coef, CoefJson, Fixture, FunctorJson, HomJson, Instance,
    InstanceJson, OpJson, PreNatJson, Ring, Table, TermJson, Vector,
};
pub use prenat::{compose_homotopies, is_homotopy, mu1_prenat, mu2_prenat, PreNat};
pub use terms::{term_facet_correspondence, Identity, Op, TermArg, TermFacetReport, TermShape};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AinftyError {
    #[error("unknown basis element {0}")]
    UnknownBasis(String),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("inputs {0:?} are not composable")]
    NotComposable(Vec<String>),
    #[error("{what} on {inputs:?} has output {output} between the wrong objects")]
    Endpoints { what: String, inputs: Vec<String>, output: String },
    #[error("{what} on {inputs:?} has output {output} of the wrong degree")]
    Degree { what: String, inputs: Vec<String>, output: String },
    #[error("coefficient {0} is not in the coefficient ring")]
    Coefficient(String),
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error("functor-level operations need flat instances; {0} is curved")]
    Curved(String),
    #[error("object maps differ: {0}")]
    ObjectMap(String),
    #[error("a homotopy has shifted degree -1, got {0}")]
    HomotopyDegree(i64),
    #[error("cohomology needs field coefficients")]
    NotField,
    #[error("arity {needed} exceeds the table bound {bound}")]
    Arity { needed: usize, bound: usize },
    #[error("{0}")]
    Io(String),
}
