//! Population models of cellulose-degrading microorganisms: the
//! chain-structured system, its aggregated reductions, quasi-steady birth
//! rates and the continuous-trait functional.

pub mod birth;
pub mod cli;
pub mod continuous;
pub mod integrator;
pub mod model;
pub mod ns;
pub mod reduced;
