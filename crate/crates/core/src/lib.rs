//! Multi-objective optimization of Infrastructure-as-Code deployment
//! configurations.
//!
//! A DOML document declares objectives and non-functional requirements; the
//! [`catalogue`] supplies purchasable elements; [`problem`] turns both into a
//! combinatorial search space that [`moea`] explores with NSGA-II or NSGA-III.
//! [`orchestrator::optimize`] runs the whole pipeline and writes ranked
//! solutions plus a concrete infrastructure layer back into the document.

pub mod catalogue;
pub mod doml;
pub mod moea;
pub mod problem;
pub mod oracle;
pub mod orchestrator;
pub mod cli;
