//! The DOML subset: parsing, emission and input archives.

mod archive;
mod emit;
mod error;
mod lexer;
mod model;
mod parser;

pub use archive::read_input_archive;
pub use emit::{
    concretize, emit_concretization, emit_document, emit_solutions, format_objective_value,
    minimal_decimals, render_concrete, render_infrastructure, render_optimization,
    render_solution, sanitize_identifier, Concretization, EmitOptions, DEFAULT_COST_UNIT,
    DEFAULT_IMAGE,
};
pub use error::{ArchiveError, DomlError, EmitError};
pub use model::*;
pub use parser::{parse_document, parse_optimization_layer};
