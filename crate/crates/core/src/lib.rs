//! Quotient W-types at desk scale.

pub mod algebra;
pub mod encodings;
pub mod engine;
pub mod equations;
pub mod initiality;
pub mod schema;
pub mod terms;
