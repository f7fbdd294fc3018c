pub mod bounds;
pub mod characters;
pub mod constants;
pub mod field;
pub mod harness;
pub mod moments;
pub mod numeric;
pub mod poly;
