//! Command-line interface.

pub fn main() {}
