pub mod cgen;
pub mod corpus;
pub mod driver;
pub mod front;
pub mod lang;
pub mod hm;
pub mod interp;
pub mod logic;
pub mod measure;
pub mod solver;
