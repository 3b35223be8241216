pub mod boson;
pub mod cli;
pub mod exec;
pub mod fock;
pub mod grassmann;
pub mod hirota;
pub mod linalg;
pub mod pdo;
pub mod qpoly;
pub mod rat;
pub mod scalar;
pub mod series;
pub mod wcon;
