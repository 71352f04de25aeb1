pub mod cli;
pub mod config;
pub mod flow;
pub mod identities;
pub mod io;
pub mod monitors;
pub mod profiles;
pub mod sampling;
pub mod shape;
pub mod symfunc;
pub mod translator;
