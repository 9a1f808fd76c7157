pub mod error;
pub mod params;
pub mod rk;
pub mod radial;
pub mod picard;
pub mod flow;
pub mod asymptotics;
pub mod cli;
