//! Ride-pool assignment: road network, CTSP routing oracles, epoch-wise
//! assignment algorithms and a multi-epoch fleet simulator.

pub mod analysis;
pub mod assign;
pub mod cli;
pub mod config;
pub mod ctsp;
pub mod demand;
pub mod epoch;
pub mod io;
pub mod model;
pub mod network;
pub mod optim;
pub mod rebalance;
pub mod sim;
pub mod toy;
