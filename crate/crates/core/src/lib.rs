pub mod beliefs;
pub mod contract_net;
pub mod harness;
pub mod orgmodel;
pub mod pathfinder;
pub mod world;
