pub mod hurst;
pub mod invstat;
pub mod market_data;
pub mod numerics;
pub mod obrelax;
pub mod selftest;
pub mod synth;
