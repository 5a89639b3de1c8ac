pub mod backtest;
pub mod campaign;
pub mod estimate;
pub mod report;
pub mod simulate;
pub mod synth;
pub mod value;
