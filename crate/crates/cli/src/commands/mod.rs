pub mod analyze;
pub mod sbm;
pub mod sweep;
pub mod train;
