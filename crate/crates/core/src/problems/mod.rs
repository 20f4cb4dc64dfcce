pub mod calibrator;
pub mod facility;
pub mod laws;
pub mod simple;
pub mod toy;
