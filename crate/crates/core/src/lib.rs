pub mod crypto;
pub mod dataset;
pub mod lab;
pub mod protocol;
pub mod storage;
pub mod wire;
