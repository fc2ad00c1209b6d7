pub mod campaign;
pub mod cwe;
pub mod gate;
pub mod inventory;
pub mod oracle;
pub mod pipeline;
pub mod process;
pub mod report;
pub mod synthesis;
pub mod toolchain;
