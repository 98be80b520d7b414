pub mod bounds;
pub mod simulate;
pub mod solve;
pub mod sweep;
pub mod verify;
