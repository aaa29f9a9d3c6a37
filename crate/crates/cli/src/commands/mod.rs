pub mod ablate;
pub mod bench;
pub mod inspect;
pub mod train;
pub mod verify;
