pub mod chem;
pub mod num;
pub mod selfies;
pub mod gp;
pub mod vae;
pub mod similarity;
pub mod active;
pub mod data;
pub mod cli;
