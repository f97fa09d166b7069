//! Squeezed-light transmission through extraordinary-optical-transmission
//! arrays: Gaussian two-mode noise models, loss chains, dispersive
//! materials and a 3D FDTD solver for periodic triangular-hole films.

pub mod cli;
pub mod config;
pub mod fdtd;
pub mod io;
pub mod loss_chain;
pub mod materials;
pub mod quantum;
pub mod scenarios;
