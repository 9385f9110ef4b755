//! Quantum Monty Hall: a referee for the four-stage game on a qutrit game
//! space, a catalog of quiz-master and player strategies, and a seeded
//! Monte Carlo lab with closed-form oracles.

pub mod engine;
pub mod hilbert;
pub mod lab;
pub mod rng;
pub mod strategies;
pub mod wire;

pub use rng::RandomStream;
