pub mod bernoulli;
pub mod functional;
pub mod kinetic;
pub mod relax;
pub mod suite;
pub mod trajectory;
pub mod typicality;
