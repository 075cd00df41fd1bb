//! Verification scenarios, Knapp-type examples and reporting for the Grushin
//! spectral machinery.

pub mod duality;
pub mod knapp;
pub mod scaling;
pub mod report;
pub mod scenarios;
