//! Procedurally generated two-player strategy games: building, measuring, solving and playing them.

pub mod axes;
pub mod builder;
pub mod engine;
pub mod policy;
pub mod seeding;
pub mod selection;
pub mod solver;
pub mod textio;
pub mod tournament;
