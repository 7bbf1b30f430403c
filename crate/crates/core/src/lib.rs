//! Grid-based adversarial clustering with defensive walls, plus the
//! defender/adversary game used to choose the wall level.
//!
//! [`adclust`] runs the whole clustering pipeline on a [`Dataset`] with a few
//! labeled points. [`game`] solves the wall-level game by grid search.
//! Everything that loops over points or grid cells accepts an [`Execution`]
//! and produces the same bits whichever one is used.

pub mod adclust;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod game;
pub mod gaussian;
pub mod grid;
pub mod kernel;
pub mod merge;
pub mod rng;
pub mod synthetic;
pub mod walls;

pub use adclust::{adclust, adclust_with, AdclustParams, ClusterComposition, ClusteringResult, Region};
pub use dataset::{Dataset, Label};
pub use error::{Error, Result, Stage};
pub use exec::Execution;
pub use walls::{Wall, WallKind};
