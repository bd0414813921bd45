//! Experience retrieval for kinodynamic sampling-based motion planning.
//!
//! Past plans are augmented into clusters of environments where each plan
//! stays valid, a convolutional encoder is trained with a triplet loss so that
//! each cluster collapses around a centroid, and new problems are answered by
//! looking up the nearest centroids. Retrieved plans are either returned
//! directly after a collision check (closed-box) or used to bias the sampling
//! of the underlying planner (open-box).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod envgen;
pub mod exec;
pub mod geom;
pub mod hallucinate;
pub mod harness;
pub mod memory;
pub mod planners;
pub mod robot;
pub mod seed;
