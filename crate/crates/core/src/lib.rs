//! Stochastic, pipeline-based image augmentation.
//!
//! A [`Pipeline`] is an ordered list of probability-gated operations. Passing an
//! image through it draws, per operation, whether the operation fires and, if
//! so, its parameters. Every sample draws from its own stream derived from the
//! master seed and the sample index, so results are reproducible and do not
//! depend on how many worker threads produced them.

// `!(x >= lo)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dataio;
pub mod geometry;
pub mod image;
pub mod ops;
pub mod pipeline;
pub mod rng;
pub mod warp;

pub use crate::config::{canonical_config, parse_config, parse_config_document, ConfigError};
pub use crate::dataio::{load_image, save_image, scan_dataset, DatasetIndex, DirSink, OutputFormat};
pub use crate::geometry::{CropRect, Homography, Point, Quad};
pub use crate::image::{clamp_round, Image, PixelFormat};
pub use crate::ops::{apply_op, OpApplication, OpKind, OpSpec};
pub use crate::pipeline::{ImageSource, Pipeline, PipelineError, Sink, TraceRecord};
pub use crate::rng::{derive_sample_rng, RngStream};
pub use crate::warp::{DisplacementGrid, Filter};
