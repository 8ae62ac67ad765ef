//! Pipeline assembly and the stochastic sampling loop.
//!
//! Each sample owns an [`RngStream`] derived from `(master_seed, sample_index)`.
//! Inside a sample the draw order is fixed: the source pick (sample mode only),
//! then for every operation a gate draw followed, when the gate opens, by that
//! operation's parameter draws.

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

use crate::image::Image;
use crate::ops::{apply_op, OpApplication, OpError, OpSpec, ValidationError};
use crate::rng::{derive_sample_rng, RngStream};
use crate::warp::Filter;

/// A source of input images addressed by position.
pub trait ImageSource: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Identifier recorded in traces (usually the path).
    fn source_id(&self, index: usize) -> String;

    /// File stem used to name outputs.
    fn stem(&self, index: usize) -> String;

    /// Class subdirectory mirrored under the output root, if any.
    fn class_dir(&self, index: usize) -> Option<String>;

    fn load(&self, index: usize) -> Result<Image, Box<dyn std::error::Error + Send + Sync>>;
}

/// Destination for generated images. Must accept concurrent writes of distinct names.
pub trait Sink: Sync {
    /// File extension (without dot) used for an image of this format.
    fn extension(&self, img: &Image) -> &'static str;

    fn write(&self, relative_name: &str, img: &Image) -> Result<(), Box<dyn std::error::Error + Send + Sync>>;
}

/// `"<stem>_aug_<index>.<ext>"` with the index zero-padded to at least six digits.
pub fn output_name(stem: &str, sample_index: u64, extension: &str) -> String {
    format!("{stem}_aug_{sample_index:06}.{extension}")
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("operation #{index} failed: {source}")]
    Op {
        index: usize,
        #[source]
        source: OpError,
    },
    #[error("sample {sample}: operation #{index} failed: {source}")]
    SampleOp {
        sample: u64,
        index: usize,
        #[source]
        source: OpError,
    },
    #[error("sample {sample}: cannot load {source_id}: {message}")]
    Load {
        sample: u64,
        source_id: String,
        message: String,
    },
    #[error("sample {sample}: cannot write {name}: {message}")]
    Sink { sample: u64, name: String, message: String },
    #[error("worker pool: {0}")]
    Pool(String),
}

impl PipelineError {
    pub(crate) fn for_sample(self, sample: u64) -> Self {
        match self {
            PipelineError::Op { index, source } => PipelineError::SampleOp { sample, index, source },
            other => other,
        }
    }
}

/// Audit record for one generated image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub sample: u64,
    pub source: String,
    pub ops: Vec<OpApplication>,
    pub output: String,
}

/// Ordered, probability-gated operations plus the master seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    ops: Vec<OpSpec>,
    master_seed: u64,
    filter: Filter,
}

impl Default for Pipeline {
    fn default() -> Self {
        Pipeline::new(0)
    }
}

impl Pipeline {
    pub fn new(master_seed: u64) -> Self {
        Pipeline {
            ops: Vec::new(),
            master_seed,
            filter: Filter::default(),
        }
    }

    pub fn with_filter(mut self, filter: Filter) -> Self {
        self.filter = filter;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    /// Appends a validated operation; earlier operations keep their order.
    pub fn add_operation(&mut self, spec: OpSpec) -> Result<&mut Self, ValidationError> {
        spec.validate()?;
        self.ops.push(spec);
        Ok(self)
    }

    pub fn ops(&self) -> &[OpSpec] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn filter(&self) -> Filter {
        self.filter
    }

    /// Passes one image through every operation in order.
    ///
    /// The gate draw `u` is consumed for every operation; the operation runs when
    /// `u < probability`.
    pub fn run_sample(&self, img: &Image, rng: &mut RngStream) -> Result<(Image, Vec<OpApplication>), PipelineError> {
        let mut current: Option<Image> = None;
        let mut trace = Vec::with_capacity(self.ops.len());
        for (index, spec) in self.ops.iter().enumerate() {
            let u = rng.unit_real();
            if u < spec.probability {
                let input = current.as_ref().unwrap_or(img);
                let (out, app) =
                    apply_op(spec, input, rng, self.filter).map_err(|source| PipelineError::Op { index, source })?;
                current = Some(out);
                trace.push(app);
            } else {
                trace.push(OpApplication::skipped(spec.name()));
            }
        }
        Ok((current.unwrap_or_else(|| img.clone()), trace))
    }

    fn generate_one(
        &self,
        source: &dyn ImageSource,
        sink: &dyn Sink,
        sample: u64,
        pick: Pick,
    ) -> Result<TraceRecord, PipelineError> {
        let mut rng = derive_sample_rng(self.master_seed, sample);
        let index = match pick {
            Pick::Random => rng.int(0, source.len() as i64 - 1).expect("non-empty dataset") as usize,
            Pick::Position => sample as usize,
        };
        let source_id = source.source_id(index);
        let img = source.load(index).map_err(|e| PipelineError::Load {
            sample,
            source_id: source_id.clone(),
            message: e.to_string(),
        })?;
        let (out, ops) = self.run_sample(&img, &mut rng).map_err(|e| e.for_sample(sample))?;
        let file = output_name(&source.stem(index), sample, sink.extension(&out));
        let name = match source.class_dir(index) {
            Some(dir) => format!("{dir}/{file}"),
            None => file,
        };
        sink.write(&name, &out).map_err(|e| PipelineError::Sink {
            sample,
            name: name.clone(),
            message: e.to_string(),
        })?;
        Ok(TraceRecord {
            sample,
            source: source_id,
            ops,
            output: name,
        })
    }

    fn run_indexed(
        &self,
        source: &dyn ImageSource,
        sink: &dyn Sink,
        count: u64,
        pick: Pick,
        jobs: usize,
    ) -> Result<Vec<TraceRecord>, PipelineError> {
        if source.is_empty() {
            return Err(PipelineError::EmptyDataset);
        }
        let results: Vec<Result<TraceRecord, PipelineError>> = if jobs <= 1 {
            (0..count).map(|i| self.generate_one(source, sink, i, pick)).collect()
        } else {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| PipelineError::Pool(e.to_string()))?;
            pool.install(|| {
                (0..count)
                    .into_par_iter()
                    .map(|i| self.generate_one(source, sink, i, pick))
                    .collect()
            })
        };
        // Report the lowest failing index regardless of scheduling.
        results.into_iter().collect()
    }

    /// Generates `count` images, sample `i` drawing its source uniformly (with
    /// replacement) from its own stream. Output is independent of `jobs`.
    pub fn sample(
        &self,
        source: &dyn ImageSource,
        count: u64,
        sink: &dyn Sink,
        jobs: usize,
    ) -> Result<Vec<TraceRecord>, PipelineError> {
        self.run_indexed(source, sink, count, Pick::Random, jobs)
    }

    /// Passes every source image through the pipeline exactly once, in order.
    pub fn process(
        &self,
        source: &dyn ImageSource,
        sink: &dyn Sink,
        jobs: usize,
    ) -> Result<Vec<TraceRecord>, PipelineError> {
        self.run_indexed(source, sink, source.len() as u64, Pick::Position, jobs)
    }
}

#[derive(Debug, Clone, Copy)]
enum Pick {
    Random,
    Position,
}

/// Writes trace records as JSON lines.
pub fn write_trace<W: std::io::Write>(records: &[TraceRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// In-memory sink keyed by output name.
#[derive(Debug, Default)]
pub struct MemorySink {
    images: Mutex<BTreeMap<String, Image>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_images(self) -> BTreeMap<String, Image> {
        self.images.into_inner().unwrap_or_else(|e| e.into_inner())
    }

    pub fn len(&self) -> usize {
        self.images.lock().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Sink for MemorySink {
    fn extension(&self, _img: &Image) -> &'static str {
        "png"
    }

    fn write(&self, relative_name: &str, img: &Image) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
        let mut map = self.images.lock().map_err(|_| "sink poisoned")?;
        if map.insert(relative_name.to_owned(), img.clone()).is_some() {
            return Err(format!("duplicate output {relative_name}").into());
        }
        Ok(())
    }
}

/// Images held in memory, one per entry.
#[derive(Debug, Clone, Default)]
pub struct MemorySource {
    pub entries: Vec<(String, Image)>,
}

impl MemorySource {
    pub fn new(entries: Vec<(String, Image)>) -> Self {
        MemorySource { entries }
    }
}

impl ImageSource for MemorySource {
    fn len(&self) -> usize {
        self.entries.len()
    }

    fn source_id(&self, index: usize) -> String {
        self.entries[index].0.clone()
    }

    fn stem(&self, index: usize) -> String {
        self.entries[index].0.clone()
    }

    fn class_dir(&self, _index: usize) -> Option<String> {
        None
    }

    fn load(&self, index: usize) -> Result<Image, Box<dyn std::error::Error + Send + Sync>> {
        Ok(self.entries[index].1.clone())
    }
}
