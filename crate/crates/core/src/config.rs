//! Declarative pipeline configuration (versioned JSON).
//!
//! ```json
//! {
//!   "version": 1,
//!   "seed": 42,
//!   "operations": [
//!     {"op": "elastic", "probability": 1, "grid_width": 4, "grid_height": 4, "magnitude": 5},
//!     {"op": "rotate", "probability": 0.5, "max_left_rotation": 10, "max_right_rotation": 10}
//!   ]
//! }
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Axis;
use crate::ops::{
    AxisChoice, CardinalChoice, FlipAxis, FlipChoice, OpKind, OpSpec, QuarterTurn, SkewChoice, SkewKind,
    ValidationError,
};
use crate::pipeline::Pipeline;
use crate::warp::Filter;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported config version {0} (expected {CONFIG_VERSION})")]
    Version(u32),
    #[error("operation #{index} ({}): field \"{}\": {}", source.op, source.field, source.message)]
    Invalid {
        index: usize,
        #[source]
        source: ValidationError,
    },
}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        use serde_json::error::Category;
        let (line, column) = (e.line(), e.column());
        // serde_json appends " at line L column C"; keep only the message.
        let message = e.to_string();
        let message = message
            .rsplit_once(" at line ")
            .map_or(message.as_str(), |(m, _)| m)
            .to_owned();
        match e.classify() {
            Category::Data => ConfigError::Schema { line, column, message },
            _ => ConfigError::Syntax { line, column, message },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
enum FilterName {
    Nearest,
    #[default]
    Bilinear,
    Bicubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum CardinalName {
    #[serde(rename = "90")]
    R90,
    #[serde(rename = "180")]
    R180,
    #[serde(rename = "270")]
    R270,
    #[serde(rename = "random")]
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FlipName {
    Horizontal,
    Vertical,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
enum AxisName {
    X,
    Y,
    #[default]
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
enum SkewName {
    Forward,
    Backward,
    Left,
    Right,
    #[default]
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
enum OpDescriptor {
    Rotate {
        probability: f64,
        max_left_rotation: f64,
        max_right_rotation: f64,
    },
    RotateCardinal {
        probability: f64,
        which: CardinalName,
    },
    Flip {
        probability: f64,
        axis: FlipName,
    },
    Shear {
        probability: f64,
        max_angle: f64,
        #[serde(default)]
        axis: AxisName,
    },
    Skew {
        probability: f64,
        severity: f64,
        #[serde(default)]
        kind: SkewName,
    },
    Elastic {
        probability: f64,
        grid_width: u32,
        grid_height: u32,
        magnitude: u32,
    },
    Zoom {
        probability: f64,
        min_factor: f64,
        max_factor: f64,
    },
    CropRandom {
        probability: f64,
        area_fraction: f64,
        #[serde(default)]
        resize_back: bool,
    },
    CropCentre {
        probability: f64,
        width: u32,
        height: u32,
    },
    Resize {
        probability: f64,
        width: u32,
        height: u32,
    },
    Scale {
        probability: f64,
        factor: f64,
    },
    Greyscale {
        probability: f64,
    },
    Invert {
        probability: f64,
    },
    Equalize {
        probability: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default)]
    filter: FilterName,
    operations: Vec<OpDescriptor>,
}

impl From<OpDescriptor> for OpSpec {
    fn from(d: OpDescriptor) -> Self {
        use OpDescriptor as D;
        match d {
            D::Rotate {
                probability,
                max_left_rotation,
                max_right_rotation,
            } => OpSpec::new(
                probability,
                OpKind::Rotate {
                    max_left: max_left_rotation,
                    max_right: max_right_rotation,
                },
            ),
            D::RotateCardinal { probability, which } => OpSpec::new(
                probability,
                OpKind::RotateCardinal {
                    which: match which {
                        CardinalName::R90 => CardinalChoice::Fixed(QuarterTurn::R90),
                        CardinalName::R180 => CardinalChoice::Fixed(QuarterTurn::R180),
                        CardinalName::R270 => CardinalChoice::Fixed(QuarterTurn::R270),
                        CardinalName::Random => CardinalChoice::Random,
                    },
                },
            ),
            D::Flip { probability, axis } => OpSpec::new(
                probability,
                OpKind::Flip {
                    axis: match axis {
                        FlipName::Horizontal => FlipChoice::Fixed(FlipAxis::Horizontal),
                        FlipName::Vertical => FlipChoice::Fixed(FlipAxis::Vertical),
                        FlipName::Random => FlipChoice::Random,
                    },
                },
            ),
            D::Shear {
                probability,
                max_angle,
                axis,
            } => OpSpec::new(
                probability,
                OpKind::Shear {
                    max_angle,
                    axis: match axis {
                        AxisName::X => AxisChoice::Fixed(Axis::X),
                        AxisName::Y => AxisChoice::Fixed(Axis::Y),
                        AxisName::Random => AxisChoice::Random,
                    },
                },
            ),
            D::Skew {
                probability,
                severity,
                kind,
            } => OpSpec::new(
                probability,
                OpKind::Skew {
                    severity,
                    kind: match kind {
                        SkewName::Forward => SkewChoice::Fixed(SkewKind::Forward),
                        SkewName::Backward => SkewChoice::Fixed(SkewKind::Backward),
                        SkewName::Left => SkewChoice::Fixed(SkewKind::Left),
                        SkewName::Right => SkewChoice::Fixed(SkewKind::Right),
                        SkewName::Random => SkewChoice::Random,
                    },
                },
            ),
            D::Elastic {
                probability,
                grid_width,
                grid_height,
                magnitude,
            } => OpSpec::new(
                probability,
                OpKind::Elastic {
                    grid_width,
                    grid_height,
                    magnitude,
                },
            ),
            D::Zoom {
                probability,
                min_factor,
                max_factor,
            } => OpSpec::new(probability, OpKind::Zoom { min_factor, max_factor }),
            D::CropRandom {
                probability,
                area_fraction,
                resize_back,
            } => OpSpec::new(
                probability,
                OpKind::CropRandom {
                    area_fraction,
                    resize_back,
                },
            ),
            D::CropCentre {
                probability,
                width,
                height,
            } => OpSpec::new(probability, OpKind::CropCentre { width, height }),
            D::Resize {
                probability,
                width,
                height,
            } => OpSpec::new(probability, OpKind::Resize { width, height }),
            D::Scale { probability, factor } => OpSpec::new(probability, OpKind::Scale { factor }),
            D::Greyscale { probability } => OpSpec::new(probability, OpKind::Greyscale),
            D::Invert { probability } => OpSpec::new(probability, OpKind::Invert),
            D::Equalize { probability } => OpSpec::new(probability, OpKind::Equalize),
        }
    }
}

impl From<&OpSpec> for OpDescriptor {
    fn from(s: &OpSpec) -> Self {
        use OpDescriptor as D;
        let probability = s.probability;
        match s.kind {
            OpKind::Rotate { max_left, max_right } => D::Rotate {
                probability,
                max_left_rotation: max_left,
                max_right_rotation: max_right,
            },
            OpKind::RotateCardinal { which } => D::RotateCardinal {
                probability,
                which: match which {
                    CardinalChoice::Fixed(QuarterTurn::R90) => CardinalName::R90,
                    CardinalChoice::Fixed(QuarterTurn::R180) => CardinalName::R180,
                    CardinalChoice::Fixed(QuarterTurn::R270) => CardinalName::R270,
                    CardinalChoice::Random => CardinalName::Random,
                },
            },
            OpKind::Flip { axis } => D::Flip {
                probability,
                axis: match axis {
                    FlipChoice::Fixed(FlipAxis::Horizontal) => FlipName::Horizontal,
                    FlipChoice::Fixed(FlipAxis::Vertical) => FlipName::Vertical,
                    FlipChoice::Random => FlipName::Random,
                },
            },
            OpKind::Shear { max_angle, axis } => D::Shear {
                probability,
                max_angle,
                axis: match axis {
                    AxisChoice::Fixed(Axis::X) => AxisName::X,
                    AxisChoice::Fixed(Axis::Y) => AxisName::Y,
                    AxisChoice::Random => AxisName::Random,
                },
            },
            OpKind::Skew { severity, kind } => D::Skew {
                probability,
                severity,
                kind: match kind {
                    SkewChoice::Fixed(SkewKind::Forward) => SkewName::Forward,
                    SkewChoice::Fixed(SkewKind::Backward) => SkewName::Backward,
                    SkewChoice::Fixed(SkewKind::Left) => SkewName::Left,
                    SkewChoice::Fixed(SkewKind::Right) => SkewName::Right,
                    SkewChoice::Random => SkewName::Random,
                },
            },
            OpKind::Elastic {
                grid_width,
                grid_height,
                magnitude,
            } => D::Elastic {
                probability,
                grid_width,
                grid_height,
                magnitude,
            },
            OpKind::Zoom { min_factor, max_factor } => D::Zoom {
                probability,
                min_factor,
                max_factor,
            },
            OpKind::CropRandom {
                area_fraction,
                resize_back,
            } => D::CropRandom {
                probability,
                area_fraction,
                resize_back,
            },
            OpKind::CropCentre { width, height } => D::CropCentre {
                probability,
                width,
                height,
            },
            OpKind::Resize { width, height } => D::Resize {
                probability,
                width,
                height,
            },
            OpKind::Scale { factor } => D::Scale { probability, factor },
            OpKind::Greyscale => D::Greyscale { probability },
            OpKind::Invert => D::Invert { probability },
            OpKind::Equalize => D::Equalize { probability },
        }
    }
}

/// A parsed configuration: the validated pipeline and the seed the document
/// named, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub pipeline: Pipeline,
    pub seed: Option<u64>,
}

pub fn parse_config_document(text: &str) -> Result<ParsedConfig, ConfigError> {
    let doc: ConfigDoc = serde_json::from_str(text)?;
    if doc.version != CONFIG_VERSION {
        return Err(ConfigError::Version(doc.version));
    }
    let filter = match doc.filter {
        FilterName::Nearest => Filter::Nearest,
        FilterName::Bilinear => Filter::Bilinear,
        FilterName::Bicubic => Filter::Bicubic,
    };
    let mut pipeline = Pipeline::new(doc.seed.unwrap_or(0)).with_filter(filter);
    for (index, d) in doc.operations.into_iter().enumerate() {
        pipeline
            .add_operation(d.into())
            .map_err(|source| ConfigError::Invalid { index, source })?;
    }
    Ok(ParsedConfig {
        pipeline,
        seed: doc.seed,
    })
}

/// Parses and validates a configuration; the pipeline's seed is the document's
/// seed, or 0.
pub fn parse_config(text: &str) -> Result<Pipeline, ConfigError> {
    parse_config_document(text).map(|c| c.pipeline)
}

/// Pretty-printed canonical form: every field explicit, operations in order.
pub fn canonical_config(pipeline: &Pipeline, seed: Option<u64>) -> String {
    let doc = ConfigDoc {
        version: CONFIG_VERSION,
        seed,
        filter: match pipeline.filter() {
            Filter::Nearest => FilterName::Nearest,
            Filter::Bilinear => FilterName::Bilinear,
            Filter::Bicubic => FilterName::Bicubic,
        },
        operations: pipeline.ops().iter().map(OpDescriptor::from).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("config serialises")
}
