//! The augmentation catalogue: deterministic kernels plus [`apply_op`], which draws
//! an operation's random parameters and runs the matching kernel.

use std::fmt;

use serde::ser::{Serialize, SerializeMap, Serializer};
use thiserror::Error;

use crate::geometry::{self, Axis, CropRect, GeometryError, Point, Quad};
use crate::image::{clamp_round, Image, PixelFormat};
use crate::rng::RngStream;
use crate::warp::{self, AffineTransform, DisplacementGrid, Filter, Mapping, WarpError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuarterTurn {
    R90,
    R180,
    R270,
}

impl QuarterTurn {
    pub fn degrees(self) -> i64 {
        match self {
            QuarterTurn::R90 => 90,
            QuarterTurn::R180 => 180,
            QuarterTurn::R270 => 270,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CardinalChoice {
    Fixed(QuarterTurn),
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipAxis {
    /// Left-right mirror.
    Horizontal,
    /// Top-bottom mirror.
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipChoice {
    Fixed(FlipAxis),
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisChoice {
    Fixed(Axis),
    Random,
}

/// Which edge of the image is pulled inward by a perspective skew.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkewKind {
    /// Top edge.
    Forward,
    /// Bottom edge.
    Backward,
    Left,
    Right,
}

impl SkewKind {
    pub fn name(self) -> &'static str {
        match self {
            SkewKind::Forward => "forward",
            SkewKind::Backward => "backward",
            SkewKind::Left => "left",
            SkewKind::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkewChoice {
    Fixed(SkewKind),
    Random,
}

/// Parameters of one augmentation operation.
#[derive(Debug, Clone, PartialEq)]
pub enum OpKind {
    Rotate {
        max_left: f64,
        max_right: f64,
    },
    RotateCardinal {
        which: CardinalChoice,
    },
    Flip {
        axis: FlipChoice,
    },
    Shear {
        max_angle: f64,
        axis: AxisChoice,
    },
    Skew {
        severity: f64,
        kind: SkewChoice,
    },
    Elastic {
        grid_width: u32,
        grid_height: u32,
        magnitude: u32,
    },
    Zoom {
        min_factor: f64,
        max_factor: f64,
    },
    CropRandom {
        area_fraction: f64,
        resize_back: bool,
    },
    CropCentre {
        width: u32,
        height: u32,
    },
    Resize {
        width: u32,
        height: u32,
    },
    Scale {
        factor: f64,
    },
    Greyscale,
    Invert,
    Equalize,
}

impl OpKind {
    pub fn name(&self) -> &'static str {
        match self {
            OpKind::Rotate { .. } => "rotate",
            OpKind::RotateCardinal { .. } => "rotate_cardinal",
            OpKind::Flip { .. } => "flip",
            OpKind::Shear { .. } => "shear",
            OpKind::Skew { .. } => "skew",
            OpKind::Elastic { .. } => "elastic",
            OpKind::Zoom { .. } => "zoom",
            OpKind::CropRandom { .. } => "crop_random",
            OpKind::CropCentre { .. } => "crop_centre",
            OpKind::Resize { .. } => "resize",
            OpKind::Scale { .. } => "scale",
            OpKind::Greyscale => "greyscale",
            OpKind::Invert => "invert",
            OpKind::Equalize => "equalize",
        }
    }
}

/// A configured operation: what to do and how often.
#[derive(Debug, Clone, PartialEq)]
pub struct OpSpec {
    pub probability: f64,
    pub kind: OpKind,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{op}.{field}: {message}")]
pub struct ValidationError {
    pub op: &'static str,
    pub field: &'static str,
    pub message: String,
}

fn check(
    ok: bool,
    op: &'static str,
    field: &'static str,
    message: impl FnOnce() -> String,
) -> Result<(), ValidationError> {
    if ok {
        Ok(())
    } else {
        Err(ValidationError {
            op,
            field,
            message: message(),
        })
    }
}

fn in_range(v: f64, lo: f64, hi: f64) -> bool {
    v.is_finite() && v >= lo && v <= hi
}

impl OpSpec {
    pub fn new(probability: f64, kind: OpKind) -> Self {
        OpSpec { probability, kind }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Checks the probability and every variant-specific parameter range.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let op = self.name();
        check(in_range(self.probability, 0.0, 1.0), op, "probability", || {
            format!("{} is outside [0, 1]", self.probability)
        })?;
        match self.kind {
            OpKind::Rotate { max_left, max_right } => {
                check(in_range(max_left, 0.0, 45.0), op, "max_left_rotation", || {
                    format!("{max_left} is outside [0, 45]")
                })?;
                check(in_range(max_right, 0.0, 45.0), op, "max_right_rotation", || {
                    format!("{max_right} is outside [0, 45]")
                })
            }
            OpKind::Shear { max_angle, .. } => check(
                max_angle.is_finite() && (0.0..45.0).contains(&max_angle),
                op,
                "max_angle",
                || format!("{max_angle} is outside [0, 45)"),
            ),
            OpKind::Skew { severity, .. } => check(
                severity.is_finite() && severity > 0.0 && severity <= 1.0,
                op,
                "severity",
                || format!("{severity} is outside (0, 1]"),
            ),
            OpKind::Elastic {
                grid_width,
                grid_height,
                ..
            } => {
                check(grid_width >= 1, op, "grid_width", || "must be at least 1".into())?;
                check(grid_height >= 1, op, "grid_height", || "must be at least 1".into())
            }
            OpKind::Zoom { min_factor, max_factor } => {
                check(min_factor.is_finite() && min_factor >= 1.0, op, "min_factor", || {
                    format!("{min_factor} is below 1 (zoom-out would require padding)")
                })?;
                check(
                    max_factor.is_finite() && max_factor >= min_factor,
                    op,
                    "max_factor",
                    || format!("{max_factor} is below min_factor {min_factor}"),
                )
            }
            OpKind::CropRandom { area_fraction, .. } => check(
                area_fraction.is_finite() && area_fraction > 0.0 && area_fraction <= 1.0,
                op,
                "area_fraction",
                || format!("{area_fraction} is outside (0, 1]"),
            ),
            OpKind::CropCentre { width, height } | OpKind::Resize { width, height } => {
                check(width >= 1, op, "width", || "must be at least 1".into())?;
                check(height >= 1, op, "height", || "must be at least 1".into())
            }
            OpKind::Scale { factor } => check(factor.is_finite() && factor > 0.0, op, "factor", || {
                format!("{factor} must be positive")
            }),
            OpKind::RotateCardinal { .. }
            | OpKind::Flip { .. }
            | OpKind::Greyscale
            | OpKind::Invert
            | OpKind::Equalize => Ok(()),
        }
    }
}

/// One drawn parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamValue {
    Real(f64),
    Int(i64),
    Label(&'static str),
}

impl Serialize for ParamValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            ParamValue::Real(v) => s.serialize_f64(v),
            ParamValue::Int(v) => s.serialize_i64(v),
            ParamValue::Label(v) => s.serialize_str(v),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Label(v) => f.write_str(v),
        }
    }
}

/// Drawn parameters in draw order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DrawnParams(pub Vec<(String, ParamValue)>);

impl DrawnParams {
    fn push(&mut self, name: impl Into<String>, value: ParamValue) {
        self.0.push((name.into(), value));
    }

    pub fn get(&self, name: &str) -> Option<ParamValue> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Serialize for DrawnParams {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl fmt::Display for DrawnParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Audit record of one operation on one sample.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct OpApplication {
    pub op: &'static str,
    pub applied: bool,
    pub params: DrawnParams,
}

impl OpApplication {
    pub fn skipped(op: &'static str) -> Self {
        OpApplication {
            op,
            applied: false,
            params: DrawnParams::default(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Warp(#[from] WarpError),
    #[error("zoom factor {0} is below 1 (zoom-out would require padding)")]
    ZoomOut(f64),
    #[error("skew displacement {d} must be below half of min({width}, {height})")]
    SkewOutOfRange { d: u32, width: u32, height: u32 },
    #[error("crop {rect:?} does not fit a {width}x{height} image")]
    CropOutOfBounds { rect: CropRect, width: u32, height: u32 },
}

/// A kernel failure annotated with the parameters that had been drawn.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{op} failed with drawn parameters [{params}]: {source}")]
pub struct OpError {
    pub op: &'static str,
    pub params: DrawnParams,
    #[source]
    pub source: KernelError,
}

// ---------------------------------------------------------------------------
// Geometric kernels

/// Destination-to-source map for an arbitrary rotation with no-fill crop.
///
/// Positive angles turn the content clockwise. The composed map rotates about
/// the image centre, crops the inscribed rectangle and stretches it back to the
/// input size.
pub fn rotate_mapping(width: u32, height: u32, theta_deg: f64) -> Result<AffineTransform, GeometryError> {
    let crop = geometry::inscribed_crop_rect(width, height, theta_deg)?;
    let (w, h) = (width as f64, height as f64);
    let sx = crop.w as f64 / w;
    let sy = crop.h as f64 / h;
    let (s, c) = theta_deg.to_radians().sin_cos();
    let (cx, cy) = (w / 2.0, h / 2.0);
    let a = [[c * sx, s * sy], [-s * sx, c * sy]];
    Ok(AffineTransform::new([
        [a[0][0], a[0][1], cx - (a[0][0] * cx + a[0][1] * cy)],
        [a[1][0], a[1][1], cy - (a[1][0] * cx + a[1][1] * cy)],
    ]))
}

pub fn rotate_arbitrary(img: &Image, theta_deg: f64, filter: Filter) -> Result<Image, KernelError> {
    let m = rotate_mapping(img.width(), img.height(), theta_deg)?;
    if theta_deg == 0.0 {
        return Ok(img.clone());
    }
    Ok(warp::warp_affine(img, &m, img.width(), img.height(), filter)?)
}

/// Lossless clockwise quarter turn.
pub fn rotate_cardinal(img: &Image, turn: QuarterTurn) -> Image {
    let (w, h) = img.dimensions();
    match turn {
        QuarterTurn::R180 => {
            let ch = img.channels();
            let mut buf = Vec::with_capacity(img.as_raw().len());
            for px in img.as_raw().chunks_exact(ch).rev() {
                buf.extend_from_slice(px);
            }
            Image::from_raw(w, h, img.format(), buf).expect("same size")
        }
        // dst(x, y) = src(y, H-1-x)
        QuarterTurn::R90 => Image::from_fn(h, w, img.format(), |x, y| pixel4(img, y, h - 1 - x)),
        // dst(x, y) = src(W-1-y, x)
        QuarterTurn::R270 => Image::from_fn(h, w, img.format(), |x, y| pixel4(img, w - 1 - y, x)),
    }
}

fn pixel4(img: &Image, x: u32, y: u32) -> [u8; 4] {
    let mut out = [0; 4];
    let p = img.pixel(x, y);
    out[..p.len()].copy_from_slice(p);
    out
}

pub fn flip(img: &Image, axis: FlipAxis) -> Image {
    let (w, h) = img.dimensions();
    match axis {
        FlipAxis::Horizontal => Image::from_fn(w, h, img.format(), |x, y| pixel4(img, w - 1 - x, y)),
        FlipAxis::Vertical => {
            let mut buf = Vec::with_capacity(img.as_raw().len());
            for row in img.rows().rev() {
                buf.extend_from_slice(row);
            }
            Image::from_raw(w, h, img.format(), buf).expect("same size")
        }
    }
}

/// Destination-to-source map for a shear followed by its no-fill crop and the
/// resize back to the input size.
pub fn shear_mapping(width: u32, height: u32, axis: Axis, angle_deg: f64) -> Result<AffineTransform, GeometryError> {
    let t = angle_deg.to_radians().tan();
    let rect = geometry::shear_crop_rect(width, height, axis, t)?;
    let sx = rect.w as f64 / width as f64;
    let sy = rect.h as f64 / height as f64;
    let (ox, oy) = (rect.x as f64, rect.y as f64);
    // Crop coordinate q = (ox + sx*x, oy + sy*y); the inverse shear subtracts t*q.
    Ok(match axis {
        Axis::X => AffineTransform::new([[sx, -t * sy, ox - t * oy], [0.0, sy, oy]]),
        Axis::Y => AffineTransform::new([[sx, 0.0, ox], [-t * sx, sy, oy - t * ox]]),
    })
}

pub fn shear(img: &Image, axis: Axis, angle_deg: f64, filter: Filter) -> Result<Image, KernelError> {
    let m = shear_mapping(img.width(), img.height(), axis, angle_deg)?;
    if angle_deg == 0.0 {
        return Ok(img.clone());
    }
    Ok(warp::warp_affine(img, &m, img.width(), img.height(), filter)?)
}

/// Source quad for a skew: two corners of one edge pulled inward by `d`.
pub fn skew_quad(width: u32, height: u32, kind: SkewKind, d: u32) -> Quad {
    let (w, h, d) = (width as f64, height as f64, d as f64);
    let p = Point::new;
    Quad(match kind {
        SkewKind::Forward => [p(d, 0.0), p(w - d, 0.0), p(w, h), p(0.0, h)],
        SkewKind::Backward => [p(0.0, 0.0), p(w, 0.0), p(w - d, h), p(d, h)],
        SkewKind::Left => [p(0.0, d), p(w, 0.0), p(w, h), p(0.0, h - d)],
        SkewKind::Right => [p(0.0, 0.0), p(w, d), p(w, h - d), p(0.0, h)],
    })
}

/// Destination-to-source map for a perspective skew.
pub fn skew_mapping(width: u32, height: u32, kind: SkewKind, d: u32) -> Result<Mapping, KernelError> {
    if 2 * d as u64 >= width.min(height) as u64 && d > 0 {
        return Err(KernelError::SkewOutOfRange { d, width, height });
    }
    if d == 0 {
        return Ok(Mapping::Affine(AffineTransform::IDENTITY));
    }
    let src = skew_quad(width, height, kind, d);
    let dst = Quad::rect(width as f64, height as f64);
    Ok(Mapping::Projective(geometry::solve_homography(&src, &dst)?))
}

pub fn skew(img: &Image, kind: SkewKind, d: u32, filter: Filter) -> Result<Image, KernelError> {
    let mapping = skew_mapping(img.width(), img.height(), kind, d)?;
    if d == 0 {
        return Ok(img.clone());
    }
    Ok(warp::warp(img, &mapping, img.width(), img.height(), filter)?)
}

/// Draws a displacement grid: for each interior node in row-major order,
/// `dx` then `dy`, each an integer in `[-magnitude, magnitude]`.
pub fn draw_displacement_grid(
    gw: u32,
    gh: u32,
    magnitude: u32,
    rng: &mut RngStream,
) -> Result<DisplacementGrid, WarpError> {
    let mut grid = DisplacementGrid::zero(gw, gh)?;
    let m = magnitude as i64;
    for b in 1..gh {
        for a in 1..gw {
            let dx = rng.int(-m, m).expect("symmetric range");
            let dy = rng.int(-m, m).expect("symmetric range");
            grid.set_offset(a, b, Point::new(dx as f64, dy as f64));
        }
    }
    Ok(grid)
}

/// Random elastic distortion on a `gw x gh` grid; dimensions are preserved.
pub fn elastic(
    img: &Image,
    gw: u32,
    gh: u32,
    magnitude: u32,
    rng: &mut RngStream,
    filter: Filter,
) -> Result<Image, KernelError> {
    let grid = draw_displacement_grid(gw, gh, magnitude, rng)?;
    elastic_with_grid(img, &grid, filter)
}

fn elastic_with_grid(img: &Image, grid: &DisplacementGrid, filter: Filter) -> Result<Image, KernelError> {
    if grid.is_zero() {
        return Ok(img.clone());
    }
    Ok(warp::warp_mesh(img, grid, filter)?)
}

/// Zoom in by `f >= 1`: resize to `round(W*f) x round(H*f)` and centre-crop back.
pub fn zoom(img: &Image, f: f64, filter: Filter) -> Result<Image, KernelError> {
    if !(f >= 1.0) || !f.is_finite() {
        return Err(KernelError::ZoomOut(f));
    }
    let (w, h) = img.dimensions();
    let nw = (w as f64 * f).round() as u32;
    let nh = (h as f64 * f).round() as u32;
    let big = warp::resize(img, nw, nh, filter)?;
    let rect = CropRect::new((nw - w) / 2, (nh - h) / 2, w, h);
    crop(&big, rect, false, filter)
}

/// Exact sub-rectangle copy, optionally resized back to the input size.
pub fn crop(img: &Image, region: CropRect, resize_back: bool, filter: Filter) -> Result<Image, KernelError> {
    let (w, h) = img.dimensions();
    if !region.fits_within(w, h) {
        return Err(KernelError::CropOutOfBounds {
            rect: region,
            width: w,
            height: h,
        });
    }
    let ch = img.channels();
    let mut buf = Vec::with_capacity(region.w as usize * region.h as usize * ch);
    for row in img.rows().skip(region.y as usize).take(region.h as usize) {
        buf.extend_from_slice(&row[region.x as usize * ch..(region.x + region.w) as usize * ch]);
    }
    let out = Image::from_raw(region.w, region.h, img.format(), buf).expect("crop sized");
    if resize_back {
        Ok(warp::resize(&out, w, h, filter)?)
    } else {
        Ok(out)
    }
}

/// Crop extent for a random crop covering `area_fraction` of the image.
pub fn random_crop_size(width: u32, height: u32, area_fraction: f64) -> (u32, u32) {
    let s = area_fraction.sqrt();
    (
        ((width as f64 * s).round() as u32).clamp(1, width),
        ((height as f64 * s).round() as u32).clamp(1, height),
    )
}

pub fn centre_crop_rect(width: u32, height: u32, cw: u32, ch: u32) -> Option<CropRect> {
    (cw >= 1 && ch >= 1 && cw <= width && ch <= height)
        .then(|| CropRect::new((width - cw) / 2, (height - ch) / 2, cw, ch))
}

// ---------------------------------------------------------------------------
// Pixel kernels

/// BT.601 luma; alpha is dropped.
pub fn greyscale(img: &Image) -> Image {
    if img.format() == PixelFormat::Gray8 {
        return img.clone();
    }
    let ch = img.channels();
    let buf = img
        .as_raw()
        .chunks_exact(ch)
        .map(|p| clamp_round(0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64))
        .collect();
    Image::from_raw(img.width(), img.height(), PixelFormat::Gray8, buf).expect("same size")
}

/// `v -> 255 - v` on colour channels; alpha untouched.
pub fn invert(img: &Image) -> Image {
    let ch = img.channels();
    let colour = img.format().colour_channels();
    let mut buf = img.as_raw().to_vec();
    for px in buf.chunks_exact_mut(ch) {
        for v in &mut px[..colour] {
            *v = 255 - *v;
        }
    }
    Image::from_raw(img.width(), img.height(), img.format(), buf).expect("same size")
}

/// Per-channel histogram equalisation of the colour channels.
pub fn equalize(img: &Image) -> Image {
    let ch = img.channels();
    let n = img.width() as u64 * img.height() as u64;
    let mut buf = img.as_raw().to_vec();
    for c in 0..img.format().colour_channels() {
        let mut hist = [0u64; 256];
        for px in buf.chunks_exact(ch) {
            hist[px[c] as usize] += 1;
        }
        let mut cdf = [0u64; 256];
        let mut acc = 0;
        for (v, count) in hist.iter().enumerate() {
            acc += count;
            cdf[v] = acc;
        }
        let cdf_min = cdf.iter().copied().find(|&v| v > 0).unwrap_or(0);
        if cdf_min == n {
            continue;
        }
        let denom = (n - cdf_min) as f64;
        let mut lut = [0u8; 256];
        for (v, out) in lut.iter_mut().enumerate() {
            *out = clamp_round((cdf[v] as f64 - cdf_min as f64) / denom * 255.0);
        }
        for px in buf.chunks_exact_mut(ch) {
            px[c] = lut[px[c] as usize];
        }
    }
    Image::from_raw(img.width(), img.height(), img.format(), buf).expect("same size")
}

// ---------------------------------------------------------------------------
// Parameter drawing

fn draw_int(rng: &mut RngStream, lo: i64, hi: i64) -> i64 {
    rng.int(lo, hi).expect("validated range")
}

fn draw_real(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    rng.real(lo, hi).expect("validated range")
}

/// Draws the operation's parameters in their fixed order, runs the kernel and
/// records the draws. Gating is the caller's concern: this always applies.
pub fn apply_op(
    spec: &OpSpec,
    img: &Image,
    rng: &mut RngStream,
    filter: Filter,
) -> Result<(Image, OpApplication), OpError> {
    let op = spec.name();
    let mut params = DrawnParams::default();
    let (w, h) = img.dimensions();
    let result = match spec.kind {
        OpKind::Rotate { max_left, max_right } => {
            let angle = draw_real(rng, -max_left, max_right);
            params.push("angle", ParamValue::Real(angle));
            rotate_arbitrary(img, angle, filter)
        }
        OpKind::RotateCardinal { which } => {
            let turn = match which {
                CardinalChoice::Fixed(t) => t,
                CardinalChoice::Random => {
                    let t = [QuarterTurn::R90, QuarterTurn::R180, QuarterTurn::R270][draw_int(rng, 0, 2) as usize];
                    params.push("rotation", ParamValue::Int(t.degrees()));
                    t
                }
            };
            Ok(rotate_cardinal(img, turn))
        }
        OpKind::Flip { axis } => {
            let axis = match axis {
                FlipChoice::Fixed(a) => a,
                FlipChoice::Random => {
                    let a = [FlipAxis::Horizontal, FlipAxis::Vertical][draw_int(rng, 0, 1) as usize];
                    params.push(
                        "axis",
                        ParamValue::Label(match a {
                            FlipAxis::Horizontal => "horizontal",
                            FlipAxis::Vertical => "vertical",
                        }),
                    );
                    a
                }
            };
            Ok(flip(img, axis))
        }
        OpKind::Shear { max_angle, axis } => {
            let axis = match axis {
                AxisChoice::Fixed(a) => a,
                AxisChoice::Random => {
                    let a = [Axis::X, Axis::Y][draw_int(rng, 0, 1) as usize];
                    params.push("axis", ParamValue::Label(if a == Axis::X { "x" } else { "y" }));
                    a
                }
            };
            let angle = draw_real(rng, -max_angle, max_angle);
            params.push("angle", ParamValue::Real(angle));
            shear(img, axis, angle, filter)
        }
        OpKind::Skew { severity, kind } => {
            let kind = match kind {
                SkewChoice::Fixed(k) => k,
                SkewChoice::Random => {
                    let k = [SkewKind::Forward, SkewKind::Backward, SkewKind::Left, SkewKind::Right]
                        [draw_int(rng, 0, 3) as usize];
                    params.push("kind", ParamValue::Label(k.name()));
                    k
                }
            };
            let d = draw_int(rng, 0, max_skew_displacement(w, h, severity) as i64) as u32;
            params.push("d", ParamValue::Int(d as i64));
            skew(img, kind, d, filter)
        }
        OpKind::Elastic {
            grid_width,
            grid_height,
            magnitude,
        } => match draw_displacement_grid(grid_width, grid_height, magnitude, rng) {
            Ok(grid) => {
                for b in 1..grid_height {
                    for a in 1..grid_width {
                        let o = grid.offset(a, b);
                        params.push(format!("dx_{a}_{b}"), ParamValue::Int(o.x as i64));
                        params.push(format!("dy_{a}_{b}"), ParamValue::Int(o.y as i64));
                    }
                }
                elastic_with_grid(img, &grid, filter)
            }
            Err(e) => Err(e.into()),
        },
        OpKind::Zoom { min_factor, max_factor } => {
            let f = draw_real(rng, min_factor, max_factor);
            params.push("factor", ParamValue::Real(f));
            zoom(img, f, filter)
        }
        OpKind::CropRandom {
            area_fraction,
            resize_back,
        } => {
            let (cw, ch) = random_crop_size(w, h, area_fraction);
            let x = draw_int(rng, 0, (w - cw) as i64) as u32;
            let y = draw_int(rng, 0, (h - ch) as i64) as u32;
            params.push("x", ParamValue::Int(x as i64));
            params.push("y", ParamValue::Int(y as i64));
            crop(img, CropRect::new(x, y, cw, ch), resize_back, filter)
        }
        OpKind::CropCentre { width, height } => match centre_crop_rect(w, h, width, height) {
            Some(rect) => crop(img, rect, false, filter),
            None => Err(KernelError::CropOutOfBounds {
                rect: CropRect::new(0, 0, width, height),
                width: w,
                height: h,
            }),
        },
        OpKind::Resize { width, height } => warp::resize(img, width, height, filter).map_err(Into::into),
        OpKind::Scale { factor } => {
            let nw = ((w as f64 * factor).round() as u32).max(1);
            let nh = ((h as f64 * factor).round() as u32).max(1);
            warp::resize(img, nw, nh, filter).map_err(Into::into)
        }
        OpKind::Greyscale => Ok(greyscale(img)),
        OpKind::Invert => Ok(invert(img)),
        OpKind::Equalize => Ok(equalize(img)),
    };
    match result {
        Ok(out) => Ok((
            out,
            OpApplication {
                op,
                applied: true,
                params,
            },
        )),
        Err(source) => Err(OpError { op, params, source }),
    }
}

/// Upper bound of the skew displacement draw: `floor(severity * min(W, H) / 2)`,
/// capped so the pulled-in corners never meet.
pub fn max_skew_displacement(width: u32, height: u32, severity: f64) -> u32 {
    let min = width.min(height);
    let bound = (severity * min as f64 / 2.0).floor().max(0.0) as u32;
    bound.min(min.saturating_sub(1) / 2)
}
