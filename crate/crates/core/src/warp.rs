//! Inverse-mapping resampling.
//!
//! Every warp walks the destination raster, maps each pixel centre back into the
//! source plane, and interpolates there. Neighbour lookups outside the source use
//! clamp-to-edge addressing.

use thiserror::Error;

use crate::geometry::{Homography, Point};
use crate::image::{clamp_round, Image};

/// Denominators smaller than this put the line at infinity inside the output.
pub const HORIZON_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WarpError {
    #[error("horizon inside image: projective denominator {denominator:e} at destination ({x}, {y})")]
    HorizonInsideImage { x: f64, y: f64, denominator: f64 },
    #[error("output dimensions must be at least 1x1, got {0}x{1}")]
    EmptyOutput(u32, u32),
    #[error("displacement grid {gw}x{gh} is inconsistent: {reason}")]
    GridDimensions { gw: u32, gh: u32, reason: String },
}

/// Interpolation filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Filter {
    Nearest,
    #[default]
    Bilinear,
    /// Catmull-Rom cubic (a = -0.5).
    Bicubic,
}

/// 2x3 matrix `[linear | translation]` mapping destination to source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    pub m: [[f64; 3]; 2],
}

impl AffineTransform {
    pub const IDENTITY: AffineTransform = AffineTransform {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
    };

    pub fn new(m: [[f64; 3]; 2]) -> Self {
        AffineTransform { m }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        AffineTransform {
            m: [[1.0, 0.0, tx], [0.0, 1.0, ty]],
        }
    }

    pub fn scale(sx: f64, sy: f64) -> Self {
        AffineTransform {
            m: [[sx, 0.0, 0.0], [0.0, sy, 0.0]],
        }
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        let m = &self.m;
        Point::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2],
            m[1][0] * p.x + m[1][1] * p.y + m[1][2],
        )
    }

    /// `self` applied after `first`.
    pub fn after(&self, first: &AffineTransform) -> AffineTransform {
        let (a, b) = (&self.m, &first.m);
        let mut m = [[0.0; 3]; 2];
        for r in 0..2 {
            for c in 0..3 {
                m[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
            m[r][2] += a[r][2];
        }
        AffineTransform { m }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }
}

/// Lattice of `(gw + 1) x (gh + 1)` node offsets, row-major, boundary pinned at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementGrid {
    gw: u32,
    gh: u32,
    nodes: Vec<Point>,
}

impl DisplacementGrid {
    /// A grid of `gw x gh` cells with all offsets zero.
    pub fn zero(gw: u32, gh: u32) -> Result<Self, WarpError> {
        if gw == 0 || gh == 0 {
            return Err(WarpError::GridDimensions {
                gw,
                gh,
                reason: "cell counts must be at least 1".into(),
            });
        }
        Ok(DisplacementGrid {
            gw,
            gh,
            nodes: vec![Point::default(); (gw as usize + 1) * (gh as usize + 1)],
        })
    }

    /// Builds a grid from an explicit row-major node list.
    pub fn from_nodes(gw: u32, gh: u32, nodes: Vec<Point>) -> Result<Self, WarpError> {
        let mut grid = Self::zero(gw, gh)?;
        if nodes.len() != grid.nodes.len() {
            return Err(WarpError::GridDimensions {
                gw,
                gh,
                reason: format!("expected {} nodes, got {}", grid.nodes.len(), nodes.len()),
            });
        }
        grid.nodes = nodes;
        for b in 0..=gh {
            for a in 0..=gw {
                if grid.is_boundary(a, b) && grid.offset(a, b) != Point::default() {
                    return Err(WarpError::GridDimensions {
                        gw,
                        gh,
                        reason: format!("boundary node ({a}, {b}) is displaced"),
                    });
                }
            }
        }
        Ok(grid)
    }

    pub fn cells(&self) -> (u32, u32) {
        (self.gw, self.gh)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn is_boundary(&self, a: u32, b: u32) -> bool {
        a == 0 || b == 0 || a == self.gw || b == self.gh
    }

    #[inline]
    fn index(&self, a: u32, b: u32) -> usize {
        b as usize * (self.gw as usize + 1) + a as usize
    }

    #[inline]
    pub fn offset(&self, a: u32, b: u32) -> Point {
        self.nodes[self.index(a, b)]
    }

    /// Sets the offset of an interior node. Panics for boundary nodes.
    pub fn set_offset(&mut self, a: u32, b: u32, offset: Point) {
        assert!(
            a <= self.gw && b <= self.gh && !self.is_boundary(a, b),
            "node ({a}, {b}) is not interior"
        );
        let i = self.index(a, b);
        self.nodes[i] = offset;
    }

    /// Rest position of node `(a, b)` on a `width x height` host.
    pub fn rest_position(&self, a: u32, b: u32, width: u32, height: u32) -> Point {
        Point::new(
            a as f64 * width as f64 / self.gw as f64,
            b as f64 * height as f64 / self.gh as f64,
        )
    }

    pub fn is_zero(&self) -> bool {
        self.nodes.iter().all(|p| *p == Point::default())
    }

    /// Source coordinate for destination point `p` on a `width x height` host.
    #[inline]
    pub fn displace(&self, p: Point, width: u32, height: u32) -> Point {
        let (a, fu) = cell_coord(p.x, width, self.gw);
        let (b, fv) = cell_coord(p.y, height, self.gh);
        let n00 = self.offset(a, b);
        let n10 = self.offset(a + 1, b);
        let n01 = self.offset(a, b + 1);
        let n11 = self.offset(a + 1, b + 1);
        let dx = (1.0 - fv) * ((1.0 - fu) * n00.x + fu * n10.x) + fv * ((1.0 - fu) * n01.x + fu * n11.x);
        let dy = (1.0 - fv) * ((1.0 - fu) * n00.y + fu * n10.y) + fv * ((1.0 - fu) * n01.y + fu * n11.y);
        Point::new(p.x + dx, p.y + dy)
    }
}

#[inline]
fn cell_coord(v: f64, extent: u32, cells: u32) -> (u32, f64) {
    let u = v * cells as f64 / extent as f64;
    let a = (u.floor().max(0.0) as u32).min(cells - 1);
    (a, u - a as f64)
}

/// Destination-to-source coordinate map driving a warp.
#[derive(Debug, Clone, PartialEq)]
pub enum Mapping {
    Affine(AffineTransform),
    Projective(Homography),
    /// Mesh displacement over a host of the given source size.
    Mesh {
        grid: DisplacementGrid,
        width: u32,
        height: u32,
    },
}

impl Mapping {
    #[inline]
    fn map(&self, p: Point) -> Result<Point, WarpError> {
        match self {
            Mapping::Affine(m) => Ok(m.apply(p)),
            Mapping::Projective(h) => {
                let den = h.denominator(p.x, p.y);
                if !(den.abs() >= HORIZON_EPS) {
                    return Err(WarpError::HorizonInsideImage {
                        x: p.x,
                        y: p.y,
                        denominator: den,
                    });
                }
                let m = &h.m;
                Ok(Point::new(
                    (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / den,
                    (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / den,
                ))
            }
            Mapping::Mesh { grid, width, height } => Ok(grid.displace(p, *width, *height)),
        }
    }
}

/// Interpolated channel values of `img` at continuous coordinate `(x, y)`.
///
/// Only the first `img.channels()` entries are meaningful.
#[inline]
pub fn sample(img: &Image, x: f64, y: f64, filter: Filter) -> [f64; 4] {
    let mut out = [0.0; 4];
    let ch = img.channels();
    match filter {
        Filter::Nearest => {
            let (xi, yi) = (x.floor() as i64, y.floor() as i64);
            for (c, o) in out.iter_mut().enumerate().take(ch) {
                *o = img.channel_clamped(xi, yi, c) as f64;
            }
        }
        Filter::Bilinear => {
            let (fx, fy) = (x - 0.5, y - 0.5);
            let (x0, y0) = (fx.floor(), fy.floor());
            let (wx, wy) = (fx - x0, fy - y0);
            let (x0, y0) = (x0 as i64, y0 as i64);
            for (c, o) in out.iter_mut().enumerate().take(ch) {
                let p00 = img.channel_clamped(x0, y0, c) as f64;
                let p10 = img.channel_clamped(x0 + 1, y0, c) as f64;
                let p01 = img.channel_clamped(x0, y0 + 1, c) as f64;
                let p11 = img.channel_clamped(x0 + 1, y0 + 1, c) as f64;
                let top = (1.0 - wx) * p00 + wx * p10;
                let bottom = (1.0 - wx) * p01 + wx * p11;
                *o = (1.0 - wy) * top + wy * bottom;
            }
        }
        Filter::Bicubic => {
            let (fx, fy) = (x - 0.5, y - 0.5);
            let (x0, y0) = (fx.floor(), fy.floor());
            let kx = catmull_rom_weights(fx - x0);
            let ky = catmull_rom_weights(fy - y0);
            let (x0, y0) = (x0 as i64, y0 as i64);
            for (c, o) in out.iter_mut().enumerate().take(ch) {
                let mut acc = 0.0;
                for (j, wy) in ky.iter().enumerate() {
                    let mut row = 0.0;
                    for (i, wx) in kx.iter().enumerate() {
                        row += wx * img.channel_clamped(x0 + i as i64 - 1, y0 + j as i64 - 1, c) as f64;
                    }
                    acc += wy * row;
                }
                *o = acc;
            }
        }
    }
    out
}

/// Weights of taps at offsets -1, 0, 1, 2 for fractional position `t`.
#[inline]
fn catmull_rom_weights(t: f64) -> [f64; 4] {
    const A: f64 = -0.5;
    let near = |d: f64| (A + 2.0) * d * d * d - (A + 3.0) * d * d + 1.0;
    let far = |d: f64| A * d * d * d - 5.0 * A * d * d + 8.0 * A * d - 4.0 * A;
    [far(1.0 + t), near(t), near(1.0 - t), far(2.0 - t)]
}

/// Runs an inverse-mapping warp, reporting every source coordinate to `probe`
/// before it is sampled.
pub fn warp_with_probe<P>(
    img: &Image,
    mapping: &Mapping,
    out_w: u32,
    out_h: u32,
    filter: Filter,
    mut probe: P,
) -> Result<Image, WarpError>
where
    P: FnMut(f64, f64),
{
    if out_w == 0 || out_h == 0 {
        return Err(WarpError::EmptyOutput(out_w, out_h));
    }
    if let Mapping::Projective(h) = mapping {
        check_horizon(h, out_w, out_h)?;
    }
    let ch = img.channels();
    let mut buf = Vec::with_capacity(out_w as usize * out_h as usize * ch);
    for y in 0..out_h {
        let py = y as f64 + 0.5;
        for x in 0..out_w {
            let src = mapping.map(Point::new(x as f64 + 0.5, py))?;
            probe(src.x, src.y);
            let v = sample(img, src.x, src.y, filter);
            buf.extend(v[..ch].iter().map(|&c| clamp_round(c)));
        }
    }
    Ok(Image::from_raw(out_w, out_h, img.format(), buf).expect("buffer sized for output"))
}

/// The denominator is affine in the destination point, so a sign change between
/// the extreme pixel centres means the horizon crosses the output.
fn check_horizon(h: &Homography, out_w: u32, out_h: u32) -> Result<(), WarpError> {
    let (x1, y1) = (out_w as f64 - 0.5, out_h as f64 - 0.5);
    let corners = [(0.5, 0.5), (x1, 0.5), (x1, y1), (0.5, y1)];
    let positive = h.denominator(0.5, 0.5) > 0.0;
    for (x, y) in corners {
        let den = h.denominator(x, y);
        if den.abs() < HORIZON_EPS || (den > 0.0) != positive {
            return Err(WarpError::HorizonInsideImage { x, y, denominator: den });
        }
    }
    Ok(())
}

pub fn warp(img: &Image, mapping: &Mapping, out_w: u32, out_h: u32, filter: Filter) -> Result<Image, WarpError> {
    warp_with_probe(img, mapping, out_w, out_h, filter, |_, _| {})
}

pub fn warp_affine(
    img: &Image,
    m: &AffineTransform,
    out_w: u32,
    out_h: u32,
    filter: Filter,
) -> Result<Image, WarpError> {
    warp(img, &Mapping::Affine(*m), out_w, out_h, filter)
}

pub fn warp_projective(
    img: &Image,
    h: &Homography,
    out_w: u32,
    out_h: u32,
    filter: Filter,
) -> Result<Image, WarpError> {
    warp(img, &Mapping::Projective(*h), out_w, out_h, filter)
}

/// Elastic mesh warp; output keeps the input's dimensions.
pub fn warp_mesh(img: &Image, grid: &DisplacementGrid, filter: Filter) -> Result<Image, WarpError> {
    let (w, h) = img.dimensions();
    let mapping = Mapping::Mesh {
        grid: grid.clone(),
        width: w,
        height: h,
    };
    warp(img, &mapping, w, h, filter)
}

/// Point-sampled resize: destination centre `(x + 0.5, y + 0.5)` reads source
/// `((x + 0.5) * W / out_w, (y + 0.5) * H / out_h)`.
pub fn resize_mapping(src_w: u32, src_h: u32, out_w: u32, out_h: u32) -> AffineTransform {
    AffineTransform::scale(src_w as f64 / out_w as f64, src_h as f64 / out_h as f64)
}

pub fn resize(img: &Image, out_w: u32, out_h: u32, filter: Filter) -> Result<Image, WarpError> {
    if (out_w, out_h) == img.dimensions() {
        // Centres map onto centres and every filter reproduces the input there.
        return Ok(img.clone());
    }
    let m = resize_mapping(img.width(), img.height(), out_w, out_h);
    warp_affine(img, &m, out_w, out_h, filter)
}
