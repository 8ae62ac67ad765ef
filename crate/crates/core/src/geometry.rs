//! Closed-form geometry: no-fill crop rectangles for rotation and shear, and the
//! four-point homography solver used by perspective tilts.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("rotation of {0} degrees is outside [-45, 45]")]
    AngleOutOfRange(f64),
    #[error("shear exceeds image extent: |t|={t} on the {axis} axis of a {width}x{height} image")]
    ShearTooStrong {
        axis: Axis,
        t: f64,
        width: u32,
        height: u32,
    },
    #[error("image dimensions must be at least 1x1")]
    EmptyImage,
    #[error("rotating a {width}x{height} image by {theta} degrees leaves no whole-pixel crop")]
    CropCollapsed { width: u32, height: u32, theta: f64 },
    #[error("degenerate quad: pivot {pivot:e} below tolerance")]
    DegenerateQuad { pivot: f64 },
}

/// Image axis along which a shear displaces pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Axis-aligned pixel rectangle, `x`/`y` being the top-left offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CropRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl CropRect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        CropRect { x, y, w, h }
    }

    pub fn fits_within(&self, width: u32, height: u32) -> bool {
        self.w >= 1
            && self.h >= 1
            && self.x as u64 + self.w as u64 <= width as u64
            && self.y as u64 + self.h as u64 <= height as u64
    }
}

/// Corners in the order top-left, top-right, bottom-right, bottom-left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad(pub [Point; 4]);

impl Quad {
    /// The full `[0, w] x [0, h]` rectangle.
    pub fn rect(w: f64, h: f64) -> Self {
        Quad([
            Point::new(0.0, 0.0),
            Point::new(w, 0.0),
            Point::new(w, h),
            Point::new(0.0, h),
        ])
    }

    pub fn corners(&self) -> &[Point; 4] {
        &self.0
    }
}

/// Projective map with `m[2][2] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    pub m: [[f64; 3]; 3],
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn translation(tx: f64, ty: f64) -> Self {
        Homography {
            m: [[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]],
        }
    }

    /// The projective denominator `m20*x + m21*y + 1`.
    #[inline]
    pub fn denominator(&self, x: f64, y: f64) -> f64 {
        self.m[2][0] * x + self.m[2][1] * y + self.m[2][2]
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        let m = &self.m;
        let w = self.denominator(p.x, p.y);
        Point::new(
            (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
            (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w,
        )
    }

    fn mul(&self, other: &Homography) -> Homography {
        let mut m = [[0.0; 3]; 3];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[r][k] * other.m[k][c]).sum();
            }
        }
        Homography { m }
    }
}

fn validate_dims(w: u32, h: u32) -> Result<(), GeometryError> {
    if w == 0 || h == 0 {
        Err(GeometryError::EmptyImage)
    } else {
        Ok(())
    }
}

/// Scale factor of the largest `W:H` rectangle centred in a `W x H` image rotated
/// by `theta_deg`.
pub fn inscribed_scale(w: u32, h: u32, theta_deg: f64) -> Result<f64, GeometryError> {
    validate_dims(w, h)?;
    if !(theta_deg.abs() <= 45.0) {
        return Err(GeometryError::AngleOutOfRange(theta_deg));
    }
    let (s, c) = theta_deg.abs().to_radians().sin_cos();
    let (w, h) = (w as f64, h as f64);
    Ok((w / (w * c + h * s)).min(h / (w * s + h * c)))
}

/// Size of the bounding box of a `W x H` image rotated by `theta_deg`.
pub fn rotated_bounds(w: u32, h: u32, theta_deg: f64) -> (u32, u32) {
    let (s, c) = theta_deg.abs().to_radians().sin_cos();
    let (w, h) = (w as f64, h as f64);
    (
        (w * c + h * s - 1e-9).ceil().max(1.0) as u32,
        (w * s + h * c - 1e-9).ceil().max(1.0) as u32,
    )
}

/// Largest same-aspect, centred, axis-aligned rectangle inside a `W x H` image
/// rotated by `theta_deg` (|theta| <= 45).
///
/// The returned offset is relative to the rotated bounding box of
/// [`rotated_bounds`]; extents are floored so the rectangle never leaves the
/// rotated source. Very elongated images can floor to an empty rectangle, which
/// is reported as [`GeometryError::CropCollapsed`].
pub fn inscribed_crop_rect(w: u32, h: u32, theta_deg: f64) -> Result<CropRect, GeometryError> {
    let k = inscribed_scale(w, h, theta_deg)?;
    let cw = (k * w as f64).floor() as u32;
    let ch = (k * h as f64).floor() as u32;
    if cw == 0 || ch == 0 {
        return Err(GeometryError::CropCollapsed {
            width: w,
            height: h,
            theta: theta_deg,
        });
    }
    let (bw, bh) = rotated_bounds(w, h, theta_deg);
    Ok(CropRect::new(
        bw.saturating_sub(cw) / 2,
        bh.saturating_sub(ch) / 2,
        cw,
        ch,
    ))
}

/// Largest full-extent rectangle covered by a `W x H` image sheared by factor `t`.
///
/// For an x-shear `(x, y) -> (x + t*y, y)` coordinates are in the sheared plane
/// (row 0 stays put); the y-shear is the transpose.
pub fn shear_crop_rect(w: u32, h: u32, axis: Axis, t: f64) -> Result<CropRect, GeometryError> {
    validate_dims(w, h)?;
    let (along, across) = match axis {
        Axis::X => (w, h),
        Axis::Y => (h, w),
    };
    let cut = t.abs() * across as f64;
    let span = (along as f64 - cut).floor();
    if !t.is_finite() || !(cut < along as f64) || span < 1.0 {
        return Err(GeometryError::ShearTooStrong {
            axis,
            t,
            width: w,
            height: h,
        });
    }
    let offset = if t > 0.0 { cut.ceil() as u32 } else { 0 };
    let span = span as u32;
    Ok(match axis {
        Axis::X => CropRect::new(offset, 0, span, h),
        Axis::Y => CropRect::new(0, offset, w, span),
    })
}

const PIVOT_EPS: f64 = 1e-12;

/// Similarity that moves the quad's centroid to the origin and its mean corner
/// distance to sqrt(2).
fn conditioning(q: &Quad) -> Homography {
    let cx = q.0.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = q.0.iter().map(|p| p.y).sum::<f64>() / 4.0;
    let mean = q.0.iter().map(|p| (p.x - cx).hypot(p.y - cy)).sum::<f64>() / 4.0;
    let s = if mean > 0.0 {
        std::f64::consts::SQRT_2 / mean
    } else {
        1.0
    };
    Homography {
        m: [[s, 0.0, -s * cx], [0.0, s, -s * cy], [0.0, 0.0, 1.0]],
    }
}

fn similarity_inverse(t: &Homography) -> Homography {
    let s = t.m[0][0];
    Homography {
        m: [
            [1.0 / s, 0.0, -t.m[0][2] / s],
            [0.0, 1.0 / s, -t.m[1][2] / s],
            [0.0, 0.0, 1.0],
        ],
    }
}

/// Solves `a * x = b` in place by Gaussian elimination with partial pivoting.
fn gauss_solve(a: &mut [[f64; 8]; 8], b: &mut [f64; 8]) -> Result<[f64; 8], GeometryError> {
    for col in 0..8 {
        let pivot_row = (col..8)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        let pivot = a[pivot_row][col];
        if !(pivot.abs() >= PIVOT_EPS) {
            return Err(GeometryError::DegenerateQuad { pivot: pivot.abs() });
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..8 {
            let f = a[row][col] / pivot;
            if f == 0.0 {
                continue;
            }
            let pivot_vals = a[col];
            for (v, p) in a[row][col..].iter_mut().zip(&pivot_vals[col..]) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 8];
    for row in (0..8).rev() {
        let tail: f64 = (row + 1..8).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

/// Homography taking each corner of `dst` onto the matching corner of `src`
/// (destination to source, as inverse-mapping warps need).
///
/// Both quads are conditioned by a similarity before the 8x8 system is solved.
pub fn solve_homography(src: &Quad, dst: &Quad) -> Result<Homography, GeometryError> {
    let ts = conditioning(src);
    let td = conditioning(dst);
    let mut a = [[0.0; 8]; 8];
    let mut b = [0.0; 8];
    for i in 0..4 {
        let p = td.apply(dst.0[i]);
        let q = ts.apply(src.0[i]);
        let (x, y, u, v) = (p.x, p.y, q.x, q.y);
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -x * u, -y * u];
        b[2 * i] = u;
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -x * v, -y * v];
        b[2 * i + 1] = v;
    }
    let h = gauss_solve(&mut a, &mut b)?;
    let normalised = Homography {
        m: [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]],
    };
    let full = similarity_inverse(&ts).mul(&normalised).mul(&td);
    let scale = full.m[2][2];
    if !(scale.abs() >= PIVOT_EPS) {
        return Err(GeometryError::DegenerateQuad { pivot: scale.abs() });
    }
    let mut m = full.m;
    for row in m.iter_mut() {
        for cell in row.iter_mut() {
            *cell /= scale;
        }
    }
    m[2][2] = 1.0;
    Ok(Homography { m })
}
