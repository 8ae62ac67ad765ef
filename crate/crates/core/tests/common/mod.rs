#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pipeaug::geometry::{self, Axis, Point, Quad};
use pipeaug::ops::{self, SkewKind};
use pipeaug::warp::{self, Filter, Mapping};
use pipeaug::{Image, PixelFormat, RngStream};

pub const FORMATS: [PixelFormat; 3] = [PixelFormat::Gray8, PixelFormat::Rgb8, PixelFormat::Rgba8];

/// Elastic 4x4 grid at magnitude 5 followed by a +-10 degree rotation at p = 0.5.
pub const DIGIT_PIPELINE: &str = r#"{
  "version": 1,
  "operations": [
    {"op": "elastic", "probability": 1.0, "grid_width": 4, "grid_height": 4, "magnitude": 5},
    {"op": "rotate", "probability": 0.5, "max_left_rotation": 10, "max_right_rotation": 10}
  ]
}"#;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pipeaug"))
}

pub fn run_bin(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn pipeaug")
}

pub fn random_image(rng: &mut RngStream, w: u32, h: u32, format: PixelFormat) -> Image {
    Image::from_fn(w, h, format, |_, _| {
        let v = rng.next_u64().to_le_bytes();
        [v[0], v[1], v[2], v[3]]
    })
}

pub fn random_format(rng: &mut RngStream) -> PixelFormat {
    FORMATS[rng.int(0, 2).unwrap() as usize]
}

/// Writes a synthetic digit-like corpus: `classes` folders of `per_class`
/// 28x28 grey strokes.
pub fn write_digit_corpus(root: &Path, classes: u32, per_class: u32) {
    let mut rng = RngStream::from_seed(0xd161);
    for c in 0..classes {
        let dir = root.join(c.to_string());
        std::fs::create_dir_all(&dir).unwrap();
        for i in 0..per_class {
            let img = digit_like(&mut rng, c);
            pipeaug::save_image(&img, &dir.join(format!("{c}_{i:04}.png")), pipeaug::OutputFormat::Png).unwrap();
        }
    }
}

fn digit_like(rng: &mut RngStream, class: u32) -> Image {
    let cx = 14.0 + rng.real(-2.0, 2.0).unwrap();
    let cy = 14.0 + rng.real(-2.0, 2.0).unwrap();
    let r = 6.0 + rng.real(0.0, 3.0).unwrap();
    let phase = class as f64 * 0.6;
    Image::from_fn(28, 28, PixelFormat::Gray8, |x, y| {
        let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
        let ring = ((dx.hypot(dy) - r).abs() < 1.6) && (dy.atan2(dx) + phase).sin() > -0.5;
        let bar = class % 2 == 1 && (dx - dy * 0.2).abs() < 1.2 && dy.abs() < r;
        [if ring || bar { 255 } else { 0 }, 0, 0, 0]
    })
}

/// Every file under `root`, keyed by relative path.
pub fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    walkdir::WalkDir::new(root)
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().to_path_buf();
            (rel, std::fs::read(e.path()).unwrap())
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Geometry oracles

fn rotate_about(p: Point, c: Point, theta_deg: f64) -> Point {
    let (s, co) = theta_deg.to_radians().sin_cos();
    let (dx, dy) = (p.x - c.x, p.y - c.y);
    Point::new(c.x + co * dx + s * dy, c.y - s * dx + co * dy)
}

/// Whether a `rw x rh` rectangle centred in the rotated frame maps back inside
/// the `w x h` source.
pub fn centred_rect_inside(w: u32, h: u32, theta_deg: f64, rw: f64, rh: f64, eps: f64) -> bool {
    let (w, h) = (w as f64, h as f64);
    let c = Point::new(w / 2.0, h / 2.0);
    [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
        .iter()
        .all(|&(sx, sy)| {
            let q = rotate_about(Point::new(c.x + sx * rw / 2.0, c.y + sy * rh / 2.0), c, theta_deg);
            q.x >= -eps && q.x <= w + eps && q.y >= -eps && q.y <= h + eps
        })
}

/// Largest centred same-aspect scale found by bisection on the containment test.
pub fn bisect_scale(w: u32, h: u32, theta: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0 + 1e-9);
    for _ in 0..80 {
        let k = (lo + hi) / 2.0;
        if centred_rect_inside(w, h, theta, k * w as f64, k * h as f64, 0.0) {
            lo = k;
        } else {
            hi = k;
        }
    }
    lo
}

/// Whether the floored inscribed crop would be narrower than one pixel.
pub fn crop_collapses(w: u32, h: u32, theta: f64) -> bool {
    let k = bisect_scale(w, h, theta);
    k * (w.min(h) as f64) < 1.0
}

pub fn check_inscribed(w: u32, h: u32, theta: f64) -> Result<(), String> {
    let r = geometry::inscribed_crop_rect(w, h, theta).map_err(|e| e.to_string())?;
    let k = geometry::inscribed_scale(w, h, theta).map_err(|e| e.to_string())?;
    if !centred_rect_inside(w, h, theta, r.w as f64, r.h as f64, 1e-9) {
        return Err(format!("{r:?} leaves the rotated source"));
    }
    if centred_rect_inside(w, h, theta, (k + 1e-3) * w as f64, (k + 1e-3) * h as f64, 0.0) {
        return Err(format!("k + 1e-3 still fits (k = {k})"));
    }
    // Floor rounding is the only slack allowed.
    if (r.w as f64) + 1.0 <= k * w as f64 || (r.h as f64) + 1.0 <= k * h as f64 {
        return Err(format!("{r:?} lost more than floor rounding (k = {k})"));
    }
    let (bw, bh) = geometry::rotated_bounds(w, h, theta);
    if r.x + r.w > bw || r.y + r.h > bh {
        return Err(format!("{r:?} exceeds the {bw}x{bh} bounding box"));
    }
    Ok(())
}

/// Coverage of an axis-aligned rect in the sheared plane: every corner must
/// shear back inside the source. The region is convex, so corners suffice.
#[allow(clippy::too_many_arguments)]
pub fn shear_rect_covered(w: u32, h: u32, axis: Axis, t: f64, x: f64, y: f64, rw: f64, rh: f64) -> bool {
    let (w, h) = (w as f64, h as f64);
    [(x, y), (x + rw, y), (x + rw, y + rh), (x, y + rh)]
        .iter()
        .all(|&(px, py)| {
            let (sx, sy) = match axis {
                Axis::X => (px - t * py, py),
                Axis::Y => (px, py - t * px),
            };
            sx >= -1e-9 && sx <= w + 1e-9 && sy >= -1e-9 && sy <= h + 1e-9
        })
}

pub fn check_shear(w: u32, h: u32, axis: Axis, t: f64) -> Result<(), String> {
    let r = geometry::shear_crop_rect(w, h, axis, t).map_err(|e| e.to_string())?;
    let (x, y, rw, rh) = (r.x as f64, r.y as f64, r.w as f64, r.h as f64);
    if !shear_rect_covered(w, h, axis, t, x, y, rw, rh) {
        return Err(format!("{r:?} not covered"));
    }
    // Widen by 2 pixels on the cropped side.
    let widened = match (axis, t > 0.0) {
        (Axis::X, true) => (x - 2.0, y, rw + 2.0, rh),
        (Axis::X, false) => (x, y, rw + 2.0, rh),
        (Axis::Y, true) => (x, y - 2.0, rw, rh + 2.0),
        (Axis::Y, false) => (x, y, rw, rh + 2.0),
    };
    if shear_rect_covered(w, h, axis, t, widened.0, widened.1, widened.2, widened.3) {
        return Err(format!("{r:?} widened by 2 px is still covered"));
    }
    Ok(())
}

fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)).abs() / 2.0
}

/// Smallest area among the four corner triangles.
pub fn min_corner_triangle(q: &Quad) -> f64 {
    let p = q.0;
    [(0, 1, 2), (1, 2, 3), (2, 3, 0), (3, 0, 1)]
        .iter()
        .map(|&(a, b, c)| triangle_area(p[a], p[b], p[c]))
        .fold(f64::INFINITY, f64::min)
}

pub fn random_quad(rng: &mut RngStream, extent: f64, min_area: f64) -> Quad {
    loop {
        let mut pt = || Point::new(rng.real(0.0, extent).unwrap(), rng.real(0.0, extent).unwrap());
        let q = Quad([pt(), pt(), pt(), pt()]);
        if min_corner_triangle(&q) >= min_area {
            return q;
        }
    }
}

pub fn check_homography(src: &Quad, dst: &Quad, scale: f64) -> Result<(), String> {
    let h = geometry::solve_homography(src, dst).map_err(|e| e.to_string())?;
    for i in 0..4 {
        let p = h.apply(dst.0[i]);
        let e = (p.x - src.0[i].x).hypot(p.y - src.0[i].y);
        if e.is_nan() || e >= 1e-9 {
            return Err(format!("corner {i} residual {e:e}"));
        }
    }
    let scaled = |q: &Quad| Quad(q.0.map(|p| Point::new(p.x * scale, p.y * scale)));
    let hs = geometry::solve_homography(&scaled(src), &scaled(dst)).map_err(|e| e.to_string())?;
    for p in dst.0 {
        let a = h.apply(p);
        let b = hs.apply(Point::new(p.x * scale, p.y * scale));
        let e = (b.x / scale - a.x).hypot(b.y / scale - a.y);
        if e.is_nan() || e >= 1e-9 {
            return Err(format!("scale {scale} moves mapped point {p:?} -> {a:?} by {e:e}"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// No-fill probes

/// Source coordinates outside `[0, W] x [0, H]` seen while warping a `w x h` image.
pub fn probe_violations(w: u32, h: u32, mapping: &Mapping) -> usize {
    let img = Image::filled(w, h, PixelFormat::Gray8, &[7]);
    let (fw, fh) = (w as f64, h as f64);
    let mut bad = 0;
    warp::warp_with_probe(&img, mapping, w, h, Filter::Bilinear, |x, y| {
        if !(x >= 0.0 && x <= fw && y >= 0.0 && y <= fh) {
            bad += 1;
        }
    })
    .expect("warp");
    bad
}

pub fn rotate_probe(w: u32, h: u32, theta: f64) -> usize {
    let m = ops::rotate_mapping(w, h, theta).expect("valid angle");
    probe_violations(w, h, &Mapping::Affine(m))
}

pub fn shear_probe(w: u32, h: u32, axis: Axis, angle: f64) -> usize {
    let m = ops::shear_mapping(w, h, axis, angle).expect("valid shear");
    probe_violations(w, h, &Mapping::Affine(m))
}

pub fn skew_probe(w: u32, h: u32, kind: SkewKind, d: u32) -> usize {
    let m = ops::skew_mapping(w, h, kind, d).expect("valid skew");
    probe_violations(w, h, &m)
}

pub const SKEW_KINDS: [SkewKind; 4] = [SkewKind::Forward, SkewKind::Backward, SkewKind::Left, SkewKind::Right];

/// Largest shear angle (degrees) valid for every axis of a `w x h` image.
pub fn max_shear_angle(w: u32, h: u32) -> f64 {
    let r = (w.min(h) as f64 - 1.0) / w.max(h) as f64;
    r.atan().to_degrees().min(44.0)
}

// ---------------------------------------------------------------------------
// Kernel catalogue

use pipeaug::ops::{AxisChoice, CardinalChoice, FlipAxis, FlipChoice, QuarterTurn, SkewChoice};
use pipeaug::{OpKind, OpSpec};

/// One always-applied spec per operation kind, parameters drawn from `rng`
/// within the ranges valid for a `w x h` input.
pub fn op_catalogue(rng: &mut RngStream, w: u32, h: u32) -> Vec<OpSpec> {
    let mut real = |lo: f64, hi: f64| rng.real(lo, hi).unwrap();
    let kinds = vec![
        OpKind::Rotate {
            max_left: real(0.0, 45.0),
            max_right: real(0.0, 45.0),
        },
        OpKind::RotateCardinal {
            which: CardinalChoice::Random,
        },
        OpKind::Flip {
            axis: FlipChoice::Random,
        },
        OpKind::Shear {
            max_angle: real(0.0, max_shear_angle(w, h)),
            axis: AxisChoice::Random,
        },
        OpKind::Skew {
            severity: real(0.01, 1.0),
            kind: SkewChoice::Random,
        },
        OpKind::Elastic {
            grid_width: real(1.0, 7.0) as u32,
            grid_height: real(1.0, 7.0) as u32,
            magnitude: real(0.0, 11.0) as u32,
        },
        OpKind::Zoom {
            min_factor: 1.0,
            max_factor: real(1.0, 2.5),
        },
        OpKind::CropRandom {
            area_fraction: real(0.05, 1.0),
            resize_back: real(0.0, 1.0) < 0.5,
        },
        OpKind::CropCentre {
            width: real(1.0, w as f64 + 1.0) as u32,
            height: real(1.0, h as f64 + 1.0) as u32,
        },
        OpKind::Resize {
            width: real(1.0, 64.0) as u32,
            height: real(1.0, 64.0) as u32,
        },
        OpKind::Scale { factor: real(0.2, 3.0) },
        OpKind::Greyscale,
        OpKind::Invert,
        OpKind::Equalize,
    ];
    kinds.into_iter().map(|k| OpSpec::new(1.0, k)).collect()
}

/// The value a pixel-wise kernel assigns to a constant pixel.
fn expected_constant(kind: &OpKind, format: PixelFormat, v: &[u8]) -> (PixelFormat, Vec<u8>) {
    let colour = format.colour_channels();
    match kind {
        OpKind::Invert => (
            format,
            v.iter()
                .enumerate()
                .map(|(i, &c)| if i < colour { 255 - c } else { c })
                .collect(),
        ),
        OpKind::Greyscale if format != PixelFormat::Gray8 => {
            let y = 0.299 * v[0] as f64 + 0.587 * v[1] as f64 + 0.114 * v[2] as f64;
            (PixelFormat::Gray8, vec![pipeaug::clamp_round(y)])
        }
        _ => (format, v.to_vec()),
    }
}

/// Applies `spec` to a constant image and checks the result is constant with
/// the expected value. Tolerance 0.
pub fn check_constancy(spec: &OpSpec, img: &Image, rng: &mut RngStream, filter: Filter) -> Result<(), String> {
    let v = img.constant_value().expect("constant input").to_vec();
    let (out, app) = pipeaug::apply_op(spec, img, rng, filter).map_err(|e| e.to_string())?;
    let (format, want) = expected_constant(&spec.kind, img.format(), &v);
    if out.format() != format {
        return Err(format!("{} changed format to {}", spec.name(), out.format()));
    }
    match out.constant_value() {
        Some(got) if got == want.as_slice() => Ok(()),
        got => Err(format!(
            "{} {:?} on {v:?}: got {got:?}, want {want:?}",
            spec.name(),
            app.params
        )),
    }
}

/// Each identity or involution as `(name, holds)`, checked bit-exact on `img`.
pub fn identity_cases(img: &Image) -> Vec<(&'static str, bool)> {
    use pipeaug::warp::DisplacementGrid;
    let (w, h) = img.dimensions();
    let f = Filter::Bilinear;
    let same = |r: Result<Image, ops::KernelError>| r.map(|o| &o == img).unwrap_or(false);
    let mut rng = RngStream::from_seed(1);
    let elastic_zero = ops::elastic(img, 4, 4, 0, &mut rng, f);
    let mesh_zero = warp::warp_mesh(img, &DisplacementGrid::zero(4, 4).unwrap(), f);
    let rot0 = ops::rotate_mapping(w, h, 0.0).unwrap();
    let shear0 = ops::shear_mapping(w, h, Axis::X, 0.0).unwrap();
    let mut quarter = img.clone();
    for _ in 0..4 {
        quarter = ops::rotate_cardinal(&quarter, QuarterTurn::R90);
    }
    let half = ops::rotate_cardinal(&ops::rotate_cardinal(img, QuarterTurn::R180), QuarterTurn::R180);
    vec![
        ("zero-magnitude elastic", same(elastic_zero)),
        ("zero-grid mesh warp", mesh_zero.map(|o| &o == img).unwrap_or(false)),
        ("zero-angle rotate", same(ops::rotate_arbitrary(img, 0.0, f))),
        (
            "zero-angle rotate map",
            warp::warp_affine(img, &rot0, w, h, f)
                .map(|o| &o == img)
                .unwrap_or(false),
        ),
        ("zero-angle shear", same(ops::shear(img, Axis::Y, 0.0, f))),
        (
            "zero-angle shear map",
            warp::warp_affine(img, &shear0, w, h, f)
                .map(|o| &o == img)
                .unwrap_or(false),
        ),
        ("d=0 skew", same(ops::skew(img, SkewKind::Left, 0, f))),
        ("f=1 zoom", same(ops::zoom(img, 1.0, f))),
        (
            "same-size bilinear resize",
            warp::resize(img, w, h, f).map(|o| &o == img).unwrap_or(false),
        ),
        (
            "same-size resize map",
            warp::warp_affine(img, &warp::resize_mapping(w, h, w, h), w, h, f)
                .map(|o| &o == img)
                .unwrap_or(false),
        ),
        (
            "double horizontal flip",
            &ops::flip(&ops::flip(img, FlipAxis::Horizontal), FlipAxis::Horizontal) == img,
        ),
        (
            "double vertical flip",
            &ops::flip(&ops::flip(img, FlipAxis::Vertical), FlipAxis::Vertical) == img,
        ),
        ("double invert", &ops::invert(&ops::invert(img)) == img),
        ("quadruple rotate-90", &quarter == img),
        ("double rotate-180", &half == img),
    ]
}
