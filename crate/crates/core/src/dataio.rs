//! Image codecs (8-bit PNG, binary PPM/PGM), dataset scanning and output sinks.

use std::fs;
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;
use walkdir::WalkDir;

use crate::image::{Image, PixelFormat};
use crate::pipeline::{ImageSource, Sink};

/// Class label of files sitting directly in the dataset root.
pub const FLAT_LABEL: &str = "·";

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";
const EXTENSIONS: [&str; 3] = ["png", "ppm", "pgm"];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("decode error: {0}")]
    Decode(String),
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("cannot encode {format} image as {target}")]
    Format { format: PixelFormat, target: &'static str },
    #[error("no png/ppm/pgm images found under {0}")]
    EmptyDataset(PathBuf),
    #[error("{0} already exists (use --overwrite to replace)")]
    Collision(PathBuf),
}

impl DataError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn with_path(self, path: &Path) -> Self {
        match self {
            DataError::Decode(m) => DataError::Decode(format!("{}: {m}", path.display())),
            DataError::Unsupported(m) => DataError::Unsupported(format!("{}: {m}", path.display())),
            other => other,
        }
    }
}

/// Container format of a file on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    Png,
    Ppm,
    Pgm,
}

/// Encoding used when saving images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Png,
    /// Binary PPM for colour images, PGM for greyscale.
    Ppm,
}

impl OutputFormat {
    pub fn extension(self, format: PixelFormat) -> &'static str {
        match (self, format) {
            (OutputFormat::Png, _) => "png",
            (OutputFormat::Ppm, PixelFormat::Gray8) => "pgm",
            (OutputFormat::Ppm, _) => "ppm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub path: PathBuf,
    pub image: Image,
    pub format: SourceFormat,
}

// ---------------------------------------------------------------------------
// PNG

fn png_err(e: png::DecodingError) -> DataError {
    DataError::Decode(e.to_string())
}

pub fn decode_png(bytes: &[u8]) -> Result<Image, DataError> {
    use png::{BitDepth, ColorType};
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let info = reader.info();
    let (width, height, color, depth) = (info.width, info.height, info.color_type, info.bit_depth);
    if info.interlaced {
        return Err(DataError::Unsupported("interlaced PNG".into()));
    }
    let palette = info.palette.as_ref().map(|p| p.to_vec());
    let indexed_depth_ok = color == ColorType::Indexed && depth != BitDepth::Sixteen;
    if depth != BitDepth::Eight && !indexed_depth_ok {
        return Err(DataError::Unsupported(format!("{depth:?}-bit {color:?} PNG")));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| DataError::Decode("image too large".into()))?;
    let mut buf = vec![0; size];
    let frame = reader.next_frame(&mut buf).map_err(png_err)?;
    buf.truncate(frame.buffer_size());
    let line = frame.line_size;
    let (format, pixels) = match color {
        ColorType::Grayscale => (PixelFormat::Gray8, buf),
        ColorType::Rgb => (PixelFormat::Rgb8, buf),
        ColorType::Rgba => (PixelFormat::Rgba8, buf),
        ColorType::GrayscaleAlpha => {
            let px = buf
                .chunks_exact(2)
                .flat_map(|ga| [ga[0], ga[0], ga[0], ga[1]])
                .collect();
            (PixelFormat::Rgba8, px)
        }
        ColorType::Indexed => {
            let palette = palette.ok_or_else(|| DataError::Decode("indexed PNG without PLTE".into()))?;
            let bits = depth as usize;
            let mut px = Vec::with_capacity(width as usize * height as usize * 3);
            for row in buf.chunks_exact(line) {
                for x in 0..width as usize {
                    let bit = x * bits;
                    let byte = row[bit / 8];
                    let shift = 8 - bits - bit % 8;
                    let idx = ((byte >> shift) & ((1u16 << bits) - 1) as u8) as usize;
                    let rgb = palette
                        .get(idx * 3..idx * 3 + 3)
                        .ok_or_else(|| DataError::Decode(format!("palette index {idx} out of range")))?;
                    px.extend_from_slice(rgb);
                }
            }
            (PixelFormat::Rgb8, px)
        }
    };
    Image::from_raw(width, height, format, pixels).map_err(|e| DataError::Decode(e.to_string()))
}

pub fn encode_png(img: &Image) -> Result<Vec<u8>, DataError> {
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, img.width(), img.height());
    enc.set_color(match img.format() {
        PixelFormat::Gray8 => png::ColorType::Grayscale,
        PixelFormat::Rgb8 => png::ColorType::Rgb,
        PixelFormat::Rgba8 => png::ColorType::Rgba,
    });
    enc.set_depth(png::BitDepth::Eight);
    let encode_err = |e: png::EncodingError| DataError::Decode(format!("PNG encoding failed: {e}"));
    let mut writer = enc.write_header().map_err(encode_err)?;
    writer.write_image_data(img.as_raw()).map_err(encode_err)?;
    writer.finish().map_err(encode_err)?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// PPM / PGM

struct PnmHeader {
    format: PixelFormat,
    width: u32,
    height: u32,
    data_offset: usize,
}

fn parse_pnm_header(bytes: &[u8]) -> Result<PnmHeader, DataError> {
    let format = match bytes.get(..2) {
        Some(b"P5") => PixelFormat::Gray8,
        Some(b"P6") => PixelFormat::Rgb8,
        _ => return Err(DataError::Unsupported("not a binary PPM/PGM file".into())),
    };
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        // Whitespace and comments may separate header fields.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(DataError::Decode("truncated PNM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap_or_default();
        *field = text
            .parse()
            .map_err(|_| DataError::Decode(format!("bad PNM header field at byte {start}")))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(DataError::Decode("truncated PNM header".into())),
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(DataError::Unsupported(format!(
            "PNM maxval {maxval} (only 255 is supported)"
        )));
    }
    if width == 0 || height == 0 {
        return Err(DataError::Decode(format!("PNM dimensions {width}x{height}")));
    }
    Ok(PnmHeader {
        format,
        width,
        height,
        data_offset: pos,
    })
}

pub fn decode_pnm(bytes: &[u8]) -> Result<Image, DataError> {
    let h = parse_pnm_header(bytes)?;
    let len = h.width as usize * h.height as usize * h.format.channels();
    let data = bytes
        .get(h.data_offset..h.data_offset + len)
        .ok_or_else(|| DataError::Decode(format!("truncated PNM data: expected {len} bytes")))?;
    Image::from_raw(h.width, h.height, h.format, data.to_vec()).map_err(|e| DataError::Decode(e.to_string()))
}

/// P6 for RGB, P5 for greyscale.
pub fn encode_pnm(img: &Image) -> Result<Vec<u8>, DataError> {
    let magic = match img.format() {
        PixelFormat::Gray8 => "P5",
        PixelFormat::Rgb8 => "P6",
        PixelFormat::Rgba8 => {
            return Err(DataError::Format {
                format: img.format(),
                target: "ppm",
            })
        }
    };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.as_raw());
    Ok(out)
}

// ---------------------------------------------------------------------------
// Files

pub fn decode_image(bytes: &[u8]) -> Result<(Image, SourceFormat), DataError> {
    if bytes.starts_with(PNG_SIGNATURE) {
        return Ok((decode_png(bytes)?, SourceFormat::Png));
    }
    let img = decode_pnm(bytes)?;
    let tag = match img.format() {
        PixelFormat::Gray8 => SourceFormat::Pgm,
        _ => SourceFormat::Ppm,
    };
    Ok((img, tag))
}

pub fn read_image_record(path: &Path) -> Result<ImageRecord, DataError> {
    let bytes = fs::read(path).map_err(|e| DataError::io(path, e))?;
    let (image, format) = decode_image(&bytes).map_err(|e| e.with_path(path))?;
    Ok(ImageRecord {
        path: path.to_path_buf(),
        image,
        format,
    })
}

pub fn load_image(path: &Path) -> Result<Image, DataError> {
    read_image_record(path).map(|r| r.image)
}

pub fn encode_image(img: &Image, format: OutputFormat) -> Result<Vec<u8>, DataError> {
    match format {
        OutputFormat::Png => encode_png(img),
        OutputFormat::Ppm => encode_pnm(img),
    }
}

/// Encodes and writes `img`, creating missing parent directories.
pub fn save_image(img: &Image, path: &Path, format: OutputFormat) -> Result<(), DataError> {
    let bytes = encode_image(img, format)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| DataError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| DataError::io(path, e))
}

// ---------------------------------------------------------------------------
// Datasets

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetEntry {
    /// Path relative to the dataset root, `/`-separated.
    pub relative: String,
    /// First-level subdirectory, or [`FLAT_LABEL`].
    pub label: String,
}

impl DatasetEntry {
    pub fn stem(&self) -> &str {
        let file = self.relative.rsplit('/').next().unwrap_or(&self.relative);
        file.rsplit_once('.').map_or(file, |(stem, _)| stem)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetIndex {
    pub root: PathBuf,
    pub entries: Vec<DatasetEntry>,
}

impl DatasetIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn path(&self, index: usize) -> PathBuf {
        self.root.join(&self.entries[index].relative)
    }

    /// Distinct labels in sorted order.
    pub fn labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self.entries.iter().map(|e| e.label.clone()).collect();
        labels.dedup();
        labels.sort();
        labels.dedup();
        labels
    }

    /// Entries with the given label, order preserved.
    pub fn subset(&self, label: &str) -> DatasetIndex {
        DatasetIndex {
            root: self.root.clone(),
            entries: self.entries.iter().filter(|e| e.label == label).cloned().collect(),
        }
    }

    /// Decodes every entry into memory.
    pub fn load_all(&self) -> Result<LoadedDataset, DataError> {
        use rayon::prelude::*;
        let images = (0..self.len())
            .into_par_iter()
            .map(|i| load_image(&self.path(i)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LoadedDataset {
            index: self.clone(),
            images,
        })
    }
}

/// Recursively collects `png`/`ppm`/`pgm` files (case-insensitive), sorted by
/// relative path.
pub fn scan_dataset(root: &Path) -> Result<DatasetIndex, DataError> {
    let meta = fs::metadata(root).map_err(|e| DataError::io(root, e))?;
    if !meta.is_dir() {
        return Err(DataError::io(
            root,
            std::io::Error::new(std::io::ErrorKind::InvalidInput, "not a directory"),
        ));
    }
    let mut entries = Vec::new();
    for item in WalkDir::new(root).follow_links(true) {
        let item = item.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            DataError::Io {
                path,
                source: e
                    .into_io_error()
                    .unwrap_or_else(|| std::io::Error::other("walk failed")),
            }
        })?;
        if !item.file_type().is_file() {
            continue;
        }
        let wanted = item
            .path()
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)));
        if !wanted {
            continue;
        }
        let rel = item.path().strip_prefix(root).unwrap_or(item.path());
        let parts: Vec<String> = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        let label = if parts.len() > 1 {
            parts[0].clone()
        } else {
            FLAT_LABEL.to_owned()
        };
        entries.push(DatasetEntry {
            relative: parts.join("/"),
            label,
        });
    }
    if entries.is_empty() {
        return Err(DataError::EmptyDataset(root.to_path_buf()));
    }
    entries.sort_by(|a, b| a.relative.cmp(&b.relative));
    Ok(DatasetIndex {
        root: root.to_path_buf(),
        entries,
    })
}

fn class_dir(entry: &DatasetEntry) -> Option<String> {
    (entry.label != FLAT_LABEL).then(|| entry.label.clone())
}

impl ImageSource for DatasetIndex {
    fn len(&self) -> usize {
        self.entries.len()
    }

    fn source_id(&self, index: usize) -> String {
        self.entries[index].relative.clone()
    }

    fn stem(&self, index: usize) -> String {
        self.entries[index].stem().to_owned()
    }

    fn class_dir(&self, index: usize) -> Option<String> {
        class_dir(&self.entries[index])
    }

    fn load(&self, index: usize) -> Result<Image, Box<dyn std::error::Error + Send + Sync>> {
        Ok(load_image(&self.path(index))?)
    }
}

/// A dataset decoded up front.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub index: DatasetIndex,
    pub images: Vec<Image>,
}

impl ImageSource for LoadedDataset {
    fn len(&self) -> usize {
        self.images.len()
    }

    fn source_id(&self, index: usize) -> String {
        self.index.source_id(index)
    }

    fn stem(&self, index: usize) -> String {
        self.index.stem(index)
    }

    fn class_dir(&self, index: usize) -> Option<String> {
        self.index.class_dir(index)
    }

    fn load(&self, index: usize) -> Result<Image, Box<dyn std::error::Error + Send + Sync>> {
        Ok(self.images[index].clone())
    }
}

/// Writes images under a root directory, refusing to replace existing files
/// unless `overwrite` is set.
#[derive(Debug, Clone)]
pub struct DirSink {
    pub root: PathBuf,
    pub format: OutputFormat,
    pub overwrite: bool,
}

impl DirSink {
    pub fn new(root: impl Into<PathBuf>, format: OutputFormat, overwrite: bool) -> Self {
        DirSink {
            root: root.into(),
            format,
            overwrite,
        }
    }

    fn write_file(&self, relative_name: &str, img: &Image) -> Result<(), DataError> {
        let bytes = encode_image(img, self.format)?;
        let path = self.root.join(relative_name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| DataError::io(parent, e))?;
        }
        let mut opts = fs::OpenOptions::new();
        opts.write(true);
        if self.overwrite {
            opts.create(true).truncate(true);
        } else {
            opts.create_new(true);
        }
        let mut file = opts.open(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                DataError::Collision(path.clone())
            } else {
                DataError::io(&path, e)
            }
        })?;
        file.write_all(&bytes).map_err(|e| DataError::io(&path, e))
    }
}

impl Sink for DirSink {
    fn extension(&self, img: &Image) -> &'static str {
        self.format.extension(img.format())
    }

    fn write(&self, relative_name: &str, img: &Image) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
        Ok(self.write_file(relative_name, img)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(w: u32, h: u32, format: PixelFormat, seed: u32) -> Image {
        Image::from_fn(w, h, format, |x, y| {
            let v = (x.wrapping_mul(2654435761) ^ y.wrapping_mul(40503) ^ seed).wrapping_mul(2246822519);
            v.to_le_bytes()
        })
    }

    #[test]
    fn minimal_pgm() {
        let img = decode_pnm(b"P5\n1 1\n255\n\x00").unwrap();
        assert_eq!(img.format(), PixelFormat::Gray8);
        assert_eq!(img.as_raw(), &[0]);
    }

    #[test]
    fn pnm_header_comments_and_errors() {
        let img = decode_pnm(b"P6 # colour\n2 # w\n1\n255\n\x01\x02\x03\x04\x05\x06").unwrap();
        assert_eq!(img.dimensions(), (2, 1));
        assert_eq!(img.as_raw(), &[1, 2, 3, 4, 5, 6]);
        assert!(matches!(
            decode_pnm(b"P6\n2 1\n255\n\x01\x02"),
            Err(DataError::Decode(_))
        ));
        assert!(matches!(
            decode_pnm(b"P5\n1 1\n65535\n\x00\x00"),
            Err(DataError::Unsupported(_))
        ));
        assert!(matches!(
            decode_pnm(b"P3\n1 1\n255\n0 0 0"),
            Err(DataError::Unsupported(_))
        ));
        assert!(matches!(decode_pnm(b"P5\n1"), Err(DataError::Decode(_))));
    }

    #[test]
    fn rgba_cannot_be_ppm() {
        let img = noise(3, 3, PixelFormat::Rgba8, 1);
        assert!(matches!(encode_pnm(&img), Err(DataError::Format { .. })));
    }

    #[test]
    fn codec_round_trips() {
        for (i, format) in [PixelFormat::Gray8, PixelFormat::Rgb8, PixelFormat::Rgba8]
            .into_iter()
            .enumerate()
        {
            let img = noise(13, 7, format, i as u32);
            assert_eq!(decode_png(&encode_png(&img).unwrap()).unwrap(), img);
            if format != PixelFormat::Rgba8 {
                assert_eq!(decode_pnm(&encode_pnm(&img).unwrap()).unwrap(), img);
            }
        }
    }

    #[test]
    fn png_header_fields() {
        let img = noise(28, 28, PixelFormat::Gray8, 5);
        let bytes = encode_png(&img).unwrap();
        // Independent IHDR parse: signature, length, "IHDR", width, height, depth, colour type.
        assert_eq!(&bytes[..8], PNG_SIGNATURE);
        assert_eq!(&bytes[12..16], b"IHDR");
        assert_eq!(u32::from_be_bytes(bytes[16..20].try_into().unwrap()), 28);
        assert_eq!(u32::from_be_bytes(bytes[20..24].try_into().unwrap()), 28);
        assert_eq!(bytes[24], 8);
        assert_eq!(bytes[25], 0);
    }

    fn encode_raw_png(
        w: u32,
        h: u32,
        color: png::ColorType,
        depth: png::BitDepth,
        data: &[u8],
        palette: Option<&[u8]>,
    ) -> Vec<u8> {
        let mut out = Vec::new();
        let mut enc = png::Encoder::new(&mut out, w, h);
        enc.set_color(color);
        enc.set_depth(depth);
        if let Some(p) = palette {
            enc.set_palette(p.to_vec());
        }
        let mut writer = enc.write_header().unwrap();
        writer.write_image_data(data).unwrap();
        writer.finish().unwrap();
        out
    }

    #[test]
    fn sixteen_bit_png_is_unsupported() {
        let bytes = encode_raw_png(1, 1, png::ColorType::Grayscale, png::BitDepth::Sixteen, &[0, 0], None);
        assert!(matches!(decode_png(&bytes), Err(DataError::Unsupported(_))));
    }

    #[test]
    fn grey_alpha_and_palette_expansion() {
        let bytes = encode_raw_png(
            2,
            1,
            png::ColorType::GrayscaleAlpha,
            png::BitDepth::Eight,
            &[10, 20, 30, 40],
            None,
        );
        let img = decode_png(&bytes).unwrap();
        assert_eq!(img.format(), PixelFormat::Rgba8);
        assert_eq!(img.as_raw(), &[10, 10, 10, 20, 30, 30, 30, 40]);

        let palette = [255, 0, 0, 0, 255, 0, 0, 0, 255, 9, 9, 9];
        // 2-bit indices 0, 1, 2, 3, 1 packed MSB first.
        let bytes = encode_raw_png(
            5,
            1,
            png::ColorType::Indexed,
            png::BitDepth::Two,
            &[0b0001_1011, 0b0100_0000],
            Some(&palette),
        );
        let img = decode_png(&bytes).unwrap();
        assert_eq!(img.format(), PixelFormat::Rgb8);
        assert_eq!(img.as_raw(), &[255, 0, 0, 0, 255, 0, 0, 0, 255, 9, 9, 9, 0, 255, 0]);
    }

    #[test]
    fn truncated_png_is_a_decode_error() {
        let bytes = encode_png(&noise(8, 8, PixelFormat::Rgb8, 2)).unwrap();
        assert!(matches!(
            decode_png(&bytes[..bytes.len() / 2]),
            Err(DataError::Decode(_))
        ));
    }

    #[test]
    fn scanning_and_labels() {
        let dir = tempfile::tempdir().unwrap();
        let flat = dir.path().join("flat");
        for name in ["b.png", "a.PNG", "c.pgm", "notes.txt"] {
            let p = flat.join(name);
            save_image(&noise(2, 2, PixelFormat::Gray8, 0), &p, OutputFormat::Png).unwrap();
        }
        let idx = scan_dataset(&flat).unwrap();
        let rel: Vec<_> = idx.entries.iter().map(|e| e.relative.as_str()).collect();
        assert_eq!(rel, ["a.PNG", "b.png", "c.pgm"]);
        assert!(idx.entries.iter().all(|e| e.label == FLAT_LABEL));
        assert_eq!(idx.entries[0].stem(), "a");

        let classes = dir.path().join("classes");
        for c in ["1", "0"] {
            for i in 0..3 {
                save_image(
                    &noise(2, 2, PixelFormat::Gray8, i),
                    &classes.join(c).join(format!("{i}.ppm")),
                    OutputFormat::Ppm,
                )
                .unwrap();
            }
        }
        let idx = scan_dataset(&classes).unwrap();
        assert_eq!(idx.len(), 6);
        assert_eq!(idx.labels(), ["0", "1"]);
        assert_eq!(idx.entries[0].relative, "0/0.ppm");
        assert_eq!(idx.subset("1").len(), 3);
        assert_eq!(ImageSource::class_dir(&idx, 4).as_deref(), Some("1"));

        let empty = dir.path().join("empty");
        fs::create_dir_all(&empty).unwrap();
        assert!(matches!(scan_dataset(&empty), Err(DataError::EmptyDataset(_))));
        assert!(matches!(
            scan_dataset(&dir.path().join("missing")),
            Err(DataError::Io { .. })
        ));
    }

    #[test]
    fn dir_sink_refuses_collisions() {
        let dir = tempfile::tempdir().unwrap();
        let img = noise(4, 4, PixelFormat::Rgb8, 3);
        let sink = DirSink::new(dir.path(), OutputFormat::Png, false);
        sink.write("c/x.png", &img).unwrap();
        assert_eq!(load_image(&dir.path().join("c/x.png")).unwrap(), img);
        assert!(sink.write("c/x.png", &img).is_err());
        DirSink::new(dir.path(), OutputFormat::Png, true)
            .write("c/x.png", &img)
            .unwrap();
        let ppm = DirSink::new(dir.path(), OutputFormat::Ppm, false);
        assert_eq!(ppm.extension(&noise(1, 1, PixelFormat::Gray8, 0)), "pgm");
        assert_eq!(ppm.extension(&img), "ppm");
    }
}
