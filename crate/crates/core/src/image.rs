//! 8-bit raster images and channel quantisation.

use std::fmt;

use thiserror::Error;

/// Channel layout of an [`Image`]. All channels are 8-bit unsigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PixelFormat {
    Gray8,
    Rgb8,
    Rgba8,
}

impl PixelFormat {
    pub const fn channels(self) -> usize {
        match self {
            PixelFormat::Gray8 => 1,
            PixelFormat::Rgb8 => 3,
            PixelFormat::Rgba8 => 4,
        }
    }

    /// Number of colour (non-alpha) channels.
    pub const fn colour_channels(self) -> usize {
        match self {
            PixelFormat::Gray8 => 1,
            PixelFormat::Rgb8 | PixelFormat::Rgba8 => 3,
        }
    }

    pub const fn has_alpha(self) -> bool {
        matches!(self, PixelFormat::Rgba8)
    }
}

impl fmt::Display for PixelFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PixelFormat::Gray8 => "gray8",
            PixelFormat::Rgb8 => "rgb8",
            PixelFormat::Rgba8 => "rgba8",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyDimensions { width: u32, height: u32 },
    #[error("buffer holds {actual} bytes but {width}x{height} {format} needs {expected}")]
    BufferSize {
        width: u32,
        height: u32,
        format: PixelFormat,
        expected: usize,
        actual: usize,
    },
}

/// A row-major, channel-interleaved 8-bit raster.
///
/// Pixel `(i, j)` covers the unit square `[i, i+1) x [j, j+1)` of the continuous
/// plane, so its centre sits at `(i + 0.5, j + 0.5)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: u32,
    height: u32,
    format: PixelFormat,
    pixels: Vec<u8>,
}

impl Image {
    pub fn from_raw(width: u32, height: u32, format: PixelFormat, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        let expected = width as usize * height as usize * format.channels();
        if pixels.len() != expected {
            return Err(ImageError::BufferSize {
                width,
                height,
                format,
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Image {
            width,
            height,
            format,
            pixels,
        })
    }

    /// An image with every channel of every pixel set to the given values.
    ///
    /// Panics if `width` or `height` is zero or `value` does not match the format.
    pub fn filled(width: u32, height: u32, format: PixelFormat, value: &[u8]) -> Self {
        assert_eq!(value.len(), format.channels(), "fill value / format mismatch");
        assert!(width > 0 && height > 0, "image must be at least 1x1");
        let pixels = value
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * format.channels())
            .collect();
        Image {
            width,
            height,
            format,
            pixels,
        }
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn<F>(width: u32, height: u32, format: PixelFormat, mut f: F) -> Self
    where
        F: FnMut(u32, u32) -> [u8; 4],
    {
        assert!(width > 0 && height > 0, "image must be at least 1x1");
        let ch = format.channels();
        let mut pixels = Vec::with_capacity(width as usize * height as usize * ch);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y)[..ch]);
            }
        }
        Image {
            width,
            height,
            format,
            pixels,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn format(&self) -> PixelFormat {
        self.format
    }

    pub fn channels(&self) -> usize {
        self.format.channels()
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels()
    }

    /// Channels of pixel `(x, y)`. Panics when out of range.
    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of range");
        let o = self.offset(x, y);
        &self.pixels[o..o + self.channels()]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: u32, y: u32) -> &mut [u8] {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of range");
        let o = self.offset(x, y);
        let ch = self.channels();
        &mut self.pixels[o..o + ch]
    }

    /// Channel value with clamp-to-edge addressing for out-of-range indices.
    #[inline]
    pub(crate) fn channel_clamped(&self, x: i64, y: i64, c: usize) -> u8 {
        let xi = x.clamp(0, self.width as i64 - 1) as usize;
        let yi = y.clamp(0, self.height as i64 - 1) as usize;
        self.pixels[(yi * self.width as usize + xi) * self.channels() + c]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, u8> {
        self.pixels.chunks_exact(self.width as usize * self.channels())
    }

    /// `Some(values)` when every pixel carries the same channel values.
    pub fn constant_value(&self) -> Option<&[u8]> {
        let ch = self.channels();
        let first = &self.pixels[..ch];
        self.pixels.chunks_exact(ch).all(|p| p == first).then_some(first)
    }
}

impl fmt::Debug for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Image")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("format", &self.format)
            .finish_non_exhaustive()
    }
}

/// Quantises a real channel value: round half away from zero, then clamp to `[0, 255]`.
#[inline]
pub fn clamp_round(value: f64) -> u8 {
    if value.is_nan() {
        return 0;
    }
    value.round().clamp(0.0, 255.0) as u8
}
