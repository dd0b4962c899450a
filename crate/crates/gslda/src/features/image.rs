use crate::error::{Error, Result};

/// 8-bit grayscale image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Copies the `w x h` region at `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<GrayImage> {
        if x + w > self.width || y + h > self.height {
            return Err(Error::OutOfBounds);
        }
        let mut out = Vec::with_capacity(w * h);
        for row in y..y + h {
            out.extend_from_slice(&self.pixels[row * self.width + x..row * self.width + x + w]);
        }
        GrayImage::new(w, h, out)
    }

    /// Nearest-neighbour resample to `w x h`.
    pub fn resize_nearest(&self, w: usize, h: usize) -> Result<GrayImage> {
        if w == 0 || h == 0 {
            return Err(Error::EmptyImage);
        }
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h {
            let sy = (y * self.height) / h;
            for x in 0..w {
                let sx = (x * self.width) / w;
                out.push(self.get(sx, sy));
            }
        }
        GrayImage::new(w, h, out)
    }

    /// Horizontal mirror.
    pub fn mirrored(&self) -> GrayImage {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                out.set(x, y, self.get(self.width - 1 - x, y));
            }
        }
        out
    }
}
