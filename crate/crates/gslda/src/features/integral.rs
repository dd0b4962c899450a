use super::GrayImage;
use crate::error::Result;

/// Summed-area table: `table[y][x]` is the exact pixel sum over
/// `[0, y) x [0, x)`; row and column 0 are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    table: Vec<i64>,
}

impl IntegralImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> i64 {
        self.table[y * (self.width + 1) + x]
    }

    /// Sum over `[x0, x1) x [y0, y1)`.
    #[inline]
    pub fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> i64 {
        self.at(x1, y1) - self.at(x0, y1) - self.at(x1, y0) + self.at(x0, y0)
    }
}

pub fn build_integral(image: &GrayImage) -> Result<IntegralImage> {
    let (w, h) = (image.width(), image.height());
    let stride = w + 1;
    let mut table = vec![0i64; stride * (h + 1)];
    for y in 0..h {
        let mut row = 0i64;
        for x in 0..w {
            row += i64::from(image.get(x, y));
            table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row;
        }
    }
    Ok(IntegralImage {
        width: w,
        height: h,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ones_corner() {
        let ii = build_integral(&GrayImage::filled(2, 2, 1).unwrap()).unwrap();
        assert_eq!(ii.at(2, 2), 4);
    }

    #[test]
    fn zeros_table() {
        let ii = build_integral(&GrayImage::filled(5, 3, 0).unwrap()).unwrap();
        for y in 0..=3 {
            for x in 0..=5 {
                assert_eq!(ii.at(x, y), 0);
            }
        }
    }

    #[test]
    fn empty_image_rejected() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
    }

    #[test]
    fn every_rectangle_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let px: Vec<u8> = (0..64).map(|_| rng.random()).collect();
        let img = GrayImage::new(8, 8, px).unwrap();
        let ii = build_integral(&img).unwrap();
        for y0 in 0..=8 {
            for y1 in y0..=8 {
                for x0 in 0..=8 {
                    for x1 in x0..=8 {
                        let mut direct = 0i64;
                        for y in y0..y1 {
                            for x in x0..x1 {
                                direct += i64::from(img.get(x, y));
                            }
                        }
                        assert_eq!(ii.sum(x0, y0, x1, y1), direct);
                    }
                }
            }
        }
    }
}
