use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Largest palette that still fits one base-36 digit per pixel.
pub const MAX_PALETTE: u8 = 36;

/// A `k × k` grid of palette indices; `0` is background.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "String", into = "String")
)]
pub struct ToyImage {
    k: usize,
    pixels: Vec<u8>,
}

impl ToyImage {
    pub fn new(k: usize, pixels: Vec<u8>) -> Result<Self> {
        if k == 0 || pixels.len() != k * k {
            return Err(Error::Config(format!("a {k}x{k} image needs {} pixels, got {}", k * k, pixels.len())));
        }
        if let Some(v) = pixels.iter().find(|&&v| v >= MAX_PALETTE) {
            return Err(Error::Config(format!("pixel value {v} is too large")));
        }
        Ok(ToyImage { k, pixels })
    }

    /// Row-major base-36 digits, one per pixel; the length must be a square.
    pub fn from_digits(s: &str) -> Result<Self> {
        let pixels = s
            .chars()
            .map(|ch| {
                ch.to_digit(36)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::Config(format!("`{ch}` is not a pixel digit")))
            })
            .collect::<Result<Vec<_>>>()?;
        let k = (0..=pixels.len()).find(|k| k * k >= pixels.len()).unwrap_or(0);
        ToyImage::new(k, pixels)
    }

    pub fn to_digits(&self) -> String {
        self.pixels
            .iter()
            .map(|&v| char::from_digit(v as u32, 36).expect("pixel below 36"))
            .collect()
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.pixels[r * self.k + c]
    }

    pub fn max_value(&self) -> u8 {
        self.pixels.iter().copied().max().unwrap_or(0)
    }

    fn remap(&self, f: impl Fn(usize, usize) -> u8) -> ToyImage {
        let k = self.k;
        let pixels = (0..k * k).map(|i| f(i / k, i % k)).collect();
        ToyImage { k, pixels }
    }

    pub fn map_values(&self, f: impl Fn(u8) -> u8) -> ToyImage {
        ToyImage { k: self.k, pixels: self.pixels.iter().map(|&v| f(v)).collect() }
    }

    /// Quarter turn counter-clockwise.
    pub fn rotate_ccw(&self) -> ToyImage {
        let k = self.k;
        self.remap(|r, c| self.get(c, k - 1 - r))
    }

    pub fn rotate_quarters(&self, quarters: usize) -> ToyImage {
        (0..quarters % 4).fold(self.clone(), |img, _| img.rotate_ccw())
    }

    /// Mirror left-right.
    pub fn hflip(&self) -> ToyImage {
        self.remap(|r, c| self.get(r, self.k - 1 - c))
    }

    /// Mirror top-bottom.
    pub fn vflip(&self) -> ToyImage {
        self.remap(|r, c| self.get(self.k - 1 - r, c))
    }

    /// Output quadrant `i` (TL, TR, BL, BR) takes input quadrant `perm[i]`.
    pub fn permute_quadrants(&self, perm: &[usize; 4]) -> Option<ToyImage> {
        if !self.k.is_multiple_of(2) {
            return None;
        }
        let h = self.k / 2;
        Some(self.remap(|r, c| {
            let src = perm[(r / h) * 2 + c / h];
            self.get((src / 2) * h + r % h, (src % 2) * h + c % h)
        }))
    }

    fn mean_over(&self, cells: impl Iterator<Item = (usize, usize)>) -> u8 {
        let (mut sum, mut n) = (0u32, 0u32);
        for (r, c) in cells {
            sum += self.get(r, c) as u32;
            n += 1;
        }
        // round half up
        ((2 * sum + n) / (2 * n)) as u8
    }

    /// Mean over the 2×2 window anchored at each pixel, truncated at the border.
    pub fn box_blur(&self) -> ToyImage {
        let k = self.k;
        self.remap(|r, c| {
            self.mean_over((r..(r + 2).min(k)).flat_map(move |rr| (c..(c + 2).min(k)).map(move |cc| (rr, cc))))
        })
    }

    /// Mean over each pixel and its in-grid 4-neighbours.
    pub fn plus_blur(&self) -> ToyImage {
        let k = self.k as isize;
        self.remap(|r, c| {
            let (r, c) = (r as isize, c as isize);
            self.mean_over(
                [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)]
                    .into_iter()
                    .map(move |(dr, dc)| (r + dr, c + dc))
                    .filter(|&(rr, cc)| rr >= 0 && cc >= 0 && rr < k && cc < k)
                    .map(|(rr, cc)| (rr as usize, cc as usize)),
            )
        })
    }

    /// Every pixel set to the global mean.
    pub fn mean_blur(&self) -> ToyImage {
        let k = self.k;
        let m = self.mean_over((0..k * k).map(|i| (i / k, i % k)));
        ToyImage { k, pixels: alloc::vec![m; k * k] }
    }
}

impl TryFrom<String> for ToyImage {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        ToyImage::from_digits(&s)
    }
}

impl From<ToyImage> for String {
    fn from(img: ToyImage) -> String {
        img.to_digits()
    }
}
