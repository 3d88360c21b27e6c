//! Binary silhouette rasters: loading, component isolation and hole filling.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Gray values at or above this are foreground.
pub const FOREGROUND_THRESHOLD: u8 = 128;

/// Smallest component area accepted as a silhouette.
pub const MIN_COMPONENT_AREA: usize = 9;

/// Row-major foreground flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
    holes_filled: usize,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width < 3 || height < 3 || bits.len() != width * height {
            return Err(Error::InvalidDimensions {
                width,
                height,
                expected: width * height,
            });
        }
        Ok(Self {
            width,
            height,
            bits,
            holes_filled: 0,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits)
    }

    /// Thresholds 8-bit gray values at [`FOREGROUND_THRESHOLD`].
    pub fn from_gray(width: usize, height: usize, pixels: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            pixels.iter().map(|&v| v >= FOREGROUND_THRESHOLD).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of enclosed background regions filled during isolation.
    pub fn holes_filled(&self) -> usize {
        self.holes_filled
    }

    /// Foreground flag; coordinates outside the raster are background.
    pub fn get(&self, x: isize, y: isize) -> bool {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return false;
        }
        self.bits[y as usize * self.width + x as usize]
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// 4-connected foreground components, each as a list of pixel indices in
    /// raster order of discovery.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![false; self.bits.len()];
        let mut out = Vec::new();
        for start in 0..self.bits.len() {
            if !self.bits[start] || label[start] {
                continue;
            }
            label[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(idx) = queue.pop_front() {
                for nb in self.neighbors4(idx) {
                    if self.bits[nb] && !label[nb] {
                        label[nb] = true;
                        comp.push(nb);
                        queue.push_back(nb);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    fn neighbors4(&self, idx: usize) -> impl Iterator<Item = usize> {
        let (w, h) = (self.width, self.height);
        let (x, y) = (idx % w, idx / w);
        let mut n = [usize::MAX; 4];
        if x > 0 {
            n[0] = idx - 1;
        }
        if x + 1 < w {
            n[1] = idx + 1;
        }
        if y > 0 {
            n[2] = idx - w;
        }
        if y + 1 < h {
            n[3] = idx + w;
        }
        n.into_iter().filter(|&i| i != usize::MAX)
    }

    /// Keeps only the largest 4-connected component (earliest in raster
    /// order on ties) and fills every background region it encloses.
    pub fn isolate_largest(&self) -> Result<BinaryMask> {
        let comps = self.components();
        if comps.is_empty() {
            return Err(Error::EmptyForeground);
        }
        let best = comps
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.len().cmp(&b.len()).then(ib.cmp(ia)))
            .map(|(_, c)| c)
            .expect("non-empty");
        if best.len() < MIN_COMPONENT_AREA {
            return Err(Error::NoComponent {
                min_area: MIN_COMPONENT_AREA,
            });
        }
        let mut bits = vec![false; self.bits.len()];
        for &i in best {
            bits[i] = true;
        }

        // Background reachable from outside the raster through 4-steps; the
        // rest is enclosed and gets filled.
        let mut outside = vec![false; bits.len()];
        let mut queue = VecDeque::new();
        for idx in 0..bits.len() {
            let (x, y) = (idx % self.width, idx / self.width);
            let border = x == 0 || y == 0 || x + 1 == self.width || y + 1 == self.height;
            if border && !bits[idx] {
                outside[idx] = true;
                queue.push_back(idx);
            }
        }
        while let Some(idx) = queue.pop_front() {
            for nb in self.neighbors4(idx) {
                if !bits[nb] && !outside[nb] {
                    outside[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        let enclosed: Vec<bool> = (0..bits.len()).map(|i| !bits[i] && !outside[i]).collect();
        let holes = BinaryMask {
            width: self.width,
            height: self.height,
            bits: enclosed,
            holes_filled: 0,
        }
        .components()
        .len();
        for (b, o) in bits.iter_mut().zip(&outside) {
            *b = !*o;
        }
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            bits,
            holes_filled: holes,
        })
    }

    /// Writes the mask as a binary portable graymap (foreground 255).
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut buf = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        buf.extend(self.bits.iter().map(|&b| if b { 255u8 } else { 0 }));
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&buf).map_err(|e| Error::io(path, e))
    }
}

/// Reads a grayscale PGM or PNG, thresholds it, isolates the largest
/// component and fills its holes.
pub fn load_mask(path: &Path) -> Result<BinaryMask> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory(&bytes).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let gray = img.to_luma8();
    let (w, h) = gray.dimensions();
    BinaryMask::from_gray(w as usize, h as usize, gray.as_raw())?.isolate_largest()
}
