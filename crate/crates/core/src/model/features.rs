use crate::{Error, Result};

/// Dense (height, width, channels) tensor stored channel-last.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTensor {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl FeatureTensor {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        FeatureTensor {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn from_vec(shape: (usize, usize, usize), data: Vec<f64>) -> Result<Self> {
        let (height, width, channels) = shape;
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch {
                expected: vec![height, width, channels],
                actual: vec![data.len()],
            });
        }
        Ok(FeatureTensor {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize, ch: usize) -> usize {
        (row * self.width + col) * self.channels + ch
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[self.index(row, col, ch)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, v: f64) {
        let i = self.index(row, col, ch);
        self.data[i] = v;
    }

    /// Number of ones in channel `ch`.
    pub fn plane_count(&self, ch: usize) -> usize {
        (0..self.height)
            .flat_map(|r| (0..self.width).map(move |c| (r, c)))
            .filter(|&(r, c)| self.get(r, c, ch) != 0.0)
            .count()
    }
}
