use crate::error::{Error, Result};

/// A raster frame: row-major, interleaved channels, 8 bits per sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
    index: usize,
}

impl Frame {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>, index: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch {
                expected: "width, height >= 1".into(),
                found: format!("{width}x{height}"),
            });
        }
        if channels != 1 && channels != 3 {
            return Err(Error::DimensionMismatch {
                expected: "1 or 3 channels".into(),
                found: format!("{channels} channels"),
            });
        }
        if data.len() != width * height * channels {
            return Err(Error::DimensionMismatch {
                expected: format!("{} samples", width * height * channels),
                found: format!("{} samples", data.len()),
            });
        }
        Ok(Frame {
            width,
            height,
            channels,
            data,
            index,
        })
    }

    /// A frame filled with a single gray value.
    pub fn filled(width: usize, height: usize, value: u8, index: usize) -> Result<Self> {
        Frame::new(width, height, 1, vec![value; width * height], index)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn set_index(&mut self, index: usize) {
        self.index = index;
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn is_gray(&self) -> bool {
        self.channels == 1
    }

    pub fn same_dims(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn dims_string(&self) -> String {
        format!("{}x{}x{}", self.width, self.height, self.channels)
    }

    /// Sample at (x, y, channel).
    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// RGB triple at (x, y); gray frames replicate the single channel.
    #[inline]
    pub fn rgb(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * self.channels;
        if self.channels == 1 {
            let v = self.data[i];
            [v, v, v]
        } else {
            [self.data[i], self.data[i + 1], self.data[i + 2]]
        }
    }

    /// Integer luma with 77/150/29 weights over 256. Gray frames are cloned.
    pub fn to_luma(&self) -> Frame {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self.data.chunks_exact(3).map(|p| luma(p[0], p[1], p[2])).collect();
        Frame {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
            index: self.index,
        }
    }
}

#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    ((77 * r as u32 + 150 * g as u32 + 29 * b as u32 + 128) >> 8) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(Frame::new(0, 4, 1, vec![], 0).is_err());
        assert!(Frame::new(2, 2, 2, vec![0; 8], 0).is_err());
        assert!(Frame::new(2, 2, 1, vec![0; 3], 0).is_err());
    }

    #[test]
    fn luma_extremes() {
        assert_eq!(luma(0, 0, 0), 0);
        assert_eq!(luma(255, 255, 255), 255);
        let f = Frame::new(1, 1, 3, vec![255, 0, 0], 3).unwrap().to_luma();
        assert_eq!(f.data(), &[77]);
        assert_eq!(f.index(), 3);
    }
}
