//! Gray-code Sobol sequence with Joe–Kuo direction numbers.

use crate::error::{Error, Result};

const BITS: usize = 32;

/// `(degree, a, initial m)` for dimensions 2 onwards (new-joe-kuo-6.21201).
const DIRECTIONS: [(u32, u32, &[u32]); 20] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
    (7, 4, &[1, 3, 7, 13, 13, 15, 69]),
];

/// Highest supported dimension.
pub const MAX_DIMENSION: usize = DIRECTIONS.len() + 1;

#[derive(Clone, Debug)]
pub struct SobolSampler {
    /// `v[j][k]`: direction number `k` of dimension `j`, scaled to 32 bits.
    v: Vec<[u32; BITS]>,
    x: Vec<u32>,
    index: u64,
}

impl SobolSampler {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 || dimension > MAX_DIMENSION {
            return Err(Error::InvalidArgument(format!(
                "Sobol dimension {dimension} outside 1..={MAX_DIMENSION}"
            )));
        }
        let mut v = Vec::with_capacity(dimension);
        let mut first = [0u32; BITS];
        for (k, slot) in first.iter_mut().enumerate() {
            *slot = 1 << (BITS - 1 - k);
        }
        v.push(first);
        for &(s, a, init) in DIRECTIONS.iter().take(dimension - 1) {
            let s = s as usize;
            let mut m = [0u32; BITS];
            m[..s].copy_from_slice(init);
            for k in s..BITS {
                let mut next = m[k - s] ^ (m[k - s] << s);
                for l in 1..s {
                    if (a >> (s - 1 - l)) & 1 == 1 {
                        next ^= m[k - l] << l;
                    }
                }
                m[k] = next;
            }
            let mut dir = [0u32; BITS];
            for k in 0..BITS {
                dir[k] = m[k] << (BITS - 1 - k);
            }
            v.push(dir);
        }
        Ok(Self {
            v,
            x: vec![0; dimension],
            index: 0,
        })
    }

    pub fn dimension(&self) -> usize {
        self.v.len()
    }

    /// Next point; the first call returns point 1 (the origin is skipped).
    pub fn next_point(&mut self) -> Vec<f64> {
        let c = (!self.index).trailing_zeros() as usize;
        assert!(c < BITS, "Sobol sequence exhausted");
        for (x, v) in self.x.iter_mut().zip(&self.v) {
            *x ^= v[c];
        }
        self.index += 1;
        self.x
            .iter()
            .map(|&x| x as f64 / (1u64 << BITS) as f64)
            .collect()
    }
}

impl Iterator for SobolSampler {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        Some(self.next_point())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference points from an independent implementation of the same
    // direction numbers, indexed from 1.
    const DIM21: [(usize, [f64; 21]); 4] = [
        (5, [0.875, 0.875, 0.125, 0.375, 0.875, 0.625, 0.875, 0.375, 0.375, 0.125, 0.375, 0.875, 0.875, 0.125, 0.875, 0.375, 0.875, 0.375, 0.375, 0.625, 0.625]),
        (100, [0.4140625, 0.2578125, 0.7734375, 0.7265625, 0.8828125, 0.7421875, 0.0234375, 0.4765625, 0.6328125, 0.6953125, 0.4609375, 0.6796875, 0.4765625, 0.8515625, 0.3203125, 0.4921875, 0.6796875, 0.7421875, 0.8359375, 0.3359375, 0.7578125]),
        (777, [0.6923828125, 0.9365234375, 0.1630859375, 0.2744140625, 0.6357421875, 0.3564453125, 0.1904296875, 0.7626953125, 0.3486328125, 0.3232421875, 0.7451171875, 0.6962890625, 0.3837890625, 0.4736328125, 0.5693359375, 0.5146484375, 0.4033203125, 0.8642578125, 0.3701171875, 0.7529296875, 0.2373046875]),
        (1023, [0.0009765625, 0.7529296875, 0.6123046875, 0.1455078125, 0.1865234375, 0.4384765625, 0.1396484375, 0.6181640625, 0.3447265625, 0.8505859375, 0.6787109375, 0.0361328125, 0.1298828125, 0.6650390625, 0.3623046875, 0.4638671875, 0.3134765625, 0.8759765625, 0.5849609375, 0.3193359375, 0.8662109375]),
    ];

    #[test]
    fn first_points_dimension_two() {
        let pts: Vec<Vec<f64>> = SobolSampler::new(2).unwrap().take(3).collect();
        assert_eq!(pts, vec![vec![0.5, 0.5], vec![0.75, 0.25], vec![0.25, 0.75]]);
    }

    #[test]
    fn first_point_is_centre() {
        for d in 1..=MAX_DIMENSION {
            assert_eq!(SobolSampler::new(d).unwrap().next_point(), vec![0.5; d]);
        }
    }

    #[test]
    fn matches_reference_in_all_dimensions() {
        let pts: Vec<Vec<f64>> = SobolSampler::new(21).unwrap().take(1023).collect();
        for (k, want) in DIM21 {
            assert_eq!(pts[k - 1], want.to_vec(), "point {k}");
        }
        // lower dimensions are prefixes
        let ten: Vec<Vec<f64>> = SobolSampler::new(10).unwrap().take(100).collect();
        assert_eq!(ten[99], DIM21[1].1[..10].to_vec());
    }

    #[test]
    fn deterministic_and_inside_cube() {
        let a: Vec<Vec<f64>> = SobolSampler::new(8).unwrap().take(500).collect();
        let b: Vec<Vec<f64>> = SobolSampler::new(8).unwrap().take(500).collect();
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn unsupported_dimension() {
        assert!(SobolSampler::new(0).is_err());
        assert!(SobolSampler::new(MAX_DIMENSION + 1).is_err());
    }
}
