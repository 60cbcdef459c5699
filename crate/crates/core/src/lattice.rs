//! Finite periodic lattices with centered minimal-image coordinates.

use crate::error::{Error, Result};

/// A finite periodic lattice `(Z/L_1) x ... x (Z/L_d)`.
///
/// Sites are addressed by a linear index with axis 0 fastest. Coordinates are
/// reported in the centered box `(-L_i/2, L_i/2]` (minimal image), which is
/// the convention used for all weights `|x|` in moments, exponential bounds
/// and characteristic functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    extents: Vec<usize>,
}

impl Lattice {
    /// Create a lattice with the given per-axis side lengths (each `>= 2`).
    pub fn new(extents: &[usize]) -> Result<Self> {
        if extents.is_empty() {
            return Err(Error::InvalidParameter("lattice needs at least one axis".into()));
        }
        if let Some(&bad) = extents.iter().find(|&&l| l < 2) {
            return Err(Error::InvalidParameter(format!(
                "lattice extent {bad} too small; each side must be >= 2"
            )));
        }
        Ok(Lattice { extents: extents.to_vec() })
    }

    pub fn line(len: usize) -> Result<Self> {
        Lattice::new(&[len])
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    /// Total number of sites.
    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Raw coordinates in `[0, L_i)` of a linear site index.
    pub fn coord(&self, mut index: usize) -> Vec<i64> {
        let mut c = Vec::with_capacity(self.dim());
        for &l in &self.extents {
            c.push((index % l) as i64);
            index /= l;
        }
        c
    }

    /// Linear index of a coordinate vector, wrapped periodically.
    pub fn index(&self, coord: &[i64]) -> usize {
        debug_assert_eq!(coord.len(), self.dim());
        let mut idx = 0usize;
        for k in (0..self.dim()).rev() {
            let l = self.extents[k] as i64;
            let c = coord[k].rem_euclid(l) as usize;
            idx = idx * self.extents[k] + c;
        }
        idx
    }

    /// Minimal-image coordinates, each component in `(-L_i/2, L_i/2]`.
    pub fn minimal_image(&self, index: usize) -> Vec<i64> {
        let mut c = self.coord(index);
        for (ci, &l) in c.iter_mut().zip(&self.extents) {
            let l = l as i64;
            if 2 * *ci > l {
                *ci -= l;
            }
        }
        c
    }

    /// Euclidean norm of the minimal-image coordinate of a site.
    pub fn min_image_norm(&self, index: usize) -> f64 {
        self.minimal_image(index)
            .iter()
            .map(|&c| (c * c) as f64)
            .sum::<f64>()
            .sqrt()
    }

    /// Site index shifted by `offset` (periodic).
    pub fn shift(&self, index: usize, offset: &[i64]) -> usize {
        let mut c = self.coord(index);
        for (ci, o) in c.iter_mut().zip(offset) {
            *ci += o;
        }
        self.index(&c)
    }

    /// Table of minimal-image coordinates for every site.
    pub fn minimal_images(&self) -> Vec<Vec<i64>> {
        (0..self.len()).map(|i| self.minimal_image(i)).collect()
    }

    /// Table of minimal-image Euclidean norms for every site.
    pub fn min_image_norms(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.min_image_norm(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_count_is_product() {
        let lat = Lattice::new(&[4, 6]).unwrap();
        assert_eq!(lat.len(), 24);
        assert_eq!(lat.dim(), 2);
    }

    #[test]
    fn minimal_image_in_centered_box() {
        let lat = Lattice::line(6).unwrap();
        let images: Vec<i64> = (0..6).map(|i| lat.minimal_image(i)[0]).collect();
        assert_eq!(images, vec![0, 1, 2, 3, -2, -1]);
        let lat3 = Lattice::new(&[3, 3]).unwrap();
        for i in 0..lat3.len() {
            for (&c, &l) in lat3.minimal_image(i).iter().zip(lat3.extents()) {
                let l = l as i64;
                assert!(2 * c > -l && 2 * c <= l, "component {c} outside (-{l}/2, {l}/2]");
            }
        }
    }

    #[test]
    fn shift_round_trip_is_identity() {
        let lat = Lattice::new(&[4, 8]).unwrap();
        let offset = [3i64, -5];
        let back: Vec<i64> = offset.iter().map(|o| -o).collect();
        for i in 0..lat.len() {
            assert_eq!(lat.shift(lat.shift(i, &offset), &back), i);
        }
    }

    #[test]
    fn index_coord_round_trip() {
        let lat = Lattice::new(&[4, 6, 2]).unwrap();
        for i in 0..lat.len() {
            assert_eq!(lat.index(&lat.coord(i)), i);
        }
    }

    #[test]
    fn rejects_degenerate_extents() {
        assert!(Lattice::new(&[]).is_err());
        assert!(Lattice::new(&[4, 1]).is_err());
    }
}
