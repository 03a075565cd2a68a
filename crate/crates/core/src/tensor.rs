//! Dense m-dimensional real tensors on rectangular grids, plus the boolean
//! masks that mark observed versus missing samples.
//!
//! Data is stored flat in row-major order. Axis-wise iteration hands out
//! stride descriptors rather than copies, so transforms can walk lines of
//! any axis in place.

use crate::error::{Error, Result};

/// Dense real tensor over a rectangular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl GridTensor {
    /// Builds a tensor from a shape and row-major data.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&n| n == 0) {
            return Err(Error::InvalidParam(format!(
                "shape must have at least one axis and no zero extents, got {shape:?}"
            )));
        }
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(Error::InvalidParam(format!(
                "data length {} does not match shape {:?} (product {})",
                data.len(),
                shape,
                n
            )));
        }
        Ok(Self { shape, data })
    }

    /// All-zero tensor of the given shape.
    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        Self::new(shape, vec![0.0; n])
    }

    /// Constant tensor of the given shape.
    pub fn full(shape: Vec<usize>, value: f64) -> Result<Self> {
        let n: usize = shape.iter().product();
        Self::new(shape, vec![value; n])
    }

    /// 1-D tensor from a vector.
    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::new(vec![n], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    /// Total number of elements.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// True when every entry is a finite real number.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Euclidean norm of the flattened data.
    pub fn norm_l2(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Checks that `other` has the same shape.
    pub fn check_same_shape(&self, other: &GridTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                got: other.shape.clone(),
            });
        }
        Ok(())
    }

    /// Element-wise `self - other`.
    pub fn sub(&self, other: &GridTensor) -> Result<GridTensor> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(GridTensor {
            shape: self.shape.clone(),
            data,
        })
    }

    /// Element-wise `self + other`.
    pub fn add(&self, other: &GridTensor) -> Result<GridTensor> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(GridTensor {
            shape: self.shape.clone(),
            data,
        })
    }

    /// New tensor with `f` applied to every entry.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridTensor {
        GridTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Iterates stride descriptors for every line along `axis`.
    ///
    /// A line addresses the `shape[axis]` elements obtained by varying the
    /// index of `axis` while all other indices stay fixed. The descriptors
    /// partition the index set: every element belongs to exactly one line.
    pub fn lines_along_axis(&self, axis: usize) -> Result<AxisLines> {
        AxisLines::new(&self.shape, axis)
    }
}

/// Addresses one axis-aligned line: elements `offset + i*stride` for `i < len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisLine {
    pub offset: usize,
    pub stride: usize,
    pub len: usize,
}

impl AxisLine {
    /// Flat index of the `i`-th element on the line.
    pub fn index(&self, i: usize) -> usize {
        debug_assert!(i < self.len);
        self.offset + i * self.stride
    }
}

/// Iterator over the lines of one axis.
///
/// For a row-major shape `[n_1..n_m]` and axis `j`, lines are enumerated by
/// an outer count (product of extents before `j`) and an inner count (the
/// stride of `j`, i.e. the product of extents after `j`).
#[derive(Debug, Clone)]
pub struct AxisLines {
    stride: usize,
    len: usize,
    block: usize, // stride * len: flat span of one outer slab
    outer: usize,
    outer_idx: usize,
    inner_idx: usize,
}

impl AxisLines {
    fn new(shape: &[usize], axis: usize) -> Result<Self> {
        if axis >= shape.len() {
            return Err(Error::AxisOutOfRange {
                axis,
                ndim: shape.len(),
            });
        }
        let stride: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let len = shape[axis];
        Ok(Self {
            stride,
            len,
            block: stride * len,
            outer,
            outer_idx: 0,
            inner_idx: 0,
        })
    }

    /// Number of lines yielded in total.
    pub fn line_count(&self) -> usize {
        self.outer * self.stride
    }
}

impl Iterator for AxisLines {
    type Item = AxisLine;

    fn next(&mut self) -> Option<AxisLine> {
        if self.outer_idx == self.outer {
            return None;
        }
        let line = AxisLine {
            offset: self.outer_idx * self.block + self.inner_idx,
            stride: self.stride,
            len: self.len,
        };
        self.inner_idx += 1;
        if self.inner_idx == self.stride {
            self.inner_idx = 0;
            self.outer_idx += 1;
        }
        Some(line)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let done = self.outer_idx * self.stride + self.inner_idx;
        let rem = self.line_count() - done;
        (rem, Some(rem))
    }
}

/// Boolean mask over a grid; `true` marks an observed sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    shape: Vec<usize>,
    flags: Vec<bool>,
}

impl Mask {
    /// Builds a mask, rejecting the all-missing case.
    pub fn new(shape: Vec<usize>, flags: Vec<bool>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if shape.is_empty() || n == 0 || flags.len() != n {
            return Err(Error::InvalidParam(format!(
                "mask flags length {} does not match shape {:?}",
                flags.len(),
                shape
            )));
        }
        if !flags.iter().any(|&f| f) {
            return Err(Error::AllMissing);
        }
        Ok(Self { shape, flags })
    }

    /// All-observed mask.
    pub fn full(shape: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        Self::new(shape, vec![true; n])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn is_full(&self) -> bool {
        self.flags.iter().all(|&f| f)
    }

    pub fn observed_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Checks that the mask covers `t` exactly.
    pub fn check_matches(&self, t: &GridTensor) -> Result<()> {
        if self.shape != t.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                got: t.shape().to_vec(),
            });
        }
        Ok(())
    }

    /// Weights as 0/1 reals, in flat order.
    pub fn to_weights(&self) -> Vec<f64> {
        self.flags.iter().map(|&f| if f { 1.0 } else { 0.0 }).collect()
    }
}

/// Splits NaN entries out of raw data: NaN becomes (0, missing).
///
/// This is the ingestion rule for file readers; solvers themselves reject
/// non-finite input.
pub fn ingest_with_nan(shape: Vec<usize>, raw: Vec<f64>) -> Result<(GridTensor, Mask)> {
    let flags: Vec<bool> = raw.iter().map(|v| v.is_finite()).collect();
    let data: Vec<f64> = raw.iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect();
    let t = GridTensor::new(shape.clone(), data)?;
    let m = Mask::new(shape, flags)?;
    Ok((t, m))
}

/// Relative change `‖a − b‖₂ / ‖b‖₂`.
///
/// When `‖b‖₂ = 0` this returns `‖a‖₂`: the first iterate of a solver may
/// legitimately be all zeros and the measure must stay finite there.
pub fn relative_change(a: &GridTensor, b: &GridTensor) -> Result<f64> {
    a.check_same_shape(b)?;
    let denom = b.norm_l2();
    let diff = a.sub(b)?.norm_l2();
    if denom == 0.0 {
        Ok(a.norm_l2())
    } else {
        Ok(diff / denom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn new_rejects_bad_shapes() {
        assert!(GridTensor::new(vec![], vec![]).is_err());
        assert!(GridTensor::new(vec![2, 0], vec![]).is_err());
        assert!(GridTensor::new(vec![2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn lines_2x3_axis0() {
        let t = GridTensor::zeros(vec![2, 3]).unwrap();
        let lines: Vec<_> = t.lines_along_axis(0).unwrap().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.len == 2));
    }

    #[test]
    fn lines_1d() {
        let t = GridTensor::zeros(vec![5]).unwrap();
        let lines: Vec<_> = t.lines_along_axis(0).unwrap().collect();
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0], AxisLine { offset: 0, stride: 1, len: 5 });
    }

    #[test]
    fn lines_axis_out_of_range() {
        let t = GridTensor::zeros(vec![2, 3]).unwrap();
        assert!(matches!(
            t.lines_along_axis(2),
            Err(Error::AxisOutOfRange { axis: 2, ndim: 2 })
        ));
    }

    /// Brute-force oracle: enumerate all multi-indices of [2,3,4], group the
    /// flat indices by their axis-1 fiber, and compare against the iterator.
    #[test]
    fn lines_2x3x4_axis1_match_bruteforce_fibers() {
        let shape = [2usize, 3, 4];
        let mut fibers: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for i0 in 0..shape[0] {
            for i1 in 0..shape[1] {
                for i2 in 0..shape[2] {
                    let flat = (i0 * shape[1] + i1) * shape[2] + i2;
                    fibers.entry((i0, i2)).or_default().push(flat);
                }
            }
        }
        assert_eq!(fibers.len(), 8);

        let t = GridTensor::zeros(shape.to_vec()).unwrap();
        let lines: Vec<_> = t.lines_along_axis(1).unwrap().collect();
        assert_eq!(lines.len(), 8);
        assert!(lines.iter().all(|l| l.len == 3));

        let mut yielded: Vec<Vec<usize>> = lines
            .iter()
            .map(|l| (0..l.len).map(|i| l.index(i)).collect())
            .collect();
        let mut expected: Vec<Vec<usize>> = fibers.into_values().collect();
        yielded.sort();
        expected.sort();
        assert_eq!(yielded, expected);
    }

    /// Lines partition the index set: all axes of several shapes.
    #[test]
    fn lines_partition_indices() {
        for shape in [vec![1], vec![7], vec![2, 3], vec![4, 1, 5], vec![2, 3, 4, 2]] {
            let t = GridTensor::zeros(shape.clone()).unwrap();
            for axis in 0..shape.len() {
                let mut seen = vec![0u32; t.len()];
                for line in t.lines_along_axis(axis).unwrap() {
                    for i in 0..line.len {
                        seen[line.index(i)] += 1;
                    }
                }
                assert!(seen.iter().all(|&c| c == 1), "shape {shape:?} axis {axis}");
            }
        }
    }

    #[test]
    fn relative_change_examples() {
        let a = GridTensor::from_vec(vec![2.0, 0.0]).unwrap();
        let b = GridTensor::from_vec(vec![1.0, 0.0]).unwrap();
        assert_eq!(relative_change(&a, &a).unwrap(), 0.0);
        assert_eq!(relative_change(&a, &b).unwrap(), 1.0);

        // Zero-denominator convention: ‖a‖ comes back.
        let z = GridTensor::from_vec(vec![0.0, 0.0]).unwrap();
        let v = GridTensor::from_vec(vec![3.0, 4.0]).unwrap();
        assert_eq!(relative_change(&v, &z).unwrap(), 5.0);
    }

    #[test]
    fn relative_change_shape_mismatch() {
        let a = GridTensor::zeros(vec![2, 3]).unwrap();
        let b = GridTensor::zeros(vec![3, 2]).unwrap();
        assert!(relative_change(&a, &b).is_err());
    }

    #[test]
    fn mask_rejects_all_missing() {
        assert!(matches!(
            Mask::new(vec![3], vec![false, false, false]),
            Err(Error::AllMissing)
        ));
    }

    #[test]
    fn ingest_zeroes_nan_and_flags_missing() {
        let (t, m) = ingest_with_nan(vec![4], vec![1.0, f64::NAN, 3.0, f64::NAN]).unwrap();
        assert_eq!(t.data(), &[1.0, 0.0, 3.0, 0.0]);
        assert_eq!(m.flags(), &[true, false, true, false]);
        assert_eq!(m.observed_count(), 2);
    }
}
