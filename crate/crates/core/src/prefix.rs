//! d-dimensional summed-area tables.
//!
//! `table[j]` holds the sum of `values[i]` over all `i < j` componentwise, on a
//! lattice with one extra slot per axis. A box sum needs `2^d` lookups.

#[derive(Clone, Debug)]
pub struct PrefixSums {
    dims: Vec<usize>,
    strides: Vec<usize>,
    table: Vec<f64>,
}

impl PrefixSums {
    /// Builds the table for `values` laid out row-major over `dims` (last axis fastest).
    pub fn build(values: &[f64], dims: &[usize]) -> Self {
        let d = dims.len();
        assert_eq!(values.len(), dims.iter().product::<usize>());
        let ext: Vec<usize> = dims.iter().map(|n| n + 1).collect();
        let mut strides = vec![1usize; d];
        for i in (0..d.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * ext[i + 1];
        }
        let total: usize = ext.iter().product();
        let mut table = vec![0.0; total];

        // scatter values to offset (+1,...,+1)
        let mut idx = vec![0usize; d];
        for v in values {
            let lin: usize = idx
                .iter()
                .zip(&strides)
                .map(|(i, s)| (i + 1) * s)
                .sum();
            table[lin] = *v;
            let mut axis = d;
            while axis > 0 {
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < dims[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }

        // cumulative sum along each axis in turn
        for axis in 0..d {
            let stride = strides[axis];
            let len = ext[axis];
            let block = stride * len;
            for start in (0..total).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    let mut acc = 0.0;
                    for k in 0..len {
                        let p = base + k * stride;
                        acc += table[p];
                        table[p] = acc;
                    }
                }
            }
        }

        Self {
            dims: dims.to_vec(),
            strides,
            table,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Sum of values with `start[i] <= idx[i] < end[i]` on every axis.
    pub fn box_sum(&self, start: &[usize], end: &[usize]) -> f64 {
        let d = self.dims.len();
        if (0..d).any(|i| end[i] <= start[i]) {
            return 0.0;
        }
        let mut total = 0.0;
        for corner in 0..(1usize << d) {
            let mut lin = 0;
            let mut lower = 0;
            for i in 0..d {
                let j = if corner >> i & 1 == 1 {
                    end[i]
                } else {
                    lower += 1;
                    start[i]
                };
                lin += j * self.strides[i];
            }
            if lower % 2 == 0 {
                total += self.table[lin];
            } else {
                total -= self.table[lin];
            }
        }
        total
    }

    /// Sum of all values.
    pub fn total(&self) -> f64 {
        let start = vec![0; self.dims.len()];
        self.box_sum(&start, &self.dims)
    }
}
