//! Structure-of-arrays storage for the state of many chains.

/// A `C × P` matrix of chain states stored parameter-major: all chains'
/// values of parameter `p` are contiguous (`data[p * C + c]`).
///
/// Elementwise updates (momentum kicks, position drifts) therefore run
/// across chains in the innermost loop, and a block of chains can be
/// gathered into a lane-contiguous tile for the batched density kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMatrix<T> {
    chains: usize,
    dim: usize,
    data: Vec<T>,
}

impl<T: Copy + Default> ChainMatrix<T> {
    pub fn zeros(chains: usize, dim: usize) -> Self {
        ChainMatrix {
            chains,
            dim,
            data: vec![T::default(); chains * dim],
        }
    }

    /// Builds from per-chain rows. Panics if rows have unequal length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let chains = rows.len();
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(chains, dim);
        for (c, row) in rows.iter().enumerate() {
            m.set_row(c, row.as_ref());
        }
        m
    }

    /// Tries to allocate without aborting on out-of-memory.
    pub fn try_zeros(chains: usize, dim: usize) -> Option<Self> {
        let len = chains.checked_mul(dim)?;
        let mut data = Vec::new();
        data.try_reserve_exact(len).ok()?;
        data.resize(len, T::default());
        Some(ChainMatrix { chains, dim, data })
    }

    pub fn chains(&self) -> usize {
        self.chains
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, chain: usize, param: usize) -> T {
        self.data[param * self.chains + chain]
    }

    #[inline]
    pub fn set(&mut self, chain: usize, param: usize, value: T) {
        self.data[param * self.chains + chain] = value;
    }

    /// Copy of one chain's state.
    pub fn row(&self, chain: usize) -> Vec<T> {
        (0..self.dim).map(|p| self.get(chain, p)).collect()
    }

    pub fn copy_row_into(&self, chain: usize, out: &mut [T]) {
        for (p, o) in out.iter_mut().enumerate() {
            *o = self.get(chain, p);
        }
    }

    pub fn set_row(&mut self, chain: usize, row: &[T]) {
        assert_eq!(row.len(), self.dim, "row length does not match dimension");
        for (p, &v) in row.iter().enumerate() {
            self.set(chain, p, v);
        }
    }

    /// Values of parameter `p` across all chains.
    pub fn param(&self, p: usize) -> &[T] {
        &self.data[p * self.chains..(p + 1) * self.chains]
    }

    pub fn param_mut(&mut self, p: usize) -> &mut [T] {
        let c = self.chains;
        &mut self.data[p * c..(p + 1) * c]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Copies chains `start..start + width` into `tile`, laid out `P × width`
    /// with lanes contiguous.
    pub fn gather_block(&self, start: usize, width: usize, tile: &mut [T]) {
        debug_assert_eq!(tile.len(), self.dim * width);
        for p in 0..self.dim {
            tile[p * width..(p + 1) * width]
                .copy_from_slice(&self.param(p)[start..start + width]);
        }
    }

    /// Inverse of [`gather_block`](Self::gather_block).
    pub fn scatter_block(&mut self, start: usize, width: usize, tile: &[T]) {
        debug_assert_eq!(tile.len(), self.dim * width);
        for p in 0..self.dim {
            self.param_mut(p)[start..start + width]
                .copy_from_slice(&tile[p * width..(p + 1) * width]);
        }
    }

    pub fn map<U: Copy + Default>(&self, f: impl Fn(T) -> U) -> ChainMatrix<U> {
        ChainMatrix {
            chains: self.chains,
            dim: self.dim,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}
