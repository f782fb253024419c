use crate::error::{Error, Result};

/// Binomial splitting kernel `b_jk = C(j-1, k-1) a^(k-1) (1-a)^(j-k)`: the chance
/// that a primary hit on a size-`j` firm ends with `k` subunits infected.
#[derive(Debug, Clone, PartialEq)]
pub struct SplittingMatrix {
    max_size: usize,
    data: Vec<f64>,
}

impl SplittingMatrix {
    pub fn max_size(&self) -> usize {
        self.max_size
    }

    /// `b_jk` with 1-based `j`, `k`; zero above the diagonal.
    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.data[(j - 1) * self.max_size + (k - 1)]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[(j - 1) * self.max_size..j * self.max_size]
    }
}

pub fn splitting_matrix(a: f64, max_size: usize) -> Result<SplittingMatrix> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::invalid("a", format!("must lie in [0, 1], got {a}")));
    }
    if max_size == 0 {
        return Err(Error::invalid("max_size", "must be >= 1"));
    }
    let n = max_size;
    let mut data = vec![0.0; n * n];
    for j in 1..=n {
        let trials = j - 1;
        let mut binom = 1.0;
        for k in 1..=j {
            let m = k - 1;
            if m > 0 {
                binom *= (trials - m + 1) as f64 / m as f64;
            }
            data[(j - 1) * n + (k - 1)] = binom * a.powi(m as i32) * (1.0 - a).powi((trials - m) as i32);
        }
    }
    Ok(SplittingMatrix { max_size, data })
}
