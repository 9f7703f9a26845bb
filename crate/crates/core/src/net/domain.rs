use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QpEncoding {
    /// One index per listed QP.
    List,
    /// One index per integer in `[first, last]` of the list.
    Range,
}

/// Set of QPs the network was trained for, and how a QP is one-hot encoded.
///
/// Unsupported QPs are mapped to the nearest supported one; exact ties go to
/// the larger QP and values outside the set clamp to its ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QpDomain {
    qps: Vec<i32>,
    encoding: QpEncoding,
}

impl Default for QpDomain {
    fn default() -> Self {
        QpDomain {
            qps: vec![22, 27, 32, 37],
            encoding: QpEncoding::List,
        }
    }
}

impl QpDomain {
    pub fn list(qps: Vec<i32>) -> Result<Self> {
        if qps.is_empty() {
            return Err(invalid!("QP domain must not be empty"));
        }
        if qps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid!("QP list must be strictly increasing: {qps:?}"));
        }
        Ok(QpDomain {
            qps,
            encoding: QpEncoding::List,
        })
    }

    /// Every integer QP in `[low, high]`.
    pub fn range(low: i32, high: i32) -> Result<Self> {
        if low > high {
            return Err(invalid!("empty QP range [{low}, {high}]"));
        }
        Ok(QpDomain {
            qps: (low..=high).collect(),
            encoding: QpEncoding::Range,
        })
    }

    pub fn qps(&self) -> &[i32] {
        &self.qps
    }

    pub fn encoding(&self) -> QpEncoding {
        self.encoding
    }

    /// One-hot length.
    pub fn m(&self) -> usize {
        self.qps.len()
    }

    /// Nearest supported QP.
    pub fn map_qp(&self, q: i32) -> i32 {
        let mut best = self.qps[0];
        for &s in &self.qps[1..] {
            let (d_best, d_s) = ((q - best).abs(), (q - s).abs());
            // ascending order: `s > best`, so `<=` resolves ties upward
            if d_s <= d_best {
                best = s;
            }
        }
        best
    }

    /// Index of the one-hot entry for `q` after mapping.
    pub fn index_of(&self, q: i32) -> usize {
        let mapped = self.map_qp(q);
        self.qps
            .iter()
            .position(|&s| s == mapped)
            .expect("mapped QP is in the domain")
    }

    pub fn one_hot(&self, q: i32) -> Vec<f32> {
        let mut v = vec![0.0; self.m()];
        v[self.index_of(q)] = 1.0;
        v
    }
}
