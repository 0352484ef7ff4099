use crate::error::{BitrError, Result};
use crate::scalar::Real;
use crate::tensor_field::Point6;

/// Per-point neighbour lists, nearest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    pub k: usize,
    pub neighbors: Vec<Vec<usize>>,
}

impl NeighborGraph {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// Brute-force `k` nearest neighbours in R⁶, excluding the point itself.
/// Equal distances are broken by ascending index.
pub fn knn_graph<T: Real>(points: &[Point6<T>], k: usize) -> Result<NeighborGraph> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(BitrError::InvalidNeighborCount { k, points: n });
    }
    let neighbors = points
        .iter()
        .enumerate()
        .map(|(u, zu)| {
            let mut d: Vec<(T, usize)> = points
                .iter()
                .enumerate()
                .filter(|&(v, _)| v != u)
                .map(|(v, zv)| (zu.distance_squared(zv), v))
                .collect();
            let cmp = |a: &(T, usize), b: &(T, usize)| {
                a.0.partial_cmp(&b.0)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.1.cmp(&b.1))
            };
            if k < d.len() {
                d.select_nth_unstable_by(k, cmp);
                d.truncate(k);
            }
            d.sort_by(cmp);
            d.into_iter().map(|(_, v)| v).collect()
        })
        .collect();
    Ok(NeighborGraph { k, neighbors })
}
