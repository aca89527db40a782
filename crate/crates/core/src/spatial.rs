//! Static kd-tree for nearest-neighbor queries.
//!
//! Ties on distance resolve to the lowest id, so results match a linear scan
//! exactly.

use crate::error::{FoilError, Result};
use crate::geometry::Vec3;

#[derive(Debug, Clone)]
pub struct SpatialIndex {
    /// Points in tree order: the median of every subrange `lo..hi` sits at `(lo + hi) / 2`.
    items: Vec<(usize, Vec3)>,
    /// Split axis per tree slot.
    axes: Vec<u8>,
}

impl SpatialIndex {
    pub fn build(mut items: Vec<(usize, Vec3)>) -> Self {
        let mut axes = vec![0u8; items.len()];
        build_range(&mut items, &mut axes, 0);
        SpatialIndex { items, axes }
    }

    /// Index over the mesh vertices selected by `mask`, keyed by vertex index.
    pub fn over_vertices(positions: &[Vec3], mask: &[bool]) -> Self {
        Self::build(
            positions
                .iter()
                .enumerate()
                .filter(|(i, _)| mask[*i])
                .map(|(i, p)| (i, *p))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Ids of the indexed points, in tree order.
    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().map(|(id, _)| *id)
    }

    pub fn nearest(&self, query: &Vec3) -> Option<(usize, f64)> {
        self.nearest_filtered(query, usize::MAX)
    }

    /// Nearest item whose id is not `skip`.
    pub fn nearest_excluding(&self, query: &Vec3, skip: usize) -> Option<(usize, f64)> {
        self.nearest_filtered(query, skip)
    }

    fn nearest_filtered(&self, query: &Vec3, skip: usize) -> Option<(usize, f64)> {
        let mut best: Option<(f64, usize)> = None;
        self.search(0, self.items.len(), query, skip, &mut best);
        best.map(|(d2, id)| (id, d2.sqrt()))
    }

    fn search(&self, lo: usize, hi: usize, q: &Vec3, skip: usize, best: &mut Option<(f64, usize)>) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let (id, p) = &self.items[mid];
        if *id != skip {
            let d2 = (q - p).norm_squared();
            let better = match best {
                None => true,
                Some((bd, bid)) => d2 < *bd || (d2 == *bd && *id < *bid),
            };
            if better {
                *best = Some((d2, *id));
            }
        }
        let axis = self.axes[mid] as usize;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(near.0, near.1, q, skip, best);
        // equality still descends so lower-id ties on the far side are found
        if best.is_none_or(|(bd, _)| diff * diff <= bd) {
            self.search(far.0, far.1, q, skip, best);
        }
    }
}

fn build_range(items: &mut [(usize, Vec3)], axes: &mut [u8], depth: usize) {
    if items.len() <= 1 {
        if let Some(a) = axes.first_mut() {
            *a = (depth % 3) as u8;
        }
        return;
    }
    let axis = widest_axis(items);
    let mid = items.len() / 2;
    items.select_nth_unstable_by(mid, |a, b| a.1[axis].total_cmp(&b.1[axis]).then(a.0.cmp(&b.0)));
    axes[mid] = axis as u8;
    let (left, right) = items.split_at_mut(mid);
    let (laxes, raxes) = axes.split_at_mut(mid);
    build_range(left, laxes, depth + 1);
    build_range(&mut right[1..], &mut raxes[1..], depth + 1);
}

fn widest_axis(items: &[(usize, Vec3)]) -> usize {
    let mut lo = items[0].1;
    let mut hi = items[0].1;
    for (_, p) in items {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).imax()
}

/// Nearest fixed vertex to `query`, as (vertex index, distance).
pub fn nearest_fixed(index: &SpatialIndex, query: &Vec3) -> Result<(usize, f64)> {
    index
        .nearest(query)
        .ok_or_else(|| FoilError::EmptyConstraint("no fixed vertices to query".into()))
}
