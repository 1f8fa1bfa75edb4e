use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Corner positions in a user-view image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerSet {
    pub width: u32,
    pub height: u32,
    pub corners: Vec<(usize, [f64; 2])>,
}

impl CornerSet {
    pub fn new(width: u32, height: u32, corners: Vec<(usize, [f64; 2])>) -> Result<Self> {
        let set = CornerSet { width, height, corners };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (k, p) in &self.corners {
            if !seen.insert(*k) {
                return Err(Error::InvalidArgument(format!("corner index {k} appears twice")));
            }
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::InvalidArgument(format!("corner {k} has a non-finite position")));
            }
        }
        Ok(())
    }

    fn as_map(&self) -> BTreeMap<usize, [f64; 2]> {
        self.corners.iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dislocation {
    /// Mean Euclidean pixel distance over corners present in both sets.
    pub mean_px: f64,
    pub per_corner: Vec<(usize, f64)>,
    /// Indices present in only one of the two sets.
    pub unmatched: Vec<usize>,
}

/// `(1/N) Σ ‖P_base,i − P_i‖` over the corners both sets contain.
pub fn corner_dislocation(base: &CornerSet, test: &CornerSet) -> Result<Dislocation> {
    base.validate()?;
    test.validate()?;
    let (b, t) = (base.as_map(), test.as_map());
    let per_corner: Vec<(usize, f64)> = b
        .iter()
        .filter_map(|(k, pb)| t.get(k).map(|pt| (*k, (pb[0] - pt[0]).hypot(pb[1] - pt[1]))))
        .collect();
    if per_corner.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let unmatched = b
        .keys()
        .filter(|k| !t.contains_key(k))
        .chain(t.keys().filter(|k| !b.contains_key(k)))
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mean_px = per_corner.iter().map(|(_, d)| d).sum::<f64>() / per_corner.len() as f64;
    Ok(Dislocation { mean_px, per_corner, unmatched })
}
