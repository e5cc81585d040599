//! First-fit piling of jump intervals [x_pre, x_post], largest jump first.

use std::collections::BTreeMap;
use std::ops::Bound;

use ordered_float::OrderedFloat;

use crate::stablepath::JumpEvent;

/// Pile k lists jump indices in insertion order; touching intervals count
/// as intersecting.
#[derive(Debug, Clone, PartialEq)]
pub struct PileSet {
    pub piles: Vec<Vec<usize>>,
}

impl PileSet {
    pub fn len(&self) -> usize {
        self.piles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.piles.is_empty()
    }

    /// Largest jump size in each pile.
    pub fn max_jumps(&self, jumps: &[JumpEvent]) -> Vec<f64> {
        self.piles
            .iter()
            .map(|p| {
                p.iter()
                    .map(|&i| jumps[i].dx)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }
}

struct Pile {
    members: Vec<usize>,
    spans: BTreeMap<OrderedFloat<f64>, f64>,
}

impl Pile {
    fn intersects(&self, a: f64, b: f64) -> bool {
        self.spans
            .range((Bound::Unbounded, Bound::Included(OrderedFloat(b))))
            .next_back()
            .is_some_and(|(_, &end)| end >= a)
    }
}

/// Jumps sorted by size descending, ties by earlier time; each goes to the
/// lowest-index pile with no intersecting interval.
pub fn pile_jumps(jumps: &[JumpEvent]) -> PileSet {
    let mut order: Vec<usize> = (0..jumps.len()).collect();
    order.sort_by(|&i, &j| {
        jumps[j]
            .dx
            .total_cmp(&jumps[i].dx)
            .then(jumps[i].t.total_cmp(&jumps[j].t))
            .then(i.cmp(&j))
    });
    let mut piles: Vec<Pile> = Vec::new();
    for idx in order {
        let (a, b) = (jumps[idx].x_pre, jumps[idx].x_post());
        let k = match piles.iter().position(|p| !p.intersects(a, b)) {
            Some(k) => k,
            None => {
                piles.push(Pile {
                    members: Vec::new(),
                    spans: BTreeMap::new(),
                });
                piles.len() - 1
            }
        };
        piles[k].members.push(idx);
        piles[k].spans.insert(OrderedFloat(a), b);
    }
    PileSet {
        piles: piles.into_iter().map(|p| p.members).collect(),
    }
}
