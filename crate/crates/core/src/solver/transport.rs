//! Successive shortest paths on the DC-contracted residual graph.
//!
//! Every augmenting path in the frame network alternates DC and person
//! nodes: it enters some DC with spare staff, hops DC -> person -> DC by
//! moving already-assigned persons, and leaves through an unassigned
//! person. Contracting the person nodes leaves a graph on the DCs alone:
//!
//! * `a -> b` costs `min over p assigned to b of c(a,p) - c(b,p)`,
//! * `a -> sink` costs `min over unassigned p of c(a,p)`,
//!
//! with `c = -weight`. Both minima are kept in lazily invalidated heaps,
//! so each augmentation costs a Bellman-Ford over `k + 2` nodes plus heap
//! maintenance, independent of the population size.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;

use super::{check_frame_inputs, materialize, FrameSolution, FrameSolver, COST_EPSILON};
use crate::error::Result;
use crate::model::Scenario;
use crate::vdm::WeightSpec;

type Entry = Reverse<(OrderedFloat<f64>, usize)>;

const UNASSIGNED: usize = usize::MAX;

pub struct TransportSolver;

struct State<'a> {
    scenario: &'a Scenario,
    spec: &'a WeightSpec,
    k: usize,
    /// Current DC of each person, or UNASSIGNED.
    assigned: Vec<usize>,
    used: Vec<usize>,
    /// Per DC: unassigned persons keyed by cost.
    open: Vec<BinaryHeap<Entry>>,
    /// Per (from, to) DC pair: persons at `to` keyed by the cost of moving them to `from`.
    moves: Vec<BinaryHeap<Entry>>,
}

impl<'a> State<'a> {
    fn cost(&self, dc: usize, person: usize) -> f64 {
        let p = &self.scenario.persons[person];
        -self
            .spec
            .weight(p.priority, self.scenario.distance(dc, person))
    }

    fn best_open(&mut self, dc: usize) -> Option<(f64, usize)> {
        let heap = &mut self.open[dc];
        while let Some(Reverse((OrderedFloat(c), p))) = heap.peek().copied() {
            if self.assigned[p] == UNASSIGNED {
                return Some((c, p));
            }
            heap.pop();
        }
        None
    }

    fn best_move(&mut self, from: usize, to: usize) -> Option<(f64, usize)> {
        let heap = &mut self.moves[from * self.k + to];
        while let Some(Reverse((OrderedFloat(c), p))) = heap.peek().copied() {
            if self.assigned[p] == to {
                return Some((c, p));
            }
            heap.pop();
        }
        None
    }

    fn place(&mut self, person: usize, dc: usize) {
        self.assigned[person] = dc;
        let here = self.cost(dc, person);
        for from in 0..self.k {
            if from != dc {
                let key = self.cost(from, person) - here;
                self.moves[from * self.k + dc].push(Reverse((OrderedFloat(key), person)));
            }
        }
    }

    /// One augmentation; returns false when no improving path exists.
    fn augment(&mut self) -> bool {
        let k = self.k;
        let mut dist = vec![f64::INFINITY; k];
        // (previous dc, person moved into this dc's predecessor)
        let mut pred: Vec<Option<(usize, usize)>> = vec![None; k];
        for (a, d) in dist.iter_mut().enumerate() {
            if self.used[a] < self.scenario.dcs[a].staff_count {
                *d = 0.0;
            }
        }

        let mut arc = vec![None; k * k];
        for a in 0..k {
            for b in 0..k {
                if a != b {
                    arc[a * k + b] = self.best_move(a, b);
                }
            }
        }

        // Bellman-Ford; no negative cycles exist at a min-cost flow.
        for _ in 0..k {
            let mut changed = false;
            for a in 0..k {
                if !dist[a].is_finite() {
                    continue;
                }
                for b in 0..k {
                    if let Some((c, p)) = arc[a * k + b] {
                        let nd = dist[a] + c;
                        if nd < dist[b] {
                            dist[b] = nd;
                            pred[b] = Some((a, p));
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }

        // Cheapest exit: by total cost, then person index, then DC index.
        let mut exit: Option<(f64, usize, usize)> = None;
        for (a, &d) in dist.iter().enumerate() {
            if !d.is_finite() {
                continue;
            }
            if let Some((c, p)) = self.best_open(a) {
                let total = d + c;
                let better = match exit {
                    None => true,
                    Some((t, q, _)) => total < t || (total == t && p < q),
                };
                if better {
                    exit = Some((total, p, a));
                }
            }
        }
        let Some((total, person, last)) = exit else {
            return false;
        };
        if total >= -COST_EPSILON {
            return false;
        }

        // Walk back: each hop a -> b moves its person from b to a.
        let mut hops = Vec::new();
        let mut b = last;
        while let Some((a, p)) = pred[b] {
            hops.push((a, p));
            b = a;
            if hops.len() > k {
                break;
            }
        }
        let first = b;
        self.used[first] += 1;
        self.place(person, last);
        for (a, p) in hops {
            self.place(p, a);
        }
        true
    }
}

impl FrameSolver for TransportSolver {
    fn name(&self) -> &'static str {
        "transport"
    }

    fn solve(
        &self,
        scenario: &Scenario,
        eligible: &[usize],
        spec: &WeightSpec,
        budget: u64,
    ) -> Result<FrameSolution> {
        let eligible = check_frame_inputs(scenario, eligible)?;
        let k = scenario.dcs.len();
        let mut state = State {
            scenario,
            spec,
            k,
            assigned: vec![UNASSIGNED; scenario.persons.len()],
            used: vec![0; k],
            open: Vec::with_capacity(k),
            moves: vec![BinaryHeap::new(); k * k],
        };
        for dc in 0..k {
            let entries: Vec<Entry> = eligible
                .iter()
                .map(|&p| Reverse((OrderedFloat(state.cost(dc, p)), p)))
                .collect();
            state.open.push(BinaryHeap::from(entries));
        }

        let mut units = 0u64;
        while units < budget && state.augment() {
            units += 1;
        }

        let pairs = eligible
            .iter()
            .filter(|&&p| state.assigned[p] != UNASSIGNED)
            .map(|&p| (state.assigned[p], p))
            .collect();
        Ok(materialize(scenario, spec, pairs))
    }
}
