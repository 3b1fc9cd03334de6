use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use ordered_float::OrderedFloat;

use super::{check_frame_inputs, materialize, FrameSolution, FrameSolver, COST_EPSILON};
use crate::error::Result;
use crate::model::Scenario;
use crate::vdm::WeightSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowArc {
    pub from: usize,
    pub to: usize,
    pub capacity: u64,
    pub cost: f64,
}

/// Directed network with integral capacities and real costs.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    pub node_count: usize,
    pub source: usize,
    pub sink: usize,
    pub arcs: Vec<FlowArc>,
}

impl FlowNetwork {
    pub fn new(node_count: usize, source: usize, sink: usize) -> Self {
        FlowNetwork {
            node_count,
            source,
            sink,
            arcs: Vec::new(),
        }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, capacity: u64, cost: f64) -> usize {
        debug_assert!(from < self.node_count && to < self.node_count);
        debug_assert!(cost.is_finite());
        self.arcs.push(FlowArc {
            from,
            to,
            capacity,
            cost,
        });
        self.arcs.len() - 1
    }
}

/// Frame network: source -> DC (staff count) -> person (1, -weight) -> sink (1).
/// Node order is source, sink, DCs, then eligible persons ascending.
struct FrameNetwork {
    net: FlowNetwork,
    /// (dc, person) for each DC->person arc, indexed from `first_pair_arc`.
    pairs: Vec<(usize, usize)>,
    first_pair_arc: usize,
}

impl FrameNetwork {
    fn build(scenario: &Scenario, eligible: &[usize], spec: &WeightSpec) -> Self {
        let k = scenario.dcs.len();
        let source = 0;
        let sink = 1;
        let dc_node = |i: usize| 2 + i;
        let person_node = |slot: usize| 2 + k + slot;

        let mut net = FlowNetwork::new(2 + k + eligible.len(), source, sink);
        for (i, dc) in scenario.dcs.iter().enumerate() {
            net.add_arc(source, dc_node(i), dc.staff_count as u64, 0.0);
        }
        for slot in 0..eligible.len() {
            net.add_arc(person_node(slot), sink, 1, 0.0);
        }
        let first_pair_arc = net.arcs.len();
        let mut pairs = Vec::with_capacity(k * eligible.len());
        for (slot, &p) in eligible.iter().enumerate() {
            let priority = scenario.persons[p].priority;
            for i in 0..k {
                let w = spec.weight(priority, scenario.distance(i, p));
                net.add_arc(dc_node(i), person_node(slot), 1, -w);
                pairs.push((i, p));
            }
        }
        FrameNetwork {
            net,
            pairs,
            first_pair_arc,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    /// Flow on each arc of the input network, in arc order.
    pub flow: Vec<u64>,
    pub units: u64,
    pub cost: f64,
}

struct Residual {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<u64>,
    cost: Vec<f64>,
}

impl Residual {
    fn new(net: &FlowNetwork) -> Self {
        let mut r = Residual {
            head: vec![Vec::new(); net.node_count],
            to: Vec::with_capacity(2 * net.arcs.len()),
            cap: Vec::with_capacity(2 * net.arcs.len()),
            cost: Vec::with_capacity(2 * net.arcs.len()),
        };
        // Edge 2i is arc i, edge 2i+1 its reverse.
        for a in &net.arcs {
            r.head[a.from].push(r.to.len());
            r.to.push(a.to);
            r.cap.push(a.capacity);
            r.cost.push(a.cost);
            r.head[a.to].push(r.to.len());
            r.to.push(a.from);
            r.cap.push(0);
            r.cost.push(-a.cost);
        }
        r
    }
}

/// Successive shortest augmenting paths with node potentials.
///
/// Initial potentials come from a Bellman-Ford (queue based) pass, which
/// handles the negative arc costs; later rounds run Dijkstra on reduced
/// costs. Augmentation stops after `max_flow_units` units, when the sink
/// becomes unreachable, or when the cheapest augmenting path no longer has
/// negative cost.
pub fn min_cost_flow(net: &FlowNetwork, max_flow_units: u64) -> FlowResult {
    let n = net.node_count;
    let mut g = Residual::new(net);
    let mut potential = bellman_ford(&g, net.source, n);

    let mut units = 0u64;
    let mut total_cost = 0.0;
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];

    while units < max_flow_units {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        dist[net.source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((OrderedFloat(0.0), net.source)));
        while let Some(Reverse((OrderedFloat(du), u))) = heap.pop() {
            if du > dist[u] {
                continue;
            }
            for &e in &g.head[u] {
                if g.cap[e] == 0 {
                    continue;
                }
                let v = g.to[e];
                let reduced = (g.cost[e] + potential[u] - potential[v]).max(0.0);
                let dv = du + reduced;
                if dv < dist[v] {
                    dist[v] = dv;
                    parent[v] = e;
                    heap.push(Reverse((OrderedFloat(dv), v)));
                }
            }
        }
        if !dist[net.sink].is_finite() {
            break;
        }

        let mut path_cost = 0.0;
        let mut bottleneck = max_flow_units - units;
        let mut v = net.sink;
        while v != net.source {
            let e = parent[v];
            path_cost += g.cost[e];
            bottleneck = bottleneck.min(g.cap[e]);
            v = g.to[e ^ 1];
        }
        if path_cost >= -COST_EPSILON {
            break;
        }

        let mut v = net.sink;
        while v != net.source {
            let e = parent[v];
            g.cap[e] -= bottleneck;
            g.cap[e ^ 1] += bottleneck;
            v = g.to[e ^ 1];
        }
        units += bottleneck;
        total_cost += path_cost * bottleneck as f64;

        for (p, d) in potential.iter_mut().zip(&dist) {
            if d.is_finite() {
                *p += d;
            }
        }
    }

    let flow = (0..net.arcs.len()).map(|i| g.cap[2 * i + 1]).collect();
    FlowResult {
        flow,
        units,
        cost: total_cost,
    }
}

fn bellman_ford(g: &Residual, source: usize, n: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; n];
    let mut queued = vec![false; n];
    let mut queue = VecDeque::new();
    dist[source] = 0.0;
    queue.push_back(source);
    queued[source] = true;
    while let Some(u) = queue.pop_front() {
        queued[u] = false;
        for &e in &g.head[u] {
            if g.cap[e] == 0 {
                continue;
            }
            let v = g.to[e];
            let dv = dist[u] + g.cost[e];
            if dv < dist[v] {
                dist[v] = dv;
                if !queued[v] {
                    queued[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    dist.into_iter()
        .map(|d| if d.is_finite() { d } else { 0.0 })
        .collect()
}

/// Solves a frame on the full person-level network.
pub struct NetworkSolver;

impl FrameSolver for NetworkSolver {
    fn name(&self) -> &'static str {
        "flow"
    }

    fn solve(
        &self,
        scenario: &Scenario,
        eligible: &[usize],
        spec: &WeightSpec,
        budget: u64,
    ) -> Result<FrameSolution> {
        let eligible = check_frame_inputs(scenario, eligible)?;
        let fnet = FrameNetwork::build(scenario, &eligible, spec);
        let result = min_cost_flow(&fnet.net, budget);
        let chosen = fnet
            .pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| result.flow[fnet.first_pair_arc + i] > 0)
            .map(|(_, &pair)| pair)
            .collect();
        Ok(materialize(scenario, spec, chosen))
    }
}
