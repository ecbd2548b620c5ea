//! Exhaustive reference checks for tiny instances.
//!
//! Inputs are plain data (node counts, arc lists, load matrices) so nothing
//! here shares code with the scheduler it checks. Every entry point has a hard
//! size guard and refuses larger inputs.

use std::collections::BTreeMap;

use thiserror::Error;

/// Comparison tolerance, fixed independently of the library's own.
pub const TOLERANCE: f64 = 1e-9;
pub const MAX_STEINER_NODES: usize = 8;
pub const MAX_WINDOW: usize = 12;
pub const MAX_FIXPOINT_SCHEDULES: usize = 4;
pub const MAX_FIXPOINT_SLOTS: u64 = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{what} is {got}, above the limit of {limit}")]
    TooLarge {
        what: &'static str,
        limit: usize,
        got: usize,
    },
    #[error("bad input: {0}")]
    BadInput(String),
}

fn guard(what: &'static str, got: usize, limit: usize) -> Result<(), OracleError> {
    if got > limit {
        Err(OracleError::TooLarge { what, limit, got })
    } else {
        Ok(())
    }
}

/// A directed, weighted arc `tail -> head`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub tail: u32,
    pub head: u32,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteinerOptimum {
    /// Arcs of the optimal arborescence, sorted by (tail, head).
    pub arcs: Vec<(u32, u32)>,
    pub weight: f64,
}

/// Minimum-weight arborescence rooted at `root` that reaches every terminal.
///
/// Tries every subset of non-terminal nodes as the Steiner set and, for each,
/// every assignment of parents. Returns `None` when no arborescence exists.
pub fn brute_steiner(
    node_count: usize,
    arcs: &[Arc],
    root: u32,
    terminals: &[u32],
) -> Result<Option<SteinerOptimum>, OracleError> {
    guard("node count", node_count, MAX_STEINER_NODES)?;
    let in_range = |v: u32| (v as usize) < node_count;
    if !in_range(root) || !terminals.iter().all(|&t| in_range(t)) {
        return Err(OracleError::BadInput("node out of range".into()));
    }
    if terminals.contains(&root) {
        return Err(OracleError::BadInput("root is a terminal".into()));
    }
    let mut weight = vec![vec![f64::INFINITY; node_count]; node_count];
    for a in arcs {
        if !in_range(a.tail) || !in_range(a.head) || a.tail == a.head || a.weight < 0.0 {
            return Err(OracleError::BadInput(format!("arc {}->{}", a.tail, a.head)));
        }
        let w = &mut weight[a.tail as usize][a.head as usize];
        *w = w.min(a.weight);
    }

    let required: u32 = terminals.iter().fold(1 << root, |m, &t| m | 1 << t);
    let optional: Vec<u32> = (0..node_count as u32)
        .filter(|v| required & (1 << v) == 0)
        .collect();
    let mut best: Option<(f64, Vec<u32>)> = None;
    for pick in 0u32..(1 << optional.len()) {
        let members = optional
            .iter()
            .enumerate()
            .filter(|(i, _)| pick & (1 << i) != 0)
            .fold(required, |m, (_, &v)| m | 1 << v);
        let bound = best.as_ref().map_or(f64::INFINITY, |b| b.0);
        if let Some(found) = min_arborescence(&weight, members, root, bound) {
            best = Some(found);
        }
    }
    Ok(best.map(|(weight_sum, parent)| {
        let mut arcs: Vec<(u32, u32)> = (0..node_count as u32)
            .filter(|&v| parent[v as usize] != u32::MAX)
            .map(|v| (parent[v as usize], v))
            .collect();
        arcs.sort_unstable();
        SteinerOptimum {
            arcs,
            weight: weight_sum,
        }
    }))
}

/// Cheapest parent assignment over exactly `members`, strictly below `bound`.
fn min_arborescence(
    weight: &[Vec<f64>],
    members: u32,
    root: u32,
    bound: f64,
) -> Option<(f64, Vec<u32>)> {
    let n = weight.len();
    let children: Vec<u32> = (0..n as u32)
        .filter(|&v| v != root && members & (1 << v) != 0)
        .collect();
    let mut options: Vec<Vec<(f64, u32)>> = Vec::with_capacity(children.len());
    for &child in &children {
        let mut parents: Vec<(f64, u32)> = (0..n as u32)
            .filter(|&p| p != child && members & (1 << p) != 0)
            .map(|p| (weight[p as usize][child as usize], p))
            .filter(|(w, _)| w.is_finite())
            .collect();
        if parents.is_empty() {
            return None;
        }
        parents.sort_by(|a, b| a.0.total_cmp(&b.0));
        options.push(parents);
    }
    // suffix sums of the cheapest in-arc give an admissible lower bound
    let mut floor = vec![0.0; children.len() + 1];
    for i in (0..children.len()).rev() {
        floor[i] = floor[i + 1] + options[i][0].0;
    }

    struct Search<'a> {
        children: &'a [u32],
        options: &'a [Vec<(f64, u32)>],
        floor: &'a [f64],
        root: u32,
        parent: Vec<u32>,
        best: f64,
        best_parent: Option<Vec<u32>>,
    }

    impl Search<'_> {
        fn reaches_root(&self) -> bool {
            self.children.iter().all(|&c| {
                let mut v = c;
                for _ in 0..=self.children.len() {
                    if v == self.root {
                        return true;
                    }
                    v = self.parent[v as usize];
                }
                false
            })
        }

        fn go(&mut self, i: usize, cost: f64) {
            if cost + self.floor[i] >= self.best {
                return;
            }
            if i == self.children.len() {
                if self.reaches_root() {
                    self.best = cost;
                    self.best_parent = Some(self.parent.clone());
                }
                return;
            }
            let child = self.children[i] as usize;
            for k in 0..self.options[i].len() {
                let (w, p) = self.options[i][k];
                self.parent[child] = p;
                self.go(i + 1, cost + w);
            }
            self.parent[child] = u32::MAX;
        }
    }

    let mut search = Search {
        children: &children,
        options: &options,
        floor: &floor,
        root,
        parent: vec![u32::MAX; n],
        best: bound,
        best_parent: None,
    };
    search.go(0, 0.0);
    search.best_parent.map(|p| (search.best, p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    /// Sum over slots of the smallest spare rate across the tree's edges.
    pub available: f64,
    pub feasible: bool,
}

/// Whether a tree can carry `volume` within a window.
///
/// `loads[e][t]` is what edge `e` already carries in window slot `t`; every
/// row must cover the same window.
pub fn brute_feasibility(
    capacity: f64,
    loads: &[Vec<f64>],
    volume: f64,
) -> Result<Feasibility, OracleError> {
    let Some(first) = loads.first() else {
        return Err(OracleError::BadInput("tree has no edges".into()));
    };
    let window = first.len();
    guard("window", window, MAX_WINDOW)?;
    if loads.iter().any(|row| row.len() != window) {
        return Err(OracleError::BadInput("ragged load matrix".into()));
    }
    let mut available = 0.0;
    for t in 0..window {
        let mut spare = f64::INFINITY;
        for row in loads {
            spare = spare.min(capacity - row[t]);
        }
        available += spare.max(0.0);
    }
    Ok(Feasibility {
        available,
        feasible: available >= volume - TOLERANCE,
    })
}

/// One request's placement as seen by the fixpoint check.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedSchedule {
    pub label: String,
    /// Directed `(tail, head)` edges of the request's tree.
    pub edges: Vec<(u32, u32)>,
    pub deadline: u64,
    /// Rate per future slot.
    pub rates: BTreeMap<u64, f64>,
}

/// A calendar snapshot after slot `now` has been dispatched.
#[derive(Debug, Clone, PartialEq)]
pub struct FixpointState {
    pub capacity: f64,
    pub now: u64,
    pub schedules: Vec<PlacedSchedule>,
}

/// A single move that would still push traffic later.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub label: String,
    pub from: u64,
    pub to: u64,
    pub amount: f64,
}

/// Every single move of traffic from a future slot to a later slot within
/// the deadline that the spare capacity would allow.
///
/// The list is empty exactly when no schedule can be pushed further toward
/// its deadline.
pub fn verify_alap_fixpoint(state: &FixpointState) -> Result<Vec<Violation>, OracleError> {
    guard(
        "schedule count",
        state.schedules.len(),
        MAX_FIXPOINT_SCHEDULES,
    )?;
    let last = state
        .schedules
        .iter()
        .map(|s| s.deadline)
        .max()
        .unwrap_or(state.now);
    guard(
        "slot span",
        last.saturating_sub(state.now) as usize,
        MAX_FIXPOINT_SLOTS as usize,
    )?;

    let mut load: BTreeMap<((u32, u32), u64), f64> = BTreeMap::new();
    for s in &state.schedules {
        if let Some((&slot, _)) = s
            .rates
            .iter()
            .find(|(&slot, _)| slot <= state.now || slot > s.deadline)
        {
            return Err(OracleError::BadInput(format!(
                "{} has rate at slot {slot}",
                s.label
            )));
        }
        for &edge in &s.edges {
            for (&slot, &rate) in &s.rates {
                *load.entry((edge, slot)).or_default() += rate;
            }
        }
    }
    let spare = |edges: &[(u32, u32)], slot: u64| {
        edges
            .iter()
            .map(|&e| state.capacity - load.get(&(e, slot)).copied().unwrap_or(0.0))
            .fold(f64::INFINITY, f64::min)
    };

    let mut violations = Vec::new();
    for s in &state.schedules {
        for (&from, &rate) in &s.rates {
            for to in from + 1..=s.deadline {
                let amount = rate.min(spare(&s.edges, to));
                if amount > TOLERANCE {
                    violations.push(Violation {
                        label: s.label.clone(),
                        from,
                        to,
                        amount,
                    });
                }
            }
        }
    }
    Ok(violations)
}
