//! Exact rooted and unrooted minor-model detection by exhaustive branch-set
//! search, plus definition-level model verification.
//!
//! The search grows one branch set at a time as a connected subset of the
//! unused host vertices, enumerated with a fixed minimum-vertex discipline so
//! each subset is visited exactly once. Pruning: not enough vertices left for
//! the unfilled bags, pattern edges that can no longer be realized, and (in
//! rooted mode) bags that can no longer reach a root. For complete patterns
//! the bags are interchangeable, so their minimum host vertices are required
//! to increase.
//!
//! A deadline miss surfaces as `MinorError::Timeout`, never as an answer.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::to_json_string;
use crate::graph::Graph;

#[derive(Debug, Error)]
pub enum MinorError {
    #[error("unknown vertex id `{0}`")]
    UnknownId(String),
    #[error("pattern graph is empty")]
    EmptyPattern,
    #[error("host has {0} vertices; exhaustive search supports at most 128")]
    HostTooLarge(usize),
    #[error("search budget exhausted after {elapsed:.1?}")]
    Timeout { elapsed: Duration },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    pub limit: Duration,
}

impl SearchBudget {
    pub fn new(limit: Duration) -> Self {
        SearchBudget { limit }
    }

    pub fn seconds(secs: u64) -> Self {
        SearchBudget {
            limit: Duration::from_secs(secs),
        }
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget::seconds(120)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RootConstraint {
    Unrooted,
    Rooted { roots: BTreeSet<String> },
}

impl RootConstraint {
    pub fn rooted<I, S>(roots: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        RootConstraint::Rooted {
            roots: roots.into_iter().map(Into::into).collect(),
        }
    }
}

/// An assignment of disjoint connected branch sets of the host to the
/// vertices of the pattern.
#[derive(Debug, Clone)]
pub struct MinorModel {
    pub pattern: Graph,
    pub host: Graph,
    pub branch_sets: BTreeMap<String, BTreeSet<String>>,
}

impl MinorModel {
    pub fn to_witness_document(&self) -> String {
        #[derive(Serialize, Deserialize)]
        struct WitnessDoc {
            pattern: String,
            host: String,
            branch_sets: BTreeMap<String, Vec<String>>,
        }
        let doc = WitnessDoc {
            pattern: self.pattern.name().to_owned(),
            host: self.host.name().to_owned(),
            branch_sets: self
                .branch_sets
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().cloned().collect()))
                .collect(),
        };
        to_json_string(&doc)
    }
}

/// Complete pattern `K_t` on vertices `k1..kt`.
pub fn complete_pattern(t: usize) -> Graph {
    Graph::complete(format!("K{t}"), "k", t)
}

/// Finds a valid model of `pattern` in `host` if one exists. Exhaustive: an
/// `Ok(None)` within budget means no model exists.
pub fn find_model(
    host: &Graph,
    pattern: &Graph,
    rc: &RootConstraint,
    budget: SearchBudget,
) -> Result<Option<MinorModel>, MinorError> {
    if pattern.vertex_count() == 0 {
        return Err(MinorError::EmptyPattern);
    }
    let n = host.vertex_count();
    if n > 128 {
        return Err(MinorError::HostTooLarge(n));
    }
    let host_adj = host.adjacency();
    let t = pattern.vertex_count();

    let mut roots_mask: u128 = 0;
    let rooted = match rc {
        RootConstraint::Unrooted => false,
        RootConstraint::Rooted { roots } => {
            for r in roots {
                match host_adj.index_of(r) {
                    Some(i) => roots_mask |= 1u128 << i,
                    None => return Err(MinorError::UnknownId(r.clone())),
                }
            }
            true
        }
    };
    if t > n || (rooted && (roots_mask.count_ones() as usize) < t) {
        return Ok(None);
    }

    let mut adj = vec![0u128; n];
    for v in 0..n {
        for &u in &host_adj.adj[v] {
            adj[v] |= 1u128 << u;
        }
    }

    let pattern_adj = pattern.adjacency();
    let complete = (0..t).all(|i| pattern_adj.adj[i].len() == t - 1);
    // Bag placement order: complete patterns keep the natural order (all
    // vertices are equivalent); otherwise high-degree pattern vertices first
    // so adjacency requirements bind early.
    let mut order: Vec<usize> = (0..t).collect();
    if !complete {
        order.sort_by_key(|&p| (std::cmp::Reverse(pattern_adj.adj[p].len()), p));
    }
    let level_of: BTreeMap<usize, usize> = order.iter().enumerate().map(|(l, &p)| (p, l)).collect();
    let mut req_prev: Vec<Vec<usize>> = vec![Vec::new(); t];
    let mut future_req: Vec<Vec<bool>> = vec![vec![false; t + 1]; t];
    for lvl in 0..t {
        let p = order[lvl];
        for &q in &pattern_adj.adj[p] {
            let ql = level_of[&q];
            if ql < lvl {
                req_prev[lvl].push(ql);
            }
        }
    }
    for j in 0..t {
        let p = order[j];
        for lvl in (0..=t).rev() {
            let later = if lvl < t {
                future_req[j][lvl + 1]
                    || (lvl > j && pattern_adj.adj[p].contains(&order[lvl]))
            } else {
                false
            };
            future_req[j][lvl] = later;
        }
    }

    let start = Instant::now();
    let mut search = Search {
        adj: &adj,
        all: if n == 128 { !0 } else { (1u128 << n) - 1 },
        t,
        complete,
        rooted,
        roots: roots_mask,
        req_prev: &req_prev,
        future_req: &future_req,
        bags: vec![0; t],
        bag_nbrs: vec![0; t],
        used: 0,
        result: None,
        start,
        deadline: start.checked_add(budget.limit),
        ticker: 0,
        arena: Vec::with_capacity(1024),
    };
    let found = search.place(0, 0)?;
    if !found {
        return Ok(None);
    }
    let bags = search.result.expect("found search records its bags");
    let mut branch_sets = BTreeMap::new();
    for lvl in 0..t {
        let pattern_id = pattern_adj.ids[order[lvl]].clone();
        let mut set = BTreeSet::new();
        let mut mask = bags[lvl];
        while mask != 0 {
            let v = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            set.insert(host_adj.ids[v].clone());
        }
        branch_sets.insert(pattern_id, set);
    }
    Ok(Some(MinorModel {
        pattern: pattern.clone(),
        host: host.clone(),
        branch_sets,
    }))
}

pub fn is_minor_free(
    host: &Graph,
    pattern: &Graph,
    rc: &RootConstraint,
    budget: SearchBudget,
) -> Result<bool, MinorError> {
    Ok(find_model(host, pattern, rc, budget)?.is_none())
}

/// Checks a model against the definition, independently of the search logic:
/// branch sets nonempty, pairwise disjoint, connected, every pattern edge
/// witnessed by a host edge, and (in rooted mode) every branch set meets the
/// roots.
pub fn verify_model(model: &MinorModel, rc: &RootConstraint) -> Result<bool, MinorError> {
    let host_adj = model.host.adjacency();
    for (pattern_id, set) in &model.branch_sets {
        if !model.pattern.has_vertex(pattern_id) {
            return Err(MinorError::UnknownId(pattern_id.clone()));
        }
        for id in set {
            if !model.host.has_vertex(id) {
                return Err(MinorError::UnknownId(id.clone()));
            }
        }
    }
    if let RootConstraint::Rooted { roots } = rc {
        for r in roots {
            if !model.host.has_vertex(r) {
                return Err(MinorError::UnknownId(r.clone()));
            }
        }
    }
    // Every pattern vertex must own a non-empty bag.
    for v in model.pattern.vertices() {
        match model.branch_sets.get(&v.id) {
            None => return Ok(false),
            Some(set) if set.is_empty() => return Ok(false),
            Some(_) => {}
        }
    }
    // Disjointness.
    let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
    for (pattern_id, set) in &model.branch_sets {
        for id in set {
            if owner.insert(id.as_str(), pattern_id.as_str()).is_some() {
                return Ok(false);
            }
        }
    }
    // Connectivity of each bag.
    for set in model.branch_sets.values() {
        let indices: BTreeSet<usize> = set
            .iter()
            .map(|id| host_adj.index_of(id).expect("checked above"))
            .collect();
        let start = *indices.iter().next().expect("non-empty");
        let mut seen = BTreeSet::from([start]);
        let mut queue = vec![start];
        while let Some(v) = queue.pop() {
            for &u in &host_adj.adj[v] {
                if indices.contains(&u) && seen.insert(u) {
                    queue.push(u);
                }
            }
        }
        if seen.len() != indices.len() {
            return Ok(false);
        }
    }
    // Pattern edges.
    for (a, b) in model.pattern.edges() {
        let sa = &model.branch_sets[a];
        let sb = &model.branch_sets[b];
        let witnessed = sa.iter().any(|x| {
            let xi = host_adj.index_of(x).expect("checked above");
            host_adj.adj[xi]
                .iter()
                .any(|&u| sb.contains(&host_adj.ids[u]))
        });
        if !witnessed {
            return Ok(false);
        }
    }
    if let RootConstraint::Rooted { roots } = rc {
        for set in model.branch_sets.values() {
            if set.is_disjoint(roots) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

struct Search<'a> {
    adj: &'a [u128],
    all: u128,
    t: usize,
    complete: bool,
    rooted: bool,
    roots: u128,
    req_prev: &'a [Vec<usize>],
    future_req: &'a [Vec<bool>],
    bags: Vec<u128>,
    bag_nbrs: Vec<u128>,
    used: u128,
    result: Option<Vec<u128>>,
    start: Instant,
    deadline: Option<Instant>,
    ticker: u32,
    arena: Vec<u32>,
}

fn mask_from(bit: usize) -> u128 {
    if bit >= 128 {
        0
    } else {
        !0u128 << bit
    }
}

impl<'a> Search<'a> {
    fn tick(&mut self) -> Result<(), MinorError> {
        self.ticker = self.ticker.wrapping_add(1);
        if self.ticker & 0xfff == 1 {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    return Err(MinorError::Timeout {
                        elapsed: self.start.elapsed(),
                    });
                }
            }
        }
        Ok(())
    }

    fn place(&mut self, level: usize, min_seed: usize) -> Result<bool, MinorError> {
        if level == self.t {
            self.result = Some(self.bags.clone());
            return Ok(true);
        }
        let avail = self.all & !self.used;
        let needed = (self.t - level) as u32;
        if avail.count_ones() < needed {
            return Ok(false);
        }
        if self.rooted && (avail & self.roots).count_ones() < needed {
            return Ok(false);
        }
        // A placed bag that still owes a pattern edge to an unplaced one must
        // keep an available neighbor.
        for j in 0..level {
            if self.future_req[j][level] && self.bag_nbrs[j] & avail == 0 {
                return Ok(false);
            }
        }
        let max_size = (avail.count_ones() - (needed - 1)) as usize;
        let from = if self.complete { min_seed } else { 0 };
        let mut seeds = avail & mask_from(from);
        while seeds != 0 {
            let seed = seeds.trailing_zeros() as usize;
            seeds &= seeds - 1;
            // The seed is the bag's minimum vertex: smaller available
            // vertices are off limits for this bag.
            let allowed = avail & mask_from(seed);
            let seed_bit = 1u128 << seed;
            let mark = self.arena.len();
            let mut m = self.adj[seed] & allowed & !seed_bit;
            while m != 0 {
                let u = m.trailing_zeros();
                m &= m - 1;
                self.arena.push(u);
            }
            let found = self.grow(
                level,
                seed,
                seed_bit,
                self.adj[seed],
                (mark, self.arena.len() - mark),
                0,
                allowed,
                max_size,
            )?;
            self.arena.truncate(mark);
            if found {
                return Ok(true);
            }
        }
        Ok(false)
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(
        &mut self,
        level: usize,
        seed: usize,
        bag: u128,
        nbrs: u128,
        ext: (usize, usize),
        banned: u128,
        allowed: u128,
        max_size: usize,
    ) -> Result<bool, MinorError> {
        self.tick()?;
        let nbr_outside = nbrs & !bag;
        let req_ok = self.req_prev[level]
            .iter()
            .all(|&j| self.bags[j] & nbr_outside != 0)
            && (!self.rooted || bag & self.roots != 0);
        if req_ok {
            self.bags[level] = bag;
            self.bag_nbrs[level] = nbr_outside;
            self.used |= bag;
            let next_seed = if self.complete { seed + 1 } else { 0 };
            let found = self.place(level + 1, next_seed)?;
            self.used &= !bag;
            self.bags[level] = 0;
            self.bag_nbrs[level] = 0;
            if found {
                return Ok(true);
            }
        }
        if (bag.count_ones() as usize) >= max_size {
            return Ok(false);
        }
        // Reachability pruning: nothing outside `possible` can ever join this
        // bag, so unmet requirements must be satisfiable from it.
        let unmet_req = self.req_prev[level]
            .iter()
            .any(|&j| self.bags[j] & nbr_outside == 0);
        let unmet_root = self.rooted && bag & self.roots == 0;
        if unmet_req || unmet_root {
            let possible = (allowed & !banned & !bag) | bag;
            if unmet_root && possible & self.roots == 0 {
                return Ok(false);
            }
            if unmet_req {
                let mut potential = nbrs;
                let mut m = possible & !bag;
                while m != 0 {
                    let u = m.trailing_zeros() as usize;
                    m &= m - 1;
                    potential |= self.adj[u];
                }
                for &j in &self.req_prev[level] {
                    if self.bags[j] & nbr_outside == 0 && self.bags[j] & potential == 0 {
                        return Ok(false);
                    }
                }
            }
        }
        let (start, len) = ext;
        let mut banned = banned;
        for idx in 0..len {
            let u = self.arena[start + idx] as usize;
            let u_bit = 1u128 << u;
            if banned & u_bit != 0 {
                continue;
            }
            let new_bag = bag | u_bit;
            let new_nbrs = nbrs | self.adj[u];
            // seen = bag + every current frontier member + banned: new
            // frontier candidates must be fresh.
            let mut seen = new_bag | banned;
            for j in idx + 1..len {
                seen |= 1u128 << self.arena[start + j];
            }
            let mark = self.arena.len();
            for j in idx + 1..len {
                let w = self.arena[start + j];
                self.arena.push(w);
            }
            let mut fresh = self.adj[u] & allowed & !seen;
            while fresh != 0 {
                let w = fresh.trailing_zeros();
                fresh &= fresh - 1;
                self.arena.push(w);
            }
            let new_len = self.arena.len() - mark;
            let found = self.grow(
                level,
                seed,
                new_bag,
                new_nbrs,
                (mark, new_len),
                banned,
                allowed,
                max_size,
            )?;
            self.arena.truncate(mark);
            if found {
                return Ok(true);
            }
            banned |= u_bit;
        }
        Ok(false)
    }
}
