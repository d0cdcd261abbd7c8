//! Exact branch and bound over CNOT directions and per-wire CNOT orders.
//!
//! A leaf fixes every direction and a total order of the CNOTs on each wire.
//! Within a leaf every adjacent Hadamard pair is canceled (PREP with the PRE
//! of a first CNOT targeting the wire, POST with the next PRE when both CNOTs
//! target the wire); canceling never lengthens any wire, so this is optimal
//! for every objective. The remaining gates are scheduled as soon as possible
//! along the wire chains, which minimizes every end time at once.

use super::{check_solution, ModelVars, ObjectiveKind, SchedError, SchedModel, Solution, Time};

pub const DEFAULT_EXACT_CAP: usize = 10;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub cap: usize,
    /// Restrict the search to these CNOT directions.
    pub fixed_directions: Option<Vec<bool>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_EXACT_CAP,
            fixed_directions: None,
        }
    }
}

pub fn solve_exact(m: &SchedModel) -> Result<Solution, SchedError> {
    solve_exact_with(m, &SolveOptions::default())
}

pub fn solve_exact_with(m: &SchedModel, opts: &SolveOptions) -> Result<Solution, SchedError> {
    let nc = m.cnot_count();
    if nc > opts.cap {
        return Err(SchedError::CapExceeded {
            cnots: nc,
            cap: opts.cap,
        });
    }
    assert!(nc <= 64, "reachability masks hold at most 64 CNOTs");
    let mut pairs = Vec::new();
    for w in &m.wire_cnots {
        for (i, &f) in w.iter().enumerate() {
            for &g in &w[i + 1..] {
                pairs.push((f, g));
            }
        }
    }
    pairs.extend(m.crosstalk_pairs.iter().copied());
    let mut search = Search {
        m,
        kind: m.objective.selector,
        pairs,
        fixed: opts.fixed_directions.clone(),
        dirs: vec![None; nc],
        reach: vec![0; nc],
        best: None,
    };
    search.dfs(0);
    let (_, vars) = search.best.ok_or(SchedError::Infeasible)?;
    Ok(Solution {
        objective_value: m.objective_value(&vars),
        vars,
        proven_optimal: true,
    })
}

type Key = (i64, Time);

struct Search<'a> {
    m: &'a SchedModel,
    kind: ObjectiveKind,
    pairs: Vec<(usize, usize)>,
    fixed: Option<Vec<bool>>,
    dirs: Vec<Option<bool>>,
    /// `reach[i]` has bit `j` set when CNOT `i` must end before `j` starts.
    reach: Vec<u64>,
    best: Option<(Key, ModelVars)>,
}

impl Search<'_> {
    fn dfs(&mut self, depth: usize) {
        if let Some((best, _)) = &self.best {
            if self.lower_bound() >= *best {
                return;
            }
        }
        let nc = self.m.cnot_count();
        if depth < nc {
            let choices = match &self.fixed {
                Some(d) => vec![d[depth]],
                None => vec![true, false],
            };
            for c in choices {
                self.dirs[depth] = Some(c);
                self.dfs(depth + 1);
            }
            self.dirs[depth] = None;
            return;
        }
        let k = depth - nc;
        if k == self.pairs.len() {
            self.leaf();
            return;
        }
        let (i, j) = self.pairs[k];
        if self.reach[i] >> j & 1 == 1 || self.reach[j] >> i & 1 == 1 {
            self.dfs(depth + 1);
            return;
        }
        for (x, y) in [(i, j), (j, i)] {
            let saved = self.reach.clone();
            self.order(x, y);
            self.dfs(depth + 1);
            self.reach = saved;
        }
    }

    fn order(&mut self, x: usize, y: usize) {
        let succ = self.reach[y] | 1 << y;
        for p in 0..self.reach.len() {
            if p == x || self.reach[p] >> x & 1 == 1 {
                self.reach[p] |= succ;
            }
        }
    }

    fn leaf(&mut self) {
        let dirs: Vec<bool> = self.dirs.iter().map(|d| d.expect("decided")).collect();
        let orders: Vec<Vec<usize>> = self
            .m
            .wire_cnots
            .iter()
            .map(|w| {
                let mut o = w.clone();
                o.sort_by_key(|&f| w.iter().filter(|&&g| self.reach[g] >> f & 1 == 1).count());
                o
            })
            .collect();
        let vars = block_schedule(self.m, &dirs, &orders, &self.reach);
        let key = self.m.objective_value(&vars).key(self.kind);
        if self.best.as_ref().is_none_or(|(b, _)| key < *b) {
            self.best = Some((key, vars));
        }
    }

    fn known_last(&self, f: usize, q: usize) -> bool {
        self.m.wire_cnots[q]
            .iter()
            .all(|&g| g == f || self.reach[g] >> f & 1 == 1)
    }

    fn wire_decided(&self, q: usize) -> bool {
        let w = &self.m.wire_cnots[q];
        w.iter().all(|&f| self.dirs[f].is_some())
            && w.iter().enumerate().all(|(i, &f)| {
                w[i + 1..]
                    .iter()
                    .all(|&g| (self.reach[f] | self.reach[g]) & (1 << f | 1 << g) != 0)
            })
    }

    fn lower_bound(&self) -> Key {
        let m = self.m;
        let nc = m.cnot_count();
        let zero = Time::from_integer(0);
        let dur: Vec<i64> = (0..nc)
            .map(|f| match self.dirs[f] {
                Some(c) => m.cnots[f].duration(c),
                None => m.cnots[f].duration_ab.min(m.cnots[f].duration_ba),
            })
            .collect();
        let preds = |f: usize| (0..nc).filter(move |&g| self.reach[g] >> f & 1 == 1);
        let mut order: Vec<usize> = (0..nc).collect();
        order.sort_by_key(|&f| preds(f).count());
        let mut es = vec![0i64; nc];
        for &f in &order {
            let c = &m.cnots[f];
            // the control wire always runs a Hadamard or an earlier CNOT first
            let mut start = match self.dirs[f] {
                Some(d) => m.h_duration[c.control(d)],
                None => m.h_duration[c.a].min(m.h_duration[c.b]),
            };
            for g in preds(f) {
                start = start.max(es[g] + dur[g]);
            }
            es[f] = start;
        }
        let mut wire_end = vec![0i64; m.n()];
        let mut losses = 0i64;
        for q in 0..m.n() {
            let w = &m.wire_cnots[q];
            let load: i64 = w.iter().map(|&f| dur[f]).sum::<i64>() + m.h_duration[q];
            let mut end = load;
            for &f in w {
                let mut e = es[f] + dur[f];
                if self.dirs[f].is_some_and(|d| m.cnots[f].target(d) == q) && self.known_last(f, q)
                {
                    e += m.h_duration[q];
                }
                end = end.max(e);
            }
            wire_end[q] = end;
            if (self.kind == ObjectiveKind::MaxCancellation
                || self.kind == ObjectiveKind::SmtRuntime)
                && self.wire_decided(q)
            {
                losses += wire_losses(m, q, &self.dirs, &self.reach);
            }
        }
        let makespan = Time::from_integer(wire_end.iter().copied().max().unwrap_or(0));
        let max_canceled = 2 * (nc as i64 - losses);
        match self.kind {
            ObjectiveKind::MaxCancellation => (-max_canceled, zero),
            ObjectiveKind::MinMakespan => (0, makespan),
            ObjectiveKind::MaxRemainingCoherence => {
                let slack = (0..m.n())
                    .map(|q| m.coherence[q] - wire_end[q])
                    .min()
                    .unwrap_or(0);
                (0, -Time::from_integer(slack))
            }
            ObjectiveKind::SmtRuntime => (-max_canceled, makespan),
        }
    }
}

/// Targeting CNOTs on a fully decided wire whose PRE cannot cancel.
fn wire_losses(m: &SchedModel, q: usize, dirs: &[Option<bool>], reach: &[u64]) -> i64 {
    let w = &m.wire_cnots[q];
    let mut o = w.clone();
    o.sort_by_key(|&f| w.iter().filter(|&&g| reach[g] >> f & 1 == 1).count());
    let targets = |f: usize| m.cnots[f].target(dirs[f].expect("decided")) == q;
    (1..o.len())
        .filter(|&j| targets(o[j]) && !targets(o[j - 1]))
        .count() as i64
}

/// ASAP schedule of a fully decided leaf with maximal pair cancellation.
/// `orders[q]` lists the CNOTs of wire `q` in time order; `reach` carries the
/// crosstalk orientations.
pub(crate) fn block_schedule(
    m: &SchedModel,
    dirs: &[bool],
    orders: &[Vec<usize>],
    reach: &[u64],
) -> ModelVars {
    let nc = m.cnot_count();
    let ng = m.gate_count();
    let mut b = vec![false; ng];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); ng];
    let mut first_cnot = vec![usize::MAX; m.n()];
    for (q, order) in orders.iter().enumerate() {
        let targets = |f: usize| m.cnots[f].target(dirs[f]) == q;
        let mut chain = Vec::new();
        first_cnot[q] = order[0];
        if targets(order[0]) {
            b[m.prep_id(q)] = true;
            b[m.pre_id(order[0])] = true;
        } else {
            chain.push(m.prep_id(q));
        }
        for (j, &f) in order.iter().enumerate() {
            if targets(f) && j > 0 && targets(order[j - 1]) {
                b[m.pre_id(f)] = true;
                b[m.post_id(order[j - 1])] = true;
            }
        }
        for &f in order {
            if targets(f) && !b[m.pre_id(f)] {
                chain.push(m.pre_id(f));
            }
            chain.push(f);
            if targets(f) && !b[m.post_id(f)] {
                chain.push(m.post_id(f));
            }
        }
        for w in chain.windows(2) {
            preds[w[1]].push(w[0]);
        }
    }
    for &(x, y) in &m.crosstalk_pairs {
        if reach[x] >> y & 1 == 1 {
            preds[y].push(x);
        } else {
            preds[x].push(y);
        }
    }
    let dur: Vec<i64> = (0..ng).map(|g| m.gate_duration(g, dirs)).collect();
    let mut start: Vec<Option<i64>> = vec![None; ng];
    fn resolve(g: usize, preds: &[Vec<usize>], dur: &[i64], start: &mut [Option<i64>]) -> i64 {
        if let Some(s) = start[g] {
            return s;
        }
        let mut s = 0;
        for &p in &preds[g] {
            s = s.max(resolve(p, preds, dur, start) + dur[p]);
        }
        start[g] = Some(s);
        s
    }
    for g in 0..ng {
        if m.is_hadamard(g) && b[g] {
            continue;
        }
        resolve(g, &preds, &dur, &mut start);
    }
    // canceled Hadamards sit inside the CNOT they cancel against
    for f in 0..nc {
        let sf = start[f].expect("scheduled");
        if b[m.pre_id(f)] {
            start[m.pre_id(f)] = Some(sf);
        }
        if b[m.post_id(f)] {
            start[m.post_id(f)] = Some(sf + dur[f] - dur[m.post_id(f)]);
        }
    }
    for q in 0..m.n() {
        let p = m.prep_id(q);
        if b[p] {
            start[p] = start[first_cnot[q]];
        }
    }
    let s: Vec<Time> = start
        .iter()
        .map(|x| Time::from_integer(x.expect("every gate placed")))
        .collect();
    let t = s
        .iter()
        .zip(&dur)
        .map(|(s, d)| s + Time::from_integer(*d))
        .collect();
    ModelVars {
        c: dirs.to_vec(),
        s,
        t,
        b,
    }
}

/// Rebuild `s` as the ASAP block schedule with the same directions, wire
/// orders and crosstalk orientations. Solutions from an external solver may
/// carry fractional slack; the rebuilt one has whole-nanosecond times. `s` is
/// returned unchanged if the rebuild would be worse or infeasible.
pub fn canonicalize(m: &SchedModel, s: &Solution) -> Solution {
    let nc = m.cnot_count();
    let v = &s.vars;
    if v.c.len() != nc || v.s.len() != m.gate_count() || m.wire_cnots.iter().any(|w| w.is_empty()) {
        return s.clone();
    }
    let before = |x: usize, y: usize| (v.s[x], x) < (v.s[y], y);
    let reach: Vec<u64> = (0..nc)
        .map(|x| {
            (0..nc)
                .filter(|&y| before(x, y))
                .fold(0u64, |acc, y| acc | 1 << y)
        })
        .collect();
    let orders: Vec<Vec<usize>> = m
        .wire_cnots
        .iter()
        .map(|w| {
            let mut o = w.clone();
            o.sort_by_key(|&f| (v.s[f], f));
            o
        })
        .collect();
    let vars = block_schedule(m, &v.c, &orders, &reach);
    let rebuilt = Solution {
        objective_value: m.objective_value(&vars),
        vars,
        proven_optimal: s.proven_optimal,
    };
    let kind = m.objective.selector;
    if rebuilt.objective_value.key(kind) <= s.objective_value.key(kind)
        && check_solution(m, &rebuilt).is_empty()
    {
        rebuilt
    } else {
        s.clone()
    }
}
