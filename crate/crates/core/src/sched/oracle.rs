//! Brute-force reference optimizer.
//!
//! Enumerates every direction assignment, every permutation of the CNOTs on
//! each wire and every orientation of crosstalk pairs, keeps the acyclic
//! combinations, cancels adjacent Hadamards on each wire sequence, schedules
//! by fixpoint relaxation and returns the best leaf. It shares no search or
//! bounding code with the branch and bound solver.

use super::{ModelVars, ObjectiveKind, ObjectiveValue, SchedError, SchedModel, Solution, Time};

pub const ORACLE_CAP: usize = 6;

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn acyclic(nodes: usize, edges: &[(usize, usize)]) -> bool {
    let mut indeg = vec![0usize; nodes];
    for &(_, y) in edges {
        indeg[y] += 1;
    }
    let mut ready: Vec<usize> = (0..nodes).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = ready.pop() {
        seen += 1;
        for &(x, y) in edges {
            if x == v {
                indeg[y] -= 1;
                if indeg[y] == 0 {
                    ready.push(y);
                }
            }
        }
    }
    seen == nodes
}

#[derive(Clone, Copy, PartialEq)]
enum Item {
    Prep,
    Pre(usize),
    Cnot(usize),
    Post(usize),
}

struct Leaf {
    value: ObjectiveValue,
    vars: ModelVars,
}

pub fn oracle_search(m: &SchedModel) -> Result<Solution, SchedError> {
    let nc = m.cnot_count();
    if nc > ORACLE_CAP {
        return Err(SchedError::CapExceeded {
            cnots: nc,
            cap: ORACLE_CAP,
        });
    }
    let wire_perms: Vec<Vec<Vec<usize>>> = (0..m.n())
        .map(|q| {
            let incident: Vec<usize> = (0..nc).filter(|&f| m.cnots[f].touches(q)).collect();
            permutations(&incident)
        })
        .collect();
    let xt = &m.crosstalk_pairs;
    let kind = m.objective.selector;
    let mut best: Option<((i64, Time), Leaf)> = None;
    let mut choice = vec![0usize; m.n()];
    for dir_mask in 0u32..1 << nc {
        // CNOT 0 is the most significant bit, so `true` prefixes come first
        let dirs: Vec<bool> = (0..nc).map(|f| dir_mask >> (nc - 1 - f) & 1 == 0).collect();
        choice.iter_mut().for_each(|c| *c = 0);
        loop {
            let orders: Vec<&Vec<usize>> = (0..m.n()).map(|q| &wire_perms[q][choice[q]]).collect();
            for xt_mask in 0u32..1 << xt.len() {
                let mut edges = Vec::new();
                for o in &orders {
                    for w in o.windows(2) {
                        edges.push((w[0], w[1]));
                    }
                }
                let xt_edges: Vec<(usize, usize)> = xt
                    .iter()
                    .enumerate()
                    .map(|(k, &(i, j))| {
                        if xt_mask >> k & 1 == 0 {
                            (i, j)
                        } else {
                            (j, i)
                        }
                    })
                    .collect();
                edges.extend(&xt_edges);
                if !acyclic(nc, &edges) {
                    continue;
                }
                let leaf = evaluate(m, &dirs, &orders, &xt_edges);
                let key = leaf.value.key(kind);
                if best.as_ref().is_none_or(|(k, _)| key < *k) {
                    best = Some((key, leaf));
                }
            }
            // odometer over per-wire permutations
            let mut q = 0;
            while q < m.n() {
                choice[q] += 1;
                if choice[q] < wire_perms[q].len() {
                    break;
                }
                choice[q] = 0;
                q += 1;
            }
            if q == m.n() {
                break;
            }
        }
    }
    let (_, leaf) = best.ok_or(SchedError::Infeasible)?;
    Ok(Solution {
        vars: leaf.vars,
        objective_value: leaf.value,
        proven_optimal: true,
    })
}

fn evaluate(
    m: &SchedModel,
    dirs: &[bool],
    orders: &[&Vec<usize>],
    xt_edges: &[(usize, usize)],
) -> Leaf {
    let nc = m.cnot_count();
    let n = m.n();
    let id = |q: usize, it: Item| match it {
        Item::Prep => nc + q,
        Item::Cnot(f) => f,
        Item::Pre(f) => nc + n + 2 * f,
        Item::Post(f) => nc + n + 2 * f + 1,
    };
    let ng = nc + n + 2 * nc;
    let mut dur = vec![0i64; ng];
    for (f, c) in m.cnots.iter().enumerate() {
        let (tgt, d) = if dirs[f] {
            (c.b, c.duration_ab)
        } else {
            (c.a, c.duration_ba)
        };
        dur[f] = d;
        dur[id(tgt, Item::Pre(f))] = m.h_duration[tgt];
        dur[id(tgt, Item::Post(f))] = m.h_duration[tgt];
    }
    for q in 0..n {
        dur[nc + q] = m.h_duration[q];
    }

    let mut canceled = vec![false; ng];
    let mut chains: Vec<Vec<usize>> = Vec::with_capacity(n);
    for q in 0..n {
        let mut seq = vec![Item::Prep];
        for &f in orders[q] {
            let tgt = if dirs[f] { m.cnots[f].b } else { m.cnots[f].a };
            if tgt == q {
                seq.extend([Item::Pre(f), Item::Cnot(f), Item::Post(f)]);
            } else {
                seq.push(Item::Cnot(f));
            }
        }
        let is_h = |it: Item| !matches!(it, Item::Cnot(_));
        let mut kept = Vec::new();
        let mut i = 0;
        while i < seq.len() {
            if i + 1 < seq.len() && is_h(seq[i]) && is_h(seq[i + 1]) {
                canceled[id(q, seq[i])] = true;
                canceled[id(q, seq[i + 1])] = true;
                i += 2;
            } else {
                kept.push(id(q, seq[i]));
                i += 1;
            }
        }
        chains.push(kept);
    }

    let mut start = vec![0i64; ng];
    loop {
        let mut changed = false;
        let mut relax = |a: usize, b: usize, start: &mut Vec<i64>| {
            if start[b] < start[a] + dur[a] {
                start[b] = start[a] + dur[a];
                changed = true;
            }
        };
        for chain in &chains {
            for w in chain.windows(2) {
                relax(w[0], w[1], &mut start);
            }
        }
        for &(x, y) in xt_edges {
            relax(x, y, &mut start);
        }
        if !changed {
            break;
        }
    }

    let canceled_count = canceled.iter().filter(|&&c| c).count() as i64;
    let wire_end: Vec<i64> = chains
        .iter()
        .map(|c| c.iter().map(|&g| start[g] + dur[g]).max().unwrap_or(0))
        .collect();
    let makespan = wire_end.iter().copied().max().unwrap_or(0);
    let slack = (0..n)
        .map(|q| m.coherence[q] - wire_end[q])
        .min()
        .unwrap_or(0);
    let value = match m.objective.selector {
        ObjectiveKind::MaxCancellation => ObjectiveValue::Count(canceled_count),
        ObjectiveKind::MinMakespan => ObjectiveValue::Time(Time::from_integer(makespan)),
        ObjectiveKind::MaxRemainingCoherence => ObjectiveValue::Time(Time::from_integer(slack)),
        ObjectiveKind::SmtRuntime => ObjectiveValue::Lex {
            canceled: canceled_count,
            makespan: Time::from_integer(makespan),
        },
    };

    // park canceled Hadamards inside a CNOT targeting their wire
    for f in 0..nc {
        let tgt = if dirs[f] { m.cnots[f].b } else { m.cnots[f].a };
        let pre = id(tgt, Item::Pre(f));
        let post = id(tgt, Item::Post(f));
        if canceled[pre] {
            start[pre] = start[f];
        }
        if canceled[post] {
            start[post] = start[f] + dur[f] - dur[post];
        }
    }
    for q in 0..n {
        if canceled[nc + q] {
            start[nc + q] = start[orders[q][0]];
        }
    }
    let s: Vec<Time> = start.iter().map(|&x| Time::from_integer(x)).collect();
    let t: Vec<Time> = (0..ng)
        .map(|g| Time::from_integer(start[g] + dur[g]))
        .collect();
    Leaf {
        value,
        vars: ModelVars {
            c: dirs.to_vec(),
            s,
            t,
            b: canceled,
        },
    }
}
