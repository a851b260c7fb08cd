//! Exhaustive confluence checking over small scripts.
//!
//! A script is a sequence of mutations, each executed at one replica on that
//! replica's current state. After every mutation the replica broadcasts its
//! full state to every other replica. The checker enumerates every way those
//! broadcasts can be interleaved with the mutations at each receiver, with and
//! without one extra copy of one broadcast, and verifies that:
//!
//! - a mutation's outcome depends only on which broadcasts its replica had
//!   received, never on their order or on duplicates, and
//! - once every broadcast is delivered, every replica in every interleaving
//!   holds the join of all broadcast states.
//!
//! Interleavings are counted per receiver history: replica `q` may receive
//! broadcast `i` before its own mutation `j` only if `i < j` (the broadcast has
//! been sent), and any remaining broadcasts arrive after its last mutation in
//! any order. The global count is the product of the per-replica counts.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use edgeflow_core::{Element, LatticeKind, LatticeValue, Mutation, ReplicaId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    ORSet,
    PNCounter,
}

impl Target {
    pub fn kind(self) -> LatticeKind {
        match self {
            Target::ORSet => LatticeKind::ORSet,
            Target::PNCounter => LatticeKind::PNCounter,
        }
    }

    /// The mutation alphabet explored for this target.
    pub fn alphabet(self) -> Vec<Mutation> {
        match self {
            Target::ORSet => {
                let (x, y) = (Element::from("x"), Element::from("y"));
                vec![
                    Mutation::Add(x.clone()),
                    Mutation::Add(y.clone()),
                    Mutation::Remove(x),
                    Mutation::Remove(y),
                ]
            }
            Target::PNCounter => vec![Mutation::Increment(1), Mutation::Decrement(1)],
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::ORSet => "orset",
            Target::PNCounter => "pncounter",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub replica: ReplicaId,
    pub mutation: Mutation,
}

pub fn describe(script: &[Step]) -> String {
    script
        .iter()
        .map(|s| format!("{}:{}", s.replica, s.mutation))
        .collect::<Vec<_>>()
        .join(" ; ")
}

/// One extra copy of broadcast `message` delivered to `to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Duplicate {
    pub message: usize,
    pub to: ReplicaId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub target: Target,
    pub script: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TargetSummary {
    pub scripts: u64,
    pub interleavings: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FuzzReport {
    pub max_ops: usize,
    pub replicas: usize,
    pub per_target: BTreeMap<String, TargetSummary>,
    pub scripts: u64,
    pub interleavings: u64,
    pub sampled_runs: u64,
    pub violations: Vec<Violation>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every script of length `1..=max_ops` over `replicas` replicas.
pub fn scripts(target: Target, max_ops: usize, replicas: usize) -> Vec<Vec<Step>> {
    let alphabet = target.alphabet();
    let choices: Vec<Step> = (0..replicas)
        .flat_map(|r| {
            alphabet.iter().map(move |m| Step {
                replica: ReplicaId(r as u32),
                mutation: m.clone(),
            })
        })
        .collect();
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<Step>> = vec![Vec::new()];
    for _ in 0..max_ops {
        let mut next = Vec::with_capacity(frontier.len() * choices.len());
        for prefix in &frontier {
            for choice in &choices {
                let mut script = prefix.clone();
                script.push(choice.clone());
                next.push(script);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// All single-duplicate choices for a script, preceded by `None`.
pub fn duplicates(script: &[Step], replicas: usize) -> Vec<Option<Duplicate>> {
    let mut out = vec![None];
    for (message, step) in script.iter().enumerate() {
        for q in 0..replicas as u32 {
            if ReplicaId(q) != step.replica {
                out.push(Some(Duplicate {
                    message,
                    to: ReplicaId(q),
                }));
            }
        }
    }
    out
}

/// Checks one script under one duplicate choice and returns the number of
/// interleavings explored.
pub fn check_script(
    target: Target,
    script: &[Step],
    replicas: usize,
    duplicate: Option<Duplicate>,
) -> Result<u64, String> {
    let mut copies = vec![vec![0u8; script.len()]; replicas];
    for (i, step) in script.iter().enumerate() {
        for (q, row) in copies.iter_mut().enumerate() {
            if ReplicaId(q as u32) != step.replica {
                row[i] = 1;
            }
        }
    }
    if let Some(d) = duplicate {
        copies[d.to.index()][d.message] += 1;
    }
    let mut explorer = Explorer {
        script,
        bottom: LatticeValue::bottom(target.kind()),
        outcomes: BTreeMap::new(),
        memo: HashMap::new(),
    };
    let mut states = vec![explorer.bottom.clone(); replicas];
    let mut seen = vec![BTreeSet::new(); replicas];
    let mut observed = Vec::with_capacity(script.len());
    let mut messages = Vec::with_capacity(script.len());
    explorer.explore(
        0,
        &mut states,
        &mut seen,
        &mut observed,
        &mut messages,
        &mut copies,
    )
}

/// Next mutation, copies still in flight per receiver, and the broadcasts
/// each earlier mutation had observed.
type SubtreeKey = (usize, Vec<Vec<u8>>, Vec<BTreeSet<usize>>);

struct Explorer<'a> {
    script: &'a [Step],
    bottom: LatticeValue,
    /// Broadcast states keyed by the set of broadcasts each mutation observed.
    outcomes: BTreeMap<Vec<BTreeSet<usize>>, Vec<LatticeValue>>,
    /// Interleaving counts of already explored subtrees, which a
    /// [`SubtreeKey`] fully determines.
    memo: HashMap<SubtreeKey, u64>,
}

impl Explorer<'_> {
    fn explore(
        &mut self,
        j: usize,
        states: &mut Vec<LatticeValue>,
        seen: &mut Vec<BTreeSet<usize>>,
        observed: &mut Vec<BTreeSet<usize>>,
        messages: &mut Vec<LatticeValue>,
        copies: &mut [Vec<u8>],
    ) -> Result<u64, String> {
        let key = (j, copies.to_vec(), observed.clone());
        if let Some(&n) = self.memo.get(&key) {
            return Ok(n);
        }
        let n = self.expand(j, states, seen, observed, messages, copies)?;
        self.memo.insert(key, n);
        Ok(n)
    }

    fn expand(
        &mut self,
        j: usize,
        states: &mut Vec<LatticeValue>,
        seen: &mut Vec<BTreeSet<usize>>,
        observed: &mut Vec<BTreeSet<usize>>,
        messages: &mut Vec<LatticeValue>,
        copies: &mut [Vec<u8>],
    ) -> Result<u64, String> {
        if j == self.script.len() {
            return self.finish(states, observed, messages, copies);
        }
        let q = self.script[j].replica.index();
        let mut total = 0u64;

        // Deliver one more sent broadcast to q before its mutation j.
        for i in 0..messages.len() {
            if copies[q][i] == 0 {
                continue;
            }
            copies[q][i] -= 1;
            let saved = states[q].clone();
            let newly_seen = seen[q].insert(i);
            states[q] = states[q].join(&messages[i]).map_err(|e| e.to_string())?;
            let result = self.explore(j, states, seen, observed, messages, copies);
            states[q] = saved;
            if newly_seen {
                seen[q].remove(&i);
            }
            copies[q][i] += 1;
            total += result?;
        }

        // Or perform mutation j now.
        let step = &self.script[j];
        let saved = states[q].clone();
        states[q] = states[q]
            .apply(step.replica, &step.mutation)
            .map_err(|e| e.to_string())?;
        messages.push(states[q].clone());
        observed.push(seen[q].clone());
        let result = self.explore(j + 1, states, seen, observed, messages, copies);
        observed.pop();
        messages.pop();
        states[q] = saved;
        Ok(total + result?)
    }

    fn finish(
        &mut self,
        states: &[LatticeValue],
        observed: &[BTreeSet<usize>],
        messages: &[LatticeValue],
        copies: &mut [Vec<u8>],
    ) -> Result<u64, String> {
        match self.outcomes.get(observed) {
            Some(previous) if previous.as_slice() != messages => {
                return Err(format!(
                    "mutation outcomes depend on delivery order or duplication (observed sets {observed:?})"
                ));
            }
            Some(_) => {}
            None => {
                self.outcomes.insert(observed.to_vec(), messages.to_vec());
            }
        }

        let mut expected = self.bottom.clone();
        for m in messages {
            expected = expected.join(m).map_err(|e| e.to_string())?;
        }
        let mut product = 1u64;
        for (q, state) in states.iter().enumerate() {
            let mut orderings = 0u64;
            drain_all(state, messages, &mut copies[q], &expected, &mut orderings).map_err(
                |got| {
                    format!(
                        "replica {} ended at {} instead of {}",
                        ReplicaId(q as u32),
                        got.canonical_string(),
                        expected.canonical_string()
                    )
                },
            )?;
            product *= orderings;
        }
        Ok(product)
    }
}

/// Delivers the remaining copies in every distinct order, checking that each
/// order ends at `expected`, and adds the number of orders to `orderings`.
///
/// The state reached after some deliveries is fixed by which copies remain,
/// so each remaining-copies vector is expanded once and its order count is
/// reused by every prefix that reaches it.
fn drain_all(
    state: &LatticeValue,
    messages: &[LatticeValue],
    copies: &mut [u8],
    expected: &LatticeValue,
    orderings: &mut u64,
) -> Result<(), LatticeValue> {
    let mut memo = HashMap::new();
    *orderings += drain(state, messages, copies, expected, &mut memo)?;
    Ok(())
}

fn drain(
    state: &LatticeValue,
    messages: &[LatticeValue],
    copies: &mut [u8],
    expected: &LatticeValue,
    memo: &mut HashMap<Vec<u8>, u64>,
) -> Result<u64, LatticeValue> {
    if let Some(&n) = memo.get(copies) {
        return Ok(n);
    }
    let mut total = 0u64;
    let mut any = false;
    for i in 0..copies.len() {
        if copies[i] == 0 {
            continue;
        }
        any = true;
        let next = state.join(&messages[i]).map_err(|_| state.clone())?;
        copies[i] -= 1;
        let result = drain(&next, messages, copies, expected, memo);
        copies[i] += 1;
        total += result?;
    }
    if !any {
        if state != expected {
            return Err(state.clone());
        }
        total = 1;
    }
    memo.insert(copies.to_vec(), total);
    Ok(total)
}

/// Runs one random interleaving (with one random duplicate) of a random script
/// longer than the exhaustive bound.
pub fn sample_run(
    target: Target,
    rng: &mut ChaCha8Rng,
    ops: usize,
    replicas: usize,
) -> Result<(), String> {
    let alphabet = target.alphabet();
    let script: Vec<Step> = (0..ops)
        .map(|_| Step {
            replica: ReplicaId(rng.gen_range(0..replicas as u32)),
            mutation: alphabet.choose(rng).expect("non-empty alphabet").clone(),
        })
        .collect();
    let bottom = LatticeValue::bottom(target.kind());
    let mut states = vec![bottom.clone(); replicas];
    let mut pending: Vec<(usize, LatticeValue)> = Vec::new();
    let mut sent = Vec::new();
    let deliver =
        |states: &mut Vec<LatticeValue>, (q, m): (usize, LatticeValue)| -> Result<(), String> {
            states[q] = states[q].join(&m).map_err(|e| e.to_string())?;
            Ok(())
        };
    for step in &script {
        while !pending.is_empty() && rng.gen_bool(0.5) {
            let k = rng.gen_range(0..pending.len());
            let item = pending.swap_remove(k);
            deliver(&mut states, item)?;
        }
        let q = step.replica.index();
        states[q] = states[q]
            .apply(step.replica, &step.mutation)
            .map_err(|e| e.to_string())?;
        sent.push(states[q].clone());
        for other in 0..replicas {
            if other != q {
                pending.push((other, states[q].clone()));
            }
        }
    }
    if let Some(dup) = pending.choose(rng).cloned() {
        pending.push(dup);
    }
    pending.shuffle(rng);
    for item in pending {
        deliver(&mut states, item)?;
    }
    let mut expected = bottom;
    for m in &sent {
        expected = expected.join(m).map_err(|e| e.to_string())?;
    }
    match states.iter().position(|s| *s != expected) {
        Some(q) => Err(format!(
            "sampled script `{}` diverged at replica {q}",
            describe(&script)
        )),
        None => Ok(()),
    }
}

/// Exhaustively checks every script up to `max_ops` mutations over up to
/// `replicas` replicas for each target, then `samples` random longer runs.
pub fn run(max_ops: usize, replicas: usize, seed: u64, samples: u64) -> FuzzReport {
    let mut report = FuzzReport {
        max_ops,
        replicas,
        ..FuzzReport::default()
    };
    for target in [Target::ORSet, Target::PNCounter] {
        let mut summary = TargetSummary::default();
        for script in scripts(target, max_ops, replicas) {
            summary.scripts += 1;
            for dup in duplicates(&script, replicas) {
                match check_script(target, &script, replicas, dup) {
                    Ok(n) => summary.interleavings += n,
                    Err(detail) => report.violations.push(Violation {
                        target,
                        script: describe(&script),
                        detail,
                    }),
                }
            }
        }
        report.scripts += summary.scripts;
        report.interleavings += summary.interleavings;
        report.per_target.insert(target.to_string(), summary);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..samples {
        let target = if n % 2 == 0 {
            Target::ORSet
        } else {
            Target::PNCounter
        };
        let ops = rng.gen_range(max_ops + 1..=2 * max_ops.max(1) + 1);
        if let Err(detail) = sample_run(target, &mut rng, ops, replicas.max(1)) {
            report.violations.push(Violation {
                target,
                script: String::new(),
                detail,
            });
        }
        report.sampled_runs += 1;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(r: u32, m: Mutation) -> Step {
        Step {
            replica: ReplicaId(r),
            mutation: m,
        }
    }

    #[test]
    fn script_space_size() {
        // 3 replicas x 4 ORSet mutations = 12 choices per position.
        assert_eq!(scripts(Target::ORSet, 2, 3).len(), 12 + 144);
        assert_eq!(scripts(Target::PNCounter, 3, 2).len(), 4 + 16 + 64);
    }

    #[test]
    fn single_mutation_single_replica() {
        let script = [step(0, Mutation::Add("x".into()))];
        assert_eq!(check_script(Target::ORSet, &script, 1, None), Ok(1));
    }

    #[test]
    fn two_replicas_two_mutations() {
        // A mutates, then B mutates. A receives B's broadcast after its own
        // mutation (1 way). B receives A's broadcast before or after its
        // mutation (2 ways).
        let script = [
            step(0, Mutation::Add("x".into())),
            step(1, Mutation::Remove("x".into())),
        ];
        assert_eq!(check_script(Target::ORSet, &script, 2, None), Ok(2));
        // A duplicate of A's broadcast to B: B sees two copies around one
        // mutation, 3 distinct orders.
        let dup = Duplicate {
            message: 0,
            to: ReplicaId(1),
        };
        assert_eq!(check_script(Target::ORSet, &script, 2, Some(dup)), Ok(3));
    }
}
