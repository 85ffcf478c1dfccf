//! Eliminability of latent node sets.
//!
//! A set `U` is eliminable with respect to a treatment process `x` and the
//! retained nodes `V0 = {x} ∪ v0_rest` if it can be split into an ordered
//! partition `U_1, …, U_K` where each block is δ-separated either from the
//! retained outcome processes (outcome-side) or from the treatment itself
//! (treatment-side), conditioning on `V0` and all later blocks.
//!
//! The search is exhaustive over ordered set partitions for `|U| ≤ 6` (4683
//! partitions at six elements) and falls back to a singleton-block search
//! with backtracking beyond that; the fallback is flagged as heuristic and
//! its failure is reported as inconclusive rather than as non-eliminability.

use super::reach::delta_separated_fast_resolved;
use super::{delta_separated_resolved, ResolvedQuery, SeparationError, DEFAULT_TRAIL_CAP};
use crate::graph::{LocalIndependenceGraph, NodeId, NodeKind, QueryError};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Which of the two block conditions held. Outcome-side is tried first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockCondition {
    /// Block is δ-separated from the retained outcome processes.
    OutcomeSide,
    /// Block is δ-separated from the treatment process.
    TreatmentSide,
}

/// A verified ordered partition witnessing eliminability.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EliminabilityWitness {
    /// Blocks in elimination order, each with the condition that admitted it.
    pub blocks: Vec<(Vec<NodeId>, BlockCondition)>,
    /// True when the result came from the singleton-block search rather than
    /// the exhaustive ordered-partition search.
    pub heuristic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EliminableError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Separation(#[from] SeparationError),
    #[error("treatment `{0}` must be a process node")]
    TreatmentNotProcess(NodeId),
    #[error("eliminability arguments must be pairwise disjoint (`{0}` appears twice)")]
    NotDisjoint(NodeId),
    #[error("singleton-block search failed for {size} latent nodes; larger blocks were not tried, result inconclusive")]
    HeuristicInconclusive { size: usize },
}

const EXHAUSTIVE_LIMIT: usize = 6;

struct Ctx<'g> {
    g: &'g LocalIndependenceGraph,
    u: Vec<usize>,
    x: usize,
    /// Retained nodes other than the treatment.
    v0_rest: Vec<usize>,
    /// Process members of `v0_rest` — the outcome side's targets.
    outcome_targets: Vec<usize>,
    failed: HashMap<u64, ()>,
}

impl Ctx<'_> {
    fn block_condition(&self, block_mask: u64, later_mask: u64) -> Option<BlockCondition> {
        let sources: Vec<usize> = bits(&self.u, block_mask);
        let later: Vec<usize> = bits(&self.u, later_mask);

        // Outcome-side: block ↛ outcome-targets | (V0, later blocks).
        if self.outcome_targets.is_empty() || {
            let mut extra: Vec<usize> = self
                .v0_rest
                .iter()
                .copied()
                .filter(|i| !self.outcome_targets.contains(i))
                .collect();
            extra.push(self.x);
            extra.extend(&later);
            extra.sort_unstable();
            let q = ResolvedQuery {
                sources: sources.clone(),
                targets: self.outcome_targets.clone(),
                extra,
            };
            delta_separated_fast_resolved(self.g, &q)
        } {
            return Some(BlockCondition::OutcomeSide);
        }

        // Treatment-side: block ↛ x | (V0, later blocks).
        let mut extra: Vec<usize> = self.v0_rest.clone();
        extra.extend(&later);
        extra.sort_unstable();
        let q = ResolvedQuery { sources, targets: vec![self.x], extra };
        if delta_separated_fast_resolved(self.g, &q) {
            return Some(BlockCondition::TreatmentSide);
        }
        None
    }

    /// Find a valid ordered partition of the elements in `remaining`
    /// (bitmask over `self.u`), choosing the first block among the allowed
    /// subset shapes in ascending-bitmask order. Memoises failed remainders.
    fn search(
        &mut self,
        remaining: u64,
        singletons_only: bool,
    ) -> Option<Vec<(u64, BlockCondition)>> {
        if remaining == 0 {
            return Some(Vec::new());
        }
        if self.failed.contains_key(&remaining) {
            return None;
        }
        let members: Vec<u32> =
            (0..self.u.len() as u32).filter(|i| remaining & (1 << i) != 0).collect();
        if singletons_only {
            for &i in &members {
                let block = 1u64 << i;
                if let Some(found) = self.try_block(remaining, block, true) {
                    return Some(found);
                }
            }
        } else {
            let k = members.len();
            for sub in 1u64..(1 << k) {
                let mut block = 0u64;
                for (pos, &i) in members.iter().enumerate() {
                    if sub & (1 << pos) != 0 {
                        block |= 1 << i;
                    }
                }
                if let Some(found) = self.try_block(remaining, block, false) {
                    return Some(found);
                }
            }
        }
        self.failed.insert(remaining, ());
        None
    }

    fn try_block(
        &mut self,
        remaining: u64,
        block: u64,
        singletons_only: bool,
    ) -> Option<Vec<(u64, BlockCondition)>> {
        let later = remaining & !block;
        let cond = self.block_condition(block, later)?;
        let rest = self.search(later, singletons_only)?;
        let mut out = Vec::with_capacity(rest.len() + 1);
        out.push((block, cond));
        out.extend(rest);
        Some(out)
    }
}

fn bits(u: &[usize], mask: u64) -> Vec<usize> {
    let mut out: Vec<usize> =
        u.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &v)| v).collect();
    out.sort_unstable();
    out
}

fn make_ctx<'g>(
    g: &'g LocalIndependenceGraph,
    u: &[NodeId],
    x: &NodeId,
    v0_rest: &[NodeId],
) -> Result<Ctx<'g>, EliminableError> {
    let u_idx = g.resolve(u)?;
    let x_idx = g.index_of(x)?;
    if g.kind(x_idx) != NodeKind::Process {
        return Err(EliminableError::TreatmentNotProcess(g.id(x_idx).clone()));
    }
    let rest_idx = g.resolve(v0_rest)?;
    let mut all: Vec<usize> = u_idx.iter().chain(&rest_idx).copied().collect();
    all.push(x_idx);
    all.sort_unstable();
    for w in all.windows(2) {
        if w[0] == w[1] {
            return Err(EliminableError::NotDisjoint(g.id(w[0]).clone()));
        }
    }
    let outcome_targets: Vec<usize> =
        rest_idx.iter().copied().filter(|&i| g.kind(i) == NodeKind::Process).collect();
    Ok(Ctx { g, u: u_idx, x: x_idx, v0_rest: rest_idx, outcome_targets, failed: HashMap::new() })
}

/// Decide eliminability of `u` with respect to `(x, v0_rest)`.
///
/// Returns `Ok(Some(witness))` with a verified ordered partition,
/// `Ok(None)` when the exhaustive search proves no ordered partition works,
/// and `Err(HeuristicInconclusive)` when only the singleton heuristic was
/// feasible and it failed.
pub fn eliminable(
    g: &LocalIndependenceGraph,
    u: &[NodeId],
    x: &NodeId,
    v0_rest: &[NodeId],
) -> Result<Option<EliminabilityWitness>, EliminableError> {
    let mut ctx = make_ctx(g, u, x, v0_rest)?;
    if ctx.u.is_empty() {
        return Ok(Some(EliminabilityWitness { blocks: Vec::new(), heuristic: false }));
    }
    let full: u64 = (1 << ctx.u.len()) - 1;
    let singletons_only = ctx.u.len() > EXHAUSTIVE_LIMIT;
    match ctx.search(full, singletons_only) {
        Some(blocks) => {
            let blocks = blocks
                .into_iter()
                .map(|(mask, cond)| {
                    (bits(&ctx.u, mask).into_iter().map(|i| g.id(i).clone()).collect(), cond)
                })
                .collect();
            Ok(Some(EliminabilityWitness { blocks, heuristic: singletons_only }))
        }
        None if singletons_only => {
            Err(EliminableError::HeuristicInconclusive { size: ctx.u.len() })
        }
        None => Ok(None),
    }
}

/// Re-verify a proposed ordered partition with the reference trail-based
/// separation, returning the per-block conditions when it is valid.
pub fn verify_witness(
    g: &LocalIndependenceGraph,
    x: &NodeId,
    v0_rest: &[NodeId],
    ordering: &[Vec<NodeId>],
) -> Result<Option<Vec<BlockCondition>>, EliminableError> {
    let u: Vec<NodeId> = ordering.iter().flatten().cloned().collect();
    let ctx = make_ctx(g, &u, x, v0_rest)?;
    {
        let mut sorted = u.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != u.len() {
            return Err(EliminableError::NotDisjoint(u[0].clone()));
        }
    }
    let mut tags = Vec::with_capacity(ordering.len());
    for (k, block) in ordering.iter().enumerate() {
        if block.is_empty() {
            return Ok(None);
        }
        let sources = ctx.g.resolve(block)?;
        let later: Vec<usize> = {
            let ids: Vec<NodeId> = ordering[k + 1..].iter().flatten().cloned().collect();
            ctx.g.resolve(&ids)?
        };
        let outcome_ok = ctx.outcome_targets.is_empty() || {
            let mut extra: Vec<usize> = ctx
                .v0_rest
                .iter()
                .copied()
                .filter(|i| !ctx.outcome_targets.contains(i))
                .collect();
            extra.push(ctx.x);
            extra.extend(&later);
            extra.sort_unstable();
            let q = ResolvedQuery {
                sources: sources.clone(),
                targets: ctx.outcome_targets.clone(),
                extra,
            };
            delta_separated_resolved(ctx.g, &q, DEFAULT_TRAIL_CAP)?.separated
        };
        if outcome_ok {
            tags.push(BlockCondition::OutcomeSide);
            continue;
        }
        let mut extra: Vec<usize> = ctx.v0_rest.clone();
        extra.extend(&later);
        extra.sort_unstable();
        let q = ResolvedQuery { sources, targets: vec![ctx.x], extra };
        if delta_separated_resolved(ctx.g, &q, DEFAULT_TRAIL_CAP)?.separated {
            tags.push(BlockCondition::TreatmentSide);
        } else {
            return Ok(None);
        }
    }
    Ok(Some(tags))
}
