//! METEOR-style score with two matching stages: exact unigram matches
//! first, then Porter-stem matches over the residuals. Each stage takes
//! the maximum number of matches; among maximal alignments the one with
//! the fewest chunks wins (leftmost on further ties). No synonym stage.

use std::collections::HashMap;

use super::porter::porter_stem;

const DROP_PENALTY_WEIGHT: f64 = 0.5;
const SEARCH_NODE_CAP: usize = 200_000;

/// Score a candidate against a reference.
///
/// `m` matched unigrams give precision `m/|cand|` and recall `m/|ref|`;
/// the harmonic mean is recall-weighted (`10PR/(R+9P)`) and scaled by
/// `1 - 0.5·(chunks/m)³`. Returns 0 when nothing matches.
pub fn meteor_lite<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> f64 {
    let cand: Vec<&str> = candidate.iter().map(AsRef::as_ref).collect();
    let refr: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }

    fn counts<'a>(side: &[&'a str]) -> HashMap<&'a str, usize> {
        let mut m = HashMap::new();
        for w in side {
            *m.entry(*w).or_insert(0) += 1;
        }
        m
    }
    let cand_counts = counts(&cand);
    let ref_counts = counts(&refr);

    // stage 1: exact matches, the multiset intersection
    let mut exact_need: HashMap<String, usize> = HashMap::new();
    let mut exact_m = 0usize;
    for (w, c) in &cand_counts {
        let e = (*c).min(ref_counts.get(w).copied().unwrap_or(0));
        if e > 0 {
            exact_need.insert(w.to_string(), e);
            exact_m += e;
        }
    }

    // stage 2: stem matches over the residual occurrences
    let cand_stems: Vec<String> = cand.iter().map(|w| porter_stem(w)).collect();
    let ref_stems: Vec<String> = refr.iter().map(|w| porter_stem(w)).collect();
    let residual_by_stem = |side_counts: &HashMap<&str, usize>| {
        let mut m: HashMap<String, usize> = HashMap::new();
        for (w, c) in side_counts {
            // the exact budget is the two-sided min, so subtracting it
            // leaves this side's surplus occurrences
            let matched = exact_need.get(*w).copied().unwrap_or(0);
            let residual = c.saturating_sub(matched);
            if residual > 0 {
                *m.entry(porter_stem(w)).or_insert(0) += residual;
            }
        }
        m
    };
    let cand_residual = residual_by_stem(&cand_counts);
    let ref_residual = residual_by_stem(&ref_counts);
    let mut stem_need: HashMap<String, usize> = HashMap::new();
    let mut stem_m = 0usize;
    for (g, c) in &cand_residual {
        let s = (*c).min(ref_residual.get(g).copied().unwrap_or(0));
        if s > 0 {
            stem_need.insert(g.clone(), s);
            stem_m += s;
        }
    }

    let m = exact_m + stem_m;
    if m == 0 {
        return 0.0;
    }
    let precision = m as f64 / cand.len() as f64;
    let recall = m as f64 / refr.len() as f64;
    let f_mean = 10.0 * precision * recall / (recall + 9.0 * precision);

    let chunks = min_chunks(
        &cand,
        &refr,
        &cand_stems,
        &ref_stems,
        exact_need,
        stem_need,
        m,
    );
    let penalty = DROP_PENALTY_WEIGHT * (chunks as f64 / m as f64).powi(3);
    f_mean * (1.0 - penalty)
}

struct ChunkSearch<'a> {
    cand: &'a [&'a str],
    refr: &'a [&'a str],
    cand_stems: &'a [String],
    ref_stems: &'a [String],
    used: Vec<bool>,
    /// remaining exact matches per word; doubles as the reservation of
    /// reference occurrences that stem matches must not starve
    exact_need: HashMap<String, usize>,
    /// remaining stem matches per stem group
    stem_need: HashMap<String, usize>,
    /// candidate occurrences of each word from the cursor onward
    cand_remaining: HashMap<String, usize>,
    /// per stem group: candidate occurrences not claimed by exact needs
    group_capacity: HashMap<String, isize>,
    ref_unused: HashMap<String, usize>,
    remaining_matches: usize,
    nodes: usize,
    best: usize,
}

/// Minimum chunk count over alignments that realize the given exact and
/// stem budgets. Falls back to the worst case (`m` chunks) if the
/// branch-and-bound node cap is hit before any complete alignment.
#[allow(clippy::too_many_arguments)]
fn min_chunks(
    cand: &[&str],
    refr: &[&str],
    cand_stems: &[String],
    ref_stems: &[String],
    exact_need: HashMap<String, usize>,
    stem_need: HashMap<String, usize>,
    m: usize,
) -> usize {
    let mut cand_remaining: HashMap<String, usize> = HashMap::new();
    for w in cand {
        *cand_remaining.entry(w.to_string()).or_insert(0) += 1;
    }
    let mut ref_unused: HashMap<String, usize> = HashMap::new();
    for w in refr {
        *ref_unused.entry(w.to_string()).or_insert(0) += 1;
    }
    let mut group_capacity: HashMap<String, isize> = HashMap::new();
    for (w, c) in &cand_remaining {
        let surplus = *c as isize - exact_need.get(w).copied().unwrap_or(0) as isize;
        *group_capacity.entry(porter_stem(w)).or_insert(0) += surplus;
    }
    let mut search = ChunkSearch {
        cand,
        refr,
        cand_stems,
        ref_stems,
        used: vec![false; refr.len()],
        exact_need,
        stem_need,
        cand_remaining,
        group_capacity,
        ref_unused,
        remaining_matches: m,
        nodes: 0,
        best: usize::MAX,
    };
    search.dfs(0, None, 0);
    if search.best == usize::MAX {
        m
    } else {
        search.best
    }
}

impl ChunkSearch<'_> {
    fn dfs(&mut self, ci: usize, last: Option<(usize, usize)>, chunks: usize) {
        if chunks >= self.best || self.nodes > SEARCH_NODE_CAP {
            return;
        }
        self.nodes += 1;
        if ci == self.cand.len() {
            if self.remaining_matches == 0 {
                self.best = chunks;
            }
            return;
        }
        if self.cand.len() - ci < self.remaining_matches {
            return;
        }

        let word = self.cand[ci].to_string();
        let group = self.cand_stems[ci].clone();
        let exact_ok = self.exact_need.get(&word).copied().unwrap_or(0) > 0;
        // this occurrence may serve the stem stage only if enough later
        // occurrences remain to cover the word's exact budget
        let residual_ok = self.cand_remaining[&word] > self.exact_need.get(&word).copied().unwrap_or(0);
        let stem_ok = residual_ok && self.stem_need.get(&group).copied().unwrap_or(0) > 0;

        // candidate reference positions, chunk-continuing one first
        let mut options: Vec<(usize, bool)> = Vec::new(); // (rj, is_exact)
        for rj in 0..self.refr.len() {
            if self.used[rj] {
                continue;
            }
            if exact_ok && self.refr[rj] == word {
                options.push((rj, true));
            } else if stem_ok && self.ref_stems[rj] == group {
                // keep enough unused occurrences of this reference word
                // for its own exact budget
                let rw = self.refr[rj];
                if self.ref_unused[rw] > self.exact_need.get(rw).copied().unwrap_or(0) {
                    options.push((rj, false));
                }
            }
        }
        if let Some((lc, lr)) = last {
            if lc + 1 == ci {
                if let Some(pos) = options.iter().position(|(rj, _)| *rj == lr + 1) {
                    options.swap(0, pos);
                }
            }
        }

        for (rj, is_exact) in options {
            let continues = matches!(last, Some((lc, lr)) if lc + 1 == ci && lr + 1 == rj);
            let next_chunks = chunks + usize::from(!continues);
            self.apply(ci, rj, is_exact, &word, &group);
            self.dfs(ci + 1, Some((ci, rj)), next_chunks);
            self.unapply(ci, rj, is_exact, &word, &group);
        }

        // leave this candidate occurrence unmatched
        let need = self.exact_need.get(&word).copied().unwrap_or(0);
        if self.cand_remaining[&word] > need {
            let cap = self.group_capacity.get(&group).copied().unwrap_or(0);
            let gneed = self.stem_need.get(&group).copied().unwrap_or(0) as isize;
            if cap > gneed {
                *self.cand_remaining.get_mut(&word).unwrap() -= 1;
                *self.group_capacity.get_mut(&group).unwrap() -= 1;
                self.dfs(ci + 1, last, chunks);
                *self.cand_remaining.get_mut(&word).unwrap() += 1;
                *self.group_capacity.get_mut(&group).unwrap() += 1;
            }
        }
    }

    fn apply(&mut self, _ci: usize, rj: usize, is_exact: bool, word: &str, group: &str) {
        self.used[rj] = true;
        *self.cand_remaining.get_mut(word).unwrap() -= 1;
        *self.ref_unused.get_mut(self.refr[rj]).unwrap() -= 1;
        self.remaining_matches -= 1;
        if is_exact {
            *self.exact_need.get_mut(word).unwrap() -= 1;
        } else {
            *self.stem_need.get_mut(group).unwrap() -= 1;
            *self.group_capacity.get_mut(group).unwrap() -= 1;
        }
    }

    fn unapply(&mut self, _ci: usize, rj: usize, is_exact: bool, word: &str, group: &str) {
        self.used[rj] = false;
        *self.cand_remaining.get_mut(word).unwrap() += 1;
        *self.ref_unused.get_mut(self.refr[rj]).unwrap() += 1;
        self.remaining_matches += 1;
        if is_exact {
            *self.exact_need.get_mut(word).unwrap() += 1;
        } else {
            *self.stem_need.get_mut(group).unwrap() += 1;
            *self.group_capacity.get_mut(group).unwrap() += 1;
        }
    }
}
