//! Symbolic rule extraction by sequential covering.
//!
//! Rules are conjunctions of attribute conditions learned one seed pattern
//! at a time: a condition search (exhaustive or greedy) builds a rule that
//! covers the seed and no pattern of another class, covered patterns are
//! marked, and the next unmarked pattern seeds the next rule. Three pruning
//! passes (generalize, subsumption, noise/redundancy) shrink the set, a
//! default class absorbs whatever rules it makes redundant, and conflicts at
//! classification time go to the rule with the greatest training coverage.
//!
//! Everything here is deterministic: ties in every search and every pruning
//! pass break by fixed orderings, so the same dataset and config always
//! produce the same ruleset, bit for bit.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use crate::dataset::{clean_contradictions, AttributeKind, AttributeSchema, Dataset, Pattern, Value};
use crate::error::{Error, Result};
use crate::Scalar;

/// Comparison operator of a single condition. `Eq` applies to categorical
/// attributes, `Le`/`Ge` to continuous ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Eq,
    Le,
    Ge,
}

impl Op {
    fn rank(self) -> u8 {
        match self {
            Op::Eq => 0,
            Op::Le => 1,
            Op::Ge => 2,
        }
    }
}

/// One test against one attribute: `attribute <op> value`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition<S: Scalar> {
    pub attribute: usize,
    pub op: Op,
    pub value: Value<S>,
}

impl<S: Scalar> Condition<S> {
    pub fn holds(&self, values: &[Value<S>]) -> bool {
        match self.op {
            Op::Eq => values[self.attribute] == self.value,
            Op::Le => values[self.attribute].number() <= self.value.number(),
            Op::Ge => values[self.attribute].number() >= self.value.number(),
        }
    }
}

/// A conjunction of conditions concluding in a class.
///
/// Invariants kept by construction: at least one condition; per attribute at
/// most one `Eq`, at most one `Le` and one `Ge` (with the `Ge` threshold
/// never above the `Le` one); conditions sorted by attribute, then
/// `Eq` < `Le` < `Ge`. `coverage` counts covered patterns of the cleaned
/// training data the rule was extracted from, and is what conflict
/// resolution compares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule<S: Scalar> {
    pub id: usize,
    pub class: usize,
    pub conditions: Vec<Condition<S>>,
    pub coverage: usize,
}

impl<S: Scalar> Rule<S> {
    pub fn covers(&self, values: &[Value<S>]) -> bool {
        self.conditions.iter().all(|c| c.holds(values))
    }
}

/// Where a ruleset came from: straight from tabular data, or composed from
/// hidden-layer rules and per-cluster membership rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Direct,
    Composed,
}

/// An ordered rule list plus a default class for uncovered patterns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleSet<S: Scalar> {
    pub rules: Vec<Rule<S>>,
    pub default_class: usize,
    pub provenance: Provenance,
}

impl<S: Scalar> RuleSet<S> {
    /// Predicts a class for one pattern. A pure function of the rule *set*:
    /// no match means the default class, agreeing matches mean their class,
    /// and conflicting matches go to the greatest training coverage, ties to
    /// the lowest class index. Reordering the rules never changes the
    /// answer.
    pub fn classify(&self, values: &[Value<S>]) -> usize {
        let fired = self
            .rules
            .iter()
            .filter(|r| r.covers(values))
            .map(|r| (r.class, r.coverage));
        predict(fired, self.default_class)
    }

    /// Fraction of patterns classified into their recorded label.
    pub fn accuracy(&self, data: &Dataset<S>) -> f64 {
        if data.patterns.is_empty() {
            return 1.0;
        }
        let hits = data
            .patterns
            .iter()
            .filter(|p| self.classify(&p.values) == p.label)
            .count();
        hits as f64 / data.patterns.len() as f64
    }

    /// Mean condition count over the rules; 0 for an empty set.
    pub fn avg_conditions(&self) -> f64 {
        if self.rules.is_empty() {
            return 0.0;
        }
        let total: usize = self.rules.iter().map(|r| r.conditions.len()).sum();
        total as f64 / self.rules.len() as f64
    }
}

/// Highest-coverage class among fired rules, lowest class on ties, default
/// when nothing fired.
fn predict(fired: impl Iterator<Item = (usize, usize)>, default: usize) -> usize {
    let mut best: Option<(usize, usize)> = None; // (class, coverage)
    for (class, cov) in fired {
        let better = match best {
            None => true,
            Some((bc, bcov)) => cov > bcov || (cov == bcov && class < bc),
        };
        if better {
            best = Some((class, cov));
        }
    }
    best.map_or(default, |(c, _)| c)
}

/// How rule conditions are searched and when low-coverage rules are
/// treated as noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub search_mode: SearchMode,
    /// Longest conjunction the exhaustive search tries before falling back
    /// to greedy construction.
    pub exhaustive_max_len: usize,
    /// Rules covering fewer patterns than this are dropped during pruning
    /// and their patterns accepted as noise.
    pub noise_min_coverage: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Greedy,
    Exhaustive,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            search_mode: SearchMode::Exhaustive,
            exhaustive_max_len: 3,
            noise_min_coverage: 1,
        }
    }
}

// --------------------------------------------------------------- bitsets

/// Plain bitset over pattern indices; the workhorse of coverage tests.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    fn zeros(len: usize) -> Bits {
        Bits {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    fn ones(len: usize) -> Bits {
        let mut b = Bits {
            words: vec![!0u64; len.div_ceil(64)],
            len,
        };
        b.mask_tail();
        b
    }

    // Bits past `len` in the last word must stay zero for counts to be right.
    fn mask_tail(&mut self) {
        let tail = self.len % 64;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn and_assign(&mut self, o: &Bits) {
        for (a, b) in self.words.iter_mut().zip(&o.words) {
            *a &= b;
        }
    }

    fn or_assign(&mut self, o: &Bits) {
        for (a, b) in self.words.iter_mut().zip(&o.words) {
            *a |= b;
        }
    }

    fn clone_from_bits(&mut self, o: &Bits) {
        self.words.copy_from_slice(&o.words);
        self.len = o.len;
    }

    fn intersects(&self, o: &Bits) -> bool {
        self.words.iter().zip(&o.words).any(|(a, b)| a & b != 0)
    }

    fn subset_of(&self, o: &Bits) -> bool {
        self.words.iter().zip(&o.words).all(|(a, b)| a & !b == 0)
    }

    fn and_count(&self, o: &Bits) -> usize {
        self.words
            .iter()
            .zip(&o.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    fn and3_count(&self, b: &Bits, c: &Bits) -> usize {
        self.words
            .iter()
            .zip(&b.words)
            .zip(&c.words)
            .map(|((x, y), z)| (x & y & z).count_ones() as usize)
            .sum()
    }
}

fn cover_mask<S: Scalar>(conds: &[Condition<S>], patterns: &[Pattern<S>]) -> Bits {
    let mut m = Bits::zeros(patterns.len());
    for (i, p) in patterns.iter().enumerate() {
        if conds.iter().all(|c| c.holds(&p.values)) {
            m.set(i);
        }
    }
    m
}

fn class_mask<S: Scalar>(patterns: &[Pattern<S>], class: usize, invert: bool) -> Bits {
    let mut m = Bits::zeros(patterns.len());
    for (i, p) in patterns.iter().enumerate() {
        if (p.label != class) == invert {
            m.set(i);
        }
    }
    m
}

// ------------------------------------------------------------ candidates

/// Thresholds worth testing on one continuous attribute: midpoints between
/// adjacent observed values whose class sets are not the same single class,
/// plus the raw observed minimum and maximum.
fn cut_points<S: Scalar>(patterns: &[Pattern<S>], attr: usize) -> Vec<S> {
    let mut pairs: Vec<(S, usize)> = patterns
        .iter()
        .map(|p| (p.values[attr].number(), p.label))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));

    // Distinct values with their label sets, in ascending order.
    let mut distinct: Vec<(S, Vec<usize>)> = Vec::new();
    for (v, lab) in pairs {
        match distinct.last_mut() {
            Some((lv, labs)) if *lv == v => {
                if !labs.contains(&lab) {
                    labs.push(lab);
                    labs.sort_unstable();
                }
            }
            _ => distinct.push((v, vec![lab])),
        }
    }

    let two = S::of(2.0);
    let mut cuts: Vec<S> = Vec::new();
    for w in distinct.windows(2) {
        let (a, ref la) = w[0];
        let (b, ref lb) = w[1];
        let same_singleton = la.len() == 1 && la == lb;
        if !same_singleton {
            cuts.push((a + b) / two);
        }
    }
    cuts.push(distinct[0].0);
    cuts.push(distinct[distinct.len() - 1].0);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    cuts.dedup();
    cuts
}

/// All conditions a rule for `seed` may use, in a fixed order: attributes
/// ascending; per categorical attribute one `Eq` on the seed's symbol; per
/// continuous attribute `Le` for every cut at or above the seed's value
/// (ascending), then `Ge` for every cut at or below it (ascending).
pub fn candidate_conditions<S: Scalar>(
    seed: &Pattern<S>,
    schema: &[AttributeSchema<S>],
    patterns: &[Pattern<S>],
) -> Vec<Condition<S>> {
    let mut out = Vec::new();
    for (a, att) in schema.iter().enumerate() {
        match att.kind {
            AttributeKind::Categorical { .. } => out.push(Condition {
                attribute: a,
                op: Op::Eq,
                value: seed.values[a],
            }),
            AttributeKind::Continuous { .. } => {
                let cuts = cut_points(patterns, a);
                let v = seed.values[a].number();
                for &t in cuts.iter().filter(|&&t| t >= v) {
                    out.push(Condition {
                        attribute: a,
                        op: Op::Le,
                        value: Value::Number(t),
                    });
                }
                for &t in cuts.iter().filter(|&&t| t <= v) {
                    out.push(Condition {
                        attribute: a,
                        op: Op::Ge,
                        value: Value::Number(t),
                    });
                }
            }
        }
    }
    out
}

// ------------------------------------------------------------ generation

fn canon<S: Scalar>(conds: &mut [Condition<S>]) {
    conds.sort_by(|a, b| {
        (a.attribute, a.op.rank()).cmp(&(b.attribute, b.op.rank()))
    });
}

/// Shortest consistent conjunction for the seed, by iterative deepening
/// over candidate combinations in lexicographic order; among equal-length
/// consistent combinations the highest coverage wins and the first found
/// keeps ties. Falls back to greedy construction if nothing consistent
/// exists within `max_len` conditions.
fn generate_exhaustive<S: Scalar>(
    seed_idx: usize,
    patterns: &[Pattern<S>],
    schema: &[AttributeSchema<S>],
    max_len: usize,
) -> Result<Vec<Condition<S>>> {
    let seed = &patterns[seed_idx];
    let cands = candidate_conditions(seed, schema, patterns);
    let masks: Vec<Bits> = cands.iter().map(|c| cover_mask(&[*c], patterns)).collect();
    let keys: Vec<(usize, u8)> = cands.iter().map(|c| (c.attribute, c.op.rank())).collect();
    let other = class_mask(patterns, seed.label, true);
    let n = cands.len();

    let mut scratch = Bits::zeros(patterns.len());
    for len in 1..=max_len {
        if n < len {
            break;
        }
        let mut best: Option<(usize, Vec<usize>)> = None;
        let mut combo: Vec<usize> = (0..len).collect();
        loop {
            // Combinations repeating an (attribute, operator) pair are
            // redundant: the conjunction equals a shorter one already tried.
            let distinct_keys = (0..len)
                .all(|i| (i + 1..len).all(|j| keys[combo[i]] != keys[combo[j]]));
            if distinct_keys {
                scratch.clone_from_bits(&masks[combo[0]]);
                for &ci in &combo[1..] {
                    scratch.and_assign(&masks[ci]);
                }
                if !scratch.intersects(&other) {
                    let cov = scratch.count();
                    if best.as_ref().is_none_or(|(bc, _)| cov > *bc) {
                        best = Some((cov, combo.clone()));
                    }
                }
            }
            // Advance to the next index combination in lexicographic order.
            let mut advanced = false;
            for i in (0..len).rev() {
                if combo[i] != i + n - len {
                    combo[i] += 1;
                    for j in i + 1..len {
                        combo[j] = combo[j - 1] + 1;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
        if let Some((_, combo)) = best {
            return Ok(combo.into_iter().map(|ci| cands[ci]).collect());
        }
    }
    generate_greedy(seed_idx, patterns, schema)
}

/// Greedy conjunction growth: repeatedly add (or tighten) the candidate
/// excluding the most not-yet-excluded other-class patterns, retained
/// same-class coverage and candidate order breaking ties; then drop
/// conditions in reverse addition order while consistency holds.
fn generate_greedy<S: Scalar>(
    seed_idx: usize,
    patterns: &[Pattern<S>],
    schema: &[AttributeSchema<S>],
) -> Result<Vec<Condition<S>>> {
    let seed = &patterns[seed_idx];
    let cands = candidate_conditions(seed, schema, patterns);
    let masks: Vec<Bits> = cands.iter().map(|c| cover_mask(&[*c], patterns)).collect();
    let other = class_mask(patterns, seed.label, true);
    let same = class_mask(patterns, seed.label, false);

    let mut cur = Bits::ones(patterns.len());
    let mut chosen: Vec<Condition<S>> = Vec::new();
    while cur.intersects(&other) {
        let still_other = cur.and_count(&other);
        let mut best: Option<((usize, usize), usize)> = None; // ((excluded, retained), idx)
        for (idx, m) in masks.iter().enumerate() {
            let excluded = still_other - cur.and3_count(m, &other);
            let retained = cur.and3_count(m, &same);
            let key = (excluded, retained);
            if best.as_ref().is_none_or(|(bk, _)| key > *bk) {
                best = Some((key, idx));
            }
        }
        let ((excluded, _), idx) =
            best.ok_or_else(|| Error::Internal("no candidate conditions for seed".into()))?;
        if excluded == 0 {
            return Err(Error::Internal(
                "greedy covering stalled; cleaned data always admits progress".into(),
            ));
        }
        let cand = cands[idx];
        match chosen
            .iter_mut()
            .find(|c| c.attribute == cand.attribute && c.op == cand.op)
        {
            Some(c) => *c = cand, // tighten in place, keeping addition order
            None => chosen.push(cand),
        }
        cur.and_assign(&masks[idx]);
    }

    // Minimize in reverse addition order; a rule keeps at least one condition.
    let mut i = chosen.len();
    while i > 0 && chosen.len() > 1 {
        i -= 1;
        let mut trial = chosen.clone();
        trial.remove(i);
        if !cover_mask(&trial, patterns).intersects(&other) {
            chosen = trial;
        }
    }

    if chosen.is_empty() {
        // Single-class data: every conjunction is consistent, so the loop
        // never ran. Keep the invariant of one condition minimum by taking
        // the widest candidate.
        let best = (0..cands.len())
            .max_by_key(|&i| (masks[i].count(), std::cmp::Reverse(i)))
            .ok_or_else(|| Error::Internal("no candidate conditions for seed".into()))?;
        chosen.push(cands[best]);
    }
    Ok(chosen)
}

// ---------------------------------------------------------------- workset

/// A rule during construction: public fields plus its coverage bitset.
#[derive(Clone, Debug)]
struct Work<S: Scalar> {
    id: usize,
    class: usize,
    conds: Vec<Condition<S>>,
    mask: Bits,
    cov: usize,
}

impl<S: Scalar> Work<S> {
    fn new(id: usize, class: usize, mut conds: Vec<Condition<S>>, patterns: &[Pattern<S>]) -> Self {
        canon(&mut conds);
        let mask = cover_mask(&conds, patterns);
        let cov = mask.count();
        Work {
            id,
            class,
            conds,
            mask,
            cov,
        }
    }

    fn into_rule(self) -> Rule<S> {
        Rule {
            id: self.id,
            class: self.class,
            conditions: self.conds,
            coverage: self.cov,
        }
    }
}

fn generate<S: Scalar>(
    seed_idx: usize,
    patterns: &[Pattern<S>],
    schema: &[AttributeSchema<S>],
    cfg: &ExtractConfig,
) -> Result<Vec<Condition<S>>> {
    match cfg.search_mode {
        SearchMode::Exhaustive => {
            generate_exhaustive(seed_idx, patterns, schema, cfg.exhaustive_max_len)
        }
        SearchMode::Greedy => generate_greedy(seed_idx, patterns, schema),
    }
}

fn extract_work<S: Scalar>(
    patterns: &[Pattern<S>],
    schema: &[AttributeSchema<S>],
    cfg: &ExtractConfig,
) -> Result<Vec<Work<S>>> {
    let mut marked = Bits::zeros(patterns.len());
    let mut rules: Vec<Work<S>> = Vec::new();
    for i in 0..patterns.len() {
        if marked.get(i) {
            continue;
        }
        let conds = generate(i, patterns, schema, cfg)?;
        let w = Work::new(rules.len(), patterns[i].label, conds, patterns);
        marked.or_assign(&w.mask);
        rules.push(w);
    }
    Ok(rules)
}

/// Sequential covering over the patterns in order: each unmarked pattern
/// seeds one rule, and every pattern the new rule covers is marked. Rule
/// ids record extraction order. The patterns are assumed cleaned (use
/// [`run_rex`] for the full pipeline including cleaning).
pub fn extract<S: Scalar>(
    patterns: &[Pattern<S>],
    schema: &[AttributeSchema<S>],
    cfg: &ExtractConfig,
) -> Result<Vec<Rule<S>>> {
    validate(schema, patterns, cfg)?;
    Ok(extract_work(patterns, schema, cfg)?
        .into_iter()
        .map(Work::into_rule)
        .collect())
}

/// Groups rules by class, classes ascending, preserving rule order within
/// each group. Classes without rules get no group.
pub fn cluster_rules<S: Scalar>(rules: &[Rule<S>]) -> Vec<Vec<Rule<S>>> {
    let mut classes: Vec<usize> = rules.iter().map(|r| r.class).collect();
    classes.sort_unstable();
    classes.dedup();
    classes
        .into_iter()
        .map(|c| rules.iter().filter(|r| r.class == c).cloned().collect())
        .collect()
}

fn conds_subsume<S: Scalar>(general: &[Condition<S>], specific: &[Condition<S>]) -> bool {
    general.iter().all(|g| {
        specific.iter().any(|s| {
            s.attribute == g.attribute
                && match (g.op, s.op) {
                    (Op::Eq, Op::Eq) => s.value == g.value,
                    (Op::Le, Op::Le) => s.value.number() <= g.value.number(),
                    (Op::Ge, Op::Ge) => s.value.number() >= g.value.number(),
                    _ => false,
                }
        })
    })
}

/// True when every pattern `specific` covers is also covered by `general`,
/// judged syntactically: each condition of the general rule has a same-
/// attribute condition in the specific rule at least as strong. Reflexive.
pub fn subsumes<S: Scalar>(general: &Rule<S>, specific: &Rule<S>) -> bool {
    conds_subsume(&general.conditions, &specific.conditions)
}

fn prune_work<S: Scalar>(
    mut rules: Vec<Work<S>>,
    patterns: &[Pattern<S>],
    noise_min_coverage: usize,
) -> (Vec<Work<S>>, Bits) {
    let mut other_masks: BTreeMap<usize, Bits> = BTreeMap::new();
    let mut other = |class: usize| -> Bits {
        other_masks
            .entry(class)
            .or_insert_with(|| class_mask(patterns, class, true))
            .clone()
    };

    // Pass 1: generalize. Try dropping each condition in order; a drop
    // commits when the rule stays consistent, and the index only advances
    // past conditions that must stay.
    for r in rules.iter_mut() {
        let om = other(r.class);
        let mut i = 0;
        while i < r.conds.len() && r.conds.len() > 1 {
            let mut trial = r.conds.clone();
            trial.remove(i);
            let m = cover_mask(&trial, patterns);
            if !m.intersects(&om) {
                r.conds = trial;
                r.cov = m.count();
                r.mask = m;
            } else {
                i += 1;
            }
        }
    }

    // Pass 2: subsumption within a class. A rule dies when a same-class
    // rule at least as general exists; of two equally general rules the
    // lower id survives. Checked against the full pre-pass list, which is
    // sound because subsumption is transitive.
    let survivors: Vec<bool> = rules
        .iter()
        .map(|r| {
            !rules.iter().any(|s| {
                s.id != r.id
                    && s.class == r.class
                    && conds_subsume(&s.conds, &r.conds)
                    && (!conds_subsume(&r.conds, &s.conds) || s.id < r.id)
            })
        })
        .collect();
    let mut idx = 0;
    rules.retain(|_| {
        let keep = survivors[idx];
        idx += 1;
        keep
    });

    // Pass 3: noise, then redundancy, in one sweep ascending by (coverage,
    // id). Noise rules record their patterns as accepted; a redundant rule
    // is one whose cover sits inside the union of the other live rules.
    let mut noise_accepted = Bits::zeros(patterns.len());
    let mut order: Vec<usize> = (0..rules.len()).collect();
    order.sort_by_key(|&i| (rules[i].cov, rules[i].id));
    let mut alive = vec![true; rules.len()];
    for &i in &order {
        if rules[i].cov < noise_min_coverage {
            alive[i] = false;
            noise_accepted.or_assign(&rules[i].mask);
            continue;
        }
        let mut union = Bits::zeros(patterns.len());
        for (j, r) in rules.iter().enumerate() {
            if alive[j] && j != i {
                union.or_assign(&r.mask);
            }
        }
        if rules[i].mask.subset_of(&union) {
            alive[i] = false;
        }
    }
    let mut idx = 0;
    rules.retain(|_| {
        let keep = alive[idx];
        idx += 1;
        keep
    });

    rules.sort_by_key(|r| (r.class, std::cmp::Reverse(r.cov), r.id));
    (rules, noise_accepted)
}

/// Three pruning passes over extracted rules: per-rule generalization,
/// within-class subsumption, then noise and redundancy removal. Returns the
/// surviving rules (sorted by class, coverage descending, id) and the
/// indices of patterns accepted as noise.
pub fn prune<S: Scalar>(
    rules: Vec<Rule<S>>,
    patterns: &[Pattern<S>],
    cfg: &ExtractConfig,
) -> (Vec<Rule<S>>, Vec<usize>) {
    let work = rules
        .into_iter()
        .map(|r| Work::new(r.id, r.class, r.conditions, patterns))
        .collect();
    let (pruned, noise) = prune_work(work, patterns, cfg.noise_min_coverage);
    let noise_idx = (0..patterns.len()).filter(|&i| noise.get(i)).collect();
    (
        pruned.into_iter().map(Work::into_rule).collect(),
        noise_idx,
    )
}

fn accuracy_work<S: Scalar>(
    rules: &[Work<S>],
    skip_id: Option<usize>,
    labels: &[usize],
    default: usize,
) -> f64 {
    if labels.is_empty() {
        return 1.0;
    }
    let mut hits = 0;
    for (i, &lab) in labels.iter().enumerate() {
        let fired = rules
            .iter()
            .filter(|r| Some(r.id) != skip_id && r.mask.get(i))
            .map(|r| (r.class, r.cov));
        if predict(fired, default) == lab {
            hits += 1;
        }
    }
    hits as f64 / labels.len() as f64
}

fn pick_default_work<S: Scalar>(rules: &[Work<S>], labels: &[usize], n_classes: usize) -> usize {
    let mut counts = vec![0usize; n_classes];
    for r in rules {
        counts[r.class] += 1;
    }
    let most = counts.iter().copied().max().unwrap_or(0);
    let mut tied: Vec<usize> = (0..n_classes).filter(|&c| counts[c] == most).collect();

    if tied.len() > 1 {
        // Most own-class patterns that no rule covers.
        let mut covered = Bits::zeros(labels.len());
        for r in rules {
            covered.or_assign(&r.mask);
        }
        let mut unc = vec![0usize; n_classes];
        for (i, &lab) in labels.iter().enumerate() {
            if !covered.get(i) {
                unc[lab] += 1;
            }
        }
        let most_unc = tied.iter().map(|&c| unc[c]).max().unwrap();
        tied.retain(|&c| unc[c] == most_unc);
    }
    if tied.len() > 1 {
        // Most patterns overall.
        let mut per_class = vec![0usize; n_classes];
        for &lab in labels {
            per_class[lab] += 1;
        }
        let most_pat = tied.iter().map(|&c| per_class[c]).max().unwrap();
        tied.retain(|&c| per_class[c] == most_pat);
    }
    tied[0]
}

fn choose_default_work<S: Scalar>(
    mut rules: Vec<Work<S>>,
    labels: &[usize],
    n_classes: usize,
    delete: bool,
) -> (Vec<Work<S>>, usize) {
    let default = pick_default_work(&rules, labels, n_classes);
    if delete {
        let mut ids: Vec<usize> = rules
            .iter()
            .filter(|r| r.class == default)
            .map(|r| r.id)
            .collect();
        ids.sort_unstable();
        for id in ids {
            let base = accuracy_work(&rules, None, labels, default);
            if accuracy_work(&rules, Some(id), labels, default) >= base {
                rules.retain(|r| r.id != id);
            }
        }
    }
    (rules, default)
}

/// Picks the default class (most rules; ties to most uncovered own-class
/// patterns, then most patterns, then lowest index) and deletes default-
/// class rules whose removal leaves training accuracy unchanged, in
/// ascending id order with the baseline recomputed after each deletion.
pub fn choose_default<S: Scalar>(
    rules: Vec<Rule<S>>,
    patterns: &[Pattern<S>],
    n_classes: usize,
) -> (Vec<Rule<S>>, usize) {
    let labels: Vec<usize> = patterns.iter().map(|p| p.label).collect();
    let work = rules
        .into_iter()
        .map(|r| Work::new(r.id, r.class, r.conditions, patterns))
        .collect();
    let (kept, default) = choose_default_work(work, &labels, n_classes, true);
    (kept.into_iter().map(Work::into_rule).collect(), default)
}

fn validate<S: Scalar>(
    schema: &[AttributeSchema<S>],
    patterns: &[Pattern<S>],
    cfg: &ExtractConfig,
) -> Result<()> {
    if schema.is_empty() {
        return Err(Error::Config("dataset has no attributes".into()));
    }
    if patterns.is_empty() {
        return Err(Error::Config("dataset has no patterns".into()));
    }
    if cfg.exhaustive_max_len == 0 {
        return Err(Error::Config("exhaustive_max_len must be at least 1".into()));
    }
    Ok(())
}

fn run_rex_inner<S: Scalar>(
    data: &Dataset<S>,
    cfg: &ExtractConfig,
    delete_default: bool,
) -> Result<RuleSet<S>> {
    validate(&data.schema, &data.patterns, cfg)?;
    let cleaned = clean_contradictions(data);
    let patterns = &cleaned.patterns;
    let labels: Vec<usize> = patterns.iter().map(|p| p.label).collect();
    let n = patterns.len();

    let mut rules = extract_work(patterns, &data.schema, cfg)?;
    let (pruned, mut noise_accepted) = prune_work(rules, patterns, cfg.noise_min_coverage);
    rules = pruned;

    // Re-extract for patterns that pruning left uncovered, unless they were
    // accepted as noise or already belong to the provisional default class.
    // Each round re-prunes, so the round count is bounded by the pattern
    // count; the passes as specified leave nothing behind (only the noise
    // pass uncovers, and it records what it dropped), so in practice this
    // settles on the first check.
    let mut settled = false;
    for _ in 0..=n {
        let provisional = pick_default_work(&rules, &labels, data.classes.len());
        let mut covered = Bits::zeros(n);
        for r in &rules {
            covered.or_assign(&r.mask);
        }
        let missing: Vec<usize> = (0..n)
            .filter(|&i| !covered.get(i) && !noise_accepted.get(i) && labels[i] != provisional)
            .collect();
        if missing.is_empty() {
            settled = true;
            break;
        }
        let mut next_id = rules.iter().map(|r| r.id + 1).max().unwrap_or(0);
        for &i in &missing {
            let conds = generate(i, patterns, &data.schema, cfg)?;
            rules.push(Work::new(next_id, labels[i], conds, patterns));
            next_id += 1;
        }
        let (pruned, na) = prune_work(rules, patterns, cfg.noise_min_coverage);
        rules = pruned;
        noise_accepted.or_assign(&na);
    }
    if !settled {
        return Err(Error::Internal(
            "coverage completion failed to settle".into(),
        ));
    }

    let (rules, default_class) =
        choose_default_work(rules, &labels, data.classes.len(), delete_default);
    Ok(RuleSet {
        rules: rules.into_iter().map(Work::into_rule).collect(),
        default_class,
        provenance: Provenance::Direct,
    })
}

/// The full extraction pipeline on tabular data: clean contradictions,
/// extract by sequential covering, prune, complete coverage, choose the
/// default class. Training error of the result never exceeds the
/// inconsistency rate of the input when `noise_min_coverage` is at its
/// default of 1.
pub fn run_rex<S: Scalar>(data: &Dataset<S>, cfg: &ExtractConfig) -> Result<RuleSet<S>> {
    run_rex_inner(data, cfg, true)
}

/// Like [`run_rex`] but keeps all default-class rules. Used for membership
/// rulesets whose rules must stay materialized for composition.
pub(crate) fn run_rex_keep_all<S: Scalar>(
    data: &Dataset<S>,
    cfg: &ExtractConfig,
) -> Result<RuleSet<S>> {
    run_rex_inner(data, cfg, false)
}

// ----------------------------------------------------------- composition

#[derive(Default)]
struct MergedAttr<S: Scalar> {
    eq: Option<usize>,
    le: Option<S>,
    ge: Option<S>,
}

/// Conjoins one conjunction per hidden condition into a single input-space
/// conjunction; `None` when the combination is contradictory (conflicting
/// `Eq` symbols, or an empty interval).
fn merge_conjunction<'a, S: Scalar>(
    parts: impl Iterator<Item = &'a [Condition<S>]>,
) -> Option<Vec<Condition<S>>> {
    let mut merged: BTreeMap<usize, MergedAttr<S>> = BTreeMap::new();
    for part in parts {
        for c in part {
            let slot = merged.entry(c.attribute).or_default();
            match c.op {
                Op::Eq => {
                    let sym = c.value.symbol();
                    match slot.eq {
                        Some(prev) if prev != sym => return None,
                        _ => slot.eq = Some(sym),
                    }
                }
                Op::Le => {
                    let t = c.value.number();
                    slot.le = Some(match slot.le {
                        Some(prev) if prev < t => prev,
                        _ => t,
                    });
                }
                Op::Ge => {
                    let t = c.value.number();
                    slot.ge = Some(match slot.ge {
                        Some(prev) if prev > t => prev,
                        _ => t,
                    });
                }
            }
        }
    }
    let mut out = Vec::new();
    for (attr, slot) in merged {
        if let (Some(g), Some(l)) = (slot.ge, slot.le) {
            if g > l {
                return None;
            }
        }
        if let Some(sym) = slot.eq {
            out.push(Condition {
                attribute: attr,
                op: Op::Eq,
                value: Value::Symbol(sym),
            });
        }
        if let Some(t) = slot.le {
            out.push(Condition {
                attribute: attr,
                op: Op::Le,
                value: Value::Number(t),
            });
        }
        if let Some(t) = slot.ge {
            out.push(Condition {
                attribute: attr,
                op: Op::Ge,
                value: Value::Number(t),
            });
        }
    }
    Some(out)
}

/// Substitutes input-space membership rules into hidden-layer rules.
///
/// Each hidden condition `H_j = c_k` expands to the disjunction of the "in"
/// rules (class index 1) of the membership ruleset at key `(j, k)`; the
/// cross product of those disjunctions, merged per attribute, yields the
/// composed candidates, which are then pruned and given a default on
/// `data` (typically the training inputs labeled by the network). Missing
/// map entries are a configuration error.
pub fn compose<S: Scalar>(
    hidden: &RuleSet<S>,
    members: &BTreeMap<(usize, usize), RuleSet<S>>,
    data: &Dataset<S>,
    cfg: &ExtractConfig,
) -> Result<RuleSet<S>> {
    const IN_CLASS: usize = 1; // membership datasets label out=0, in=1

    let mut candidates: Vec<(usize, Vec<Condition<S>>)> = Vec::new();
    for hr in &hidden.rules {
        let mut dnf: Vec<Vec<&Rule<S>>> = Vec::new();
        for c in &hr.conditions {
            let cluster = match c.value {
                Value::Symbol(k) if c.op == Op::Eq => k,
                _ => {
                    return Err(Error::Config(
                        "hidden rules must consist of categorical equality conditions".into(),
                    ))
                }
            };
            let rs = members.get(&(c.attribute, cluster)).ok_or_else(|| {
                Error::Config(format!(
                    "no membership ruleset for hidden node {} cluster {}",
                    c.attribute, cluster
                ))
            })?;
            dnf.push(rs.rules.iter().filter(|r| r.class == IN_CLASS).collect());
        }
        if dnf.iter().any(|d| d.is_empty()) {
            continue;
        }
        // Odometer over one conjunction per hidden condition.
        let mut pick = vec![0usize; dnf.len()];
        loop {
            let parts = dnf
                .iter()
                .zip(&pick)
                .map(|(d, &i)| d[i].conditions.as_slice());
            if let Some(conds) = merge_conjunction(parts) {
                candidates.push((hr.class, conds));
            }
            let mut pos = dnf.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                pick[pos] += 1;
                if pick[pos] < dnf[pos].len() {
                    break;
                }
                pick[pos] = 0;
            }
            if pick.iter().all(|&i| i == 0) {
                break;
            }
        }
    }

    let cleaned = clean_contradictions(data);
    let patterns = &cleaned.patterns;
    let labels: Vec<usize> = patterns.iter().map(|p| p.label).collect();
    let work: Vec<Work<S>> = candidates
        .into_iter()
        .enumerate()
        .map(|(id, (class, conds))| Work::new(id, class, conds, patterns))
        .collect();
    let (work, _) = prune_work(work, patterns, cfg.noise_min_coverage);
    let (work, default_class) = choose_default_work(work, &labels, data.classes.len(), true);
    Ok(RuleSet {
        rules: work.into_iter().map(Work::into_rule).collect(),
        default_class,
        provenance: Provenance::Composed,
    })
}

// -------------------------------------------------------- serialization

fn op_str(op: Op) -> &'static str {
    match op {
        Op::Eq => "eq",
        Op::Le => "le",
        Op::Ge => "ge",
    }
}

fn value_json<S: Scalar>(value: Value<S>, att: &AttributeSchema<S>) -> Json {
    match (value, &att.kind) {
        (Value::Symbol(i), AttributeKind::Categorical { symbols }) => json!(symbols[i]),
        (Value::Symbol(i), _) => json!(i),
        (Value::Number(x), _) => json!(x.as_f64()),
    }
}

/// Renders a ruleset as the interchange JSON shape: class names, default by
/// name, rules with named attributes and symbols.
pub fn ruleset_to_json<S: Scalar>(
    rs: &RuleSet<S>,
    schema: &[AttributeSchema<S>],
    classes: &[String],
) -> Json {
    json!({
        "classes": classes,
        "default": classes[rs.default_class],
        "provenance": match rs.provenance {
            Provenance::Direct => "direct",
            Provenance::Composed => "composed",
        },
        "rules": rs.rules.iter().map(|r| json!({
            "id": r.id,
            "class": classes[r.class],
            "coverage": r.coverage,
            "conditions": r.conditions.iter().map(|c| json!({
                "attr": schema[c.attribute].name,
                "op": op_str(c.op),
                "value": value_json(c.value, &schema[c.attribute]),
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

fn find_name(names: impl Iterator<Item = String>, wanted: &str, what: &str) -> Result<usize> {
    let names: Vec<String> = names.collect();
    names
        .iter()
        .position(|n| n == wanted)
        .ok_or_else(|| Error::Config(format!("unknown {what} {wanted:?}")))
}

/// Parses the interchange JSON shape back into a ruleset, resolving names
/// against the given schema and class list.
pub fn ruleset_from_json<S: Scalar>(
    doc: &Json,
    schema: &[AttributeSchema<S>],
    classes: &[String],
) -> Result<RuleSet<S>> {
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::Config("ruleset document must be a JSON object".into()))?;
    let str_field = |key: &str| -> Result<&str> {
        obj.get(key)
            .and_then(Json::as_str)
            .ok_or_else(|| Error::Config(format!("ruleset document needs a string {key:?}")))
    };

    let default_class = find_name(classes.iter().cloned(), str_field("default")?, "class")?;
    let provenance = match str_field("provenance")? {
        "direct" => Provenance::Direct,
        "composed" => Provenance::Composed,
        other => return Err(Error::Config(format!("unknown provenance {other:?}"))),
    };

    let mut rules = Vec::new();
    let raw_rules = obj
        .get("rules")
        .and_then(Json::as_array)
        .ok_or_else(|| Error::Config("ruleset document needs a \"rules\" array".into()))?;
    for raw in raw_rules {
        let class = raw
            .get("class")
            .and_then(Json::as_str)
            .ok_or_else(|| Error::Config("rule needs a string \"class\"".into()))?;
        let class = find_name(classes.iter().cloned(), class, "class")?;
        let id = raw.get("id").and_then(Json::as_u64).unwrap_or(rules.len() as u64) as usize;
        let coverage = raw.get("coverage").and_then(Json::as_u64).unwrap_or(0) as usize;
        let mut conditions = Vec::new();
        let raw_conds = raw
            .get("conditions")
            .and_then(Json::as_array)
            .ok_or_else(|| Error::Config("rule needs a \"conditions\" array".into()))?;
        for rc in raw_conds {
            let attr_name = rc
                .get("attr")
                .and_then(Json::as_str)
                .ok_or_else(|| Error::Config("condition needs a string \"attr\"".into()))?;
            let attribute = find_name(
                schema.iter().map(|a| a.name.clone()),
                attr_name,
                "attribute",
            )?;
            let op = match rc.get("op").and_then(Json::as_str) {
                Some("eq") => Op::Eq,
                Some("le") => Op::Le,
                Some("ge") => Op::Ge,
                other => return Err(Error::Config(format!("unknown condition op {other:?}"))),
            };
            let raw_value = rc
                .get("value")
                .ok_or_else(|| Error::Config("condition needs a \"value\"".into()))?;
            let value = match (&schema[attribute].kind, op) {
                (AttributeKind::Categorical { symbols }, Op::Eq) => {
                    let sym = raw_value.as_str().ok_or_else(|| {
                        Error::Config(format!("attribute {attr_name:?} takes a symbol value"))
                    })?;
                    Value::Symbol(find_name(symbols.iter().cloned(), sym, "symbol")?)
                }
                (AttributeKind::Continuous { .. }, Op::Le | Op::Ge) => {
                    let x = raw_value.as_f64().ok_or_else(|| {
                        Error::Config(format!("attribute {attr_name:?} takes a numeric value"))
                    })?;
                    Value::Number(S::of(x))
                }
                _ => {
                    return Err(Error::Config(format!(
                        "operator {:?} does not fit attribute {attr_name:?}",
                        op_str(op)
                    )))
                }
            };
            conditions.push(Condition {
                attribute,
                op,
                value,
            });
        }
        if conditions.is_empty() {
            return Err(Error::Config("a rule needs at least one condition".into()));
        }
        rules.push(Rule {
            id,
            class,
            conditions,
            coverage,
        });
    }
    Ok(RuleSet {
        rules,
        default_class,
        provenance,
    })
}

/// Human-readable rendering: one `If ... then ...` line per rule and a
/// final `Default:` line.
pub fn render_ruleset<S: Scalar>(
    rs: &RuleSet<S>,
    schema: &[AttributeSchema<S>],
    classes: &[String],
) -> String {
    let mut out = String::new();
    for (n, r) in rs.rules.iter().enumerate() {
        let parts: Vec<String> = r
            .conditions
            .iter()
            .map(|c| {
                let name = &schema[c.attribute].name;
                match (c.op, c.value, &schema[c.attribute].kind) {
                    (Op::Eq, Value::Symbol(i), AttributeKind::Categorical { symbols }) => {
                        format!("{name} = {}", symbols[i])
                    }
                    (Op::Eq, v, _) => format!("{name} = {v:?}"),
                    (Op::Le, v, _) => format!("{name} <= {}", v.number()),
                    (Op::Ge, v, _) => format!("{name} >= {}", v.number()),
                }
            })
            .collect();
        out.push_str(&format!(
            "Rule {}: If {} then {}\n",
            n + 1,
            parts.join(" and "),
            classes[r.class]
        ));
    }
    out.push_str(&format!("Default Rule: {}.\n", classes[rs.default_class]));
    out
}

// ------------------------------------------------------------------ tests
