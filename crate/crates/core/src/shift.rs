//! Finite subshifts of finite type: alphabet, incidence matrix, words,
//! eventually periodic points, cylinder targets and the depth-first
//! word enumeration engine everything else is built on.

use crate::error::{Error, Result};

/// Index into a [`Subshift`]'s symbol table.
pub type SymbolId = usize;

/// A one-sided subshift of finite type over a finite alphabet.
///
/// Validated at construction: the incidence digraph has no dead symbols
/// (all-zero row or column), is strongly connected, and the metric
/// exponent is positive. A witness set of connecting words, one per
/// ordered symbol pair, is kept around for the periodic-count bounds.
#[derive(Debug, Clone)]
pub struct Subshift {
    symbols: Vec<String>,
    incidence: Vec<bool>,
    alpha: f64,
    /// `witness[e * n + b]` is a shortest word w with e·w·b admissible.
    witness: Vec<Vec<SymbolId>>,
    /// `min_successor[e]` is the smallest b with A_eb = 1.
    min_successor: Vec<SymbolId>,
}

impl Subshift {
    /// Validates raw symbols, a 0/1 incidence matrix and a metric exponent.
    pub fn new(symbols: Vec<String>, incidence_rows: Vec<Vec<u8>>, alpha: f64) -> Result<Self> {
        let n = symbols.len();
        if n == 0 {
            return Err(Error::NotIrreducible);
        }
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::BadAlpha(alpha));
        }
        if incidence_rows.len() != n {
            return Err(Error::BadIncidence(format!(
                "matrix has {} rows for {} symbols",
                incidence_rows.len(),
                n
            )));
        }
        let mut incidence = vec![false; n * n];
        for (e, row) in incidence_rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::BadIncidence(format!(
                    "row {} has {} entries for {} symbols",
                    e,
                    row.len(),
                    n
                )));
            }
            for (b, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => incidence[e * n + b] = true,
                    _ => {
                        return Err(Error::BadIncidence(format!(
                            "entry ({e},{b}) is {v}, expected 0 or 1"
                        )))
                    }
                }
            }
        }
        for e in 0..n {
            if (0..n).all(|b| !incidence[e * n + b]) || (0..n).all(|b| !incidence[b * n + e]) {
                return Err(Error::DeadSymbol(symbols[e].clone()));
            }
        }
        // Strong connectivity: node 0 reaches everything forwards and backwards.
        let reach = |forward: bool| -> Vec<bool> {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(a) = stack.pop() {
                for b in 0..n {
                    let edge = if forward {
                        incidence[a * n + b]
                    } else {
                        incidence[b * n + a]
                    };
                    if edge && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
            seen
        };
        if reach(true).contains(&false) || reach(false).contains(&false) {
            return Err(Error::NotIrreducible);
        }
        let witness = connecting_words(&incidence, n);
        let min_successor = (0..n)
            .map(|e| (0..n).find(|&b| incidence[e * n + b]).unwrap())
            .collect();
        Ok(Subshift {
            symbols,
            incidence,
            alpha,
            witness,
            min_successor,
        })
    }

    /// Full shift on `n` single-character symbols `0..n`.
    pub fn full_shift(n: usize, alpha: f64) -> Result<Self> {
        let symbols = (0..n).map(|i| i.to_string()).collect();
        Self::new(symbols, vec![vec![1; n]; n], alpha)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn symbol_name(&self, e: SymbolId) -> &str {
        &self.symbols[e]
    }

    pub fn symbol_id(&self, name: &str) -> Result<SymbolId> {
        self.symbols
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    #[inline]
    pub fn admissible_pair(&self, a: SymbolId, b: SymbolId) -> bool {
        self.incidence[a * self.len() + b]
    }

    /// True iff every adjacent pair of `word` is admissible.
    pub fn is_admissible(&self, word: &[SymbolId]) -> bool {
        word.windows(2).all(|p| self.admissible_pair(p[0], p[1]))
    }

    /// Witness word w with e·w·b admissible, shortest such.
    pub fn connecting_word(&self, e: SymbolId, b: SymbolId) -> &[SymbolId] {
        &self.witness[e * self.len() + b]
    }

    /// Smallest admissible successor of `e`.
    pub fn min_successor(&self, e: SymbolId) -> SymbolId {
        self.min_successor[e]
    }

    /// Validates a word against this subshift.
    pub fn word(&self, symbols: Vec<SymbolId>) -> Result<Word> {
        if symbols.is_empty() {
            return Err(Error::BadQuery("empty word".into()));
        }
        if symbols.iter().any(|&e| e >= self.len()) {
            return Err(Error::UnknownSymbol("symbol id out of range".into()));
        }
        if !self.is_admissible(&symbols) {
            return Err(Error::Inadmissible);
        }
        Ok(Word(symbols))
    }

    /// Parses a word from single-character symbol names.
    pub fn word_from_str(&self, s: &str) -> Result<Word> {
        let ids = s
            .chars()
            .map(|c| self.symbol_id(&c.to_string()))
            .collect::<Result<Vec<_>>>()?;
        self.word(ids)
    }

    /// The eventually periodic point prefix·(cycle)^inf, validated.
    pub fn tail_point(&self, prefix: Vec<SymbolId>, cycle: Vec<SymbolId>) -> Result<TailPoint> {
        if cycle.is_empty() {
            return Err(Error::BadQuery("tail cycle must be nonempty".into()));
        }
        for &e in prefix.iter().chain(cycle.iter()) {
            if e >= self.len() {
                return Err(Error::UnknownSymbol("symbol id out of range".into()));
            }
        }
        let mut joined = prefix.clone();
        joined.extend_from_slice(&cycle);
        if !self.is_admissible(&joined) || !self.admissible_pair(cycle[cycle.len() - 1], cycle[0]) {
            return Err(Error::Inadmissible);
        }
        Ok(TailPoint { prefix, cycle })
    }

    /// Greedy lexicographically smallest admissible point after symbol `e`,
    /// i.e. the canonical choice of continuation w^+ for a word ending in `e`.
    /// The greedy successor walk enters a cycle within |E| steps.
    pub fn smallest_continuation(&self, e: SymbolId) -> TailPoint {
        let mut path = vec![self.min_successor(e)];
        loop {
            let next = self.min_successor(*path.last().unwrap());
            if let Some(pos) = path.iter().position(|&s| s == next) {
                let cycle = path.split_off(pos);
                return TailPoint {
                    prefix: path,
                    cycle,
                };
            }
            path.push(next);
        }
    }

    /// Lexicographically smallest point of the whole subshift.
    pub fn smallest_point(&self) -> TailPoint {
        // Start the greedy walk from the smallest symbol that can begin it.
        let mut path = vec![0 as SymbolId];
        loop {
            let next = self.min_successor(*path.last().unwrap());
            if let Some(pos) = path.iter().position(|&s| s == next) {
                let cycle = path.split_off(pos);
                return TailPoint {
                    prefix: path,
                    cycle,
                };
            }
            path.push(next);
        }
    }
}

/// BFS shortest connecting word for every ordered symbol pair.
fn connecting_words(incidence: &[bool], n: usize) -> Vec<Vec<SymbolId>> {
    let mut out = vec![Vec::new(); n * n];
    for e in 0..n {
        // parent[b] = predecessor of b on a shortest path from e's successors.
        let mut parent: Vec<Option<SymbolId>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        for b in 0..n {
            if incidence[e * n + b] {
                seen[b] = true;
                queue.push_back(b);
            }
        }
        while let Some(a) = queue.pop_front() {
            for b in 0..n {
                if incidence[a * n + b] && !seen[b] {
                    seen[b] = true;
                    parent[b] = Some(a);
                    queue.push_back(b);
                }
            }
        }
        for b in 0..n {
            // Word strictly between e and b: empty when the edge is direct.
            let mut w = Vec::new();
            if !incidence[e * n + b] {
                let mut cur = b;
                while let Some(p) = parent[cur] {
                    w.push(p);
                    cur = p;
                }
                w.reverse();
            }
            out[e * n + b] = w;
        }
    }
    out
}

/// A nonempty admissible finite word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word(Vec<SymbolId>);

impl Word {
    pub fn symbols(&self) -> &[SymbolId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The eventually periodic point prefix·(cycle)^inf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TailPoint {
    prefix: Vec<SymbolId>,
    cycle: Vec<SymbolId>,
}

impl TailPoint {
    pub fn prefix(&self) -> &[SymbolId] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[SymbolId] {
        &self.cycle
    }

    /// Symbol at position `i` (0-based) of the infinite stream.
    #[inline]
    pub fn symbol_at(&self, i: usize) -> SymbolId {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    pub fn first(&self) -> SymbolId {
        self.symbol_at(0)
    }

    /// The point with `word` prepended; the caller asserts admissibility.
    pub fn prepend(&self, word: &[SymbolId]) -> TailPoint {
        let mut prefix = word.to_vec();
        prefix.extend_from_slice(&self.prefix);
        TailPoint {
            prefix,
            cycle: self.cycle.clone(),
        }
    }

    /// Length of the common prefix of two points.
    pub fn common_prefix_len(&self, other: &TailPoint, scan_limit: usize) -> usize {
        (0..scan_limit)
            .take_while(|&i| self.symbol_at(i) == other.symbol_at(i))
            .count()
    }

    /// d_alpha distance between two eventually periodic points, scanning at
    /// most `scan_limit` symbols: exp(-alpha * common prefix length).
    pub fn metric_distance(&self, other: &TailPoint, alpha: f64, scan_limit: usize) -> f64 {
        (-alpha * self.common_prefix_len(other, scan_limit) as f64).exp()
    }
}

/// A finite disjoint union of cylinders; pairwise non-nested by construction,
/// hence a clopen set with empty boundary.
#[derive(Debug, Clone)]
pub struct TargetSet {
    words: Vec<Word>,
}

impl TargetSet {
    pub fn new(words: Vec<Word>) -> Result<Self> {
        for (i, a) in words.iter().enumerate() {
            for b in words.iter().skip(i + 1) {
                let k = a.len().min(b.len());
                if a.symbols()[..k] == b.symbols()[..k] {
                    return Err(Error::BadQuery(
                        "target cylinders must be pairwise disjoint (no word a prefix of another)"
                            .into(),
                    ));
                }
            }
        }
        if words.is_empty() {
            return Err(Error::BadQuery("target set must be nonempty".into()));
        }
        Ok(TargetSet { words })
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    /// True iff the symbol stream of `point` begins with one of the words.
    pub fn contains_point(&self, point: &TailPoint) -> bool {
        self.words.iter().any(|w| {
            w.symbols()
                .iter()
                .enumerate()
                .all(|(i, &s)| point.symbol_at(i) == s)
        })
    }

    /// Membership of the stream `word·tail`.
    pub fn contains_word_with_tail(&self, word: &[SymbolId], tail: &TailPoint) -> bool {
        self.words.iter().any(|w| {
            w.symbols().iter().enumerate().all(|(i, &s)| {
                if i < word.len() {
                    word[i] == s
                } else {
                    tail.symbol_at(i - word.len()) == s
                }
            })
        })
    }

    /// Membership of the periodic stream `word·word·word···`.
    pub fn contains_periodic_word(&self, word: &[SymbolId]) -> bool {
        self.words.iter().any(|w| {
            w.symbols()
                .iter()
                .enumerate()
                .all(|(i, &s)| word[i % word.len()] == s)
        })
    }

    /// Whether some counted word can still start with `prefix`: every counted
    /// stream starts with one of the target words, so `prefix` must agree
    /// with one of them on the overlap.
    pub fn prefix_compatible(&self, prefix: &[SymbolId]) -> bool {
        self.words.iter().any(|w| {
            let k = w.len().min(prefix.len());
            w.symbols()[..k] == prefix[..k]
        })
    }
}

/// Outcome of a pruning probe on a prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prune {
    /// Keep the prefix and descend into it.
    Keep,
    /// Drop the prefix and its whole subtree.
    Subtree,
}

/// Depth-first enumeration of admissible words in lexicographic order.
///
/// Every admissible word w surviving `prune` with w·tail admissible is passed
/// to `visit` exactly once, parents before extensions; the return value is the
/// number of visits. `prune` must be monotone: once a prefix is pruned all of
/// its extensions would be pruned too.
pub fn enumerate_admissible<P, V>(
    sub: &Subshift,
    tail: &TailPoint,
    mut prune: P,
    mut visit: V,
) -> u64
where
    P: FnMut(&[SymbolId]) -> Prune,
    V: FnMut(&[SymbolId]),
{
    let mut word = Vec::new();
    let mut count = 0u64;
    for e in 0..sub.len() {
        descend(sub, Some(tail), &mut word, e, &mut prune, &mut visit, &mut count);
    }
    count
}

/// Same engine restricted to extensions of `root` (the root itself is probed
/// and visited). Returns 0 when `root` is not admissible.
pub fn enumerate_from_prefix<P, V>(
    sub: &Subshift,
    tail: Option<&TailPoint>,
    root: &[SymbolId],
    mut prune: P,
    mut visit: V,
) -> u64
where
    P: FnMut(&[SymbolId]) -> Prune,
    V: FnMut(&[SymbolId]),
{
    if root.is_empty() || !sub.is_admissible(root) {
        return 0;
    }
    let mut word = root[..root.len() - 1].to_vec();
    let mut count = 0u64;
    // Feed the root's ancestors into the prune stack owner by probing them in
    // order; pruning decisions on proper ancestors are the caller's concern,
    // so only the root is probed here.
    descend(
        sub,
        tail,
        &mut word,
        root[root.len() - 1],
        &mut prune,
        &mut visit,
        &mut count,
    );
    count
}

/// Enumeration without a tail constraint: every surviving admissible word is
/// visited. Used for periodic counting where membership and the Birkhoff sum
/// are evaluated on the word's own cycle.
pub fn enumerate_words<P, V>(sub: &Subshift, mut prune: P, mut visit: V) -> u64
where
    P: FnMut(&[SymbolId]) -> Prune,
    V: FnMut(&[SymbolId]),
{
    let mut word = Vec::new();
    let mut count = 0u64;
    for e in 0..sub.len() {
        descend(sub, None, &mut word, e, &mut prune, &mut visit, &mut count);
    }
    count
}

fn descend<P, V>(
    sub: &Subshift,
    tail: Option<&TailPoint>,
    word: &mut Vec<SymbolId>,
    next: SymbolId,
    prune: &mut P,
    visit: &mut V,
    count: &mut u64,
) where
    P: FnMut(&[SymbolId]) -> Prune,
    V: FnMut(&[SymbolId]),
{
    word.push(next);
    if prune(word) == Prune::Keep {
        let connects = match tail {
            Some(t) => sub.admissible_pair(next, t.first()),
            None => true,
        };
        if connects {
            visit(word);
            *count += 1;
        }
        for b in 0..sub.len() {
            if sub.admissible_pair(next, b) {
                descend(sub, tail, word, b, prune, visit, count);
            }
        }
    }
    word.pop();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Subshift {
        Subshift::new(
            vec!["0".into(), "1".into()],
            vec![vec![1, 1], vec![1, 0]],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn full_shift_validates_with_empty_witnesses() {
        let sub = Subshift::full_shift(2, 1.0).unwrap();
        for e in 0..2 {
            for b in 0..2 {
                assert!(sub.connecting_word(e, b).is_empty());
            }
        }
    }

    #[test]
    fn golden_mean_witness_connects_one_to_one() {
        let sub = golden();
        // 1 -> 1 has no direct edge; the shortest connector is the word "0".
        assert_eq!(sub.connecting_word(1, 1), &[0]);
        assert!(sub.connecting_word(0, 1).is_empty());
    }

    #[test]
    fn disconnected_loops_rejected() {
        let err = Subshift::new(
            vec!["a".into(), "b".into()],
            vec![vec![1, 0], vec![0, 1]],
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotIrreducible));
    }

    #[test]
    fn dead_symbol_rejected() {
        let err = Subshift::new(
            vec!["a".into(), "b".into()],
            vec![vec![1, 1], vec![0, 0]],
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DeadSymbol(_)));
    }

    #[test]
    fn bad_alpha_rejected() {
        let err = Subshift::new(vec!["a".into()], vec![vec![1]], 0.0).unwrap_err();
        assert!(matches!(err, Error::BadAlpha(_)));
    }

    #[test]
    fn admissibility_on_golden_mean() {
        let sub = golden();
        assert!(sub.word_from_str("01").is_ok());
        assert!(matches!(sub.word_from_str("11"), Err(Error::Inadmissible)));
        assert!(sub.word_from_str("0").is_ok());
        assert!(matches!(
            sub.word_from_str("2"),
            Err(Error::UnknownSymbol(_))
        ));
    }

    #[test]
    fn cylinder_membership_examples() {
        let sub = Subshift::full_shift(2, 1.0).unwrap();
        let zeros = sub.tail_point(vec![], vec![0]).unwrap();
        let one_then_zeros = sub.tail_point(vec![1], vec![0]).unwrap();
        let b = TargetSet::new(vec![sub.word_from_str("0").unwrap()]).unwrap();
        assert!(b.contains_point(&zeros));
        assert!(!b.contains_point(&one_then_zeros));

        // Membership decided at depth 3 on the cycle 01: prefix is "010...".
        let alt = sub.tail_point(vec![], vec![0, 1]).unwrap();
        let deep = TargetSet::new(vec![
            sub.word_from_str("011").unwrap(),
            sub.word_from_str("010").unwrap(),
        ])
        .unwrap();
        assert!(deep.contains_point(&alt));
    }

    #[test]
    fn metric_on_eventually_periodic_points() {
        let sub = Subshift::full_shift(2, 1.0).unwrap();
        let a = sub.tail_point(vec![0, 0, 1], vec![0]).unwrap();
        let b = sub.tail_point(vec![], vec![0]).unwrap();
        // Common prefix 00, disagreement at position 2.
        assert_eq!(a.common_prefix_len(&b, 64), 2);
        let d = a.metric_distance(&b, 1.0, 64);
        assert!((d - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn enumeration_counts_full_shift_depth_three() {
        let sub = Subshift::full_shift(2, 1.0).unwrap();
        let tail = sub.tail_point(vec![], vec![0]).unwrap();
        let visited = enumerate_admissible(
            &sub,
            &tail,
            |w| if w.len() > 3 { Prune::Subtree } else { Prune::Keep },
            |_| {},
        );
        assert_eq!(visited, 2 + 4 + 8);
    }

    #[test]
    fn enumeration_respects_tail_admissibility() {
        let sub = golden();
        let tail = sub.tail_point(vec![], vec![0]).unwrap();
        let mut seen = Vec::new();
        enumerate_admissible(
            &sub,
            &tail,
            |w| if w.len() > 2 { Prune::Subtree } else { Prune::Keep },
            |w| seen.push(w.to_vec()),
        );
        let expect: Vec<Vec<SymbolId>> =
            vec![vec![0], vec![0, 0], vec![0, 1], vec![1], vec![1, 0]];
        assert_eq!(seen, expect);
    }

    #[test]
    fn enumeration_prunes_subtrees() {
        let sub = Subshift::full_shift(2, 1.0).unwrap();
        let tail = sub.tail_point(vec![], vec![0]).unwrap();
        let visited = enumerate_admissible(
            &sub,
            &tail,
            |w| {
                if w.len() > 2 || w[0] == 1 {
                    Prune::Subtree
                } else {
                    Prune::Keep
                }
            },
            |_| {},
        );
        assert_eq!(visited, 3); // 0, 00, 01
    }

    #[test]
    fn smallest_continuation_is_periodic_and_admissible() {
        let sub = golden();
        let t = sub.smallest_continuation(1);
        // After 1 the greedy walk is 0,0,0,... so the cycle is (0).
        assert!(t.prefix().is_empty());
        assert_eq!(t.cycle(), &[0]);
    }

    #[test]
    fn enumerate_from_prefix_visits_root_and_descendants() {
        let sub = Subshift::full_shift(2, 1.0).unwrap();
        let tail = sub.tail_point(vec![], vec![0]).unwrap();
        let mut seen = Vec::new();
        enumerate_from_prefix(
            &sub,
            Some(&tail),
            &[1],
            |w: &[SymbolId]| {
                if w.len() > 2 {
                    Prune::Subtree
                } else {
                    Prune::Keep
                }
            },
            |w: &[SymbolId]| seen.push(w.to_vec()),
        );
        assert_eq!(seen, vec![vec![1], vec![1, 0], vec![1, 1]]);
    }
}
