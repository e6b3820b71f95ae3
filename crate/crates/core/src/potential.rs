//! Locally constant potentials of finite depth: Birkhoff sums, the
//! oscillation coefficient and distortion constant controlling their
//! tail-dependence, the affine interval IFS builder, and higher-block
//! recoding down to depth one.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::shift::{Subshift, SymbolId, TailPoint, Word};

/// A potential depending on the first `depth` symbols of a point: the value
/// at rho is the weight of the word rho_1..rho_depth.
#[derive(Debug, Clone)]
pub struct LocallyConstantPotential {
    depth: usize,
    n: usize,
    /// Dense table indexed by the mixed-radix code of the depth-word;
    /// NaN marks inadmissible windows.
    table: Vec<f64>,
}

impl LocallyConstantPotential {
    /// Builds from an explicit weight table. Every admissible depth-word must
    /// carry a finite weight and no extra keys are allowed.
    pub fn from_table(
        sub: &Subshift,
        depth: usize,
        weights: &BTreeMap<Vec<SymbolId>, f64>,
    ) -> Result<Self> {
        if depth == 0 {
            return Err(Error::BadWeightTable("depth must be positive".into()));
        }
        let n = sub.len();
        let size = n.pow(depth as u32);
        let mut table = vec![f64::NAN; size];
        let mut admissible = 0usize;
        for (word, &w) in weights {
            if word.len() != depth {
                return Err(Error::BadWeightTable(format!(
                    "key of length {} in a depth-{} table",
                    word.len(),
                    depth
                )));
            }
            if word.iter().any(|&e| e >= n) {
                return Err(Error::BadWeightTable("unknown symbol in key".into()));
            }
            if !sub.is_admissible(word) {
                return Err(Error::BadWeightTable(
                    "weight given for an inadmissible word".into(),
                ));
            }
            if !w.is_finite() {
                return Err(Error::BadWeightTable("weights must be finite".into()));
            }
            table[code(word, n)] = w;
            admissible += 1;
        }
        let expected = count_admissible_words(sub, depth);
        if admissible != expected {
            return Err(Error::BadWeightTable(format!(
                "{admissible} weights given, {expected} admissible depth-{depth} words"
            )));
        }
        Ok(Self { depth, n, table })
    }

    /// Depth-1 potential from per-symbol weights.
    pub fn depth_one(sub: &Subshift, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != sub.len() {
            return Err(Error::BadWeightTable(format!(
                "{} weights for {} symbols",
                weights.len(),
                sub.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::BadWeightTable("weights must be finite".into()));
        }
        Ok(Self {
            depth: 1,
            n: sub.len(),
            table: weights,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Weight of an admissible depth-word given by its symbols.
    #[inline]
    pub fn weight(&self, window: &[SymbolId]) -> f64 {
        debug_assert_eq!(window.len(), self.depth);
        self.table[code(window, self.n)]
    }

    /// Per-symbol weight; only valid at depth 1.
    #[inline]
    pub fn weight1(&self, e: SymbolId) -> f64 {
        debug_assert_eq!(self.depth, 1);
        self.table[e]
    }

    pub fn max_weight(&self) -> f64 {
        self.table.iter().copied().filter(|w| !w.is_nan()).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_weight(&self) -> f64 {
        self.table.iter().copied().filter(|w| !w.is_nan()).fold(f64::INFINITY, f64::min)
    }

    pub fn all_weights_negative(&self) -> bool {
        self.max_weight() < 0.0
    }

    /// Scales the potential by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            depth: self.depth,
            n: self.n,
            table: self.table.iter().map(|w| c * w).collect(),
        }
    }

    /// The same potential viewed at a larger depth: the weight of a long
    /// window is the weight of its leading sub-window. Values of Birkhoff
    /// sums are unchanged; only the recoding granularity moves.
    pub fn lifted(&self, sub: &Subshift, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::BadWeightTable(
                "lift target depth below current depth".into(),
            ));
        }
        if depth == self.depth {
            return Ok(self.clone());
        }
        let mut table = vec![f64::NAN; self.n.pow(depth as u32)];
        for w in admissible_words(sub, depth) {
            table[code(&w, self.n)] = self.weight(&w[..self.depth]);
        }
        Ok(Self {
            depth,
            n: self.n,
            table,
        })
    }

    /// Value along the stream word·tail at shift position `k` (0-based): the
    /// weight of the depth-window starting at position k.
    #[inline]
    pub fn window_at(&self, word: &[SymbolId], tail: &TailPoint, k: usize) -> f64 {
        if self.depth == 1 {
            return if k < word.len() {
                self.table[word[k]]
            } else {
                self.table[tail.symbol_at(k - word.len())]
            };
        }
        let mut idx = 0usize;
        for j in 0..self.depth {
            let pos = k + j;
            let sym = if pos < word.len() {
                word[pos]
            } else {
                tail.symbol_at(pos - word.len())
            };
            idx = idx * self.n + sym;
        }
        self.table[idx]
    }

    /// Birkhoff sum over the first `|word|` shifts of word·tail; windows
    /// overhanging the word read tail symbols.
    pub fn birkhoff_sum(&self, sub: &Subshift, word: &Word, tail: &TailPoint) -> Result<f64> {
        let syms = word.symbols();
        if !sub.admissible_pair(syms[syms.len() - 1], tail.first()) {
            return Err(Error::Inadmissible);
        }
        Ok(self.birkhoff_prefix(syms, tail))
    }

    /// Unchecked Birkhoff sum of a prefix against an arbitrary continuation.
    pub fn birkhoff_prefix(&self, word: &[SymbolId], tail: &TailPoint) -> f64 {
        (0..word.len()).map(|k| self.window_at(word, tail, k)).sum()
    }

    /// Birkhoff sum of a periodic word evaluated on its own infinite
    /// repetition; windows wrap around the cycle.
    pub fn birkhoff_periodic(&self, word: &[SymbolId]) -> f64 {
        let q = word.len();
        (0..q)
            .map(|k| {
                let mut idx = 0usize;
                for j in 0..self.depth {
                    idx = idx * self.n + word[(k + j) % q];
                }
                self.table[idx]
            })
            .sum()
    }

    /// Largest Birkhoff value of a prefix over all admissible continuations
    /// is bounded by the value on any one continuation plus the distortion
    /// constant; callers use this for monotone pruning.
    pub fn holder_data(&self, sub: &Subshift, alpha: f64) -> HolderData {
        let mut v_alpha: f64 = 0.0;
        if self.depth > 1 {
            let words = admissible_words(sub, self.depth);
            // Oscillation over pairs agreeing on the first m symbols, for
            // every split depth m < depth, weighted by exp(alpha (m - 1)).
            for m in 1..self.depth {
                let mut groups: BTreeMap<&[SymbolId], (f64, f64)> = BTreeMap::new();
                for w in &words {
                    let key = &w[..m];
                    let value = self.weight(w);
                    let entry = groups.entry(key).or_insert((value, value));
                    entry.0 = entry.0.min(value);
                    entry.1 = entry.1.max(value);
                }
                let scale = (alpha * (m as f64 - 1.0)).exp();
                for (lo, hi) in groups.values() {
                    v_alpha = v_alpha.max((hi - lo) * scale);
                }
            }
        }
        let k_f = if v_alpha == 0.0 {
            0.0
        } else {
            v_alpha / (1.0 - (-alpha).exp())
        };
        HolderData { v_alpha, k_f }
    }
}

/// Oscillation coefficient and the geometric-series distortion constant
/// bounding |S_n f(w rho) - S_n f(w rho')| by k_f * exp(-alpha |rho ^ rho'|).
/// Both vanish exactly at depth 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderData {
    pub v_alpha: f64,
    pub k_f: f64,
}

#[inline]
fn code(word: &[SymbolId], n: usize) -> usize {
    word.iter().fold(0usize, |acc, &e| acc * n + e)
}

fn count_admissible_words(sub: &Subshift, depth: usize) -> usize {
    admissible_words(sub, depth).len()
}

/// All admissible words of the given length, lexicographic.
pub fn admissible_words(sub: &Subshift, len: usize) -> Vec<Vec<SymbolId>> {
    let mut out = Vec::new();
    let mut word = Vec::with_capacity(len);
    fn rec(sub: &Subshift, len: usize, word: &mut Vec<SymbolId>, out: &mut Vec<Vec<SymbolId>>) {
        if word.len() == len {
            out.push(word.clone());
            return;
        }
        for b in 0..sub.len() {
            if word.last().is_none_or(|&a| sub.admissible_pair(a, b)) {
                word.push(b);
                rec(sub, len, word, out);
                word.pop();
            }
        }
    }
    rec(sub, len, &mut word, &mut out);
    out
}

/// One affine contraction t -> slope * t + offset of the unit interval.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub slope: f64,
    pub offset: f64,
}

/// A finite family of affine contractions on `[0,1]`, one per symbol.
#[derive(Debug, Clone)]
pub struct AffineIfsSpec {
    pub maps: Vec<AffineMap>,
}

/// Full shift plus depth-1 log-derivative potential built from an affine
/// interval IFS. `osc_warning` is set instead of erroring when overlapping
/// images were explicitly allowed: the symbolic counting data depends only
/// on the slopes.
#[derive(Debug, Clone)]
pub struct IfsSystem {
    pub subshift: Subshift,
    pub potential: LocallyConstantPotential,
    pub osc_warning: Option<String>,
}

pub fn from_affine_ifs(spec: &AffineIfsSpec, alpha: f64, allow_overlap: bool) -> Result<IfsSystem> {
    if spec.maps.len() < 2 {
        return Err(Error::BadQuery("an IFS needs at least two maps".into()));
    }
    for (i, m) in spec.maps.iter().enumerate() {
        if !(m.slope > 0.0 && m.slope < 1.0) {
            return Err(Error::BadSlope {
                index: i,
                slope: m.slope,
            });
        }
        if m.offset < 0.0 || m.offset + m.slope > 1.0 {
            return Err(Error::ImageEscape(i));
        }
    }
    let mut osc_warning = None;
    let mut order: Vec<usize> = (0..spec.maps.len()).collect();
    order.sort_by(|&a, &b| spec.maps[a].offset.total_cmp(&spec.maps[b].offset));
    for pair in order.windows(2) {
        let (i, j) = (pair[0], pair[1]);
        let end = spec.maps[i].offset + spec.maps[i].slope;
        if spec.maps[j].offset < end {
            if allow_overlap {
                osc_warning = Some(format!(
                    "images of maps {i} and {j} overlap; proceeding because overlap was allowed"
                ));
                break;
            }
            return Err(Error::OscViolation(i, j));
        }
    }
    let subshift = Subshift::full_shift(spec.maps.len(), alpha)?;
    let weights = spec.maps.iter().map(|m| m.slope.ln()).collect();
    let potential = LocallyConstantPotential::depth_one(&subshift, weights)?;
    Ok(IfsSystem {
        subshift,
        potential,
        osc_warning,
    })
}

/// Higher-block recoding: the depth-d system becomes a depth-1 system whose
/// symbols are the admissible d-words. Counting data is invariant: words of
/// length n off a tail correspond bijectively to block words of length n off
/// the recoded tail, with equal Birkhoff sums.
#[derive(Debug, Clone)]
pub struct BlockRecoding {
    pub subshift: Subshift,
    pub potential: LocallyConstantPotential,
    blocks: Vec<Vec<SymbolId>>,
    depth: usize,
}

impl BlockRecoding {
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// The original d-word a block symbol stands for.
    pub fn block_word(&self, b: SymbolId) -> &[SymbolId] {
        &self.blocks[b]
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    fn block_id(&self, word: &[SymbolId]) -> Option<SymbolId> {
        self.blocks.binary_search_by(|probe| probe.as_slice().cmp(word)).ok()
    }

    /// Image of an original point under the block coding.
    pub fn recode_tail(&self, tail: &TailPoint) -> TailPoint {
        let p = tail.prefix().len();
        let c = tail.cycle().len();
        let window = |i: usize| -> SymbolId {
            let w: Vec<SymbolId> = (i..i + self.depth).map(|j| tail.symbol_at(j)).collect();
            self.block_id(&w).expect("tail window must be admissible")
        };
        // Block stream is eventually periodic with the same cycle length once
        // every window lies inside the periodic part.
        let prefix: Vec<SymbolId> = (0..p).map(window).collect();
        let cycle: Vec<SymbolId> = (p..p + c).map(window).collect();
        self.subshift
            .tail_point(prefix, cycle)
            .expect("block image of an admissible point is admissible")
    }

    /// Block symbols whose d-word begins with `word` (for |word| <= depth);
    /// for longer words, the single block word spelling them out.
    pub fn recode_cylinder(&self, word: &[SymbolId]) -> Vec<Vec<SymbolId>> {
        if word.len() <= self.depth {
            self.blocks
                .iter()
                .enumerate()
                .filter(|(_, b)| b[..word.len()] == *word)
                .map(|(i, _)| vec![i])
                .collect()
        } else {
            let m = word.len() - self.depth + 1;
            let blocks: Option<Vec<SymbolId>> =
                (0..m).map(|k| self.block_id(&word[k..k + self.depth])).collect();
            match blocks {
                Some(b) => vec![b],
                None => Vec::new(),
            }
        }
    }
}

pub fn block_recode(sub: &Subshift, f: &LocallyConstantPotential) -> Result<BlockRecoding> {
    let d = f.depth();
    let blocks = admissible_words(sub, d);
    let symbols: Vec<String> = blocks
        .iter()
        .map(|b| b.iter().map(|&e| sub.symbol_name(e)).collect::<String>())
        .collect();
    let m = blocks.len();
    let mut rows = vec![vec![0u8; m]; m];
    for (i, a) in blocks.iter().enumerate() {
        for (j, b) in blocks.iter().enumerate() {
            // Overlap plus admissibility of the final pair; for d >= 2 the
            // pair check is already implied by b being admissible, at d = 1
            // it is the whole condition.
            if a[1..] == b[..d - 1] && sub.admissible_pair(a[d - 1], b[d - 1]) {
                rows[i][j] = 1;
            }
        }
    }
    let block_sub = Subshift::new(symbols, rows, sub.alpha())?;
    let weights = blocks.iter().map(|b| f.weight(b)).collect();
    let block_pot = LocallyConstantPotential::depth_one(&block_sub, weights)?;
    Ok(BlockRecoding {
        subshift: block_sub,
        potential: block_pot,
        blocks,
        depth: d,
    })
}
