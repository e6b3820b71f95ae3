//! Exact orbit-counting functions by pruned depth-first enumeration.
//!
//! Every query counts words w with Birkhoff sum at least -T, possibly
//! restricted to a cylinder target, a fixed length, an initial block, or to
//! periodic words evaluated on their own repetition. Pruning a prefix is
//! sound because all weights are negative and any continuation changes the
//! prefix's partial sum by at most the distortion constant: once
//! S(prefix against a reference continuation) + k_f < -T the whole subtree
//! is dead. At depth 1 the reference continuation is irrelevant and the
//! pruning is exact.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{admissible_words, block_recode, LocallyConstantPotential};
use crate::shift::{
    enumerate_from_prefix, Prune, Subshift, SymbolId, TailPoint, TargetSet, Word,
};

/// Two adjacent jump locations are merged when closer than this.
pub const JUMP_MERGE_TOL: f64 = 1e-10;
/// Default hard cap on the maximal word length the brute-force oracle accepts.
pub const ORACLE_CAP: usize = 26;

/// Which counting function a query evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CountKind {
    /// Words of any length off the tail.
    Plain,
    /// Words extending a target word, sum taken over the whole extension.
    InitialBlock,
    /// Words of one exact length off the tail.
    FixedLength(usize),
    /// Periodic words evaluated on their own repetition.
    Periodic,
    /// Periodic words of one exact length.
    PeriodicFixedLength(usize),
}

/// Cylinder restriction of a query.
#[derive(Debug, Clone)]
pub enum Target {
    All,
    Set(TargetSet),
}

impl Target {
    fn prefix_compatible(&self, prefix: &[SymbolId]) -> bool {
        match self {
            Target::All => true,
            Target::Set(set) => set.prefix_compatible(prefix),
        }
    }

    fn contains_word_with_tail(&self, word: &[SymbolId], tail: &TailPoint) -> bool {
        match self {
            Target::All => true,
            Target::Set(set) => set.contains_word_with_tail(word, tail),
        }
    }

    fn contains_periodic(&self, word: &[SymbolId]) -> bool {
        match self {
            Target::All => true,
            Target::Set(set) => set.contains_periodic_word(word),
        }
    }
}

/// A validated counting query.
#[derive(Debug, Clone)]
pub struct CountQuery {
    pub kind: CountKind,
    /// Required for the tail-based kinds, absent for the periodic ones.
    pub tail: Option<TailPoint>,
    pub target: Target,
    pub threshold: f64,
}

impl CountQuery {
    pub fn plain(tail: TailPoint, target: Target, threshold: f64) -> Result<Self> {
        Self::build(CountKind::Plain, Some(tail), target, threshold)
    }

    pub fn initial_block(tail: TailPoint, target: TargetSet, threshold: f64) -> Result<Self> {
        Self::build(
            CountKind::InitialBlock,
            Some(tail),
            Target::Set(target),
            threshold,
        )
    }

    pub fn fixed_length(
        tail: TailPoint,
        target: Target,
        len: usize,
        threshold: f64,
    ) -> Result<Self> {
        Self::build(CountKind::FixedLength(len), Some(tail), target, threshold)
    }

    pub fn periodic(target: Target, threshold: f64) -> Result<Self> {
        Self::build(CountKind::Periodic, None, target, threshold)
    }

    pub fn periodic_fixed_length(target: Target, len: usize, threshold: f64) -> Result<Self> {
        Self::build(CountKind::PeriodicFixedLength(len), None, target, threshold)
    }

    fn build(
        kind: CountKind,
        tail: Option<TailPoint>,
        target: Target,
        threshold: f64,
    ) -> Result<Self> {
        if threshold.is_nan() || threshold <= 0.0 {
            return Err(Error::BadQuery("threshold must be positive".into()));
        }
        if let CountKind::FixedLength(0) | CountKind::PeriodicFixedLength(0) = kind {
            return Err(Error::BadQuery("length must be positive".into()));
        }
        Ok(CountQuery {
            kind,
            tail,
            target,
            threshold,
        })
    }
}

/// Exact count of the query by pruned lexicographic DFS.
pub fn count(sub: &Subshift, f: &LocallyConstantPotential, q: &CountQuery) -> Result<u64> {
    count_with_threads(sub, f, q, 1)
}

/// Same, partitioning the search by first symbol (or by target word for the
/// initial-block kind) over a thread pool; counts merge by addition.
pub fn count_with_threads(
    sub: &Subshift,
    f: &LocallyConstantPotential,
    q: &CountQuery,
    threads: usize,
) -> Result<u64> {
    let mut total = 0u64;
    for_each_counted(sub, f, q, threads, &mut |_, _| total += 1)?;
    Ok(total)
}

/// Largest length over which every word survives (m) and over which some
/// word survives (M). Computed by min/max-plus dynamic programming over the
/// block digraph rather than enumeration: both extremes only need the
/// per-length extremal Birkhoff sums, and the surviving tree at large T is
/// far too big to walk.
pub fn length_extremes(
    sub: &Subshift,
    f: &LocallyConstantPotential,
    tail: &TailPoint,
    threshold: f64,
) -> Result<(usize, usize)> {
    if !f.all_weights_negative() {
        return Err(Error::NonNegativeWeight);
    }
    let rec = block_recode(sub, f)?;
    let bsub = &rec.subshift;
    let bf = &rec.potential;
    let btail = rec.recode_tail(tail);
    let t0 = btail.first();
    let nb = bsub.len();
    let w_max = bf.max_weight();
    let n_bound = (threshold / -w_max).floor() as usize + 1;

    // cost_min/max[b]: extremal sums over length-n block paths ending at b.
    let mut cost_min = vec![f64::INFINITY; nb];
    let mut cost_max = vec![f64::NEG_INFINITY; nb];
    for b in 0..nb {
        cost_min[b] = bf.weight1(b);
        cost_max[b] = bf.weight1(b);
    }
    let mut m_t = 0usize;
    let mut big_m = 0usize;
    let mut all_survive_so_far = true;
    for n in 1..=n_bound {
        let mut b_n = f64::INFINITY;
        let mut d_n = f64::NEG_INFINITY;
        for b in 0..nb {
            if bsub.admissible_pair(b, t0) {
                b_n = b_n.min(cost_min[b]);
                d_n = d_n.max(cost_max[b]);
            }
        }
        if d_n >= -threshold {
            big_m = n;
        }
        if all_survive_so_far && b_n >= -threshold {
            m_t = n;
        } else {
            all_survive_so_far = false;
        }
        if n == n_bound {
            break;
        }
        let mut next_min = vec![f64::INFINITY; nb];
        let mut next_max = vec![f64::NEG_INFINITY; nb];
        for a in 0..nb {
            for b in 0..nb {
                if bsub.admissible_pair(a, b) {
                    let w = bf.weight1(b);
                    next_min[b] = next_min[b].min(cost_min[a] + w);
                    next_max[b] = next_max[b].max(cost_max[a] + w);
                }
            }
        }
        cost_min = next_min;
        cost_max = next_max;
    }
    Ok((m_t, big_m))
}

/// One discontinuity of T -> N(T).
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Jump {
    pub t: f64,
    pub n_before: u64,
    pub n_after: u64,
    pub ratio_before: f64,
    pub ratio_after: f64,
}

/// The jump structure of a counting function over a window, with counts
/// normalized by exp(delta T) on both sides of every jump. Window
/// membership is decided with the merge tolerance as padding so that jumps
/// sitting on an endpoint up to rounding are kept.
#[derive(Debug, Clone, Serialize)]
pub struct CountSeries {
    pub delta: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub jumps: Vec<Jump>,
    /// All distinct jumps collected up to the window top, including those
    /// below the window start.
    pub total_jumps: usize,
}

impl CountSeries {
    /// Jumps inside the trailing half of the window.
    pub fn trailing_half(&self) -> &[Jump] {
        let mid = 0.5 * (self.t_lo + self.t_hi);
        let start = self.jumps.partition_point(|j| j.t < mid);
        &self.jumps[start..]
    }
}

/// Collects every jump location of the query's counting function up to the
/// window top in one pruned DFS, accumulates counts and emits one-sided
/// normalized ratios. The query's own threshold is ignored; the window
/// bounds take its place.
pub fn count_series(
    sub: &Subshift,
    f: &LocallyConstantPotential,
    q: &CountQuery,
    t_lo: f64,
    t_hi: f64,
    delta: f64,
    threads: usize,
) -> Result<CountSeries> {
    if t_hi.is_nan() || t_lo.is_nan() || t_hi <= t_lo || t_hi <= 0.0 {
        return Err(Error::WindowTooSmall(format!("window [{t_lo}, {t_hi}]")));
    }
    let probe = CountQuery {
        threshold: t_hi + JUMP_MERGE_TOL,
        ..q.clone()
    };
    let mut locations: Vec<f64> = Vec::new();
    for_each_counted(sub, f, &probe, threads, &mut |_, s| locations.push(-s))?;
    locations.sort_by(f64::total_cmp);
    let mut jumps: Vec<Jump> = Vec::new();
    let mut cumulative = 0u64;
    let mut i = 0usize;
    while i < locations.len() {
        let t = locations[i];
        let mut j = i + 1;
        while j < locations.len() && locations[j] - t < JUMP_MERGE_TOL {
            j += 1;
        }
        let n_before = cumulative;
        cumulative += (j - i) as u64;
        let scale = (-delta * t).exp();
        jumps.push(Jump {
            t,
            n_before,
            n_after: cumulative,
            ratio_before: n_before as f64 * scale,
            ratio_after: cumulative as f64 * scale,
        });
        i = j;
    }
    let total_jumps = jumps.len();
    jumps.retain(|j| j.t >= t_lo - JUMP_MERGE_TOL && j.t <= t_hi + JUMP_MERGE_TOL);
    Ok(CountSeries {
        delta,
        t_lo,
        t_hi,
        jumps,
        total_jumps,
    })
}

/// Brute-force oracle: enumerates every admissible word up to the maximal
/// feasible length without pruning and filters. Errors out above the cap so
/// it can only be pointed at desk-scale thresholds.
pub fn count_oracle(
    sub: &Subshift,
    f: &LocallyConstantPotential,
    q: &CountQuery,
    cap: usize,
) -> Result<u64> {
    if !f.all_weights_negative() {
        return Err(Error::NonNegativeWeight);
    }
    // No word longer than T / |largest weight| can pass the threshold.
    let n_max = (q.threshold / -f.max_weight()).floor() as usize;
    if n_max > cap {
        return Err(Error::CapExceeded(n_max, cap));
    }
    let mut total = 0u64;
    let mut word: Vec<SymbolId> = Vec::new();
    oracle_rec(sub, f, q, n_max, &mut word, &mut total);
    Ok(total)
}

fn oracle_rec(
    sub: &Subshift,
    f: &LocallyConstantPotential,
    q: &CountQuery,
    n_max: usize,
    word: &mut Vec<SymbolId>,
    total: &mut u64,
) {
    if !word.is_empty() && oracle_accepts(sub, f, q, word) {
        *total += 1;
    }
    if word.len() == n_max {
        return;
    }
    for b in 0..sub.len() {
        if word.last().is_none_or(|&a| sub.admissible_pair(a, b)) {
            word.push(b);
            oracle_rec(sub, f, q, n_max, word, total);
            word.pop();
        }
    }
}

fn oracle_accepts(
    sub: &Subshift,
    f: &LocallyConstantPotential,
    q: &CountQuery,
    word: &[SymbolId],
) -> bool {
    let t = q.threshold;
    match q.kind {
        CountKind::Plain | CountKind::FixedLength(_) => {
            let tail = q.tail.as_ref().expect("tail-based kind");
            if let CountKind::FixedLength(len) = q.kind {
                if word.len() != len {
                    return false;
                }
            }
            sub.admissible_pair(word[word.len() - 1], tail.first())
                && q.target.contains_word_with_tail(word, tail)
                && f.birkhoff_prefix(word, tail) >= -t
        }
        CountKind::InitialBlock => {
            let tail = q.tail.as_ref().expect("tail-based kind");
            let set = match &q.target {
                Target::Set(s) => s,
                Target::All => return false,
            };
            sub.admissible_pair(word[word.len() - 1], tail.first())
                && set
                    .words()
                    .iter()
                    .any(|u| word.len() > u.len() && word[..u.len()] == *u.symbols())
                && f.birkhoff_prefix(word, tail) >= -t
        }
        CountKind::Periodic | CountKind::PeriodicFixedLength(_) => {
            if let CountKind::PeriodicFixedLength(len) = q.kind {
                if word.len() != len {
                    return false;
                }
            }
            sub.admissible_pair(word[word.len() - 1], word[0])
                && q.target.contains_periodic(word)
                && f.birkhoff_periodic(word) >= -t
        }
    }
}

/// Periodic count with a forced initial block: words tau·w that are periodic
/// words, with the sum over the whole of tau·w on its repetition. The
/// companion of the plain periodic count appearing on the large side of the
/// periodic comparison bounds.
pub fn count_periodic_with_initial_block(
    sub: &Subshift,
    f: &LocallyConstantPotential,
    tau: &Word,
    threshold: f64,
) -> Result<u64> {
    if !f.all_weights_negative() {
        return Err(Error::NonNegativeWeight);
    }
    let k_f = f.holder_data(sub, sub.alpha()).k_f;
    let conts = reference_continuations(sub);
    let mut stack = SumStack::new(f, tau.symbols());
    let mut total = 0u64;
    let tau_len = tau.len();
    let first = tau.symbols()[0];
    enumerate_from_prefix(
        sub,
        None,
        tau.symbols(),
        |w: &[SymbolId]| {
            let core = stack.core_at(w);
            let s_ref = core + overhang(f, w, &conts[w[w.len() - 1]]);
            if s_ref + k_f < -threshold {
                Prune::Subtree
            } else {
                Prune::Keep
            }
        },
        |w: &[SymbolId]| {
            if w.len() > tau_len
                && sub.admissible_pair(w[w.len() - 1], first)
                && f.birkhoff_periodic(w) >= -threshold
            {
                total += 1;
            }
        },
    );
    Ok(total)
}

/// Slack of one comparison inequality: rhs - lhs, nonnegative when it holds.
#[derive(Debug, Clone, Serialize)]
pub struct BoundSlack {
    pub label: String,
    pub lhs: u64,
    pub rhs: u64,
    pub slack: i64,
}

impl BoundSlack {
    fn new(label: &str, lhs: u64, rhs: u64) -> Self {
        BoundSlack {
            label: label.to_string(),
            lhs,
            rhs,
            slack: rhs as i64 - lhs as i64,
        }
    }

    pub fn holds(&self) -> bool {
        self.slack >= 0
    }
}

/// Evaluations of the periodic-versus-plain comparison bounds at one
/// (tau, q, T) triple, all required to be nonnegative. The distortion
/// constant of the potential provides the threshold slack; it vanishes at
/// depth 1 where tails cannot matter.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub k_f: f64,
    pub slacks: Vec<BoundSlack>,
}

impl ComparisonReport {
    pub fn all_hold(&self) -> bool {
        self.slacks.iter().all(|s| s.holds())
    }
}

pub fn verify_comparison_bounds(
    sub: &Subshift,
    f: &LocallyConstantPotential,
    tau: &Word,
    q_len: usize,
    threshold: f64,
) -> Result<ComparisonReport> {
    if q_len == 0 {
        return Err(Error::BadQuery("q must be positive".into()));
    }
    let alpha = sub.alpha();
    let k = tau.len();
    let k_f = f.holder_data(sub, alpha).k_f;
    let tau_last = tau.symbols()[tau.len() - 1];
    let tau_plus = sub
        .smallest_continuation(tau_last)
        .prepend(tau.symbols());
    let target_tau = TargetSet::new(vec![tau.clone()])?;
    let fine_slack = k_f * (-((k + q_len) as f64) * alpha).exp();

    // (i) periodic words of length q in [tau] vs the fixed-length count
    // against the reference point tau tau^+ at threshold T + K.
    let lhs_i = count_raw(
        sub,
        f,
        CountKind::PeriodicFixedLength(q_len),
        None,
        &Target::Set(target_tau.clone()),
        threshold,
    )?;
    let rhs_i = count_raw(
        sub,
        f,
        CountKind::FixedLength(q_len),
        Some(&tau_plus),
        &Target::Set(target_tau.clone()),
        threshold + k_f,
    )?;

    // (ii) initial-block counts over all admissible extensions tau gamma,
    // against T - K e^{-(k+q) alpha}, bounded by the periodic count with
    // initial block tau.
    let mut lhs_ii = 0u64;
    let gammas: Vec<Vec<SymbolId>> = admissible_words(sub, q_len)
        .into_iter()
        .filter(|g| sub.admissible_pair(tau_last, g[0]))
        .collect();
    for gamma in &gammas {
        let mut tg = tau.symbols().to_vec();
        tg.extend_from_slice(gamma);
        let tg_word = sub.word(tg.clone())?;
        let point = sub
            .smallest_continuation(tg[tg.len() - 1])
            .prepend(&tg);
        lhs_ii += count_raw(
            sub,
            f,
            CountKind::InitialBlock,
            Some(&point),
            &Target::Set(TargetSet::new(vec![tg_word])?),
            threshold - fine_slack,
        )?;
    }
    let rhs_ii = count_periodic_with_initial_block(sub, f, tau, threshold)?;

    // (iii) periodic count in [tau] bounded by plain counts in [tau gamma]
    // against T + K e^{-(k+q) alpha}.
    let lhs_iii = count_raw(
        sub,
        f,
        CountKind::Periodic,
        None,
        &Target::Set(target_tau),
        threshold,
    )?;
    let mut rhs_iii = 0u64;
    for gamma in &gammas {
        let mut tg = tau.symbols().to_vec();
        tg.extend_from_slice(gamma);
        let tg_word = sub.word(tg.clone())?;
        let point = sub
            .smallest_continuation(tg[tg.len() - 1])
            .prepend(&tg);
        rhs_iii += count_raw(
            sub,
            f,
            CountKind::Plain,
            Some(&point),
            &Target::Set(TargetSet::new(vec![tg_word])?),
            threshold + fine_slack,
        )?;
    }

    // Whole-space analogue: the full periodic count against per-gamma plain
    // counts plus the short-length remainder routed through the witness set.
    let lhs_whole = count_raw(sub, f, CountKind::Periodic, None, &Target::All, threshold)?;
    let coarse_slack = k_f * (-(q_len as f64) * alpha).exp();
    let mut rhs_whole = 0u64;
    for gamma in admissible_words(sub, q_len) {
        let g_word = sub.word(gamma.clone())?;
        let point = sub
            .smallest_continuation(gamma[gamma.len() - 1])
            .prepend(&gamma);
        rhs_whole += count_raw(
            sub,
            f,
            CountKind::Plain,
            Some(&point),
            &Target::Set(TargetSet::new(vec![g_word])?),
            threshold + coarse_slack,
        )?;
    }
    let rho = sub.smallest_point();
    let mut omega: Vec<Vec<SymbolId>> = (0..sub.len())
        .map(|a| sub.connecting_word(a, rho.first()).to_vec())
        .collect();
    omega.sort();
    omega.dedup();
    for w in &omega {
        let point = rho.prepend(w);
        for i in 1..q_len {
            rhs_whole += count_raw(
                sub,
                f,
                CountKind::FixedLength(i),
                Some(&point),
                &Target::All,
                threshold + k_f,
            )?;
        }
    }

    Ok(ComparisonReport {
        k_f,
        slacks: vec![
            BoundSlack::new("periodic-fixed-length vs reference tail", lhs_i, rhs_i),
            BoundSlack::new("initial-block sum vs periodic with block", lhs_ii, rhs_ii),
            BoundSlack::new("periodic cylinder vs plain cylinder sum", lhs_iii, rhs_iii),
            BoundSlack::new("whole-space periodic vs plain cover", lhs_whole, rhs_whole),
        ],
    })
}

/// Internal dispatch used by the public entry points; thresholds may be
/// nonpositive here (the count is then zero since all sums are negative).
fn count_raw(
    sub: &Subshift,
    f: &LocallyConstantPotential,
    kind: CountKind,
    tail: Option<&TailPoint>,
    target: &Target,
    threshold: f64,
) -> Result<u64> {
    if threshold <= 0.0 {
        return Ok(0);
    }
    let q = CountQuery {
        kind,
        tail: tail.cloned(),
        target: target.clone(),
        threshold,
    };
    let mut total = 0u64;
    for_each_counted(sub, f, &q, 1, &mut |_, _| total += 1)?;
    Ok(total)
}

/// Reference continuation per symbol for the pruning bound.
fn reference_continuations(sub: &Subshift) -> Vec<TailPoint> {
    (0..sub.len()).map(|e| sub.smallest_continuation(e)).collect()
}

/// Incremental Birkhoff sums along the DFS path. `core[l]` holds the sum of
/// all depth windows lying fully inside the current length-l prefix; the
/// overhanging windows are recomputed on demand against whichever
/// continuation the caller needs. Valid in DFS preorder: a prefix is probed
/// before any of its extensions, so the parent slot is always fresh.
struct SumStack<'a> {
    f: &'a LocallyConstantPotential,
    core: Vec<f64>,
}

impl<'a> SumStack<'a> {
    /// Seeds the ancestor slots of a root prefix.
    fn new(f: &'a LocallyConstantPotential, root: &[SymbolId]) -> Self {
        let d = f.depth();
        let mut core = vec![0.0];
        for l in 1..root.len() {
            let add = if l >= d { f.weight(&root[l - d..l]) } else { 0.0 };
            core.push(core[l - 1] + add);
        }
        SumStack { f, core }
    }

    fn core_at(&mut self, w: &[SymbolId]) -> f64 {
        let l = w.len();
        let d = self.f.depth();
        let add = if l >= d { self.f.weight(&w[l - d..]) } else { 0.0 };
        let c = self.core[l - 1] + add;
        if self.core.len() == l {
            self.core.push(c);
        } else {
            self.core[l] = c;
        }
        c
    }
}

/// Sum of the windows overhanging the end of `w`, read against `cont`.
fn overhang(f: &LocallyConstantPotential, w: &[SymbolId], cont: &TailPoint) -> f64 {
    let d = f.depth();
    if d == 1 {
        return 0.0;
    }
    let start = w.len().saturating_sub(d - 1);
    (start..w.len()).map(|k| f.window_at(w, cont, k)).sum()
}

/// Work unit of a partitioned enumeration.
enum JobRoot {
    Symbol(SymbolId),
    WordRoot(Vec<SymbolId>),
}

/// Counted words of one job, with their exact Birkhoff sums.
type JobHits = Vec<(Vec<SymbolId>, f64)>;

/// Runs the query, invoking `visit(word, exact_sum)` for every counted word.
fn for_each_counted(
    sub: &Subshift,
    f: &LocallyConstantPotential,
    q: &CountQuery,
    threads: usize,
    visit: &mut dyn FnMut(&[SymbolId], f64),
) -> Result<()> {
    if !f.all_weights_negative() {
        return Err(Error::NonNegativeWeight);
    }
    match q.kind {
        CountKind::Plain | CountKind::FixedLength(_) | CountKind::InitialBlock => {
            if q.tail.is_none() {
                return Err(Error::BadQuery("this kind requires a tail point".into()));
            }
        }
        CountKind::Periodic | CountKind::PeriodicFixedLength(_) => {
            if q.tail.is_some() {
                return Err(Error::BadQuery(
                    "periodic kinds take no tail point".into(),
                ));
            }
        }
    }
    let jobs: Vec<JobRoot> = match q.kind {
        CountKind::InitialBlock => match &q.target {
            Target::Set(set) => set
                .words()
                .iter()
                .map(|w| JobRoot::WordRoot(w.symbols().to_vec()))
                .collect(),
            Target::All => {
                return Err(Error::BadQuery(
                    "initial-block kind requires an explicit target set".into(),
                ))
            }
        },
        _ => (0..sub.len()).map(JobRoot::Symbol).collect(),
    };
    if threads <= 1 || jobs.len() <= 1 {
        for job in &jobs {
            run_job(sub, f, q, job, visit);
        }
        return Ok(());
    }
    // Deterministic merge: each job's hits are gathered separately and
    // replayed in job order.
    let results: Vec<JobHits> = {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots: Vec<std::sync::Mutex<JobHits>> =
            jobs.iter().map(|_| std::sync::Mutex::new(Vec::new())).collect();
        std::thread::scope(|scope| {
            for _ in 0..threads.min(jobs.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= jobs.len() {
                        break;
                    }
                    let mut hits = Vec::new();
                    run_job(sub, f, q, &jobs[i], &mut |w: &[SymbolId], s: f64| {
                        hits.push((w.to_vec(), s))
                    });
                    *slots[i].lock().unwrap() = hits;
                });
            }
        });
        slots.into_iter().map(|m| m.into_inner().unwrap()).collect()
    };
    for hits in results {
        for (w, s) in hits {
            visit(&w, s);
        }
    }
    Ok(())
}

fn run_job(
    sub: &Subshift,
    f: &LocallyConstantPotential,
    q: &CountQuery,
    job: &JobRoot,
    visit: &mut dyn FnMut(&[SymbolId], f64),
) {
    let k_f = f.holder_data(sub, sub.alpha()).k_f;
    let conts = reference_continuations(sub);
    let t = q.threshold;
    let (root, min_len): (Vec<SymbolId>, usize) = match job {
        JobRoot::Symbol(e) => (vec![*e], 1),
        JobRoot::WordRoot(w) => (w.clone(), w.len() + 1),
    };
    let len_cap = match q.kind {
        CountKind::FixedLength(l) | CountKind::PeriodicFixedLength(l) => Some(l),
        _ => None,
    };
    // The initial-block root already pins the cylinder; other kinds gate
    // prefixes on agreement with some target word.
    let gate_on_target = !matches!(q.kind, CountKind::InitialBlock);
    let mut stack = SumStack::new(f, &root);
    // The prune probe runs on every prefix immediately before it can be
    // visited, so the visit path may reuse the probed core sum.
    let core_cell = std::cell::Cell::new(0.0f64);
    let prune = |w: &[SymbolId]| -> Prune {
        if let Some(cap) = len_cap {
            if w.len() > cap {
                return Prune::Subtree;
            }
        }
        if gate_on_target && !q.target.prefix_compatible(w) {
            return Prune::Subtree;
        }
        let core = stack.core_at(w);
        core_cell.set(core);
        let s_ref = core + overhang(f, w, &conts[w[w.len() - 1]]);
        if s_ref + k_f < -t {
            Prune::Subtree
        } else {
            Prune::Keep
        }
    };
    match q.kind {
        CountKind::Plain | CountKind::FixedLength(_) | CountKind::InitialBlock => {
            let tail = q.tail.as_ref().unwrap();
            enumerate_from_prefix(sub, Some(tail), &root, prune, |w: &[SymbolId]| {
                if w.len() < min_len {
                    return;
                }
                if let Some(cap) = len_cap {
                    if w.len() != cap {
                        return;
                    }
                }
                let member = match q.kind {
                    CountKind::InitialBlock => true,
                    _ => q.target.contains_word_with_tail(w, tail),
                };
                if member {
                    let s = core_cell.get() + overhang(f, w, tail);
                    if s >= -t {
                        visit(w, s);
                    }
                }
            });
        }
        CountKind::Periodic | CountKind::PeriodicFixedLength(_) => {
            enumerate_from_prefix(sub, None, &root, prune, |w: &[SymbolId]| {
                if let Some(cap) = len_cap {
                    if w.len() != cap {
                        return;
                    }
                }
                if sub.admissible_pair(w[w.len() - 1], w[0]) && q.target.contains_periodic(w) {
                    let s = f.birkhoff_periodic(w);
                    if s >= -t {
                        visit(w, s);
                    }
                }
            });
        }
    }
}
