//! Pressure, the Bowen root, and the Gibbs/equilibrium data of a negative
//! locally constant potential.
//!
//! Everything runs on the depth-1 block recoding: there the weighted
//! incidence matrix C(x) with entries C_eb = A_eb exp(x f_e) carries the
//! whole transfer operator restricted to functions constant on 1-cylinders.
//! The eigenmeasure direction is the right Perron vector of C, the
//! eigenfunction direction the left one: the eigenmeasure recursion
//! `m([e w]) = exp(-P) exp(x f_e) m([w])` forces this orientation.

use crate::error::{Error, Result};
use crate::potential::{admissible_words, block_recode, BlockRecoding, LocallyConstantPotential};
use crate::shift::{Subshift, SymbolId, TailPoint, Word};

/// Convergence tolerance of the Perron solver.
const PERRON_TOL: f64 = 1e-13;
const PERRON_MAX_ITERS: usize = 100_000;
/// Bisection stops when the bracket is this narrow (or pressure is dead zero).
const DELTA_BRACKET_TOL: f64 = 1e-14;
const DELTA_PRESSURE_TOL: f64 = 1e-15;
/// Default cylinder scan depth for the observed Gibbs constant.
pub const GIBBS_SCAN_DEPTH: usize = 12;

/// Leading eigenvalue and positive left/right eigenvectors of the weighted
/// incidence matrix at parameter `x` (depth-1 potential).
#[derive(Debug, Clone)]
pub struct PerronData {
    pub lambda: f64,
    /// Right eigenvector, the eigenmeasure direction, normalized to sum 1.
    pub right: Vec<f64>,
    /// Left eigenvector, the eigenfunction direction, normalized so that
    /// sum_e left_e * right_e = 1.
    pub left: Vec<f64>,
}

/// Dense weighted incidence matrix C_eb = A_eb exp(x f_e).
pub fn weighted_matrix(sub: &Subshift, f: &LocallyConstantPotential, x: f64) -> Vec<f64> {
    let n = sub.len();
    let mut c = vec![0.0; n * n];
    for e in 0..n {
        let w = (x * f.weight1(e)).exp();
        for b in 0..n {
            if sub.admissible_pair(e, b) {
                c[e * n + b] = w;
            }
        }
    }
    c
}

/// Power iteration on the shifted matrix C + cI. The shift breaks peripheral
/// ties of periodic (but irreducible) incidence patterns, so the iteration
/// always converges; Collatz-Wielandt bounds certify the eigenvalue.
pub fn perron_data(sub: &Subshift, f: &LocallyConstantPotential, x: f64) -> Result<PerronData> {
    if f.depth() != 1 {
        return Err(Error::BadQuery(
            "perron data requires a depth-1 potential; recode first".into(),
        ));
    }
    let n = sub.len();
    let c = weighted_matrix(sub, f, x);
    let shift = c.iter().copied().fold(0.0f64, f64::max);
    let mul = |v: &[f64], transpose: bool| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for e in 0..n {
            for b in 0..n {
                let w = if transpose { c[b * n + e] } else { c[e * n + b] };
                out[e] += w * v[b];
            }
            out[e] += shift * v[e];
        }
        out
    };
    let solve = |transpose: bool| -> Result<(f64, Vec<f64>)> {
        let mut v = vec![1.0 / n as f64; n];
        for _ in 0..PERRON_MAX_ITERS {
            let w = mul(&v, transpose);
            // Collatz-Wielandt: min and max of (Mv)_e / v_e bracket the root.
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for e in 0..n {
                let r = w[e] / v[e];
                lo = lo.min(r);
                hi = hi.max(r);
            }
            let norm: f64 = w.iter().sum();
            let v_next: Vec<f64> = w.iter().map(|y| y / norm).collect();
            v = v_next;
            if hi - lo <= PERRON_TOL * hi {
                return Ok((0.5 * (lo + hi) - shift, v));
            }
        }
        Err(Error::NoConvergence)
    };
    let (lambda, mut right) = solve(false)?;
    let (_, mut left) = solve(true)?;
    let rsum: f64 = right.iter().sum();
    right.iter_mut().for_each(|v| *v /= rsum);
    let pairing: f64 = left.iter().zip(&right).map(|(u, v)| u * v).sum();
    left.iter_mut().for_each(|u| *u /= pairing);
    Ok(PerronData { lambda, right, left })
}

/// Topological pressure P(x) = log lambda(x), computed after block recoding.
pub fn pressure(sub: &Subshift, f: &LocallyConstantPotential, x: f64) -> Result<f64> {
    if f.depth() == 1 {
        return Ok(perron_data(sub, f, x)?.lambda.ln());
    }
    let rec = block_recode(sub, f)?;
    Ok(perron_data(&rec.subshift, &rec.potential, x)?.lambda.ln())
}

/// Finite-horizon pressure approximants `(1/n) log sum_w exp(x sup_[w] S_n f)`
/// for n = 1..=n_max. The sequence approaches P(x) at 1/n scale; used as a
/// debugging cross-check against the eigenvalue route.
pub fn pressure_finite_horizon(
    sub: &Subshift,
    f: &LocallyConstantPotential,
    x: f64,
    n_max: usize,
) -> Vec<f64> {
    let d = f.depth();
    (1..=n_max)
        .map(|n| {
            let mut acc = 0.0f64;
            let mut max_term = f64::NEG_INFINITY;
            let mut terms = Vec::new();
            for w in admissible_words(sub, n) {
                // sup over the cylinder: maximize every window that overhangs
                // the word's end over admissible completions.
                let mut s = 0.0;
                for k in 0..n {
                    if k + d <= n {
                        s += f.weight(&w[k..k + d]);
                    } else {
                        s += max_window_completion(sub, f, &w[k..]);
                    }
                }
                let t = x * s;
                max_term = max_term.max(t);
                terms.push(t);
            }
            for t in terms {
                acc += (t - max_term).exp();
            }
            (max_term + acc.ln()) / n as f64
        })
        .collect()
}

/// Largest weight of a depth window beginning with `stub`.
fn max_window_completion(sub: &Subshift, f: &LocallyConstantPotential, stub: &[SymbolId]) -> f64 {
    let d = f.depth();
    let mut best = f64::NEG_INFINITY;
    let mut window = stub.to_vec();
    fn rec(
        sub: &Subshift,
        f: &LocallyConstantPotential,
        d: usize,
        window: &mut Vec<SymbolId>,
        best: &mut f64,
    ) {
        if window.len() == d {
            let w = f.weight(window);
            if w > *best {
                *best = w;
            }
            return;
        }
        let last = *window.last().unwrap();
        for b in 0..sub.len() {
            if sub.admissible_pair(last, b) {
                window.push(b);
                rec(sub, f, d, window, best);
                window.pop();
            }
        }
    }
    rec(sub, f, d, &mut window, &mut best);
    best
}

/// The Bowen root: the unique zero of the strictly decreasing pressure of a
/// strictly negative potential. Verifies strong regularity via P(0) > 0.
pub fn find_delta(sub: &Subshift, f: &LocallyConstantPotential) -> Result<f64> {
    if !f.all_weights_negative() {
        return Err(Error::NonNegativeWeight);
    }
    let rec = block_recode(sub, f)?;
    find_delta_recoded(&rec)
}

fn find_delta_recoded(rec: &BlockRecoding) -> Result<f64> {
    let p = |x: f64| -> Result<f64> {
        Ok(perron_data(&rec.subshift, &rec.potential, x)?.lambda.ln())
    };
    let p0 = p(0.0)?;
    if p0 <= 0.0 {
        return Err(Error::NotRegular);
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut iterations = 0;
    while p(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if iterations > 200 {
            return Err(Error::NoConvergence);
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let pm = p(mid)?;
        if pm.abs() <= DELTA_PRESSURE_TOL || hi - lo <= DELTA_BRACKET_TOL {
            return Ok(mid);
        }
        if pm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Gibbs data of x·f on 1-cylinders of the block system: eigenmeasure
/// marginals m, eigenfunction values h with sum h_e m_e = 1, equilibrium
/// marginals mu_e = h_e m_e, and the observed Gibbs constant from a cylinder
/// scan.
#[derive(Debug, Clone)]
pub struct GibbsSlice {
    pub x: f64,
    pub pressure: f64,
    pub m: Vec<f64>,
    pub h: Vec<f64>,
    pub mu: Vec<f64>,
    pub q_observed: f64,
}

pub fn gibbs_slice(
    sub: &Subshift,
    f: &LocallyConstantPotential,
    x: f64,
    scan_depth: usize,
) -> Result<GibbsSlice> {
    if f.depth() != 1 {
        return Err(Error::BadQuery(
            "gibbs data requires a depth-1 potential; recode first".into(),
        ));
    }
    let pd = perron_data(sub, f, x)?;
    let pressure = pd.lambda.ln();
    let m = pd.right.clone();
    let h = pd.left.clone();
    let mu: Vec<f64> = h.iter().zip(&m).map(|(a, b)| a * b).collect();
    let slice = GibbsSlice {
        x,
        pressure,
        m,
        h,
        mu,
        q_observed: 1.0,
    };
    let q_observed = gibbs_scan(sub, f, &slice, scan_depth);
    Ok(GibbsSlice { q_observed, ..slice })
}

/// Max over cylinders up to `depth` of the two-sided Gibbs ratio
/// m([w]) / exp(x S_n f - n P); returns max(ratio, 1/ratio) extremes.
fn gibbs_scan(sub: &Subshift, f: &LocallyConstantPotential, g: &GibbsSlice, depth: usize) -> f64 {
    let mut q: f64 = 1.0;
    let mut word: Vec<SymbolId> = Vec::new();
    // DFS over cylinders carrying (m([w]), S f) incrementally from the left:
    // m([e w']) = exp(-P) exp(x f_e) m([w']) grounded at 1-cylinders, so the
    // mass of [w] is the product along the word times the mass of the last
    // 1-cylinder.
    fn rec(
        sub: &Subshift,
        f: &LocallyConstantPotential,
        g: &GibbsSlice,
        depth: usize,
        word: &mut Vec<SymbolId>,
        q: &mut f64,
    ) {
        let n = word.len();
        if n > 0 {
            let mass = cylinder_mass(f, g, word);
            let s: f64 = word.iter().map(|&e| f.weight1(e)).sum();
            let ratio = mass * (n as f64 * g.pressure - g.x * s).exp();
            *q = q.max(ratio).max(1.0 / ratio);
        }
        if n == depth {
            return;
        }
        for b in 0..sub.len() {
            if word.last().is_none_or(|&a| sub.admissible_pair(a, b)) {
                word.push(b);
                rec(sub, f, g, depth, word, q);
                word.pop();
            }
        }
    }
    rec(sub, f, g, depth, &mut word, &mut q);
    q
}

/// Exact eigenmeasure mass of a cylinder under the depth-1 Markov recursion.
fn cylinder_mass(f: &LocallyConstantPotential, g: &GibbsSlice, word: &[SymbolId]) -> f64 {
    let mut mass = g.m[word[word.len() - 1]];
    for &e in word[..word.len() - 1].iter().rev() {
        mass *= (g.x * f.weight1(e) - g.pressure).exp();
    }
    mass
}

/// Full thermodynamic profile of a negative potential at its Bowen root.
/// The profile owns the block recoding so that cylinder masses, Birkhoff
/// data and the pressure function can be queried in original coordinates.
#[derive(Debug)]
pub struct ThermoProfile {
    recoding: BlockRecoding,
    pub delta: f64,
    pub gibbs: GibbsSlice,
    pub chi: f64,
}

/// Which of the two Gibbs-side measures to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Eigenmeasure,
    Equilibrium,
}

impl ThermoProfile {
    pub fn compute(sub: &Subshift, f: &LocallyConstantPotential) -> Result<Self> {
        Self::compute_with_scan(sub, f, GIBBS_SCAN_DEPTH)
    }

    pub fn compute_with_scan(
        sub: &Subshift,
        f: &LocallyConstantPotential,
        scan_depth: usize,
    ) -> Result<Self> {
        if !f.all_weights_negative() {
            return Err(Error::NonNegativeWeight);
        }
        let recoding = block_recode(sub, f)?;
        let delta = find_delta_recoded(&recoding)?;
        let gibbs = gibbs_slice(&recoding.subshift, &recoding.potential, delta, scan_depth)?;
        let chi = lyapunov(&recoding.potential, &gibbs);
        Ok(ThermoProfile {
            recoding,
            delta,
            gibbs,
            chi,
        })
    }

    pub fn recoding(&self) -> &BlockRecoding {
        &self.recoding
    }

    pub fn pressure(&self, x: f64) -> Result<f64> {
        Ok(perron_data(&self.recoding.subshift, &self.recoding.potential, x)?
            .lambda
            .ln())
    }

    /// Eigenmeasure or equilibrium mass of an original-coordinates cylinder.
    /// Exact: h is constant on block 1-cylinders, so `mu([w]) = h_{w_1} m([w])`
    /// without any distortion correction.
    pub fn cylinder_measure(&self, which: MeasureKind, word: &Word) -> Result<f64> {
        let g = &self.gibbs;
        let f = &self.recoding.potential;
        let blocks = self.recoding.recode_cylinder(word.symbols());
        if blocks.is_empty() {
            return Err(Error::Inadmissible);
        }
        let mut total = 0.0;
        for bw in &blocks {
            let mut mass = cylinder_mass(f, g, bw);
            if which == MeasureKind::Equilibrium {
                mass *= g.h[bw[0]];
            }
            total += mass;
        }
        Ok(total)
    }

    /// Mass of a finite disjoint union of cylinders.
    pub fn target_measure(
        &self,
        which: MeasureKind,
        target: &crate::shift::TargetSet,
    ) -> Result<f64> {
        target
            .words()
            .iter()
            .map(|w| self.cylinder_measure(which, w))
            .sum()
    }

    /// Eigenfunction value at a point: h is constant on block 1-cylinders.
    pub fn eigenfunction_at(&self, point: &TailPoint) -> f64 {
        let bt = self.recoding.recode_tail(point);
        self.gibbs.h[bt.first()]
    }
}

/// Lyapunov exponent chi = -sum_e mu_e f_e of a depth-1 potential.
pub fn lyapunov(f: &LocallyConstantPotential, g: &GibbsSlice) -> f64 {
    g.mu.iter().enumerate().map(|(e, &mu)| -mu * f.weight1(e)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{from_affine_ifs, AffineIfsSpec, AffineMap};
    use std::collections::BTreeMap;

    const LOG2: f64 = std::f64::consts::LN_2;
    const LOG3: f64 = 1.0986122886681098;

    fn cantor13() -> (Subshift, LocallyConstantPotential) {
        let sys = from_affine_ifs(
            &AffineIfsSpec {
                maps: vec![
                    AffineMap { slope: 1.0 / 3.0, offset: 0.0 },
                    AffineMap { slope: 1.0 / 3.0, offset: 2.0 / 3.0 },
                ],
            },
            1.0,
            false,
        )
        .unwrap();
        (sys.subshift, sys.potential)
    }

    fn two_three() -> (Subshift, LocallyConstantPotential) {
        let sys = from_affine_ifs(
            &AffineIfsSpec {
                maps: vec![
                    AffineMap { slope: 0.5, offset: 0.5 },
                    AffineMap { slope: 1.0 / 3.0, offset: 0.0 },
                ],
            },
            1.0,
            false,
        )
        .unwrap();
        (sys.subshift, sys.potential)
    }

    fn golden_half() -> (Subshift, LocallyConstantPotential) {
        let sub = Subshift::new(
            vec!["0".into(), "1".into()],
            vec![vec![1, 1], vec![1, 0]],
            1.0,
        )
        .unwrap();
        let f = LocallyConstantPotential::depth_one(&sub, vec![0.5f64.ln(), 0.5f64.ln()]).unwrap();
        (sub, f)
    }

    #[test]
    fn perron_on_rank_one_two_three() {
        let (sub, f) = two_three();
        let pd = perron_data(&sub, &f, 1.0).unwrap();
        assert!((pd.lambda - 5.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn perron_on_golden_mean_zero_potential() {
        let (sub, _) = golden_half();
        let f = LocallyConstantPotential::depth_one(&sub, vec![0.0, 0.0]).unwrap();
        let pd = perron_data(&sub, &f, 1.0).unwrap();
        let phi = 0.5 * (1.0 + 5.0f64.sqrt());
        assert!((pd.lambda - phi).abs() < 1e-12);
    }

    #[test]
    fn perron_converges_on_periodic_incidence() {
        // Strongly connected two-cycle: spectrum {1, -1}; the shift must
        // still produce the Perron root 1.
        let sub = Subshift::new(
            vec!["a".into(), "b".into()],
            vec![vec![0, 1], vec![1, 0]],
            1.0,
        )
        .unwrap();
        let f = LocallyConstantPotential::depth_one(&sub, vec![0.0, 0.0]).unwrap();
        let pd = perron_data(&sub, &f, 1.0).unwrap();
        assert!((pd.lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pressure_closed_forms() {
        let (sub, f) = two_three();
        // P(x) = log(2^-x + 3^-x).
        for &x in &[0.0, 0.5, 1.0, 2.0] {
            let p = pressure(&sub, &f, x).unwrap();
            let expect = (2.0f64.powf(-x) + 3.0f64.powf(-x)).ln();
            assert!((p - expect).abs() < 1e-12, "x={x}");
        }
        let p1 = pressure(&sub, &f, 1.0).unwrap();
        assert!((p1 - (5.0f64 / 6.0).ln()).abs() < 1e-12);
        assert!((p1 + 0.1823215567939546).abs() < 1e-12);

        // Constant-slope golden mean: P(x) = log phi + x log(1/2).
        let (gsub, gf) = golden_half();
        let phi = 0.5 * (1.0 + 5.0f64.sqrt());
        let p = pressure(&gsub, &gf, 1.0).unwrap();
        assert!((p - (phi.ln() - LOG2)).abs() < 1e-12);
        assert!((p + 0.2119353555003418).abs() < 1e-12);

        // Zero potential on the full 2-shift: P = log 2 at every x.
        let full = Subshift::full_shift(2, 1.0).unwrap();
        let zf = LocallyConstantPotential::depth_one(&full, vec![0.0, 0.0]).unwrap();
        for &x in &[0.0, 1.0, 7.0] {
            assert!((pressure(&full, &zf, x).unwrap() - LOG2).abs() < 1e-13);
        }
    }

    #[test]
    fn finite_horizon_pressure_approaches_eigenvalue_route() {
        let (sub, f) = two_three();
        let p = pressure(&sub, &f, 1.0).unwrap();
        let seq = pressure_finite_horizon(&sub, &f, 1.0, 12);
        for (i, a) in seq.iter().enumerate() {
            let n = (i + 1) as f64;
            assert!((a - p).abs() <= 3.0 / n, "n={} a={} p={}", i + 1, a, p);
            // Subadditivity puts the finite-horizon values above the limit.
            assert!(*a >= p - 1e-9);
        }
    }

    #[test]
    fn core_types_are_shareable_across_threads() {
        fn assert_sync_send<T: Sync + Send>() {}
        assert_sync_send::<Subshift>();
        assert_sync_send::<LocallyConstantPotential>();
        assert_sync_send::<crate::shift::TailPoint>();
        assert_sync_send::<crate::shift::TargetSet>();
        assert_sync_send::<ThermoProfile>();
    }

    #[test]
    fn delta_of_cantor_is_log2_over_log3() {
        let (sub, f) = cantor13();
        let d = find_delta(&sub, &f).unwrap();
        assert!((d - LOG2 / LOG3).abs() < 1e-12);
    }

    #[test]
    fn delta_of_two_three_matches_bisection_oracle() {
        let (sub, f) = two_three();
        let d = find_delta(&sub, &f).unwrap();
        // Independent oracle on the closed-form pressure.
        let (mut lo, mut hi) = (0.0f64, 2.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 2.0f64.powf(-mid) + 3.0f64.powf(-mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!((d - oracle).abs() < 1e-12, "delta {d} oracle {oracle}");
        assert!((d - 0.7878849110).abs() < 1e-9);
    }

    #[test]
    fn nonnegative_weight_rejected_by_delta() {
        let full = Subshift::full_shift(2, 1.0).unwrap();
        let f = LocallyConstantPotential::depth_one(&full, vec![-1.0, 0.5]).unwrap();
        assert!(matches!(find_delta(&full, &f), Err(Error::NonNegativeWeight)));
    }

    #[test]
    fn degenerate_single_symbol_system_is_not_regular() {
        // One self-looping symbol has zero entropy: P(0) = 0, no root.
        let sub = Subshift::new(vec!["a".into()], vec![vec![1]], 1.0).unwrap();
        let f = LocallyConstantPotential::depth_one(&sub, vec![-1.0]).unwrap();
        assert!(matches!(find_delta(&sub, &f), Err(Error::NotRegular)));
    }

    #[test]
    fn gibbs_profile_two_three_at_delta() {
        let (sub, f) = two_three();
        let prof = ThermoProfile::compute(&sub, &f).unwrap();
        let d = prof.delta;
        let m0 = 2.0f64.powf(-d);
        let m1 = 3.0f64.powf(-d);
        assert!((prof.gibbs.m[0] - m0).abs() < 1e-12);
        assert!((prof.gibbs.m[1] - m1).abs() < 1e-12);
        assert!((prof.gibbs.h[0] - 1.0).abs() < 1e-12);
        assert!((prof.gibbs.h[1] - 1.0).abs() < 1e-12);
        assert!((prof.gibbs.q_observed - 1.0).abs() < 1e-12);
        // Lyapunov exponent in closed form.
        let chi = m0 * LOG2 + m1 * LOG3;
        assert!((prof.chi - chi).abs() < 1e-12);
    }

    #[test]
    fn gibbs_profile_cantor_is_uniform() {
        let (sub, f) = cantor13();
        let prof = ThermoProfile::compute(&sub, &f).unwrap();
        assert!((prof.gibbs.m[0] - 0.5).abs() < 1e-13);
        assert!((prof.gibbs.m[1] - 0.5).abs() < 1e-13);
        assert!((prof.gibbs.q_observed - 1.0).abs() < 1e-12);
        assert!((prof.chi - LOG3).abs() < 1e-12);
        // m of any fixed-length word is 2^-n.
        let w = sub.word_from_str("0110").unwrap();
        let mass = prof.cylinder_measure(MeasureKind::Eigenmeasure, &w).unwrap();
        assert!((mass - 0.0625).abs() < 1e-13);
    }

    #[test]
    fn cylinder_measure_recursion_and_additivity() {
        let (sub, f) = two_three();
        let prof = ThermoProfile::compute(&sub, &f).unwrap();
        let d = prof.delta;
        let w01 = sub.word_from_str("01").unwrap();
        let expect = 2.0f64.powf(-d) * 3.0f64.powf(-d);
        let got = prof.cylinder_measure(MeasureKind::Eigenmeasure, &w01).unwrap();
        assert!((got - expect).abs() < 1e-12);
        // Additivity over one-symbol extensions.
        for base in ["0", "1", "01", "10"] {
            let w = sub.word_from_str(base).unwrap();
            let total = prof.cylinder_measure(MeasureKind::Eigenmeasure, &w).unwrap();
            let mut parts = 0.0;
            for e in ["0", "1"] {
                let ext = sub.word_from_str(&format!("{base}{e}")).unwrap();
                parts += prof.cylinder_measure(MeasureKind::Eigenmeasure, &ext).unwrap();
            }
            assert!((total - parts).abs() < 1e-12);
        }
    }

    #[test]
    fn equilibrium_is_stationary_on_one_cylinders() {
        let (sub, f) = golden_half();
        let prof = ThermoProfile::compute(&sub, &f).unwrap();
        // Mass flowing into b equals mu_b.
        for b in 0..2 {
            let mut inflow = 0.0;
            for e in 0..2 {
                if sub.admissible_pair(e, b) {
                    let w = sub.word(vec![e, b]).unwrap();
                    inflow += prof.cylinder_measure(MeasureKind::Equilibrium, &w).unwrap();
                }
            }
            assert!((inflow - prof.gibbs.mu[b]).abs() < 1e-12);
        }
    }

    #[test]
    fn lyapunov_matches_pressure_slope() {
        for (sub, f) in [two_three(), cantor13(), golden_half()] {
            let prof = ThermoProfile::compute(&sub, &f).unwrap();
            let h = 1e-6;
            let dp = (prof.pressure(prof.delta + h).unwrap()
                - prof.pressure(prof.delta - h).unwrap())
                / (2.0 * h);
            let rel = (dp + prof.chi).abs() / prof.chi;
            assert!(rel < 1e-6, "relative gap {rel}");
        }
    }

    #[test]
    fn lyapunov_scales_linearly_at_fixed_measure() {
        let (sub, f) = two_three();
        let prof = ThermoProfile::compute(&sub, &f).unwrap();
        let g3 = f.scaled(3.0);
        let rec = block_recode(&sub, &g3).unwrap();
        let integral = lyapunov(&rec.potential, &prof.gibbs);
        assert!((integral - 3.0 * prof.chi).abs() < 1e-12);
    }

    #[test]
    fn pressure_strictly_decreasing_and_convex_for_negative_weights() {
        let (sub, f) = two_three();
        let xs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
        let ps: Vec<f64> = xs.iter().map(|&x| pressure(&sub, &f, x).unwrap()).collect();
        for w in ps.windows(2) {
            assert!(w[1] < w[0]);
        }
        for w in ps.windows(3) {
            assert!(w[2] - w[1] >= w[1] - w[0] - 1e-12);
        }
    }

    #[test]
    fn recoding_leaves_delta_and_chi_fixed() {
        let sub = Subshift::full_shift(2, 1.0).unwrap();
        let mut w = BTreeMap::new();
        w.insert(vec![0, 0], -1.0);
        w.insert(vec![0, 1], -2.0);
        w.insert(vec![1, 0], -3.0);
        w.insert(vec![1, 1], -4.0);
        let f = LocallyConstantPotential::from_table(&sub, 2, &w).unwrap();
        let direct = ThermoProfile::compute(&sub, &f).unwrap();
        let rec = block_recode(&sub, &f).unwrap();
        let recoded = ThermoProfile::compute(&rec.subshift, &rec.potential).unwrap();
        assert!((direct.delta - recoded.delta).abs() < 1e-12);
        assert!((direct.chi - recoded.chi).abs() < 1e-12);
        let p_direct = pressure(&sub, &f, 0.7).unwrap();
        let p_recoded = pressure(&rec.subshift, &rec.potential, 0.7).unwrap();
        assert!((p_direct - p_recoded).abs() < 1e-12);
        // Mass of an original 1-cylinder equals the mass of its block cover.
        for e in 0..2usize {
            let orig = sub.word(vec![e]).unwrap();
            let m_direct = direct
                .cylinder_measure(MeasureKind::Eigenmeasure, &orig)
                .unwrap();
            let mut m_cover = 0.0;
            for b in 0..rec.subshift.len() {
                if rec.block_word(b)[0] == e {
                    let bw = rec.subshift.word(vec![b]).unwrap();
                    m_cover += recoded
                        .cylinder_measure(MeasureKind::Eigenmeasure, &bw)
                        .unwrap();
                }
            }
            assert!((m_direct - m_cover).abs() < 1e-12);
        }
    }
}
