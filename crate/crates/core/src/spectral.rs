//! The lattice / D-generic dichotomy of a depth-1 potential, the complex
//! transfer-matrix scan along the critical line, and the Tauberian constants
//! feeding the counting bounds.
//!
//! A potential is lattice when the periodic Birkhoff sums all sit inside one
//! arithmetic progression delta_gap * Z; then the weighted matrix at
//! delta + iy admits eigenvalue 1 exactly at y in (2 pi / delta_gap) Z.
//! Otherwise the system is D-generic and the critical line is crossing-free
//! away from y = 0.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::LocallyConstantPotential;
use crate::shift::{Subshift, SymbolId};

/// Absolute-tolerance floor of the real gcd, relative to the largest sum.
pub const GCD_DEFAULT_TOL: f64 = 1e-9;
/// |lambda - 1| below this at a refined minimum flags a crossing.
pub const CROSSING_TOL: f64 = 1e-6;
const COMPLEX_TOL: f64 = 1e-11;
const COMPLEX_MAX_ITERS: usize = 50_000;
const REFINE_WIDTH: f64 = 1e-11;
/// Guard against pathological simple-cycle blowups on large alphabets.
const MAX_CYCLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    DGeneric,
    Lattice,
}

/// Outcome of the algebraic lattice test.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralVerdict {
    pub kind: VerdictKind,
    /// Lattice generator; `None` when D-generic.
    pub gap: Option<f64>,
    /// Smallest y > 0 with eigenvalue 1 on the critical line; infinite when
    /// D-generic.
    pub y_1: f64,
    /// y_1 / (2 pi).
    pub y_0: f64,
    /// Periodic Birkhoff values used as evidence.
    pub cycle_sums: Vec<f64>,
    /// Resolution below which rational dependence is indistinguishable.
    pub resolution: f64,
}

/// Collects Birkhoff sums over a generating set of cycles and runs a real
/// gcd over them. Every closed walk decomposes into simple cycles, so the
/// additive group of periodic Birkhoff sums is generated by the simple-cycle
/// sums; one composite per overlapping pair is kept as evidence.
pub fn d_generic_test(
    sub: &Subshift,
    f: &LocallyConstantPotential,
    tol: f64,
) -> Result<SpectralVerdict> {
    if f.depth() != 1 {
        return Err(Error::BadQuery(
            "lattice test requires a depth-1 potential; recode first".into(),
        ));
    }
    let cycles = simple_cycles(sub)?;
    let mut sums: Vec<f64> = cycles
        .iter()
        .map(|c| c.iter().map(|&e| f.weight1(e)).sum())
        .collect();
    // One composite per overlapping pair, spliced at a shared symbol. The
    // sums add, so these never change the gcd; they witness closure of the
    // evidence set under composition.
    'outer: for i in 0..cycles.len() {
        for j in (i + 1)..cycles.len() {
            if sums.len() >= cycles.len() + 8 {
                break 'outer;
            }
            if cycles[i].iter().any(|e| cycles[j].contains(e)) {
                sums.push(sums[i] + sums[j]);
            }
        }
    }
    let scale = sums.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let resolution = tol * scale;
    // The Euclid floor sits at f64 noise, well below the decision
    // resolution: a gcd that merely grazes the resolution is rational
    // dependence lost in rounding, not a lattice gap.
    let noise_floor = scale * 1e-13;
    let mut g = 0.0f64;
    for &s in &sums {
        g = real_gcd(g, s.abs(), noise_floor);
        if g < resolution {
            break;
        }
    }
    let lattice = g >= resolution
        && sums.iter().all(|&s| {
            let k = (s / g).round();
            (s - k * g).abs() <= resolution.max(1e-12)
        });
    if lattice {
        let y_1 = 2.0 * std::f64::consts::PI / g;
        Ok(SpectralVerdict {
            kind: VerdictKind::Lattice,
            gap: Some(g),
            y_1,
            y_0: 1.0 / g,
            cycle_sums: sums,
            resolution,
        })
    } else {
        Ok(SpectralVerdict {
            kind: VerdictKind::DGeneric,
            gap: None,
            y_1: f64::INFINITY,
            y_0: f64::INFINITY,
            cycle_sums: sums,
            resolution,
        })
    }
}

/// Euclid on reals with symmetric remainders; stops once the remainder falls
/// below the resolution floor.
fn real_gcd(a: f64, b: f64, floor: f64) -> f64 {
    let (mut a, mut b) = (a.abs().max(b.abs()), a.abs().min(b.abs()));
    while b > floor.max(f64::MIN_POSITIVE) {
        let r = (a - b * (a / b).round()).abs();
        a = b;
        b = r;
    }
    a
}

/// All simple cycles of the incidence digraph, as symbol sequences.
fn simple_cycles(sub: &Subshift) -> Result<Vec<Vec<SymbolId>>> {
    let n = sub.len();
    let mut cycles = Vec::new();
    let mut path: Vec<SymbolId> = Vec::new();
    let mut on_path = vec![false; n];
    // Rooted DFS; cycles are canonicalized by their smallest symbol being the
    // root, so each simple cycle is found exactly once.
    fn rec(
        sub: &Subshift,
        root: SymbolId,
        path: &mut Vec<SymbolId>,
        on_path: &mut Vec<bool>,
        cycles: &mut Vec<Vec<SymbolId>>,
    ) -> Result<()> {
        let last = *path.last().unwrap();
        for b in root..sub.len() {
            if !sub.admissible_pair(last, b) {
                continue;
            }
            if b == root {
                if cycles.len() >= MAX_CYCLES {
                    return Err(Error::BadQuery(
                        "too many simple cycles; alphabet too large for the lattice test".into(),
                    ));
                }
                cycles.push(path.clone());
            } else if !on_path[b] {
                path.push(b);
                on_path[b] = true;
                rec(sub, root, path, on_path, cycles)?;
                on_path[b] = false;
                path.pop();
            }
        }
        Ok(())
    }
    for root in 0..n {
        path.push(root);
        on_path[root] = true;
        rec(sub, root, &mut path, &mut on_path, &mut cycles)?;
        on_path[root] = false;
        path.pop();
    }
    Ok(cycles)
}

/// One grid point of the critical-line scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub y: f64,
    /// Leading eigenvalue of the complex weighted matrix, when the power
    /// iteration converged.
    pub lambda: Option<(f64, f64)>,
    pub modulus: f64,
    /// |lambda - 1| < crossing tolerance at this grid point.
    pub flagged: bool,
}

/// Scan result: per-point data, refined crossing locations and the largest
/// observed modulus.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalLineScan {
    pub delta: f64,
    pub points: Vec<ScanPoint>,
    pub crossings: Vec<f64>,
    pub max_modulus: f64,
    pub failures: usize,
}

/// Complex weighted matrix C_s with entries A_eb exp(s f_e).
fn complex_matrix(sub: &Subshift, f: &LocallyConstantPotential, s: Complex64) -> Vec<Complex64> {
    let n = sub.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n * n];
    for e in 0..n {
        let w = (s * f.weight1(e)).exp();
        for b in 0..n {
            if sub.admissible_pair(e, b) {
                c[e * n + b] = w;
            }
        }
    }
    c
}

/// Leading eigenvalue by complex power iteration with random restarts.
pub fn leading_eigenvalue(
    sub: &Subshift,
    f: &LocallyConstantPotential,
    s: Complex64,
    seed: u64,
) -> Result<Complex64> {
    let n = sub.len();
    let c = complex_matrix(sub, f, s);
    let mul = |v: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for e in 0..n {
            for b in 0..n {
                out[e] += c[e * n + b] * v[b];
            }
        }
        out
    };
    let mut rng = SplitMix64::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    // Peripheral eigenvalues of the complex matrix need not be strictly
    // dominant; restart from fresh random starts on stagnation.
    for _restart in 0..3 {
        let mut v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.next_unit(), rng.next_unit()))
            .collect();
        let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nv = norm(&v);
        v.iter_mut().for_each(|z| *z /= nv);
        for _ in 0..COMPLEX_MAX_ITERS {
            let w = mul(&v);
            let nw = norm(&w);
            if nw == 0.0 {
                break;
            }
            // Rayleigh quotient against the current unit vector.
            let lambda: Complex64 = v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
            let residual: f64 = w
                .iter()
                .zip(&v)
                .map(|(wi, vi)| (wi - lambda * vi).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if residual <= COMPLEX_TOL * lambda.norm().max(1e-300) {
                return Ok(lambda);
            }
            v = w.into_iter().map(|z| z / nw).collect();
        }
    }
    Err(Error::NoConvergence)
}

/// Scans the critical line delta + iy on a uniform grid over (0, y_max],
/// refines every local minimum of |lambda - 1| and flags crossings.
/// The leading-eigenvalue modulus is asserted to stay at or below 1 within
/// 1e-9 since the pressure vanishes at delta.
pub fn critical_line_scan(
    sub: &Subshift,
    f: &LocallyConstantPotential,
    delta: f64,
    y_max: f64,
    n_points: usize,
    seed: u64,
) -> Result<CriticalLineScan> {
    if f.depth() != 1 {
        return Err(Error::BadQuery(
            "critical-line scan requires a depth-1 potential; recode first".into(),
        ));
    }
    if n_points < 3 || y_max.is_nan() || y_max <= 0.0 {
        return Err(Error::BadQuery("scan needs y_max > 0 and at least 3 points".into()));
    }
    let step = y_max / n_points as f64;
    let eig = |y: f64| leading_eigenvalue(sub, f, Complex64::new(delta, y), seed);
    let mut points = Vec::with_capacity(n_points);
    let mut failures = 0usize;
    let mut max_modulus = 0.0f64;
    for i in 1..=n_points {
        let y = step * i as f64;
        match eig(y) {
            Ok(lambda) => {
                let modulus = lambda.norm();
                max_modulus = max_modulus.max(modulus);
                points.push(ScanPoint {
                    y,
                    lambda: Some((lambda.re, lambda.im)),
                    modulus,
                    flagged: (lambda - 1.0).norm() < CROSSING_TOL,
                });
            }
            Err(_) => {
                failures += 1;
                points.push(ScanPoint {
                    y,
                    lambda: None,
                    modulus: f64::NAN,
                    flagged: false,
                });
            }
        }
    }
    // Distance to 1 on the grid; refine every interior local minimum.
    let dist: Vec<f64> = points
        .iter()
        .map(|p| match p.lambda {
            Some((re, im)) => Complex64::new(re - 1.0, im).norm(),
            None => f64::INFINITY,
        })
        .collect();
    let mut crossings = Vec::new();
    for i in 0..points.len() {
        let left = if i == 0 { f64::INFINITY } else { dist[i - 1] };
        let right = if i + 1 == points.len() { f64::INFINITY } else { dist[i + 1] };
        if dist[i].is_finite() && dist[i] <= left && dist[i] <= right {
            let lo = if i == 0 { step * 0.5 } else { points[i - 1].y };
            let hi = if i + 1 == points.len() { points[i].y } else { points[i + 1].y };
            if let Some((y_star, d_star)) = refine_minimum(&eig, lo, hi) {
                if let Ok(l) = eig(y_star) {
                    max_modulus = max_modulus.max(l.norm());
                }
                // A minimum pinned to the left edge of the first bracket is
                // the shoulder of the trivial eigenvalue-1 point at y = 0,
                // not a crossing in (0, y_max].
                let zero_shoulder = i == 0 && y_star <= lo + 100.0 * REFINE_WIDTH;
                if d_star < CROSSING_TOL && !zero_shoulder {
                    crossings.push(y_star);
                }
            }
        }
    }
    crossings.dedup_by(|a, b| (*a - *b).abs() < 1e-8);
    Ok(CriticalLineScan {
        delta,
        points,
        crossings,
        max_modulus,
        failures,
    })
}

/// Golden-section minimization of |lambda(delta + iy) - 1| on [lo, hi].
fn refine_minimum<F>(eig: &F, mut lo: f64, mut hi: f64) -> Option<(f64, f64)>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let g = |y: f64| -> Option<f64> { eig(y).ok().map(|l| (l - 1.0).norm()) };
    let inv_phi = 0.6180339887498949;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = g(a)?;
    let mut fb = g(b)?;
    while hi - lo > REFINE_WIDTH {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = g(a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = g(b)?;
        }
    }
    let y = 0.5 * (lo + hi);
    Some((y, g(y)?))
}

/// The constants of the counting sandwich. In the lattice case they come by
/// direct substitution of y_0; in the D-generic case the strip is unbounded
/// and the constants collapse to their limits.
#[derive(Debug, Clone, Serialize)]
pub struct TauberianConstants {
    pub c_delta: f64,
    pub c_1: f64,
    pub c_2: f64,
    /// Additive width of the upper bound, y_0^{-1}; zero when D-generic.
    pub upper_addend: f64,
}

pub fn tauberian_constants(delta: f64, verdict: &SpectralVerdict) -> TauberianConstants {
    match verdict.kind {
        VerdictKind::Lattice => {
            let inv_y0 = 1.0 / verdict.y_0;
            let c_delta = inv_y0 / ((delta * inv_y0).exp() - 1.0);
            let c_1 = inv_y0 / (inv_y0.exp() - 1.0);
            TauberianConstants {
                c_delta,
                c_1,
                c_2: c_1 * inv_y0.exp(),
                upper_addend: inv_y0,
            }
        }
        VerdictKind::DGeneric => TauberianConstants {
            c_delta: 1.0 / delta,
            c_1: 1.0,
            c_2: 1.0,
            upper_addend: 0.0,
        },
    }
}

/// Deterministic xorshift-style generator for the random restarts; seeded
/// from the environment by the command-line layer.
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1).
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }
}
