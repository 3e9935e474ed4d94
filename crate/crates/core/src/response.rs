//! Player 2's candidate response `x(θ)` and the relative scores `G`, `H`.
//!
//! `(G, H)` is the fixed point of the affine recursion
//! `X(θ) = A_ε X(Φθ) − v(1,1) + (1 − γZ) b_ε`, with `G(½) = H(½) = ½ − v − γZ`.

use serde::Serialize;

use crate::belief::{GameParameter, Side};
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::numeric::Real;

/// Distance to ½ below which an orbit point is treated as hitting ½.
pub const PREIMAGE_TOL: f64 = 1e-13;

/// Offset used for one-sided evaluations at preimages of ½.
pub const ONE_SIDED_OFFSET: f64 = 1e-9;

/// Allowed increase of `G` between consecutive sorted sample points.
pub const MONOTONICITY_SLACK: f64 = 1e-9;

/// Allowed mismatch in `G(θ) = H(1 − θ)`.
pub const SYMMETRY_SLACK: f64 = 1e-9;

/// Orbit depth of `p` and `1 − p` included in every check.
pub const ORBIT_SAMPLE_DEPTH: usize = 60;

const MAX_SERIES_TERMS: usize = 1_000_000;

/// `A₀, A₁, b₀, b₁` and the operator norm bound `α`.
#[derive(Debug, Clone, Serialize)]
pub struct ResponseMatrices<R> {
    pub a0: Mat2<R>,
    pub a1: Mat2<R>,
    pub b0: Vec2<R>,
    pub b1: Vec2<R>,
    pub contraction_factor: f64,
}

impl<R: Real> ResponseMatrices<R> {
    pub fn new(g: &GameParameter<R>) -> Self {
        let (p, q, gm) = (g.p.clone(), g.q(), g.gamma.clone());
        let a0 = Mat2::new(gm.clone(), -gm.clone(), q.clone(), p.clone());
        let a1 = Mat2::new(p, q, -gm.clone(), gm);
        let contraction_factor = a0.spectral_norm().max(a1.spectral_norm());
        ResponseMatrices {
            a0,
            a1,
            b0: Vec2::new(g.one(), g.zero()),
            b1: Vec2::new(g.zero(), g.one()),
            contraction_factor,
        }
    }

    pub fn a(&self, side: Side) -> &Mat2<R> {
        match side {
            Side::Below => &self.a0,
            Side::Above => &self.a1,
        }
    }

    pub fn b(&self, side: Side) -> &Vec2<R> {
        match side {
            Side::Below => &self.b0,
            Side::Above => &self.b1,
        }
    }

    /// Errors unless `α < 1`.
    pub fn require_contraction(&self, g: &GameParameter<R>) -> Result<f64> {
        if self.contraction_factor < 1.0 {
            Ok(self.contraction_factor)
        } else {
            Err(Error::NoContraction {
                p: g.p_f64(),
                factor: self.contraction_factor,
            })
        }
    }

    /// `max_η |b_η + A_η(1,1) − (1,1)|`, zero in exact arithmetic.
    pub fn common_fixed_point_residual(&self, g: &GameParameter<R>) -> f64 {
        let ones = Vec2::splat(g.one());
        [Side::Below, Side::Above]
            .iter()
            .map(|&s| self.b(s).add(&self.a(s).apply(&ones)).sub(&ones).norm_f64())
            .fold(0.0, f64::max)
    }
}

/// `max(‖A₀‖, ‖A₁‖)` in the spectral norm.
pub fn contraction_factor<R: Real>(g: &GameParameter<R>) -> f64 {
    ResponseMatrices::new(g).contraction_factor
}

/// `w = (I + A_{ε₀} + A_{ε₀}A_{ε₁} + …)(1,1)` along the orbit of `p`,
/// truncated once `‖A_{ε₀}⋯A_{ε_{n−1}}‖·√2/(1 − α) < tol`.
pub fn compute_w<R: Real>(g: &GameParameter<R>, tol: f64) -> Result<Vec2<R>> {
    let mats = ResponseMatrices::new(g);
    let alpha = mats.require_contraction(g)?;
    let ones = Vec2::splat(g.one());
    let mut m = Mat2::identity(&g.p);
    let mut w = Vec2::splat(g.zero());
    let mut theta = g.p.clone();
    for n in 0..MAX_SERIES_TERMS {
        let bound = m.spectral_norm() * std::f64::consts::SQRT_2 / (1.0 - alpha);
        if n > 0 && bound < tol {
            return Ok(w);
        }
        w = w.add(&m.apply(&ones));
        m = m.mul(mats.a(g.side(&theta)));
        theta = g.step(&theta);
    }
    Err(Error::NonConvergence {
        what: "w series",
        iterations: MAX_SERIES_TERMS,
        residual: m.spectral_norm(),
    })
}

/// `v = 1/(p w₁ + (1 − p) w₂)` and `Z = (w₁ − w₂) v / 2`.
pub fn solve_vz<R: Real>(g: &GameParameter<R>, tol: f64) -> Result<(R, R)> {
    let w = compute_w(g, tol)?;
    Ok(vz_from_w(g, &w))
}

fn vz_from_w<R: Real>(g: &GameParameter<R>, w: &Vec2<R>) -> (R, R) {
    let v = g.one() / (g.p.clone() * w.x.clone() + g.q() * w.y.clone());
    let z = (w.x.clone() - w.y.clone()) * v.clone() * g.half();
    (v, z)
}

/// Everything needed to evaluate `G`, `H` and `x`.
#[derive(Debug, Clone)]
pub struct ResponseContext<R: Real> {
    pub g: GameParameter<R>,
    pub mats: ResponseMatrices<R>,
    pub v: R,
    pub z: R,
    pub tol: f64,
}

impl<R: Real> ResponseContext<R> {
    pub fn new(g: &GameParameter<R>, v: R, z: R, tol: f64) -> Result<Self> {
        let mats = ResponseMatrices::new(g);
        mats.require_contraction(g)?;
        Ok(ResponseContext {
            g: g.clone(),
            mats,
            v,
            z,
            tol,
        })
    }

    /// `½ − v − γZ`, the common value of `G` and `H` at ½.
    pub fn value_at_half(&self) -> R {
        self.g.half() - self.v.clone() - self.g.gamma.clone() * self.z.clone()
    }

    /// `(G(θ), H(θ))`, unrolling the affine recursion until the remaining
    /// contribution is below `tol`. Stops early if the orbit hits ½.
    pub fn eval_gh(&self, theta: &R) -> Result<Vec2<R>> {
        let g = &self.g;
        if !(*theta >= g.zero() && *theta <= g.one()) {
            return Err(Error::Domain {
                what: "belief",
                value: theta.as_f64(),
                domain: "[0, 1]",
            });
        }
        let half = g.half();
        let at_half = Vec2::splat(self.value_at_half());
        let c = g.one() - g.gamma.clone() * self.z.clone();
        let alpha = self.mats.contraction_factor;
        let xmax = (self.v.as_f64().abs() * std::f64::consts::SQRT_2 + c.as_f64().abs()) / (1.0 - alpha);
        let neg_v = Vec2::splat(-self.v.clone());
        let mut acc = Vec2::splat(g.zero());
        let mut m = Mat2::identity(&g.p);
        let mut th = theta.clone();
        for n in 0..MAX_SERIES_TERMS {
            if th == half {
                return Ok(acc.add(&m.apply(&at_half)));
            }
            if n > 0 && m.spectral_norm() * xmax < self.tol {
                return Ok(acc);
            }
            let side = g.side(&th);
            let inc = neg_v.add(&self.mats.b(side).scale(&c));
            acc = acc.add(&m.apply(&inc));
            m = m.mul(self.mats.a(side));
            th = g.step(&th);
        }
        Err(Error::NonConvergence {
            what: "G/H series",
            iterations: MAX_SERIES_TERMS,
            residual: m.spectral_norm() * xmax,
        })
    }

    /// Probability that Player 2 plays Left at belief `θ`: `G + v + γZ`
    /// above ½, `1 − (H + v + γZ)` below, ½ at ½. This case split is the
    /// one forced by the Bellman equations at matched beliefs.
    pub fn eval_x(&self, theta: &R) -> Result<R> {
        let g = &self.g;
        let half = g.half();
        if *theta == half {
            return Ok(half);
        }
        let gh = self.eval_gh(theta)?;
        let shift = self.v.clone() + g.gamma.clone() * self.z.clone();
        Ok(if *theta > half {
            gh.x + shift
        } else {
            g.one() - (gh.y + shift)
        })
    }
}

/// Solution of the response equations for one `p`.
#[derive(Debug, Clone, Serialize)]
pub struct ResponseSolution<R> {
    pub p: R,
    pub v: R,
    pub z: R,
    pub w: Vec2<R>,
    pub contraction_factor: f64,
    /// `(θ, x(θ))` for `θ = p_n` and `1 − p_n`, `n ≤` [`ORBIT_SAMPLE_DEPTH`].
    pub x_table: Vec<(R, R)>,
    /// First `n` with `|p_n − ½| <` [`PREIMAGE_TOL`], if any.
    pub preimage_of_half: Option<usize>,
    pub inequality_report: Option<InequalityReport>,
}

/// Solves for `w`, `v`, `Z` and tabulates `x` on the orbits of `p` and `1 − p`.
pub fn solve<R: Real>(g: &GameParameter<R>, tol: f64) -> Result<ResponseSolution<R>> {
    let w = compute_w(g, tol)?;
    let (v, z) = vz_from_w(g, &w);
    let ctx = ResponseContext::new(g, v.clone(), z.clone(), tol)?;
    let orbit = g.orbit_cached(&g.p, ORBIT_SAMPLE_DEPTH)?;
    let preimage_of_half = find_preimage(g, &orbit.points[..=ORBIT_SAMPLE_DEPTH]);
    let mut x_table = Vec::with_capacity(2 * (ORBIT_SAMPLE_DEPTH + 1));
    for t in &orbit.points[..=ORBIT_SAMPLE_DEPTH] {
        let s = g.one() - t.clone();
        x_table.push((t.clone(), ctx.eval_x(t)?));
        x_table.push((s.clone(), ctx.eval_x(&s)?));
    }
    if preimage_of_half.is_some() {
        log::warn!(
            "p = {} is a preimage of 1/2; G is averaged at the orbit points and one-sided limits are checked",
            g.p_f64()
        );
    }
    Ok(ResponseSolution {
        p: g.p.clone(),
        v,
        z,
        w,
        contraction_factor: ctx.mats.contraction_factor,
        x_table,
        preimage_of_half,
        inequality_report: None,
    })
}

/// [`solve`] followed by [`verify_inequalities`].
pub fn solve_and_verify<R: Real>(g: &GameParameter<R>, tol: f64, grid: usize) -> Result<ResponseSolution<R>> {
    let mut sol = solve(g, tol)?;
    sol.inequality_report = Some(verify_inequalities(g, &sol, grid, tol)?);
    Ok(sol)
}

fn find_preimage<R: Real>(g: &GameParameter<R>, points: &[R]) -> Option<usize> {
    let half = g.half();
    points
        .iter()
        .position(|t| (t.clone() - half.clone()).abs().as_f64() < PREIMAGE_TOL)
}

/// One inequality's worst margin. Non-negative margins pass.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub margin: f64,
    /// Belief at which the worst margin occurs.
    pub at: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub checks: Vec<InequalityCheck>,
    pub points: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub preimage_of_half: Option<usize>,
    pub passed: bool,
}

impl InequalityReport {
    pub fn check(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Worst {
    name: &'static str,
    margin: f64,
    at: Option<f64>,
}

impl Worst {
    fn new(name: &'static str) -> Self {
        Worst {
            name,
            margin: f64::INFINITY,
            at: None,
        }
    }

    fn see(&mut self, margin: f64, at: f64) {
        if margin < self.margin || self.at.is_none() {
            self.margin = margin;
            self.at = Some(at);
        }
    }

    fn finish(self) -> InequalityCheck {
        InequalityCheck {
            name: self.name.to_string(),
            passed: self.margin >= 0.0,
            margin: if self.at.is_none() { 0.0 } else { self.margin },
            at: self.at,
        }
    }
}

/// Checks `G ≥ γZ − v` below ½, `−γZ − v ≤ G ≤ 1 − γZ − v` above ½,
/// `4γZ ≤ 1`, and that `G` does not increase, on the orbits of `p` and
/// `1 − p` plus a uniform grid of `grid` points on `[1 − p, p]`.
pub fn verify_inequalities<R: Real>(
    g: &GameParameter<R>,
    sol: &ResponseSolution<R>,
    grid: usize,
    tol: f64,
) -> Result<InequalityReport> {
    let ctx = ResponseContext::new(g, sol.v.clone(), sol.z.clone(), tol)?;
    let half = g.half();
    let orbit = g.orbit_cached(&g.p, ORBIT_SAMPLE_DEPTH)?;
    let mut pts: Vec<R> = Vec::new();
    for t in &orbit.points[..=ORBIT_SAMPLE_DEPTH] {
        pts.push(t.clone());
        pts.push(g.one() - t.clone());
    }
    let q = g.q();
    let width = g.gamma.clone();
    for i in 0..grid {
        let s = if grid > 1 { g.c(i as i64, grid as i64 - 1) } else { g.half() };
        pts.push(q.clone() + width.clone() * s);
    }
    if let Some(m) = sol.preimage_of_half {
        let eps = R::f64_like(ONE_SIDED_OFFSET, &g.p);
        for t in orbit.points[..=m].iter() {
            for base in [t.clone(), g.one() - t.clone()] {
                for cand in [base.clone() - eps.clone(), base + eps.clone()] {
                    if cand >= g.zero() && cand <= g.one() {
                        pts.push(cand);
                    }
                }
            }
        }
    }
    pts.retain(|t| *t != half);
    pts.sort_by(|a, b| a.partial_cmp(b).expect("beliefs are ordered"));
    pts.dedup();

    let gz = g.gamma.clone() * sol.z.clone();
    let v = sol.v.clone();
    let lower_below = gz.clone() - v.clone();
    let lower_above = -gz.clone() - v.clone();
    let upper_above = g.one() - gz.clone() - v.clone();

    let mut below = Worst::new("G >= gamma*Z - v (theta < 1/2)");
    let mut above_lo = Worst::new("G >= -gamma*Z - v (theta > 1/2)");
    let mut above_hi = Worst::new("G <= 1 - gamma*Z - v (theta > 1/2)");
    let mut mono = Worst::new("G non-increasing");
    let mut sym = Worst::new("G(theta) = H(1 - theta)");
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut prev: Option<(f64, f64)> = None;
    for t in &pts {
        let gh = ctx.eval_gh(t)?;
        let gv = gh.x.clone();
        let tf = t.as_f64();
        if *t < half {
            below.see((gv.clone() - lower_below.clone()).as_f64(), tf);
        } else {
            above_lo.see((gv.clone() - lower_above.clone()).as_f64(), tf);
            above_hi.see((upper_above.clone() - gv.clone()).as_f64(), tf);
        }
        let mirror = ctx.eval_gh(&(g.one() - t.clone()))?;
        sym.see(SYMMETRY_SLACK - (gv.clone() - mirror.y).abs().as_f64(), tf);
        let x = ctx.eval_x(t)?.as_f64();
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        let gf = gv.as_f64();
        if let Some((_, pg)) = prev {
            mono.see(MONOTONICITY_SLACK - (gf - pg), tf);
        }
        prev = Some((tf, gf));
    }
    let mut gz_check = Worst::new("4*gamma*Z <= 1");
    gz_check.see((g.one() - g.c(4, 1) * gz).as_f64(), half.as_f64());

    let checks: Vec<InequalityCheck> = [below, above_lo, above_hi, gz_check, mono, sym]
        .into_iter()
        .map(Worst::finish)
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(InequalityReport {
        checks,
        points: pts.len(),
        x_min,
        x_max,
        preimage_of_half: sol.preimage_of_half,
        passed,
    })
}

/// Finite table on which the operator `𝓛` acts: uniform grid points and
/// their forward orbits. Entries at the end of a chain map outside the
/// table and read the zero function there.
#[derive(Debug, Clone)]
pub struct OperatorTable<R> {
    pub thetas: Vec<R>,
    pub next: Vec<Option<usize>>,
    pub sides: Vec<Side>,
    /// Indices of the original grid points.
    pub roots: Vec<usize>,
}

impl<R: Real> OperatorTable<R> {
    pub fn new(g: &GameParameter<R>, grid: &[R], depth: usize) -> Self {
        let mut thetas = Vec::with_capacity(grid.len() * (depth + 1));
        let mut next = Vec::with_capacity(thetas.capacity());
        let mut sides = Vec::with_capacity(thetas.capacity());
        let mut roots = Vec::with_capacity(grid.len());
        for t0 in grid {
            roots.push(thetas.len());
            let mut t = t0.clone();
            for k in 0..=depth {
                let idx = thetas.len();
                sides.push(g.side(&t));
                thetas.push(t.clone());
                next.push((k < depth).then_some(idx + 1));
                t = g.step(&t);
            }
        }
        OperatorTable {
            thetas,
            next,
            sides,
            roots,
        }
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// `𝓛X(θ) = A_{ε(θ)} X(Φθ) − v(1,1) + (1 − γZ) b_{ε(θ)}`.
    pub fn apply(&self, ctx: &ResponseContext<R>, x: &[Vec2<R>]) -> Vec<Vec2<R>> {
        let g = &ctx.g;
        let c = g.one() - g.gamma.clone() * ctx.z.clone();
        let neg_v = Vec2::splat(-ctx.v.clone());
        (0..self.len())
            .map(|i| {
                let s = self.sides[i];
                let base = neg_v.add(&ctx.mats.b(s).scale(&c));
                match self.next[i] {
                    Some(j) => ctx.mats.a(s).apply(&x[j]).add(&base),
                    None => base,
                }
            })
            .collect()
    }
}

/// Result of iterating `𝓛` from the zero function.
#[derive(Debug, Clone)]
pub struct FixedPoint<R> {
    pub table: OperatorTable<R>,
    pub values: Vec<Vec2<R>>,
    pub iterations: usize,
    pub last_change: f64,
}

impl<R: Real> FixedPoint<R> {
    /// `(θ, G, H)` at the grid points.
    pub fn at_roots(&self) -> Vec<(R, Vec2<R>)> {
        self.table
            .roots
            .iter()
            .map(|&i| (self.table.thetas[i].clone(), self.values[i].clone()))
            .collect()
    }
}

/// Iterates `𝓛` on an orbit-closed table over `grid` until the sup-norm
/// change drops below `tol`.
pub fn fixed_point_l<R: Real>(ctx: &ResponseContext<R>, grid: &[R], max_iter: usize) -> Result<FixedPoint<R>> {
    let alpha = ctx.mats.contraction_factor;
    // deep enough that the neglected tail is below tol
    let c = (ctx.v.as_f64().abs() * std::f64::consts::SQRT_2 + 2.0) / (1.0 - alpha);
    let depth = ((ctx.tol * (1.0 - alpha) / c).ln() / alpha.ln()).ceil().max(1.0) as usize + 2;
    let table = OperatorTable::new(&ctx.g, grid, depth);
    let mut x = vec![Vec2::splat(ctx.g.zero()); table.len()];
    for it in 1..=max_iter {
        let nx = table.apply(ctx, &x);
        let change = sup_diff(&nx, &x);
        x = nx;
        if change < ctx.tol {
            return Ok(FixedPoint {
                table,
                values: x,
                iterations: it,
                last_change: change,
            });
        }
        if it == max_iter {
            return Err(Error::NonConvergence {
                what: "operator iteration",
                iterations: it,
                residual: change,
            });
        }
    }
    Err(Error::Invalid("operator iteration needs max_iter >= 1".into()))
}

/// `sup_i |X_i − Y_i|`.
pub fn sup_diff<R: Real>(x: &[Vec2<R>], y: &[Vec2<R>]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| a.sub(b).norm_f64())
        .fold(0.0, f64::max)
}

/// Largest entry error of `[[1,0],[1,1]] A_εᵀ [[1,0],[−1,1]] − U_ε` over
/// `ε ∈ {0, 1}`.
pub fn conjugation_error<R: Real>(g: &GameParameter<R>) -> f64 {
    let mats = ResponseMatrices::new(g);
    let (one, zero) = (g.one(), g.zero());
    let l = Mat2::new(one.clone(), zero.clone(), one.clone(), one.clone());
    let r = Mat2::new(one.clone(), zero, -one.clone(), one);
    [Side::Below, Side::Above]
        .iter()
        .map(|&s| l.mul(&mats.a(s).transpose()).mul(&r).max_abs_diff(&g.u_matrix(s)))
        .fold(0.0, f64::max)
}

/// The conjugation identity holds exactly in exact arithmetic and to
/// `1e-14` otherwise.
pub fn conjugation_check<R: Real>(g: &GameParameter<R>) -> bool {
    let e = conjugation_error(g);
    if R::EXACT {
        e == 0.0
    } else {
        e < 1e-14
    }
}

/// Cocycle evaluation along preimages of ½.
#[derive(Debug, Clone, Serialize)]
pub struct CocycleReport {
    pub depth: usize,
    pub preimages: usize,
    /// Largest `|A_{ε_n}⋯A_{ε_1}(−½,½) − ∏γ/max(θ_i,1−θ_i)·(θ_n − 1, θ_n)|`.
    pub max_identity_error: f64,
    pub first_nonpositive: bool,
    pub second_nonnegative: bool,
}

impl CocycleReport {
    pub fn coherent(&self) -> bool {
        self.first_nonpositive && self.second_nonnegative
    }
}

/// Propagates the jump `(−½, ½)` at ½ back along every preimage of ½ of
/// order at most `depth` and compares with the closed product form.
pub fn jump_cocycle<R: Real>(g: &GameParameter<R>, depth: usize) -> CocycleReport {
    let mats = ResponseMatrices::new(g);
    let half = g.half();
    let start = Vec2::new(-half.clone(), half.clone());
    // (θ_n, A_{ε_n}⋯A_{ε_1}(−½,½), ∏ factor)
    let mut level = vec![(half.clone(), start, g.one())];
    let mut report = CocycleReport {
        depth,
        preimages: 0,
        max_identity_error: 0.0,
        first_nonpositive: true,
        second_nonnegative: true,
    };
    for _ in 0..depth {
        let mut next = Vec::new();
        for (t, jump, fac) in &level {
            for s in g.phi_preimages(t) {
                let side = g.side(&s);
                let j = mats.a(side).apply(jump);
                let u = R::max_of(s.clone(), g.one() - s.clone());
                let f = fac.clone() * g.gamma.clone() / u;
                let closed = Vec2::new(s.clone() - g.one(), s.clone()).scale(&f);
                report.max_identity_error = report.max_identity_error.max(j.sub(&closed).norm_f64());
                report.first_nonpositive &= j.x <= g.zero();
                report.second_nonnegative &= j.y >= g.zero();
                report.preimages += 1;
                next.push((s, j, f));
            }
        }
        level = next;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{BigFloat, Precision, Rational};
    use crate::sigma_star::value_ladder;
    use proptest::prelude::*;

    fn pf(p: f64) -> GameParameter<f64> {
        GameParameter::from_f64(p, Precision::Float64).unwrap()
    }

    fn ctx(p: f64) -> ResponseContext<f64> {
        let g = pf(p);
        let (v, z) = solve_vz(&g, 1e-14).unwrap();
        ResponseContext::new(&g, v, z, 1e-13).unwrap()
    }

    #[test]
    fn common_fixed_point_exact() {
        for p in ["1/2", "0.6", "0.7", "3/4", "0.78"] {
            let g = GameParameter::<Rational>::parse(p, Precision::Rational).unwrap();
            assert_eq!(ResponseMatrices::new(&g).common_fixed_point_residual(&g), 0.0);
        }
    }

    #[test]
    fn contraction_threshold() {
        // independent oracle: largest singular value by power iteration on AᵀA
        let oracle = |p: f64| {
            let gm = 2.0 * p - 1.0;
            let a = nalgebra::Matrix2::new(gm, -gm, 1.0 - p, p);
            a.singular_values().max()
        };
        for i in 0..=287 {
            let p = 0.5 + i as f64 * 0.001;
            let f = contraction_factor(&pf(p));
            assert!((f - oracle(p)).abs() < 1e-12);
            assert!(f < 1.0, "p={p}");
        }
        assert!(contraction_factor(&pf(0.79)) >= 1.0);
        assert!(matches!(compute_w(&pf(0.8), 1e-10), Err(Error::NoContraction { .. })));
        let g = pf(0.77);
        let m = ResponseMatrices::new(&g);
        assert!((m.a0.spectral_norm() - m.a1.spectral_norm()).abs() < 1e-15);
    }

    #[test]
    fn w_at_half_and_seventy() {
        let g = pf(0.5);
        let w = compute_w(&g, 1e-13).unwrap();
        assert!((0.5 * w.x + 0.5 * w.y - 2.0).abs() < 1e-12);
        let g = pf(0.7);
        let w = compute_w(&g, 1e-13).unwrap();
        let l = value_ladder(&g, 1e-14).unwrap();
        assert!((0.7 * w.x + 0.3 * w.y - 1.0 / l.v).abs() < 1e-9);
        assert!(w.x > 0.0 && w.y > 0.0);
        // w = (1,1) + A_{ε₀} w(Φp)
        let mats = ResponseMatrices::new(&g);
        let mut shifted = Vec2::splat(0.0);
        let mut m = Mat2::identity(&1.0);
        let mut t = g.step(&0.7);
        for _ in 0..400 {
            shifted = shifted.add(&m.apply(&Vec2::splat(1.0)));
            m = m.mul(mats.a(g.side(&t)));
            t = g.step(&t);
        }
        let rhs = Vec2::splat(1.0).add(&mats.a1.apply(&shifted));
        assert!(rhs.sub(&w).norm_f64() < 1e-10);
    }

    #[test]
    fn vz_identities() {
        let g = pf(0.7);
        let w = compute_w(&g, 1e-14).unwrap();
        let (v, z) = vz_from_w(&g, &w);
        assert!(((2.0 * 0.7 - 2.0) * z + v * w.x - 1.0).abs() < 1e-10);
        assert!((2.0 * 0.7 * z + v * w.y - 1.0).abs() < 1e-10);
        let l = value_ladder(&g, 1e-14).unwrap();
        assert!((v - l.v).abs() < 1e-9);
        for p in [0.67, 0.69, 0.70, 0.71, 0.719] {
            let g = pf(p);
            let (_, z) = solve_vz(&g, 1e-13).unwrap();
            assert!(z > 0.0 && 4.0 * g.gamma * z < 1.0, "p={p}");
        }
    }

    #[test]
    fn gh_examples() {
        let c = ctx(0.7);
        let gp = c.eval_gh(&0.7).unwrap();
        assert!((gp.x + c.z).abs() < 1e-10);
        assert!((gp.y - c.z).abs() < 1e-10);
        let g1 = c.eval_gh(&1.0).unwrap();
        assert!((g1.x - (-c.g.gamma * c.z - c.v)).abs() < 1e-10);
        let gh = c.eval_gh(&0.5).unwrap();
        assert_eq!(gh.x, 0.5 - c.v - c.g.gamma * c.z);
        assert_eq!(gh.x, gh.y);
        assert!(c.eval_gh(&1.5).is_err());
    }

    #[test]
    fn x_symmetry_and_half() {
        let c = ctx(0.7);
        assert_eq!(c.eval_x(&0.5).unwrap(), 0.5);
        for i in 0..=200 {
            let t = 0.3 + 0.4 * i as f64 / 200.0;
            if (t - 0.5).abs() < 1e-12 {
                continue;
            }
            let s = c.eval_x(&t).unwrap() + c.eval_x(&(1.0 - t)).unwrap();
            assert!((s - 1.0).abs() < 1e-10, "t={t}");
        }
        let x = c.eval_x(&0.7).unwrap();
        assert!((0.0..=1.0).contains(&x));
    }

    #[test]
    fn solution_fields() {
        let g = pf(0.7);
        let s = solve_and_verify(&g, 1e-13, 500).unwrap();
        assert!((s.v - 1.0 / (0.7 * s.w.x + 0.3 * s.w.y)).abs() < 1e-15);
        assert!((s.z - (s.w.x - s.w.y) * s.v / 2.0).abs() < 1e-15);
        assert_eq!(s.x_table.len(), 2 * (ORBIT_SAMPLE_DEPTH + 1));
        assert!(s.x_table.iter().all(|(_, x)| (0.0..=1.0).contains(x)));
        assert!(s.preimage_of_half.is_none());
        let r = s.inequality_report.unwrap();
        assert!(r.passed, "{r:?}");
        let m = r.check("4*gamma*Z <= 1").unwrap();
        assert!((m.margin - (1.0 - 4.0 * g.gamma * s.z)).abs() < 1e-15);
    }

    #[test]
    fn report_completes_outside_certified_range() {
        let g = pf(0.78);
        match solve_and_verify(&g, 1e-10, 200) {
            Ok(s) => assert!(s.inequality_report.is_some()),
            Err(e) => assert!(matches!(e, Error::NoContraction { .. })),
        }
    }

    #[test]
    fn preimage_flag_at_two_thirds() {
        // Φ(⅔) = ½
        let g = GameParameter::<f64>::parse("2/3", Precision::Float64).unwrap();
        let s = solve_and_verify(&g, 1e-12, 200).unwrap();
        assert_eq!(s.preimage_of_half, Some(1));
        let r = s.inequality_report.unwrap();
        assert_eq!(r.preimage_of_half, Some(1));
    }

    #[test]
    fn fixed_point_matches_series() {
        let c = ctx(0.7);
        let grid: Vec<f64> = (0..1000).map(|i| 0.3 + 0.4 * (i as f64 + 0.5) / 1000.0).collect();
        let c9 = ResponseContext { tol: 1e-9, ..c.clone() };
        let fp = fixed_point_l(&c9, &grid, 10_000).unwrap();
        assert!(fp.last_change < 1e-9);
        for (t, x) in fp.at_roots() {
            let direct = c.eval_gh(&t).unwrap();
            assert!(x.sub(&direct).norm_f64() < 1e-8, "t={t}");
        }
        assert!(matches!(fixed_point_l(&c9, &grid, 3), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn operator_linearity() {
        // with v = 0 and 1 − γZ = 0 the operator is X ↦ A_ε X∘Φ
        let g = pf(0.7);
        let z = 1.0 / g.gamma;
        let c = ResponseContext::new(&g, 0.0, z, 1e-9).unwrap();
        let table = OperatorTable::new(&g, &[0.3, 0.6], 1);
        let out = table.apply(&c, &vec![Vec2::splat(1.0); table.len()]);
        for i in [0, 2] {
            let expect = c.mats.a(table.sides[i]).apply(&Vec2::splat(1.0));
            assert!(out[i].sub(&expect).norm_f64() < 1e-15);
        }
        assert!(out[1].norm_f64() < 1e-15);
    }

    #[test]
    fn conjugation_identity() {
        for p in ["0.7", "1/2", "3/4", "0.73275300915"] {
            let g = GameParameter::<Rational>::parse(p, Precision::Rational).unwrap();
            assert!(conjugation_check(&g), "p={p}");
        }
        for i in 0..50 {
            assert!(conjugation_check(&pf(0.5 + 0.0099 * i as f64)));
        }
        let b = GameParameter::<BigFloat>::parse("0.71", Precision::bigfloat()).unwrap();
        assert!(conjugation_check(&b));
    }

    #[test]
    fn cocycle_signs() {
        for p in [0.68, 0.7, 0.715, 0.73] {
            let r = jump_cocycle(&pf(p), 12);
            assert!(r.preimages > 12);
            assert!(r.max_identity_error < 1e-12, "p={p} {r:?}");
            assert!(r.coherent());
        }
    }

    #[test]
    fn bigfloat_and_float_agree() {
        let g = GameParameter::<BigFloat>::parse("0.71", Precision::bigfloat()).unwrap();
        let (v, z) = solve_vz(&g, 1e-30).unwrap();
        let (vf, zf) = solve_vz(&pf(0.71), 1e-14).unwrap();
        assert!((v.as_f64() - vf).abs() < 1e-12);
        assert!((z.as_f64() - zf).abs() < 1e-12);
    }

    #[test]
    fn route_equivalence_on_grid() {
        for i in 0..100 {
            let p = 2.0 / 3.0 + (0.719 - 2.0 / 3.0) * i as f64 / 99.0;
            let g = pf(p);
            let (v, _) = solve_vz(&g, 1e-13).unwrap();
            let l = value_ladder(&g, 1e-14).unwrap();
            assert!((v - l.v).abs() < 1e-8, "p={p}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn operator_contracts(seed in 0u64..1000, p in 0.55f64..0.78) {
            use rand::{Rng, SeedableRng};
            let g = pf(p);
            let (v, z) = solve_vz(&g, 1e-12).unwrap();
            let c = ResponseContext::new(&g, v, z, 1e-9).unwrap();
            let grid: Vec<f64> = (0..20).map(|i| 1.0 - p + (2.0 * p - 1.0) * i as f64 / 19.0).collect();
            let table = OperatorTable::new(&g, &grid, 6);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut rand_table = || -> Vec<Vec2<f64>> {
                (0..table.len()).map(|_| Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))).collect()
            };
            let (x, y) = (rand_table(), rand_table());
            let lhs = sup_diff(&table.apply(&c, &x), &table.apply(&c, &y));
            prop_assert!(lhs <= c.mats.contraction_factor * sup_diff(&x, &y) + 1e-12);
        }
    }
}
