//! The perturbed strategy `σ_{k₀,ε}`: Player 1 follows `σ*` except at the
//! rung-`k₀` beliefs `θ̃ = Φ^{k₀}(1 − p)` and `1 − θ̃`, where both states
//! shade their play by `ε`.
//!
//! The long-run gain is read off the invariant measure of the ladder chain
//! with two extra branches rooted at `θ̃_ε` and `1 − p_ε`.

use serde::Serialize;

use crate::belief::GameParameter;
use crate::error::{Error, Result};
use crate::numeric::{parse_exact, Precision, Rational, Real};
use crate::sigma_star::HiddenState;

/// Orbit points closer than this to `θ̃` or `1 − θ̃` trigger a warning.
pub const DISJOINTNESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct PerturbationConfig {
    pub k0: usize,
    pub epsilon: Rational,
    /// Truncation `N` of the `w` sums.
    pub terms: usize,
    pub precision: Option<Precision>,
}

impl PerturbationConfig {
    /// `epsilon` is parsed exactly from its decimal text.
    pub fn new(k0: usize, epsilon: &str, terms: Option<usize>, precision: Option<Precision>) -> Result<Self> {
        let eps = parse_exact(epsilon)?;
        let zero = Rational::ZERO;
        let one = Rational::ONE;
        if eps < zero || eps >= one {
            return Err(Error::Domain {
                what: "epsilon",
                value: epsilon.parse().unwrap_or(f64::NAN),
                domain: "[0, 1)",
            });
        }
        let terms = terms.unwrap_or_else(|| default_terms(precision.unwrap_or_default()));
        if terms == 0 {
            return Err(Error::Invalid("terms must be at least 1".into()));
        }
        Ok(PerturbationConfig {
            k0,
            epsilon: eps,
            terms,
            precision,
        })
    }

    pub fn epsilon_like<R: Real>(&self, g: &GameParameter<R>) -> R {
        R::from_rational(&self.epsilon, g.precision.bits())
    }
}

/// 50 terms in `f64`, 200 otherwise.
pub fn default_terms(precision: Precision) -> usize {
    match precision {
        Precision::Float64 => 50,
        _ => 200,
    }
}

/// `θ̃`, the belief reached after `T` at `θ̃`, and `p_ε`.
#[derive(Debug, Clone, Serialize)]
pub struct PerturbedBeliefs<R> {
    pub theta_tilde: R,
    pub theta_tilde_eps: R,
    pub p_eps: R,
}

impl<R> PerturbedBeliefs<R> {
    pub fn map<S>(&self, f: impl Fn(&R) -> S) -> PerturbedBeliefs<S> {
        PerturbedBeliefs {
            theta_tilde: f(&self.theta_tilde),
            theta_tilde_eps: f(&self.theta_tilde_eps),
            p_eps: f(&self.p_eps),
        }
    }
}

pub fn perturbed_beliefs<R: Real>(g: &GameParameter<R>, k0: usize, eps: &R) -> Result<PerturbedBeliefs<R>> {
    let theta = g.orbit_cached(&g.q(), k0)?.points[k0].clone();
    if theta >= g.half() {
        return Err(Error::InvalidK0 {
            k0,
            theta: theta.as_f64(),
        });
    }
    let one = g.one();
    let t = theta.clone();
    // arranged so that ε = 0 reproduces f_T(θ̃) bit for bit
    let theta_tilde_eps = (g.p.clone() * (one.clone() - eps.clone()) * t.clone()
        + g.q() * (one.clone() - t.clone() - t.clone() + eps.clone() * t.clone()))
        / (one.clone() - t);
    let p_eps = g.p.clone() * (one - eps.clone()) + g.q() * eps.clone();
    Ok(PerturbedBeliefs {
        theta_tilde: theta,
        theta_tilde_eps,
        p_eps,
    })
}

/// `1 − p_ε` written as `(1 − p)(1 − ε) + pε`, exact at ε = 0.
fn one_minus_p_eps<R: Real>(g: &GameParameter<R>, eps: &R) -> R {
    g.q() * (g.one() - eps.clone()) + g.p.clone() * eps.clone()
}

/// Partial sum of `w(θ) = Σ_n Π_{k<n} Θ_k(θ)` with `Θ_k(θ) = max(Φᵏθ, 1 − Φᵏθ)`.
#[derive(Debug, Clone, Serialize)]
pub struct LadderWeight<R> {
    pub w: R,
    /// Bound on the omitted terms, `(Π_{k<N} Θ_k)·p/(1 − p)`.
    pub tail_bound: R,
    pub terms: usize,
}

/// Sums the terms `n = 0..=terms`.
pub fn ladder_weight<R: Real>(g: &GameParameter<R>, theta: &R, terms: usize) -> Result<LadderWeight<R>> {
    if terms == 0 {
        return Err(Error::Invalid("terms must be at least 1".into()));
    }
    let q = g.q();
    if q <= g.zero() {
        return Err(Error::Divergence { p: g.p_f64() });
    }
    let mut x = theta.clone();
    let mut prod = g.one();
    let mut sum = g.one();
    for _ in 0..terms {
        prod = prod * R::max_of(x.clone(), g.one() - x.clone());
        sum = sum + prod.clone();
        x = g.step(&x);
    }
    Ok(LadderWeight {
        w: sum,
        tail_bound: prod * g.p.clone() / q,
        terms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Better,
    NotBetter,
    Inconclusive,
}

/// The four ladder weights entering the comparison.
#[derive(Debug, Clone, Serialize)]
pub struct WValues<R> {
    pub phi_theta_tilde: R,
    pub theta_tilde_eps: R,
    pub one_minus_p_eps: R,
    pub one_minus_p: R,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationReport<R> {
    pub p: R,
    pub k0: usize,
    pub epsilon: R,
    pub terms: usize,
    pub theta_tilde: R,
    pub theta_tilde_eps: R,
    pub p_eps: R,
    pub w_values: WValues<R>,
    /// `(1 − θ̃)(w(Φθ̃) − w(θ̃_ε))`.
    pub lemma_lhs: R,
    /// `θ̃(w(1 − p_ε) − (1 − ε)w(1 − p))`.
    pub lemma_rhs: R,
    pub margin: R,
    /// Truncation budget for `margin`.
    pub tail_bound: R,
    pub v_star: R,
    pub v_perturbed: R,
    pub value_difference: R,
    /// Truncation budget for `value_difference`.
    pub value_tail_bound: R,
    /// `Π₀` minus the total return flow into the base.
    pub balance_residual: R,
    /// `Σ Π − 1` over the truncated chain.
    pub normalization_residual: R,
    pub verdict: Verdict,
    /// Which of the two values is larger, independent of `verdict`.
    pub perturbed_is_larger: bool,
    pub warnings: Vec<String>,
}

impl<R> PerturbationReport<R> {
    pub fn map<S>(&self, f: impl Fn(&R) -> S) -> PerturbationReport<S> {
        PerturbationReport {
            p: f(&self.p),
            k0: self.k0,
            epsilon: f(&self.epsilon),
            terms: self.terms,
            theta_tilde: f(&self.theta_tilde),
            theta_tilde_eps: f(&self.theta_tilde_eps),
            p_eps: f(&self.p_eps),
            w_values: WValues {
                phi_theta_tilde: f(&self.w_values.phi_theta_tilde),
                theta_tilde_eps: f(&self.w_values.theta_tilde_eps),
                one_minus_p_eps: f(&self.w_values.one_minus_p_eps),
                one_minus_p: f(&self.w_values.one_minus_p),
            },
            lemma_lhs: f(&self.lemma_lhs),
            lemma_rhs: f(&self.lemma_rhs),
            margin: f(&self.margin),
            tail_bound: f(&self.tail_bound),
            v_star: f(&self.v_star),
            v_perturbed: f(&self.v_perturbed),
            value_difference: f(&self.value_difference),
            value_tail_bound: f(&self.value_tail_bound),
            balance_residual: f(&self.balance_residual),
            normalization_residual: f(&self.normalization_residual),
            verdict: self.verdict,
            perturbed_is_larger: self.perturbed_is_larger,
            warnings: self.warnings.clone(),
        }
    }
}

/// Evaluates the comparison between `σ_{k₀,ε}` and `σ*` together with both values.
pub fn lemma_margin<R: Real>(g: &GameParameter<R>, cfg: &PerturbationConfig) -> Result<PerturbationReport<R>> {
    let eps = cfg.epsilon_like(g);
    let n = cfg.terms;
    if n == 0 {
        return Err(Error::Invalid("terms must be at least 1".into()));
    }
    let b = perturbed_beliefs(g, cfg.k0, &eps)?;
    let one = g.one();
    let t = b.theta_tilde.clone();
    let base = g.q();
    let low_eps = one_minus_p_eps(g, &eps);

    let w_phi = ladder_weight(g, &g.step(&t), n)?;
    let w_te = ladder_weight(g, &b.theta_tilde_eps, n)?;
    let w_pe = ladder_weight(g, &low_eps, n)?;
    let w_base = ladder_weight(g, &base, n)?;

    let lhs = (one.clone() - t.clone()) * (w_phi.w.clone() - w_te.w.clone());
    let rhs = t.clone() * (w_pe.w.clone() - (one.clone() - eps.clone()) * w_base.w.clone());
    let margin = lhs.clone() - rhs.clone();
    let tail_bound = (one.clone() - t.clone()) * (w_phi.tail_bound.clone() + w_te.tail_bound.clone())
        + t.clone() * (w_pe.tail_bound.clone() + (one.clone() - eps.clone()) * w_base.tail_bound.clone());

    let chain = Chain::new(g, cfg.k0, &t, &eps, &w_te, &w_pe)?;
    let v_star = one.clone() / w_base.w.clone();
    let value_difference = chain.value.clone() - v_star.clone();
    // both values are reciprocals of truncated sums, so each is overestimated
    // by at most v²·(omitted mass)
    let value_tail_bound = chain.value.clone() * chain.value.clone() * chain.q.clone() * tail_bound.clone()
        + v_star.clone() * v_star.clone() * w_base.tail_bound.clone();

    let verdict = if margin.abs() <= tail_bound {
        Verdict::Inconclusive
    } else if margin > g.zero() {
        Verdict::Better
    } else {
        Verdict::NotBetter
    };
    let mut warnings = disjointness_warnings(g, &t, &[&b.theta_tilde_eps, &low_eps], n);
    if verdict == Verdict::Inconclusive {
        warnings.push("margin within the truncation budget; raise terms or precision".into());
    }
    if g.precision == Precision::Float64 && margin.abs().as_f64() < 1e-10 {
        warnings.push("margin below 1e-10 in f64; use a big-float precision".into());
    }
    let perturbed_is_larger = value_difference > g.zero();
    if (margin > g.zero()) != perturbed_is_larger && value_difference.abs() > value_tail_bound {
        warnings.push("sign of the value difference disagrees with the margin".into());
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(PerturbationReport {
        p: g.p.clone(),
        k0: cfg.k0,
        epsilon: eps,
        terms: n,
        theta_tilde: t,
        theta_tilde_eps: b.theta_tilde_eps,
        p_eps: b.p_eps,
        w_values: WValues {
            phi_theta_tilde: w_phi.w,
            theta_tilde_eps: w_te.w,
            one_minus_p_eps: w_pe.w,
            one_minus_p: w_base.w,
        },
        lemma_lhs: lhs,
        lemma_rhs: rhs,
        margin,
        tail_bound,
        v_star,
        v_perturbed: chain.value,
        value_difference,
        value_tail_bound,
        balance_residual: chain.balance_residual,
        normalization_residual: chain.normalization_residual,
        verdict,
        perturbed_is_larger,
        warnings,
    })
}

/// `v_p(σ_{k₀,ε})`.
pub fn perturbed_value<R: Real>(g: &GameParameter<R>, cfg: &PerturbationConfig) -> Result<R> {
    let eps = cfg.epsilon_like(g);
    let b = perturbed_beliefs(g, cfg.k0, &eps)?;
    let w_te = ladder_weight(g, &b.theta_tilde_eps, cfg.terms)?;
    let w_pe = ladder_weight(g, &one_minus_p_eps(g, &eps), cfg.terms)?;
    Ok(Chain::new(g, cfg.k0, &b.theta_tilde, &eps, &w_te, &w_pe)?.value)
}

/// Invariant measure of the ladder chain with the two perturbed branches.
struct Chain<R> {
    q: R,
    value: R,
    balance_residual: R,
    normalization_residual: R,
}

impl<R: Real> Chain<R> {
    fn new(
        g: &GameParameter<R>,
        k0: usize,
        theta_tilde: &R,
        eps: &R,
        w_te: &LadderWeight<R>,
        w_pe: &LadderWeight<R>,
    ) -> Result<Self> {
        let one = g.one();
        let t = theta_tilde.clone();
        // Θ_k = Θ_k(1 − p) for k < k₀
        let base = g.orbit_cached(&g.q(), k0)?;
        let thetas: Vec<R> = base.points[..k0]
            .iter()
            .map(|x| R::max_of(x.clone(), one.clone() - x.clone()))
            .collect();
        let mut prods = vec![one.clone()];
        for th in &thetas {
            let last = prods.last().expect("non-empty").clone();
            prods.push(last * th.clone());
        }
        let q = prods[k0].clone();
        let head = prods.iter().fold(g.zero(), |a, x| a + x.clone());
        let pi0 = one.clone()
            / (head.clone()
                + q.clone() * ((one.clone() - t.clone()) * w_te.w.clone() + t.clone() * w_pe.w.clone()));
        let value = pi0.clone() * (one.clone() + (one.clone() - eps.clone()) * t.clone() * q.clone());

        // Each branch i returns Π^i_0·(1 − Σ_{n≤N}(Π_{k<n}Θ^i_k − Π_{k≤n}Θ^i_k)) short of its
        // full flow, i.e. the branch mass telescopes to 1 − (last product).
        let branch_return = |w: &LadderWeight<R>, theta0: &R| -> R {
            let mut x = theta0.clone();
            let mut prod = one.clone();
            for _ in 0..w.terms {
                prod = prod * R::max_of(x.clone(), one.clone() - x.clone());
                x = g.step(&x);
            }
            one.clone() - prod
        };
        let b1 = branch_return(w_te, &perturbed_beliefs(g, k0, eps)?.theta_tilde_eps);
        let b2 = branch_return(w_pe, &one_minus_p_eps(g, eps));
        let pi_k0 = pi0.clone() * q.clone();
        let head_return = thetas
            .iter()
            .zip(&prods)
            .fold(g.zero(), |a, (th, pr)| a + (one.clone() - th.clone()) * pi0.clone() * pr.clone());
        let inflow = head_return
            + pi_k0.clone() * (one.clone() - t.clone()) * b1
            + pi_k0.clone() * t.clone() * b2;
        let balance_residual = pi0.clone() - inflow;
        let mass = pi0.clone() * head
            + pi_k0.clone() * ((one.clone() - t.clone()) * w_te.w.clone() + t * w_pe.w.clone());
        Ok(Chain {
            q,
            value,
            balance_residual,
            normalization_residual: mass - one,
        })
    }
}

/// Checks that `θ̃` and `1 − θ̃` stay off the orbits of the branch roots.
fn disjointness_warnings<R: Real>(g: &GameParameter<R>, theta_tilde: &R, roots: &[&R], horizon: usize) -> Vec<String> {
    let t = theta_tilde.as_f64();
    let mut out = Vec::new();
    for (i, r) in roots.iter().enumerate() {
        let mut x = (*r).clone();
        for k in 0..horizon {
            let xf = x.as_f64();
            if (xf - t).abs() < DISJOINTNESS_TOL || (xf - (1.0 - t)).abs() < DISJOINTNESS_TOL {
                out.push(format!(
                    "branch {} reaches theta_tilde or 1 - theta_tilde at step {k}",
                    i + 1
                ));
                break;
            }
            x = g.step(&x);
        }
    }
    out
}

/// Margin as a function of `ε` for fixed `p` and `k₀`.
pub fn margin_curve<R: Real>(
    g: &GameParameter<R>,
    k0: usize,
    eps_grid: &[&str],
    terms: usize,
) -> Result<Vec<(R, R)>> {
    if eps_grid.is_empty() {
        return Err(Error::Invalid("empty epsilon grid".into()));
    }
    eps_grid
        .iter()
        .map(|e| {
            let cfg = PerturbationConfig::new(k0, e, Some(terms), Some(g.precision))?;
            let r = lemma_margin(g, &cfg)?;
            Ok((r.epsilon, r.margin))
        })
        .collect()
}

/// Player 1's probability of Top at `θ̃` (`mirrored = false`) or `1 − θ̃`.
pub fn perturbed_prob_t<R: Real>(g: &GameParameter<R>, theta_tilde: &R, eps: &R, state: HiddenState, mirrored: bool) -> R {
    let one = g.one();
    let t = theta_tilde.clone();
    let shaded = (one.clone() - eps.clone()) * t.clone() / (one.clone() - t);
    match (mirrored, state) {
        (false, HiddenState::Low) => one - eps.clone(),
        (false, HiddenState::High) => one - shaded,
        (true, HiddenState::Low) => shaded,
        (true, HiddenState::High) => eps.clone(),
    }
}
