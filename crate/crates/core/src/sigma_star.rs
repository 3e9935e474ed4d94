//! Player 1's strategy `σ*` and its long-run value.

use serde::Serialize;

use crate::belief::{GameParameter, Side};
use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::numeric::Real;

/// Hidden state. `Low` pays on (T, L), `High` pays on (B, R).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum HiddenState {
    Low,
    High,
}

impl HiddenState {
    pub fn other(self) -> Self {
        match self {
            HiddenState::Low => HiddenState::High,
            HiddenState::High => HiddenState::Low,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RowAction {
    Top,
    Bottom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ColAction {
    Left,
    Right,
}

/// Stage payoff to Player 1.
pub fn payoff(state: HiddenState, row: RowAction, col: ColAction) -> u8 {
    match (state, row, col) {
        (HiddenState::Low, RowAction::Top, ColAction::Left) => 1,
        (HiddenState::High, RowAction::Bottom, ColAction::Right) => 1,
        _ => 0,
    }
}

/// `σ*` at one `(state, θ)`.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaStarAction<R> {
    pub prob_t: R,
    pub update_t: R,
    pub update_b: R,
}

/// Probability that `σ*` plays Top.
pub fn sigma_star_prob_t<R: Real>(g: &GameParameter<R>, state: HiddenState, theta: &R) -> Result<R> {
    let one = g.one();
    if !(*theta >= g.zero() && *theta <= one) {
        return Err(Error::Domain {
            what: "belief",
            value: theta.as_f64(),
            domain: "[0, 1]",
        });
    }
    let t = theta.clone();
    let half = g.half();
    Ok(match state {
        HiddenState::Low if t <= half => one,
        HiddenState::High if t <= half => (one.clone() - t.clone() - t.clone()) / (one - t),
        HiddenState::Low => (one - t.clone()) / t,
        HiddenState::High => g.zero(),
    })
}

pub fn sigma_star_action<R: Real>(
    g: &GameParameter<R>,
    state: HiddenState,
    theta: &R,
) -> Result<SigmaStarAction<R>> {
    Ok(SigmaStarAction {
        prob_t: sigma_star_prob_t(g, state, theta)?,
        update_t: g.f_t(theta)?,
        update_b: g.f_b(theta)?,
    })
}

/// Player 1's expected stage payoff when the belief is `θ`, Player 1 plays
/// `σ*` and Player 2 plays Left with probability `prob_left`.
pub fn one_step_payoff<R: Real>(g: &GameParameter<R>, theta: &R, prob_left: &R) -> Result<R> {
    let t_low = sigma_star_prob_t(g, HiddenState::Low, theta)?;
    let t_high = sigma_star_prob_t(g, HiddenState::High, theta)?;
    let one = g.one();
    let low = theta.clone() * t_low * prob_left.clone();
    let high = (one.clone() - theta.clone()) * (one.clone() - t_high) * (one - prob_left.clone());
    Ok(low + high)
}

/// Probability of returning to the ladder base `{p, 1 − p}` from belief `θ`.
pub fn fall_off_probability<R: Real>(g: &GameParameter<R>, theta: &R) -> Result<R> {
    let one = g.one();
    if *theta >= g.half() {
        // state Low and Top
        Ok(theta.clone() * sigma_star_prob_t(g, HiddenState::Low, theta)?)
    } else {
        // state High and Bottom
        Ok((one.clone() - theta.clone()) * (one - sigma_star_prob_t(g, HiddenState::High, theta)?))
    }
}

/// The value of `σ*` as the reciprocal of `1 + u₀ + u₀u₁ + …`.
#[derive(Debug, Clone, Serialize)]
pub struct LadderValue<R> {
    /// `u_n = max(p_n, 1 − p_n)`.
    pub u: Vec<R>,
    /// `1, 1 + u₀, 1 + u₀ + u₀u₁, …`.
    pub partial_sums: Vec<R>,
    pub v: R,
    /// Bound on the neglected part of `1/v`.
    pub tail_bound: R,
}

impl<R: Real> LadderValue<R> {
    pub fn terms(&self) -> usize {
        self.partial_sums.len()
    }

    /// `1/v`.
    pub fn inverse(&self) -> R {
        self.partial_sums.last().expect("at least one term").clone()
    }
}

const MAX_LADDER_TERMS: usize = 50_000_000;

/// Sums the ladder series until `(u₀⋯u_{N−1})·p/(1−p) < tol`.
pub fn value_ladder<R: Real>(g: &GameParameter<R>, tol: f64) -> Result<LadderValue<R>> {
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    let q = g.q();
    if q <= g.zero() {
        return Err(Error::Divergence { p: g.p_f64() });
    }
    let ratio = g.p.clone() / q;
    let mut theta = g.p.clone();
    let mut prod = g.one();
    let mut sum = g.one();
    let mut u = Vec::new();
    let mut partial_sums = vec![sum.clone()];
    loop {
        let bound = prod.clone() * ratio.clone();
        if bound.as_f64() < tol {
            return Ok(LadderValue {
                v: g.one() / sum,
                u,
                partial_sums,
                tail_bound: bound,
            });
        }
        if partial_sums.len() > MAX_LADDER_TERMS {
            return Err(Error::NonConvergence {
                what: "ladder series",
                iterations: partial_sums.len(),
                residual: bound.as_f64(),
            });
        }
        let un = R::max_of(theta.clone(), g.one() - theta.clone());
        prod = prod * un.clone();
        sum = sum + prod.clone();
        u.push(un);
        partial_sums.push(sum.clone());
        theta = g.step(&theta);
    }
}

/// Terms of `(0 1)(I + U_{ε₀} + U_{ε₁}U_{ε₀} + …)(p 1)ᵀ`.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixSeries<R> {
    /// Term `n` is `(0 1) U_{ε_{n−1}}⋯U_{ε₀} (p 1)ᵀ`; term 0 is 1.
    pub terms: Vec<R>,
    /// Sum of the terms, approximating `1/v`.
    pub sum: R,
}

/// Partial sum of the matrix-product series for `1/v` with `n_terms` terms.
pub fn value_matrix<R: Real>(g: &GameParameter<R>, n_terms: usize) -> Result<MatrixSeries<R>> {
    if n_terms == 0 {
        return Err(Error::Invalid("value_matrix needs at least one term".into()));
    }
    let mut vec = Vec2::new(g.p.clone(), g.one());
    let mut terms = Vec::with_capacity(n_terms);
    let mut sum = g.zero();
    for k in 0..n_terms {
        if k > 0 {
            let side = g.side(&(vec.x.clone() / vec.y.clone()));
            vec = g.u_matrix(side).apply(&vec);
        }
        sum = sum + vec.y.clone();
        terms.push(vec.y.clone());
    }
    Ok(MatrixSeries { terms, sum })
}

/// Stationary law of the ladder chain over rungs `0..=n_max`.
#[derive(Debug, Clone, Serialize)]
pub struct LadderStationary<R> {
    pub pi: Vec<R>,
    /// Bound on the mass above `n_max` before renormalisation.
    pub tail_mass: f64,
}

/// `π_n = u₀⋯u_{n−1} / (1 + u₀ + u₀u₁ + …)`, truncated at `n_max` and
/// renormalised. Fails if the neglected mass exceeds `1e-12`.
pub fn ladder_stationary<R: Real>(g: &GameParameter<R>, n_max: usize) -> Result<LadderStationary<R>> {
    let mut weights = Vec::with_capacity(n_max + 1);
    let mut theta = g.p.clone();
    let mut prod = g.one();
    for _ in 0..=n_max {
        weights.push(prod.clone());
        prod = prod * R::max_of(theta.clone(), g.one() - theta.clone());
        theta = g.step(&theta);
    }
    let total = weights.iter().fold(g.zero(), |a, w| a + w.clone());
    let q = g.q();
    // mass above n_max, relative to the total
    let tail_mass = (prod / q / total.clone()).as_f64();
    if !(tail_mass < 1e-12) {
        return Err(Error::NonConvergence {
            what: "ladder stationary distribution",
            iterations: n_max,
            residual: tail_mass,
        });
    }
    let pi = weights.into_iter().map(|w| w / total.clone()).collect();
    Ok(LadderStationary { pi, tail_mass })
}

/// Upper bound `p/(4p − 1)` from the two-state response, equal to the
/// value for `p ≤ ⅔`.
pub fn two_state_bound<R: Real>(g: &GameParameter<R>) -> R {
    g.p.clone() / (g.c(4, 1) * g.p.clone() - g.one())
}

/// Side sequence of the orbit of `p`, as used by the ladder.
pub fn base_sides<R: Real>(g: &GameParameter<R>, n: usize) -> Vec<Side> {
    let mut out = Vec::with_capacity(n);
    let mut theta = g.p.clone();
    for _ in 0..n {
        out.push(g.side(&theta));
        theta = g.step(&theta);
    }
    out
}
