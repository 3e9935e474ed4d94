//! Belief dynamics: the update maps `f_T`, `f_B`, their combination `Φ`,
//! the folded map `α` with potential `ψ`, and orbits of `Φ`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::numeric::{parse_exact, Precision, Rational, Real};

/// The side of ½ a belief lies on. `Above` includes ½ itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    Below,
    Above,
}

impl Side {
    /// 0 below ½, 1 at or above.
    pub fn bit(self) -> u8 {
        match self {
            Side::Below => 0,
            Side::Above => 1,
        }
    }
}

/// The game parameter `p` with `γ = 2p − 1`, carried in one numeric context.
#[derive(Clone)]
pub struct GameParameter<R: Real> {
    pub p: R,
    pub gamma: R,
    pub precision: Precision,
    zero: R,
    half: R,
    one: R,
    two_thirds: R,
    cache: Arc<OrbitCache<R>>,
}

impl<R: Real> fmt::Debug for GameParameter<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameParameter")
            .field("p", &self.p)
            .field("precision", &self.precision)
            .finish()
    }
}

impl<R: Real> GameParameter<R> {
    /// Builds the parameter from an exact rational `p ∈ [½, 1)`.
    pub fn from_rational(p: &Rational, precision: Precision) -> Result<Self> {
        let half = Rational::ratio_like(1, 2, p);
        let one = Rational::ratio_like(1, 1, p);
        if *p == one {
            // the state never switches and the value series has no tail decay
            return Err(Error::Divergence { p: 1.0 });
        }
        if *p < half || *p > one {
            return Err(Error::Domain {
                what: "p",
                value: p.as_f64(),
                domain: "[1/2, 1)",
            });
        }
        Ok(Self::build(R::from_rational(p, precision.bits()), precision))
    }

    /// Parses `p` as an exact decimal or fraction.
    pub fn parse(p: &str, precision: Precision) -> Result<Self> {
        Self::from_rational(&parse_exact(p)?, precision)
    }

    /// Uses the exact binary value of `p`.
    pub fn from_f64(p: f64, precision: Precision) -> Result<Self> {
        let r = Rational::try_from(p).map_err(|_| Error::Domain {
            what: "p",
            value: p,
            domain: "[1/2, 1)",
        })?;
        Self::from_rational(&r, precision)
    }

    /// Wraps an already computed value, e.g. a root found numerically.
    pub fn from_real(p: R, precision: Precision) -> Result<Self> {
        let half = R::ratio_like(1, 2, &p);
        let one = R::ratio_like(1, 1, &p);
        if !(p >= half && p < one) {
            return Err(Error::Domain {
                what: "p",
                value: p.as_f64(),
                domain: "[1/2, 1)",
            });
        }
        Ok(Self::build(p, precision))
    }

    fn build(p: R, precision: Precision) -> Self {
        let c = |n, d| R::ratio_like(n, d, &p);
        let gamma = c(2, 1) * p.clone() - c(1, 1);
        GameParameter {
            zero: c(0, 1),
            half: c(1, 2),
            one: c(1, 1),
            two_thirds: c(2, 3),
            gamma,
            p,
            precision,
            cache: Arc::new(OrbitCache::default()),
        }
    }

    /// The constant `num/den` at the working precision.
    pub fn c(&self, num: i64, den: i64) -> R {
        R::ratio_like(num, den, &self.p)
    }

    pub fn zero(&self) -> R {
        self.zero.clone()
    }

    pub fn half(&self) -> R {
        self.half.clone()
    }

    pub fn one(&self) -> R {
        self.one.clone()
    }

    pub fn two_thirds(&self) -> R {
        self.two_thirds.clone()
    }

    /// `1 − p`.
    pub fn q(&self) -> R {
        self.one.clone() - self.p.clone()
    }

    pub fn p_f64(&self) -> f64 {
        self.p.as_f64()
    }

    /// The same parameter in `f64`.
    pub fn to_f64_param(&self) -> GameParameter<f64> {
        GameParameter::<f64>::build(self.p.as_f64(), Precision::Float64)
    }

    pub fn side(&self, theta: &R) -> Side {
        if *theta >= self.half {
            Side::Above
        } else {
            Side::Below
        }
    }

    fn check_belief(&self, theta: &R) -> Result<()> {
        if *theta >= self.zero && *theta <= self.one {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "belief",
                value: theta.as_f64(),
                domain: "[0, 1]",
            })
        }
    }

    /// Posterior after Top. Returns `p` for `θ ≥ ½`.
    pub fn f_t(&self, theta: &R) -> Result<R> {
        self.check_belief(theta)?;
        Ok(self.f_t_unchecked(theta))
    }

    /// Posterior after Bottom. Returns `1 − p` for `θ ≤ ½`.
    pub fn f_b(&self, theta: &R) -> Result<R> {
        self.check_belief(theta)?;
        Ok(self.f_b_unchecked(theta))
    }

    /// `Φ(θ)`: `f_B` on `[½, 1]`, `f_T` below.
    pub fn phi(&self, theta: &R) -> Result<R> {
        self.check_belief(theta)?;
        Ok(self.step(theta))
    }

    pub(crate) fn f_t_unchecked(&self, theta: &R) -> R {
        if *theta >= self.half {
            return self.p.clone();
        }
        let t = theta.clone();
        (self.p.clone() * t.clone() + self.q() * (self.one.clone() - t.clone() - t.clone()))
            / (self.one.clone() - t)
    }

    pub(crate) fn f_b_unchecked(&self, theta: &R) -> R {
        if *theta <= self.half {
            return self.q();
        }
        self.c(3, 1) * self.p.clone() - self.one.clone() - self.gamma.clone() / theta.clone()
    }

    /// Unchecked `Φ`.
    pub fn step(&self, theta: &R) -> R {
        if *theta >= self.half {
            self.c(3, 1) * self.p.clone() - self.one.clone() - self.gamma.clone() / theta.clone()
        } else {
            self.f_t_unchecked(theta)
        }
    }

    /// The folded map `α(t) = max(Φ(t), 1 − Φ(t))` on `[½, 1]`.
    pub fn alpha(&self, t: &R) -> Result<R> {
        if !(*t >= self.half && *t <= self.one) {
            return Err(Error::Domain {
                what: "t",
                value: t.as_f64(),
                domain: "[1/2, 1]",
            });
        }
        let g = self.gamma.clone() / t.clone();
        Ok(if *t < self.two_thirds {
            self.c(2, 1) - self.c(3, 1) * self.p.clone() + g
        } else {
            self.c(3, 1) * self.p.clone() - self.one.clone() - g
        })
    }

    /// The potential `ψ(t) = γ/t`.
    pub fn psi(&self, t: &R) -> Result<R> {
        if *t <= self.zero {
            return Err(Error::Domain {
                what: "t",
                value: t.as_f64(),
                domain: "(0, 1]",
            });
        }
        Ok(self.gamma.clone() / t.clone())
    }

    /// All `θ ∈ [0, 1]` with `Φ(θ) = y`, increasing. Empty when `γ = 0`,
    /// where `Φ` is constant.
    pub fn phi_preimages(&self, y: &R) -> Vec<R> {
        let mut out = Vec::new();
        if self.gamma <= self.zero {
            return out;
        }
        // f_T branch on [0, ½): θ = (y − 1 + p)/(y + 3p − 2)
        let den = y.clone() + self.c(3, 1) * self.p.clone() - self.c(2, 1);
        if den != self.zero {
            let th = (y.clone() - self.one.clone() + self.p.clone()) / den;
            if th >= self.zero && th < self.half {
                out.push(th);
            }
        }
        // f_B branch on [½, 1]: θ = γ/((3p − 1) − y)
        let den = self.c(3, 1) * self.p.clone() - self.one.clone() - y.clone();
        if den > self.zero {
            let th = self.gamma.clone() / den;
            if th >= self.half && th <= self.one {
                out.push(th);
            }
        }
        out
    }

    /// The matrix `U_ε` advancing `(a_n, b_n)`.
    pub fn u_matrix(&self, side: Side) -> Mat2<R> {
        match side {
            Side::Above => Mat2::new(
                self.c(3, 1) * self.p.clone() - self.one.clone(),
                -self.gamma.clone(),
                self.one(),
                self.zero(),
            ),
            Side::Below => Mat2::new(
                self.c(3, 1) * self.p.clone() - self.c(2, 1),
                self.q(),
                -self.one.clone(),
                self.one(),
            ),
        }
    }

    /// `n` iterations of `Φ` from `theta0`. In exact arithmetic the
    /// projective pairs `(a_n, b_n)` are filled in as well.
    pub fn orbit(&self, theta0: &R, n: usize) -> Result<BeliefOrbit<R>> {
        self.check_belief(theta0)?;
        Ok(BeliefOrbit::compute(self, theta0, n, R::EXACT))
    }

    /// Like [`orbit`](Self::orbit) but always tracks `(a_n, b_n)`.
    pub fn orbit_with_pairs(&self, theta0: &R, n: usize) -> Result<BeliefOrbit<R>> {
        self.check_belief(theta0)?;
        Ok(BeliefOrbit::compute(self, theta0, n, true))
    }

    /// Orbit shared through the parameter's cache.
    pub fn orbit_cached(&self, theta0: &R, n: usize) -> Result<Arc<BeliefOrbit<R>>> {
        self.check_belief(theta0)?;
        Ok(self.cache.get_or_compute(self, theta0, n))
    }
}

/// Iterates of `Φ` from a starting belief.
#[derive(Debug, Clone, Serialize)]
pub struct BeliefOrbit<R> {
    pub start: R,
    /// `θ_0, …, θ_n`.
    pub points: Vec<R>,
    /// Side of each point, same length as `points`.
    pub sides: Vec<Side>,
    /// `(a_k, b_k)` with `θ_k = a_k / b_k` and `b_0 = 1`.
    pub rational_form: Option<Vec<(R, R)>>,
}

impl<R: Real> BeliefOrbit<R> {
    fn compute(g: &GameParameter<R>, theta0: &R, n: usize, pairs: bool) -> Self {
        let mut points = Vec::with_capacity(n + 1);
        let mut sides = Vec::with_capacity(n + 1);
        let mut theta = theta0.clone();
        for k in 0..=n {
            sides.push(g.side(&theta));
            points.push(theta.clone());
            if k < n {
                theta = g.step(&theta);
            }
        }
        let rational_form = pairs.then(|| {
            let mut v = Vec2::new(theta0.clone(), g.one());
            let mut out = Vec::with_capacity(n + 1);
            out.push((v.x.clone(), v.y.clone()));
            for s in sides.iter().take(n) {
                v = g.u_matrix(*s).apply(&v);
                out.push((v.x.clone(), v.y.clone()));
            }
            out
        });
        BeliefOrbit {
            start: theta0.clone(),
            points,
            sides,
            rational_form,
        }
    }

    /// Number of iterations represented.
    pub fn len(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.points.len() == 1
    }

    /// `u_k = max(θ_k, 1 − θ_k)`.
    pub fn u(&self, k: usize, g: &GameParameter<R>) -> R {
        let t = self.points[k].clone();
        R::max_of(t.clone(), g.one() - t)
    }

    pub fn side_bits(&self) -> String {
        self.sides.iter().map(|s| char::from(b'0' + s.bit())).collect()
    }
}

/// Orbits memoized per starting point. Readers share a lock; a missing or
/// too short orbit is computed once under the write lock.
pub struct OrbitCache<R> {
    map: RwLock<HashMap<String, Arc<BeliefOrbit<R>>>>,
}

impl<R> Default for OrbitCache<R> {
    fn default() -> Self {
        OrbitCache {
            map: RwLock::new(HashMap::new()),
        }
    }
}

impl<R: Real> OrbitCache<R> {
    fn get_or_compute(&self, g: &GameParameter<R>, theta0: &R, n: usize) -> Arc<BeliefOrbit<R>> {
        let key = format!("{theta0:?}");
        if let Some(o) = self.map.read().expect("orbit cache poisoned").get(&key) {
            if o.len() >= n {
                return o.clone();
            }
        }
        let mut map = self.map.write().expect("orbit cache poisoned");
        if let Some(o) = map.get(&key) {
            if o.len() >= n {
                return o.clone();
            }
        }
        let o = Arc::new(BeliefOrbit::compute(g, theta0, n, R::EXACT));
        map.insert(key, o.clone());
        o
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("orbit cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The real root near 0.7589 of `9x³ − 13x² + 6x − 1`, the parameter at
/// which `Φ(p)` has period two (`p_1 = p_3`).
pub fn p_star<R: Real>(precision: Precision) -> Result<R> {
    if R::EXACT {
        return Err(Error::UnsupportedMode(
            "the period-two parameter is irrational; use float64 or bigfloat".into(),
        ));
    }
    let like = R::from_rational(&Rational::ratio_like(1, 1, &Rational::ONE), precision.bits());
    let c = |n, d| R::ratio_like(n, d, &like);
    let f = |x: &R| {
        ((c(9, 1) * x.clone() - c(13, 1)) * x.clone() + c(6, 1)) * x.clone() - c(1, 1)
    };
    let (mut lo, mut hi) = (c(3, 4), c(77, 100));
    let iters = precision.bits().max(53) + 8;
    for _ in 0..iters {
        let mid = (lo.clone() + hi.clone()) * c(1, 2);
        if f(&mid) > c(0, 1) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo + hi) * c(1, 2))
}
