use crate::error::{Error, Result};

const SOLVABLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    Open,
}

/// One dissipative SSH instance.
///
/// Rates are the physical loss/gain pairs per bond plus an optional on-site
/// pair; the combinations `γᵢ`, `ηᵢ` are always derived.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub t1: f64,
    pub t2: f64,
    pub gl1: f64,
    pub gg1: f64,
    pub gl2: f64,
    pub gg2: f64,
    pub gl0: f64,
    pub gg0: f64,
    pub boundary: Boundary,
    pub cells: usize,
}

impl ChainSpec {
    pub fn new(t1: f64, t2: f64, boundary: Boundary, cells: usize) -> Self {
        ChainSpec {
            t1,
            t2,
            gl1: 0.0,
            gg1: 0.0,
            gl2: 0.0,
            gg2: 0.0,
            gl0: 0.0,
            gg0: 0.0,
            boundary,
            cells,
        }
    }

    pub fn bond1(mut self, loss: f64, gain: f64) -> Self {
        self.gl1 = loss;
        self.gg1 = gain;
        self
    }

    pub fn bond2(mut self, loss: f64, gain: f64) -> Self {
        self.gl2 = loss;
        self.gg2 = gain;
        self
    }

    pub fn onsite(mut self, loss: f64, gain: f64) -> Self {
        self.gl0 = loss;
        self.gg0 = gain;
        self
    }

    /// Sets bond rates from strengths `γᵢ` and imbalances `ηᵢ` (loss = γ+η, gain = γ−η).
    pub fn strengths(self, g1: f64, e1: f64, g2: f64, e2: f64) -> Self {
        self.bond1(g1 + e1, g1 - e1).bond2(g2 + e2, g2 - e2)
    }

    /// Balanced loss and gain (`η = 0`) with the given bond strengths.
    pub fn balanced(self, g1: f64, g2: f64) -> Self {
        self.strengths(g1, 0.0, g2, 0.0)
    }

    /// Loss-only bonds (`γ = η`) with the given bond strengths.
    pub fn loss_only(self, g1: f64, g2: f64) -> Self {
        self.strengths(g1, g1, g2, g2)
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Self {
        ChainSpec { boundary, ..self.clone() }
    }

    pub fn with_cells(&self, cells: usize) -> Self {
        ChainSpec { cells, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1.is_finite() && self.t2.is_finite()) {
            return Err(Error::InvalidSpec("hoppings must be finite".into()));
        }
        let rates = [
            ("gl1", self.gl1),
            ("gg1", self.gg1),
            ("gl2", self.gl2),
            ("gg2", self.gg2),
            ("gl0", self.gl0),
            ("gg0", self.gg0),
        ];
        for (name, v) in rates {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidSpec(format!("{name} must be a finite non-negative rate, got {v}")));
            }
        }
        if self.cells < 2 {
            return Err(Error::InvalidSpec(format!("need at least 2 unit cells, got {}", self.cells)));
        }
        Ok(())
    }

    pub fn sites(&self) -> usize {
        site_count(self)
    }

    pub fn rates(&self) -> DerivedRates {
        derive_rates(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    pub g0: f64,
    pub e0: f64,
    pub g1: f64,
    pub e1: f64,
    pub g2: f64,
    pub e2: f64,
    /// Total strength `γ₀ + γ₁ + γ₂`.
    pub g: f64,
    /// Total imbalance `η₀ + η₁ + η₂`.
    pub e: f64,
    pub solvable: bool,
}

impl DerivedRates {
    pub fn require_positive(&self) -> Result<()> {
        if self.g > 0.0 {
            Ok(())
        } else {
            Err(Error::ZeroRate)
        }
    }
}

pub fn derive_rates(spec: &ChainSpec) -> DerivedRates {
    let g0 = 0.5 * (spec.gl0 + spec.gg0);
    let e0 = 0.5 * (spec.gl0 - spec.gg0);
    let g1 = 0.5 * (spec.gl1 + spec.gg1);
    let e1 = 0.5 * (spec.gl1 - spec.gg1);
    let g2 = 0.5 * (spec.gl2 + spec.gg2);
    let e2 = 0.5 * (spec.gl2 - spec.gg2);
    let g = g0 + g1 + g2;
    let e = e0 + e1 + e2;
    // The source term is proportional to the damping term iff η·γᵢ = γ·ηᵢ on every bond.
    let close = |a: f64, b: f64| (a - b).abs() <= SOLVABLE_TOL * (1.0 + a.abs().max(b.abs()));
    let solvable = close(e * g1, g * e1) && close(e * g2, g * e2);
    DerivedRates { g0, e0, g1, e1, g2, e2, g, e, solvable }
}

pub fn site_count(spec: &ChainSpec) -> usize {
    match spec.boundary {
        Boundary::Periodic => 2 * spec.cells,
        Boundary::Open => 2 * spec.cells - 1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    FullyFilled,
    /// One particle on the given 1-based site, all others empty.
    SingleParticle(usize),
    Occupations(Vec<f64>),
}

impl InitialState {
    /// Site occupations at `t = 0` for a chain of `n` sites.
    pub fn occupations(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            InitialState::FullyFilled => Ok(vec![1.0; n]),
            InitialState::SingleParticle(j) => {
                if *j == 0 || *j > n {
                    return Err(Error::InitialState(format!("site {j} outside 1..={n}")));
                }
                let mut v = vec![0.0; n];
                v[j - 1] = 1.0;
                Ok(v)
            }
            InitialState::Occupations(v) => {
                if v.len() != n {
                    return Err(Error::InitialState(format!("expected {n} occupations, got {}", v.len())));
                }
                if let Some(x) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                    return Err(Error::InitialState(format!("occupation {x} outside [0, 1]")));
                }
                Ok(v.clone())
            }
        }
    }
}
