//! Classical Markov jump processes embedded as Lindblad models.

use crate::error::{Error, Result};
use crate::lindblad::{JumpChannel, LindbladModel, ModelDerivative, ParametrizedModel};
use crate::linalg::{null_right, ComplexMatrix, C64};

/// Rate matrix family `W_ji(θ) = W⁰_ji e^{κ_ji θ}` for jumps `i → j`.
///
/// Only off-diagonal entries are meaningful; the diagonal of the generator
/// is fixed by probability conservation.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalChain {
    rates: Vec<Vec<f64>>,
    log_sensitivities: Vec<Vec<f64>>,
}

/// A directed edge `from → to` with positive base rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    pub log_sensitivity: f64,
}

impl Edge {
    pub fn label(&self) -> String {
        format!("{}->{}", self.from, self.to)
    }
}

impl ClassicalChain {
    /// `rates[j][i]` is the base rate of `i → j`; `log_sensitivities[j][i]`
    /// is `∂θ ln W_ji`.
    pub fn new(rates: Vec<Vec<f64>>, log_sensitivities: Vec<Vec<f64>>) -> Result<Self> {
        let n = rates.len();
        if n < 2 {
            return Err(Error::InvalidModel("a chain needs at least two states".into()));
        }
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if !square(&rates) || !square(&log_sensitivities) {
            return Err(Error::InvalidModel(format!("rate tables must be {n}x{n}")));
        }
        for j in 0..n {
            for i in 0..n {
                if i == j {
                    continue;
                }
                let w = rates[j][i];
                if !w.is_finite() || w < 0.0 || !log_sensitivities[j][i].is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "rate {i}->{j} must be finite and nonnegative, got {w}"
                    )));
                }
            }
        }
        Ok(Self { rates, log_sensitivities })
    }

    /// Every rate scaled by `e^θ`.
    pub fn uniformly_scaled(rates: Vec<Vec<f64>>) -> Result<Self> {
        let n = rates.len();
        Self::new(rates, vec![vec![1.0; n]; n])
    }

    pub fn states(&self) -> usize {
        self.rates.len()
    }

    pub fn edges(&self) -> Vec<Edge> {
        let n = self.states();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.rates[j][i] > 0.0 {
                    out.push(Edge {
                        from: i,
                        to: j,
                        rate: self.rates[j][i],
                        log_sensitivity: self.log_sensitivities[j][i],
                    });
                }
            }
        }
        out
    }

    /// Off-diagonal rate `W_ji(θ)`.
    pub fn rate(&self, to: usize, from: usize, theta: f64) -> f64 {
        self.rates[to][from] * (self.log_sensitivities[to][from] * theta).exp()
    }

    /// Generator `W(θ)` with columns summing to zero.
    pub fn generator(&self, theta: f64) -> Vec<Vec<f64>> {
        let n = self.states();
        let mut w = vec![vec![0.0; n]; n];
        for e in self.edges() {
            let r = self.rate(e.to, e.from, theta);
            w[e.to][e.from] += r;
            w[e.from][e.from] -= r;
        }
        w
    }

    /// Whether every state reaches every other along positive rates.
    pub fn is_irreducible(&self) -> bool {
        let n = self.states();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(s) = stack.pop() {
                for t in 0..n {
                    let w = if forward { self.rates[t][s] } else { self.rates[s][t] };
                    if t != s && w > 0.0 && !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
            seen.into_iter().all(|x| x)
        };
        reach(true) && reach(false)
    }

    /// Stationary distribution `p` with `W p = 0`, `Σ p = 1`.
    pub fn stationary_distribution(&self, theta: f64) -> Result<Vec<f64>> {
        if !self.is_irreducible() {
            return Err(Error::Degenerate("chain is reducible".into()));
        }
        let w = self.generator(theta);
        let n = self.states();
        let m = ComplexMatrix::from_fn(n, n, |r, c| C64::new(w[r][c], 0.0));
        let v = null_right(&m)?;
        let total: C64 = v.iter().sum();
        Ok(v.iter().map(|x| (x / total).re).collect())
    }

    /// `Σ_{i≠j} p_i W_ji`.
    pub fn dynamical_activity(&self, theta: f64) -> Result<f64> {
        let p = self.stationary_distribution(theta)?;
        Ok(self.edges().iter().map(|e| p[e.from] * self.rate(e.to, e.from, theta)).sum())
    }

    /// `max (∂θ ln W_ji)²` over edges.
    pub fn max_log_sensitivity_squared(&self) -> f64 {
        self.edges().iter().map(|e| e.log_sensitivity.powi(2)).fold(0.0, f64::max)
    }
}

fn edge_operator(n: usize, e: &Edge, amplitude: f64) -> ComplexMatrix {
    let mut op = ComplexMatrix::zeros(n, n);
    op[(e.to, e.from)] = C64::new(amplitude, 0.0);
    op
}

/// Embedding with `H = 0` and `L_ji = √W_ji |j⟩⟨i|`, one channel per edge.
///
/// `weights` assigns `ν` per edge in [`ClassicalChain::edges`] order; `None`
/// counts every jump with weight one.
pub fn classical_embedding(chain: &ClassicalChain, weights: Option<Vec<f64>>) -> Result<ParametrizedModel> {
    let edges = chain.edges();
    let weights = weights.unwrap_or_else(|| vec![1.0; edges.len()]);
    if weights.len() != edges.len() {
        return Err(Error::Input(format!("{} weights for {} edges", weights.len(), edges.len())));
    }
    let n = chain.states();
    let build_chain = chain.clone();
    let build_edges = edges.clone();
    let family = ParametrizedModel::new(move |theta| {
        let jumps = build_edges
            .iter()
            .zip(&weights)
            .map(|(e, &w)| {
                let amp = build_chain.rate(e.to, e.from, theta).sqrt();
                JumpChannel::new(e.label(), edge_operator(n, e, amp), w)
            })
            .collect();
        LindbladModel::new(ComplexMatrix::zeros(n, n), jumps)
    });
    let deriv_chain = chain.clone();
    Ok(family.with_analytic_derivative(move |theta| {
        let djumps = edges
            .iter()
            .map(|e| {
                let amp = deriv_chain.rate(e.to, e.from, theta).sqrt();
                edge_operator(n, e, 0.5 * e.log_sensitivity * amp)
            })
            .collect();
        Ok(ModelDerivative { dh: ComplexMatrix::zeros(n, n), djumps })
    }))
}
