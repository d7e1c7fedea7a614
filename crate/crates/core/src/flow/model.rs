use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::FlowError;
use crate::chem::{ReactionNetwork, SpeciesId, SpeciesKind};
use crate::math;

/// Net molecule change per firing, `ψ_sr = ξ_sr − χ_sr`, with one column per
/// reaction followed by one per inflow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoichiometricMatrix {
    rows: Vec<String>,
    cols: Vec<String>,
    entries: Vec<i64>,
}

impl StoichiometricMatrix {
    pub fn new(rows: Vec<String>, cols: Vec<String>, entries: Vec<i64>) -> Self {
        assert_eq!(rows.len() * cols.len(), entries.len());
        StoichiometricMatrix { rows, cols, entries }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.rows
    }

    pub fn column_labels(&self) -> &[String] {
        &self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.entries[row * self.cols.len() + col]
    }

    pub fn row(&self, row: usize) -> &[i64] {
        let n = self.cols.len();
        &self.entries[row * n..(row + 1) * n]
    }

    /// Dense rows, handy for comparisons.
    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.nrows()).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows(), self.ncols(), |r, c| self.get(r, c) as f64)
    }
}

/// One component of the rate vector `v(c)`.
#[derive(Debug, Clone, PartialEq)]
pub enum RateTerm {
    /// `k · Π c_s^χ_s`.
    MassAction {
        k: f64,
        k_name: Option<String>,
        reactants: Vec<(usize, u32)>,
        emits: bool,
    },
    /// Zero-order external arrivals.
    Inflow { name: String, value: f64 },
}

impl RateTerm {
    fn eval(&self, c: &[f64]) -> f64 {
        match self {
            RateTerm::MassAction { k, reactants, .. } => reactants
                .iter()
                .fold(*k, |acc, &(s, chi)| acc * math::powu(c[s], chi)),
            RateTerm::Inflow { value, .. } => *value,
        }
    }

    /// `∂v/∂c_s`.
    fn partial(&self, c: &[f64], s: usize) -> f64 {
        match self {
            RateTerm::Inflow { .. } => 0.0,
            RateTerm::MassAction { k, reactants, .. } => {
                let Some(&(_, chi_s)) = reactants.iter().find(|(x, _)| *x == s) else {
                    return 0.0;
                };
                reactants.iter().fold(*k, |acc, &(x, chi)| {
                    if x == s {
                        acc * f64::from(chi_s) * math::powu(c[x], chi_s - 1)
                    } else {
                        acc * math::powu(c[x], chi)
                    }
                })
            }
        }
    }
}

/// Inflow feeding a payload species, for [`derive_odes`].
#[derive(Debug, Clone, PartialEq)]
pub struct InflowTerm {
    pub name: String,
    pub species: SpeciesId,
    pub rate: f64,
}

impl InflowTerm {
    pub fn new(name: impl Into<String>, species: SpeciesId, rate: f64) -> Self {
        InflowTerm {
            name: name.into(),
            species,
            rate,
        }
    }
}

/// Mean-field flow model `ċ = Ψ · v(c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowModel {
    matrix: StoichiometricMatrix,
    rates: Vec<RateTerm>,
    kinds: Vec<SpeciesKind>,
    /// Payload species reached by each payload-consuming reaction column
    /// (`None` when the packet leaves the network).
    payload_edges: Vec<(usize, usize, Option<usize>)>,
}

pub fn derive_odes(network: &ReactionNetwork, inflows: &[InflowTerm]) -> FlowModel {
    let species = network.species();
    let n = species.len();
    let m = network.reactions().len() + inflows.len();
    let mut entries = alloc::vec![0i64; n * m];
    let mut cols = Vec::with_capacity(m);
    let mut rates = Vec::with_capacity(m);
    let mut payload_edges = Vec::new();
    for (j, r) in network.reactions().iter().enumerate() {
        for s in network.species_ids() {
            let psi = i64::from(r.product_coefficient(s)) - i64::from(r.reactant_coefficient(s));
            entries[s.index() * m + j] = psi;
        }
        cols.push(r.name().to_string());
        rates.push(RateTerm::MassAction {
            k: r.rate(),
            k_name: r.symbolic_rate().map(ToString::to_string),
            reactants: r.reactants().iter().map(|(s, c)| (s.index(), *c)).collect(),
            emits: r.emits_transmit(),
        });
        let from = r
            .reactants()
            .iter()
            .find(|(s, _)| species[s.index()].is_payload())
            .map(|(s, _)| s.index());
        if let Some(from) = from {
            let to = r
                .products()
                .iter()
                .find(|(s, _)| species[s.index()].is_payload())
                .map(|(s, _)| s.index());
            payload_edges.push((j, from, to));
        }
    }
    for (i, inflow) in inflows.iter().enumerate() {
        let j = network.reactions().len() + i;
        entries[inflow.species.index() * m + j] = 1;
        cols.push(inflow.name.clone());
        rates.push(RateTerm::Inflow {
            name: inflow.name.clone(),
            value: inflow.rate,
        });
    }
    FlowModel {
        matrix: StoichiometricMatrix::new(
            species.iter().map(|s| s.name().to_string()).collect(),
            cols,
            entries,
        ),
        rates,
        kinds: species.iter().map(|s| s.kind()).collect(),
        payload_edges,
    }
}

impl FlowModel {
    pub fn matrix(&self) -> &StoichiometricMatrix {
        &self.matrix
    }

    pub fn rate_terms(&self) -> &[RateTerm] {
        &self.rates
    }

    pub fn species_count(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.matrix.rows.iter().position(|r| r == name)
    }

    pub fn is_payload(&self, s: usize) -> bool {
        self.kinds[s] == SpeciesKind::Payload
    }

    pub(crate) fn payload_edges(&self) -> &[(usize, usize, Option<usize>)] {
        &self.payload_edges
    }

    /// Inflow names in column order.
    pub fn inflow_names(&self) -> Vec<&str> {
        self.rates
            .iter()
            .filter_map(|r| match r {
                RateTerm::Inflow { name, .. } => Some(name.as_str()),
                RateTerm::MassAction { .. } => None,
            })
            .collect()
    }

    pub fn set_inflow(&mut self, name: &str, rate: f64) -> Result<(), FlowError> {
        for r in &mut self.rates {
            if let RateTerm::Inflow { name: n, value } = r {
                if n == name {
                    *value = rate;
                    return Ok(());
                }
            }
        }
        Err(FlowError::UnknownInflow(name.to_string()))
    }

    /// Sets inflow values in column order.
    pub fn set_inflows(&mut self, values: &[f64]) -> Result<(), FlowError> {
        let names: Vec<String> = self.inflow_names().iter().map(|s| s.to_string()).collect();
        if names.len() != values.len() {
            return Err(FlowError::Dimension {
                expected: names.len(),
                got: values.len(),
            });
        }
        for (n, v) in names.iter().zip(values) {
            self.set_inflow(n, *v)?;
        }
        Ok(())
    }

    pub fn rate_vector(&self, c: &[f64]) -> Vec<f64> {
        self.rates.iter().map(|r| r.eval(c)).collect()
    }

    pub fn derivative_into(&self, c: &[f64], out: &mut [f64]) {
        let v = self.rate_vector(c);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self
                .matrix
                .row(i)
                .iter()
                .zip(&v)
                .map(|(&psi, &vj)| psi as f64 * vj)
                .sum();
        }
    }

    pub fn derivative(&self, c: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.species_count()];
        self.derivative_into(c, &mut out);
        out
    }

    /// `∂(Ψ·v)/∂c` at `c`.
    pub fn jacobian(&self, c: &[f64]) -> DMatrix<f64> {
        let n = self.species_count();
        let dv = DMatrix::from_fn(self.rates.len(), n, |j, s| self.rates[j].partial(c, s));
        self.matrix.to_dmatrix() * dv
    }

    /// Rate of packets leaving the network through transmit reactions.
    pub fn emission_rate(&self, c: &[f64]) -> f64 {
        self.rates
            .iter()
            .filter(|r| matches!(r, RateTerm::MassAction { emits: true, .. }))
            .map(|r| r.eval(c))
            .sum()
    }

    /// Symbolic form of `v_j`, e.g. `k1·c_S·c_E`.
    pub fn symbolic_rate(&self, j: usize) -> String {
        match &self.rates[j] {
            RateTerm::Inflow { name, .. } => name.clone(),
            RateTerm::MassAction {
                k, k_name, reactants, ..
            } => {
                let mut s = k_name.clone().unwrap_or_else(|| format!("{k}"));
                for &(x, chi) in reactants {
                    s.push_str("·c_");
                    s.push_str(&self.matrix.rows[x]);
                    if chi > 1 {
                        s.push_str(&format!("^{chi}"));
                    }
                }
                s
            }
        }
    }

    pub fn symbolic_rates(&self) -> Vec<String> {
        (0..self.rates.len()).map(|j| self.symbolic_rate(j)).collect()
    }

    /// One line per species: `dc_S/dt = - k1·c_S·c_E + v_src`.
    pub fn ode_lines(&self) -> Vec<String> {
        (0..self.species_count())
            .map(|i| {
                let mut line = format!("dc_{}/dt =", self.matrix.rows[i]);
                let mut empty = true;
                for (j, &psi) in self.matrix.row(i).iter().enumerate() {
                    if psi == 0 {
                        continue;
                    }
                    let sign = if psi < 0 { '-' } else { '+' };
                    let mag = psi.unsigned_abs();
                    let coef = if mag == 1 {
                        String::new()
                    } else {
                        format!("{mag}·")
                    };
                    line.push_str(&format!(" {sign} {coef}{}", self.symbolic_rate(j)));
                    empty = false;
                }
                if empty {
                    line.push_str(" 0");
                }
                line
            })
            .collect()
    }
}
