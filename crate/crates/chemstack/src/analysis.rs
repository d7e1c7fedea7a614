//! Flow analysis of reaction-grammar files: `Ψ`, rate laws, ODEs,
//! conserved sums, steady state, settle time and the saturation curve of the
//! queue species.

use std::fmt::Write as _;
use std::path::Path;

use chemstack_core::chem::{parse_network, ParsedNetwork};
use chemstack_core::flow::{
    conservation_laws, derive_odes, michaelis_menten_rate, settle_time, steady_state, steady_state_clamped,
    FlowModel, InflowTerm, SteadyState,
};
use serde::Serialize;
use serde_json::json;

use crate::Error;

pub struct Analysis {
    pub model: FlowModel,
    pub initial: Vec<f64>,
    pub conserved: Vec<(String, f64)>,
    pub steady: SteadyState,
    pub settle: Option<f64>,
    pub tolerance: f64,
    /// Species fed by the first inflow; the one clamped for the saturation
    /// curve.
    pub queue: Option<usize>,
    /// `(e0, k1, k2)` when the file binds all three.
    pub mm: Option<(f64, f64, f64)>,
}

pub fn load_network(path: &Path) -> Result<ParsedNetwork, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read reaction file {}: {e}", path.display())))?;
    parse_network(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Builds the flow model with `overrides` applied to the declared inflows.
/// An override named `v_src` applies to the only inflow when none carries
/// that name.
pub fn analyze(parsed: &ParsedNetwork, overrides: &[(String, f64)], tolerance: f64) -> Result<Analysis, Error> {
    let mut inflows: Vec<InflowTerm> =
        parsed.inflows.iter().map(|(name, v, s)| InflowTerm::new(name.clone(), *s, *v)).collect();
    for (name, v) in overrides {
        let i = match inflows.iter().position(|t| &t.name == name) {
            Some(i) => i,
            None if name == "v_src" && inflows.len() == 1 => 0,
            None => return Err(Error::Config(format!("no inflow named `{name}` in the reaction file"))),
        };
        if !(v.is_finite() && *v >= 0.0) {
            return Err(Error::Config(format!("inflow `{name}` must be a non-negative number")));
        }
        inflows[i].rate = *v;
    }
    let queue = inflows.first().map(|t| t.species.index());
    let model = derive_odes(&parsed.network, &inflows);
    let mut initial = vec![0.0; model.species_count()];
    for (s, n) in &parsed.initial {
        initial[s.index()] = *n as f64;
    }
    let labels = model.matrix().row_labels().to_vec();
    let conserved =
        conservation_laws(model.matrix()).iter().map(|l| (l.describe(&labels), l.total(&initial))).collect();
    let steady = steady_state(&model, &initial).map_err(|e| Error::Runtime(format!("steady state: {e}")))?;
    let settle = match steady.concentrations() {
        Some(c) => Some(settle_time(&model, c, tolerance).map_err(|e| Error::Runtime(format!("settle time: {e}")))?),
        None => None,
    };
    let mm = match (parsed.constant("e0"), parsed.constant("k1"), parsed.constant("k2")) {
        (Some(e0), Some(k1), Some(k2)) => Some((e0, k1, k2)),
        _ => None,
    };
    Ok(Analysis { model, initial, conserved, steady, settle, tolerance, queue, mm })
}

/// Round-trip-stable short form: integers print bare, others with up to nine
/// significant decimals.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let r = (x * 1e9).round() / 1e9;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r}")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub c_s: f64,
    pub emission_rate: f64,
    pub mm_rate: Option<f64>,
}

impl Analysis {
    pub fn labels(&self) -> &[String] {
        self.model.matrix().row_labels()
    }

    /// Emission rate with the queue species clamped at `points` values
    /// spaced logarithmically over `[lo, hi]`.
    pub fn saturation_curve(&self, lo: f64, hi: f64, points: usize) -> Result<Vec<CurvePoint>, Error> {
        let q = self.queue.ok_or_else(|| Error::Config("the reaction file declares no inflow".into()))?;
        if !(lo > 0.0 && hi >= lo) || points == 0 {
            return Err(Error::Config("saturation curve needs 0 < lo <= hi and at least one point".into()));
        }
        (0..points)
            .map(|i| {
                let f = if points == 1 { 0.0 } else { i as f64 / (points - 1) as f64 };
                let c_s = lo * (hi / lo).powf(f);
                let ss = steady_state_clamped(&self.model, &self.initial, &[(q, c_s)])
                    .map_err(|e| Error::Runtime(format!("clamped steady state at {c_s}: {e}")))?;
                let mm_rate = self.mm.map(|(e0, k1, k2)| michaelis_menten_rate(c_s, e0, k1, k2));
                Ok(CurvePoint { c_s, emission_rate: ss.emission_rate(), mm_rate })
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let m = self.model.matrix();
        let labels = self.labels();
        let mut out = String::new();
        let width = labels.iter().map(String::len).max().unwrap_or(1).max(2);
        let cols: Vec<usize> = m.column_labels().iter().map(|c| c.len().max(3)).collect();
        let _ = writeln!(out, "Psi (rows species, columns reactions):");
        let _ = write!(out, "  {:width$}", "");
        for (c, w) in m.column_labels().iter().zip(&cols) {
            let _ = write!(out, " {c:>w$}");
        }
        out.push('\n');
        for (i, l) in labels.iter().enumerate() {
            let _ = write!(out, "  {l:width$}");
            for (v, w) in m.row(i).iter().zip(&cols) {
                let _ = write!(out, " {v:>w$}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "\nrates:");
        for (c, r) in m.column_labels().iter().zip(self.model.symbolic_rates()) {
            let _ = writeln!(out, "  {c} = {r}");
        }
        let _ = writeln!(out, "\nodes:");
        for l in self.model.ode_lines() {
            let _ = writeln!(out, "  {l}");
        }
        let _ = writeln!(out, "\nconserved:");
        if self.conserved.is_empty() {
            let _ = writeln!(out, "  none");
        }
        for (sum, total) in &self.conserved {
            let _ = writeln!(out, "  {sum} = {}", num(*total));
        }
        let inflows: Vec<String> = self
            .model
            .inflow_names()
            .iter()
            .zip(self.inflow_rates())
            .map(|(n, v)| format!("{n} = {}", num(v)))
            .collect();
        let _ = writeln!(out, "\nsteady state ({}):", if inflows.is_empty() { "no inflows".into() } else { inflows.join(", ") });
        match &self.steady {
            SteadyState::Finite { concentrations, emission_rate } => {
                for (l, c) in labels.iter().zip(concentrations) {
                    let _ = writeln!(out, "  c_{l} = {}", num(*c));
                }
                let _ = writeln!(out, "  emission rate = {}", num(*emission_rate));
            }
            SteadyState::Unbounded { species, emission_rate } => {
                let _ = writeln!(out, "  unbounded: c_{} grows without limit", labels[*species]);
                let _ = writeln!(out, "  emission rate = {}", num(*emission_rate));
            }
        }
        if let Some(t) = self.settle {
            let _ = writeln!(out, "  settle time (tolerance {}) = {}", num(self.tolerance), num(t));
        }
        out
    }

    fn inflow_rates(&self) -> Vec<f64> {
        self.model
            .rate_terms()
            .iter()
            .filter_map(|t| match t {
                chemstack_core::flow::RateTerm::Inflow { value, .. } => Some(*value),
                _ => None,
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let m = self.model.matrix();
        let steady = match &self.steady {
            SteadyState::Finite { concentrations, emission_rate } => json!({
                "bounded": true,
                "concentrations": self.labels().iter().zip(concentrations)
                    .map(|(l, c)| (l.clone(), json!(c))).collect::<serde_json::Map<_, _>>(),
                "emission_rate": emission_rate,
            }),
            SteadyState::Unbounded { species, emission_rate } => json!({
                "bounded": false,
                "unbounded_species": self.labels()[*species],
                "emission_rate": emission_rate,
            }),
        };
        json!({
            "species": m.row_labels(),
            "reactions": m.column_labels(),
            "psi": m.to_rows(),
            "rates": self.model.symbolic_rates(),
            "odes": self.model.ode_lines(),
            "conserved": self.conserved.iter().map(|(s, t)| json!({"sum": s, "total": t})).collect::<Vec<_>>(),
            "inflows": self.model.inflow_names().iter().zip(self.inflow_rates())
                .map(|(n, v)| ((*n).to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
            "steady_state": steady,
            "settle_time": self.settle,
            "settle_tolerance": self.tolerance,
        })
    }
}

pub fn write_curve(path: &Path, curve: &[CurvePoint]) -> Result<(), Error> {
    let err = |e: csv::Error| Error::Runtime(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for p in curve {
        w.serialize(p).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Runtime(format!("{}: {e}", path.display())))
}
