use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::{conservation_laws, ConservationLaw, FlowError, FlowModel};
use crate::crc;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampEvent {
    pub time: f64,
    pub species: usize,
}

/// States sampled at every integration step, starting with `c0` at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub clamps: Vec<ClampEvent>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory holds c0")
    }

    /// Linear interpolation of species `s` at time `t`.
    pub fn at(&self, t: f64, s: usize) -> f64 {
        let i = self.times.partition_point(|&x| x <= t);
        if i == 0 {
            return self.states[0][s];
        }
        if i >= self.times.len() {
            return self.last()[s];
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        self.states[i - 1][s] * (1.0 - w) + self.states[i][s] * w
    }
}

/// Fixed-step RK4 on `ċ = Ψ·v(c)`. Components driven below zero are clamped
/// to zero and logged.
pub fn integrate(
    model: &FlowModel,
    c0: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, FlowError> {
    let n = model.species_count();
    if c0.len() != n {
        return Err(FlowError::Dimension {
            expected: n,
            got: c0.len(),
        });
    }
    if let Some(s) = c0.iter().position(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(FlowError::NegativeInitial(s));
    }
    if !(dt > 0.0 && t_end >= 0.0) {
        return Err(FlowError::InvalidParameter("dt must be positive and t_end non-negative"));
    }
    let steps = math::ceil(t_end / dt - 1e-9).max(0.0) as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        clamps: Vec::new(),
    };
    let mut c = c0.to_vec();
    traj.times.push(0.0);
    traj.states.push(c.clone());
    let (mut k1, mut k2, mut k3, mut k4) = (
        alloc::vec![0.0; n],
        alloc::vec![0.0; n],
        alloc::vec![0.0; n],
        alloc::vec![0.0; n],
    );
    let mut tmp = alloc::vec![0.0; n];
    let mut t = 0.0;
    for i in 0..steps {
        let h = if i + 1 == steps { t_end - t } else { dt };
        model.derivative_into(&c, &mut k1);
        for j in 0..n {
            tmp[j] = c[j] + 0.5 * h * k1[j];
        }
        model.derivative_into(&tmp, &mut k2);
        for j in 0..n {
            tmp[j] = c[j] + 0.5 * h * k2[j];
        }
        model.derivative_into(&tmp, &mut k3);
        for j in 0..n {
            tmp[j] = c[j] + h * k3[j];
        }
        model.derivative_into(&tmp, &mut k4);
        t = if i + 1 == steps { t_end } else { t + h };
        for j in 0..n {
            c[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            if !c[j].is_finite() {
                return Err(FlowError::Diverged { time: t });
            }
            if c[j] < 0.0 {
                c[j] = 0.0;
                traj.clamps.push(ClampEvent { time: t, species: j });
            }
        }
        traj.times.push(t);
        traj.states.push(c.clone());
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SteadyState {
    Finite {
        concentrations: Vec<f64>,
        emission_rate: f64,
    },
    /// The queue of `species` grows without bound; emission saturates.
    Unbounded { species: usize, emission_rate: f64 },
}

impl SteadyState {
    pub fn emission_rate(&self) -> f64 {
        match self {
            SteadyState::Finite { emission_rate, .. } | SteadyState::Unbounded { emission_rate, .. } => {
                *emission_rate
            }
        }
    }

    pub fn concentrations(&self) -> Option<&[f64]> {
        match self {
            SteadyState::Finite { concentrations, .. } => Some(concentrations),
            SteadyState::Unbounded { .. } => None,
        }
    }
}

const MAX_ITERATIONS: usize = 200;

/// Steady state of the model with conserved totals taken from `initial`.
pub fn steady_state(model: &FlowModel, initial: &[f64]) -> Result<SteadyState, FlowError> {
    steady_state_clamped(model, initial, &[])
}

/// Upper bound of each species implied by the conservation laws.
fn species_bounds(n: usize, laws: &[ConservationLaw], totals: &[f64]) -> Vec<f64> {
    let mut bound = alloc::vec![f64::INFINITY; n];
    for (law, &total) in laws.iter().zip(totals) {
        for (i, &y) in law.coefficients().iter().enumerate() {
            if y > 0 {
                bound[i] = bound[i].min(total / y as f64);
            }
        }
    }
    bound
}

/// Packet flow entering each payload species when every packet that arrives
/// is eventually served (payload paths are assumed not to branch).
fn payload_flows(model: &FlowModel) -> Vec<f64> {
    let n = model.species_count();
    let mut direct = alloc::vec![0.0; n];
    let v = model.rate_vector(&alloc::vec![0.0; n]);
    for (j, term) in model.rate_terms().iter().enumerate() {
        if let super::RateTerm::Inflow { .. } = term {
            for (s, d) in direct.iter_mut().enumerate() {
                if model.matrix().get(s, j) > 0 {
                    *d += v[j];
                }
            }
        }
    }
    let mut flow = direct.clone();
    for _ in 0..n {
        let mut next = direct.clone();
        for &(_, from, to) in model.payload_edges() {
            if let Some(to) = to {
                let outdeg = model
                    .payload_edges()
                    .iter()
                    .filter(|(_, f, _)| *f == from)
                    .count() as f64;
                next[to] += flow[from] / outdeg;
            }
        }
        flow = next;
    }
    flow
}

/// As [`steady_state`], with the listed species held at fixed values.
/// Clamped runs skip overload detection.
pub fn steady_state_clamped(
    model: &FlowModel,
    initial: &[f64],
    clamped: &[(usize, f64)],
) -> Result<SteadyState, FlowError> {
    let n = model.species_count();
    if initial.len() != n {
        return Err(FlowError::Dimension {
            expected: n,
            got: initial.len(),
        });
    }
    let laws = conservation_laws(model.matrix());
    let totals: Vec<f64> = laws.iter().map(|l| l.total(initial)).collect();
    let bound = species_bounds(n, &laws, &totals);
    let flows = payload_flows(model);
    let is_clamped = |s: usize| clamped.iter().any(|(c, _)| *c == s);

    if clamped.is_empty() {
        let mut worst: Option<(usize, f64)> = None;
        for s in (0..n).filter(|&s| model.is_payload(s)) {
            let capacity: f64 = model
                .payload_edges()
                .iter()
                .filter(|(_, from, _)| *from == s)
                .map(|&(j, _, _)| match &model.rate_terms()[j] {
                    super::RateTerm::MassAction { k, reactants, .. } => reactants
                        .iter()
                        .fold(*k, |acc, &(x, chi)| acc * math::powu(bound[x], chi)),
                    super::RateTerm::Inflow { .. } => 0.0,
                })
                .sum();
            if flows[s] > 0.0 && flows[s] >= capacity && worst.is_none_or(|(_, c)| capacity < c) {
                worst = Some((s, capacity));
            }
        }
        if let Some((mut species, capacity)) = worst {
            // A bounded bottleneck backs packets up into the nearest
            // unbounded queue upstream of it.
            while bound[species].is_finite() {
                match model.payload_edges().iter().find(|(_, _, to)| *to == Some(species)) {
                    Some(&(_, from, _)) => species = from,
                    None => break,
                }
            }
            return Ok(SteadyState::Unbounded {
                species,
                emission_rate: capacity,
            });
        }
    }

    // Start point: conserved totals split evenly, payload queues at
    // flow / (k · other reactants) of their consuming reaction.
    let mut c = initial.to_vec();
    for (law, &total) in laws.iter().zip(&totals) {
        let members: Vec<usize> = law.species().filter(|&s| !is_clamped(s)).collect();
        for &s in &members {
            c[s] = total / (members.len() as f64 * law.coefficients()[s] as f64);
        }
    }
    for &(s, v) in clamped {
        c[s] = v;
    }
    for s in 0..n {
        if !model.is_payload(s) || is_clamped(s) || bound[s].is_finite() {
            continue;
        }
        if let Some(&(j, _, _)) = model.payload_edges().iter().find(|(_, f, _)| *f == s) {
            if let super::RateTerm::MassAction { k, reactants, .. } = &model.rate_terms()[j] {
                let others: f64 = reactants
                    .iter()
                    .filter(|(x, _)| *x != s)
                    .fold(*k, |acc, &(x, chi)| acc * math::powu(c[x], chi));
                if others > 0.0 {
                    c[s] = flows[s] / others;
                }
            }
        }
    }

    // Row assignment: each law replaces the ODE row of one member species.
    enum Row {
        Ode,
        Law(usize),
        Clamp(f64),
        Fixed(f64),
    }
    let mut rows: Vec<Row> = (0..n).map(|_| Row::Ode).collect();
    for &(s, v) in clamped {
        rows[s] = Row::Clamp(v);
    }
    for (li, law) in laws.iter().enumerate() {
        if let Some(p) = law
            .species()
            .find(|&s| matches!(rows[s], Row::Ode))
        {
            rows[p] = Row::Law(li);
        }
    }
    for (s, row) in rows.iter_mut().enumerate() {
        if matches!(row, Row::Ode) && model.matrix().row(s).iter().all(|&x| x == 0) {
            *row = Row::Fixed(initial[s]);
        }
    }

    let residual = |c: &[f64]| -> DVector<f64> {
        let d = model.derivative(c);
        DVector::from_fn(n, |i, _| match rows[i] {
            Row::Ode => d[i],
            Row::Law(l) => laws[l].total(c) - totals[l],
            Row::Clamp(v) | Row::Fixed(v) => c[i] - v,
        })
    };
    let scale = 1.0
        + totals.iter().fold(0.0f64, |a, t| a.max(t.abs()))
        + flows.iter().fold(0.0f64, |a, f| a.max(*f));
    let tol = 1e-12 * scale;

    let mut f = residual(&c);
    let mut norm = f.amax();
    for _ in 0..MAX_ITERATIONS {
        if norm <= tol {
            let emission_rate = model.emission_rate(&c);
            return Ok(SteadyState::Finite {
                concentrations: c,
                emission_rate,
            });
        }
        let jac = model.jacobian(&c);
        let mut jf = DMatrix::zeros(n, n);
        for i in 0..n {
            match rows[i] {
                Row::Ode => jf.set_row(i, &jac.row(i)),
                Row::Law(l) => {
                    for (k, &y) in laws[l].coefficients().iter().enumerate() {
                        jf[(i, k)] = y as f64;
                    }
                }
                Row::Clamp(_) | Row::Fixed(_) => jf[(i, i)] = 1.0,
            }
        }
        let Some(delta) = jf.lu().solve(&(-&f)) else {
            return Err(FlowError::NewtonFailed {
                iterations: MAX_ITERATIONS,
                residual: norm,
            });
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = (0..n).map(|i| (c[i] + lambda * delta[i]).max(0.0)).collect();
            let ft = residual(&trial);
            let nt = ft.amax();
            if nt < norm || nt <= tol {
                c = trial;
                f = ft;
                norm = nt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm <= tol {
        let emission_rate = model.emission_rate(&c);
        return Ok(SteadyState::Finite {
            concentrations: c,
            emission_rate,
        });
    }
    Err(FlowError::NewtonFailed {
        iterations: MAX_ITERATIONS,
        residual: norm,
    })
}

/// `e0·k2·c_S / (k2/k1 + c_S)`.
pub fn michaelis_menten_rate(c_s: f64, e0: f64, k1: f64, k2: f64) -> f64 {
    if c_s <= 0.0 {
        return 0.0;
    }
    e0 * k2 * c_s / (k2 / k1 + c_s)
}

/// Decay rates (negated real parts) of the Jacobian at `c_op`, with the zero
/// modes contributed by conservation laws removed, slowest first.
pub fn relaxation_rates(model: &FlowModel, c_op: &[f64]) -> Result<Vec<f64>, FlowError> {
    let jac = model.jacobian(c_op);
    let eig = jac.complex_eigenvalues();
    let max = eig.iter().fold(0.0f64, |a, z| a.max(z.re.abs().max(z.im.abs())));
    let eps = 1e-9 * (1.0 + max);
    let mut rates = Vec::new();
    for z in eig.iter() {
        if z.re.abs() <= eps && z.im.abs() <= eps {
            continue;
        }
        if z.re >= -eps {
            return Err(FlowError::StabilityViolation { real_part: z.re });
        }
        rates.push(-z.re);
    }
    rates.sort_by(f64::total_cmp);
    Ok(rates)
}

/// Time for the slowest linear mode at `c_op` to decay to `tolerance`.
pub fn settle_time(model: &FlowModel, c_op: &[f64], tolerance: f64) -> Result<f64, FlowError> {
    if !(tolerance > 0.0 && tolerance <= 1.0) {
        return Err(FlowError::InvalidParameter("tolerance must lie in (0, 1]"));
    }
    if tolerance == 1.0 {
        return Ok(0.0);
    }
    let rates = relaxation_rates(model, c_op)?;
    match rates.first() {
        Some(&slowest) => Ok(-math::ln(tolerance) / slowest),
        None => Ok(0.0),
    }
}

/// Settle time of the rate controller linearized around its idle operating
/// point (all tokens free). Modes decay at `k1·e0`, `k2` and, with the
/// output stage, `k_F`; `k_F = 0` disables the stage.
pub fn settle_time_estimate(
    e0: f64,
    k1: f64,
    k2: f64,
    k_f: f64,
    tolerance: f64,
) -> Result<f64, FlowError> {
    if !(e0 > 0.0 && k1 > 0.0 && k2 > 0.0 && k_f >= 0.0) {
        return Err(FlowError::InvalidParameter("rate-controller parameters must be positive"));
    }
    if !(tolerance > 0.0 && tolerance <= 1.0) {
        return Err(FlowError::InvalidParameter("tolerance must lie in (0, 1]"));
    }
    if tolerance == 1.0 {
        return Ok(0.0);
    }
    let (network, ids) = crc::reaction_network(k1, k2, k_f);
    let model = super::derive_odes(&network, &[]);
    let mut c = alloc::vec![0.0; model.species_count()];
    c[ids.e.index()] = e0;
    settle_time(&model, &c, tolerance)
}
