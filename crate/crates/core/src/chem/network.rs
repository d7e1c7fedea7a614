use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::ChemError;

/// Emission tag carried by reactions whose firing sends a packet out of the
/// network.
pub const TRANSMIT: &str = "transmit";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpeciesId(pub(crate) usize);

impl SpeciesId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReactionId(pub(crate) usize);

impl ReactionId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Whether molecules of a species carry packets or are bare tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpeciesKind {
    /// A FIFO queue of packets; the concentration is the queue length.
    Payload,
    /// A plain non-negative counter.
    Counter,
}

impl fmt::Display for SpeciesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpeciesKind::Payload => f.write_str("payload"),
            SpeciesKind::Counter => f.write_str("counter"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    name: String,
    kind: SpeciesKind,
}

impl Species {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SpeciesKind {
        self.kind
    }

    pub fn is_payload(&self) -> bool {
        self.kind == SpeciesKind::Payload
    }
}

/// A reaction rule `Σ χ·s -k-> Σ ξ·s`.
///
/// Coefficients are stored as `(species, coefficient)` pairs in the order
/// they were added; repeated species are merged.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    name: String,
    reactants: Vec<(SpeciesId, u32)>,
    products: Vec<(SpeciesId, u32)>,
    rate: f64,
    rate_name: Option<String>,
    emit: Option<String>,
}

impl Reaction {
    pub fn new(name: impl Into<String>, rate: f64) -> Self {
        Reaction {
            name: name.into(),
            reactants: Vec::new(),
            products: Vec::new(),
            rate,
            rate_name: None,
            emit: None,
        }
    }

    /// Symbolic name of the rate coefficient (e.g. `k1`), used when printing
    /// the flow model.
    pub fn rate_name(mut self, name: impl Into<String>) -> Self {
        self.rate_name = Some(name.into());
        self
    }

    pub fn reactant(mut self, species: SpeciesId, coefficient: u32) -> Self {
        add_term(&mut self.reactants, species, coefficient);
        self
    }

    pub fn product(mut self, species: SpeciesId, coefficient: u32) -> Self {
        add_term(&mut self.products, species, coefficient);
        self
    }

    pub fn emit(mut self, tag: impl Into<String>) -> Self {
        self.emit = Some(tag.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn symbolic_rate(&self) -> Option<&str> {
        self.rate_name.as_deref()
    }

    pub fn reactants(&self) -> &[(SpeciesId, u32)] {
        &self.reactants
    }

    pub fn products(&self) -> &[(SpeciesId, u32)] {
        &self.products
    }

    pub fn emit_tag(&self) -> Option<&str> {
        self.emit.as_deref()
    }

    pub fn emits_transmit(&self) -> bool {
        self.emit.as_deref() == Some(TRANSMIT)
    }

    /// Reactant coefficient χ for `species` (0 when absent).
    pub fn reactant_coefficient(&self, species: SpeciesId) -> u32 {
        coefficient(&self.reactants, species)
    }

    /// Product coefficient ξ for `species` (0 when absent).
    pub fn product_coefficient(&self, species: SpeciesId) -> u32 {
        coefficient(&self.products, species)
    }
}

fn add_term(terms: &mut Vec<(SpeciesId, u32)>, species: SpeciesId, coefficient: u32) {
    if coefficient == 0 {
        return;
    }
    match terms.iter_mut().find(|(s, _)| *s == species) {
        Some((_, c)) => *c += coefficient,
        None => terms.push((species, coefficient)),
    }
}

fn coefficient(terms: &[(SpeciesId, u32)], species: SpeciesId) -> u32 {
    terms
        .iter()
        .find(|(s, _)| *s == species)
        .map_or(0, |(_, c)| *c)
}

/// A set of species and the reactions between them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReactionNetwork {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
}

impl ReactionNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_species(
        &mut self,
        name: impl Into<String>,
        kind: SpeciesKind,
    ) -> Result<SpeciesId, ChemError> {
        let name = name.into();
        if self.species_id(&name).is_some() {
            return Err(ChemError::DuplicateSpecies(name));
        }
        self.species.push(Species { name, kind });
        Ok(SpeciesId(self.species.len() - 1))
    }

    /// Adds a reaction after checking it against the network invariants:
    /// every species is declared, the rate is positive, there is at least
    /// one reactant, and payload flow is conserved.
    pub fn add_reaction(&mut self, reaction: Reaction) -> Result<ReactionId, ChemError> {
        self.validate(&reaction)?;
        self.reactions.push(reaction);
        Ok(ReactionId(self.reactions.len() - 1))
    }

    fn validate(&self, r: &Reaction) -> Result<(), ChemError> {
        if self.reactions.iter().any(|x| x.name == r.name) {
            return Err(ChemError::DuplicateReaction(r.name.clone()));
        }
        for (s, _) in r.reactants.iter().chain(r.products.iter()) {
            if s.0 >= self.species.len() {
                return Err(ChemError::UnknownSpecies(s.0.to_string()));
            }
        }
        if !(r.rate.is_finite() && r.rate > 0.0) {
            return Err(ChemError::InvalidRate {
                reaction: r.name.clone(),
                rate: r.rate,
            });
        }
        if r.reactants.is_empty() {
            return Err(ChemError::NoReactants(r.name.clone()));
        }
        let (payload_in, payload_out) = self.payload_balance(r);
        let ok = match (payload_in, payload_out) {
            (0, 0) => true,
            (0, _) => false,
            (_, 1) => true,
            (_, 0) => r.emits_transmit(),
            _ => false,
        };
        if !ok {
            return Err(ChemError::PayloadFlow {
                reaction: r.name.clone(),
                consumed: payload_in,
                produced: payload_out,
            });
        }
        Ok(())
    }

    /// Number of payload-bearing molecules consumed and produced by `r`.
    pub fn payload_balance(&self, r: &Reaction) -> (u32, u32) {
        let count = |terms: &[(SpeciesId, u32)]| {
            terms
                .iter()
                .filter(|(s, _)| self.species[s.0].is_payload())
                .map(|(_, c)| *c)
                .sum::<u32>()
        };
        (count(&r.reactants), count(&r.products))
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn species_id(&self, name: &str) -> Option<SpeciesId> {
        self.species
            .iter()
            .position(|s| s.name == name)
            .map(SpeciesId)
    }

    pub fn reaction_id(&self, name: &str) -> Option<ReactionId> {
        self.reactions
            .iter()
            .position(|r| r.name == name)
            .map(ReactionId)
    }

    pub fn species_by_id(&self, id: SpeciesId) -> &Species {
        &self.species[id.0]
    }

    pub fn reaction(&self, id: ReactionId) -> &Reaction {
        &self.reactions[id.0]
    }

    pub fn species_ids(&self) -> impl Iterator<Item = SpeciesId> {
        (0..self.species.len()).map(SpeciesId)
    }

    pub fn reaction_ids(&self) -> impl Iterator<Item = ReactionId> {
        (0..self.reactions.len()).map(ReactionId)
    }
}
