use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use rand::Rng;

use super::registry::{ModuleKind, ModuleSpec};
use super::StackError;

/// Domain of every connector gene; values index providers modulo their
/// count.
pub const CONNECTOR_DOMAIN: (i64, i64) = (0, 4);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneRole {
    /// 0 absent, 1 present.
    Present,
    /// Index into the module's registered controls.
    Control(usize),
    /// Index into the module's required services.
    Connector(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneSpec {
    pub name: &'static str,
    pub role: GeneRole,
    pub lo: i64,
    pub hi: i64,
}

impl GeneSpec {
    /// `|A|`: the width of the domain.
    pub fn width(&self) -> i64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: i64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChromosomeLayout {
    pub kind: ModuleKind,
    pub genes: Vec<GeneSpec>,
}

impl ChromosomeLayout {
    fn new(spec: &ModuleSpec, optional: bool) -> Self {
        let mut genes = Vec::new();
        if optional {
            genes.push(GeneSpec { name: "present", role: GeneRole::Present, lo: 0, hi: 1 });
        }
        for (i, c) in spec.controls.iter().enumerate() {
            genes.push(GeneSpec { name: c.name, role: GeneRole::Control(i), lo: c.lo, hi: c.hi });
        }
        for i in 0..spec.requires.len() {
            let name = if i == 0 { "to" } else { "to2" };
            let (lo, hi) = CONNECTOR_DOMAIN;
            genes.push(GeneSpec { name, role: GeneRole::Connector(i), lo, hi });
        }
        ChromosomeLayout { kind: spec.kind, genes }
    }

    pub fn gene_index(&self, name: &str) -> Option<usize> {
        self.genes.iter().position(|g| g.name == name)
    }

    pub fn index_of(&self, role: GeneRole) -> Option<usize> {
        self.genes.iter().position(|g| g.role == role)
    }
}

/// Fixed-length genome layout: one chromosome per module kind, PubSub first
/// and Ethernet last.
#[derive(Debug, Clone, PartialEq)]
pub struct GenomeLayout {
    chromosomes: Vec<ChromosomeLayout>,
}

/// Gene values per chromosome, in layout order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Genome(pub Vec<Vec<i64>>);

impl Default for GenomeLayout {
    fn default() -> Self {
        Self::standard()
    }
}

impl GenomeLayout {
    pub fn standard() -> Self {
        let chromosomes = ModuleKind::ALL
            .iter()
            .map(|k| {
                let optional = !matches!(k, ModuleKind::PubSub | ModuleKind::Ethernet);
                ChromosomeLayout::new(k.spec(), optional)
            })
            .collect();
        GenomeLayout { chromosomes }
    }

    pub fn chromosomes(&self) -> &[ChromosomeLayout] {
        &self.chromosomes
    }

    pub fn position(&self, kind: ModuleKind) -> Option<usize> {
        self.chromosomes.iter().position(|c| c.kind == kind)
    }

    pub fn gene(&self, kind: ModuleKind, name: &str) -> Option<&GeneSpec> {
        let c = &self.chromosomes[self.position(kind)?];
        c.genes.get(c.gene_index(name)?)
    }

    /// Narrows (or widens) one gene's domain.
    pub fn set_domain(&mut self, kind: ModuleKind, name: &str, lo: i64, hi: i64) -> Result<(), StackError> {
        if lo > hi {
            return Err(StackError::Domain(format!("{kind}.{name}: empty range [{lo}, {hi}]")));
        }
        let c = self
            .position(kind)
            .map(|p| &mut self.chromosomes[p])
            .ok_or_else(|| StackError::Domain(format!("unknown module {kind}")))?;
        let i = c.gene_index(name).ok_or_else(|| StackError::Domain(format!("{kind} has no gene `{name}`")))?;
        c.genes[i].lo = lo;
        c.genes[i].hi = hi;
        Ok(())
    }

    pub fn gene_count(&self) -> usize {
        self.chromosomes.iter().map(|c| c.genes.len()).sum()
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Genome {
        Genome(
            self.chromosomes
                .iter()
                .map(|c| c.genes.iter().map(|g| rng.random_range(g.lo..=g.hi)).collect())
                .collect(),
        )
    }

    /// Checks shape and domains.
    pub fn check(&self, genome: &Genome) -> Result<(), StackError> {
        if genome.0.len() != self.chromosomes.len() {
            return Err(StackError::Shape(format!(
                "expected {} chromosomes, got {}",
                self.chromosomes.len(),
                genome.0.len()
            )));
        }
        for (c, values) in self.chromosomes.iter().zip(&genome.0) {
            if values.len() != c.genes.len() {
                return Err(StackError::Shape(format!(
                    "{}: expected {} genes, got {}",
                    c.kind,
                    c.genes.len(),
                    values.len()
                )));
            }
            for (g, v) in c.genes.iter().zip(values) {
                if !g.contains(*v) {
                    return Err(StackError::Domain(format!(
                        "{}.{} = {v} outside [{}, {}]",
                        c.kind, g.name, g.lo, g.hi
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, genome: &Genome, kind: ModuleKind, name: &str) -> Option<i64> {
        let p = self.position(kind)?;
        let i = self.chromosomes[p].gene_index(name)?;
        genome.0.get(p)?.get(i).copied()
    }

    pub fn set_value(&self, genome: &mut Genome, kind: ModuleKind, name: &str, v: i64) -> Result<(), StackError> {
        let p = self.position(kind).ok_or_else(|| StackError::Domain(format!("unknown module {kind}")))?;
        let c = &self.chromosomes[p];
        let i = c.gene_index(name).ok_or_else(|| StackError::Domain(format!("{kind} has no gene `{name}`")))?;
        if !c.genes[i].contains(v) {
            return Err(StackError::Domain(format!("{kind}.{name} = {v} outside its domain")));
        }
        genome.0[p][i] = v;
        Ok(())
    }

    pub fn is_present(&self, genome: &Genome, position: usize) -> bool {
        let c = &self.chromosomes[position];
        match c.index_of(GeneRole::Present) {
            Some(i) => genome.0[position][i] != 0,
            None => true,
        }
    }

    /// Line-oriented text form: one chromosome per line, `kind gene=value…`.
    pub fn to_text(&self, genome: &Genome) -> String {
        let mut out = String::new();
        for (c, values) in self.chromosomes.iter().zip(&genome.0) {
            out.push_str(c.kind.name());
            for (g, v) in c.genes.iter().zip(values) {
                let _ = write!(out, " {}={v}", g.name);
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text form. Chromosomes must appear in layout order; blank
    /// lines and `#` comments are ignored.
    pub fn parse(&self, text: &str) -> Result<Genome, StackError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut genome = Vec::with_capacity(self.chromosomes.len());
        for c in &self.chromosomes {
            let (line, l) = lines
                .next()
                .ok_or_else(|| StackError::Parse { line: 0, message: format!("missing chromosome `{}`", c.kind) })?;
            let err = |message: String| StackError::Parse { line, message };
            let mut words = l.split_whitespace();
            let kind = words.next().unwrap_or("");
            if kind != c.kind.name() {
                return Err(err(format!("expected `{}`, found `{kind}`", c.kind)));
            }
            let mut values: Vec<Option<i64>> = alloc::vec![None; c.genes.len()];
            for w in words {
                let (name, v) = w.split_once('=').ok_or_else(|| err(format!("expected gene=value, found `{w}`")))?;
                let i = c.gene_index(name).ok_or_else(|| err(format!("unknown gene `{name}` for {}", c.kind)))?;
                let v: i64 = v.parse().map_err(|_| err(format!("gene `{name}`: `{v}` is not an integer")))?;
                if !c.genes[i].contains(v) {
                    return Err(err(format!(
                        "gene `{name}` = {v} outside [{}, {}]",
                        c.genes[i].lo, c.genes[i].hi
                    )));
                }
                if values[i].replace(v).is_some() {
                    return Err(err(format!("gene `{name}` given twice")));
                }
            }
            let values = values
                .into_iter()
                .zip(&c.genes)
                .map(|(v, g)| v.ok_or_else(|| err(format!("missing gene `{}`", g.name))))
                .collect::<Result<Vec<_>, _>>()?;
            genome.push(values);
        }
        if let Some((line, l)) = lines.next() {
            return Err(StackError::Parse { line, message: format!("unexpected line `{l}`") });
        }
        Ok(Genome(genome))
    }
}

impl Genome {
    pub fn flat(&self) -> Vec<i64> {
        self.0.iter().flatten().copied().collect()
    }
}

impl core::fmt::Display for Genome {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|c| c.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))
            .collect();
        write!(f, "[{}]", parts.join("|"))
    }
}
