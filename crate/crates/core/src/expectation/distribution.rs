use super::error::{ExpectationError, ExpectationResult};
use crate::logic::{FactId, FactSet, Interpretation};
use serde::{Deserialize, Serialize};

/// Per-fact probability tables of a fully factorized distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorDistribution {
    offsets: Vec<usize>,
    masses: Vec<f64>,
}

impl FactorDistribution {
    pub fn from_pmfs(pmfs: Vec<Vec<f64>>) -> Self {
        let mut offsets = Vec::with_capacity(pmfs.len() + 1);
        let mut masses = Vec::new();
        offsets.push(0);
        for p in pmfs {
            masses.extend(p);
            offsets.push(masses.len());
        }
        FactorDistribution { offsets, masses }
    }

    pub fn uniform(facts: &FactSet) -> Self {
        Self::from_pmfs(
            facts
                .ids()
                .map(|id| {
                    let n = facts.range(id).len();
                    vec![1.0 / n as f64; n]
                })
                .collect(),
        )
    }

    pub fn point_mass(facts: &FactSet, interp: &Interpretation) -> Self {
        Self::from_pmfs(
            facts
                .ids()
                .map(|id| {
                    let mut p = vec![0.0; facts.range(id).len()];
                    p[interp.get(id) as usize] = 1.0;
                    p
                })
                .collect(),
        )
    }

    /// Number of facts.
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pmf(&self, id: FactId) -> &[f64] {
        &self.masses[self.offsets[id.index()]..self.offsets[id.index() + 1]]
    }

    pub fn set_pmf(&mut self, id: FactId, pmf: &[f64]) {
        let (a, b) = (self.offsets[id.index()], self.offsets[id.index() + 1]);
        assert_eq!(b - a, pmf.len(), "pmf length mismatch");
        self.masses[a..b].copy_from_slice(pmf);
    }

    /// Checks shape against `facts` and normalization within `tol`.
    pub fn validate(&self, facts: &FactSet, tol: f64) -> ExpectationResult<()> {
        if self.len() != facts.len() {
            return Err(ExpectationError::Shape(format!(
                "{} tables for {} facts",
                self.len(),
                facts.len()
            )));
        }
        for id in facts.ids() {
            let p = self.pmf(id);
            if p.len() != facts.range(id).len() {
                return Err(ExpectationError::Shape(format!(
                    "table of {} has {} entries",
                    facts.fact(id),
                    p.len()
                )));
            }
            let s: f64 = p.iter().sum();
            if p.iter().any(|x| !(*x >= 0.0)) || (s - 1.0).abs() > tol {
                return Err(ExpectationError::Shape(format!(
                    "table of {} is not a distribution (sum {s})",
                    facts.fact(id)
                )));
            }
        }
        Ok(())
    }

    /// Most probable value per fact; ties go to the earliest range value.
    pub fn argmax(&self) -> Interpretation {
        Interpretation::new(
            (0..self.len())
                .map(|i| argmax(self.pmf(FactId(i as u32))) as u32)
                .collect(),
        )
    }

    /// q(interp) as a product of per-fact masses.
    pub fn probability(&self, interp: &Interpretation) -> f64 {
        (0..self.len())
            .map(|i| {
                let id = FactId(i as u32);
                self.pmf(id)[interp.get(id) as usize]
            })
            .product()
    }
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in p.iter().enumerate() {
        if *x > p[best] {
            best = i;
        }
    }
    best
}

impl FactorDistribution {
    /// Point mass at `interp`, shaped like `like`.
    pub fn point_mass_of(interp: &Interpretation, like: &FactorDistribution) -> Self {
        let mut out = like.clone();
        for i in 0..like.len() {
            let id = FactId(i as u32);
            let (a, b) = (out.offsets[i], out.offsets[i + 1]);
            out.masses[a..b].iter_mut().for_each(|x| *x = 0.0);
            out.masses[a + interp.get(id) as usize] = 1.0;
        }
        out
    }
}
