//! Transport instances on the unit square and their JSON file format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::{CostDescriptor, CostMatrix, Sampling};
use crate::error::Result;
use crate::extended::ExtendedReal;
use crate::grid::{DiscreteMeasure, Grid, MarginalSpec};
use crate::negligibility::SetDescriptor;

/// Continuum values of an instance, where known.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KnownValues {
    #[serde(rename = "P_c", default, skip_serializing_if = "Option::is_none")]
    pub primal: Option<ExtendedReal>,
    #[serde(rename = "D_c", default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<ExtendedReal>,
    #[serde(rename = "P_rectified", default, skip_serializing_if = "Option::is_none")]
    pub rectified_primal: Option<ExtendedReal>,
}

/// Cost override on an L-negligible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Modification {
    pub set: SetDescriptor,
    pub value: ExtendedReal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub marginal_x: MarginalSpec,
    pub marginal_y: MarginalSpec,
    pub cost: CostDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_rectified: Option<CostDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_values: Option<KnownValues>,
    #[serde(default, skip_serializing_if = "is_default_sampling")]
    pub sampling: Sampling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modification: Option<Modification>,
}

fn is_default_sampling(s: &Sampling) -> bool {
    *s == Sampling::Atom
}

/// Grid realization of an instance.
#[derive(Debug, Clone)]
pub struct Discretized {
    pub grid: Grid,
    pub cost: CostMatrix,
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
}

impl Instance {
    pub fn new(name: impl Into<String>, cost: CostDescriptor) -> Self {
        Instance {
            name: name.into(),
            marginal_x: MarginalSpec::Uniform,
            marginal_y: MarginalSpec::Uniform,
            cost,
            known_rectified: None,
            known_values: None,
            sampling: Sampling::Atom,
            modification: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.marginal_x.validate()?;
        self.marginal_y.validate()?;
        self.cost.validate()?;
        if let Some(r) = &self.known_rectified {
            r.validate()?;
        }
        if let Some(m) = &self.modification {
            m.set.validate()?;
        }
        Ok(())
    }

    /// Cost descriptor with the modification (if any) appended as override regions.
    pub fn effective_cost(&self) -> CostDescriptor {
        let mut cost = self.cost.clone();
        if let Some(m) = &self.modification {
            for kind in m.set.to_regions() {
                cost.push(kind, m.value);
            }
        }
        cost
    }

    pub fn discretize(&self, n: usize) -> Result<Discretized> {
        self.discretize_with(n, self.sampling)
    }

    pub fn discretize_with(&self, n: usize, sampling: Sampling) -> Result<Discretized> {
        self.validate()?;
        let grid = Grid::new(n)?;
        Ok(Discretized {
            grid,
            cost: self.effective_cost().discretize(grid, sampling)?,
            mu: self.marginal_x.discretize(grid)?,
            nu: self.marginal_y.discretize(grid)?,
        })
    }

    /// The known rectification sampled on the grid of resolution `n`.
    pub fn rectified_matrix(&self, n: usize) -> Result<Option<CostMatrix>> {
        let grid = Grid::new(n)?;
        self.known_rectified
            .as_ref()
            .map(|r| r.discretize(grid, self.sampling))
            .transpose()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Instance::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Free-function form of [`Instance::discretize`].
pub fn discretize(instance: &Instance, n: usize) -> Result<(CostMatrix, DiscreteMeasure, DiscreteMeasure)> {
    let d = instance.discretize(n)?;
    Ok((d.cost, d.mu, d.nu))
}

impl Discretized {
    pub fn n(&self) -> usize {
        self.grid.n()
    }
}
