//! Model descriptors tying together grid, potentials, coupling
//! strength, and a disorder configuration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::HermitianMatrix;
use crate::operator::{assemble_bloch_hamiltonian, CellGrid, OperatorError, QuasiMomentum};
use crate::potential::{DisorderConfiguration, PeriodicBackground, PotentialError, SingleSite};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("single-site support clearance {clearance} is below the grid spacing {spacing}")]
    SupportTooCloseToBoundary { clearance: f64, spacing: f64 },
}

/// Everything but λ and the disorder configuration: the model family
/// H_{λ,ω} = -Δ + W_per + λ Σ ω_γ f(·-γ) at fixed W_per, f, bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFamily {
    pub dimension: usize,
    pub points_per_unit: usize,
    pub background: PeriodicBackground,
    pub single_site: SingleSite,
    /// (ω⁻, ω⁺)
    pub bounds: (f64, f64),
}

impl ModelFamily {
    pub fn new(
        dimension: usize,
        points_per_unit: usize,
        background: PeriodicBackground,
        single_site: SingleSite,
        bounds: (f64, f64),
    ) -> Result<Self, ModelError> {
        let spacing = 1.0 / points_per_unit as f64;
        let clearance = single_site.boundary_clearance();
        if clearance < spacing {
            return Err(ModelError::SupportTooCloseToBoundary { clearance, spacing });
        }
        Ok(Self {
            dimension,
            points_per_unit,
            background,
            single_site,
            bounds,
        })
    }

    pub fn model(
        &self,
        lambda: f64,
        config: DisorderConfiguration,
    ) -> Result<Model, ModelError> {
        let grid = CellGrid::new(self.dimension, config.period.clone(), self.points_per_unit)?;
        Ok(Model {
            family: self.clone(),
            lambda,
            config,
            grid,
        })
    }

    /// Model at the constant extreme realization ω ≡ ω⁻ or ω ≡ ω⁺.
    pub fn extreme_model(&self, lambda: f64, extreme: Extreme) -> Result<Model, ModelError> {
        let value = match extreme {
            Extreme::Lower => self.bounds.0,
            Extreme::Upper => self.bounds.1,
        };
        let config = DisorderConfiguration::constant(self.dimension, value, self.bounds)?;
        self.model(lambda, config)
    }

    /// Family with the single site negated (f -> -f).
    pub fn negated_site(&self) -> Self {
        Self {
            single_site: self.single_site.negated(),
            ..self.clone()
        }
    }
}

/// Which constant extreme realization a prediction refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extreme {
    /// ω ≡ ω⁻
    Lower,
    /// ω ≡ ω⁺
    Upper,
}

impl std::fmt::Display for Extreme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Extreme::Lower => write!(f, "omega_minus"),
            Extreme::Upper => write!(f, "omega_plus"),
        }
    }
}

/// A fully specified operator: family + λ + configuration, discretized
/// on the supercell matching the configuration period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub family: ModelFamily,
    pub lambda: f64,
    pub config: DisorderConfiguration,
    grid: CellGrid,
}

impl Model {
    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    pub fn dimension(&self) -> usize {
        self.family.dimension
    }

    /// Half-widths of the supercell Brillouin zone, π/K_a per axis.
    pub fn bz_halfwidths(&self) -> Vec<f64> {
        self.grid
            .cell()
            .iter()
            .map(|&k| std::f64::consts::PI / k as f64)
            .collect()
    }

    pub fn hamiltonian(&self, theta: &QuasiMomentum) -> Result<HermitianMatrix, OperatorError> {
        assemble_bloch_hamiltonian(
            &self.grid,
            &self.family.background,
            &self.family.single_site,
            self.lambda,
            &self.config,
            theta,
        )
    }

    /// Same family/config at a different coupling strength.
    pub fn with_lambda(&self, lambda: f64) -> Model {
        Model {
            lambda,
            ..self.clone()
        }
    }

    /// Same family/λ at a different configuration (rebuilds the grid).
    pub fn with_config(&self, config: DisorderConfiguration) -> Result<Model, ModelError> {
        self.family.model(self.lambda, config)
    }

    /// Same model on a doubled or halved spatial grid (for Richardson
    /// style resolution estimates).
    pub fn with_points_per_unit(&self, points_per_unit: usize) -> Result<Model, ModelError> {
        let mut family = self.family.clone();
        family.points_per_unit = points_per_unit;
        family.model(self.lambda, self.config.clone())
    }
}
