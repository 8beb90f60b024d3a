use std::fmt;
use std::str::FromStr;

use super::Model;
use crate::error::{Error, Result};
use crate::fields::{Grid, State};
use crate::geometry::{mollified_jump, Motion, MovingDomain, Shape, VelocityField};

/// Shipped scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Gas slab `(0.3, 0.7) + 0.2 sin(πt)` in `B = (0, 1)`: a piston in a cylinder.
    Piston1d,
    /// Disk of radius 0.2 oscillating along `e₁` with amplitude 0.1 in `B = (0, 1)²`.
    Disk2d,
    /// Stationary slab `(0.1, 0.9)` in `B = (0, 1)` with `V ≡ 0`.
    FixedBox,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Piston1d, Scenario::Disk2d, Scenario::FixedBox];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Piston1d => "piston1d",
            Scenario::Disk2d => "disk2d",
            Scenario::FixedBox => "fixedbox",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Scenario::Disk2d => 2,
            _ => 1,
        }
    }

    pub fn grid(self, n: usize) -> Result<Grid<f64>> {
        match self {
            Scenario::Disk2d => Grid::new_2d([0.0, 0.0], [1.0, 1.0], [n, n]),
            _ => Grid::new_1d(0.0, 1.0, n),
        }
    }

    pub fn velocity_field(self) -> VelocityField<f64> {
        let pi = std::f64::consts::PI;
        match self {
            Scenario::Piston1d => VelocityField {
                dim: 1,
                motion: Motion::Oscillation { amplitude: [0.2, 0.0], angular: pi },
                center: [0.5, 0.0],
                plateau: 0.43,
                support: 0.47,
            },
            Scenario::Disk2d => VelocityField {
                dim: 2,
                motion: Motion::Oscillation { amplitude: [0.1, 0.0], angular: pi },
                center: [0.5, 0.5],
                plateau: 0.37,
                support: 0.42,
            },
            Scenario::FixedBox => VelocityField::stationary(1),
        }
    }

    pub fn initial_shape(self) -> Shape<f64> {
        match self {
            Scenario::Piston1d => Shape::Interval { left: 0.3, right: 0.7 },
            Scenario::Disk2d => Shape::Disk { center: [0.5, 0.5], radius: 0.2 },
            Scenario::FixedBox => Shape::Interval { left: 0.1, right: 0.9 },
        }
    }

    /// Moving domain checked against `grid` on `[0, t_end]`.
    pub fn domain(self, grid: &Grid<f64>, alpha: f64, t_end: f64) -> Result<MovingDomain<f64>> {
        let shape = self.initial_shape();
        let min_volume = 0.5 * shape.volume();
        MovingDomain::new(shape, self.velocity_field(), alpha, min_volume, grid, t_end)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario '{s}'")))
    }
}

/// Initial state: unit density in `Ω₀` and vacuum outside, fluid at rest,
/// unit temperature on all of `B`.
pub fn initial_data(model: &Model) -> Result<State> {
    let grid = &model.grid;
    let shape = model.domain.shape_at(0.0);
    let inside_box = match &shape {
        Shape::Interval { left, right } => *left > grid.lo()[0] && *right < grid.hi()[0],
        Shape::Disk { center, radius } => grid.distance_to_boundary(*center) > *radius,
    };
    if !inside_box {
        return Err(Error::Geometry("initial domain closure is not inside the box".into()));
    }
    let p = &model.params;
    let mut state = State::zeros(grid.len());
    for (k, x) in grid.centers().into_iter().enumerate() {
        let phi = shape.signed_distance(x);
        let rho = if phi < 0.0 { 1.0 } else { 0.0 };
        let a = model.eos.radiation * mollified_jump(phi, p.eta, p.alpha);
        state.rho[k] = rho;
        state.rhoe[k] = model.eos.internal_energy_unchecked(rho, 1.0, a);
    }
    Ok(state)
}
