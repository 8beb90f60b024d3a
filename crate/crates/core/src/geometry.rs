//! Prescribed moving domain `Ω_t = X(t, Ω_0)` inside the reference box, with
//! signed distance, interface quadrature and mollified indicator fields.
//!
//! Sign convention: the signed distance is negative inside `Ω_t`.

use crate::error::{Error, Result};
use crate::fields::{ordered_sum, Grid};
use crate::scalar::{Point, Real};

/// Rigid motion carried by the prescribed velocity field on its plateau.
#[derive(Clone, Debug, PartialEq)]
pub enum Motion<T> {
    Stationary,
    /// `V = c`.
    Translation { velocity: Point<T> },
    /// Displacement `A sin(ω t)`, i.e. `V = A ω cos(ω t)`.
    Oscillation { amplitude: Point<T>, angular: T },
    /// Rigid rotation with angular rate `rate` about `center` (2D only).
    Rotation { rate: T },
}

/// Compactly supported velocity field `V(t, x) = g(|x - c|) W(t, x)` where `W`
/// is a rigid motion and `g` is a cosine cutoff, equal to one up to `plateau`
/// and vanishing beyond `support`.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField<T> {
    pub dim: usize,
    pub motion: Motion<T>,
    pub center: Point<T>,
    pub plateau: T,
    pub support: T,
}

impl<T: Real> VelocityField<T> {
    pub fn stationary(dim: usize) -> Self {
        Self { dim, motion: Motion::Stationary, center: [T::zero(); 2], plateau: T::zero(), support: T::zero() }
    }

    pub fn new(dim: usize, motion: Motion<T>, center: Point<T>, plateau: T, support: T) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Geometry(format!("unsupported dimension {dim}")));
        }
        if matches!(motion, Motion::Rotation { .. }) && dim != 2 {
            return Err(Error::Geometry("rotation requires two dimensions".into()));
        }
        if !(plateau > T::zero() && support > plateau) {
            return Err(Error::Geometry("cutoff requires 0 < plateau < support".into()));
        }
        Ok(Self { dim, motion, center, plateau, support })
    }

    fn radius(&self, x: Point<T>) -> T {
        let dx = x[0] - self.center[0];
        let dy = if self.dim == 2 { x[1] - self.center[1] } else { T::zero() };
        (dx * dx + dy * dy).sqrt()
    }

    fn cutoff(&self, x: Point<T>) -> T {
        let r = self.radius(x);
        if r <= self.plateau {
            T::one()
        } else if r >= self.support {
            T::zero()
        } else {
            let s = (r - self.plateau) / (self.support - self.plateau);
            T::lit(0.5) * (T::one() + (T::PI() * s).cos())
        }
    }

    fn rigid(&self, t: T, x: Point<T>) -> Point<T> {
        match &self.motion {
            Motion::Stationary => [T::zero(); 2],
            Motion::Translation { velocity } => *velocity,
            Motion::Oscillation { amplitude, angular } => {
                let c = *angular * (*angular * t).cos();
                [amplitude[0] * c, amplitude[1] * c]
            }
            Motion::Rotation { rate } => {
                let dx = x[0] - self.center[0];
                let dy = x[1] - self.center[1];
                [-*rate * dy, *rate * dx]
            }
        }
    }

    /// Evaluates `V(t, x)`.
    pub fn velocity(&self, t: T, x: Point<T>) -> Point<T> {
        if matches!(self.motion, Motion::Stationary) {
            return [T::zero(); 2];
        }
        let g = self.cutoff(x);
        if g == T::zero() {
            return [T::zero(); 2];
        }
        let w = self.rigid(t, x);
        [g * w[0], g * w[1]]
    }

    /// `∂_t V(t, x)`.
    pub fn time_derivative(&self, t: T, x: Point<T>) -> Point<T> {
        match &self.motion {
            Motion::Oscillation { amplitude, angular } => {
                let g = self.cutoff(x);
                let c = -*angular * *angular * (*angular * t).sin() * g;
                [amplitude[0] * c, amplitude[1] * c]
            }
            _ => [T::zero(); 2],
        }
    }

    /// Rigid map of a plateau point from `t0` to `t1`.
    pub fn rigid_map(&self, x: Point<T>, t0: T, t1: T) -> Point<T> {
        match &self.motion {
            Motion::Stationary => x,
            Motion::Translation { velocity } => {
                let dt = t1 - t0;
                [x[0] + velocity[0] * dt, x[1] + velocity[1] * dt]
            }
            Motion::Oscillation { amplitude, angular } => {
                let d = (*angular * t1).sin() - (*angular * t0).sin();
                [x[0] + amplitude[0] * d, x[1] + amplitude[1] * d]
            }
            Motion::Rotation { rate } => {
                let th = *rate * (t1 - t0);
                let (s, c) = th.sin_cos();
                let dx = x[0] - self.center[0];
                let dy = x[1] - self.center[1];
                [self.center[0] + c * dx - s * dy, self.center[1] + s * dx + c * dy]
            }
        }
    }

    /// Largest `|div V|` over cells within `tube` of `Γ_t`, by centred
    /// differences of step `h`.
    pub fn max_divergence_near(&self, domain: &MovingDomain<T>, grid: &Grid<T>, t: T, tube: T) -> T {
        let h = grid.h();
        let mut worst = T::zero();
        for x in grid.centers() {
            if domain.signed_distance(t, x).abs() > tube {
                continue;
            }
            let mut div = T::zero();
            for a in 0..self.dim {
                let mut xp = x;
                let mut xm = x;
                xp[a] = xp[a] + h;
                xm[a] = xm[a] - h;
                div = div + (self.velocity(t, xp)[a] - self.velocity(t, xm)[a]) / (h + h);
            }
            worst = worst.max(div.abs());
        }
        worst
    }
}

/// Integrates `dX/dt = V(t, X)` with classical RK4 from `t0` to `t1`.
pub fn advance_flow_map<T: Real>(
    field: &VelocityField<T>,
    grid: &Grid<T>,
    points: &[Point<T>],
    t0: T,
    t1: T,
    dt: T,
) -> Result<Vec<Point<T>>> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidArgument("flow map step must be positive".into()));
    }
    if t1 < t0 {
        return Err(Error::InvalidArgument("flow map needs t0 <= t1".into()));
    }
    if let Some(p) = points.iter().find(|p| !grid.contains(**p)) {
        return Err(Error::Geometry(format!("point {p:?} lies outside the box")));
    }
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let rhs = |t: T, x: Point<T>| field.velocity(t, x);
    let axpy = |x: Point<T>, k: Point<T>, s: T| [x[0] + s * k[0], x[1] + s * k[1]];
    let mut out = points.to_vec();
    for x in out.iter_mut() {
        let mut t = t0;
        while t < t1 {
            let step = dt.min(t1 - t);
            let k1 = rhs(t, *x);
            let k2 = rhs(t + half * step, axpy(*x, k1, half * step));
            let k3 = rhs(t + half * step, axpy(*x, k2, half * step));
            let k4 = rhs(t + step, axpy(*x, k3, step));
            for a in 0..2 {
                x[a] = x[a] + step * sixth * (k1[a] + (k2[a] + k3[a]) * T::lit(2.0) + k4[a]);
            }
            t = t + step;
        }
    }
    Ok(out)
}

/// Initial domain shape.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape<T> {
    Interval { left: T, right: T },
    Disk { center: Point<T>, radius: T },
}

impl<T: Real> Shape<T> {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Interval { .. } => 1,
            Shape::Disk { .. } => 2,
        }
    }

    pub fn signed_distance(&self, x: Point<T>) -> T {
        match self {
            Shape::Interval { left, right } => (*left - x[0]).max(x[0] - *right),
            Shape::Disk { center, radius } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                (dx * dx + dy * dy).sqrt() - *radius
            }
        }
    }

    pub fn normal(&self, x: Point<T>) -> Point<T> {
        match self {
            Shape::Interval { left, right } => {
                let mid = T::lit(0.5) * (*left + *right);
                if x[0] < mid { [-T::one(), T::zero()] } else { [T::one(), T::zero()] }
            }
            Shape::Disk { center, .. } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                let r = (dx * dx + dy * dy).sqrt();
                if r > T::zero() { [dx / r, dy / r] } else { [T::one(), T::zero()] }
            }
        }
    }

    pub fn volume(&self) -> T {
        match self {
            Shape::Interval { left, right } => *right - *left,
            Shape::Disk { radius, .. } => T::PI() * *radius * *radius,
        }
    }

    /// Radius about `c` of the smallest ball containing the shape.
    pub fn reach(&self, c: Point<T>) -> T {
        match self {
            Shape::Interval { left, right } => (c[0] - *left).abs().max((*right - c[0]).abs()),
            Shape::Disk { center, radius } => {
                let dx = center[0] - c[0];
                let dy = center[1] - c[1];
                (dx * dx + dy * dy).sqrt() + *radius
            }
        }
    }

    pub fn moved(&self, field: &VelocityField<T>, t: T) -> Self {
        match self {
            Shape::Interval { left, right } => {
                let l = field.rigid_map([*left, T::zero()], T::zero(), t)[0];
                let r = field.rigid_map([*right, T::zero()], T::zero(), t)[0];
                Shape::Interval { left: l, right: r }
            }
            Shape::Disk { center, radius } => {
                Shape::Disk { center: field.rigid_map(*center, T::zero(), t), radius: *radius }
            }
        }
    }
}

/// Moving fluid domain transported by the analytic rigid flow map.
#[derive(Clone, Debug)]
pub struct MovingDomain<T> {
    pub initial: Shape<T>,
    pub field: VelocityField<T>,
    /// Mollification width of the indicator fields.
    pub alpha: T,
    /// Declared lower bound on `|Ω_t|`.
    pub min_volume: T,
}

impl<T: Real> MovingDomain<T> {
    /// Builds the domain and checks, on `samples` instants in `[0, t_final]`, that
    /// `Ω_t` stays in the box, that the flow map is rigid on it (shape plus a
    /// `4h` tube inside the cutoff plateau), and that `|Ω_t| >= min_volume`.
    pub fn new(
        initial: Shape<T>,
        field: VelocityField<T>,
        alpha: T,
        min_volume: T,
        grid: &Grid<T>,
        t_final: T,
    ) -> Result<Self> {
        if initial.dim() != grid.dim() || field.dim != grid.dim() {
            return Err(Error::Geometry("shape, velocity field and grid dimensions differ".into()));
        }
        if alpha < grid.h() {
            return Err(Error::Geometry("mollification width must be at least the grid spacing".into()));
        }
        let domain = Self { initial, field, alpha, min_volume };
        let tube = T::lit(4.0) * grid.h();
        if !matches!(domain.field.motion, Motion::Stationary) {
            let margin = grid.distance_to_boundary(domain.field.center) - domain.field.support;
            if margin < tube * (T::one() - T::lit(1e-9)) {
                return Err(Error::Geometry("velocity support must stay 4h away from the box boundary".into()));
            }
        }
        let samples = 64;
        for s in 0..=samples {
            let t = t_final * T::from_usize(s).unwrap() / T::from_usize(samples).unwrap();
            let shape = domain.shape_at(t);
            if shape.volume() < domain.min_volume {
                return Err(Error::Geometry(format!("domain volume degenerates at t = {t}")));
            }
            let c = domain.field.center;
            if !matches!(domain.field.motion, Motion::Stationary) && shape.reach(c) + tube > domain.field.plateau {
                return Err(Error::Geometry(format!("domain leaves the rigid plateau of V at t = {t}")));
            }
            let inside = match &shape {
                Shape::Interval { left, right } => {
                    *left - grid.lo()[0] > T::zero() && grid.hi()[0] - *right > T::zero()
                }
                Shape::Disk { center, radius } => grid.distance_to_boundary(*center) > *radius,
            };
            if !inside {
                return Err(Error::Geometry(format!("domain closure leaves the box at t = {t}")));
            }
        }
        Ok(domain)
    }

    pub fn shape_at(&self, t: T) -> Shape<T> {
        self.initial.moved(&self.field, t)
    }

    pub fn signed_distance(&self, t: T, x: Point<T>) -> T {
        self.shape_at(t).signed_distance(x)
    }

    /// Outward unit normal `∇φ / |∇φ|`.
    pub fn normal(&self, t: T, x: Point<T>) -> Point<T> {
        self.shape_at(t).normal(x)
    }

    pub fn volume(&self, t: T) -> T {
        self.shape_at(t).volume()
    }

    /// Signed distances at every cell centre.
    pub fn distance_field(&self, t: T, grid: &Grid<T>) -> Vec<T> {
        let shape = self.shape_at(t);
        grid.centers().into_iter().map(|x| shape.signed_distance(x)).collect()
    }

    /// Volume of `Ω_t` by counting cells with negative signed distance.
    pub fn counted_volume(&self, t: T, grid: &Grid<T>) -> T {
        let n = self.distance_field(t, grid).iter().filter(|&&d| d < T::zero()).count();
        T::from_usize(n).unwrap() * grid.cell_volume()
    }
}

/// Cosine-smeared Dirac delta of support `|φ| < h` (bandwidth `2h`).
#[inline]
pub fn smeared_delta<T: Real>(phi: T, h: T) -> T {
    if phi.abs() >= h {
        T::zero()
    } else {
        (T::one() + (T::PI() * phi / h).cos()) / (h + h)
    }
}

/// Weight of a cell in the solid region `B \ Ω_t`: zero for `φ <= 0`, a smeared
/// Heaviside ramp on `0 < φ < h`, one beyond. Fluid weight is `1 - solid_weight`.
#[inline]
pub fn solid_weight<T: Real>(phi: T, h: T) -> T {
    if phi <= T::zero() {
        T::zero()
    } else if phi >= h {
        T::one()
    } else {
        let s = phi / h;
        T::lit(0.5) * (T::one() + s + (T::PI() * s).sin() / T::PI())
    }
}

/// `∫_{Γ_t} f dS` by the smeared-delta quadrature `Σ f δ_h(φ) |∇φ| h^d`.
pub fn surface_integral<T: Real>(domain: &MovingDomain<T>, t: T, f: &[T], grid: &Grid<T>) -> Result<T> {
    if f.len() != grid.len() {
        return Err(Error::InvalidArgument("surface integrand does not match grid".into()));
    }
    let h = grid.h();
    let phi = domain.distance_field(t, grid);
    let mut terms = Vec::with_capacity(grid.len());
    for (k, (&p, &fk)) in phi.iter().zip(f).enumerate() {
        let w = smeared_delta(p, h);
        if w > T::zero() {
            if grid.is_boundary_cell(k) {
                return Err(Error::Geometry(format!("interface band touches the box boundary at cell {k}")));
            }
            terms.push(fk * w);
        }
    }
    Ok(grid.integrate(terms))
}

/// Exact and mollified jump function with contrast `A` outside `Ω_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorField<T> {
    pub contrast: T,
    pub exact: Vec<T>,
    pub smooth: Vec<T>,
}

/// Cosine ramp from 1 at `φ = 0` down to `A` at `φ = α`.
#[inline]
pub fn mollified_jump<T: Real>(phi: T, contrast: T, alpha: T) -> T {
    if phi <= T::zero() {
        T::one()
    } else if phi >= alpha {
        contrast
    } else {
        contrast + (T::one() - contrast) * T::lit(0.5) * (T::one() + (T::PI() * phi / alpha).cos())
    }
}

pub fn build_indicator<T: Real>(
    domain: &MovingDomain<T>,
    t: T,
    contrast: T,
    alpha: T,
    grid: &Grid<T>,
) -> Result<IndicatorField<T>> {
    if !(contrast > T::zero()) || contrast > T::one() {
        return Err(Error::InvalidArgument("indicator contrast must lie in (0, 1]".into()));
    }
    if alpha < grid.h() {
        return Err(Error::InvalidArgument("mollification width below grid spacing".into()));
    }
    let phi = domain.distance_field(t, grid);
    Ok(IndicatorField {
        contrast,
        exact: phi.iter().map(|&p| if p <= T::zero() { T::one() } else { contrast }).collect(),
        smooth: phi.iter().map(|&p| mollified_jump(p, contrast, alpha)).collect(),
    })
}

/// `Σ |χ^α - χ| h^d`.
pub fn indicator_l1_gap<T: Real>(ind: &IndicatorField<T>, grid: &Grid<T>) -> T {
    grid.integrate(ind.smooth.iter().zip(&ind.exact).map(|(a, b)| (*a - *b).abs()))
}

/// Sum with the shared fixed-order reduction, re-exported for callers that
/// weight cells by `solid_weight`.
pub fn solid_integral<T: Real>(phi: &[T], values: &[T], grid: &Grid<T>) -> T {
    let h = grid.h();
    ordered_sum(phi.iter().zip(values).map(|(&p, &v)| solid_weight(p, h) * v)) * grid.cell_volume()
}
