//! Constitutive relations: molecular + radiative equation of state with
//! artificial pressure, Newtonian stress, Fourier conductivity, and the
//! Helmholtz function used by the dissipation inequality.
//!
//! The molecular pressure is `p_M = ϑ^{5/2} P(ρ ϑ^{-3/2})` with the structure
//! function `P(Z) = c_lin Z + c_deg Z^{5/3}`, and the monatomic relation
//! `p_M = (2/3) ρ e_M` holds globally. With `c_lin = c_deg = 1` this gives
//! `p_M = ρϑ + ρ^{5/3}`, `e_M = (3/2)(ϑ + ρ^{2/3})` and `s_M = (3/2) ln ϑ - ln ρ`.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Equation of state parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct EosModel<T> {
    /// Coefficient of `Z` in the structure function (`P'(0)`).
    pub p_linear: T,
    /// Coefficient of `Z^{5/3}`; equals `p_∞ = lim P(Z)/Z^{5/3}`.
    pub p_degenerate: T,
    /// Radiation constant `a`.
    pub radiation: T,
    /// Artificial pressure exponent `β`.
    pub beta: T,
}

impl<T: Real> Default for EosModel<T> {
    fn default() -> Self {
        Self { p_linear: T::one(), p_degenerate: T::one(), radiation: T::one(), beta: T::lit(4.0) }
    }
}

fn five_thirds<T: Real>() -> T {
    T::lit(5.0 / 3.0)
}

fn check_temperature<T: Real>(theta: T) -> Result<()> {
    if theta > T::zero() {
        Ok(())
    } else {
        Err(Error::Thermo(format!("temperature must be positive, got {theta}")))
    }
}

fn check_density<T: Real>(rho: T, strict: bool) -> Result<()> {
    if rho > T::zero() || (!strict && rho == T::zero()) {
        Ok(())
    } else {
        Err(Error::Thermo(format!("invalid density {rho}")))
    }
}

impl<T: Real> EosModel<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_linear > T::zero() && self.p_degenerate > T::zero()) {
            return Err(Error::Thermo("structure function coefficients must be positive".into()));
        }
        if !(self.radiation > T::zero()) {
            return Err(Error::Thermo("radiation constant must be positive".into()));
        }
        if self.beta < T::lit(4.0) {
            return Err(Error::Thermo("artificial pressure exponent must satisfy β ≥ 4".into()));
        }
        Ok(())
    }

    /// `P(Z)`.
    pub fn structure(&self, z: T) -> T {
        self.p_linear * z + self.p_degenerate * z.powf(five_thirds())
    }

    /// `P'(Z)`.
    pub fn structure_prime(&self, z: T) -> T {
        self.p_linear + five_thirds::<T>() * self.p_degenerate * z.powf(T::lit(2.0 / 3.0))
    }

    /// `p_∞`.
    pub fn p_infinity(&self) -> T {
        self.p_degenerate
    }

    /// `p_M(ρ, ϑ)` in closed form.
    pub fn molecular_pressure(&self, rho: T, theta: T) -> T {
        self.p_linear * rho * theta + self.p_degenerate * rho.powf(five_thirds())
    }

    /// `p_M` evaluated through the structure function, `ϑ^{5/2} P(ρ ϑ^{-3/2})`.
    pub fn molecular_pressure_from_structure(&self, rho: T, theta: T) -> T {
        theta.powf(T::lit(2.5)) * self.structure(rho / theta.powf(T::lit(1.5)))
    }

    /// `ρ e_M = (3/2) p_M`.
    pub fn molecular_energy_density(&self, rho: T, theta: T) -> T {
        T::lit(1.5) * self.molecular_pressure(rho, theta)
    }

    /// `ρ s_M`, normalised so that `s_M(1, 1) = 0`; vanishes at `ρ = 0`.
    pub fn molecular_entropy_density(&self, rho: T, theta: T) -> T {
        if rho == T::zero() {
            return T::zero();
        }
        self.p_linear * rho * (T::lit(1.5) * theta.ln() - rho.ln())
    }

    /// Full pressure `p_M + (a_loc/3) ϑ⁴ + δ ρ^β`.
    pub fn pressure(&self, rho: T, theta: T, a_loc: T, delta: T) -> Result<T> {
        check_temperature(theta)?;
        check_density(rho, false)?;
        Ok(self.pressure_unchecked(rho, theta, a_loc, delta))
    }

    #[inline]
    pub fn pressure_unchecked(&self, rho: T, theta: T, a_loc: T, delta: T) -> T {
        self.molecular_pressure(rho, theta)
            + a_loc / T::lit(3.0) * theta.powi(4)
            + delta * rho.powf(self.beta)
    }

    /// Internal energy density `ρ e = (3/2) p_M + a_loc ϑ⁴`.
    pub fn internal_energy(&self, rho: T, theta: T, a_loc: T) -> Result<T> {
        check_temperature(theta)?;
        check_density(rho, false)?;
        Ok(self.internal_energy_unchecked(rho, theta, a_loc))
    }

    #[inline]
    pub fn internal_energy_unchecked(&self, rho: T, theta: T, a_loc: T) -> T {
        self.molecular_energy_density(rho, theta) + a_loc * theta.powi(4)
    }

    /// Entropy density `ρ s = ρ s_M + (4/3) a_loc ϑ³`; requires `ρ > 0`.
    pub fn entropy(&self, rho: T, theta: T, a_loc: T) -> Result<T> {
        check_temperature(theta)?;
        check_density(rho, true)?;
        Ok(self.entropy_density(rho, theta, a_loc))
    }

    /// Entropy density extended continuously to `ρ = 0`.
    #[inline]
    pub fn entropy_density(&self, rho: T, theta: T, a_loc: T) -> T {
        self.molecular_entropy_density(rho, theta) + T::lit(4.0 / 3.0) * a_loc * theta.powi(3)
    }

    /// Helmholtz function `H₁ = ρ(e - s)`.
    pub fn helmholtz(&self, rho: T, theta: T, a_loc: T) -> Result<T> {
        check_temperature(theta)?;
        check_density(rho, true)?;
        Ok(self.helmholtz_density(rho, theta, a_loc))
    }

    #[inline]
    pub fn helmholtz_density(&self, rho: T, theta: T, a_loc: T) -> T {
        self.internal_energy_unchecked(rho, theta, a_loc) - self.entropy_density(rho, theta, a_loc)
    }

    /// `∂H₁/∂ρ` at `ϑ = 1`.
    pub fn helmholtz_density_slope_at_unit_temperature(&self, rho: T) -> T {
        T::lit(1.5) * self.p_linear
            + T::lit(2.5) * self.p_degenerate * rho.powf(T::lit(2.0 / 3.0))
            + self.p_linear * (rho.ln() + T::one())
    }

    /// `H₁(ρ,ϑ) - (ρ - ρ̄) ∂_ρH₁(ρ̄,1) - H₁(ρ̄,1)`; nonnegative by thermodynamic stability.
    pub fn relative_helmholtz(&self, rho: T, theta: T, rho_bar: T, a_loc: T) -> T {
        self.helmholtz_density(rho, theta, a_loc)
            - (rho - rho_bar) * self.helmholtz_density_slope_at_unit_temperature(rho_bar)
            - self.helmholtz_density(rho_bar, T::one(), a_loc)
    }

    /// Artificial pressure energy `δ/(β-1) ρ^β`.
    pub fn artificial_energy(&self, rho: T, delta: T) -> T {
        delta / (self.beta - T::one()) * rho.powf(self.beta)
    }

    /// Lower bound `(3/2) p_∞ ρ^{5/3}` of the molecular energy density.
    pub fn cold_floor(&self, rho: T) -> T {
        T::lit(1.5) * self.p_infinity() * rho.powf(five_thirds())
    }

    /// Isothermal `∂p/∂ρ`.
    pub fn dp_drho(&self, rho: T, theta: T, delta: T) -> T {
        let art = if rho > T::zero() { delta * self.beta * rho.powf(self.beta - T::one()) } else { T::zero() };
        self.p_linear * theta + five_thirds::<T>() * self.p_degenerate * rho.powf(T::lit(2.0 / 3.0)) + art
    }

    /// `∂p/∂ϑ` at fixed density.
    pub fn dp_dtheta(&self, rho: T, theta: T, a_loc: T) -> T {
        self.p_linear * rho + T::lit(4.0 / 3.0) * a_loc * theta.powi(3)
    }

    /// `∂(ρe)/∂ϑ` at fixed density.
    pub fn heat_capacity(&self, rho: T, theta: T, a_loc: T) -> T {
        T::lit(1.5) * self.p_linear * rho + T::lit(4.0) * a_loc * theta.powi(3)
    }

    /// Unique `ϑ > 0` with `ρe(ρ, ϑ, a_loc) = energy`.
    pub fn invert_temperature(&self, rho: T, energy: T, a_loc: T) -> Result<T> {
        check_density(rho, false)?;
        if rho == T::zero() && !(a_loc > T::zero()) {
            return Err(Error::Thermo("temperature undetermined in vacuum without radiation".into()));
        }
        let cold = self.cold_floor(rho);
        if !(energy > cold) {
            return Err(Error::Thermo(format!("energy {energy} not above cold floor {cold}")));
        }
        let target = energy - cold;
        // g(ϑ) = (3/2) c ρ ϑ + a ϑ⁴ - target, increasing and convex on ϑ > 0
        let lin = T::lit(1.5) * self.p_linear * rho;
        let g = |th: T| lin * th + a_loc * th.powi(4) - target;
        let mut lo = T::zero();
        let mut hi = T::one();
        while g(hi) < T::zero() {
            lo = hi;
            hi = hi + hi;
        }
        // Start from the larger of the two single-term roots (an upper bound) so
        // that Newton on the convex function descends monotonically.
        let mut th = hi;
        if lin > T::zero() {
            th = th.min(target / lin);
        }
        if a_loc > T::zero() {
            th = th.min((target / a_loc).powf(T::lit(0.25)));
        }
        th = th.max(lo);
        if g(th) < T::zero() {
            th = hi;
        }
        let tol = T::solver_tol();
        for _ in 0..200 {
            let f = g(th);
            if f == T::zero() {
                return Ok(th);
            }
            if f > T::zero() {
                hi = hi.min(th);
            } else {
                lo = lo.max(th);
            }
            let df = lin + T::lit(4.0) * a_loc * th.powi(3);
            let newton = th - f / df;
            let next = if newton >= lo && newton <= hi { newton } else { T::lit(0.5) * (lo + hi) };
            if (next - th).abs() <= tol * th || hi - lo <= tol * hi {
                return Ok(next);
            }
            th = next;
        }
        Ok(th)
    }

    /// Gibbs residual for the specific quantities: the two components
    /// `ϑ ∂_ϑ s - ∂_ϑ e` and `ϑ ∂_ρ s - ∂_ρ e + p/ρ²`, each scaled by the sum of
    /// the magnitudes of its terms, by centred differences with relative step `h`.
    pub fn gibbs_residual(&self, rho: T, theta: T, h: T) -> Result<T> {
        let a = self.radiation;
        gibbs_residual_of(
            |r, t| self.internal_energy_unchecked(r, t, a) / r,
            |r, t| self.entropy_density(r, t, a) / r,
            |r, t| self.pressure_unchecked(r, t, a, T::zero()),
            rho,
            theta,
            h,
        )
    }
}

/// Gibbs residual for arbitrary specific energy / entropy / pressure closures.
pub fn gibbs_residual_of<T: Real>(
    e: impl Fn(T, T) -> T,
    s: impl Fn(T, T) -> T,
    p: impl Fn(T, T) -> T,
    rho: T,
    theta: T,
    h: T,
) -> Result<T> {
    check_density(rho, true)?;
    check_temperature(theta)?;
    if !(h > T::zero()) {
        return Err(Error::InvalidArgument("finite difference step must be positive".into()));
    }
    let two = T::lit(2.0);
    let ht = h * theta;
    let hr = h * rho;
    let ds_dt = (s(rho, theta + ht) - s(rho, theta - ht)) / (two * ht);
    let de_dt = (e(rho, theta + ht) - e(rho, theta - ht)) / (two * ht);
    let ds_dr = (s(rho + hr, theta) - s(rho - hr, theta)) / (two * hr);
    let de_dr = (e(rho + hr, theta) - e(rho - hr, theta)) / (two * hr);
    let pr = p(rho, theta) / (rho * rho);
    let tiny = T::min_positive_value();
    let r1 = (theta * ds_dt - de_dt).abs() / ((theta * ds_dt).abs() + de_dt.abs()).max(tiny);
    let r2 = (theta * ds_dr - de_dr + pr).abs() / ((theta * ds_dr).abs() + de_dr.abs() + pr.abs()).max(tiny);
    Ok(r1.max(r2))
}

/// Transport coefficient laws and their envelope constants.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportCoeffs<T> {
    /// `μ(ϑ) = mu_lower (1 + ϑ)`.
    pub mu_lower: T,
    pub mu_upper: T,
    /// Bound on `|μ'|`.
    pub mu_slope: T,
    /// Bulk viscosity `η(ϑ) = bulk (1 + ϑ)`.
    pub bulk: T,
    pub bulk_upper: T,
    pub kappa_m_lower: T,
    pub kappa_m_upper: T,
    pub kappa_r_lower: T,
    pub kappa_r_upper: T,
}

impl<T: Real> Default for TransportCoeffs<T> {
    fn default() -> Self {
        Self {
            mu_lower: T::lit(0.01),
            mu_upper: T::lit(0.02),
            mu_slope: T::lit(0.02),
            bulk: T::zero(),
            bulk_upper: T::lit(0.01),
            kappa_m_lower: T::lit(0.01),
            kappa_m_upper: T::lit(0.02),
            kappa_r_lower: T::lit(0.001),
            kappa_r_upper: T::lit(0.002),
        }
    }
}

impl<T: Real> TransportCoeffs<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.mu_lower, self.kappa_m_lower, self.kappa_r_lower, self.mu_slope];
        if pos.iter().any(|v| !(*v > T::zero())) || self.bulk < T::zero() {
            return Err(Error::Thermo("transport constants must be positive".into()));
        }
        if self.mu_upper < self.mu_lower
            || self.kappa_m_upper < self.kappa_m_lower
            || self.kappa_r_upper < self.kappa_r_lower
            || self.bulk_upper < self.bulk
        {
            return Err(Error::Thermo("upper envelope constants below lower ones".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn viscosity(&self, theta: T) -> T {
        self.mu_lower * (T::one() + theta)
    }

    #[inline]
    pub fn bulk_viscosity(&self, theta: T) -> T {
        self.bulk * (T::one() + theta)
    }

    #[inline]
    pub fn conductivity_molecular(&self, theta: T) -> T {
        self.kappa_m_lower * (T::one() + theta)
    }

    #[inline]
    pub fn conductivity_radiative(&self, theta: T) -> T {
        self.kappa_r_lower * (T::one() + theta.powi(3))
    }

    #[inline]
    pub fn conductivity(&self, theta: T) -> T {
        self.conductivity_molecular(theta) + self.conductivity_radiative(theta)
    }

    /// `K(ϑ) = ∫₁^ϑ κ(z) dz`.
    pub fn conductivity_primitive(&self, theta: T) -> Result<T> {
        check_temperature(theta)?;
        Ok(self.conductivity_primitive_unchecked(theta))
    }

    #[inline]
    pub fn conductivity_primitive_unchecked(&self, theta: T) -> T {
        let one = T::one();
        let half = T::lit(0.5);
        let quarter = T::lit(0.25);
        self.kappa_m_lower * ((theta - one) + half * (theta * theta - one))
            + self.kappa_r_lower * ((theta - one) + quarter * (theta.powi(4) - one))
    }
}

/// 3×3 tensor; `grad[i][j] = ∂_j u_i`. Lower-dimensional problems embed into it.
pub type Tensor<T> = [[T; 3]; 3];

/// `S = μ_ω (∇u + ∇uᵀ - (2/3) div u I) + η_ω div u I` with
/// `μ_ω = χ_μ μ(ϑ)` and `η_ω = χ_η η(ϑ)`. The 2/3 factor is kept in every dimension.
pub fn stress_tensor<T: Real>(
    coeffs: &TransportCoeffs<T>,
    chi_shear: T,
    chi_bulk: T,
    theta: T,
    grad: &Tensor<T>,
) -> Tensor<T> {
    let mu = chi_shear * coeffs.viscosity(theta);
    let eta = chi_bulk * coeffs.bulk_viscosity(theta);
    stress_from_coefficients(mu, eta, grad)
}

#[inline]
pub fn stress_from_coefficients<T: Real>(mu: T, eta: T, grad: &Tensor<T>) -> Tensor<T> {
    let div = grad[0][0] + grad[1][1] + grad[2][2];
    let mut s = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = mu * (grad[i][j] + grad[j][i]);
        }
        s[i][i] = s[i][i] + (eta - T::lit(2.0 / 3.0) * mu) * div;
    }
    s
}

#[inline]
pub fn double_dot<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> T {
    let mut acc = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            acc = acc + a[i][j] * b[i][j];
        }
    }
    acc
}

/// Outcome of one hypothesis check.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Log-spaced samples of `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Runs every constitutive hypothesis on a 25×25 log grid over `[0.01, 10]²`.
pub fn hypothesis_report(eos: &EosModel<f64>, coeffs: &TransportCoeffs<f64>) -> Vec<Check> {
    let axis = log_grid(0.01, 10.0, 25);
    let pts: Vec<(f64, f64)> = axis.iter().flat_map(|&r| axis.iter().map(move |&t| (r, t))).collect();
    let mut out = Vec::new();
    let mut push = |name: &'static str, passed: bool, detail: String| out.push(Check { name, passed, detail });

    push(
        "model parameters",
        eos.validate().is_ok() && coeffs.validate().is_ok(),
        "positivity and β ≥ 4".into(),
    );

    let zs = log_grid(1e-6, 1e6, 200);
    push(
        "structure function P(0) = 0, P'(0) > 0",
        eos.structure(0.0) == 0.0 && eos.structure_prime(0.0) > 0.0,
        format!("P'(0) = {}", eos.structure_prime(0.0)),
    );
    push(
        "structure function P'(Z) > 0",
        zs.iter().all(|&z| eos.structure_prime(z) > 0.0),
        "200 log samples on [1e-6, 1e6]".into(),
    );
    let stab_c = zs
        .iter()
        .map(|&z| (5.0 / 3.0 * eos.structure(z) - eos.structure_prime(z) * z) / z)
        .fold(0.0, f64::max);
    let stab_ok = zs.iter().all(|&z| {
        let v = 5.0 / 3.0 * eos.structure(z) - eos.structure_prime(z) * z;
        v > 0.0 && v <= (stab_c + 1e-12) * z
    });
    push("(5/3)P - ZP' in (0, cZ]", stab_ok, format!("c = {stab_c:.6}"));
    let z_big: f64 = 1e12;
    let ratio = eos.structure(z_big) / z_big.powf(5.0 / 3.0);
    push(
        "P(Z)/Z^(5/3) -> p_inf > 0",
        eos.p_infinity() > 0.0 && (ratio - eos.p_infinity()).abs() < 1e-3 * eos.p_infinity(),
        format!("ratio at Z=1e12: {ratio:.9}, p_inf = {}", eos.p_infinity()),
    );

    let mut worst_gibbs: f64 = 0.0;
    for &(r, t) in &pts {
        worst_gibbs = worst_gibbs.max(eos.gibbs_residual(r, t, 1e-4).unwrap_or(f64::INFINITY));
    }
    push("Gibbs relation", worst_gibbs <= 1e-6, format!("max residual {worst_gibbs:.3e}"));

    let fd = 1e-6;
    let mut dp_ok = true;
    let mut cv_ok = true;
    let mut cv_max: f64 = 0.0;
    for &(r, t) in &pts {
        let dp = (eos.molecular_pressure(r * (1.0 + fd), t) - eos.molecular_pressure(r * (1.0 - fd), t)) / (2.0 * fd * r);
        dp_ok &= dp > 0.0;
        let em = |th: f64| eos.molecular_energy_density(r, th) / r;
        let de = (em(t * (1.0 + fd)) - em(t * (1.0 - fd))) / (2.0 * fd * t);
        cv_ok &= de > 0.0;
        cv_max = cv_max.max(de);
    }
    let cv_bound = 1.5 * eos.p_linear;
    push("dp_M/drho > 0", dp_ok, "finite differences".into());
    push(
        "0 < de_M/dtheta <= c",
        cv_ok && cv_max <= cv_bound * (1.0 + 1e-6),
        format!("max {cv_max:.6}, c = {cv_bound}"),
    );
    let cold_ok = axis.iter().all(|&r| eos.molecular_energy_density(r, 1e-12) / r > 0.0);
    push("lim_{theta->0} e_M > 0", cold_ok, "theta = 1e-12".into());
    let em3 = pts
        .iter()
        .map(|&(r, t)| {
            let em = |rr: f64| eos.molecular_energy_density(rr, t) / rr;
            let d = (em(r * (1.0 + fd)) - em(r * (1.0 - fd))) / (2.0 * fd * r);
            (r * d).abs() / em(r)
        })
        .fold(0.0, f64::max);
    push("|rho de_M/drho| <= c e_M", em3 <= 2.0 / 3.0 + 1e-6, format!("c = {em3:.6}"));

    let coercive = pts.iter().all(|&(r, t)| {
        let a = eos.radiation;
        eos.internal_energy_unchecked(r, t, a) >= a * t.powi(4) + 1.5 * eos.p_infinity() * r.powf(5.0 / 3.0)
    });
    push("coercivity rho e >= a theta^4 + (3/2) p_inf rho^(5/3)", coercive, "exact margin (3/2) c rho theta".into());

    let c_low = eos.p_degenerate;
    let c_up = eos.p_linear + eos.p_degenerate;
    let mut up_ratio: f64 = 0.0;
    let mut low_ok = true;
    for &(r, t) in &pts {
        let pm = eos.molecular_pressure(r, t);
        low_ok &= pm >= c_low * r.powf(5.0 / 3.0);
        up_ratio = up_ratio.max(pm / t.powf(2.5).max(r.powf(5.0 / 3.0)));
    }
    push(
        "molecular pressure envelope",
        low_ok && up_ratio <= c_up * (1.0 + 1e-12),
        format!("lower c = {c_low}, upper c = {up_ratio:.6} (bound {c_up})"),
    );
    let ce = pts
        .iter()
        .map(|&(r, t)| eos.molecular_energy_density(r, t) / r / (r.powf(2.0 / 3.0) + t))
        .fold(0.0, f64::max);
    push("molecular energy envelope 0 <= e_M <= c(rho^(2/3) + theta)", ce <= 1.5 * eos.p_linear.max(eos.p_degenerate) + 1e-12, format!("c = {ce:.6}"));

    let mut inv_err: f64 = 0.0;
    for &(r, t) in &pts {
        let e = eos.internal_energy_unchecked(r, t, eos.radiation);
        let back = eos.invert_temperature(r, e, eos.radiation).unwrap_or(f64::NAN);
        inv_err = inv_err.max(((back - t) / t).abs());
    }
    push("temperature inversion roundtrip", inv_err <= 1e-10, format!("max relative error {inv_err:.3e}"));

    let thetas = log_grid(0.01, 100.0, 100);
    let mu_ok = thetas.iter().all(|&t| {
        let mu = coeffs.viscosity(t);
        coeffs.mu_lower * (1.0 + t) <= mu && mu <= coeffs.mu_upper * (1.0 + t)
    }) && coeffs.mu_lower <= coeffs.mu_slope;
    push("viscosity envelope", mu_ok, format!("mu = {} (1 + theta)", coeffs.mu_lower));
    let bulk_ok = thetas.iter().all(|&t| {
        let b = coeffs.bulk_viscosity(t);
        b >= 0.0 && b <= coeffs.bulk_upper * (1.0 + t)
    });
    push("bulk viscosity envelope", bulk_ok, format!("eta = {} (1 + theta)", coeffs.bulk));
    let kr_ok = thetas.iter().all(|&t| {
        let k = coeffs.conductivity_radiative(t);
        coeffs.kappa_r_lower * (1.0 + t.powi(3)) <= k && k <= coeffs.kappa_r_upper * (1.0 + t.powi(3))
    });
    push("radiative conductivity envelope", kr_ok, String::new());
    let km_ok = thetas.iter().all(|&t| {
        let k = coeffs.conductivity_molecular(t);
        coeffs.kappa_m_lower * (1.0 + t) <= k && k <= coeffs.kappa_m_upper * (1.0 + t)
    });
    push("molecular conductivity envelope", km_ok, String::new());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eos() -> EosModel<f64> {
        EosModel::default()
    }

    #[test]
    fn pressure_examples() {
        let m = eos();
        assert_eq!(m.pressure(0.0, 1.0, 3.0, 0.0).unwrap(), 1.0);
        assert!((m.pressure(1.0, 1.0, 0.0, 0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((m.molecular_pressure_from_structure(1.0, 1.0) - 2.0).abs() < 1e-15);
        assert!((m.pressure(1.0, 1.0, 3.0, 0.1).unwrap() - 3.1).abs() < 1e-14);
        assert!(m.pressure(1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn closed_form_matches_structure_function() {
        let m = eos();
        for &(r, t) in &[(0.01, 5.0), (3.0, 0.2), (10.0, 10.0)] {
            let a = m.molecular_pressure(r, t);
            let b = m.molecular_pressure_from_structure(r, t);
            assert!(((a - b) / a).abs() < 1e-12);
        }
    }

    #[test]
    fn internal_energy_examples() {
        let m = eos();
        assert!((m.internal_energy(1.0, 1.0, 0.0).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(m.internal_energy(0.0, 2.0, 1.0).unwrap(), 16.0);
        assert!((m.internal_energy(1.0, 1e-8, 0.0).unwrap() - 1.5).abs() < 1e-7);
    }

    #[test]
    fn entropy_examples() {
        let m = eos();
        assert_eq!(m.entropy(1.0, 1.0, 0.0).unwrap(), 0.0);
        assert!((m.entropy(1.0, (2.0f64 / 3.0).exp(), 0.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((m.entropy(1.0, 1.0, 0.75).unwrap() - 1.0).abs() < 1e-15);
        assert!(m.entropy(0.0, 1.0, 0.0).is_err());
        assert!(m.entropy(1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn gibbs_examples() {
        let m = eos();
        assert!(m.gibbs_residual(1.0, 1.0, 1e-4).unwrap() <= 1e-6);
        assert!(m.gibbs_residual(0.1, 5.0, 1e-4).unwrap() <= 1e-5);
        let a = m.radiation;
        let corrupted = gibbs_residual_of(
            |r, t| m.internal_energy_unchecked(r, t, a) / r,
            |r, t| 1.01 * m.entropy_density(r, t, a) / r,
            |r, t| m.pressure_unchecked(r, t, a, 0.0),
            1.0,
            1.0,
            1e-4,
        )
        .unwrap();
        assert!(corrupted > 1e-3);
    }

    #[test]
    fn entropy_follows_from_gibbs_by_finite_differences() {
        // integrate ∂_ϑ s = (1/ϑ) ∂_ϑ e from ϑ = 1 to e^{2/3} at ρ = 1 by Simpson's rule
        let m = EosModel { radiation: 0.0, ..eos() };
        let target = (2.0f64 / 3.0).exp();
        let n = 2000;
        let hstep = (target - 1.0) / n as f64;
        let f = |t: f64| {
            let d = 1e-6;
            (m.internal_energy_unchecked(1.0, t + d, 0.0) - m.internal_energy_unchecked(1.0, t - d, 0.0)) / (2.0 * d) / t
        };
        let mut acc = f(1.0) + f(target);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(1.0 + i as f64 * hstep);
        }
        let s = acc * hstep / 3.0;
        assert!((s - 1.0).abs() < 1e-8);
        assert!((m.entropy(1.0, target, 0.0).unwrap() - s).abs() < 1e-8);
    }

    #[test]
    fn helmholtz_examples() {
        let m = eos();
        assert!((m.helmholtz(1.0, 1.0, 0.0).unwrap() - 3.0).abs() < 1e-15);
        assert!((m.helmholtz(1.0, 1.0, 1.0).unwrap() - 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn relative_helmholtz_is_nonnegative_on_grid() {
        let m = eos();
        let rho_bar = 1.0;
        let d = 1e-6;
        let fd_slope = (m.helmholtz_density(rho_bar + d, 1.0, m.radiation)
            - m.helmholtz_density(rho_bar - d, 1.0, m.radiation))
            / (2.0 * d);
        assert!((fd_slope - m.helmholtz_density_slope_at_unit_temperature(rho_bar)).abs() < 1e-8);
        for &r in &log_grid(0.01, 10.0, 50) {
            for &t in &log_grid(0.01, 10.0, 50) {
                let v = m.helmholtz_density(r, t, m.radiation)
                    - (r - rho_bar) * fd_slope
                    - m.helmholtz_density(rho_bar, 1.0, m.radiation);
                assert!(v >= -1e-9, "rho {r} theta {t}: {v}");
            }
        }
    }

    #[test]
    fn inversion_examples() {
        let m = eos();
        let e = m.internal_energy(0.4, 1.7, 1.0).unwrap();
        assert!((m.invert_temperature(0.4, e, 1.0).unwrap() - 1.7).abs() < 1e-10);
        assert!((m.invert_temperature(0.0, 16.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((m.invert_temperature(1.0, 3.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(m.invert_temperature(1.0, 1.0, 0.0).is_err());
        assert!(m.invert_temperature(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn inversion_in_single_precision() {
        let m: EosModel<f32> = EosModel::default();
        let e = m.internal_energy(0.4, 1.7, 1.0).unwrap();
        assert!((m.invert_temperature(0.4, e, 1.0).unwrap() - 1.7).abs() < 1e-5);
    }

    #[test]
    fn stress_examples() {
        let c: TransportCoeffs<f64> = TransportCoeffs { mu_lower: 1.0, bulk: 0.0, ..TransportCoeffs::default() };
        let zero = [[0.0f64; 3]; 3];
        assert_eq!(stress_tensor(&c, 1.0, 1.0, 1.0, &zero), zero);
        let ident: Tensor<f64> = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mu = 1.0f64;
        let s = stress_from_coefficients(mu, 0.0, &ident);
        assert!(s.iter().flatten().all(|v| v.abs() < 1e-15));
        let s = stress_from_coefficients(0.0, 0.5, &ident);
        assert!((s[0][0] - 1.5).abs() < 1e-15 && s[0][1] == 0.0);
        let gamma = 0.7f64;
        let mut shear = zero;
        shear[1][0] = gamma;
        let s = stress_tensor(&c, 1.0, 1.0, 1.0, &shear);
        assert!((s[0][1] - 2.0 * gamma).abs() < 1e-15 && (s[1][0] - 2.0 * gamma).abs() < 1e-15);
        assert_eq!(s[0][0], 0.0);
        assert_eq!(s[2][2], 0.0);
    }

    #[test]
    fn conductivity_primitive_examples() {
        let c: TransportCoeffs<f64> = TransportCoeffs::default();
        assert_eq!(c.conductivity_primitive(1.0).unwrap(), 0.0);
        let c: TransportCoeffs<f64> = TransportCoeffs { kappa_m_lower: 1.0, kappa_r_lower: 0.0, ..TransportCoeffs::default() };
        assert!((c.conductivity_primitive(2.0).unwrap() - 2.5).abs() < 1e-15);
        assert!(c.conductivity_primitive(0.0).is_err());
    }

    #[test]
    fn hypothesis_report_passes_for_defaults() {
        let report = hypothesis_report(&eos(), &TransportCoeffs::default());
        for c in &report {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn hypothesis_report_flags_bad_beta() {
        let m = EosModel { beta: 3.0, ..eos() };
        assert!(hypothesis_report(&m, &TransportCoeffs::default()).iter().any(|c| !c.passed));
    }

    proptest! {
        #[test]
        fn conductivity_primitive_is_increasing(a in 0.01f64..50.0, b in 0.01f64..50.0) {
            prop_assume!((a - b).abs() > 1e-9);
            let c: TransportCoeffs<f64> = TransportCoeffs::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(c.conductivity_primitive(hi).unwrap() > c.conductivity_primitive(lo).unwrap());
        }

        #[test]
        fn coercivity_margin_is_nonnegative(r in 0.0f64..20.0, t in 1e-6f64..20.0, a in 0.0f64..3.0) {
            let m = eos();
            let gap = m.internal_energy_unchecked(r, t, a) - a * t.powi(4) - 1.5 * m.p_infinity() * r.powf(5.0 / 3.0);
            prop_assert!(gap >= -1e-12 * (1.0 + m.internal_energy_unchecked(r, t, a)));
        }

        #[test]
        fn viscous_dissipation_is_nonnegative(g in proptest::array::uniform9(-5.0f64..5.0), mu in 0.0f64..3.0, eta in 0.0f64..3.0) {
            let grad = [[g[0], g[1], g[2]], [g[3], g[4], g[5]], [g[6], g[7], g[8]]];
            let s = stress_from_coefficients(mu, eta, &grad);
            prop_assert!(double_dot(&s, &grad) >= -1e-12);
        }
    }
}
