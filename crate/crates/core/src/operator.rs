//! Spectral realization of the stiffness operator.
//!
//! The operator is stored through its eigenvalues `λ_k` (ascending). The
//! one-dimensional Dirichlet preset additionally carries the sine
//! eigenfunctions `φ_k(x) = √(2/L) sin(kπx/L)` and a composite
//! Gauss–Legendre grid, which is needed for pointwise nonlinearities and
//! for localized damping regions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Resolution of the spatial grid: `panels_per_wavelength` Gauss panels of
/// `panel_order` nodes per shortest eigenfunction wavelength `2L/max(N, 4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub panel_order: usize,
    pub panels_per_wavelength: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            panel_order: 8,
            panels_per_wavelength: 4,
        }
    }
}

/// How to build a [`SpectralOperator`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSpec {
    /// `-d²/dx²` on (0, L) with homogeneous Dirichlet conditions, truncated to `modes` modes.
    Dirichlet1d {
        modes: usize,
        length: f64,
        #[serde(default)]
        quadrature: QuadratureConfig,
    },
    /// An abstract operator given only by its spectrum.
    Custom { eigenvalues: Vec<f64> },
}

/// Quadrature nodes on a subinterval together with the basis values there.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// node-major: `basis[i * modes + k] = φ_{k+1}(x_i)`
    basis: Vec<f64>,
    modes: usize,
}

impl Grid {
    fn sine(start: f64, end: f64, length: f64, modes: usize, config: QuadratureConfig) -> Self {
        let wavelength = 2.0 * length / modes.max(4) as f64;
        let panel_width = wavelength / config.panels_per_wavelength.max(1) as f64;
        let panels = ((end - start) / panel_width).ceil().max(1.0) as usize;
        let (nodes, weights) = quadrature::composite(start, end, panels, config.panel_order.max(1));
        let scale = (2.0 / length).sqrt();
        let mut basis = Vec::with_capacity(nodes.len() * modes);
        for &x in &nodes {
            for k in 1..=modes {
                basis.push(scale * (k as f64 * PI * x / length).sin());
            }
        }
        Self {
            nodes,
            weights,
            basis,
            modes,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Basis values `φ_1(x_i), …, φ_N(x_i)` at node `i`.
    pub fn basis_at(&self, i: usize) -> &[f64] {
        &self.basis[i * self.modes..(i + 1) * self.modes]
    }

    /// Pointwise values `Σ_k c_k φ_k(x_i)` at every node.
    pub fn synthesize(&self, coeffs: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.basis_at(i), coeffs);
        }
    }

    /// `out_k += scale · Σ_i w_i values_i φ_k(x_i)`.
    pub fn project_add(&self, values: &[f64], scale: f64, out: &mut [f64]) {
        for (i, (&v, &w)) in values.iter().zip(&self.weights).enumerate() {
            let c = scale * w * v;
            if c == 0.0 {
                continue;
            }
            for (o, &b) in out.iter_mut().zip(self.basis_at(i)) {
                *o += c * b;
            }
        }
    }

    /// Gram matrix `K[j,k] = Σ_i w_i φ_j(x_i) φ_k(x_i)`, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.modes;
        let mut k = vec![0.0; n * n];
        for i in 0..self.len() {
            let b = self.basis_at(i);
            let w = self.weights[i];
            for r in 0..n {
                let wr = w * b[r];
                for c in 0..n {
                    k[r * n + c] += wr * b[c];
                }
            }
        }
        k
    }
}

/// Domain length, grid configuration and the full-domain grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub length: f64,
    pub config: QuadratureConfig,
    grid: Grid,
}

impl Geometry {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
}

/// Eigen-decomposition of the stiffness operator, truncated to `mode_count` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOperator {
    eigenvalues: Vec<f64>,
    geometry: Option<Geometry>,
}

/// Modal coefficients of `u` (position) and `u_t` (velocity) at a given time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub time: f64,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl SystemState {
    pub fn new(time: f64, position: Vec<f64>, velocity: Vec<f64>) -> Self {
        Self {
            time,
            position,
            velocity,
        }
    }

    pub fn zero(modes: usize) -> Self {
        Self::new(0.0, vec![0.0; modes], vec![0.0; modes])
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }
}

/// Where a feedback operator acts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// The whole domain: `W = H`, embedding constant 1.
    Distributed,
    /// Indicator of the open subinterval `(start, end)` of `(0, L)`.
    Interval { start: f64, end: f64 },
}

impl Region {
    /// True when `self` is contained in `other`.
    pub fn within(&self, other: &Region) -> bool {
        match (self, other) {
            (_, Region::Distributed) => true,
            (Region::Distributed, Region::Interval { .. }) => false,
            (Region::Interval { start, end }, Region::Interval { start: s2, end: e2 }) => start >= s2 && end <= e2,
        }
    }

    pub fn measure(&self, length: f64) -> f64 {
        match *self {
            Region::Distributed => length,
            Region::Interval { start, end } => (end - start).max(0.0),
        }
    }
}

/// The restriction operator `K_ω` of a region in modal coordinates,
/// together with the grid used for pointwise evaluation inside the region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionOperator {
    modes: usize,
    /// `None` means identity (distributed region).
    gram: Option<Vec<f64>>,
    grid: Option<Grid>,
}

impl RegionOperator {
    pub fn is_identity(&self) -> bool {
        self.gram.is_none()
    }

    /// The region grid, if the operator has geometry.
    pub fn grid(&self) -> Option<&Grid> {
        self.grid.as_ref()
    }

    /// `vᵀ K v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        match &self.gram {
            None => dot(v, v),
            Some(k) => {
                let n = self.modes;
                let mut s = 0.0;
                for r in 0..n {
                    s += v[r] * dot(&k[r * n..(r + 1) * n], v);
                }
                s
            }
        }
    }

    /// `out += scale · K v`.
    pub fn apply_add(&self, v: &[f64], scale: f64, out: &mut [f64]) {
        if scale == 0.0 {
            return;
        }
        match &self.gram {
            None => {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += scale * x;
                }
            }
            Some(k) => {
                let n = self.modes;
                for (r, o) in out.iter_mut().enumerate() {
                    *o += scale * dot(&k[r * n..(r + 1) * n], v);
                }
            }
        }
    }

    /// Dense copy of the matrix, row-major.
    pub fn matrix(&self) -> Vec<f64> {
        match &self.gram {
            Some(k) => k.clone(),
            None => {
                let n = self.modes;
                let mut k = vec![0.0; n * n];
                for i in 0..n {
                    k[i * n + i] = 1.0;
                }
                k
            }
        }
    }
}

impl SpectralOperator {
    /// Builds the operator from a spec; eigenvalues are sorted ascending.
    pub fn build(spec: &OperatorSpec) -> Result<Self> {
        match spec {
            OperatorSpec::Dirichlet1d {
                modes,
                length,
                quadrature,
            } => {
                if *modes == 0 {
                    return Err(Error::EmptySpectrum);
                }
                if !(*length > 0.0) || !length.is_finite() {
                    return Err(Error::NonPositiveLength(*length));
                }
                let eigenvalues = (1..=*modes).map(|k| (k as f64 * PI / length).powi(2)).collect();
                let grid = Grid::sine(0.0, *length, *length, *modes, *quadrature);
                Ok(Self {
                    eigenvalues,
                    geometry: Some(Geometry {
                        length: *length,
                        config: *quadrature,
                        grid,
                    }),
                })
            }
            OperatorSpec::Custom { eigenvalues } => {
                if eigenvalues.is_empty() {
                    return Err(Error::EmptySpectrum);
                }
                if let Some((index, &value)) = eigenvalues
                    .iter()
                    .enumerate()
                    .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
                {
                    return Err(Error::NonPositiveEigenvalue { index, value });
                }
                let mut eigenvalues = eigenvalues.clone();
                eigenvalues.sort_by(f64::total_cmp);
                Ok(Self {
                    eigenvalues,
                    geometry: None,
                })
            }
        }
    }

    pub fn dirichlet(modes: usize, length: f64) -> Result<Self> {
        Self::build(&OperatorSpec::Dirichlet1d {
            modes,
            length,
            quadrature: QuadratureConfig::default(),
        })
    }

    pub fn custom(eigenvalues: Vec<f64>) -> Result<Self> {
        Self::build(&OperatorSpec::Custom { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mode_count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// The Poincaré constant λ₁ (smallest eigenvalue).
    pub fn poincare_lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.geometry.as_ref()
    }

    fn require_geometry(&self) -> Result<&Geometry> {
        self.geometry.as_ref().ok_or(Error::MissingGeometry)
    }

    pub fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.mode_count() {
            return Err(Error::DimensionMismatch {
                expected: self.mode_count(),
                found: v.len(),
            });
        }
        Ok(())
    }

    /// Builds `K_ω` for a region. Distributed regions give the identity;
    /// intervals require geometry and are integrated on their own grid.
    pub fn region_operator(&self, region: &Region) -> Result<RegionOperator> {
        let modes = self.mode_count();
        match *region {
            Region::Distributed => Ok(RegionOperator {
                modes,
                gram: None,
                grid: self.geometry.as_ref().map(|g| g.grid.clone()),
            }),
            Region::Interval { start, end } => {
                let geo = self.require_geometry()?;
                if !(start >= 0.0 && end <= geo.length && start <= end) {
                    return Err(Error::InvalidRegion {
                        start,
                        end,
                        length: geo.length,
                    });
                }
                if end == start {
                    return Ok(RegionOperator {
                        modes,
                        gram: Some(vec![0.0; modes * modes]),
                        grid: None,
                    });
                }
                let grid = Grid::sine(start, end, geo.length, modes, geo.config);
                Ok(RegionOperator {
                    modes,
                    gram: Some(grid.gram()),
                    grid: Some(grid),
                })
            }
        }
    }

    /// `Σ_k c_k φ_k(x)` at an arbitrary point (geometry required).
    pub fn evaluate_at(&self, coeffs: &[f64], x: f64) -> Result<f64> {
        let geo = self.require_geometry()?;
        self.check_dim(coeffs)?;
        let scale = (2.0 / geo.length).sqrt();
        Ok(coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * scale * ((k + 1) as f64 * PI * x / geo.length).sin())
            .sum())
    }

    /// Writes the nonlinear modal force into `out` and returns the
    /// functional `𝓕(u)`; `scratch` must have the grid length.
    pub(crate) fn nonlinear_force_into(
        &self,
        position: &[f64],
        p: f64,
        scratch: &mut [f64],
        out: &mut [f64],
    ) -> Result<f64> {
        let grid = &self.require_geometry()?.grid;
        grid.synthesize(position, scratch);
        let mut functional = 0.0;
        for (u, w) in scratch.iter_mut().zip(grid.weights()) {
            let power = abs_pow(*u, p);
            functional -= w * power * u.abs() * u.abs() / (p + 2.0);
            *u *= -power;
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        grid.project_add(scratch, 1.0, out);
        Ok(functional)
    }
}

/// `|u|^p` with the convention `|0|^p = 0` for p > 0 and `1` for p = 0.
fn abs_pow(u: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if u == 0.0 {
        0.0
    } else if p.fract() == 0.0 && p <= 32.0 {
        u.abs().powi(p as i32)
    } else {
        u.abs().powf(p)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared norms of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    /// `‖u‖_V² = Σ λ_k a_k²`
    pub v_norm_sq: f64,
    /// `‖u‖_H² = Σ a_k²`
    pub h_norm_sq: f64,
    /// `‖u_t‖_H² = Σ v_k²`
    pub velocity_h_norm_sq: f64,
    /// `‖u_t‖_W² = vᵀ K_ω v`
    pub velocity_w_norm_sq: f64,
}

pub fn norms(op: &SpectralOperator, state: &SystemState, region: &RegionOperator) -> Result<Norms> {
    op.check_dim(&state.position)?;
    op.check_dim(&state.velocity)?;
    let v_norm_sq = op.eigenvalues.iter().zip(&state.position).map(|(l, a)| l * a * a).sum();
    Ok(Norms {
        v_norm_sq,
        h_norm_sq: dot(&state.position, &state.position),
        velocity_h_norm_sq: dot(&state.velocity, &state.velocity),
        velocity_w_norm_sq: region.quad_form(&state.velocity),
    })
}

/// The prototype nonlinearity `f(u) = -|u|^p u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerNonlinearity {
    pub p: f64,
}

impl PowerNonlinearity {
    pub fn new(p: f64) -> Result<Self> {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::NonPositive {
                name: "nonlinearity exponent p (must be >= 0)",
                value: p,
            });
        }
        Ok(Self { p })
    }
}

/// Galerkin projection of `f(u)` and the functional `𝓕(u) = ∫ F(u) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearEval {
    pub modal_force: Vec<f64>,
    /// Always `≤ 0`.
    pub functional: f64,
}

pub fn eval_nonlinearity(op: &SpectralOperator, state: &SystemState, p: f64) -> Result<NonlinearEval> {
    PowerNonlinearity::new(p)?;
    op.check_dim(&state.position)?;
    let grid_len = op.require_geometry()?.grid.len();
    let mut scratch = vec![0.0; grid_len];
    let mut modal_force = vec![0.0; op.mode_count()];
    let functional = op.nonlinear_force_into(&state.position, p, &mut scratch, &mut modal_force)?;
    Ok(NonlinearEval {
        modal_force,
        functional,
    })
}

/// Monotone feedback `g(s) = ((A+B)/2)·s + ((B−A)/2)·tanh(s)` with
/// `A < g′ ≤ B` (or `g(s) = A·s` when the slopes coincide).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeedbackSlopes", into = "FeedbackSlopes")]
pub struct FeedbackG {
    lower: f64,
    upper: f64,
}

#[derive(Serialize, Deserialize)]
struct FeedbackSlopes {
    lower_slope: f64,
    upper_slope: f64,
}

impl TryFrom<FeedbackSlopes> for FeedbackG {
    type Error = Error;
    fn try_from(s: FeedbackSlopes) -> Result<Self> {
        FeedbackG::new(s.lower_slope, s.upper_slope)
    }
}

impl From<FeedbackG> for FeedbackSlopes {
    fn from(g: FeedbackG) -> Self {
        Self {
            lower_slope: g.lower,
            upper_slope: g.upper,
        }
    }
}

impl FeedbackG {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0) || !lower.is_finite() {
            return Err(Error::NonPositive {
                name: "lower feedback slope",
                value: lower,
            });
        }
        if !upper.is_finite() {
            return Err(Error::NonFinite {
                name: "upper feedback slope",
                value: upper,
            });
        }
        if upper < lower {
            return Err(Error::SlopeOrder { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    pub fn identity() -> Self {
        Self { lower: 1.0, upper: 1.0 }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn is_linear(&self) -> bool {
        self.lower == self.upper
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        if self.is_linear() {
            self.lower * s
        } else {
            0.5 * (self.lower + self.upper) * s + 0.5 * (self.upper - self.lower) * s.tanh()
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let sech = 1.0 / s.cosh();
        0.5 * (self.lower + self.upper) + 0.5 * (self.upper - self.lower) * sech * sech
    }
}

/// Componentwise application of `g`.
pub fn eval_feedback_g(g: &FeedbackG, v: &[f64]) -> Vec<f64> {
    v.iter().map(|&s| g.eval(s)).collect()
}
