//! Numerical kernel for the Poincaré ball.
//!
//! Everything here is a pure function of its inputs. Checked entry points
//! validate dimensions and ball membership and never clamp their inputs;
//! the `*_into` / `accumulate_*` variants skip validation and are meant for
//! the training inner loop, where the store already guarantees membership.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distances below this are treated as coincident when differentiating.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-9;

/// Projection slack used throughout training and initialization.
pub const DEFAULT_EPS: f64 = 1e-5;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    sq_norm(x).sqrt()
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

fn check_finite(x: &[f64], context: &'static str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { context })
    }
}

fn check_same_dim(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(())
}

/// Validates finiteness and open-ball membership, returning the squared norm.
fn check_in_ball(x: &[f64]) -> Result<f64> {
    check_finite(x, "ball point")?;
    let sq = sq_norm(x);
    if sq >= 1.0 {
        return Err(Error::OutsideBall { norm: sq.sqrt() });
    }
    Ok(sq)
}

/// A finite vector strictly inside the open unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BallPoint(Vec<f64>);

impl BallPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("ball point needs n >= 1".into()));
        }
        check_in_ball(&coords)?;
        Ok(Self(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0.0; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for BallPoint {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for BallPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for BallPoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BallPoint> for Vec<f64> {
    fn from(p: BallPoint) -> Self {
        p.0
    }
}

/// The conformal quantity δ(u, v) = ‖u−v‖² / ((1−‖u‖²)(1−‖v‖²)).
#[inline]
fn delta(u: &[f64], v: &[f64], sq_u: f64, sq_v: f64) -> f64 {
    sq_dist(u, v) / ((1.0 - sq_u) * (1.0 - sq_v))
}

/// arccosh(1 + 2δ) written as 2·asinh(√δ), which is exact at δ = 0 and
/// keeps full precision for nearby points.
#[inline]
fn distance_from_delta(delta: f64) -> f64 {
    2.0 * delta.max(0.0).sqrt().asinh()
}

/// Hyperbolic distance between two points of the Poincaré ball.
pub fn poincare_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    check_same_dim(u, v)?;
    let sq_u = check_in_ball(u)?;
    let sq_v = check_in_ball(v)?;
    Ok(distance_from_delta(delta(u, v, sq_u, sq_v)))
}

/// Unchecked distance for callers that already hold valid ball points.
#[inline]
pub fn distance_unchecked(u: &[f64], v: &[f64]) -> f64 {
    distance_from_delta(delta(u, v, sq_norm(u), sq_norm(v)))
}

/// Möbius (gyrovector) addition u ⊕ v.
pub fn mobius_add(u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    check_same_dim(u, v)?;
    check_in_ball(u)?;
    check_in_ball(v)?;
    let mut out = vec![0.0; u.len()];
    mobius_add_into(u, v, &mut out);
    check_in_ball(&out)?;
    Ok(out)
}

#[inline]
pub fn mobius_add_into(u: &[f64], v: &[f64], out: &mut [f64]) {
    let uv = dot(u, v);
    let sq_u = sq_norm(u);
    let sq_v = sq_norm(v);
    let cu = 1.0 + 2.0 * uv + sq_v;
    let cv = 1.0 - sq_u;
    let denom = 1.0 + 2.0 * uv + sq_u * sq_v;
    for ((o, a), b) in out.iter_mut().zip(u).zip(v) {
        *o = (cu * a + cv * b) / denom;
    }
}

/// Vector-Jacobian product of Möbius addition: given ∂L/∂(u ⊕ v), adds
/// ∂L/∂u into `grad_u` and ∂L/∂v into `grad_v`.
pub fn mobius_add_backward(
    u: &[f64],
    v: &[f64],
    upstream: &[f64],
    grad_u: &mut [f64],
    grad_v: &mut [f64],
) {
    let uv = dot(u, v);
    let sq_u = sq_norm(u);
    let sq_v = sq_norm(v);
    let cu = 1.0 + 2.0 * uv + sq_v;
    let cv = 1.0 - sq_u;
    let denom = 1.0 + 2.0 * uv + sq_u * sq_v;

    let g_u = dot(upstream, u);
    let g_v = dot(upstream, v);
    // g · numerator
    let g_num = cu * g_u + cv * g_v;
    let inv = 1.0 / denom;
    let inv2 = inv * inv;

    for i in 0..u.len() {
        let jt_u = cu * upstream[i] + 2.0 * g_u * v[i] - 2.0 * g_v * u[i];
        let d_denom_u = 2.0 * v[i] + 2.0 * u[i] * sq_v;
        grad_u[i] += jt_u * inv - g_num * d_denom_u * inv2;

        let jt_v = cv * upstream[i] + g_u * (2.0 * u[i] + 2.0 * v[i]);
        let d_denom_v = 2.0 * u[i] + 2.0 * v[i] * sq_u;
        grad_v[i] += jt_v * inv - g_num * d_denom_v * inv2;
    }
}

/// A circular coordinate shift Π_β on R^n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationSpec {
    dim: usize,
    shift: usize,
}

impl PermutationSpec {
    pub fn new(dim: usize, shift: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("permutation dimension must be >= 1".into()));
        }
        if shift >= dim {
            return Err(Error::InvalidArgument(format!(
                "shift {shift} must be < dimension {dim}"
            )));
        }
        Ok(Self { dim, shift })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    /// Π_β⁻¹ = Π_{n−β}; the transpose of an orthogonal map.
    pub fn inverse(&self) -> Self {
        Self {
            dim: self.dim,
            shift: (self.dim - self.shift) % self.dim,
        }
    }

    pub fn then(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            shift: (self.shift + other.shift) % self.dim,
        })
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: x.len(),
            });
        }
        let mut out = vec![0.0; self.dim];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    /// out = (x_{β+1}, …, x_n, x_1, …, x_β)
    #[inline]
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let (head, tail) = x.split_at(self.shift);
        out[..tail.len()].copy_from_slice(tail);
        out[tail.len()..].copy_from_slice(head);
    }

    /// Adds Π_β⁻¹ g into `out`.
    #[inline]
    pub fn add_inverse_into(&self, g: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for (k, gk) in g.iter().enumerate() {
            out[(k + self.shift) % n] += gk;
        }
    }
}

pub fn circ_permute(spec: &PermutationSpec, x: &[f64]) -> Result<Vec<f64>> {
    spec.apply(x)
}

/// Pulls `x` strictly inside the sphere of radius `a`:
/// a·x/(‖x‖+eps) when ‖x‖ ≥ a, identity otherwise.
pub fn project_to_radius(x: &[f64], a: f64, eps: f64) -> Result<Vec<f64>> {
    check_finite(x, "projection input")?;
    if !(a > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "projection needs a > 0 and eps > 0 (got a={a}, eps={eps})"
        )));
    }
    let mut out = x.to_vec();
    project_in_place(&mut out, a, eps);
    Ok(out)
}

/// In-place projection; returns whether the constraint was active.
#[inline]
pub fn project_in_place(x: &mut [f64], a: f64, eps: f64) -> bool {
    let n = norm(x);
    if n >= a {
        let scale = a / (n + eps);
        x.iter_mut().for_each(|v| *v *= scale);
        true
    } else {
        false
    }
}

/// Conformal rescaling (1−‖θ‖²)²/4 from Euclidean to Riemannian gradient.
pub fn riemannian_scale(theta: &[f64]) -> Result<f64> {
    let sq = check_in_ball(theta)?;
    Ok(riemannian_scale_sq(sq))
}

#[inline]
pub(crate) fn riemannian_scale_sq(sq_norm: f64) -> f64 {
    let c = 1.0 - sq_norm;
    c * c / 4.0
}

/// Euclidean gradients of d_p(x, r) with respect to both arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceGrad {
    pub grad_x: Vec<f64>,
    pub grad_r: Vec<f64>,
}

/// ∂d_p/∂x and ∂d_p/∂r. Errors at (near-)coincident points, where the
/// distance is not differentiable.
pub fn distance_grad(x: &[f64], r: &[f64]) -> Result<DistanceGrad> {
    check_same_dim(x, r)?;
    check_in_ball(x)?;
    check_in_ball(r)?;
    let mut grad_x = vec![0.0; x.len()];
    let mut grad_r = vec![0.0; r.len()];
    if !accumulate_distance_grad(x, r, 1.0, &mut grad_x, &mut grad_r) {
        return Err(Error::CoincidentPoints);
    }
    Ok(DistanceGrad { grad_x, grad_r })
}

/// Adds `scale`·∂d_p/∂x into `grad_x` and `scale`·∂d_p/∂r into `grad_r`.
///
/// Returns `false` and leaves the accumulators untouched when d_p(x, r) is
/// below [`COINCIDENCE_TOLERANCE`].
pub fn accumulate_distance_grad(
    x: &[f64],
    r: &[f64],
    scale: f64,
    grad_x: &mut [f64],
    grad_r: &mut [f64],
) -> bool {
    let sq_x = sq_norm(x);
    let sq_r = sq_norm(r);
    let dsq = sq_dist(x, r);
    let alpha = 1.0 - sq_x;
    let beta = 1.0 - sq_r;
    let delta = dsq / (alpha * beta);
    if distance_from_delta(delta) < COINCIDENCE_TOLERANCE {
        return false;
    }
    // d/dδ [2 asinh(√δ)] = 1/√(δ(1+δ)), identical to arccosh'(1+2δ)·2
    let outer = scale / (delta * (1.0 + delta)).sqrt();
    let cx = outer / (alpha * alpha * beta);
    let cr = outer / (beta * beta * alpha);
    for i in 0..x.len() {
        let diff = x[i] - r[i];
        grad_x[i] += cx * (2.0 * diff * alpha + 2.0 * x[i] * dsq);
        grad_r[i] += cr * (-2.0 * diff * beta + 2.0 * r[i] * dsq);
    }
    true
}
