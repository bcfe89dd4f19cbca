//! Numerical checks of the convex relation regions, the TransE
//! counterexamples and the analytic loss gradients.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Triple;
use crate::error::{Error, Result};
use crate::geometry::{self, BallPoint};
use crate::model::{Norm, ParameterStore, Variant};
use crate::rng::{self, Stream, StreamRng};
use crate::training::{self, TrainConfig, TrainingPair};

/// Band around either threshold inside which samples are skipped.
pub const BAND: f64 = 1e-9;

/// The Euclidean ball `‖x − center‖² ≤ radius_sq` that a relation's
/// term vectors must fall into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationRegion {
    pub r: BallPoint,
    pub lambda: f64,
    pub rho: f64,
    pub center: Vec<f64>,
    pub radius_sq: f64,
}

impl RelationRegion {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// d_p(x, r) ≤ λ, evaluated with the hyperbolic distance.
    pub fn contains_hyperbolic(&self, x: &[f64]) -> bool {
        geometry::distance_unchecked(x, &self.r) <= self.lambda
    }

    /// ‖x − center‖² ≤ radius_sq.
    pub fn contains_euclidean(&self, x: &[f64]) -> bool {
        self.euclidean_sq(x) <= self.radius_sq
    }

    fn euclidean_sq(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

pub fn region_from(r: &BallPoint, lambda: f64) -> Result<RelationRegion> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be finite and > 0 (got {lambda})")));
    }
    let r_sq = geometry::sq_norm(r);
    let rho = (lambda.cosh() - 1.0) / 2.0 * (1.0 - r_sq);
    let center = r.iter().map(|v| v / (rho + 1.0)).collect();
    let radius_sq = rho / (rho + 1.0) + r_sq / ((rho + 1.0) * (rho + 1.0)) - r_sq / (rho + 1.0);
    if !(radius_sq > 0.0) {
        return Err(Error::Infeasible(format!(
            "region radius² {radius_sq} is not positive (λ = {lambda}, ‖r‖² = {r_sq})"
        )));
    }
    Ok(RelationRegion {
        r: r.clone(),
        lambda,
        rho,
        center,
        radius_sq,
    })
}

/// Uniform point in the open ball of the given radius: a Gaussian
/// direction scaled by `radius·U^(1/n)`.
pub fn sample_in_ball(dim: usize, radius: f64, rng: &mut StreamRng) -> Vec<f64> {
    let mut v = random_direction(dim, rng);
    let scale = radius * rng.gen::<f64>().powf(1.0 / dim as f64);
    v.iter_mut().for_each(|x| *x *= scale);
    v
}

fn random_direction(dim: usize, rng: &mut StreamRng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = geometry::norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// A random relation vector with ‖r‖ ≤ 0.95 and λ ∈ [0.05, 5).
pub fn random_region(dim: usize, rng: &mut StreamRng) -> RelationRegion {
    loop {
        let r = BallPoint::new(sample_in_ball(dim, 0.95, rng)).expect("inside the ball");
        let lambda = rng.gen_range(0.05..5.0);
        if let Ok(region) = region_from(&r, lambda) {
            return region;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckCounts {
    pub samples: u64,
    pub skipped: u64,
    pub violations: u64,
    /// Smallest distance to a decision threshold among evaluated samples.
    pub worst_margin: f64,
}

impl CheckCounts {
    fn empty() -> Self {
        Self {
            worst_margin: f64::INFINITY,
            ..Self::default()
        }
    }

    fn merge(self, other: Self) -> Self {
        Self {
            samples: self.samples + other.samples,
            skipped: self.skipped + other.skipped,
            violations: self.violations + other.violations,
            worst_margin: self.worst_margin.min(other.worst_margin),
        }
    }
}

/// Compares the hyperbolic membership test against the closed-form ball.
///
/// Half of the samples are uniform in the unit ball; the other half are
/// drawn in a shell around the region's boundary, since in high dimension
/// uniform samples almost never land near a small region.
pub fn check_locus_equivalence(region: &RelationRegion, samples: u64, rng: &mut StreamRng) -> CheckCounts {
    let dim = region.dim();
    let radius = region.radius_sq.sqrt();
    let mut counts = CheckCounts::empty();
    for k in 0..samples {
        let x = if k % 2 == 0 {
            sample_in_ball(dim, 1.0, rng)
        } else {
            let mut near;
            loop {
                let dir = random_direction(dim, rng);
                let t = radius * rng.gen_range(0.0..1.5);
                near = region.center.iter().zip(&dir).map(|(c, d)| c + t * d).collect::<Vec<_>>();
                if geometry::sq_norm(&near) < 1.0 {
                    break;
                }
            }
            near
        };
        counts.samples += 1;
        let d = geometry::distance_unchecked(&x, &region.r);
        let q = region.euclidean_sq(&x);
        let margin = (d - region.lambda).abs().min((q - region.radius_sq).abs());
        if margin < BAND || !d.is_finite() {
            counts.skipped += 1;
            continue;
        }
        counts.worst_margin = counts.worst_margin.min(margin);
        if (d <= region.lambda) != (q <= region.radius_sq) {
            counts.violations += 1;
        }
    }
    counts
}

/// Draws pairs inside the region and checks that their midpoint stays in
/// it under the hyperbolic test.
pub fn check_convexity(region: &RelationRegion, pairs: u64, rng: &mut StreamRng) -> CheckCounts {
    let dim = region.dim();
    let radius = region.radius_sq.sqrt();
    let mut counts = CheckCounts::empty();
    let inside = |rng: &mut StreamRng| -> Option<Vec<f64>> {
        let offset = sample_in_ball(dim, radius, rng);
        let x: Vec<f64> = region.center.iter().zip(&offset).map(|(c, o)| c + o).collect();
        let d = geometry::distance_unchecked(&x, &region.r);
        (d <= region.lambda - BAND).then_some(x)
    };
    for _ in 0..pairs {
        counts.samples += 1;
        let (Some(a), Some(b)) = (inside(rng), inside(rng)) else {
            counts.skipped += 1;
            continue;
        };
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let d = geometry::distance_unchecked(&mid, &region.r);
        let margin = region.lambda - d;
        counts.worst_margin = counts.worst_margin.min(margin.abs());
        if margin < -BAND {
            counts.violations += 1;
        }
    }
    counts
}

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub samples: u64,
    pub violations: u64,
    pub worst_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<u64>,
}

impl CheckReport {
    fn from_counts(check: String, c: CheckCounts) -> Self {
        Self {
            check,
            samples: c.samples,
            violations: c.violations,
            worst_margin: c.worst_margin,
            skipped: Some(c.skipped),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Locus and convexity checks over `regions` random regions per dimension.
/// Region `k` of dimension `d` uses its own substream, so results do not
/// depend on thread scheduling.
pub fn proposition1_suite(dims: &[usize], regions: usize, samples: u64, seed: u64) -> Result<Vec<CheckReport>> {
    if dims.iter().any(|&d| d == 0) || regions == 0 || samples == 0 {
        return Err(Error::InvalidArgument("dims, regions and samples must be >= 1".into()));
    }
    let mut out = Vec::new();
    for (di, &dim) in dims.iter().enumerate() {
        let (locus, convex, min_radius) = (0..regions)
            .into_par_iter()
            .map(|k| {
                let mut rng = rng::substream(seed, Stream::Verification, (di * regions + k) as u64);
                let region = random_region(dim, &mut rng);
                let locus = check_locus_equivalence(&region, samples, &mut rng);
                let convex = check_convexity(&region, samples, &mut rng);
                (locus, convex, region.radius_sq)
            })
            .reduce(
                || (CheckCounts::empty(), CheckCounts::empty(), f64::INFINITY),
                |a, b| (a.0.merge(b.0), a.1.merge(b.1), a.2.min(b.2)),
            );
        out.push(CheckReport {
            check: format!("region_radius_positive_dim{dim}"),
            samples: regions as u64,
            violations: u64::from(!(min_radius > 0.0)),
            worst_margin: min_radius,
            skipped: None,
        });
        out.push(CheckReport::from_counts(format!("locus_equivalence_dim{dim}"), locus));
        out.push(CheckReport::from_counts(format!("convexity_dim{dim}"), convex));
    }
    Ok(out)
}

/// Norm of one TransE expression `e_x + r − e_y` under L1 and L2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormedExpr {
    pub expr: String,
    pub l1: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Case {
    pub restriction: String,
    pub premises: Vec<NormedExpr>,
    /// The conclusion that the counterexample breaks.
    pub conclusion: NormedExpr,
}

impl Lemma1Case {
    pub fn holds(&self, a: f64) -> bool {
        self.premises.iter().all(|p| p.l1 <= a && p.l2 <= a) && self.conclusion.l1 > a && self.conclusion.l2 > a
    }
}

const LEMMA1_DIM: usize = 3;

fn padded(head: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; LEMMA1_DIM];
    v[..head.len()].copy_from_slice(head);
    v
}

/// Builds the R1, R2 and R3 witnesses for the given `a` and offset `i`.
pub fn lemma1_counterexamples(a: f64, i: f64) -> Result<Vec<Lemma1Case>> {
    if !(a > 0.0) || !a.is_finite() || !i.is_finite() {
        return Err(Error::InvalidArgument(format!("need finite a > 0 and finite i (got a={a}, i={i})")));
    }
    let expr = |name: &str, es: &[&[f64]], x: usize, r: &[f64], y: usize| {
        let v: Vec<f64> = (0..LEMMA1_DIM).map(|k| es[x][k] + r[k] - es[y][k]).collect();
        NormedExpr {
            expr: format!("e{}+{name}-e{}", x + 1, y + 1),
            l1: Norm::L1.of(&v),
            l2: Norm::L2.of(&v),
        }
    };
    let r = padded(&[a]);

    let e1 = padded(&[i - a]);
    let e2 = padded(&[i + a]);
    let es: [&[f64]; 2] = [&e1, &e2];
    let r1 = Lemma1Case {
        restriction: "R1".into(),
        premises: vec![expr("r", &es, 0, &r, 0), expr("r", &es, 1, &r, 1), expr("r", &es, 0, &r, 1)],
        conclusion: expr("r", &es, 1, &r, 0),
    };

    let e3 = padded(&[i + 3.0 * a]);
    let es: [&[f64]; 3] = [&e1, &e2, &e3];
    let r2 = Lemma1Case {
        restriction: "R2".into(),
        premises: vec![
            expr("r", &es, 0, &r, 0),
            expr("r", &es, 0, &r, 1),
            expr("r", &es, 1, &r, 2),
            expr("r", &es, 1, &r, 1),
            expr("r", &es, 2, &r, 2),
        ],
        conclusion: expr("r", &es, 0, &r, 2),
    };

    let e1 = padded(&[i]);
    let e2 = padded(&[i + 1.5 * a, 0.5 * a]);
    let e3 = padded(&[i + 2.0 * a]);
    let es: [&[f64]; 3] = [&e1, &e2, &e3];
    let r3 = Lemma1Case {
        restriction: "R3".into(),
        premises: vec![
            expr("r", &es, 0, &r, 0),
            expr("r", &es, 0, &r, 1),
            expr("r", &es, 0, &r, 2),
            expr("r", &es, 1, &r, 2),
        ],
        conclusion: expr("r", &es, 1, &r, 0),
    };
    Ok(vec![r1, r2, r3])
}

/// Worst relative error between analytic and central-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub configurations: u64,
    pub components: u64,
    pub max_rel_error: f64,
}

/// Relative error with the denominator floored at this value, so that
/// components whose true gradient is essentially zero are compared absolutely.
pub const GRAD_REL_FLOOR: f64 = 1e-2;
const FD_STEP: f64 = 1e-6;
/// Configurations with a hinge margin or distance this close to a kink are redrawn.
const KINK_GUARD: f64 = 1e-3;

fn random_gradient_configuration(rng: &mut StreamRng) -> (ParameterStore, Vec<TrainingPair>, TrainConfig) {
    loop {
        let variant = if rng.gen_bool(0.5) { Variant::EuclideanAdd } else { Variant::MobiusAdd };
        let dim = rng.gen_range(2..=6);
        let beta = rng.gen_range(0..dim);
        let ne = rng.gen_range(3..=6);
        let nr = rng.gen_range(2..=3);
        let entity_radius = match variant {
            Variant::EuclideanAdd => 0.49,
            Variant::MobiusAdd => 0.9,
        };
        let entities: Vec<f64> = (0..ne).flat_map(|_| sample_in_ball(dim, entity_radius, rng)).collect();
        let relations: Vec<f64> = (0..nr).flat_map(|_| sample_in_ball(dim, 0.9, rng)).collect();
        let Ok(store) = ParameterStore::from_parts(dim, beta, variant, entities, relations) else {
            continue;
        };
        let triple = |rng: &mut StreamRng| Triple::new(rng.gen_range(0..ne), rng.gen_range(0..nr), rng.gen_range(0..ne));
        let pairs: Vec<TrainingPair> = (0..rng.gen_range(1..=4))
            .map(|_| TrainingPair {
                positive: triple(rng),
                negatives: (0..rng.gen_range(1..=3)).map(|_| triple(rng)).collect(),
            })
            .collect();
        let config = TrainConfig {
            gamma: rng.gen_range(0.2..2.0),
            lambda: rng.gen_range(0.0..1.0),
            dim,
            beta: Some(beta),
            variant,
            ..TrainConfig::default()
        };
        let score = |t: &Triple| crate::model::score_hyperkg(&store, t).unwrap_or(0.0);
        let near_kink = pairs.iter().any(|p| {
            let fp = score(&p.positive);
            fp < KINK_GUARD || p.negatives.iter().any(|n| {
                let fnn = score(n);
                fnn < KINK_GUARD || (config.gamma + fp - fnn).abs() < KINK_GUARD
            })
        });
        if !near_kink {
            return (store, pairs, config);
        }
    }
}

/// Compares the analytic batch-loss gradient (hinge plus regularizer) with
/// central differences over random small stores of both variants.
pub fn gradient_check(configurations: u64, seed: u64) -> Result<GradientCheck> {
    if configurations == 0 {
        return Err(Error::InvalidArgument("configurations must be >= 1".into()));
    }
    let results = (0..configurations)
        .into_par_iter()
        .map(|k| -> Result<(u64, f64)> {
            let mut rng = rng::substream(seed, Stream::Custom(7), k);
            let (store, pairs, config) = random_gradient_configuration(&mut rng);
            let outcome = training::loss_and_grads(&store, &pairs, &config)?;
            let dim = store.dim();
            let mut worst: f64 = 0.0;
            let mut components = 0;
            for (is_entity, grads) in [(true, &outcome.grads.entities), (false, &outcome.grads.relations)] {
                for (&id, g) in grads {
                    for c in 0..dim {
                        let eval = |delta: f64| -> Result<f64> {
                            let mut e = store.entity_matrix().to_vec();
                            let mut r = store.relation_matrix().to_vec();
                            let target = if is_entity { &mut e } else { &mut r };
                            target[id * dim + c] += delta;
                            let s = ParameterStore::from_parts(dim, store.beta(), store.variant(), e, r)?;
                            training::total_loss(&s, &pairs, &config)
                        };
                        let fd = (eval(FD_STEP)? - eval(-FD_STEP)?) / (2.0 * FD_STEP);
                        let denom = fd.abs().max(g[c].abs()).max(GRAD_REL_FLOOR);
                        worst = worst.max((fd - g[c]).abs() / denom);
                        components += 1;
                    }
                }
            }
            Ok((components, worst))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GradientCheck {
        configurations,
        components: results.iter().map(|r| r.0).sum(),
        max_rel_error: results.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn point(v: &[f64]) -> BallPoint {
        BallPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn origin_region() {
        let region = region_from(&point(&[0.0, 0.0, 0.0]), 3.0f64.acosh()).unwrap();
        assert_abs_diff_eq!(region.rho, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(region.radius_sq, 0.5, epsilon = 1e-12);
        assert!(region.center.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn region_errors() {
        assert!(region_from(&point(&[0.1]), 0.0).is_err());
        assert!(region_from(&point(&[0.1]), f64::NAN).is_err());
    }

    #[test]
    fn radius_positive_for_many_draws() {
        let mut rng = rng::stream(11, Stream::Verification);
        for _ in 0..10_000 {
            let dim = rng.gen_range(1..8);
            let r = point(&sample_in_ball(dim, 0.999, &mut rng));
            let lambda = rng.gen_range(1e-3..10.0);
            assert!(region_from(&r, lambda).unwrap().radius_sq > 0.0);
        }
    }

    #[test]
    fn radius_shrinks_with_lambda() {
        let r = point(&[0.3, -0.2]);
        let radii: Vec<f64> = [1.0, 0.1, 0.01].iter().map(|&l| region_from(&r, l).unwrap().radius_sq).collect();
        assert!(radii[0] > radii[1] && radii[1] > radii[2] && radii[2] > 0.0);
    }

    #[test]
    fn center_is_inside() {
        let mut rng = rng::stream(3, Stream::Verification);
        for _ in 0..100 {
            let region = random_region(5, &mut rng);
            assert!(region.contains_hyperbolic(&region.center));
            assert!(region.contains_euclidean(&region.center));
        }
    }

    #[test]
    fn boundary_bracketing() {
        let mut rng = rng::stream(4, Stream::Verification);
        for _ in 0..200 {
            let region = random_region(3, &mut rng);
            let dir = random_direction(3, &mut rng);
            for (f, expect) in [(1.0 - 1e-3, true), (1.0 + 1e-3, false)] {
                let t = (region.radius_sq * f).sqrt();
                let x: Vec<f64> = region.center.iter().zip(&dir).map(|(c, d)| c + t * d).collect();
                assert_eq!(region.contains_euclidean(&x), expect);
                assert_eq!(region.contains_hyperbolic(&x), expect);
            }
        }
    }

    #[test]
    fn small_suite_has_no_violations() {
        let reports = proposition1_suite(&[2, 5, 100], 5, 2000, 1).unwrap();
        assert_eq!(reports.len(), 9);
        for r in &reports {
            assert!(r.passed(), "{r:?}");
        }
        assert_eq!(reports, proposition1_suite(&[2, 5, 100], 5, 2000, 1).unwrap());
    }

    #[test]
    fn locus_check_detects_a_wrong_region() {
        let mut rng = rng::stream(5, Stream::Verification);
        let mut region = random_region(2, &mut rng);
        region.radius_sq *= 1.5;
        assert!(check_locus_equivalence(&region, 5000, &mut rng).violations > 0);
    }

    #[test]
    fn uniform_ball_samples_stay_inside() {
        let mut rng = rng::stream(6, Stream::Verification);
        for dim in [1, 2, 50] {
            for _ in 0..1000 {
                assert!(geometry::norm(&sample_in_ball(dim, 0.7, &mut rng)) < 0.7);
            }
        }
    }

    #[test]
    fn lemma1_values() {
        let cases = lemma1_counterexamples(1.0, 0.0).unwrap();
        assert_eq!(cases.len(), 3);
        for c in &cases {
            assert!(c.holds(1.0), "{c:?}");
            assert!(c.conclusion.l2 >= 2.0);
        }
        assert_abs_diff_eq!(cases[0].conclusion.l2, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cases[1].conclusion.l2, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cases[2].conclusion.l2, 26f64.sqrt() / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cases[2].conclusion.l1, 3.0, epsilon = 1e-12);
        assert_eq!(cases[2].conclusion.expr, "e2+r-e1");
    }

    #[test]
    fn lemma1_scales_with_a_and_i() {
        for (a, i) in [(0.25, 3.0), (7.0, -2.5), (1e-3, 100.0)] {
            for c in lemma1_counterexamples(a, i).unwrap() {
                // tiny a against large i loses a few ulps in the premises
                let slack = a * (1.0 + 1e-9);
                assert!(c.premises.iter().all(|p| p.l1 <= slack && p.l2 <= slack), "{c:?}");
                assert!(c.conclusion.l2 >= 2.0 * a);
            }
        }
        assert!(lemma1_counterexamples(0.0, 0.0).is_err());
    }

    #[test]
    fn gradient_oracle_small() {
        let check = gradient_check(50, 2).unwrap();
        assert!(check.components > 0);
        assert!(check.max_rel_error < 1e-5, "{check:?}");
    }
}
