//! Scans of `P_G(w)` and `||P_{G,w}||_inf` over parametrized group families.
//!
//! A finite scan can only bound the infimum over the members it visits, so
//! reports speak of a *sampled infimum*, and the verdict is a heuristic whose
//! thresholds travel with the report.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Budget, Error, Result};
use crate::groups::modular::{is_prime, prime_power};
use crate::groups::{FiniteGroup, GroupBackend};
use crate::prob::{exact_distribution, monte_carlo, ratio, EstimateReport};
use crate::stats::to_f64;
use crate::words::Word;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Family {
    D,
    S,
    A,
    SL2,
    PSL2,
}

impl Family {
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_uppercase().as_str() {
            "D" => Ok(Family::D),
            "S" => Ok(Family::S),
            "A" => Ok(Family::A),
            "SL2" => Ok(Family::SL2),
            "PSL2" => Ok(Family::PSL2),
            other => Err(Error::parse(
                0,
                format!("unknown family '{other}' (D, S, A, SL2, PSL2)"),
            )),
        }
    }

    /// Group spec of the member with parameter `param`.
    pub fn member(self, param: u64) -> Result<GroupBackend> {
        let spec = match self {
            Family::D => format!("D:{param}"),
            Family::S => format!("S:{param}"),
            Family::A => format!("A:{param}"),
            Family::SL2 => {
                if !is_prime(param) {
                    return Err(Error::invalid(format!("SL2 needs a prime, got {param}")));
                }
                format!("SL:2:{param}")
            }
            Family::PSL2 => match prime_power(param) {
                Some((p, _)) if p != 2 => format!("PSL:2:{param}"),
                _ => {
                    return Err(Error::invalid(format!(
                        "PSL2 needs an odd prime power, got {param}"
                    )))
                }
            },
        };
        GroupBackend::parse(&spec)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::D => "D",
            Family::S => "S",
            Family::A => "A",
            Family::SL2 => "SL2",
            Family::PSL2 => "PSL2",
        })
    }
}

/// Thresholds of the heuristic verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictRule {
    /// Every record's P (Wilson lower bound for estimates) must reach this
    /// for `bounded_below`.
    pub floor: f64,
    /// A fitted exponent above this rules out `bounded_below`.
    pub bounded_max_alpha: f64,
    /// Minimum fitted exponent for `decaying`.
    pub decay_min_alpha: f64,
    /// Maximum RMS residual of the fit for `decaying`.
    pub max_residual: f64,
    /// For `decaying`, the last P must be at most this fraction of the first.
    pub drop_ratio: f64,
}

impl Default for VerdictRule {
    fn default() -> Self {
        VerdictRule {
            floor: 0.01,
            bounded_max_alpha: 0.2,
            decay_min_alpha: 0.2,
            max_residual: 0.5,
            drop_ratio: 0.5,
        }
    }
}

impl fmt::Display for VerdictRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "heuristic(floor={};bounded_max_alpha={};decay_min_alpha={};max_residual={};drop_ratio={})",
            self.floor, self.bounded_max_alpha, self.decay_min_alpha, self.max_residual, self.drop_ratio
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    BoundedBelow,
    Decaying,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::BoundedBelow => "bounded_below",
            Verdict::Decaying => "decaying",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::MonteCarlo => "monte_carlo",
        })
    }
}

/// Exact count of the identity fiber over `|G|^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactValue {
    pub count: BigUint,
    pub total: BigUint,
    pub norm_inf: BigRational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemberRecord {
    pub param: u64,
    pub group: String,
    pub order: BigUint,
    pub method: Method,
    pub exact: Option<ExactValue>,
    pub estimate: Option<EstimateReport>,
}

impl MemberRecord {
    /// Exact P, or the point estimate.
    pub fn p_value(&self) -> f64 {
        match (&self.exact, &self.estimate) {
            (Some(e), _) => to_f64(&ratio(e.count.clone(), e.total.clone())),
            (None, Some(m)) => m.estimate,
            _ => unreachable!(),
        }
    }

    /// Exact P, or the Wilson lower bound.
    pub fn lower_bound(&self) -> f64 {
        match (&self.exact, &self.estimate) {
            (Some(_), _) => self.p_value(),
            (None, Some(m)) => m.wilson_lo,
            _ => unreachable!(),
        }
    }

    pub fn exact_p(&self) -> Option<BigRational> {
        self.exact
            .as_ref()
            .map(|e| ratio(e.count.clone(), e.total.clone()))
    }

    fn order_f64(&self) -> f64 {
        self.order.to_f64().unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub alpha_hat: f64,
    pub residual: f64,
    pub points: usize,
}

/// Least-squares fit of `ln P = c - alpha ln |G|` over `(|G|, P)` points with
/// `0 < P < 1`; `residual` is the RMS of the fit errors.
pub fn fit_decay(points: &[(f64, f64)]) -> Result<DecayFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, p)| *p > 0.0 && *p < 1.0)
        .map(|&(order, p)| (order.ln(), p.ln()))
        .collect();
    if usable.len() < 3 {
        return Err(Error::invalid(format!(
            "decay fit needs at least 3 members with 0 < P < 1, got {}",
            usable.len()
        )));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid(
            "decay fit needs at least two distinct group orders",
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = usable
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(DecayFit {
        alpha_hat: -slope,
        residual: (sse / n).sqrt(),
        points: usable.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub budget: Budget,
    /// Trials for members too large for exact counting; 0 disables the fallback.
    pub mc_trials: u64,
    pub seed: u64,
    pub rule: VerdictRule,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            budget: Budget::DEFAULT,
            mc_trials: 100_000,
            seed: 0,
            rule: VerdictRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub family: Family,
    pub params: Vec<u64>,
    pub word: String,
    /// Sorted by group order, then parameter.
    pub records: Vec<MemberRecord>,
    /// Members that could not be computed, with the reason.
    pub errors: Vec<(u64, String)>,
    pub sampled_infimum: Option<f64>,
    /// Set when every record is exact.
    pub sampled_infimum_exact: Option<BigRational>,
    pub fit: Option<DecayFit>,
    pub verdict: Verdict,
    pub rule: VerdictRule,
}

pub const SCAN_CSV_HEADER: &str =
    "family,param,group,order,method,p_value_num,p_value_den_or_trials,norm_inf,wilson_lo,wilson_hi";

impl ScanReport {
    pub fn csv_rows(&self) -> Vec<String> {
        self.records
            .iter()
            .map(|r| {
                let (num, den, norm, lo, hi) = match (&r.exact, &r.estimate) {
                    (Some(e), _) => (
                        e.count.to_string(),
                        e.total.to_string(),
                        e.norm_inf.to_string(),
                        String::new(),
                        String::new(),
                    ),
                    (None, Some(m)) => (
                        m.hits.to_string(),
                        m.trials.to_string(),
                        String::new(),
                        m.wilson_lo.to_string(),
                        m.wilson_hi.to_string(),
                    ),
                    _ => unreachable!(),
                };
                format!(
                    "{},{},{},{},{},{num},{den},{norm},{lo},{hi}",
                    self.family, r.param, r.group, r.order, r.method
                )
            })
            .collect()
    }

    /// Verdict line appended after the CSV rows.
    pub fn csv_footer(&self) -> String {
        let fit = match &self.fit {
            Some(f) => format!("alpha_hat={};residual={}", f.alpha_hat, f.residual),
            None => "alpha_hat=;residual=".to_string(),
        };
        let inf = self
            .sampled_infimum
            .map(|v| v.to_string())
            .unwrap_or_default();
        format!(
            "# verdict={};{fit};sampled_infimum={inf};rule={}",
            self.verdict, self.rule
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "family": self.family.to_string(),
            "params": self.params,
            "word": self.word,
            "records": self.records.iter().map(|r| json!({
                "param": r.param,
                "group": r.group,
                "order": r.order.to_string(),
                "method": r.method.to_string(),
                "p_value": r.p_value(),
                "p_value_exact": r.exact_p().map(|p| p.to_string()),
                "count": r.exact.as_ref().map(|e| e.count.to_string()),
                "total": r.exact.as_ref().map(|e| e.total.to_string()),
                "norm_inf": r.exact.as_ref().map(|e| e.norm_inf.to_string()),
                "hits": r.estimate.as_ref().map(|m| m.hits),
                "trials": r.estimate.as_ref().map(|m| m.trials),
                "wilson_lo": r.estimate.as_ref().map(|m| m.wilson_lo),
                "wilson_hi": r.estimate.as_ref().map(|m| m.wilson_hi),
            })).collect::<Vec<_>>(),
            "errors": self.errors.iter().map(|(p, e)| json!({"param": p, "error": e})).collect::<Vec<_>>(),
            "sampled_infimum": self.sampled_infimum,
            "sampled_infimum_exact": self.sampled_infimum_exact.as_ref().map(|v| v.to_string()),
            "alpha_hat": self.fit.map(|f| f.alpha_hat),
            "fit_residual": self.fit.map(|f| f.residual),
            "verdict": self.verdict.to_string(),
            "verdict_rule": self.rule.to_string(),
        })
    }
}

fn compute_member(
    family: Family,
    param: u64,
    w: &Word,
    config: &ScanConfig,
) -> Result<MemberRecord> {
    let backend = family.member(param)?;
    let exact = FiniteGroup::new(backend.clone(), config.budget)
        .and_then(|g| exact_distribution(&g, w, config.budget));
    match exact {
        Ok(d) => Ok(MemberRecord {
            param,
            group: backend.to_string(),
            order: backend.order(),
            method: Method::Exact,
            exact: Some(ExactValue {
                count: d.classes[d.identity_class].count.clone(),
                total: d.total.clone(),
                norm_inf: d.norm_infinity().0,
            }),
            estimate: None,
        }),
        Err(Error::BudgetExceeded { .. }) if config.mc_trials > 0 => {
            let est = monte_carlo(&backend, w, None, config.mc_trials, config.seed ^ param)?;
            Ok(MemberRecord {
                param,
                group: backend.to_string(),
                order: backend.order(),
                method: Method::MonteCarlo,
                exact: None,
                estimate: Some(est),
            })
        }
        Err(e) => Err(e),
    }
}

fn verdict(records: &[MemberRecord], fit: Option<&DecayFit>, rule: &VerdictRule) -> Verdict {
    if records.is_empty() {
        return Verdict::Inconclusive;
    }
    let floor_ok = records.iter().all(|r| r.lower_bound() >= rule.floor);
    let trending_down = fit.is_some_and(|f| f.alpha_hat > rule.bounded_max_alpha);
    if floor_ok && !trending_down {
        return Verdict::BoundedBelow;
    }
    let first = records.first().unwrap().p_value();
    let last = records.last().unwrap().p_value();
    if let Some(f) = fit {
        if f.alpha_hat >= rule.decay_min_alpha
            && f.residual <= rule.max_residual
            && last <= rule.drop_ratio * first
        {
            return Verdict::Decaying;
        }
    }
    Verdict::Inconclusive
}

/// Computes every member (exactly when the budget allows, by Monte Carlo
/// otherwise) and classifies the trend.
pub fn scan_family(
    family: Family,
    params: &[u64],
    w: &Word,
    config: &ScanConfig,
) -> Result<ScanReport> {
    if params.is_empty() {
        return Err(Error::invalid("empty family"));
    }
    if w.is_empty() {
        return Err(Error::invalid("the empty word is not a candidate identity"));
    }
    let outcomes: Vec<(u64, Result<MemberRecord>)> = params
        .par_iter()
        .map(|&p| (p, compute_member(family, p, w, config)))
        .collect();
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (p, outcome) in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => errors.push((p, e.to_string())),
        }
    }
    records.sort_by(|a, b| a.order.cmp(&b.order).then(a.param.cmp(&b.param)));
    errors.sort();

    let sampled_infimum = records
        .iter()
        .map(|r| r.p_value())
        .min_by(|a, b| a.total_cmp(b));
    let sampled_infimum_exact = if records.iter().all(|r| r.exact.is_some()) {
        records.iter().filter_map(|r| r.exact_p()).min()
    } else {
        None
    };
    let points: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.order_f64(), r.p_value()))
        .collect();
    let fit = fit_decay(&points).ok();
    let verdict = verdict(&records, fit.as_ref(), &config.rule);
    Ok(ScanReport {
        family,
        params: params.to_vec(),
        word: w.to_text(),
        records,
        errors,
        sampled_infimum,
        sampled_infimum_exact,
        fit,
        verdict,
        rule: config.rule,
    })
}

/// Whether the word map of `w` on `G` takes more than one value.
pub fn nonconstancy_check(g: &FiniteGroup, w: &Word, budget: Budget) -> Result<bool> {
    Ok(!exact_distribution(g, w, budget)?.is_point_mass())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::enumerate_reduced;

    fn word(t: &str) -> Word {
        Word::parse(t).unwrap()
    }

    fn q(n: u64, d: u64) -> BigRational {
        ratio(n, d)
    }

    #[test]
    fn fit_decay_synthetic() {
        let exact: Vec<(f64, f64)> = [10.0, 100.0, 1000.0, 5000.0]
            .iter()
            .map(|&g| (g, 1.0 / g))
            .collect();
        let f = fit_decay(&exact).unwrap();
        assert!((f.alpha_hat - 1.0).abs() < 1e-12 && f.residual < 1e-12);
        let flat: Vec<(f64, f64)> = [6.0, 10.0, 14.0].iter().map(|&g| (g, 0.5)).collect();
        assert!(fit_decay(&flat).unwrap().alpha_hat.abs() < 1e-12);
        assert!(fit_decay(&exact[..2]).is_err());
        assert!(fit_decay(&[(6.0, 1.0), (8.0, 0.0), (9.0, 0.5)]).is_err());
    }

    #[test]
    fn dihedral_squares_bounded_below() {
        let params: Vec<u64> = (3..=25).collect();
        let r = scan_family(Family::D, &params, &word("x1^2"), &ScanConfig::default()).unwrap();
        for rec in &r.records {
            let m = rec.param;
            let closed = if m % 2 == 1 {
                q(m + 1, 2 * m)
            } else {
                q(m + 2, 2 * m)
            };
            assert_eq!(rec.exact_p().unwrap(), closed);
            assert!(rec.exact_p().unwrap() >= q(1, 2));
        }
        assert_eq!(r.verdict, Verdict::BoundedBelow);
        assert!(r.sampled_infimum_exact.unwrap() >= q(1, 2));
    }

    #[test]
    fn sl2_squares_decay() {
        let r = scan_family(
            Family::SL2,
            &[3, 5, 7, 11, 13],
            &word("x1^2"),
            &ScanConfig::default(),
        )
        .unwrap();
        let ps: Vec<BigRational> = r.records.iter().map(|x| x.exact_p().unwrap()).collect();
        for (rec, p) in r.records.iter().zip(&ps) {
            let order = rec.param * (rec.param * rec.param - 1);
            assert_eq!(*p, q(2, order));
        }
        assert!(ps.windows(2).all(|w| w[1] < w[0]));
        let fit = r.fit.unwrap();
        assert!((fit.alpha_hat - 1.0).abs() < 1e-9 && fit.residual < 1e-6);
        assert_eq!(r.verdict, Verdict::Decaying);
    }

    #[test]
    fn alternating_commutators_decay() {
        let r = scan_family(
            Family::A,
            &[5, 6, 7, 8],
            &word("[x1,x2]"),
            &ScanConfig::default(),
        )
        .unwrap();
        let ks = [5u64, 7, 9, 14];
        for (rec, k) in r.records.iter().zip(ks) {
            let order = rec.order.to_u64().unwrap();
            assert_eq!(rec.exact_p().unwrap(), q(k, order));
        }
        assert_eq!(r.verdict, Verdict::Decaying);
    }

    #[test]
    fn verdict_invariant_under_param_order() {
        let w = word("[x1,x2]");
        let a = scan_family(Family::S, &[3, 4, 5, 6], &w, &ScanConfig::default()).unwrap();
        let b = scan_family(Family::S, &[6, 4, 3, 5], &w, &ScanConfig::default()).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(a.fit, b.fit);
    }

    #[test]
    fn invalid_members_are_reported_and_skipped() {
        let r = scan_family(
            Family::SL2,
            &[3, 4, 5],
            &word("x1^2"),
            &ScanConfig::default(),
        )
        .unwrap();
        assert_eq!(r.records.len(), 2);
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].0, 4);
        let r = scan_family(Family::PSL2, &[9, 8], &word("x1^2"), &ScanConfig::default()).unwrap();
        assert_eq!(r.records.len(), 1);
        assert!(scan_family(Family::D, &[], &word("x1"), &ScanConfig::default()).is_err());
    }

    #[test]
    fn monte_carlo_fallback_is_flagged() {
        let config = ScanConfig {
            budget: Budget(20_000),
            mc_trials: 20_000,
            seed: 3,
            rule: VerdictRule::default(),
        };
        let r = scan_family(Family::S, &[3, 4, 7], &word("[x1,x2]"), &config).unwrap();
        let methods: Vec<Method> = r.records.iter().map(|x| x.method).collect();
        assert_eq!(
            methods,
            vec![Method::Exact, Method::Exact, Method::MonteCarlo]
        );
        assert!(r.sampled_infimum_exact.is_none());
        let est = r.records[2].estimate.as_ref().unwrap();
        assert!(est.wilson_lo <= 15.0 / 5040.0 && 15.0 / 5040.0 <= est.wilson_hi);
        // S_7 Wilson lower bound is far below the floor
        assert_ne!(r.verdict, Verdict::BoundedBelow);
    }

    #[test]
    fn bounded_below_never_issued_on_weak_wilson_bound() {
        let config = ScanConfig {
            budget: Budget(10),
            mc_trials: 200,
            seed: 1,
            rule: VerdictRule {
                floor: 0.45,
                ..VerdictRule::default()
            },
        };
        let r = scan_family(Family::D, &[3, 5, 7, 9], &word("x1^2"), &config).unwrap();
        assert!(r.records.iter().all(|x| x.method == Method::MonteCarlo));
        let weakest = r
            .records
            .iter()
            .map(|x| x.lower_bound())
            .fold(1.0, f64::min);
        if weakest < 0.45 {
            assert_ne!(r.verdict, Verdict::BoundedBelow);
        }
    }

    #[test]
    fn nonconstancy() {
        let budget = Budget::DEFAULT;
        let a5 = FiniteGroup::from_spec("A:5", budget).unwrap();
        assert!(nonconstancy_check(&a5, &word("[x1,x2]"), budget).unwrap());
        let c = FiniteGroup::from_spec("C:4 x C:2", budget).unwrap();
        assert!(!nonconstancy_check(&c, &word("[x1,x2]"), budget).unwrap());
        assert!(nonconstancy_check(&c, &word("x1"), budget).unwrap());
        let c1 = FiniteGroup::from_spec("C:1", budget).unwrap();
        assert!(!nonconstancy_check(&c1, &word("x1"), budget).unwrap());
    }

    #[test]
    fn nontrivial_words_are_nonconstant_on_simple_groups() {
        let budget = Budget::DEFAULT;
        for spec in ["A:5", "A:6", "PSL:2:7"] {
            let g = FiniteGroup::from_spec(spec, budget).unwrap();
            for w in enumerate_reduced(2, 4) {
                assert!(nonconstancy_check(&g, &w, budget).unwrap(), "{spec} {w}");
            }
        }
    }
}
