use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use super::report::{Report, Row};
use super::BenchError;

/// Fewest paired replications a ranking accepts.
pub const MIN_REPLICATIONS: usize = 10;

/// One-sided sign test of "`better` is lower than `worse`" over paired
/// replications. Ties are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    pub better: String,
    pub worse: String,
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyStats {
    pub strategy: String,
    pub mean: f64,
    /// 1-based; equal means share a rank.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub entity: String,
    /// Replications present for every strategy.
    pub replications: Vec<usize>,
    /// Best mean first.
    pub strategies: Vec<StrategyStats>,
    /// Every pair, better-ranked strategy first.
    pub pairs: Vec<SignTest>,
    series: Vec<Vec<f64>>,
}

impl RankTable {
    fn index(&self, strategy: &str) -> Option<usize> {
        self.strategies.iter().position(|s| s.strategy == strategy)
    }

    pub fn mean(&self, strategy: &str) -> Option<f64> {
        self.index(strategy).map(|i| self.strategies[i].mean)
    }

    pub fn values(&self, strategy: &str) -> Option<&[f64]> {
        self.index(strategy).map(|i| self.series[i].as_slice())
    }

    /// Sign test that `better` is lower than `worse`.
    pub fn test(&self, better: &str, worse: &str) -> Option<SignTest> {
        let a = self.values(better)?;
        let b = self.values(worse)?;
        Some(sign_test(better, a, worse, b))
    }
}

pub fn sign_test(better: &str, a: &[f64], worse: &str, b: &[f64]) -> SignTest {
    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => wins += 1,
            std::cmp::Ordering::Greater => losses += 1,
            std::cmp::Ordering::Equal => ties += 1,
        }
    }
    SignTest { better: better.into(), worse: worse.into(), wins, losses, ties, p_value: sign_p_value(wins, losses) }
}

/// P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
pub fn sign_p_value(wins: usize, losses: usize) -> f64 {
    let n = (wins + losses) as u64;
    if wins == 0 {
        return 1.0;
    }
    let dist = Binomial::new(0.5, n).expect("valid binomial");
    dist.sf(wins as u64 - 1)
}

/// Ranks strategies by the mean enhanced total of the `total` entity.
pub fn compare_strategies(report: &Report) -> Result<RankTable, BenchError> {
    compare_by(report, "total", |r| r.enhanced)
}

pub fn compare_by(report: &Report, entity: &str, value: impl Fn(&Row) -> f64) -> Result<RankTable, BenchError> {
    let names = report.strategies();
    if names.len() < 2 {
        return Err(BenchError::Compare(format!("need at least 2 strategies, found {}", names.len())));
    }
    let per: Vec<Vec<&Row>> = names.iter().map(|s| report.series(s, entity).collect()).collect();
    let mut replications: Vec<usize> = per[0].iter().map(|r| r.replication).collect();
    replications.retain(|rep| per.iter().all(|rows| rows.iter().any(|r| r.replication == *rep)));
    replications.sort_unstable();
    replications.dedup();
    if replications.len() < MIN_REPLICATIONS {
        return Err(BenchError::Compare(format!(
            "need at least {MIN_REPLICATIONS} replications completed by every strategy, found {}",
            replications.len()
        )));
    }
    let series: Vec<Vec<f64>> = per
        .iter()
        .map(|rows| {
            replications
                .iter()
                .map(|rep| value(rows.iter().find(|r| r.replication == *rep).expect("present")))
                .collect()
        })
        .collect();
    let means: Vec<f64> = series.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();

    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&i, &j| means[i].total_cmp(&means[j]).then(i.cmp(&j)));
    let mut strategies: Vec<StrategyStats> = Vec::with_capacity(order.len());
    for (pos, &i) in order.iter().enumerate() {
        let rank = match strategies.last() {
            Some(prev) if same(prev.mean, means[i]) => prev.rank,
            _ => pos + 1,
        };
        strategies.push(StrategyStats { strategy: names[i].clone(), mean: means[i], rank });
    }
    let series: Vec<Vec<f64>> = order.iter().map(|&i| series[i].clone()).collect();
    let mut pairs = Vec::new();
    for a in 0..order.len() {
        for b in a + 1..order.len() {
            pairs.push(sign_test(&strategies[a].strategy, &series[a], &strategies[b].strategy, &series[b]));
        }
    }
    Ok(RankTable { entity: entity.into(), replications, strategies, pairs, series })
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// An expected ordering such as `a << b < c,d`: groups separated by `<`
/// (means ordered) or `<<` (means ordered and the sign test significant),
/// strategies within a group separated by `,`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expectation {
    pub groups: Vec<Vec<String>>,
    /// One flag per gap between consecutive groups.
    pub significant: Vec<bool>,
}

impl std::str::FromStr for Expectation {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut groups = Vec::new();
        let mut significant = Vec::new();
        let mut rest = s;
        loop {
            let cut = rest.find('<').unwrap_or(rest.len());
            let group: Vec<String> = rest[..cut].split(',').map(|x| x.trim().to_string()).collect();
            if group.iter().any(String::is_empty) {
                return Err(BenchError::Compare(format!("empty strategy name in {s:?}")));
            }
            groups.push(group);
            if cut == rest.len() {
                break;
            }
            rest = &rest[cut + 1..];
            let strict = rest.starts_with('<');
            if strict {
                rest = &rest[1..];
            }
            significant.push(strict);
        }
        if groups.len() < 2 {
            return Err(BenchError::Compare(format!("{s:?} orders nothing")));
        }
        Ok(Self { groups, significant })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepCheck {
    /// Highest mean of the lower group against the lowest of the upper one.
    pub lower: String,
    pub upper: String,
    pub lower_mean: f64,
    pub upper_mean: f64,
    pub test: SignTest,
    pub needs_significance: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderCheck {
    pub steps: Vec<StepCheck>,
    pub holds: bool,
}

/// Checks every gap of `expectation`: the worst mean of each group must not
/// exceed the best mean of the next, and for `<<` gaps the sign test between
/// those two strategies must reach `alpha`.
pub fn check_order(table: &RankTable, expectation: &Expectation, alpha: f64) -> Result<OrderCheck, BenchError> {
    let mut resolved = Vec::new();
    for group in &expectation.groups {
        let mut g = Vec::new();
        for name in group {
            let mean = table.mean(name).ok_or_else(|| BenchError::Compare(format!("no strategy named {name:?} in the report")))?;
            g.push((name.as_str(), mean));
        }
        resolved.push(g);
    }
    let mut steps = Vec::new();
    for (i, strict) in expectation.significant.iter().enumerate() {
        let (lower, lower_mean) = *resolved[i].iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty group");
        let (upper, upper_mean) = *resolved[i + 1].iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty group");
        let test = table.test(lower, upper).expect("resolved names");
        let holds = lower_mean <= upper_mean && (!strict || test.p_value < alpha);
        steps.push(StepCheck {
            lower: lower.into(),
            upper: upper.into(),
            lower_mean,
            upper_mean,
            test,
            needs_significance: *strict,
            holds,
        });
    }
    let holds = steps.iter().all(|s| s.holds);
    Ok(OrderCheck { steps, holds })
}
