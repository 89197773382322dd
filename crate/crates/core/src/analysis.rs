//! Post-processing of DP tables: lower bounds, efficiency heatmaps, regret.

use crate::control::RunTrace;
use crate::dp::{DpTables, ExtendedTime};
use crate::error::{Error, Result};
use crate::problems::{initial_fitness_distribution, FitnessDistribution, Problem};

/// `Σ_f T*_f · p_init(f)`: the expected runtime under the optimal
/// fitness-dependent rates of the grid.
pub fn lower_bound(tables: &DpTables, init: &FitnessDistribution) -> Result<ExtendedTime> {
    let (f_min, f_max) = tables.fitness_range();
    let mut total = ExtendedTime::ZERO;
    for (f, mass) in init.iter() {
        if f < f_min || f > f_max {
            return Err(Error::Mismatch(format!(
                "initial fitness {f} outside table range [{f_min}..{f_max}]"
            )));
        }
        if mass > 0.0 {
            total = total + tables.t_star(f)? * mass;
        }
    }
    Ok(total)
}

/// [`lower_bound`] with the uniform initial distribution of `problem`,
/// checking that the tables were computed for it.
pub fn lower_bound_for<P: Problem + ?Sized>(problem: &P, tables: &DpTables) -> Result<ExtendedTime> {
    check_problem(problem, tables)?;
    lower_bound(tables, &initial_fitness_distribution(problem)?)
}

pub fn check_problem<P: Problem + ?Sized>(problem: &P, tables: &DpTables) -> Result<()> {
    let meta = tables.meta();
    if meta.problem != problem.name() || meta.n != problem.size() {
        return Err(Error::Mismatch(format!(
            "tables are for {} n={}, problem is {} n={}",
            meta.problem,
            meta.n,
            problem.name(),
            problem.size()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapCell {
    pub fitness: i64,
    pub rate: f64,
    /// Relative efficiency `exp(α_f · (T*_f − T_{f,p}))`, zero for infinite cells.
    pub efficiency: f64,
    pub alpha: f64,
    pub time: ExtendedTime,
}

/// Scaling for one row: `min(1, ln 2 / d_med)` with `d_med` the lower median
/// of the row's deviations (infinite cells count as `+∞`), nudged down if
/// rounding would push the median cell below one half.
fn row_alpha(deviations: &mut [f64]) -> f64 {
    if deviations.is_empty() {
        return 1.0;
    }
    deviations.sort_by(f64::total_cmp);
    let median = deviations[(deviations.len() - 1) / 2];
    if median <= 0.0 || median.is_infinite() {
        return 1.0;
    }
    let mut alpha = (std::f64::consts::LN_2 / median).min(1.0);
    while alpha > 0.0 && (-alpha * median).exp() < 0.5 {
        alpha = f64::from_bits(alpha.to_bits() - 1);
    }
    alpha
}

/// Relative efficiency of every grid cell.
pub fn heatmap(tables: &DpTables) -> Vec<HeatmapCell> {
    let (f_min, f_max) = tables.fitness_range();
    let mut cells = Vec::new();
    for f in f_min..f_max {
        let row = tables.row(f).expect("level in range");
        let rates = tables.grid().rates(f);
        let best = tables.t_star(f).expect("level in range");
        let mut deviations: Vec<f64> = row
            .iter()
            .map(|t| {
                if t.is_finite() && best.is_finite() {
                    (t.value() - best.value()).max(0.0)
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let alpha = row_alpha(&mut deviations);
        for (&time, &rate) in row.iter().zip(rates) {
            let efficiency = if time.is_infinite() || best.is_infinite() {
                0.0
            } else {
                (alpha * (best.value() - time.value())).exp().min(1.0)
            };
            cells.push(HeatmapCell {
                fitness: f,
                rate,
                efficiency,
                alpha,
                time,
            });
        }
    }
    cells
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretPoint {
    pub iteration: u64,
    pub fitness: i64,
    pub rate: f64,
    /// Grid rate the policy's rate was mapped to.
    pub mapped_rate: f64,
    pub regret: ExtendedTime,
}

impl RegretPoint {
    pub fn infinite(&self) -> bool {
        self.regret.is_infinite()
    }
}

/// `|T_{f,p} − T*_f|` for the rate chosen in every iteration of `trace`,
/// with `p` mapped to the nearest grid rate in log space.
pub fn regret_trace(trace: &RunTrace, tables: &DpTables) -> Result<Vec<RegretPoint>> {
    let (f_min, f_max) = tables.fitness_range();
    trace
        .records
        .iter()
        .take_while(|r| r.fitness < f_max)
        .map(|r| {
            if r.fitness < f_min {
                return Err(Error::FitnessOutOfRange {
                    fitness: r.fitness,
                    min: f_min,
                    max: f_max,
                });
            }
            let idx = tables.grid().nearest_index(r.fitness, r.rate);
            let time = tables.time(r.fitness, idx)?;
            Ok(RegretPoint {
                iteration: r.iteration,
                fitness: r.fitness,
                rate: r.rate,
                mapped_rate: tables.grid().rates(r.fitness)[idx],
                regret: time.abs_diff(tables.t_star(r.fitness)?),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{IterationRecord, RunStatus};
    use crate::dp::{RateGrid, TableMeta, TransitionSource};
    use proptest::prelude::*;

    fn et(v: f64) -> ExtendedTime {
        ExtendedTime::new(v).unwrap()
    }

    fn toy_tables(rows: Vec<Vec<ExtendedTime>>, rates: Vec<f64>) -> DpTables {
        let levels = rows.len() as i64;
        DpTables::from_times(
            TableMeta {
                problem: "onemax".into(),
                n: levels as usize,
                lambda: 1,
                source: TransitionSource::Exact,
            },
            0,
            levels,
            RateGrid::uniform(rates, 0, levels).unwrap(),
            rows,
        )
        .unwrap()
    }

    #[test]
    fn lower_bound_examples() {
        let tables = toy_tables(vec![vec![et(2.0)]], vec![0.1]);
        let at_opt = FitnessDistribution::from_pairs([(1, 1.0)]);
        assert_eq!(lower_bound(&tables, &at_opt).unwrap(), ExtendedTime::ZERO);
        let half = FitnessDistribution::from_pairs([(0, 0.5), (1, 0.5)]);
        assert_eq!(lower_bound(&tables, &half).unwrap(), et(1.0));
        let outside = FitnessDistribution::from_pairs([(2, 1.0)]);
        assert!(matches!(lower_bound(&tables, &outside), Err(Error::Mismatch(_))));
    }

    #[test]
    fn lower_bound_infinite_when_reachable_level_is_stuck() {
        let tables = toy_tables(vec![vec![ExtendedTime::INFINITY], vec![et(1.0)]], vec![0.1]);
        let init = FitnessDistribution::from_pairs([(0, 0.25), (1, 0.75)]);
        assert!(lower_bound(&tables, &init).unwrap().is_infinite());
        let init = FitnessDistribution::from_pairs([(0, 0.0), (1, 1.0)]);
        assert_eq!(lower_bound(&tables, &init).unwrap(), et(1.0));
    }

    #[test]
    fn lower_bound_checks_problem() {
        let tables = toy_tables(vec![vec![et(2.0)]], vec![0.1]);
        let other = crate::problems::Benchmark::ruggedness(2).unwrap();
        assert!(lower_bound_for(&other, &tables).is_err());
        let same = crate::problems::Benchmark::onemax(1).unwrap();
        assert_eq!(lower_bound_for(&same, &tables).unwrap(), et(1.0));
    }

    #[test]
    fn heatmap_examples() {
        let tables = toy_tables(
            vec![
                vec![et(4.0), et(4.0), et(4.0)],
                vec![et(10.0), et(3.0), ExtendedTime::INFINITY],
            ],
            vec![0.1, 0.2, 0.3],
        );
        let cells = heatmap(&tables);
        assert_eq!(cells.len(), 6);
        assert!(cells[..3].iter().all(|c| c.efficiency == 1.0 && c.alpha == 1.0));
        let row: Vec<_> = cells[3..].to_vec();
        assert_eq!(row[1].efficiency, 1.0);
        assert_eq!(row[2].efficiency, 0.0);
        // deviations {0, 7, inf}: median 7
        assert!((row[0].alpha - std::f64::consts::LN_2 / 7.0).abs() < 1e-15);
        assert!(row[0].efficiency >= 0.5 && row[0].efficiency < 0.5 + 1e-12);
    }

    #[test]
    fn regret_examples() {
        let tables = toy_tables(
            vec![vec![et(5.0), et(2.0), ExtendedTime::INFINITY], vec![et(1.0), et(1.5), et(3.0)]],
            vec![0.01, 0.1, 1.0],
        );
        let rec = |iteration, fitness, rate| IterationRecord {
            iteration,
            fitness,
            rate,
            best_offspring_fitness: fitness,
            success: false,
        };
        let trace = RunTrace {
            initial_fitness: 0,
            records: vec![rec(1, 0, 0.1), rec(2, 0, 0.012), rec(3, 0, 0.9), rec(4, 1, 0.1)],
            status: RunStatus::Optimum { iterations: 4 },
        };
        let points = regret_trace(&trace, &tables).unwrap();
        assert_eq!(points.len(), 4);
        assert_eq!(points[0].regret, ExtendedTime::ZERO);
        assert_eq!(points[1].mapped_rate, 0.01);
        assert_eq!(points[1].regret, et(3.0));
        assert!(points[2].infinite());
        assert_eq!(points[3].regret, et(0.5));
        let bad = RunTrace {
            initial_fitness: -1,
            records: vec![rec(1, -1, 0.1)],
            status: RunStatus::BudgetExhausted { iterations: 1 },
        };
        assert!(regret_trace(&bad, &tables).is_err());
    }

    proptest! {
        #[test]
        fn heatmap_half_row_condition(devs in proptest::collection::vec(0.0f64..1e6, 1..120)) {
            let best = 5.0;
            let row: Vec<ExtendedTime> = std::iter::once(et(best))
                .chain(devs.iter().map(|d| et(best + d)))
                .collect();
            let m = row.len();
            let rates: Vec<f64> = (1..=m).map(|i| i as f64 / (m as f64 + 1.0)).collect();
            let tables = toy_tables(vec![row], rates);
            let cells = heatmap(&tables);
            let good = cells.iter().filter(|c| c.efficiency >= 0.5).count();
            prop_assert!(2 * good >= m);
            prop_assert!(cells.iter().all(|c| c.alpha <= 1.0 && c.alpha > 0.0));
            prop_assert!(cells.iter().any(|c| c.efficiency == 1.0));
            for a in &cells {
                for b in &cells {
                    if a.time < b.time {
                        prop_assert!(a.efficiency >= b.efficiency);
                    }
                }
            }
        }
    }
}
