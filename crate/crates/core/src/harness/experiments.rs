use std::collections::BTreeMap;

use log::info;

use super::config::Scenario;
use super::results::{ResultRow, ResultSource};
use super::schemes::{baseline_codes, fdma_rate, BaselineAssignment, Scheme};
use super::system::{mmse_options, CodeAssignment, PreparedLink};
use crate::detection::{ergodic_rate, ChannelDraws, Detector, RateEstimate};
use crate::detequiv::{det_sinr_reduced, mf_det_sinr, mmse_det_sinr_classes, DiagnosticsRow, ReducedMode};
use crate::error::{Error, Result};
use crate::estimation::pilot_capacity;
use crate::linalg::vec_norm_sqr;

/// Per-user Monte Carlo summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserSummary {
    pub user: usize,
    pub class: usize,
    pub rate: RateEstimate,
    /// Sample mean of `γ` and its standard error.
    pub sinr_mean: f64,
    pub sinr_std_err: f64,
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo summaries of a code-domain scheme over cached draws.
pub fn monte_carlo_users(link: &PreparedLink, sc: &Scenario, codes: &[crate::linalg::CVec], draws: &ChannelDraws) -> Result<Vec<UserSummary>> {
    let system = link.system(codes)?;
    let table = draws.evaluate(&system, &link.receiver(sc))?;
    Ok((0..system.users())
        .map(|k| {
            let gammas: Vec<f64> = table.iter().map(|row| row[k].gamma).collect();
            let (sinr_mean, sinr_std_err) = mean_and_se(&gammas);
            UserSummary { user: k, class: link.classes[k], rate: ergodic_rate(&gammas), sinr_mean, sinr_std_err }
        })
        .collect())
}

/// FDMA rates of the first `users` users from the first data RE of each draw.
pub fn fdma_users(link: &PreparedLink, sc: &Scenario, draws: &ChannelDraws, users: usize) -> Result<Vec<UserSummary>> {
    let BaselineAssignment::Narrowband { share } =
        baseline_codes(Scheme::Fdma, sc.spreading_length(), users, sc.seed, sc.fdma.guard_fraction)?
    else {
        unreachable!("FDMA always yields a bandwidth share")
    };
    let m = link.antennas;
    Ok((0..users)
        .map(|k| {
            let snr = link.powers_w[k] * link.gains[k] / link.noise_w;
            let rates: Vec<f64> = (0..draws.trials())
                .map(|t| fdma_rate(share, snr, vec_norm_sqr(&draws.h[t][k].slice(ndarray::s![..m]))))
                .collect();
            let (mean, std_err) = mean_and_se(&rates);
            UserSummary {
                user: k,
                class: link.classes[k],
                rate: RateEstimate { mean, std_err, trials: rates.len() },
                sinr_mean: f64::NAN,
                sinr_std_err: f64::NAN,
            }
        })
        .collect())
}

struct RowSink<'a> {
    rows: &'a mut Vec<ResultRow>,
    scheme: Scheme,
    antennas: usize,
}

impl RowSink<'_> {
    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, class: usize, user: Option<usize>, detector: &str, metric: &str, value: f64, std_err: Option<f64>, source: ResultSource) {
        self.rows.push(ResultRow {
            scheme: self.scheme.name().to_string(),
            antennas: self.antennas,
            class: class + 1,
            user,
            detector: detector.to_string(),
            metric: metric.to_string(),
            value,
            std_err,
            source,
            target_rate: None,
        });
    }

    /// `class_rate_min` and `class_rate_mean` over the users of every class.
    fn class_aggregates(&mut self, classes: &[usize], rates: &[(f64, Option<f64>)], detectors: &[&str], source: ResultSource) {
        let n_classes = classes.iter().copied().max().map(|c| c + 1).unwrap_or(0);
        for c in 0..n_classes {
            let members: Vec<usize> = (0..classes.len()).filter(|&k| classes[k] == c).collect();
            if members.is_empty() {
                continue;
            }
            let worst = members.iter().copied().min_by(|&a, &b| rates[a].0.total_cmp(&rates[b].0)).expect("non-empty");
            self.push(c, None, detectors[c], "class_rate_min", rates[worst].0, rates[worst].1, source);
            let mean = members.iter().map(|&k| rates[k].0).sum::<f64>() / members.len() as f64;
            let se = rates[members[0]].1.map(|_| {
                (members.iter().map(|&k| rates[k].1.unwrap_or(0.0).powi(2)).sum::<f64>()).sqrt() / members.len() as f64
            });
            self.push(c, None, detectors[c], "class_rate_mean", mean, se, source);
        }
    }
}

/// Theorem-level and corollary-level deterministic equivalents for MOMA.
pub struct DetEquivOutput {
    /// `γ̄_k` from the full `NM × NM` statistics.
    pub theorem: Vec<f64>,
    /// `γ̄_k` from the flat `M × M` reductions.
    pub corollary: Vec<f64>,
    pub diagnostics: Vec<DiagnosticsRow>,
}

pub fn moma_det_equiv(link: &PreparedLink, sc: &Scenario, assignment: &CodeAssignment, with_corollary: bool) -> Result<DetEquivOutput> {
    let detectors = sc.detectors();
    let de = link.de_scenario(&assignment.codes);
    let mut theorem = vec![f64::NAN; de.users.len()];
    let mf = mf_det_sinr(&de)?;
    let mmse_classes: Vec<usize> = (0..detectors.len()).filter(|&c| detectors[c] == Detector::Mmse).collect();
    for (k, &g) in mf.iter().enumerate() {
        if detectors[link.classes[k]] == Detector::Mf {
            theorem[k] = g;
        }
    }
    let opts = mmse_options(sc);
    let mut diagnostics = Vec::new();
    if !mmse_classes.is_empty() {
        if sc.receiver.mmse_all_classes {
            return Err(Error::ModePreconditionViolated(
                "deterministic equivalents assume a per-class MMSE inverse".into(),
            ));
        }
        for res in mmse_det_sinr_classes(&de, &mmse_classes, &opts)? {
            diagnostics.push(DiagnosticsRow::from(&res));
            for u in &res.users {
                theorem[u.user] = u.gamma;
            }
        }
    }
    let mut corollary = vec![f64::NAN; de.users.len()];
    if with_corollary {
        let flat = link.flat_scenario(sc, assignment)?;
        let flat = crate::detequiv::FlatScenario { users: flat.users[..de.users.len()].to_vec(), ..flat };
        let mf_flat = det_sinr_reduced(ReducedMode::MfFlat, &flat, &opts)?;
        let mmse_flat = if mmse_classes.is_empty() { None } else { Some(det_sinr_reduced(ReducedMode::MmseFlat, &flat, &opts)?) };
        for k in 0..corollary.len() {
            corollary[k] = match detectors[link.classes[k]] {
                Detector::Mf => mf_flat[k],
                Detector::Mmse => mmse_flat.as_ref().expect("MMSE class present")[k],
            };
        }
    }
    Ok(DetEquivOutput { theorem, corollary, diagnostics })
}

/// Ergodic rates of every scheme and class against the antenna count.
pub fn run_rate_vs_antennas(sc: &Scenario) -> Result<Vec<ResultRow>> {
    sc.validate()?;
    let sizes = sc.class_sizes();
    let detector_names: Vec<&str> = sc.detectors().iter().map(|d| d.name()).collect();
    let mut rows = Vec::new();
    for &m in &sc.antennas {
        info!("rate-vs-antennas: M = {m}");
        let link = PreparedLink::new(sc, m, &sizes)?;
        let draws = link.draws(sc, sc.trials)?;
        for &scheme in &sc.schemes {
            let mut sink = RowSink { rows: &mut rows, scheme, antennas: m };
            let (summaries, assignment) = if scheme == Scheme::Fdma {
                (fdma_users(&link, sc, &draws, link.users())?, None)
            } else {
                let a = link.codes(sc, scheme)?;
                (monte_carlo_users(&link, sc, &a.codes, &draws)?, Some(a))
            };
            let det_of = |c: usize| if scheme == Scheme::Fdma { "mf" } else { detector_names[c] };
            let per_class_det: Vec<&str> = (0..sc.classes.len()).map(det_of).collect();
            for s in &summaries {
                sink.push(s.class, Some(s.user), det_of(s.class), "rate", s.rate.mean, Some(s.rate.std_err), ResultSource::MonteCarlo);
                if s.sinr_mean.is_finite() {
                    sink.push(s.class, Some(s.user), det_of(s.class), "sinr_mean", s.sinr_mean, Some(s.sinr_std_err), ResultSource::MonteCarlo);
                }
            }
            let mc: Vec<(f64, Option<f64>)> = summaries.iter().map(|s| (s.rate.mean, Some(s.rate.std_err))).collect();
            sink.class_aggregates(&link.classes, &mc, &per_class_det, ResultSource::MonteCarlo);

            if let (Scheme::Moma, Some(a)) = (scheme, assignment.as_ref()) {
                let de = moma_det_equiv(&link, sc, a, true)?;
                for (values, source) in [(&de.theorem, ResultSource::DetEquivTheorem), (&de.corollary, ResultSource::DetEquivCorollary)] {
                    for (k, &g) in values.iter().enumerate() {
                        let c = link.classes[k];
                        sink.push(c, Some(k), det_of(c), "sinr", g, None, source);
                        sink.push(c, Some(k), det_of(c), "rate", (1.0 + g).log2(), None, source);
                    }
                    let rates: Vec<(f64, Option<f64>)> = values.iter().map(|g| ((1.0 + g).log2(), None)).collect();
                    sink.class_aggregates(&link.classes, &rates, &per_class_det, source);
                }
            }
        }
    }
    Ok(rows)
}

/// Outcome of the class-2 capacity search.
#[derive(Debug, Clone)]
pub struct CapacityOutcome {
    pub rows: Vec<ResultRow>,
    /// Minimum class-2 Monte Carlo rate for `K_2 = 1, 2, …` until the search
    /// stopped.
    pub curves: BTreeMap<Scheme, Vec<f64>>,
}

/// Largest `K_2` before the first `K_2` whose worst class-2 rate drops below
/// `target`, capped by the length of the searched curve.
pub fn max_users_meeting(curve: &[f64], target: f64) -> usize {
    curve.iter().position(|&r| r < target).unwrap_or(curve.len())
}

/// For each class-2 target rate, the largest class-2 population whose every
/// user still reaches it, with class 1 held at its configured size.
pub fn run_capacity_vs_target_rate(sc: &Scenario) -> Result<CapacityOutcome> {
    sc.validate()?;
    if sc.classes.len() != 2 {
        return Err(Error::InvalidConfig("the capacity search needs exactly two classes".into()));
    }
    let cap = &sc.capacity;
    if cap.target_rates.is_empty() || cap.ceiling == 0 {
        return Err(Error::InvalidConfig("capacity search needs target rates and a positive ceiling".into()));
    }
    let map = sc.resources.data_map(sc.spreading_length())?;
    let capacity = pilot_capacity(&map);
    if cap.class1_users + cap.ceiling > capacity {
        return Err(Error::SearchBudgetExceeded { ceiling: cap.ceiling, capacity });
    }
    let link = PreparedLink::new(sc, cap.antennas, &[cap.class1_users, cap.ceiling])?;
    let draws = link.draws(sc, sc.trials)?;
    let stop = cap.target_rates.iter().copied().fold(f64::INFINITY, f64::min);
    let mut curves = BTreeMap::new();
    let mut rows = Vec::new();
    for &scheme in &sc.schemes {
        let mut curve = Vec::new();
        for k2 in 1..=cap.ceiling {
            let users = cap.class1_users + k2;
            let summaries = if scheme == Scheme::Fdma {
                fdma_users(&link, sc, &draws, users)?
            } else {
                let a = link.codes_for_sizes(sc, scheme, &[cap.class1_users, k2])?;
                monte_carlo_users(&link, sc, &a.codes, &draws)?
            };
            let worst = summaries.iter().filter(|s| s.class == 1).map(|s| s.rate.mean).fold(f64::INFINITY, f64::min);
            curve.push(worst);
            if worst < stop {
                break;
            }
        }
        info!("capacity search {scheme}: {} populations tried", curve.len());
        let detector = if scheme == Scheme::Fdma { "mf" } else { sc.classes[1].detector.name() };
        for &r2 in &cap.target_rates {
            rows.push(ResultRow {
                scheme: scheme.name().to_string(),
                antennas: cap.antennas,
                class: 2,
                user: None,
                detector: detector.to_string(),
                metric: "max_class2_users".to_string(),
                value: max_users_meeting(&curve, r2) as f64,
                std_err: None,
                source: ResultSource::MonteCarlo,
                target_rate: Some(r2),
            });
        }
        curves.insert(scheme, curve);
    }
    Ok(CapacityOutcome { rows, curves })
}

/// MOMA deterministic equivalents and solver diagnostics at one antenna count.
pub fn run_det_equiv(sc: &Scenario, antennas: usize) -> Result<(Vec<ResultRow>, Vec<DiagnosticsRow>)> {
    sc.validate()?;
    let link = PreparedLink::new(sc, antennas, &sc.class_sizes())?;
    let a = link.codes(sc, Scheme::Moma)?;
    let de = moma_det_equiv(&link, sc, &a, true)?;
    let mut rows = Vec::new();
    let mut sink = RowSink { rows: &mut rows, scheme: Scheme::Moma, antennas };
    let names: Vec<&str> = sc.detectors().iter().map(|d| d.name()).collect();
    for (values, source) in [(&de.theorem, ResultSource::DetEquivTheorem), (&de.corollary, ResultSource::DetEquivCorollary)] {
        for (k, &g) in values.iter().enumerate() {
            let c = link.classes[k];
            sink.push(c, Some(k), names[c], "sinr", g, None, source);
        }
    }
    Ok((rows, de.diagnostics))
}
