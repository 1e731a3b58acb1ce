//! The full analysis pipeline behind `mrws analyze`.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::connectivity::{invariant_blocks, is_m_connected};
use crate::curvature::{be_best_constant, ollivier_global, Dimension, PairPolicy, ALL_PAIRS_LIMIT};
use crate::error::{Error, Result};
use crate::geometry::{cheeger, CheegerMethod, CheegerMode, EXACT_CHEEGER_LIMIT};
use crate::space::{validate_space, Space};
use crate::spectral::spectral_gap;
use crate::transport::{transport_stats, verify_transport_inequality, InequalityKind};

/// Relative slack for the consistency checks on the finished report.
pub const CONSISTENCY_TOL: f64 = 1e-9;
const SPECTRUM_HEAD: usize = 10;
/// Transport-inequality trials are skipped above this size.
pub const TRANSPORT_LIMIT: usize = 64;

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub be_dimensions: Vec<Dimension>,
    pub trials: usize,
    pub seed: u64,
    pub timings: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            be_dimensions: vec![Dimension::Finite(2.0), Dimension::Infinite],
            trials: 50,
            seed: 0,
            timings: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpaceSummary {
    pub n: usize,
    pub total_mass: f64,
    pub normalized: bool,
    pub residuals: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConnectivitySection {
    pub m_connected: bool,
    pub blocks: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralSection {
    pub gap: f64,
    pub spectrum_head: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheegerSection {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
    pub method: CheegerMethod,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureSection {
    pub kappa_m: f64,
    pub pair_policy: PairPolicy,
    pub be: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InequalitySummary {
    /// Serialized as `null` when infinite.
    pub max_ratio: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportSection {
    pub theta_m: f64,
    /// `None` when the hypothesis fails or the space exceeds
    /// [`TRANSPORT_LIMIT`].
    pub inequalities: BTreeMap<String, Option<InequalitySummary>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub version: String,
    pub input_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub space: SpaceSummary,
    pub connectivity: ConnectivitySection,
    pub spectral: SpectralSection,
    pub cheeger: CheegerSection,
    pub curvature: CurvatureSection,
    pub transport: TransportSection,
    pub provenance: Provenance,
}

struct Clock {
    enabled: bool,
    laps: BTreeMap<String, f64>,
}

impl Clock {
    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if self.enabled {
            self.laps.insert(name.to_string(), start.elapsed().as_secs_f64());
        }
        out
    }
}

/// Runs every section on a validated space. `input_sha256` is recorded
/// verbatim in the provenance block.
pub fn analyze(space: &Space, input_sha256: &str, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    let validation = validate_space(space);
    if !validation.is_valid() {
        return Err(Error::Validation(Box::new(validation)));
    }
    let n = space.len();
    let mut clock = Clock {
        enabled: opts.timings,
        laps: BTreeMap::new(),
    };

    let summary = SpaceSummary {
        n,
        total_mass: space.total_mass(),
        normalized: space.is_normalized(),
        residuals: validation
            .residuals
            .iter()
            .map(|r| (r.axiom.to_string(), r.max_residual))
            .collect(),
    };

    let connectivity = clock.time("connectivity", || ConnectivitySection {
        m_connected: is_m_connected(space),
        blocks: invariant_blocks(space).blocks.iter().map(|b| b.indices()).collect(),
    });

    let spec = clock.time("spectral", || spectral_gap(space));
    let spectral = SpectralSection {
        gap: spec.gap,
        spectrum_head: spec.spectrum.iter().take(SPECTRUM_HEAD).copied().collect(),
    };

    let cheeger = if n < 2 {
        CheegerSection {
            lower: 0.0,
            upper: 0.0,
            exact: true,
            method: CheegerMethod::Enumeration,
        }
    } else {
        let mode = if n <= EXACT_CHEEGER_LIMIT {
            CheegerMode::Exact
        } else {
            CheegerMode::Sweep
        };
        let c = clock.time("cheeger", || cheeger(space, mode))?;
        CheegerSection {
            lower: c.lower,
            upper: c.upper,
            exact: c.exact,
            method: c.method,
        }
    };

    let policy = if n <= ALL_PAIRS_LIMIT {
        PairPolicy::AllPairs
    } else {
        PairPolicy::SupportEdges
    };
    let curvature = clock.time("curvature", || -> Result<CurvatureSection> {
        let kappa_m = ollivier_global(space, policy)?.kappa_global;
        let be = opts
            .be_dimensions
            .iter()
            .map(|&dim| Ok((dim.to_string(), be_best_constant(space, dim)?.k_best_global)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(CurvatureSection {
            kappa_m,
            pair_policy: policy,
            be,
        })
    })?;

    let transport = clock.time("transport", || -> Result<TransportSection> {
        let theta_m = transport_stats(space).theta_m;
        let mut inequalities = BTreeMap::new();
        for kind in [InequalityKind::TiBe, InequalityKind::TiOllivier, InequalityKind::Te] {
            let ratio = if n > TRANSPORT_LIMIT || n < 2 {
                None
            } else {
                match verify_transport_inequality(space, kind, opts.trials, opts.seed) {
                    Ok(r) => Some(InequalitySummary {
                        max_ratio: r.max_ratio,
                        violations: r.violations,
                    }),
                    Err(Error::Hypothesis(_)) => None,
                    Err(e) => return Err(e),
                }
            };
            inequalities.insert(kind.to_string(), ratio);
        }
        Ok(TransportSection { theta_m, inequalities })
    })?;

    let report = AnalysisReport {
        space: summary,
        connectivity,
        spectral,
        cheeger,
        curvature,
        transport,
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            input_sha256: input_sha256.to_string(),
            seconds: opts.timings.then_some(clock.laps),
        },
    };
    check_consistency(&report)?;
    Ok(report)
}

fn leq(a: f64, b: f64) -> bool {
    a <= b + CONSISTENCY_TOL * (1.0 + a.abs().max(b.abs()))
}

/// Re-asserts the inequalities linking the reported constants. The BE bound
/// on the gap is only checked on m-connected spaces, since BE(K, ∞) is a
/// local condition that each block can satisfy separately.
pub fn check_consistency(r: &AnalysisReport) -> Result<()> {
    let gap = r.spectral.gap;
    let c = &r.cheeger;
    let mut broken = Vec::new();
    if r.space.n >= 2 {
        if c.exact && !leq(c.upper * c.upper / 2.0, gap) {
            broken.push(format!("h^2/2 = {} exceeds gap {gap}", c.upper * c.upper / 2.0));
        }
        if !leq(gap, 2.0 * c.upper) {
            broken.push(format!("gap {gap} exceeds 2h <= {}", 2.0 * c.upper));
        }
    }
    let kappa = r.curvature.kappa_m;
    if kappa > 0.0 && kappa.is_finite() && !leq(kappa, gap) {
        broken.push(format!("kappa_m {kappa} exceeds gap {gap}"));
    }
    if let (true, Some(&k)) = (r.connectivity.m_connected, r.curvature.be.get("inf")) {
        if k > 0.0 && k.is_finite() && !leq(k, gap) {
            broken.push(format!("K_inf {k} exceeds gap {gap}"));
        }
    }
    if broken.is_empty() {
        Ok(())
    } else {
        Err(Error::Solver(format!("inconsistent report: {}", broken.join("; "))))
    }
}
