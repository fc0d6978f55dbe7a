//! Config-driven pipelines that write reproducible artifact directories.
//!
//! A synthetic run generates a substrate, walks it, projects the walks into
//! a co-occurrence network and writes every selected observable as CSV, a
//! `fits.json` summary and a `manifest.json` carrying the resolved config
//! and a SHA-256 for each file. Nothing in an artifact directory depends on
//! the worker count or the wall clock.

pub mod artifacts;
pub mod compare;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cooc::{build_from_traces_par, CoocGraph, TagIndex};
use crate::ingest::{self, node_label, ValidityWindow};
use crate::observables::{
    self, cosine_similarity_distribution, fit_power_law, frequency_rank, rank_points, thin_log_spaced, BinnedSeries,
    FitResult, RankedItem, WeightedAdjacency, Window, DEFAULT_PAIR_BUDGET, SIMILARITY_BINS,
};
use crate::substrate::{bfs_rings, GraphSpec, GraphVariant, RingProfile, SubstrateGraph};
use crate::theory::{
    estimate_visit_probs, n_distinct_exact, n_distinct_exact_stderr, RandomLengthSeries, RingModel, RingModelSpec,
    SeriesOptions,
};
use crate::walker::{
    run_ensemble_with, trace_lengths_histogram, write_traces, HeapsCurve, LengthSpec, WalkConfig, WalkTrace,
};
use crate::{Error, NodeId, Result};

pub use artifacts::{sha256_file, ArtifactDir};
pub use compare::{compare, CompareReport, QuantityDiff};

pub const FORMAT_VERSION: u32 = 1;

pub const MANIFEST: &str = "manifest.json";
pub const FITS: &str = "fits.json";
pub const SUBSTRATE: &str = "substrate.tsv";
pub const RINGS: &str = "rings.csv";
pub const HEAPS: &str = "heaps.csv";
pub const LENGTHS: &str = "length_hist.csv";
pub const TRACES: &str = "traces.txt";
pub const COOC: &str = "cooc.tsv";
pub const TAGS: &str = "tags.tsv";
pub const P_K: &str = "p_k.csv";
pub const P_S: &str = "p_s.csv";
pub const P_W: &str = "p_w.csv";
pub const S_OF_K: &str = "s_of_k.csv";
pub const KNN: &str = "knn.csv";
pub const CLUSTERING: &str = "clustering.csv";
pub const WEIGHT_DEGREE: &str = "weight_vs_kikj.csv";
pub const WEIGHT_DEGREE_EDGES: &str = "weight_vs_kikj_edges.csv";
pub const SIMILARITY: &str = "similarity.csv";
pub const FREQUENCY_RANK: &str = "frequency_rank.csv";
pub const THEORY: &str = "theory.csv";
pub const THEORY_EXACT: &str = "theory_exact.csv";
pub const REJECTIONS: &str = "rejections.csv";
pub const STREAM: &str = "stream.jsonl";

/// Traces buffered before each parallel clique projection.
const COOC_BATCH: usize = 1 << 16;

/// Seed for an auxiliary random stream, derived from the master seed.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

fn default_true() -> bool {
    true
}

/// Inclusive fit window; a missing upper bound means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitWindow {
    pub lo: f64,
    #[serde(default)]
    pub hi: Option<f64>,
}

impl FitWindow {
    pub fn from(lo: f64) -> Self {
        FitWindow { lo, hi: None }
    }

    pub fn window(&self) -> Window {
        Window::new(self.lo, self.hi.unwrap_or(f64::INFINITY))
    }

    fn validate(&self, what: &str) -> Result<()> {
        let ok = self.lo.is_finite() && self.lo >= 0.0 && self.hi.is_none_or(|hi| hi > self.lo);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid {what} fit window {self:?}")))
        }
    }
}

/// Fit windows used for the exponents reported in `fits.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSettings {
    /// Over the number of walks (posts).
    pub heaps: FitWindow,
    /// Over ranks; the default skips the origin and its first ring.
    pub zipf: FitWindow,
    /// Log-spaced points per decade kept before fitting Heaps and Zipf curves.
    pub thin_per_decade: u32,
    /// Edges with `k_i k_j` at or below this quantile form the plateau.
    pub plateau_quantile: f64,
    /// Log-binned `w(k_i k_j)` is fitted over bins at or above this quantile.
    pub weight_tail_quantile: f64,
    /// `s(k)` is fitted over degree classes with `k >= fraction · k_max`.
    pub strength_tail_fraction: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            heaps: FitWindow::from(100.0),
            zipf: FitWindow::from(10.0),
            thin_per_decade: 20,
            plateau_quantile: 0.1,
            weight_tail_quantile: 0.9,
            strength_tail_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservableSettings {
    pub distributions: bool,
    pub strength: bool,
    pub knn: bool,
    pub clustering: bool,
    pub weight_degree: bool,
    pub similarity: bool,
    pub frequency_rank: bool,
    /// Ratio between consecutive log-bin edges.
    pub bin_ratio: f64,
    pub similarity_pair_budget: u64,
    pub fits: FitSettings,
}

impl Default for ObservableSettings {
    fn default() -> Self {
        ObservableSettings {
            distributions: true,
            strength: true,
            knn: true,
            clustering: true,
            weight_degree: true,
            similarity: true,
            frequency_rank: true,
            bin_ratio: 2.0,
            similarity_pair_budget: DEFAULT_PAIR_BUDGET,
            fits: FitSettings::default(),
        }
    }
}

impl ObservableSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.bin_ratio > 1.0 && self.bin_ratio.is_finite()) {
            return Err(Error::Config(format!("bin_ratio {} must be > 1", self.bin_ratio)));
        }
        if self.similarity_pair_budget == 0 {
            return Err(Error::Config("similarity_pair_budget must be >= 1".into()));
        }
        let f = &self.fits;
        f.heaps.validate("heaps")?;
        f.zipf.validate("zipf")?;
        if f.thin_per_decade == 0 {
            return Err(Error::Config("thin_per_decade must be >= 1".into()));
        }
        for (name, q) in [
            ("plateau_quantile", f.plateau_quantile),
            ("weight_tail_quantile", f.weight_tail_quantile),
            ("strength_tail_fraction", f.strength_tail_fraction),
        ] {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::Config(format!("{name}={q} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheorySettings {
    /// Random-length ring prediction from the measured BFS rings of the origin.
    pub ring_prediction: bool,
    /// Walks used to estimate visit probabilities for the exact
    /// prediction; 0 disables it.
    pub visit_prob_samples: u64,
    pub series: SeriesOptions,
}

impl Default for TheorySettings {
    fn default() -> Self {
        TheorySettings { ring_prediction: true, visit_prob_samples: 0, series: SeriesOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSettings {
    #[serde(default)]
    pub origin: NodeId,
    pub n_rw: u64,
    pub lengths: LengthSpec,
    #[serde(default = "default_true")]
    pub count_origin: bool,
    #[serde(default)]
    pub non_backtracking: bool,
    /// Also write every trace to `traces.txt`.
    #[serde(default)]
    pub write_traces: bool,
}

/// A complete synthetic experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format_version: u32,
    /// Master seed; every random stream of the run derives from it.
    pub seed: u64,
    pub graph: GraphVariant,
    /// Defaults to the master seed.
    #[serde(default)]
    pub graph_seed: Option<u64>,
    pub walk: WalkSettings,
    #[serde(default)]
    pub observables: ObservableSettings,
    #[serde(default)]
    pub theory: TheorySettings,
    /// Output directory; the command line may override it. Not recorded in
    /// the manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

impl ExperimentConfig {
    /// Parses a config, or the `config` member of a manifest.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(obj) = value.as_object_mut() {
            if obj.contains_key("files") && obj.contains_key("config") {
                value = obj.remove("config").expect("checked");
            }
        }
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn graph_spec(&self) -> GraphSpec {
        GraphSpec { variant: self.graph.clone(), seed: self.graph_seed.unwrap_or(self.seed) }
    }

    pub fn walk_config(&self) -> WalkConfig {
        let w = &self.walk;
        WalkConfig {
            origin: w.origin,
            n_rw: w.n_rw,
            lengths: w.lengths,
            seed: self.seed,
            count_origin: w.count_origin,
            non_backtracking: w.non_backtracking,
        }
    }

    /// Every default filled in, output directory dropped.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.graph_seed = Some(self.graph_seed.unwrap_or(self.seed));
        c.out_dir = None;
        c
    }

    /// Checks everything that can be checked without generating the graph.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let spec = self.graph_spec();
        spec.validate()?;
        let n = spec.node_count()?;
        if self.walk.origin as usize >= n {
            return Err(Error::param(format!("origin {} out of range for {n} nodes", self.walk.origin)));
        }
        self.walk.lengths.validate()?;
        self.observables.validate()?;
        let s = &self.theory.series;
        if !(s.threshold > 0.0) {
            return Err(Error::Config(format!("series threshold {} must be > 0", s.threshold)));
        }
        Ok(())
    }
}

/// One fitted exponent with the window it was fitted in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    /// Absent when the data-dependent bound is undefined (no data).
    pub window_lo: Option<f64>,
    pub window_hi: Option<f64>,
    pub thin_per_decade: Option<u32>,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
}

/// Contents of `fits.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub fits: BTreeMap<String, FitRecord>,
    pub values: BTreeMap<String, f64>,
}

impl FitSummary {
    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join(FITS))?)?)
    }

    pub fn exponent(&self, name: &str) -> Option<f64> {
        self.fits.get(name)?.fit.as_ref().map(|f| f.exponent)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    /// Records a scalar; undefined (non-finite) values are left out.
    fn set(&mut self, name: &str, x: f64) {
        if x.is_finite() {
            self.values.insert(name.to_owned(), x);
        }
    }

    fn record(&mut self, name: &str, points: &[(f64, f64)], window: Window, thin: Option<u32>) -> Option<FitResult> {
        let (fit, error) = match fit_power_law(points, window) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        self.fits.insert(
            name.to_owned(),
            FitRecord {
                window_lo: window.lo.is_finite().then_some(window.lo),
                window_hi: window.hi.is_finite().then_some(window.hi),
                thin_per_decade: thin,
                fit,
                error,
            },
        );
        fit
    }
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    /// `synthetic`, `empirical`, `walk`, `generate` or `stats`.
    pub kind: String,
    /// Whether vocabulary counts include the walk origin (never true for
    /// empirical corpora, where the focus tag is excluded).
    pub vocabulary_includes_origin: bool,
    pub config: serde_json::Value,
    pub config_sha256: String,
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST))?)?)
    }
}

fn finish<T: Serialize>(dir: &mut ArtifactDir, kind: &str, config: &T, includes_origin: bool) -> Result<Manifest> {
    let config = serde_json::to_value(config)?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        kind: kind.to_owned(),
        vocabulary_includes_origin: includes_origin,
        config_sha256: artifacts::sha256_hex(&serde_json::to_vec(&config)?),
        config,
        files: dir.hashes()?,
    };
    dir.json(MANIFEST, &manifest)?;
    Ok(manifest)
}

pub struct RunSummary {
    pub manifest: Manifest,
    pub fits: FitSummary,
    pub heaps: HeapsCurve,
    pub cooc: CoocGraph,
}

/// Writes the substrate edge list and the ring profile of `origin`.
pub fn write_substrate(dir: &mut ArtifactDir, graph: &SubstrateGraph, origin: NodeId) -> Result<RingProfile> {
    dir.write_with(SUBSTRATE, |out| graph.write_edge_list(out))?;
    let rings = bfs_rings(graph, origin)?;
    dir.csv(
        RINGS,
        &[("origin", artifacts::int(origin))],
        &["distance", "size"],
        rings.sizes.iter().enumerate().map(|(l, &n)| vec![artifacts::int(l), artifacts::int(n)]),
    )?;
    Ok(rings)
}

fn write_heaps(dir: &mut ArtifactDir, heaps: &HeapsCurve) -> Result<()> {
    dir.write_with(HEAPS, |out| heaps.write_csv(out))
}

/// `generate`: substrate only.
pub fn run_generate(config: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    config.validate()?;
    let graph = config.graph_spec().generate()?;
    let mut dir = ArtifactDir::create(out)?;
    write_substrate(&mut dir, &graph, config.walk.origin)?;
    finish(&mut dir, "generate", &config.resolved(), config.walk.count_origin)
}

struct WalkOutput {
    heaps: HeapsCurve,
    frequencies: Vec<(NodeId, u64)>,
    cooc: Option<CoocGraph>,
}

/// Consumes traces in walk order, in batches.
struct TraceSink {
    buffer: Vec<WalkTrace>,
    cooc: Option<CoocGraph>,
    lengths: BTreeMap<usize, u64>,
    traces: Option<BufWriter<fs::File>>,
    count_origin: bool,
    error: Option<Error>,
}

impl TraceSink {
    fn push(&mut self, t: WalkTrace) {
        self.buffer.push(t);
        if self.buffer.len() >= COOC_BATCH && self.error.is_none() {
            if let Err(e) = self.flush() {
                self.error = Some(e);
            }
        }
    }

    fn flush(&mut self) -> Result<()> {
        for (l, c) in trace_lengths_histogram(&self.buffer) {
            *self.lengths.entry(l).or_insert(0) += c;
        }
        if let Some(w) = self.traces.as_mut() {
            write_traces(&self.buffer, w)?;
        }
        if let Some(cooc) = self.cooc.as_mut() {
            let part = build_from_traces_par(&self.buffer, self.count_origin);
            *cooc = std::mem::take(cooc).merge(part);
        }
        self.buffer.clear();
        Ok(())
    }
}

fn walk_stage(
    dir: &mut ArtifactDir,
    graph: &SubstrateGraph,
    config: &ExperimentConfig,
    keep_traces: bool,
    build_cooc: bool,
) -> Result<WalkOutput> {
    let wc = config.walk_config();
    let mut sink = TraceSink {
        buffer: Vec::new(),
        cooc: build_cooc.then(CoocGraph::new),
        lengths: BTreeMap::new(),
        traces: if keep_traces { Some(dir.open(TRACES)?) } else { None },
        count_origin: wc.count_origin,
        error: None,
    };
    let (heaps, freq) = run_ensemble_with(graph, &wc, |t| sink.push(t))?;
    if let Some(e) = sink.error.take() {
        return Err(e);
    }
    sink.flush()?;
    if let Some(mut w) = sink.traces.take() {
        w.flush()?;
    }
    write_heaps(dir, &heaps)?;
    dir.csv(
        LENGTHS,
        &[],
        &["length", "count"],
        sink.lengths.iter().map(|(l, c)| vec![artifacts::int(l), artifacts::int(c)]),
    )?;
    Ok(WalkOutput { heaps, frequencies: freq.nonzero().collect(), cooc: sink.cooc })
}

/// `walk`: substrate, Heaps curve, length histogram and traces.
pub fn run_walks(config: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    config.validate()?;
    let graph = config.graph_spec().generate()?;
    let mut dir = ArtifactDir::create(out)?;
    write_substrate(&mut dir, &graph, config.walk.origin)?;
    walk_stage(&mut dir, &graph, config, true, false)?;
    finish(&mut dir, "walk", &config.resolved(), config.walk.count_origin)
}

/// `run`: the whole synthetic pipeline.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    config.validate()?;
    let resolved = config.resolved();
    let graph = config.graph_spec().generate()?;
    let mut dir = ArtifactDir::create(out)?;
    let rings = write_substrate(&mut dir, &graph, config.walk.origin)?;
    let walked = walk_stage(&mut dir, &graph, config, config.walk.write_traces, true)?;
    let cooc = walked.cooc.expect("cooc requested");
    dir.write_with(COOC, |out| cooc.write_edge_list(out))?;

    let mut fits = FitSummary::default();
    let ranked = frequency_rank(walked.frequencies.iter().copied());
    analyze(
        &mut dir,
        &cooc,
        &ranked,
        &node_label,
        Some(&walked.heaps),
        &config.observables,
        derive_seed(config.seed, "similarity"),
        &mut fits,
    )?;
    theory_stage(&mut dir, &graph, &rings, config, &walked.heaps)?;
    dir.json(FITS, &fits)?;
    let manifest = finish(&mut dir, "synthetic", &resolved, config.walk.count_origin)?;
    Ok(RunSummary { manifest, fits, heaps: walked.heaps, cooc })
}

fn theory_stage(
    dir: &mut ArtifactDir,
    graph: &SubstrateGraph,
    rings: &RingProfile,
    config: &ExperimentConfig,
    heaps: &HeapsCurve,
) -> Result<()> {
    let w = &config.walk;
    let origin_offset = if w.count_origin { 0.0 } else { 1.0 };
    if config.theory.ring_prediction {
        let spec = RingModelSpec { rings: RingModel::Empirical { profile: rings.clone() }, lengths: w.lengths };
        let series = RandomLengthSeries::new(&spec, config.theory.series)?;
        let mut rows = Vec::with_capacity(heaps.points.len());
        for &(n, d) in &heaps.points {
            let pred = series.evaluate(n as f64)? - origin_offset;
            rows.push(vec![
                artifacts::int(n),
                artifacts::int(d),
                artifacts::num(pred),
                artifacts::num(d as f64 / pred),
            ]);
        }
        dir.csv(
            THEORY,
            &[("model", "bfs_rings".into()), ("count_origin", w.count_origin.to_string())],
            &["n_rw", "simulated", "predicted", "ratio"],
            rows,
        )?;
    }
    if config.theory.visit_prob_samples > 0 {
        let p = estimate_visit_probs(
            graph,
            w.origin,
            &w.lengths,
            config.theory.visit_prob_samples,
            derive_seed(config.seed, "visit_probs"),
            w.count_origin,
        )?;
        let rows = heaps.points.iter().map(|&(n, d)| {
            let pred = n_distinct_exact(&p, n as f64);
            vec![
                artifacts::int(n),
                artifacts::int(d),
                artifacts::num(pred),
                artifacts::num(d as f64 / pred),
                artifacts::num(n_distinct_exact_stderr(&p, n as f64)),
            ]
        });
        dir.csv(
            THEORY_EXACT,
            &[("visit_prob_samples", artifacts::int(p.samples))],
            &["n_rw", "simulated", "predicted", "ratio", "predicted_stderr"],
            rows,
        )?;
    }
    Ok(())
}

fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let i = ((sorted.len() as f64 * q).floor() as usize).min(sorted.len() - 1);
    Some(sorted[i])
}

fn series_rows(a: &BinnedSeries, b: Option<&BinnedSeries>) -> Vec<Vec<String>> {
    a.points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut row = vec![artifacts::num(p.x), artifacts::num(p.y)];
            if let Some(b) = b {
                let q = &b.points[i];
                debug_assert_eq!(q.x, p.x);
                row.push(artifacts::num(q.y));
            }
            row.push(artifacts::int(p.count));
            row.push(p.low_sample.to_string());
            row
        })
        .collect()
}

fn write_distribution(dir: &mut ArtifactDir, name: &str, raw_name: &str, d: &observables::Distribution) -> Result<()> {
    dir.csv(
        name,
        &[
            ("bin_ratio", artifacts::num(observables::Distribution::BIN_RATIO)),
            ("samples", artifacts::int(d.sample_size)),
        ],
        &["lo", "hi", "center", "count", "density"],
        d.binned.iter().map(|b| {
            vec![
                artifacts::num(b.lo),
                artifacts::num(b.hi),
                artifacts::num(b.center),
                artifacts::int(b.count),
                artifacts::num(b.density),
            ]
        }),
    )?;
    dir.csv(
        raw_name,
        &[("samples", artifacts::int(d.sample_size))],
        &["value", "count"],
        d.raw.iter().map(|(v, c)| vec![artifacts::int(v), artifacts::int(c)]),
    )
}

/// Observables shared by synthetic and empirical pipelines.
#[allow(clippy::too_many_arguments)]
fn analyze(
    dir: &mut ArtifactDir,
    cooc: &CoocGraph,
    ranked: &[RankedItem],
    label: &dyn Fn(NodeId) -> String,
    heaps: Option<&HeapsCurve>,
    obs: &ObservableSettings,
    similarity_seed: u64,
    fits: &mut FitSummary,
) -> Result<()> {
    let fs_ = &obs.fits;
    let thin = fs_.thin_per_decade;
    let mut heaps_exp = None;
    if let Some(h) = heaps {
        let pts: Vec<(f64, f64)> = h.as_f64().into_iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();
        heaps_exp =
            fits.record("heaps", &thin_log_spaced(&pts, thin), fs_.heaps.window(), Some(thin)).map(|f| f.exponent);
        if let Some((n, d)) = h.last() {
            fits.set("final_n", n as f64);
            fits.set("final_distinct", d as f64);
        }
    }

    let adj = WeightedAdjacency::new(cooc);
    observables::check_identities(cooc, &adj)?;
    fits.set("nodes", adj.len() as f64);
    fits.set("edges", adj.edge_count() as f64);

    if obs.distributions {
        let d = observables::degree_strength_weight_distributions(&adj);
        write_distribution(dir, P_K, "p_k_raw.csv", &d.degree)?;
        write_distribution(dir, P_S, "p_s_raw.csv", &d.strength)?;
        write_distribution(dir, P_W, "p_w_raw.csv", &d.weight)?;
        fits.set("degree_decades", d.degree.decades());
        fits.set("strength_decades", d.strength.decades());
        fits.set("weight_decades", d.weight.decades());
    }

    if obs.strength {
        let s = observables::s_of_k(&adj);
        dir.csv(S_OF_K, &[], &["k", "s", "nodes", "low_sample"], series_rows(&s, None))?;
        let k_max = s.points.last().map_or(0.0, |p| p.x);
        fits.record("strength_tail", &s.xy(), Window::new(fs_.strength_tail_fraction * k_max, f64::INFINITY), None);
    }

    if obs.knn {
        let u = observables::knn_of_k(&adj, false);
        let w = observables::knn_of_k(&adj, true);
        dir.csv(
            KNN,
            &[("weighted", "barrat".into())],
            &["k", "knn", "knn_w", "nodes", "low_sample"],
            series_rows(&u, Some(&w)),
        )?;
    }

    if obs.clustering {
        let u = observables::clustering_of_k(&adj, false);
        let w = observables::clustering_of_k(&adj, true);
        dir.csv(
            CLUSTERING,
            &[("weighted", "barrat".into())],
            &["k", "c", "c_w", "nodes", "low_sample"],
            series_rows(&u, Some(&w)),
        )?;
    }

    if obs.weight_degree {
        let wd = observables::weight_vs_kikj(&adj, obs.bin_ratio);
        dir.csv(
            WEIGHT_DEGREE,
            &[("bin_ratio", artifacts::num(obs.bin_ratio))],
            &["kikj", "w", "edges", "low_sample"],
            series_rows(&wd.binned, None),
        )?;
        dir.csv(
            WEIGHT_DEGREE_EDGES,
            &[],
            &["kikj", "w"],
            wd.points.iter().map(|&(x, y)| vec![artifacts::num(x), artifacts::num(y)]),
        )?;
        let mut products: Vec<f64> = wd.points.iter().map(|p| p.0).collect();
        products.sort_by(f64::total_cmp);
        if let Some(q) = quantile(&products, fs_.plateau_quantile) {
            let low: Vec<f64> = wd.points.iter().filter(|p| p.0 <= q).map(|p| p.1).collect();
            fits.set("plateau_kikj_max", q);
            fits.set("plateau_mean_w", low.iter().sum::<f64>() / low.len() as f64);
        }
        let lo = quantile(&products, fs_.weight_tail_quantile).unwrap_or(f64::INFINITY);
        fits.record("weight_tail", &wd.binned.xy(), Window::new(lo, f64::INFINITY), None);
    }

    if obs.similarity {
        let h = cosine_similarity_distribution(&adj, obs.similarity_pair_budget, similarity_seed);
        dir.csv(
            SIMILARITY,
            &[
                ("pairs", artifacts::int(h.pairs)),
                ("exhaustive", h.exhaustive.to_string()),
                ("pair_budget", artifacts::int(obs.similarity_pair_budget)),
            ],
            &["lo", "hi", "count"],
            h.counts.iter().enumerate().map(|(m, c)| {
                vec![
                    artifacts::num(m as f64 / SIMILARITY_BINS as f64),
                    artifacts::num((m + 1) as f64 / SIMILARITY_BINS as f64),
                    artifacts::int(c),
                ]
            }),
        )?;
        if let Some(mode) = h.mode() {
            fits.set("similarity_mode", mode);
        }
    }

    if obs.frequency_rank {
        dir.csv(
            FREQUENCY_RANK,
            &[],
            &["rank", "count", "id", "label"],
            ranked
                .iter()
                .map(|r| vec![artifacts::int(r.rank), artifacts::int(r.count), artifacts::int(r.id), label(r.id)]),
        )?;
        let pts = thin_log_spaced(&rank_points(ranked), thin);
        let zipf = fits.record("zipf", &pts, fs_.zipf.window(), Some(thin));
        if let (Some(z), Some(h)) = (zipf, heaps_exp) {
            fits.set("zipf_heaps_product", z.exponent.abs() * h);
        }
    }
    Ok(())
}

/// Observables of an existing co-occurrence network. Visit frequencies, when
/// given, feed the frequency-rank plot.
pub fn run_stats(
    cooc: &CoocGraph,
    frequencies: Option<&[(NodeId, u64)]>,
    observables: &ObservableSettings,
    seed: u64,
    out: &Path,
) -> Result<FitSummary> {
    observables.validate()?;
    let mut dir = ArtifactDir::create(out)?;
    let mut obs = observables.clone();
    obs.frequency_rank &= frequencies.is_some();
    let ranked = frequency_rank(frequencies.unwrap_or(&[]).iter().copied());
    let mut fits = FitSummary::default();
    analyze(&mut dir, cooc, &ranked, &node_label, None, &obs, derive_seed(seed, "similarity"), &mut fits)?;
    dir.json(FITS, &fits)?;
    finish(&mut dir, "stats", &serde_json::json!({ "seed": seed, "observables": obs }), true)?;
    Ok(fits)
}

/// Empirical analysis of a JSON-Lines post log around one focus tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    pub format_version: u32,
    pub focus: String,
    /// Defaults to `[2001-01-01, now]`.
    #[serde(default)]
    pub window: Option<ValidityWindow>,
    #[serde(default)]
    pub strict: bool,
    /// Seeds similarity pair sampling on large vocabularies.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub observables: ObservableSettings,
}

impl IngestConfig {
    pub fn new(focus: &str) -> Self {
        IngestConfig {
            format_version: FORMAT_VERSION,
            focus: focus.to_owned(),
            window: None,
            strict: false,
            seed: 0,
            observables: ObservableSettings::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.focus = ingest::normalize_tag(&self.focus);
        c.window = Some(self.window.unwrap_or_else(ValidityWindow::until_now));
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported format_version {}", self.format_version)));
        }
        if self.focus.is_empty() {
            return Err(Error::Config("focus tag must not be empty".into()));
        }
        if let Some(w) = self.window {
            if w.end < w.start {
                return Err(Error::Config(format!("validity window end {} before start {}", w.end, w.start)));
            }
        }
        self.observables.validate()
    }
}

pub struct IngestSummary {
    pub manifest: Manifest,
    pub fits: FitSummary,
    pub report: ingest::RejectionReport,
    pub heaps: HeapsCurve,
    pub cooc: CoocGraph,
    pub tags: TagIndex,
}

pub fn run_ingest<R: BufRead>(config: &IngestConfig, input: R, out: &Path) -> Result<IngestSummary> {
    config.validate()?;
    let cfg = config.resolved();
    let window = cfg.window.expect("resolved");
    let (corpus, report) = ingest::parse_posts(input, window, cfg.strict)?;
    let mut dir = ArtifactDir::create(out)?;
    dir.write_with(REJECTIONS, |out| report.write_csv(out))?;
    let stream = ingest::filter_by_tag(&corpus, &cfg.focus);
    dir.write_with(STREAM, |out| {
        for p in &stream {
            serde_json::to_writer(&mut *out, p)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    })?;
    let heaps = ingest::vocabulary_growth(&stream, &cfg.focus)?;
    write_heaps(&mut dir, &heaps)?;
    let (cooc, tags) = ingest::empirical_cooc(&stream, &cfg.focus)?;
    dir.write_with(TAGS, |out| tags.write_tsv(out))?;
    dir.write_with(COOC, |out| cooc.write_edge_list(out))?;

    let counts = ingest::tag_counts(&stream, &cfg.focus);
    let ranked = frequency_rank(counts.iter().map(|(t, &c)| (tags.id(t).expect("every counted tag is interned"), c)));
    let mut fits = FitSummary::default();
    let label = |id: NodeId| tags.label(id).to_owned();
    analyze(
        &mut dir,
        &cooc,
        &ranked,
        &label,
        Some(&heaps),
        &cfg.observables,
        derive_seed(cfg.seed, "similarity"),
        &mut fits,
    )?;
    fits.set("posts_accepted", report.accepted as f64);
    fits.set("posts_in_stream", stream.len() as f64);
    dir.json(FITS, &fits)?;
    let manifest = finish(&mut dir, "empirical", &cfg, false)?;
    Ok(IngestSummary { manifest, fits, report, heaps, cooc, tags })
}

/// Convenience: reads `path` and runs [`run_ingest`].
pub fn run_ingest_file(config: &IngestConfig, path: &Path, out: &Path) -> Result<IngestSummary> {
    let f = fs::File::open(path)?;
    run_ingest(config, BufReader::new(f), out)
}

/// Standalone prediction curve for a ring model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    pub format_version: u32,
    pub model: RingModelSpec,
    pub n_rw_min: f64,
    pub n_rw_max: f64,
    #[serde(default = "default_per_decade")]
    pub per_decade: u32,
    #[serde(default)]
    pub series: SeriesOptions,
}

fn default_per_decade() -> u32 {
    10
}

impl TheoryConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported format_version {}", self.format_version)));
        }
        if !(self.n_rw_min > 0.0 && self.n_rw_max >= self.n_rw_min && self.n_rw_max.is_finite()) {
            return Err(Error::Config(format!("bad n_rw range [{}, {}]", self.n_rw_min, self.n_rw_max)));
        }
        if self.per_decade == 0 {
            return Err(Error::Config("per_decade must be >= 1".into()));
        }
        self.model.rings.validate()?;
        self.model.lengths.validate()
    }

    /// `(n_rw, prediction)` over the log grid.
    pub fn curve(&self) -> Result<Vec<(f64, f64)>> {
        self.validate()?;
        let series = RandomLengthSeries::new(&self.model, self.series)?;
        crate::theory::log_grid(self.n_rw_min, self.n_rw_max, self.per_decade)
            .into_iter()
            .map(|n| Ok((n, series.evaluate(n)?)))
            .collect()
    }
}

/// Writes `n_rw,prediction` to `out` (a file path).
pub fn run_theory(config: &TheoryConfig, out: &Path) -> Result<Vec<(f64, f64)>> {
    let curve = config.curve()?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(out).map_err(artifacts::csv_err)?;
    w.write_record(["n_rw", "prediction"]).map_err(artifacts::csv_err)?;
    for &(n, p) in &curve {
        w.write_record([artifacts::num(n), artifacts::num(p)]).map_err(artifacts::csv_err)?;
    }
    w.flush()?;
    Ok(curve)
}
