//! Side-by-side reports for two artifact directories.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::artifacts::{self, csv_err, ArtifactDir};
use super::{
    FitSummary, FitWindow, Manifest, CLUSTERING, FREQUENCY_RANK, HEAPS, KNN, P_K, P_S, P_W, SIMILARITY, S_OF_K, THEORY,
    WEIGHT_DEGREE,
};
use crate::observables::{fit_power_law, thin_log_spaced, Window};
use crate::walker::HeapsCurve;
use crate::Result;

/// Observable CSVs juxtaposed by [`compare`].
pub const COMPARED: &[&str] =
    &[HEAPS, P_K, P_S, P_W, S_OF_K, KNN, CLUSTERING, WEIGHT_DEGREE, SIMILARITY, FREQUENCY_RANK, THEORY];

pub const REPORT: &str = "compare.json";
pub const QUANTITIES: &str = "fits_comparison.csv";
pub const HEAPS_ALIGNED: &str = "heaps_aligned.csv";
pub const HEAPS_ALIGNED_FIT: &str = "heaps_aligned";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityDiff {
    pub quantity: String,
    pub empirical: Option<f64>,
    pub synthetic: Option<f64>,
    /// `synthetic - empirical`.
    pub difference: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    /// Observables present on both sides.
    pub observables: Vec<String>,
    pub quantities: Vec<QuantityDiff>,
    pub warnings: Vec<String>,
}

impl CompareReport {
    pub fn quantity(&self, name: &str) -> Option<&QuantityDiff> {
        self.quantities.iter().find(|q| q.quantity == name)
    }
}

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_owned).collect()).map_err(csv_err))
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

/// Vocabulary curve with the origin removed when the side counted it, so
/// that both sides exclude the focus tag.
fn aligned_heaps(dir: &Path, manifest: &Manifest) -> Result<HeapsCurve> {
    let mut h = HeapsCurve::read_csv(std::io::BufReader::new(fs::File::open(dir.join(HEAPS))?))?;
    if manifest.vocabulary_includes_origin {
        for p in &mut h.points {
            p.1 = p.1.saturating_sub(1);
        }
    }
    Ok(h)
}

fn heaps_fit(h: &HeapsCurve, fits: Option<&FitSummary>) -> Option<f64> {
    let rec = fits.and_then(|f| f.fits.get("heaps"));
    let default = super::FitSettings::default().heaps;
    let window =
        rec.map_or(default.window(), |r| FitWindow { lo: r.window_lo.unwrap_or(default.lo), hi: r.window_hi }.window());
    let thin = rec.and_then(|r| r.thin_per_decade).unwrap_or(super::FitSettings::default().thin_per_decade);
    let pts: Vec<(f64, f64)> = h.as_f64().into_iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();
    fit_power_law(&thin_log_spaced(&pts, thin), Window::new(window.lo, window.hi)).ok().map(|f| f.exponent)
}

fn diff(quantity: &str, e: Option<f64>, s: Option<f64>) -> QuantityDiff {
    QuantityDiff {
        quantity: quantity.to_owned(),
        empirical: e,
        synthetic: s,
        difference: match (e, s) {
            (Some(e), Some(s)) => Some(s - e),
            _ => None,
        },
    }
}

/// Juxtaposes the observables of an empirical and a synthetic artifact
/// directory. Observables or fits present on one side only produce
/// warnings, not errors.
pub fn compare(empirical: &Path, synthetic: &Path, out: &Path) -> Result<CompareReport> {
    let me = Manifest::read(empirical)?;
    let ms = Manifest::read(synthetic)?;
    let mut dir = ArtifactDir::create(out)?;
    let mut report = CompareReport::default();

    for &name in COMPARED {
        let (pe, ps) = (empirical.join(name), synthetic.join(name));
        match (pe.exists(), ps.exists()) {
            (true, true) => {
                let (he, re) = read_csv(&pe)?;
                let (hs, rs) = read_csv(&ps)?;
                if he != hs {
                    report.warnings.push(format!("{name}: column headers differ, not juxtaposed"));
                    continue;
                }
                let mut header = vec!["source"];
                header.extend(he.iter().map(String::as_str));
                let rows =
                    re.into_iter().map(|r| (r, "empirical")).chain(rs.into_iter().map(|r| (r, "synthetic"))).map(
                        |(mut r, src)| {
                            r.insert(0, src.to_owned());
                            r
                        },
                    );
                dir.csv(name, &[], &header, rows)?;
                report.observables.push(name.to_owned());
            }
            (true, false) => report.warnings.push(format!("{name}: only in empirical")),
            (false, true) => report.warnings.push(format!("{name}: only in synthetic")),
            (false, false) => {}
        }
    }

    let read_fits = |d: &Path, side: &str, warnings: &mut Vec<String>| match FitSummary::read(d) {
        Ok(f) => Some(f),
        Err(_) => {
            warnings.push(format!("no readable fits in {side}"));
            None
        }
    };
    let fe = read_fits(empirical, "empirical", &mut report.warnings);
    let fs_ = read_fits(synthetic, "synthetic", &mut report.warnings);

    if report.observables.iter().any(|o| o == HEAPS) {
        let he = aligned_heaps(empirical, &me)?;
        let hs = aligned_heaps(synthetic, &ms)?;
        let rows = he
            .points
            .iter()
            .map(|p| ("empirical", p))
            .chain(hs.points.iter().map(|p| ("synthetic", p)))
            .map(|(src, &(n, d))| vec![src.to_owned(), artifacts::int(n), artifacts::int(d)]);
        dir.csv(HEAPS_ALIGNED, &[("excludes", "origin/focus".into())], &["source", "n", "distinct"], rows)?;
        report.quantities.push(diff(HEAPS_ALIGNED_FIT, heaps_fit(&he, fe.as_ref()), heaps_fit(&hs, fs_.as_ref())));
    }

    if let (Some(fe), Some(fs_)) = (&fe, &fs_) {
        let names: BTreeSet<&String> = fe.fits.keys().chain(fs_.fits.keys()).collect();
        for name in names {
            match (fe.fits.get(name), fs_.fits.get(name)) {
                (Some(a), Some(b)) => report.quantities.push(diff(
                    name,
                    a.fit.as_ref().map(|f| f.exponent),
                    b.fit.as_ref().map(|f| f.exponent),
                )),
                (Some(_), None) => report.warnings.push(format!("fit {name}: only in empirical")),
                _ => report.warnings.push(format!("fit {name}: only in synthetic")),
            }
        }
        let names: BTreeSet<&String> = fe.values.keys().chain(fs_.values.keys()).collect();
        for name in names {
            match (fe.values.get(name), fs_.values.get(name)) {
                (Some(&a), Some(&b)) => report.quantities.push(diff(name, Some(a), Some(b))),
                (Some(_), None) => report.warnings.push(format!("value {name}: only in empirical")),
                _ => report.warnings.push(format!("value {name}: only in synthetic")),
            }
        }
    }

    let opt = |x: Option<f64>| x.map(artifacts::num).unwrap_or_default();
    let rows: Vec<Vec<String>> = report
        .quantities
        .iter()
        .map(|q| vec![q.quantity.clone(), opt(q.empirical), opt(q.synthetic), opt(q.difference)])
        .collect();
    dir.csv(QUANTITIES, &[], &["quantity", "empirical", "synthetic", "difference"], rows)?;
    dir.json(REPORT, &report)?;
    Ok(report)
}
