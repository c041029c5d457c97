use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{run_campaign_on, CampaignSpec, Problem, ProblemSource};
use crate::error::{CimError, Result};
use crate::graph::{normalized_cut_score, read_gset};
use crate::sde::SimConfig;

/// Instances above this many vertices need an explicit opt-in.
pub const DESK_SCALE_MAX_VERTICES: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsetInstanceMeta {
    pub name: String,
    pub v: usize,
    pub e: usize,
    /// Semidefinite-relaxation upper bound of the cut.
    pub u_sdp: f64,
    /// Number of negative edges; counted from the file when absent.
    #[serde(default)]
    pub e_neg: Option<usize>,
    /// Published normalized best score, for side-by-side reporting.
    #[serde(default)]
    pub reference_o_max: Option<f64>,
    #[serde(default)]
    pub reference_o_avg: Option<f64>,
    #[serde(default)]
    pub reference_t: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsetMetadata {
    #[serde(default, rename = "instance")]
    pub instances: Vec<GsetInstanceMeta>,
}

impl GsetMetadata {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CimError::Config(format!("G-set metadata: {e}")))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, name: &str) -> Option<&GsetInstanceMeta> {
        self.instances.iter().find(|m| m.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsetRow {
    pub name: String,
    pub v: usize,
    pub e: usize,
    pub e_neg: usize,
    pub u_sdp: f64,
    pub runs: u64,
    pub cut_max: f64,
    pub cut_avg: f64,
    pub o_max: f64,
    pub o_avg: f64,
    /// Mean build-up time in normalized units over runs that settled.
    pub t_avg: Option<f64>,
    pub no_build_up: usize,
    pub reference_o_max: Option<f64>,
    pub reference_o_avg: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GsetReport {
    pub rows: Vec<GsetRow>,
    /// Instances skipped, with the reason.
    pub skipped: BTreeMap<String, String>,
}

impl GsetReport {
    /// CSV: `name,v,e,e_neg,u_sdp,runs,cut_max,cut_avg,o_max,o_avg,t_avg,no_build_up`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "name,v,e,e_neg,u_sdp,runs,cut_max,cut_avg,o_max,o_avg,t_avg,no_build_up"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.name,
                r.v,
                r.e,
                r.e_neg,
                r.u_sdp,
                r.runs,
                r.cut_max,
                r.cut_avg,
                r.o_max,
                r.o_avg,
                r.t_avg.map_or(String::new(), |t| t.to_string()),
                r.no_build_up
            )?;
        }
        Ok(())
    }
}

fn instance_name(path: &Path) -> String {
    path.file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

/// MAX-CUT benchmark over G-set files. Instances without
/// metadata, or above [`DESK_SCALE_MAX_VERTICES`] without `allow_large`,
/// are skipped with a warning.
pub fn benchmark_gset(
    paths: &[PathBuf],
    metadata: &GsetMetadata,
    cfg: &SimConfig,
    n_runs: u64,
    workers: usize,
    allow_large: bool,
) -> Result<GsetReport> {
    let mut report = GsetReport::default();
    for path in paths {
        let name = instance_name(path);
        let Some(meta) = metadata.get(&name) else {
            log::warn!("skipping {name}: no metadata");
            report.skipped.insert(name, "no metadata".into());
            continue;
        };
        if meta.v > DESK_SCALE_MAX_VERTICES && !allow_large {
            log::warn!("skipping {name}: {} vertices exceeds the desk-scale limit", meta.v);
            report
                .skipped
                .insert(name, format!("{} vertices needs allow_large", meta.v));
            continue;
        }
        let g = read_gset(path)?;
        if g.n() != meta.v || g.edge_count() != meta.e {
            return Err(CimError::Validation(format!(
                "{name}: file has V={} E={}, metadata says V={} E={}",
                g.n(),
                g.edge_count(),
                meta.v,
                meta.e
            )));
        }
        let e_neg = meta.e_neg.unwrap_or_else(|| g.negative_edge_count());
        let problem = Problem::max_cut(name.clone(), g);
        let mut spec = CampaignSpec::new(ProblemSource::Uncoupled { n: 1 }, cfg.clone(), n_runs);
        spec.apply_local_improvement = false;
        let st = run_campaign_on(&problem, &spec, workers)?;
        let cuts: Vec<f64> = st
            .trials
            .iter()
            .filter_map(|t| t.result.as_ref().and_then(|r| r.final_cut))
            .collect();
        if cuts.is_empty() {
            report.skipped.insert(name, "every run failed".into());
            continue;
        }
        let cut_max = cuts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cut_avg = cuts.iter().sum::<f64>() / cuts.len() as f64;
        report.rows.push(GsetRow {
            o_max: normalized_cut_score(cut_max, e_neg as f64, meta.u_sdp)?,
            o_avg: normalized_cut_score(cut_avg, e_neg as f64, meta.u_sdp)?,
            name,
            v: meta.v,
            e: meta.e,
            e_neg,
            u_sdp: meta.u_sdp,
            runs: n_runs,
            cut_max,
            cut_avg,
            t_avg: st.t_mean,
            no_build_up: st.build_up.missing,
            reference_o_max: meta.reference_o_max,
            reference_o_avg: meta.reference_o_avg,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const META: &str = r#"
[[instance]]
name = "tiny"
v = 4
e = 5
u_sdp = 4.5

[[instance]]
name = "huge"
v = 5000
e = 10
u_sdp = 1.0
"#;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn tmpdir(tag: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("cim-gset-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    }

    #[test]
    fn metadata_parses() {
        let m = GsetMetadata::from_toml(META).unwrap();
        assert_eq!(m.get("TINY").unwrap().u_sdp, 4.5);
        assert!(GsetMetadata::from_toml("[[instance]]\nname = 1\n").is_err());
    }

    #[test]
    fn scores_and_skips() {
        let dir = tmpdir("scores");
        // 4-cycle plus one negative chord.
        let tiny = write(&dir, "tiny.txt", "4 5\n1 2 1\n2 3 1\n3 4 1\n4 1 1\n1 3 -1\n");
        let huge = write(&dir, "huge.txt", "2 1\n1 2 1\n");
        let orphan = write(&dir, "orphan.txt", "2 1\n1 2 1\n");
        let meta = GsetMetadata::from_toml(META).unwrap();
        let cfg = SimConfig {
            t_max: 200.0,
            ..Default::default()
        };
        let r = benchmark_gset(&[tiny, huge, orphan], &meta, &cfg, 1, 1, false).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.skipped.len(), 2);
        let row = &r.rows[0];
        assert_eq!(row.e_neg, 1);
        assert_eq!(row.o_max, row.o_avg);
        assert_eq!(row.o_max, (row.cut_max + 1.0) / 5.5);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let dir = tmpdir("mismatch");
        let tiny = write(&dir, "tiny.txt", "4 1\n1 2 1\n");
        let meta = GsetMetadata::from_toml(META).unwrap();
        assert!(benchmark_gset(&[tiny], &meta, &SimConfig::default(), 1, 1, false).is_err());
        std::fs::remove_dir_all(dir).unwrap();
    }
}
