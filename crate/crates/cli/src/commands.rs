//! Stage implementations shared by the individual subcommands and the
//! monolithic pipeline. Each stage reads and writes files only, so a chain
//! of subcommands and a pipeline run produce identical bytes.

use std::fs;
use std::path::Path;

use fieldcal::data::{
    read_abilities, read_item_bank, read_option_prob_matrix, read_params, read_response_matrix, read_retention,
    write_abilities, write_group, write_item_bank, write_option_prob_matrix, write_params, write_response_matrix,
    write_retention, AbilityEstimate, EngineConfig, GroupDist, ItemParams2PL,
};
use fieldcal::irt::{fit_2pl_mml, fit_anchored_all, score_all};
use fieldcal::report::{
    ability_vs_zeroed, build_report, read_ctt, write_ctt, write_item_curves, write_report, write_retention_scores,
    write_theta_pairs,
};
use fieldcal::simulate::{
    derive_seed, examinee_id, gen_population, gen_responses_2pl, reference_bank, sample_responses, surrogate_matrix,
    SurrogateConfig,
};
use fieldcal::stats::ctt_table;
use fieldcal::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::args::CalibrationFiles;
use crate::manifest::{manifest_path, RunManifest};

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_csv_rows(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn make_bank(n_items: usize, out_bank: &Path, out_params: &Path) -> Result<()> {
    let (bank, params) = reference_bank(n_items)?;
    write_item_bank(out_bank, &bank)?;
    write_params(out_params, &params)?;
    RunManifest::new("make-bank", None)
        .output("bank", out_bank)
        .output("params", out_params)
        .write(&manifest_path(out_bank))
}

pub fn gen_reference(
    bank: &Path,
    params: &Path,
    cfg: &EngineConfig,
    out: &Path,
    out_thetas: Option<&Path>,
) -> Result<()> {
    let item_bank = read_item_bank(bank)?;
    let item_params = read_params(params)?;
    let seed = derive_seed(cfg.seed, "reference");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let thetas: Vec<f64> = (0..cfg.n_examinees).map(|_| StandardNormal.sample(&mut rng)).collect();
    let responses = gen_responses_2pl(
        &thetas,
        &item_params,
        &item_bank,
        cfg.scaling_d,
        derive_seed(seed, "responses"),
    )?;
    write_response_matrix(out, &responses)?;
    if let Some(path) = out_thetas {
        let truth: Vec<AbilityEstimate<f64>> = thetas
            .iter()
            .enumerate()
            .map(|(i, &theta)| AbilityEstimate {
                examinee_id: examinee_id(i),
                theta,
                se: None,
            })
            .collect();
        write_abilities(path, &truth)?;
    }
    RunManifest::new("gen-reference", Some(cfg))
        .input("bank", bank)
        .input("params", params)
        .output("responses", out)
        .output_opt("thetas", out_thetas)
        .write(&manifest_path(out))
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    bank: &Path,
    ref_params: &Path,
    cfg: &EngineConfig,
    surrogate: &SurrogateConfig,
    out: &Path,
    out_retention: &Path,
    out_profiles: Option<&Path>,
) -> Result<()> {
    let item_bank = read_item_bank(bank)?;
    let params = read_params(ref_params)?;
    let profiles = gen_population(cfg.n_examinees, derive_seed(cfg.seed, "simulate"), surrogate);
    let probs = surrogate_matrix(&profiles, &item_bank, &params, cfg.scaling_d, surrogate)?;
    write_option_prob_matrix(out, &probs)?;
    write_retention(
        out_retention,
        probs.examinee_ids(),
        probs.retention().unwrap_or_default(),
    )?;
    if let Some(path) = out_profiles {
        write_csv_rows(
            path,
            "examinee_id,retention,theta_true",
            profiles
                .iter()
                .map(|p| format!("{},{},{}", p.id, p.retention, p.theta_true)),
        )?;
    }
    RunManifest::new("simulate", Some(cfg))
        .input("bank", bank)
        .input("ref_params", ref_params)
        .output("probs", out)
        .output("retention", out_retention)
        .output_opt("profiles", out_profiles)
        .write(&manifest_path(out))
}

pub fn sample(probs: &Path, bank: &Path, cfg: &EngineConfig, out: &Path) -> Result<()> {
    let item_bank = read_item_bank(bank)?;
    let matrix = read_option_prob_matrix(probs)?;
    let responses = sample_responses(&matrix, &item_bank, derive_seed(cfg.seed, "sample"))?;
    write_response_matrix(out, &responses)?;
    RunManifest::new("sample", Some(cfg))
        .input("probs", probs)
        .input("bank", bank)
        .output("responses", out)
        .write(&manifest_path(out))
}

/// Free fit, or one anchored fit per item when `anchors` is given. In
/// anchored mode the group file holds the average of the per-item group
/// estimates; the individual runs go to `out_diagnostics`.
#[allow(clippy::too_many_arguments)]
pub fn fit(
    responses: &Path,
    bank: &Path,
    anchors: Option<&Path>,
    cfg: &EngineConfig,
    out: &Path,
    out_group: &Path,
    out_diagnostics: Option<&Path>,
) -> Result<()> {
    let item_bank = read_item_bank(bank)?;
    let matrix = read_response_matrix(responses, &item_bank)?;
    match anchors {
        None => {
            let result = fit_2pl_mml::<f64>(&matrix, cfg)?;
            write_params(out, &result.params)?;
            write_group(out_group, &result.group)?;
            if let Some(path) = out_diagnostics {
                write_csv_rows(
                    path,
                    "loglik,n_iter,converged",
                    std::iter::once(format!("{},{},{}", result.loglik, result.n_iter, result.converged)),
                )?;
            }
        }
        Some(anchor_path) => {
            let anchor_params = read_params(anchor_path)?;
            let fits = fit_anchored_all::<f64>(&matrix, &anchor_params, cfg)?;
            let params: Vec<ItemParams2PL<f64>> = fits.iter().map(|f| f.params.clone()).collect();
            let n = fits.len() as f64;
            let group = GroupDist::new(
                fits.iter().map(|f| f.group.mean).sum::<f64>() / n,
                fits.iter().map(|f| f.group.sd).sum::<f64>() / n,
            )?;
            write_params(out, &params)?;
            write_group(out_group, &group)?;
            if let Some(path) = out_diagnostics {
                write_csv_rows(
                    path,
                    "item_id,a,b,group_mean,group_sd,loglik,n_iter,converged",
                    fits.iter().map(|f| {
                        format!(
                            "{},{},{},{},{},{},{},{}",
                            f.params.item_id,
                            f.params.a,
                            f.params.b,
                            f.group.mean,
                            f.group.sd,
                            f.loglik,
                            f.n_iter,
                            f.converged
                        )
                    }),
                )?;
            }
        }
    }
    RunManifest::new("fit", Some(cfg))
        .input("responses", responses)
        .input("bank", bank)
        .input_opt("anchors", anchors)
        .output("params", out)
        .output("group", out_group)
        .output_opt("diagnostics", out_diagnostics)
        .write(&manifest_path(out))
}

pub fn score(responses: &Path, bank: &Path, params: &Path, cfg: &EngineConfig, out: &Path) -> Result<()> {
    let item_bank = read_item_bank(bank)?;
    let matrix = read_response_matrix(responses, &item_bank)?;
    let estimates = score_all(&matrix, &read_params(params)?, cfg)?;
    write_abilities(out, &estimates)?;
    RunManifest::new("score", Some(cfg))
        .input("responses", responses)
        .input("bank", bank)
        .input("params", params)
        .output("thetas", out)
        .write(&manifest_path(out))
}

pub fn ctt(responses: &Path, bank: &Path, corrected: bool, out: &Path) -> Result<()> {
    let item_bank = read_item_bank(bank)?;
    let matrix = read_response_matrix(responses, &item_bank)?;
    write_ctt(out, &ctt_table(&matrix, corrected)?)?;
    RunManifest::new("ctt", None)
        .input("responses", responses)
        .input("bank", bank)
        .output("ctt", out)
        .write(&manifest_path(out))
}

struct Loaded {
    report: fieldcal::report::Report,
    ref_params: Vec<ItemParams2PL<f64>>,
    est_params: Vec<ItemParams2PL<f64>>,
    ref_thetas: Vec<AbilityEstimate<f64>>,
    est_thetas: Vec<AbilityEstimate<f64>>,
}

fn load_report(files: &CalibrationFiles) -> Result<Loaded> {
    let ref_params = read_params(&files.ref_params)?;
    let est_params = read_params(&files.est_params)?;
    let ref_thetas = read_abilities(&files.ref_thetas)?;
    let est_thetas = read_abilities(&files.est_thetas)?;
    let report = build_report(
        &ref_params,
        &est_params,
        &read_ctt(&files.ref_ctt)?,
        &read_ctt(&files.est_ctt)?,
        &ref_thetas,
        &est_thetas,
        &files.exclude,
    )?;
    Ok(Loaded {
        report,
        ref_params,
        est_params,
        ref_thetas,
        est_thetas,
    })
}

fn with_files(manifest: RunManifest, files: &CalibrationFiles) -> RunManifest {
    manifest
        .input("ref_params", &files.ref_params)
        .input("est_params", &files.est_params)
        .input("ref_ctt", &files.ref_ctt)
        .input("est_ctt", &files.est_ctt)
        .input("ref_thetas", &files.ref_thetas)
        .input("est_thetas", &files.est_thetas)
}

pub fn compare(files: &CalibrationFiles, out: &Path) -> Result<()> {
    let loaded = load_report(files)?;
    write_report(out, &loaded.report)?;
    with_files(RunManifest::new("compare", None), files)
        .output("report", out)
        .write(&manifest_path(out))
}

pub const REPORT_FILE: &str = "report.json";
pub const PLOT_RETENTION: &str = "plot_retention_score.csv";
pub const PLOT_CURVES: &str = "plot_item_curves.csv";
pub const PLOT_THETAS: &str = "plot_theta_pairs.csv";

pub fn report(
    files: &CalibrationFiles,
    responses: &Path,
    bank: &Path,
    retention: Option<&Path>,
    cfg: &EngineConfig,
    out_dir: &Path,
) -> Result<()> {
    create_dir(out_dir)?;
    let item_bank = read_item_bank(bank)?;
    let mut matrix = read_response_matrix(responses, &item_bank)?;
    let Loaded {
        mut report,
        ref_params,
        est_params,
        ref_thetas,
        est_thetas,
    } = load_report(files)?;
    let mut manifest = with_files(RunManifest::new("report", Some(cfg)), files)
        .input("responses", responses)
        .input("bank", bank)
        .input_opt("retention", retention);
    if let Some(path) = retention {
        let values = read_retention(path, matrix.examinee_ids())?;
        report.ability_vs_zeroed_r = ability_vs_zeroed(&est_thetas, matrix.examinee_ids(), &values);
        matrix = matrix.with_retention(Some(values))?;
        let retention_plot = out_dir.join(PLOT_RETENTION);
        write_retention_scores(&retention_plot, &matrix)?;
        manifest = manifest.output("retention_scores", &retention_plot);
    }
    let (report_path, curves, pairs) = (
        out_dir.join(REPORT_FILE),
        out_dir.join(PLOT_CURVES),
        out_dir.join(PLOT_THETAS),
    );
    write_report(&report_path, &report)?;
    write_item_curves(&curves, &ref_params, &est_params, cfg.scaling_d)?;
    write_theta_pairs(&pairs, &ref_thetas, &est_thetas)?;
    manifest
        .output("report", &report_path)
        .output("item_curves", &curves)
        .output("theta_pairs", &pairs)
        .write(&out_dir.join("report.manifest.json"))
}

#[allow(clippy::too_many_arguments)]
pub fn pipeline(
    out_dir: &Path,
    bank: Option<&Path>,
    ref_params: Option<&Path>,
    n_items: usize,
    exclude: &[String],
    corrected: bool,
    surrogate: &SurrogateConfig,
    cfg: &EngineConfig,
) -> Result<()> {
    create_dir(out_dir)?;
    let p = |name: &str| out_dir.join(name);
    let (bank, ref_params) = match (bank, ref_params) {
        (Some(b), Some(r)) => (b.to_path_buf(), r.to_path_buf()),
        _ => {
            make_bank(n_items, &p("bank.json"), &p("reference_params.csv"))?;
            (p("bank.json"), p("reference_params.csv"))
        }
    };
    gen_reference(
        &bank,
        &ref_params,
        cfg,
        &p("reference_responses.csv"),
        Some(&p("reference_true_thetas.csv")),
    )?;
    simulate(
        &bank,
        &ref_params,
        cfg,
        surrogate,
        &p("option_probs.csv"),
        &p("retention.csv"),
        Some(&p("profiles.csv")),
    )?;
    sample(&p("option_probs.csv"), &bank, cfg, &p("responses.csv"))?;
    fit(
        &p("responses.csv"),
        &bank,
        Some(&ref_params),
        cfg,
        &p("estimated_params.csv"),
        &p("estimated_group.csv"),
        Some(&p("anchored_fits.csv")),
    )?;
    score(&p("responses.csv"), &bank, &ref_params, cfg, &p("thetas_reference.csv"))?;
    score(
        &p("responses.csv"),
        &bank,
        &p("estimated_params.csv"),
        cfg,
        &p("thetas_estimate.csv"),
    )?;
    ctt(
        &p("reference_responses.csv"),
        &bank,
        corrected,
        &p("ctt_reference.json"),
    )?;
    ctt(&p("responses.csv"), &bank, corrected, &p("ctt_estimate.json"))?;
    let files = CalibrationFiles {
        ref_params: ref_params.clone(),
        est_params: p("estimated_params.csv"),
        ref_ctt: p("ctt_reference.json"),
        est_ctt: p("ctt_estimate.json"),
        ref_thetas: p("thetas_reference.csv"),
        est_thetas: p("thetas_estimate.csv"),
        exclude: exclude.to_vec(),
    };
    compare(&files, &p("comparison.json"))?;
    report(
        &files,
        &p("responses.csv"),
        &bank,
        Some(&p("retention.csv")),
        cfg,
        out_dir,
    )?;
    RunManifest::new("pipeline", Some(cfg))
        .input("bank", &bank)
        .input("ref_params", &ref_params)
        .output("dir", out_dir)
        .write(&p("manifest.json"))
}
