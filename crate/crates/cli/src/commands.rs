// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use culture_neurons::actlog::ActivationLogWriter;
use culture_neurons::eval::report::{matrix_csv, plot_data, render_text, MatrixKind};
use culture_neurons::eval::{compute_matrices, layer_histogram, variance_diagnostics, EvalReport, MaskedRun};
use culture_neurons::grouping::CultureGrouping;
use culture_neurons::selectors::{score, select_top};
use culture_neurons::sim::{SimConfig, SimModel, Split};
use culture_neurons::{
    parse_activation_log, parse_prediction_log, write_prediction_log, CultureStats, Error, ErrorPolicy, NeuronMask,
    PredictionRecord, Result, RunManifest, RunTarget, SelectorConfig, FULL_RUN,
};
use serde::Serialize;

pub const ACTLOG_NAME: &str = "identification.actlog";
pub const SIM_CONFIG_NAME: &str = "sim.json";
pub const PLANTED_NAME: &str = "planted.json";
pub const MANIFEST_NAME: &str = "runs.manifest";

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut sink = create(path)?;
    serde_json::to_writer_pretty(&mut sink, value)?;
    sink.write_all(b"\n")?;
    sink.flush()?;
    Ok(())
}

fn predlog_path(dir: &Path, run: &str) -> PathBuf {
    dir.join(format!("{run}.predlog"))
}

fn write_predictions(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    let mut sink = create(path)?;
    write_prediction_log(records, &mut sink)?;
    sink.flush()?;
    Ok(())
}

fn read_predictions(path: &Path, policy: ErrorPolicy) -> Result<Vec<PredictionRecord>> {
    let mut reader = parse_prediction_log(open(path)?, policy);
    let records = reader.by_ref().collect::<Result<Vec<_>>>()?;
    report_skipped(path, reader.skipped());
    Ok(records)
}

fn report_skipped(path: &Path, skipped: &[Error]) {
    if !skipped.is_empty() {
        eprintln!("warning: {}: skipped {} invalid records", path.display(), skipped.len());
        for e in skipped.iter().take(5) {
            eprintln!("  {e}");
        }
    }
}

fn load_model(sim_dir: &Path) -> Result<SimModel> {
    let cfg: SimConfig = serde_json::from_reader(open(&sim_dir.join(SIM_CONFIG_NAME))?)?;
    SimModel::new(cfg)
}

/// Writes the identification activation log, the unmasked evaluation predictions,
/// the configuration and the planted ground truth.
pub fn simulate(cfg: SimConfig, out: &Path) -> Result<()> {
    let model = SimModel::new(cfg)?;
    fs::create_dir_all(out)?;
    let records = model.activation_records()?;
    let mut writer = ActivationLogWriter::new(model.header(), create(&out.join(ACTLOG_NAME))?)?;
    for r in &records {
        writer.write_record(r)?;
    }
    writer.finish()?;
    write_predictions(&predlog_path(out, FULL_RUN), &model.predictions(FULL_RUN, None)?)?;
    write_json(&out.join(SIM_CONFIG_NAME), model.config())?;
    write_json(&out.join(PLANTED_NAME), model.planted())?;
    eprintln!(
        "simulated {} identification and {} evaluation samples into {}",
        records.len(),
        model.samples_in(Split::Evaluation).len(),
        out.display()
    );
    Ok(())
}

pub fn aggregate(
    actlog: &Path,
    out: &Path,
    grouping: &CultureGrouping,
    correct_only: bool,
    policy: ErrorPolicy,
) -> Result<()> {
    let mut reader = parse_activation_log(open(actlog)?, policy)?;
    let header = grouping.apply_header(reader.header());
    let mut stats = CultureStats::new(&header)?;
    for record in reader.by_ref() {
        let mut record = record?;
        grouping.apply_record(&mut record);
        stats.fold(&record, correct_only)?;
    }
    report_skipped(actlog, reader.skipped());
    for (c, culture) in stats.cultures().iter().enumerate() {
        if stats.tokens(c) == 0 {
            eprintln!("warning: culture `{culture}` has no valid tokens and will be dropped");
        }
    }
    let mut sink = create(out)?;
    stats.write_snapshot(correct_only, &mut sink)?;
    sink.flush()?;
    Ok(())
}

pub fn identify(stats_path: &Path, out: &Path, cfg: &SelectorConfig) -> Result<Vec<PathBuf>> {
    let (stats, _) = CultureStats::read_snapshot(open(stats_path)?)?;
    let stats = stats.normalize()?;
    for culture in stats.dropped() {
        eprintln!("warning: culture `{culture}` dropped (no valid tokens)");
    }
    let table = score(&stats, cfg)?;
    let selection = select_top(&table, cfg)?;
    for s in &selection.shortfalls {
        eprintln!("warning: {s}");
    }
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for mask in selection.into_masks(stats.layout())? {
        let path = out.join(mask.file_name());
        let mut sink = create(&path)?;
        mask.write(&mut sink)?;
        sink.flush()?;
        written.push(path);
    }
    Ok(written)
}

fn collect_masks(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            found.retain(|p| p.extension().is_some_and(|e| e == "mask"));
            found.sort();
            paths.extend(found);
        } else {
            paths.push(input.clone());
        }
    }
    if paths.is_empty() {
        return Err(Error::Empty("no mask files given".into()));
    }
    Ok(paths)
}

fn run_id(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| Error::Config(format!("cannot derive a run id from {}", path.display())))
}

/// Runs the simulator's evaluation split once per mask. The output directory
/// holds a copy of each mask, one prediction log per run and the run manifest.
pub fn mask(sim_dir: &Path, masks: &[PathBuf], out: &Path) -> Result<()> {
    let model = load_model(sim_dir)?;
    let mask_dir = out.join("masks");
    fs::create_dir_all(&mask_dir)?;
    let mut manifest = RunManifest::default();
    write_predictions(&predlog_path(out, FULL_RUN), &model.predictions(FULL_RUN, None)?)?;
    manifest.push(FULL_RUN, RunTarget::Full)?;
    for path in collect_masks(masks)? {
        let run = run_id(&path)?;
        let mask = NeuronMask::read(open(&path)?)?;
        let file = format!("{run}.mask");
        let mut sink = create(&mask_dir.join(&file))?;
        mask.write(&mut sink)?;
        sink.flush()?;
        write_predictions(&predlog_path(out, &run), &model.predictions(&run, Some(&mask))?)?;
        manifest.push(run, RunTarget::Mask(Path::new("masks").join(file)))?;
    }
    let mut sink = create(&out.join(MANIFEST_NAME))?;
    manifest.write(&mut sink)?;
    sink.flush()?;
    Ok(())
}

/// Builds the evaluation report for every run in the manifest. Prediction logs
/// are looked up next to the manifest as `<run>.predlog`.
pub fn evaluate(
    manifest_path: &Path,
    full: Option<&Path>,
    stats_path: Option<&Path>,
    out: &Path,
    policy: ErrorPolicy,
) -> Result<EvalReport> {
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let manifest = RunManifest::read(open(manifest_path)?)?.resolve(base);
    let full_path = match full {
        Some(p) => p.to_path_buf(),
        None if manifest.get(FULL_RUN).is_some() => predlog_path(base, FULL_RUN),
        None => {
            return Err(Error::Config(
                "manifest has no `full` run and no --full prediction log was given".into(),
            ))
        }
    };
    let full_records = read_predictions(&full_path, policy)?;
    check_run_ids(&full_path, &full_records, FULL_RUN)?;

    let mut runs = Vec::new();
    let mut masks_by_method: BTreeMap<String, Vec<NeuronMask>> = BTreeMap::new();
    for entry in &manifest.entries {
        let RunTarget::Mask(mask_path) = &entry.target else {
            continue;
        };
        let mask = NeuronMask::read(open(mask_path)?)?;
        let path = predlog_path(base, &entry.run_id);
        let predictions = read_predictions(&path, policy)?;
        check_run_ids(&path, &predictions, &entry.run_id)?;
        runs.push(MaskedRun {
            run_id: entry.run_id.clone(),
            method: mask.method(),
            source_culture: mask.source_culture().to_string(),
            predictions,
        });
        masks_by_method.entry(mask.method().to_string()).or_default().push(mask);
    }

    let mut report = compute_matrices(&full_records, &runs)?;
    report.layer_hist = masks_by_method.iter().map(|(m, masks)| (m.clone(), layer_histogram(masks))).collect();
    if let Some(p) = stats_path {
        let (stats, _) = CultureStats::read_snapshot(open(p)?)?;
        report.variance_diag = Some(variance_diagnostics(&stats.normalize()?)?);
    }
    write_json(out, &report)?;
    Ok(report)
}

fn check_run_ids(path: &Path, records: &[PredictionRecord], expected: &str) -> Result<()> {
    match records.iter().position(|r| r.run_id != expected) {
        // line 1 is the first record
        Some(i) => Err(Error::Record {
            line: i + 1,
            sample_id: records[i].sample_id.clone(),
            reason: format!("{}: run `{}`, expected `{expected}`", path.display(), records[i].run_id),
        }),
        None => Ok(()),
    }
}

/// Writes the text summary, CSV matrices and plot data for a saved report.
pub fn report(report_path: &Path, out: &Path) -> Result<String> {
    let report: EvalReport = serde_json::from_reader(open(report_path)?)?;
    fs::create_dir_all(out)?;
    let text = render_text(&report);
    fs::write(out.join("summary.txt"), &text)?;
    for m in &report.methods {
        fs::write(out.join(format!("{}_delta.csv", m.method)), matrix_csv(&report, m, MatrixKind::Delta))?;
        fs::write(out.join(format!("{}_flip_rate.csv", m.method)), matrix_csv(&report, m, MatrixKind::FlipRate))?;
    }
    write_json(&out.join("plots.json"), &plot_data(&report))?;
    Ok(text)
}
