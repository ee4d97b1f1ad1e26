//! Subcommand implementations. Every subcommand writes its outputs under the
//! spec's output directory plus a `<subcommand>_manifest.csv` naming inputs,
//! seed and versions. Paths in manifests are relative to the output
//! directory, and nothing time- or host-dependent is recorded.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use xtalk_core::attack::{run_attack, AttackResult, PflipTable};
use xtalk_core::dataset::{
    import_outcomes_csv, write_outcomes_csv, FileSource, TraceFileHeader, TraceReader, TraceWriter,
    FORMAT_VERSION,
};
use xtalk_core::defense::{
    cyclic_ensemble, evaluate_randomization, evaluate_scrambling, randomize_mapping,
    sandbox_allocate, write_defense_csv, AllocationPolicy, DefenseParams, DefenseRow,
    FeedlineGrouping, Readout,
};
use xtalk_core::discriminator::{AccuracyReport, Discriminator, DiscriminatorKind};
use xtalk_core::experiment::{
    discriminate_shots, fit_discriminator, prep_seed, train_count, ShotSource, SimulatedSource,
};
use xtalk_core::BitString;

use crate::plot::{bar_chart, Bar, Reference};
use crate::spec::{ExperimentSpec, MappingKind};
use crate::CliError;

const TRACES_DIR: &str = "traces";
const TRACES_MANIFEST: &str = "traces_manifest.csv";
const OUTCOMES: &str = "outcomes.csv";
const ACCURACY: &str = "accuracy.csv";
const MODEL: &str = "discriminator.model";
const PFLIP: &str = "pflip.csv";
const SVM_ACCURACY: &str = "svm_accuracy.csv";
const DEFENSE: &str = "defense.csv";
const ALLOCATION: &str = "allocation.csv";
const REPORT: &str = "report.md";
const SUMMARY: &str = "summary.csv";
const PLOTS_DIR: &str = "plots";

/// Shots simulated and written per batch.
const WRITE_CHUNK: u64 = 1024;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", path.display())))
}

fn open_input(path: &Path, hint: &str) -> Result<File, CliError> {
    File::open(path)
        .map_err(|e| CliError::validation(format!("cannot open {}: {e} ({hint})", path.display())))
}

fn finish(mut w: BufWriter<File>) -> Result<(), CliError> {
    w.flush()?;
    Ok(())
}

struct Manifest {
    rows: Vec<(String, String)>,
}

impl Manifest {
    fn new(subcommand: &str, spec: Option<&ExperimentSpec>) -> Manifest {
        let mut m = Manifest { rows: Vec::new() };
        m.push("tool", "xtalk");
        m.push("version", env!("CARGO_PKG_VERSION"));
        m.push("trace_format_version", FORMAT_VERSION);
        m.push("subcommand", subcommand);
        if let Some(s) = spec {
            m.push("input", &s.name);
            m.push(
                "device",
                s.device_name.as_deref().unwrap_or("built-in default"),
            );
            m.push("seed", s.seed);
        }
        m
    }

    fn push(&mut self, key: &str, value: impl ToString) {
        self.rows.push((key.to_string(), value.to_string()));
    }

    fn write(&self, out: &Path, subcommand: &str) -> Result<(), CliError> {
        let path = out.join(format!("{subcommand}_manifest.csv"));
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record(["key", "value"])?;
        for (k, v) in &self.rows {
            w.write_record([k, v])?;
        }
        finish(
            w.into_inner()
                .map_err(|e| CliError::runtime(e.to_string()))?,
        )
    }
}

fn trace_file_name(prep: &BitString) -> String {
    format!("{TRACES_DIR}/{prep}.qrxt")
}

pub fn simulate(spec: &ExperimentSpec) -> Result<(), CliError> {
    let source = SimulatedSource {
        device: spec.device.clone(),
        seed: spec.seed,
    };
    let mut manifest = Manifest::new("simulate", Some(spec));
    manifest.push("shots_per_prep", spec.shots);
    manifest.push("preparations", spec.preps.len());

    let mut listing = csv::Writer::from_writer(create(&spec.out.join(TRACES_MANIFEST))?);
    listing.write_record(["file", "prep", "seed", "shots"])?;
    for prep in &spec.preps {
        let name = trace_file_name(prep);
        let seed = prep_seed(spec.seed, prep);
        let header = TraceFileHeader {
            version: FORMAT_VERSION,
            n_qubits: spec.device.n_qubits(),
            n_samples: spec.device.n_samples,
            sample_rate_mhz: spec.device.sample_rate_mhz,
            n_shots: spec.shots as u64,
            seed,
            has_trajectory: true,
        };
        let mut w = TraceWriter::new(create(&spec.out.join(&name))?, header)?;
        let n = spec.shots as u64;
        let mut start = 0;
        while start < n {
            let end = (start + WRITE_CHUNK).min(n);
            for shot in source.map_shots(prep, start..end, |s| s.clone())? {
                w.write_shot(&shot)?;
            }
            start = end;
        }
        finish(w.finish()?)?;
        listing.write_record([
            name.clone(),
            prep.to_string(),
            seed.to_string(),
            spec.shots.to_string(),
        ])?;
        manifest.push("output", name);
    }
    finish(
        listing
            .into_inner()
            .map_err(|e| CliError::runtime(e.to_string()))?,
    )?;
    manifest.push("output", TRACES_MANIFEST);
    manifest.write(&spec.out, "simulate")
}

/// Trace files listed by `simulate`, for the spec's preparations.
fn trace_source(spec: &ExperimentSpec) -> Result<(FileSource, u64), CliError> {
    let path = spec.out.join(TRACES_MANIFEST);
    let mut rd = csv::Reader::from_reader(open_input(&path, "run simulate first")?);
    let mut listed = BTreeMap::new();
    for row in rd.records() {
        let row = row?;
        let (file, prep) = (row.get(0).unwrap_or(""), row.get(1).unwrap_or(""));
        let prep: BitString = prep.parse().map_err(|e| {
            CliError::context(format!("{TRACES_MANIFEST}: preparation {prep:?}"), e)
        })?;
        listed.insert(prep, file.to_string());
    }
    let mut readers = Vec::new();
    for prep in &spec.preps {
        let file = listed.get(prep).ok_or_else(|| {
            CliError::validation(format!(
                "no trace file for preparation {prep} in {TRACES_MANIFEST}"
            ))
        })?;
        let p = spec.out.join(file);
        open_input(&p, "run simulate first")?;
        let reader = TraceReader::open(&p)
            .map_err(|e| CliError::context(format!("trace file {file}"), e))?;
        readers.push((prep.clone(), reader));
    }
    let shots = readers
        .iter()
        .map(|(_, r)| r.header.n_shots)
        .min()
        .unwrap_or(0);
    if let Some((p, r)) = readers.iter().find(|(_, r)| r.header.n_shots != shots) {
        return Err(CliError::validation(format!(
            "trace files hold different shot counts ({} for {p}, {shots} elsewhere)",
            r.header.n_shots
        )));
    }
    Ok((FileSource::new(readers)?, shots))
}

fn write_accuracy(path: &Path, report: &AccuracyReport) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["qubit", "accuracy"])?;
    for (q, a) in report.per_qubit.iter().enumerate() {
        w.write_record([q.to_string(), a.to_string()])?;
    }
    w.write_record(["mean".to_string(), report.mean_per_qubit.to_string()])?;
    w.write_record(["all_correct".to_string(), report.all_correct.to_string()])?;
    finish(
        w.into_inner()
            .map_err(|e| CliError::runtime(e.to_string()))?,
    )
}

pub fn discriminate(spec: &ExperimentSpec) -> Result<(), CliError> {
    let (source, shots) = trace_source(spec)?;
    if source.n_qubits() != spec.device.n_qubits() {
        return Err(CliError::validation(format!(
            "trace files hold {} qubits, the device has {}",
            source.n_qubits(),
            spec.device.n_qubits()
        )));
    }
    let n_train = train_count(shots as usize, spec.train_fraction)?;
    let disc = fit_discriminator(
        &source,
        &spec.preps,
        0..n_train,
        spec.discriminator,
        &spec.mlp,
    )
    .map_err(|e| CliError::context("discriminator training", e))?;
    let outcomes = discriminate_shots(&source, &spec.preps, n_train..shots, &disc)?;
    let report = AccuracyReport::from_outcomes(&outcomes)?;

    let mut w = create(&spec.out.join(OUTCOMES))?;
    write_outcomes_csv(&outcomes, &mut w)?;
    finish(w)?;
    write_accuracy(&spec.out.join(ACCURACY), &report)?;
    let mut w = create(&spec.out.join(MODEL))?;
    w.write_all(disc.to_text().as_bytes())?;
    finish(w)?;

    let mut manifest = Manifest::new("discriminate", Some(spec));
    manifest.push("input", TRACES_MANIFEST);
    manifest.push(
        "discriminator",
        match spec.discriminator {
            DiscriminatorKind::MatchedFilter => "mf",
            DiscriminatorKind::Mlp => "mlp",
        },
    );
    manifest.push("train_fraction", spec.train_fraction);
    manifest.push("train_shots_per_prep", n_train);
    manifest.push("eval_shots_per_prep", shots - n_train);
    for out in [OUTCOMES, ACCURACY, MODEL] {
        manifest.push("output", out);
    }
    manifest.write(&spec.out, "discriminate")
}

fn read_outcomes(out: &Path) -> Result<Vec<xtalk_core::Outcome>, CliError> {
    let f = open_input(&out.join(OUTCOMES), "run discriminate first")?;
    import_outcomes_csv(f).map_err(|e| CliError::context(OUTCOMES, e))
}

/// Mean flip probability over every cell: the average rate at which an idle
/// attacker qubit reads 1.
fn average_excitation(table: &PflipTable) -> f64 {
    let (f, t) = table
        .cells
        .values()
        .fold((0, 0), |(f, t), c| (f + c.flips, t + c.trials));
    f as f64 / t.max(1) as f64
}

fn pflip_plot(result: &AttackResult) -> String {
    let bars: Vec<Bar> = result
        .table
        .cells
        .iter()
        .map(|((v, a), c)| Bar {
            label: format!("V={v} Q{a}"),
            value: c.pflip(),
            error: c.stderr(),
        })
        .collect();
    bar_chart(
        &format!(
            "{}: P_flip by victim bit-string and attacker qubit",
            result.config
        ),
        "P_flip",
        &bars,
        Some(&Reference {
            value: average_excitation(&result.table),
            label: "average excitation".into(),
        }),
    )
}

pub fn attack(spec: &ExperimentSpec, plots: bool) -> Result<(), CliError> {
    let outcomes = read_outcomes(&spec.out)?;
    let results = spec
        .configs
        .iter()
        .map(|c| {
            run_attack(&outcomes, c, &spec.attack)
                .map_err(|e| CliError::context(format!("configuration {c}"), e))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut w = csv::Writer::from_writer(create(&spec.out.join(PFLIP))?);
    w.write_record(PflipTable::CSV_HEADER)?;
    for r in &results {
        r.table.write_csv_rows(&mut w)?;
    }
    finish(
        w.into_inner()
            .map_err(|e| CliError::runtime(e.to_string()))?,
    )?;

    let mut w = csv::Writer::from_writer(create(&spec.out.join(SVM_ACCURACY))?);
    w.write_record([
        "config",
        "n_attackers",
        "n_victims",
        "chance",
        "train_accuracy",
        "eval_accuracy",
        "mutual_information_bits",
        "train_windows",
        "eval_windows",
        "pflip_spread",
        "pooled_stderr",
        "average_excitation",
    ])?;
    for r in &results {
        let spread = r.table.widest_spread();
        w.write_record([
            r.config.notation.clone(),
            r.config.attackers.len().to_string(),
            r.config.victims.len().to_string(),
            r.chance.to_string(),
            r.train_accuracy.to_string(),
            r.eval_accuracy.to_string(),
            r.mutual_information.to_string(),
            r.n_train.to_string(),
            r.n_eval.to_string(),
            spread
                .as_ref()
                .map_or(String::new(), |s| s.spread().to_string()),
            spread
                .as_ref()
                .map_or(String::new(), |s| s.pooled_stderr.to_string()),
            average_excitation(&r.table).to_string(),
        ])?;
    }
    finish(
        w.into_inner()
            .map_err(|e| CliError::runtime(e.to_string()))?,
    )?;

    let mut manifest = Manifest::new("attack", Some(spec));
    manifest.push("input", OUTCOMES);
    manifest.push("window", spec.attack.window);
    manifest.push("attack_train_fraction", spec.attack.train_fraction);
    manifest.push("lambda", spec.attack.lambda);
    manifest.push("epochs", spec.attack.epochs);
    for c in &spec.configs {
        manifest.push("config", &c.notation);
    }
    manifest.push("output", PFLIP);
    manifest.push("output", SVM_ACCURACY);
    if plots {
        for r in &results {
            let name = format!("{PLOTS_DIR}/pflip_{}.svg", r.config.notation);
            let mut f = create(&spec.out.join(&name))?;
            f.write_all(pflip_plot(r).as_bytes())?;
            finish(f)?;
            manifest.push("output", name);
        }
    }
    manifest.write(&spec.out, "attack")
}

fn load_model(out: &Path) -> Result<Discriminator, CliError> {
    let path = out.join(MODEL);
    let text = fs::read_to_string(&path).map_err(|e| {
        CliError::validation(format!(
            "cannot read {}: {e} (run discriminate first)",
            path.display()
        ))
    })?;
    Discriminator::from_text(&text).map_err(|e| CliError::context(MODEL, e))
}

pub fn defend(spec: &ExperimentSpec) -> Result<(), CliError> {
    let defense = spec
        .defense
        .as_ref()
        .ok_or_else(|| CliError::validation("the spec has no [defense] section"))?;
    let mut rows = Vec::new();
    let mut manifest = Manifest::new("defend", Some(spec));
    manifest.push("window", spec.attack.window);
    manifest.push("windows_per_victim", defense.windows_per_victim);

    if defense.recovery_shots.is_some() || defense.mapping.is_some() {
        let disc = load_model(&spec.out)?;
        if disc.n_qubits() != spec.device.n_qubits() {
            return Err(CliError::validation(format!(
                "{MODEL} discriminates {} qubits, the device has {}",
                disc.n_qubits(),
                spec.device.n_qubits()
            )));
        }
        manifest.push("input", MODEL);
        let source = SimulatedSource {
            device: spec.device.clone(),
            seed: spec.seed,
        };
        let readout = Readout {
            source: &source,
            discriminator: &disc,
        };
        let params = DefenseParams {
            attack: spec.attack,
            windows_per_victim: defense.windows_per_victim,
        };
        for cfg in &defense.configs {
            let ctx = |e| CliError::context(format!("configuration {cfg}"), e);
            if let Some(recovery) = defense.recovery_shots {
                let r = evaluate_scrambling(&readout, cfg, &params, recovery, spec.seed)
                    .map_err(ctx)?;
                let p = format!("config={cfg};recovery_shots={recovery}");
                rows.push(DefenseRow {
                    defense: "scrambling-fresh-pad".into(),
                    parameterization: p.clone(),
                    undefended_accuracy: Some(r.undefended_accuracy),
                    defended_accuracy: Some(r.fresh_pad_accuracy),
                    chance: Some(r.chance),
                    recovery_distance: Some(r.recovery_distance),
                    utilization: None,
                });
                rows.push(DefenseRow {
                    defense: "scrambling-fixed-pad".into(),
                    parameterization: p,
                    undefended_accuracy: Some(r.undefended_accuracy),
                    defended_accuracy: Some(r.fixed_pad_accuracy),
                    chance: Some(r.chance),
                    ..Default::default()
                });
            }
            if let Some(m) = &defense.mapping {
                let group_shots = (spec.attack.window * m.group_windows) as u64;
                let n_groups = defense.windows_per_victim.div_ceil(m.group_windows);
                let n = spec.device.n_qubits();
                let (name, ensemble) = match m.kind {
                    MappingKind::Random => (
                        "mapping-random",
                        randomize_mapping(n, m.size, group_shots, n_groups, spec.seed),
                    ),
                    MappingKind::Cyclic => {
                        ("mapping-cyclic", cyclic_ensemble(n, group_shots, n_groups))
                    }
                };
                let r = evaluate_randomization(&readout, cfg, &params, &ensemble.map_err(ctx)?)
                    .map_err(ctx)?;
                rows.push(DefenseRow {
                    defense: name.into(),
                    parameterization: format!(
                        "config={cfg};size={};group_windows={}",
                        r.n_assignments, m.group_windows
                    ),
                    undefended_accuracy: Some(r.fixed_accuracy),
                    defended_accuracy: Some(r.randomized_accuracy),
                    chance: Some(r.chance),
                    ..Default::default()
                });
            }
        }
    }

    if let Some(s) = &defense.sandbox {
        let grouping = FeedlineGrouping::uniform(s.groups, s.group_size);
        let requests = s
            .requests
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join(";");
        let mut allocation = Vec::new();
        for (name, policy) in [
            ("sandbox-sandboxed", AllocationPolicy::Sandboxed),
            ("sandbox-unrestricted", AllocationPolicy::Unrestricted),
        ] {
            let report = sandbox_allocate(&s.requests, &grouping, policy)
                .map_err(|e| CliError::context("sandbox", e))?;
            rows.push(DefenseRow {
                defense: name.into(),
                parameterization: format!(
                    "groups={};group_size={};requests={requests};rejected={}",
                    s.groups,
                    s.group_size,
                    report.rejected.len()
                ),
                utilization: Some(report.utilization),
                ..Default::default()
            });
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            let text = String::from_utf8_lossy(&buf).into_owned();
            if allocation.is_empty() {
                allocation.push(text);
            } else {
                allocation.push(
                    text.split_once('\n')
                        .map_or(String::new(), |(_, b)| b.into()),
                );
            }
        }
        let mut f = create(&spec.out.join(ALLOCATION))?;
        f.write_all(allocation.concat().as_bytes())?;
        finish(f)?;
        manifest.push("output", ALLOCATION);
    }

    if rows.is_empty() {
        return Err(CliError::validation(
            "the [defense] section selects no defense (scrambling, mapping or sandbox)",
        ));
    }
    let mut f = create(&spec.out.join(DEFENSE))?;
    write_defense_csv(&rows, &mut f)?;
    finish(f)?;
    manifest.push("output", DEFENSE);
    manifest.write(&spec.out, "defend")
}

type Table = (Vec<String>, Vec<Vec<String>>);

fn read_table(path: &Path) -> Result<Option<Table>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    let mut rd = csv::Reader::from_path(path)?;
    let header = rd.headers()?.iter().map(String::from).collect();
    let rows = rd
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<Vec<Vec<String>>, _>>()?;
    Ok(Some((header, rows)))
}

fn markdown_table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    out.push_str(&format!("| {} |\n", header.join(" | ")));
    out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
    for r in rows {
        out.push_str(&format!("| {} |\n", r.join(" | ")));
    }
    out.push('\n');
}

pub fn report(out: &Path, spec: Option<&ExperimentSpec>, plots: bool) -> Result<(), CliError> {
    let sections = [
        (ACCURACY, "Discriminator accuracy (evaluation shots)"),
        (SVM_ACCURACY, "Attack accuracy"),
        (DEFENSE, "Defenses"),
    ];
    let mut md = String::from("# Readout side-channel report\n\n");
    if let Some(s) = spec {
        md.push_str(&format!("Spec `{}`, seed {}.\n\n", s.name, s.seed));
    }
    let mut summary = csv::Writer::from_writer(Vec::new());
    summary.write_record(["source", "row", "column", "value"])?;
    let mut manifest = Manifest::new("report", spec);
    let mut svm = None;
    for (file, title) in sections {
        let Some((header, rows)) = read_table(&out.join(file))? else {
            continue;
        };
        manifest.push("input", file);
        md.push_str(&format!("## {title}\n\n"));
        markdown_table(&mut md, &header, &rows);
        // Defense rows repeat a defense name across configurations.
        let key_cols = if file == DEFENSE { 2 } else { 1 };
        for r in &rows {
            let key = r[..key_cols.min(r.len())].join(" ");
            for (h, v) in header.iter().zip(r).skip(key_cols) {
                summary.write_record([file, &key, h, v])?;
            }
        }
        if file == SVM_ACCURACY {
            svm = Some((header, rows));
        }
    }
    if manifest.rows.iter().all(|(k, _)| k != "input") {
        return Err(CliError::validation(format!(
            "nothing to report in {} (run discriminate, attack or defend first)",
            out.display()
        )));
    }
    let mut f = create(&out.join(REPORT))?;
    f.write_all(md.as_bytes())?;
    finish(f)?;
    let mut f = create(&out.join(SUMMARY))?;
    f.write_all(
        &summary
            .into_inner()
            .map_err(|e| CliError::runtime(e.to_string()))?,
    )?;
    finish(f)?;
    manifest.push("output", REPORT);
    manifest.push("output", SUMMARY);

    if let (true, Some((header, rows))) = (plots, svm) {
        let col = |name: &str| header.iter().position(|h| h == name);
        if let (Some(ce), Some(cc)) = (col("eval_accuracy"), col("chance")) {
            let bars: Vec<Bar> = rows
                .iter()
                .map(|r| Bar {
                    label: r[0].clone(),
                    value: r[ce].parse::<f64>().unwrap_or(0.0)
                        - r[cc].parse::<f64>().unwrap_or(0.0),
                    error: 0.0,
                })
                .collect();
            let name = PathBuf::from(PLOTS_DIR).join("svm_lift.svg");
            let mut f = create(&out.join(&name))?;
            f.write_all(
                bar_chart(
                    "SVM victim-prediction accuracy above chance",
                    "accuracy - chance",
                    &bars,
                    None,
                )
                .as_bytes(),
            )?;
            finish(f)?;
            manifest.push("output", format!("{PLOTS_DIR}/svm_lift.svg"));
        }
    }
    manifest.write(out, "report")
}
