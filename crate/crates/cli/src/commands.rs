use std::fs;
use std::io::Write;
use std::path::Path;

use hyperkg::data::{degree_analysis_with_min, DatasetBundle, Split, Triple};
use hyperkg::evaluation;
use hyperkg::model::{load_checkpoint, save_checkpoint};
use hyperkg::rules::{generate_wd_like, GeneratorConfig, Rule};
use hyperkg::training::{train_with, TrainEvent};
use hyperkg::verification::{self, CheckReport};
use hyperkg::Error;
use serde::Serialize;
use serde_json::json;

use crate::config::resolve;
use crate::{CliError, DegreeArgs, EvalArgs, GenArgs, TrainArgs, VerifyArgs, EXIT_FAILURE, EXIT_OK};

type CmdResult = Result<i32, CliError>;

fn emit(stdout: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError {
        code: EXIT_FAILURE,
        message: e.to_string(),
    })?;
    writeln!(stdout, "{text}").map_err(|e| CliError {
        code: EXIT_FAILURE,
        message: format!("writing output: {e}"),
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)? + "\n";
    fs::write(path, text).map_err(|e| CliError::from(Error::Io {
        path: path.to_path_buf(),
        source: e,
    }))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| {
        CliError::from(Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })
    })
}

fn parse_split(s: &str) -> Result<Split, CliError> {
    match s {
        "train" => Ok(Split::Train),
        "valid" => Ok(Split::Valid),
        "test" => Ok(Split::Test),
        other => Err(CliError::config(format!("unknown split '{other}' (expected train, valid or test)"))),
    }
}

pub fn train(args: &TrainArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let cfg = resolve(args.preset.as_deref(), args.config.as_deref(), args.overrides())?;
    let data_dir = cfg.data_dir.clone().ok_or_else(|| CliError::config("data_dir is required"))?;
    let out = cfg.out.clone().ok_or_else(|| CliError::config("out is required"))?;
    let bundle = DatasetBundle::load_dir(&data_dir)?;
    let _ = writeln!(
        stderr,
        "loaded {} entities, {} relations, {}/{}/{} facts",
        bundle.num_entities(),
        bundle.num_relations(),
        bundle.train.len(),
        bundle.valid.len(),
        bundle.test.len()
    );
    create_dir(&out)?;
    write_json(&out.join("config.json"), &cfg)?;

    let best_path = out.join("best.ckpt");
    let outcome = train_with(&bundle, &cfg.train, |event| {
        match event {
            TrainEvent::Improved { store, .. } => {
                save_checkpoint(store, &bundle.vocab, &best_path)?;
            }
            TrainEvent::EpochDone(row) => {
                if let Some(mrr) = row.val_mrr {
                    let _ = writeln!(stderr, "epoch {:>5}  loss {:.4}  val MRR {:.4}", row.epoch, row.loss, mrr);
                }
            }
        }
        Ok(())
    })?;
    outcome.log.write_csv(&out.join("log.csv"))?;
    save_checkpoint(&outcome.last, &bundle.vocab, &out.join("last.ckpt"))?;
    if outcome.best_epoch.is_none() {
        save_checkpoint(&outcome.best, &bundle.vocab, &best_path)?;
    }
    let test = if bundle.test.is_empty() {
        None
    } else {
        let report = evaluation::evaluate(&outcome.best, &bundle, &cfg.ks)?;
        write_json(&out.join("report.json"), &report.summary())?;
        Some(report.summary())
    };
    emit(
        stdout,
        &json!({
            "best_epoch": outcome.best_epoch,
            "best_val_mrr": outcome.best_val_mrr,
            "test": test,
        }),
    )?;
    Ok(EXIT_OK)
}

pub fn eval(args: &EvalArgs, stdout: &mut dyn Write, _stderr: &mut dyn Write) -> CmdResult {
    if args.ks.is_empty() || args.ks.contains(&0) {
        return Err(CliError::config("ks must be positive integers"));
    }
    let split = parse_split(&args.split)?;
    let (store, manifest) = load_checkpoint(&args.checkpoint)?;
    let bundle = DatasetBundle::load_dir(&args.data_dir)?;
    manifest.verify_vocab(&bundle.vocab)?;
    let report = evaluation::evaluate_split(&store, &bundle, split, &args.ks)?;
    if let Some(path) = &args.per_query {
        report.write_per_query_csv(path, &bundle)?;
    }
    emit(stdout, &report.summary())?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct VerifyReport {
    checks: Vec<CheckReport>,
    lemma1: Vec<verification::Lemma1Case>,
    gradient: verification::GradientCheck,
}

pub fn verify(args: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let mut checks = verification::proposition1_suite(&args.dims, args.regions, args.samples, args.seed)?;

    let a = 1.0;
    let lemma1 = verification::lemma1_counterexamples(a, 0.0)?;
    for case in &lemma1 {
        let _ = writeln!(
            stderr,
            "{}: conclusion {} has L1 {:.6}, L2 {:.6} (a = {a})",
            case.restriction, case.conclusion.expr, case.conclusion.l1, case.conclusion.l2
        );
        checks.push(CheckReport {
            check: format!("lemma1_{}", case.restriction),
            samples: case.premises.len() as u64 + 1,
            violations: u64::from(!case.holds(a)),
            worst_margin: case.conclusion.l1.min(case.conclusion.l2) - a,
            skipped: None,
        });
    }

    let gradient = verification::gradient_check(args.grad_configs, args.seed)?;
    checks.push(CheckReport {
        check: "gradient_finite_difference".into(),
        samples: gradient.configurations,
        violations: u64::from(!(gradient.max_rel_error < 1e-5)),
        worst_margin: gradient.max_rel_error,
        skipped: None,
    });

    let mut failed = false;
    for c in &checks {
        failed |= !c.passed();
        let _ = writeln!(
            stderr,
            "{:<32} samples {:>10}  violations {:>3}  worst margin {:.3e}",
            c.check, c.samples, c.violations, c.worst_margin
        );
    }
    let report = VerifyReport {
        checks,
        lemma1,
        gradient,
    };
    if let Some(path) = &args.out {
        write_json(path, &report)?;
    }
    emit(stdout, &report)?;
    Ok(if failed { EXIT_FAILURE } else { EXIT_OK })
}

pub fn analyze_degrees(args: &DegreeArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let bundle = DatasetBundle::load_dir(&args.data_dir)?;
    let triples: Vec<Triple> = bundle.all_triples().copied().collect();
    let report = degree_analysis_with_min(&triples, args.d_min)?;
    let total = report.total_degree();
    if total != 2 * triples.len() as u64 {
        return Err(CliError {
            code: EXIT_FAILURE,
            message: format!("total degree {total} differs from twice the {} facts", triples.len()),
        });
    }
    let _ = writeln!(stderr, "total degree {total} = 2 × {} facts", triples.len());
    report.write_csv(&args.out)?;
    report.write_json(&args.out.with_extension("json"))?;
    emit(stdout, &report.summary())?;
    Ok(EXIT_OK)
}

pub fn gen_dataset(args: &GenArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let rules = Rule::parse_set(&args.rules)?;
    let mut cfg = if rules.contains(&Rule::B) {
        GeneratorConfig::wdpp(args.seed)
    } else {
        GeneratorConfig::wd(args.seed)
    };
    cfg.rules = rules;
    if let Some(n) = args.n_entities {
        cfg.n_entities = n;
    }
    if let Some(n) = args.n_facts {
        cfg.n_facts = n;
    }
    let generated = generate_wd_like(&cfg)?;
    create_dir(&args.out)?;
    generated.write_dir(&args.out)?;
    let b = &generated.bundle;
    let _ = writeln!(stderr, "wrote {}", args.out.display());
    emit(
        stdout,
        &json!({
            "entities": b.num_entities(),
            "relations": b.num_relations(),
            "train": b.train.len(),
            "valid": b.valid.len(),
            "test": b.test.len(),
        }),
    )?;
    Ok(EXIT_OK)
}
