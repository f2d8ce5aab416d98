use std::collections::BTreeMap;

use ndarray::{Array1, Array2};

use pertubox::anonymize::{
    check_k_anonymity, check_l_diversity, check_t_closeness, k_anonymize, AnonymizedTable, GeneralizationHierarchy,
};
use pertubox::data::{write_csv_to, ColumnKind, Dataset, Role};
use pertubox::dimreduce::{nmf_distort, random_project_with_matrix, svd_distort, NmfConfig, ProjectionAxis, ProjectionSpec};
use pertubox::evaluate::{evaluate_anonymized, evaluate_pair, technique_registry, EvaluateOptions, Technique};
use pertubox::multidim::{condense, geometric_perturb, rotate};
use pertubox::value::{
    add_noise, estimate_true_proportion, randomize_response, reconstruct_distribution, NoiseSpec,
    ReconstructionConfig,
};
use pertubox::{Error, Rng};
use serde_json::{json, Map, Value};

use crate::args::{
    AnonymizeParams, Axis, Command, EstimateParams, EvaluateParams, NoiseFamily, PerturbParams, ReconstructParams,
    RegistryParams,
};
use crate::io::{emit_json, load, require, resolve, sidecar_path, to_json, usage, write_atomic, CliResult};

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Perturb(a) => perturb(resolve(a.params, a.config.as_deref())?),
        Command::Anonymize(a) => anonymize(resolve(a.params, a.config.as_deref())?),
        Command::Reconstruct(a) => reconstruct(resolve(a.params, a.config.as_deref())?),
        Command::Estimate(a) => estimate(resolve(a.params, a.config.as_deref())?),
        Command::Evaluate(a) => evaluate(resolve(a.params, a.config.as_deref())?),
        Command::Registry(a) => registry(resolve(a.params, a.config.as_deref())?),
    }
}

fn parse_technique(id: &str) -> CliResult<Technique> {
    id.parse().map_err(|e: Error| usage(e.to_string()))
}

fn noise_spec(family: Option<NoiseFamily>, sigma: Option<f64>, half_width: Option<f64>) -> CliResult<NoiseSpec> {
    let spec = match family.unwrap_or(NoiseFamily::Gaussian) {
        NoiseFamily::Gaussian => NoiseSpec::Gaussian {
            std: require(sigma, "sigma")?,
        },
        NoiseFamily::Uniform => NoiseSpec::Uniform {
            half_width: require(half_width, "half-width")?,
        },
    };
    Ok(spec.validated()?)
}

fn matrix_rows(m: &Array2<f64>) -> Value {
    json!(m.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>())
}

fn csv_bytes(ds: &Dataset) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv_to(ds, &mut buf)?;
    Ok(buf)
}

/// Columns named in `wanted`, or every column of `kind`.
fn select_columns(ds: &Dataset, wanted: Option<&[String]>, kind: ColumnKind) -> CliResult<Vec<String>> {
    let names: Vec<String> = match wanted {
        Some(list) => list.to_vec(),
        None => ds
            .schema()
            .columns()
            .iter()
            .filter(|c| c.kind == kind)
            .map(|c| c.name.clone())
            .collect(),
    };
    for name in &names {
        let spec = ds.schema().column(name).ok_or_else(|| Error::UnknownColumn(name.clone()))?;
        if spec.kind != kind {
            return Err(Error::Dataset(format!("column {name:?} is {:?}, expected {kind:?}", spec.kind)).into());
        }
    }
    if names.is_empty() {
        return Err(Error::Dataset(format!("no {kind:?} column to perturb")).into());
    }
    Ok(names)
}

fn perturb(p: PerturbParams) -> CliResult<()> {
    let technique = parse_technique(&require(p.technique.clone(), "technique")?)?;
    let input = require(p.input.clone(), "input")?;
    let output = require(p.output.clone(), "output")?;
    let seed = p.seed.unwrap_or(0);
    let mut rng = Rng::new(seed, format!("perturb/{technique}"));

    let mut parameters = Map::new();
    let mut summary = Map::new();
    let mut secret = Value::Null;

    // fail on missing parameters before touching the data
    match technique {
        Technique::Geometric => {
            parameters.insert("sigma".into(), json!(require(p.sigma, "sigma")?));
        }
        Technique::Condensation => {
            parameters.insert("group_size".into(), json!(require(p.group_size, "group-size")?));
        }
        Technique::RandomProjection => {
            parameters.insert("k".into(), json!(require(p.k, "k")?));
        }
        Technique::Svd | Technique::Nmf => {
            parameters.insert("rank".into(), json!(require(p.rank, "rank")?));
        }
        Technique::NoiseAddition => {
            let spec = noise_spec(p.noise_family, p.sigma, p.half_width)?;
            parameters.insert("noise".into(), serde_json::to_value(spec).expect("noise serializes"));
        }
        Technique::RandomizedResponse => {
            parameters.insert("theta".into(), json!(require(p.theta, "theta")?));
        }
        Technique::RandomRotation => {}
        Technique::KAnonymity | Technique::LDiversity | Technique::TCloseness => {
            return Err(usage(format!("{technique} is applied with the anonymize command")));
        }
    }

    let ds = load(&input, p.schema.as_deref())?;
    let out = match technique {
        Technique::RandomRotation => {
            let (out, s) = rotate(&ds, &mut rng)?;
            secret = serde_json::to_value(&s).expect("secret serializes");
            out
        }
        Technique::Geometric => {
            let (out, s) = geometric_perturb(&ds, p.sigma.expect("checked"), &mut rng)?;
            secret = serde_json::to_value(&s).expect("secret serializes");
            out
        }
        Technique::Condensation => {
            let (out, groups) = condense(&ds, p.group_size.expect("checked"), &mut rng)?;
            let sizes: Vec<usize> = groups.groups.iter().map(|g| g.members.len()).collect();
            summary.insert("groups".into(), json!(sizes.len()));
            summary.insert("group_sizes".into(), json!(sizes));
            secret = serde_json::to_value(&groups).expect("groups serialize");
            out
        }
        Technique::RandomProjection => {
            let axis = match p.axis.unwrap_or(Axis::ColumnWise) {
                Axis::ColumnWise => ProjectionAxis::ColumnWise,
                Axis::RowWise => ProjectionAxis::RowWise,
            };
            let spec = ProjectionSpec {
                k: p.k.expect("checked"),
                axis,
                entry_std: p.entry_std.unwrap_or(1.0),
            };
            parameters.insert("axis".into(), serde_json::to_value(axis).expect("axis serializes"));
            parameters.insert("entry_std".into(), json!(spec.entry_std));
            let (out, matrix) = random_project_with_matrix(&ds, &spec, &mut rng)?;
            summary.insert("records".into(), json!(out.n_records()));
            summary.insert("attributes".into(), json!(out.n_numeric()));
            secret = json!({ "projection": matrix_rows(&matrix) });
            out
        }
        Technique::Svd => {
            let (out, res) = svd_distort(&ds, p.rank.expect("checked"))?;
            summary.insert("factorization".into(), serde_json::to_value(res.without_factors()).expect("serializes"));
            secret = serde_json::to_value(&res.factors).expect("factors serialize");
            out
        }
        Technique::Nmf => {
            let defaults = NmfConfig::default();
            let config = NmfConfig {
                max_iter: p.max_iter.unwrap_or(defaults.max_iter),
                tol: p.tol.unwrap_or(defaults.tol),
            };
            parameters.insert("max_iter".into(), json!(config.max_iter));
            parameters.insert("tol".into(), json!(config.tol));
            let (out, res) = nmf_distort(&ds, p.rank.expect("checked"), &config, &mut rng)?;
            summary.insert("factorization".into(), serde_json::to_value(res.without_factors()).expect("serializes"));
            secret = serde_json::to_value(&res.factors).expect("factors serialize");
            out
        }
        Technique::NoiseAddition => {
            let spec = noise_spec(p.noise_family, p.sigma, p.half_width)?;
            let columns = select_columns(&ds, p.columns.as_deref(), ColumnKind::Numeric)?;
            let mut x = ds.numeric().to_owned();
            let positions: Vec<&str> = ds.schema().numeric_columns().map(|c| c.name.as_str()).collect();
            for name in &columns {
                let row = positions.iter().position(|c| c == name).expect("numeric column");
                let noisy = add_noise(&x.row(row).to_vec(), &spec, &mut rng.derive(&format!("column/{name}")))?;
                x.row_mut(row).assign(&Array1::from(noisy));
            }
            parameters.insert("columns".into(), json!(columns));
            ds.with_numeric(x)?
        }
        Technique::RandomizedResponse => {
            let theta = p.theta.expect("checked");
            let columns = select_columns(&ds, p.columns.as_deref(), ColumnKind::Boolean)?;
            let mut out = ds.clone();
            for name in &columns {
                let bits = ds.boolean_column(name)?;
                let flipped = randomize_response(&bits, theta, &mut rng.derive(&format!("column/{name}")))?;
                out = out.with_label_column(name, flipped.iter().map(|b| b.to_string()).collect())?;
            }
            parameters.insert("columns".into(), json!(columns));
            out
        }
        Technique::KAnonymity | Technique::LDiversity | Technique::TCloseness => unreachable!(),
    };

    let mut sidecar = Map::new();
    sidecar.insert("technique".into(), json!(technique));
    sidecar.insert("seed".into(), json!(seed));
    sidecar.insert("parameters".into(), Value::Object(parameters));
    sidecar.insert("summary".into(), Value::Object(summary));
    if p.emit_secret {
        sidecar.insert("secret".into(), secret);
    }

    let csv = csv_bytes(&out)?;
    let side = to_json(&Value::Object(sidecar));
    write_atomic(&output, &csv)?;
    write_atomic(&sidecar_path(&output, p.sidecar), &side)
}

fn anonymize(p: AnonymizeParams) -> CliResult<()> {
    let technique = match &p.technique {
        Some(id) => parse_technique(id)?,
        None => Technique::KAnonymity,
    };
    if !technique.is_anonymization() {
        return Err(usage(format!("{technique} is applied with the perturb command")));
    }
    let input = require(p.input.clone(), "input")?;
    let output = require(p.output.clone(), "output")?;
    let k = require(p.k, "k")?;
    if technique == Technique::LDiversity && p.l.is_none() {
        return Err(usage("l-diversity needs --l"));
    }
    if technique == Technique::TCloseness && p.t.is_none() {
        return Err(usage("t-closeness needs --t"));
    }
    let max_suppression = p.max_suppression.unwrap_or(0.0);

    let ds = load(&input, p.schema.as_deref())?;
    let hierarchies = match &p.hierarchies {
        Some(path) => GeneralizationHierarchy::from_json_file(path)?,
        None => GeneralizationHierarchy::new(),
    };
    let table = k_anonymize(&ds, k, &hierarchies, max_suppression)?;

    let mut verdicts = BTreeMap::new();
    verdicts.insert("k_anonymity", json!(check_k_anonymity(&table, k)));
    if p.l.is_some() || p.t.is_some() {
        let sensitive = match &p.sensitive {
            Some(s) => s.clone(),
            None => ds
                .schema()
                .with_role(Role::Sensitive)
                .next()
                .map(|c| c.name.clone())
                .ok_or_else(|| usage("no sensitive column; pass --sensitive"))?,
        };
        if let Some(l) = p.l {
            verdicts.insert("l_diversity", json!(check_l_diversity(&table, &sensitive, l)?));
        }
        if let Some(t) = p.t {
            verdicts.insert("t_closeness", json!(check_t_closeness(&table, &sensitive, t)?));
        }
    }

    let sidecar = json!({
        "technique": technique,
        "parameters": { "k": k, "max_suppression": max_suppression, "l": p.l, "t": p.t, "sensitive": p.sensitive },
        "summary": {
            "classes": table.equivalence_classes.len(),
            "class_sizes": table.class_sizes(),
            "suppressed_count": table.suppressed_count,
            "verdicts": verdicts,
        },
    });
    let mut csv = Vec::new();
    table.write_csv_to(&mut csv)?;
    write_atomic(&output, &csv)?;
    write_atomic(&sidecar_path(&output, p.sidecar), &to_json(&sidecar))
}

/// The named column, or the only column of `kind`.
fn pick_column(ds: &Dataset, named: Option<String>, kind: ColumnKind) -> CliResult<String> {
    if let Some(name) = named {
        return Ok(name);
    }
    let mut candidates = ds.schema().columns().iter().filter(|c| c.kind == kind);
    match (candidates.next(), candidates.next()) {
        (Some(only), None) => Ok(only.name.clone()),
        _ => Err(usage(format!("choose a {kind:?} column with --column"))),
    }
}

fn reconstruct(p: ReconstructParams) -> CliResult<()> {
    let input = require(p.input.clone(), "input")?;
    let noise = noise_spec(p.noise_family, p.sigma, p.half_width)?;
    let defaults = ReconstructionConfig::default();
    let config = ReconstructionConfig {
        bins: p.bins.unwrap_or(defaults.bins),
        tol: p.tol.unwrap_or(defaults.tol),
        max_iter: p.max_iter.unwrap_or(defaults.max_iter),
    };
    let ds = load(&input, p.schema.as_deref())?;
    let column = pick_column(&ds, p.column, ColumnKind::Numeric)?;
    let values = ds.numeric_column(&column)?.to_vec();
    let estimate = reconstruct_distribution(&values, &noise, &config)?;
    let out = json!({ "column": column, "noise": noise, "config": config, "estimate": estimate });
    emit_json(&out, p.output.as_deref())
}

fn estimate(p: EstimateParams) -> CliResult<()> {
    let theta = require(p.theta, "theta")?;
    // reject a degenerate theta before reading anything
    if (0.0..=1.0).contains(&theta) && (2.0 * theta - 1.0).abs() < 1e-12 {
        return Err(Error::NonIdentifiable { theta }.into());
    }
    let input = require(p.input.clone(), "input")?;
    let ds = load(&input, p.schema.as_deref())?;
    let column = pick_column(&ds, p.column, ColumnKind::Boolean)
        .or_else(|_| pick_column(&ds, None, ColumnKind::Categorical))?;
    let bits: Vec<bool> = match ds.schema().column(&column).map(|c| c.kind) {
        Some(ColumnKind::Boolean) => ds.boolean_column(&column)?,
        Some(ColumnKind::Categorical) => ds
            .label_column(&column)?
            .iter()
            .enumerate()
            .map(|(i, s)| {
                pertubox::data::parse_bool(s).ok_or_else(|| Error::Parse {
                    row: i + 1,
                    column: column.clone(),
                    value: s.clone(),
                    kind: "boolean",
                })
            })
            .collect::<Result<_, _>>()?,
        Some(ColumnKind::Numeric) => return Err(Error::Dataset(format!("column {column:?} is numeric")).into()),
        None => return Err(Error::UnknownColumn(column).into()),
    };
    let est = estimate_true_proportion(&bits, theta)?;
    emit_json(&json!({ "column": column, "theta": theta, "estimate": est }), p.output.as_deref())
}

fn evaluate(p: EvaluateParams) -> CliResult<()> {
    let technique = parse_technique(&require(p.technique.clone(), "technique")?)?;
    let original_path = require(p.original.clone(), "original")?;
    let modified_path = require(p.modified.clone(), "modified")?;
    let noise = if technique == Technique::NoiseAddition {
        Some(noise_spec(p.noise_family, p.sigma, p.half_width)?)
    } else {
        None
    };
    let defaults = EvaluateOptions::default();
    let options = EvaluateOptions {
        seed: p.seed.unwrap_or(0),
        k: p.k,
        l: p.l,
        t: p.t,
        theta: p.theta,
        noise,
        sensitive: p.sensitive.clone(),
        reconstruction: ReconstructionConfig {
            bins: p.bins.unwrap_or(defaults.reconstruction.bins),
            ..defaults.reconstruction
        },
    };

    let original = load(&original_path, p.schema.as_deref())?;
    let report = if technique.is_anonymization() {
        let file = std::fs::File::open(&modified_path).map_err(|e| Error::Io {
            path: modified_path.clone(),
            source: e,
        })?;
        let table = AnonymizedTable::read_csv(std::io::BufReader::new(file), original.schema())?;
        evaluate_anonymized(&original, &table, technique, &options)?
    } else {
        let modified = match &p.modified_schema {
            Some(s) => load(&modified_path, Some(s))?,
            None => {
                let guessed = crate::io::guess_schema(&modified_path)?;
                let mut a: Vec<&str> = original.schema().names();
                let mut b: Vec<&str> = guessed.names();
                a.sort_unstable();
                b.sort_unstable();
                let schema = if a == b { original.schema().clone() } else { guessed };
                pertubox::data::load_csv(&modified_path, &schema)?
            }
        };
        evaluate_pair(&original, &modified, technique, &options)?
    };
    emit_json(&report, p.report.as_deref())
}

fn registry(p: RegistryParams) -> CliResult<()> {
    emit_json(&technique_registry(), p.output.as_deref())
}
