//! One function per subcommand.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use ckc_core::causal_kernel::kernel_matrix_with;
use ckc_core::causal_mapping::{dependence_decision_with, SampleMapper};
use ckc_core::clustering::cluster_pipeline_with;
use ckc_core::early_warning::{
    regime_switch_series, run_early_warning, warning_confusion, NodeSeriesSet, Region, RegimeSwitchConfig, WarnConfig,
};
use ckc_core::eval_metrics::{adjusted_rand_index, v_measure, ConfusionCounts};
use ckc_core::graph_space::{graphs_equivalent, m_connectivity, CausalGraph, Edge};
use ckc_core::synth::{benchmark_groups, chain_vs_empty, Benchmark, GenConfig, DEFAULT_WEIGHT_RANGE};
use ckc_core::Dependence;
use ndarray::Array2;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::io::{
    feature_headers, flush, fmt_num, json_num, json_nums, load_labels_csv, load_numeric_csv, load_samples_csv,
    open_output, read_records, samples_from_array, write_json_line, write_labels, write_matrix, write_table,
};
use crate::{ClusterArgs, DecideArgs, EarlyWarnArgs, GenArgs, GenKind, GraphArgs, KernelArgs, MetricsArgs, StabilityArgs};

pub fn gen(args: &GenArgs) -> Result<()> {
    if args.kind == GenKind::RegimeSwitch {
        return gen_series(args);
    }
    let default_min = match args.kind {
        GenKind::ChainEmpty => 1.0,
        _ => DEFAULT_WEIGHT_RANGE.0,
    };
    let config = GenConfig {
        n: args.n,
        m: args.m,
        edge_prob: args.edge_prob,
        corr_nonzero: true,
        mu_mode: args.mu.into(),
        nonlinear: args.nonlinear,
        noise_scale: args.noise_scale,
        noise_kind: args.noise.into(),
        weight_range: (args.weight_min.unwrap_or(default_min), args.weight_max),
        seed: args.seed,
    };
    let bench = match args.kind {
        GenKind::ChainEmpty => chain_vs_empty(&config)?,
        _ => benchmark_groups(args.groups, &config)?,
    };
    write_table(open_output(Some(&args.out))?, &feature_headers(args.m), bench.samples.data())?;
    if let Some(path) = &args.labels_out {
        write_labels(open_output(Some(path))?, &bench.labels)?;
    }
    if let Some(path) = &args.graphs_out {
        write_graphs(open_output(Some(path))?, &bench)?;
    }
    Ok(())
}

fn write_graphs<W: Write>(out: W, bench: &Benchmark) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["group", "parent", "child", "weight"])?;
    for (g, graph) in bench.graphs.iter().enumerate() {
        for e in graph.edges() {
            writer.write_record([g.to_string(), e.parent.to_string(), e.child.to_string(), fmt_num(e.weight)])?;
        }
    }
    writer.flush().map_err(|e| CliError::Csv(e.to_string()))
}

/// Dates are `YYYY-DDD`, the day counted within its year tag.
fn gen_series(args: &GenArgs) -> Result<()> {
    let cfg = RegimeSwitchConfig {
        years: args.years,
        event_offset: args.event_offset,
        seed: args.seed,
        ..RegimeSwitchConfig::default()
    };
    let rs = regime_switch_series(&cfg, &WarnConfig::default())?;
    let mut writer = csv::Writer::from_writer(open_output(Some(&args.out))?);
    writer.write_record(["node_id", "group", "date", "value"])?;
    for (set, group) in [(&rs.west, "west"), (&rs.east, "east")] {
        for (id, series) in set.node_ids().iter().zip(set.series()) {
            let mut day = 0;
            for (t, (&value, &year)) in series.iter().zip(set.years()).enumerate() {
                day = if t > 0 && set.years()[t - 1] == year { day + 1 } else { 1 };
                let date = format!("{year:04}-{day:03}");
                writer.write_record([id.as_str(), group, date.as_str(), value.to_string().as_str()])?;
            }
        }
    }
    writer.flush().map_err(|e| CliError::Csv(e.to_string()))?;
    if let Some(path) = &args.events_out {
        let mut out = open_output(Some(path))?;
        writeln!(out, "year\n{}", rs.event_year).map_err(|e| CliError::io(path, e))?;
        flush(&mut out)?;
    }
    Ok(())
}

pub fn cluster(args: &ClusterArgs) -> Result<()> {
    let samples = load_samples_csv(&args.input)?;
    let fit = cluster_pipeline_with(
        &samples,
        args.k,
        args.mapping.nu,
        args.seed,
        args.max_iter,
        args.mapping.form.into(),
    )?;
    write_labels(open_output(args.out.as_deref())?, &fit.labels)?;
    if let Some(path) = &args.summary {
        let mut out = open_output(Some(path))?;
        let record = json!({
            "k": fit.k,
            "inertia": json_num(fit.inertia),
            "iterations": fit.iterations,
            "sizes": fit.cluster_sizes(),
        });
        write_json_line(&mut out, &record)?;
        flush(&mut out)?;
    }
    Ok(())
}

pub fn kernel(args: &KernelArgs) -> Result<()> {
    let samples = load_samples_csv(&args.input)?;
    let k = kernel_matrix_with(&samples, args.mapping.nu, args.mapping.form.into())?;
    write_matrix(open_output(args.out.as_deref())?, k.data())
}

pub fn decide(args: &DecideArgs) -> Result<()> {
    let samples = load_samples_csv(&args.input)?;
    let mapper = SampleMapper::new(&samples, args.mapping.nu, args.mapping.form.into())?;
    let aggregate = mapper.aggregate();
    let mut out = open_output(args.out.as_deref())?;
    let m = samples.n_features();
    for p in 0..m {
        for q in p + 1..m {
            let verdict = match dependence_decision_with(&mapper, p, q)? {
                Dependence::Dependent => "Dependent",
                Dependence::Independent => "Independent",
            };
            let record = json!({ "p": p, "q": q, "aggregate": json_num(aggregate[[p, q]]), "verdict": verdict });
            write_json_line(&mut out, &record)?;
        }
    }
    flush(&mut out)
}

fn column_index(headers: &[String], name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::InvalidInput(format!("{}: missing column {name:?}", path.display())))
}

fn parse_at<T: std::str::FromStr>(cell: &str, row: usize, col: usize) -> Result<T> {
    cell.parse().map_err(|_| CliError::ParseError {
        row,
        col,
        value: cell.to_string(),
    })
}

fn load_edges(path: &Path) -> Result<Vec<Edge>> {
    let (headers, records) = read_records(path)?;
    let parent = column_index(&headers, "parent", path)?;
    let child = column_index(&headers, "child", path)?;
    let weight = headers.iter().position(|h| h == "weight");
    records
        .iter()
        .enumerate()
        .map(|(r, rec)| {
            Ok(Edge {
                parent: parse_at(&rec[parent], r + 2, parent + 1)?,
                child: parse_at(&rec[child], r + 2, child + 1)?,
                weight: match weight {
                    Some(w) => parse_at(&rec[w], r + 2, w + 1)?,
                    None => 1.0,
                },
            })
        })
        .collect()
}

fn load_graph(path: &Path, nodes: Option<usize>) -> Result<CausalGraph> {
    let edges = load_edges(path)?;
    let inferred = edges.iter().map(|e| e.parent.max(e.child) + 1).max().unwrap_or(0);
    Ok(CausalGraph::new(nodes.unwrap_or(inferred), edges)?)
}

pub fn graph(args: &GraphArgs) -> Result<()> {
    let g = load_graph(&args.edges, args.nodes)?;
    let mut out = open_output(args.out.as_deref())?;
    let lengths: Vec<usize> = match args.m_len {
        Some(l) => vec![l],
        None => (1..g.node_count().max(1)).collect(),
    };
    for l in lengths {
        let pairs: Vec<[usize; 2]> = m_connectivity(&g, l)?.into_iter().map(|(a, b)| [a, b]).collect();
        write_json_line(&mut out, &json!({ "m": l, "pairs": pairs }))?;
    }
    if let Some(other) = &args.other {
        let h = load_graph(other, args.nodes)?;
        write_json_line(&mut out, &json!({ "equivalent": graphs_equivalent(&g, &h)? }))?;
    }
    flush(&mut out)
}

fn confusion_record(counts: &ConfusionCounts) -> Value {
    let metric = |r: ckc_core::Result<f64>| r.map_or(Value::Null, json_num);
    json!({
        "tp": counts.tp,
        "tn": counts.tn,
        "fp": counts.fp,
        "fn": counts.fn_,
        "accuracy": metric(counts.accuracy()),
        "recall": metric(counts.recall()),
        "f1": metric(counts.f1()),
    })
}

pub fn metrics(args: &MetricsArgs) -> Result<()> {
    let mut out = open_output(args.out.as_deref())?;
    let mut wrote = false;
    if let (Some(truth), Some(pred)) = (&args.truth, &args.pred) {
        let truth = load_labels_csv(truth)?;
        let pred = load_labels_csv(pred)?;
        let record = json!({
            "ari": json_num(adjusted_rand_index(&truth, &pred)?),
            "v_measure": json_num(v_measure(&truth, &pred)?),
        });
        write_json_line(&mut out, &record)?;
        wrote = true;
    }
    if let (Some(tp), Some(tn), Some(fp), Some(fn_)) = (args.tp, args.tn, args.fp, args.fn_) {
        let counts = ConfusionCounts::new(tp, tn, fp, fn_);
        // Undefined metrics are a failure here, unlike the early-warning record.
        ckc_core::eval_metrics::confusion_metrics(&counts)?;
        write_json_line(&mut out, &confusion_record(&counts))?;
        wrote = true;
    }
    if !wrote {
        return Err(CliError::InvalidInput(
            "metrics needs --truth/--pred or all of --tp/--tn/--fp/--fn".into(),
        ));
    }
    flush(&mut out)
}

struct Observation {
    year: i32,
    date: String,
    value: f64,
}

/// Year prefix of a `YYYY-…` date.
fn date_year(date: &str, row: usize, col: usize) -> Result<i32> {
    parse_at(date.split('-').next().unwrap_or(date), row, col)
}

/// Pivot a long `node_id,group,date,value` table into the two regions.
pub fn load_long_series(path: &Path) -> Result<(NodeSeriesSet, NodeSeriesSet)> {
    let (headers, records) = read_records(path)?;
    let cols = ["node_id", "group", "date", "value"]
        .iter()
        .map(|c| column_index(&headers, c, path))
        .collect::<Result<Vec<_>>>()?;
    let mut nodes: BTreeMap<Region, BTreeMap<String, Vec<Observation>>> = BTreeMap::new();
    for (r, rec) in records.iter().enumerate() {
        let row = r + 2;
        let region: Region = rec[cols[1]].parse().map_err(|_| CliError::ParseError {
            row,
            col: cols[1] + 1,
            value: rec[cols[1]].to_string(),
        })?;
        let date = rec[cols[2]].to_string();
        let obs = Observation {
            year: date_year(&date, row, cols[2] + 1)?,
            date,
            value: parse_at(&rec[cols[3]], row, cols[3] + 1)?,
        };
        nodes
            .entry(region)
            .or_default()
            .entry(rec[cols[0]].to_string())
            .or_default()
            .push(obs);
    }

    let mut reference: Option<Vec<(i32, String)>> = None;
    let mut sets = Vec::new();
    for region in [Region::West, Region::East] {
        let by_node = nodes
            .remove(&region)
            .ok_or_else(|| CliError::InvalidInput(format!("{}: no {region:?} nodes", path.display())))?;
        let mut ids = Vec::new();
        let mut series = Vec::new();
        let mut years = Vec::new();
        for (id, mut obs) in by_node {
            obs.sort_by(|a, b| a.year.cmp(&b.year).then_with(|| a.date.cmp(&b.date)));
            let index: Vec<(i32, String)> = obs.iter().map(|o| (o.year, o.date.clone())).collect();
            match &reference {
                None => reference = Some(index),
                Some(expected) if *expected != index => {
                    return Err(CliError::InvalidInput(format!(
                        "{}: node {id:?} does not share the date index of the other nodes",
                        path.display()
                    )));
                }
                Some(_) => {}
            }
            years = obs.iter().map(|o| o.year).collect();
            series.push(obs.iter().map(|o| o.value).collect());
            ids.push(id);
        }
        sets.push(NodeSeriesSet::new(region, ids, series, years)?);
    }
    let east = sets.pop().expect("two regions");
    let west = sets.pop().expect("two regions");
    Ok((west, east))
}

fn load_years(path: &Path) -> Result<BTreeSet<i32>> {
    let (headers, records) = read_records(path)?;
    let col = column_index(&headers, "year", path)?;
    records
        .iter()
        .enumerate()
        .map(|(r, rec)| parse_at(&rec[col], r + 2, col + 1))
        .collect()
}

pub fn earlywarn(args: &EarlyWarnArgs) -> Result<()> {
    let config = args.warn_config();
    config.validate()?;
    let (west, east) = load_long_series(&args.input)?;
    let report = run_early_warning(&west, &east, &config)?;
    let mut out = open_output(args.out.as_deref())?;
    for y in &report.yearly {
        let record = json!({
            "year": y.year,
            "yc": json_num(y.yc),
            "yc_z": json_num(y.yc_z),
            "warned": report.warned.contains(&y.year),
        });
        write_json_line(&mut out, &record)?;
    }
    if let Some(path) = &args.events {
        let events = load_years(path)?;
        let years: Vec<i32> = report.yearly.iter().map(|y| y.year).collect();
        let counts = warning_confusion(&years, &report.warned, &events);
        write_json_line(&mut out, &confusion_record(&counts))?;
    }
    flush(&mut out)
}

pub fn stability(args: &StabilityArgs) -> Result<()> {
    let (headers, data) = load_numeric_csv(&args.input)?;
    let target = column_index(&headers, &args.target, &args.input)?;
    let features: Vec<usize> = (0..headers.len()).filter(|&c| c != target).collect();
    let x = Array2::from_shape_fn((data.nrows(), features.len()), |(i, j)| data[[i, features[j]]]);
    let y: Vec<f64> = data.column(target).to_vec();
    let samples = samples_from_array(x)?;
    let labels = load_labels_csv(&args.labels)?;

    let coeffs = ckc_core::stability::subgroup_regression(&samples, &y, &labels)?;
    let vectors = ckc_core::stability::feature_vectors(&coeffs)?;
    let ranking = ckc_core::stability::stability_ranking(&vectors);
    let report = ckc_core::stability::sta_error_eval(&samples, &y, &labels, args.top_k)?;

    let names: Vec<&str> = features.iter().map(|&c| headers[c].as_str()).collect();
    let mut out = open_output(args.out.as_deref())?;
    for (rank, &f) in ranking.order.iter().enumerate() {
        let record = json!({
            "feature": names[f],
            "index": f,
            "rank": rank,
            "variance": json_num(ranking.variances[f]),
            "coefficients": json_nums(&vectors[f]),
        });
        write_json_line(&mut out, &record)?;
    }
    let record = json!({
        "top_k": args.top_k,
        "selected": ranking.top(args.top_k).iter().map(|&f| names[f]).collect::<Vec<_>>(),
        "skipped_subgroups": coeffs.skipped,
        "rmse_train": json_num(report.rmse_train),
        "sta_error": json_num(report.sta_error),
    });
    write_json_line(&mut out, &record)?;
    flush(&mut out)
}

