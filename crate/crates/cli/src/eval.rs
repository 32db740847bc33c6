use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use pkgraph::eval::io::{read_edge_set, read_keysets, read_labels, read_panel, read_priors};
use pkgraph::eval::report::{
    consensus_report, edges_report, kappa_report, keys_report, types_report, MetricsReport, TypeMetricInputs,
};
use pkgraph::eval::EvalError;
use serde_json::Value;

use crate::args::EvalCommand;
use crate::Failure;

fn failure(path: Option<&Path>, e: EvalError) -> Failure {
    let at = path.map(|p| format!("{}: ", p.display())).unwrap_or_default();
    match e {
        EvalError::Schema { .. } => Failure::usage(format!("{at}{e}")),
        _ => Failure::domain(format!("{at}{e}")),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn parsed<T>(path: &Path, f: impl Fn(&str) -> Result<T, EvalError>) -> Result<T, Failure> {
    f(&read(path)?).map_err(|e| failure(Some(path), e))
}

pub fn compute(cmd: &EvalCommand) -> Result<MetricsReport, Failure> {
    match cmd {
        EvalCommand::Types {
            acc,
            cov,
            comp,
            products,
            canonical_types,
        } => types_report(TypeMetricInputs {
            acceptance: *acc,
            coverage: *cov,
            compression: *comp,
            products: *products,
            canonical_types: *canonical_types,
        })
        .map_err(|e| failure(None, e)),
        EvalCommand::Keys { keysets, priors } => {
            let k = parsed(keysets, read_keysets)?;
            let p = parsed(priors, read_priors)?;
            keys_report(&k, &p).map_err(|e| failure(None, e))
        }
        EvalCommand::Edges { predicted, reference } => {
            let open = |p: &Path| -> Result<_, Failure> {
                let f = fs::File::open(p).map_err(|e| Failure::usage(format!("cannot read {}: {e}", p.display())))?;
                read_edge_set(BufReader::new(f)).map_err(|e| failure(Some(p), e))
            };
            Ok(edges_report(&open(predicted)?, &open(reference)?))
        }
        EvalCommand::Kappa { a, b } => {
            let la = parsed(a, read_labels)?;
            let lb = parsed(b, read_labels)?;
            kappa_report(&la, &lb).map_err(|e| failure(None, e))
        }
        EvalCommand::Consensus {
            panel,
            threshold,
            candidates,
        } => {
            let p = parsed(panel, read_panel)?;
            let c = match candidates {
                Some(path) => parsed(path, read_panel)?,
                None => BTreeMap::new(),
            };
            consensus_report(&p, *threshold, &c).map_err(|e| failure(None, e))
        }
    }
}

fn num(v: &Value) -> String {
    match v.as_f64() {
        Some(x) => format!("{x:.3}"),
        None => "n/a".into(),
    }
}

/// Short human-readable rendering of a report, three decimals per number.
pub fn summary(r: &MetricsReport) -> String {
    let res = &r.results;
    let mut s = String::new();
    match r.metric.as_str() {
        "types" => {
            for k in ["wke", "acceptance", "compression", "coverage"] {
                let _ = writeln!(s, "{k:<12} {}", num(&res[k]));
            }
        }
        "keys" => {
            let _ = writeln!(s, "gt_hat {}", num(&res["gt_hat"]));
            if let Some(models) = res["models"].as_object() {
                for (m, v) in models {
                    let _ = writeln!(
                        s,
                        "{m}  p_prec {}  p_rec {}  wke {}",
                        num(&v["p_prec"]),
                        num(&v["p_rec"]),
                        num(&v["wke"])
                    );
                }
            }
        }
        "edges" => {
            let _ = writeln!(s, "products {}", r.inputs["shared_products"]);
            for level in ["keys", "values"] {
                let v = &res[level];
                let _ = writeln!(
                    s,
                    "{level:<7} precision {}  recall {}  f1 {}",
                    num(&v["precision"]),
                    num(&v["recall"]),
                    num(&v["f1"])
                );
            }
        }
        "kappa" => {
            let _ = writeln!(s, "kappa {}", num(&res["kappa"]));
        }
        "consensus" => {
            let _ = writeln!(s, "instances {}  abstained {}", r.inputs["instances"], res["abstained"]);
            for group in ["judge_accuracy", "candidate_accuracy"] {
                if let Some(m) = res[group].as_object() {
                    for (name, acc) in m {
                        let _ = writeln!(s, "{name}  accuracy {}", num(acc));
                    }
                }
            }
        }
        _ => {}
    }
    s
}
