//! Plain-text persistence of fitted models.
//!
//! Format (version 1), one record per line:
//!
//! ```text
//! vkrr-model 1
//! kernel designed-decay <i_max> <p> [<scale>]
//!        | designed-eigs <mu_1> <mu_2> ...
//!        | gaussian <lengthscale> | laplacian <lengthscale> | matern <nu>
//! lambda <value>
//! shape <n> <d_y>
//! x <x_1> ... <x_n>
//! w <w_t1> ... <w_t d_Y>        (n lines, one per training point)
//! ```
//!
//! Floats are written in shortest round-trip form, so save/load is exact.
//! Models fitted through an output factor are not persisted; refit instead.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use vkrr_core::estimator::FittedModel;
use vkrr_core::kernel::{KernelFamily, KernelSpec, MaternOrder};
use vkrr_core::spectral::SpectralModel;

pub fn save_model(model: &FittedModel, path: &Path) -> Result<(), String> {
    if model.output_factor().is_some() {
        return Err("models fitted through an output factor are not persisted".to_string());
    }
    let mut s = String::from("vkrr-model 1\n");
    match model.kernel().family() {
        KernelFamily::DesignedMercer(spec) => match spec.decay_p() {
            Some(p) => {
                let _ = writeln!(
                    s,
                    "kernel designed-decay {} {} {}",
                    spec.i_max(),
                    p,
                    spec.decay_scale()
                );
            }
            None => {
                let list: Vec<String> =
                    spec.eigenvalues().iter().map(|v| v.to_string()).collect();
                let _ = writeln!(s, "kernel designed-eigs {}", list.join(" "));
            }
        },
        KernelFamily::Gaussian { lengthscale } => {
            let _ = writeln!(s, "kernel gaussian {lengthscale}");
        }
        KernelFamily::Laplacian { lengthscale } => {
            let _ = writeln!(s, "kernel laplacian {lengthscale}");
        }
        KernelFamily::Matern { order } => {
            let _ = writeln!(s, "kernel matern {}", order.nu());
        }
    }
    let _ = writeln!(s, "lambda {}", model.lambda());
    let n = model.train_x().len();
    let d_y = model.weights().ncols();
    let _ = writeln!(s, "shape {n} {d_y}");
    let xs: Vec<String> = model.train_x().iter().map(|v| v.to_string()).collect();
    let _ = writeln!(s, "x {}", xs.join(" "));
    for t in 0..n {
        let row: Vec<String> = model.weights().row(t).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "w {}", row.join(" "));
    }
    std::fs::write(path, s).map_err(|e| format!("writing {}: {e}", path.display()))
}

fn parse_floats(fields: &[&str]) -> Result<Vec<f64>, String> {
    fields
        .iter()
        .map(|f| f.parse::<f64>().map_err(|e| format!("bad float '{f}': {e}")))
        .collect()
}

pub fn load_model(path: &Path) -> Result<FittedModel, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    let mut lines = text.lines();
    if lines.next() != Some("vkrr-model 1") {
        return Err("unrecognized model header".to_string());
    }
    let kernel_line = lines.next().ok_or("missing kernel line")?;
    let fields: Vec<&str> = kernel_line.split_whitespace().collect();
    let kernel = match fields.as_slice() {
        ["kernel", "designed-decay", i_max, p, scale] => {
            let spec = SpectralModel::from_decay_scaled(
                i_max.parse().map_err(|e| format!("i_max: {e}"))?,
                p.parse().map_err(|e| format!("p: {e}"))?,
                scale.parse().map_err(|e| format!("scale: {e}"))?,
            )
            .map_err(|e| format!("spectral model: {e}"))?;
            KernelSpec::designed_mercer(Arc::new(spec))
        }
        ["kernel", "designed-eigs", rest @ ..] => {
            let spec = SpectralModel::from_eigenvalues(parse_floats(rest)?)
                .map_err(|e| format!("spectral model: {e}"))?;
            KernelSpec::designed_mercer(Arc::new(spec))
        }
        ["kernel", "gaussian", ls] => KernelSpec::gaussian(
            ls.parse().map_err(|e| format!("lengthscale: {e}"))?,
        )
        .map_err(|e| format!("kernel: {e}"))?,
        ["kernel", "laplacian", ls] => KernelSpec::laplacian(
            ls.parse().map_err(|e| format!("lengthscale: {e}"))?,
        )
        .map_err(|e| format!("kernel: {e}"))?,
        ["kernel", "matern", nu] => KernelSpec::matern(
            MaternOrder::from_nu(nu.parse().map_err(|e| format!("nu: {e}"))?)
                .map_err(|e| format!("kernel: {e}"))?,
        ),
        _ => return Err(format!("unrecognized kernel line '{kernel_line}'")),
    };

    let lambda_line = lines.next().ok_or("missing lambda line")?;
    let lambda: f64 = lambda_line
        .strip_prefix("lambda ")
        .ok_or("malformed lambda line")?
        .parse()
        .map_err(|e| format!("lambda: {e}"))?;

    let shape_line = lines.next().ok_or("missing shape line")?;
    let shape: Vec<&str> = shape_line.split_whitespace().collect();
    let (n, d_y) = match shape.as_slice() {
        ["shape", n, d] => (
            n.parse::<usize>().map_err(|e| format!("n: {e}"))?,
            d.parse::<usize>().map_err(|e| format!("d_y: {e}"))?,
        ),
        _ => return Err("malformed shape line".to_string()),
    };

    let x_line = lines.next().ok_or("missing x line")?;
    let x_fields: Vec<&str> = x_line
        .strip_prefix("x ")
        .ok_or("malformed x line")?
        .split_whitespace()
        .collect();
    let train_x = parse_floats(&x_fields)?;
    if train_x.len() != n {
        return Err(format!("expected {n} covariates, found {}", train_x.len()));
    }

    let mut weights = DMatrix::zeros(n, d_y);
    for t in 0..n {
        let line = lines.next().ok_or_else(|| format!("missing weight row {t}"))?;
        let fields: Vec<&str> = line
            .strip_prefix("w ")
            .ok_or_else(|| format!("malformed weight row {t}"))?
            .split_whitespace()
            .collect();
        let row = parse_floats(&fields)?;
        if row.len() != d_y {
            return Err(format!("weight row {t}: expected {d_y} entries"));
        }
        for (j, v) in row.into_iter().enumerate() {
            weights[(t, j)] = v;
        }
    }

    FittedModel::from_parts(kernel, train_x, weights, lambda)
        .map_err(|e| format!("model: {e}"))
}
