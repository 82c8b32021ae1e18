//! `svm v1` text format. Reals are written with 17 significant digits so a
//! load/save cycle reproduces the file byte for byte.

use std::fs;
use std::path::Path;

use super::{BinarySvm, Kernel, SvmModel};
use crate::error::{Error, Result};
use crate::util::{fmt_real, Lines};

pub fn write_model(model: &SvmModel) -> String {
    let mut out = String::from("svm v1\n");
    match model.kernel {
        Kernel::Linear => out.push_str("kernel linear\n"),
        Kernel::Rbf { gamma } => out.push_str(&format!("kernel rbf {}\n", fmt_real(gamma))),
    }
    out.push_str(&format!("c {}\n", fmt_real(model.c)));
    out.push_str(&format!("feature_len {}\n", model.feature_len));
    out.push_str(&format!("n_classes {}\n", model.submodels.len()));
    for (k, sub) in model.submodels.iter().enumerate() {
        out.push_str(&format!("submodel {k} {} {}\n", sub.support.len(), fmt_real(sub.rho)));
        for (sv, coef) in sub.support.iter().zip(&sub.coef) {
            out.push_str("sv ");
            out.push_str(&fmt_real(*coef));
            for v in sv {
                out.push(' ');
                out.push_str(&fmt_real(*v));
            }
            out.push('\n');
        }
    }
    out
}

pub fn parse_model(text: &str) -> Result<SvmModel> {
    let mut lines = Lines::new(text);
    lines.expect_exact("svm v1")?;
    let kernel_fields = lines.keyed("kernel")?;
    let kernel = match kernel_fields.as_slice() {
        ["linear"] => Kernel::Linear,
        ["rbf", g] => Kernel::Rbf { gamma: lines.real(g)? },
        _ => return Err(lines.error("bad kernel line")),
    };
    let c = lines.single_real("c")?;
    let feature_len = lines.single_usize("feature_len")?;
    let n_classes = lines.single_usize("n_classes")?;
    let mut submodels = Vec::with_capacity(n_classes);
    for k in 0..n_classes {
        let f = lines.keyed("submodel")?;
        if f.len() != 3 || lines.usize(f[0])? != k {
            return Err(lines.error("bad submodel header"));
        }
        let n_sv = lines.usize(f[1])?;
        let rho = lines.real(f[2])?;
        let mut support = Vec::with_capacity(n_sv);
        let mut coef = Vec::with_capacity(n_sv);
        for _ in 0..n_sv {
            let f = lines.keyed("sv")?;
            if f.len() != feature_len + 1 {
                return Err(lines.error("support vector has wrong length"));
            }
            coef.push(lines.real(f[0])?);
            support.push(f[1..].iter().map(|t| lines.real(t)).collect::<Result<_>>()?);
        }
        submodels.push(BinarySvm { support, coef, rho });
    }
    lines.expect_end()?;
    Ok(SvmModel {
        kernel,
        c,
        feature_len,
        submodels,
    })
}

pub fn save_model(path: &Path, model: &SvmModel) -> Result<()> {
    fs::write(path, write_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<SvmModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}
