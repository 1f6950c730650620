use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::process::ExitCode;
use std::time::Duration;

use serde_json::{json, Value};

use corrfilt::blind::{estimate_correction, Hyper};
use corrfilt::correction::{
    apply_correction, bicubic_kernel, box_kernel, correction_filter, gaussian_kernel,
    invertibility_diagnostic, read_filter, read_kernel, write_filter, write_kernel, CorrectionFilter,
};
use corrfilt::error::{Error, Result};
use corrfilt::image::{evaluate, load_image, save_image, Image};
use corrfilt::operators::{downsample, reflect_pad_to_multiple, SamplingConfig};
use corrfilt::resolver::{super_resolve, ResolverSpec};
use corrfilt::Kernel;

use crate::format::{json_num, sig6};
use crate::{
    CorrectArgs, Cmd, DiagnoseArgs, EstimateArgs, EvaluateArgs, KernelType, MakeKernelArgs,
    ResolverKind, SynthArgs, UpscaleArgs,
};

const SWEEP: [f64; 7] = [1e-14, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2];

pub fn exit_code(e: &Error) -> u8 {
    match e {
        _ if e.is_numerical() => 4,
        Error::MissingFile { .. }
        | Error::Io { .. }
        | Error::MalformedHeader { .. }
        | Error::UnsupportedFormat { .. }
        | Error::KernelFormat { .. }
        | Error::ResolverExit { .. }
        | Error::ResolverTimeout { .. }
        | Error::ResolverOutput { .. } => 3,
        _ => 2,
    }
}

pub fn run(cmd: Cmd, json: bool) -> Result<ExitCode> {
    let (report, ok) = match cmd {
        Cmd::MakeKernel(a) => (make_kernel(a)?, true),
        Cmd::Synth(a) => (synth(a)?, true),
        Cmd::Correct(a) => (correct(a)?, true),
        Cmd::Estimate(a) => (estimate(a)?, true),
        Cmd::Upscale(a) => (upscale(a)?, true),
        Cmd::Evaluate(a) => (evaluate_cmd(a)?, true),
        Cmd::Diagnose(a) => diagnose(a)?,
    };
    if json {
        println!("{}", report.json);
    } else {
        for line in report.text {
            println!("{line}");
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(4) })
}

struct Report {
    text: Vec<String>,
    json: Value,
}

fn dims(img: &Image) -> String {
    format!("{}x{}", img.height(), img.width())
}

fn make_kernel(a: MakeKernelArgs) -> Result<Report> {
    let missing = |flag: &str| Error::InvalidParameter(format!("--{flag} is required for this kernel type"));
    let k = match a.kind {
        KernelType::Bicubic => bicubic_kernel(a.scale.ok_or_else(|| missing("scale"))?)?,
        KernelType::Gaussian => {
            let sigma = a.sigma.ok_or_else(|| missing("sigma"))?;
            let size = a.size.unwrap_or(2 * (3.0 * sigma).ceil() as usize + 1);
            gaussian_kernel(sigma, size)?
        }
        KernelType::Box => box_kernel(a.width.ok_or_else(|| missing("width"))?)?,
    };
    write_kernel(&a.out, &k)?;
    let (h, w) = k.dim();
    Ok(Report {
        text: vec![format!("wrote {h}x{w} kernel, sum {}", sig6(k.sum()))],
        json: json!({"path": a.out, "height": h, "width": w, "center": k.center(), "sum": json_num(k.sum())}),
    })
}

fn synth(a: SynthArgs) -> Result<Report> {
    let hr = load_image(&a.input)?;
    let k = read_kernel(&a.kernel)?;
    let padded = reflect_pad_to_multiple(&hr, a.scale)?;
    let lr = downsample(&padded, &SamplingConfig::new(k, a.scale)?)?;
    save_image(&lr, &a.out)?;
    Ok(Report {
        text: vec![format!("{} -> {}", dims(&hr), dims(&lr))],
        json: json!({"input": dims(&hr), "padded": dims(&padded), "output": dims(&lr), "path": a.out}),
    })
}

fn max_gain(h: &CorrectionFilter) -> f64 {
    h.spectrum().modulus().iter().fold(0.0, |m, &v| m.max(v))
}

fn correct(a: CorrectArgs) -> Result<Report> {
    let y = load_image(&a.input)?;
    let k = read_kernel(&a.kernel)?;
    let reference = a.reference.as_deref().map(load_image).transpose()?;
    let border = a.border.unwrap_or(a.scale);
    let grid = y.dim();

    let h = correction_filter(&k, a.scale, grid, a.eps)?;
    let corrected = apply_correction(&y, &h)?;
    save_image(&corrected, &a.out)?;

    let mut text = vec![format!("eps {} max gain {}", sig6(a.eps), sig6(max_gain(&h)))];
    let mut js = json!({"path": a.out, "eps": a.eps, "max_gain": json_num(max_gain(&h))});
    if let Some(r) = &reference {
        let m = evaluate(&corrected, r, border)?;
        text.push(format!("{} {}", sig6(m.psnr), sig6(m.ssim)));
        js["psnr"] = json_num(m.psnr);
        js["ssim"] = json_num(m.ssim);
        js["border"] = json!(border);
    }
    if a.sweep {
        let mut rows = Vec::new();
        let mut gains = Vec::new();
        text.push(if reference.is_some() { "# eps max_gain psnr ssim" } else { "# eps max_gain" }.into());
        for eps in SWEEP {
            let hs = correction_filter(&k, a.scale, grid, eps)?;
            let gain = max_gain(&hs);
            gains.push(gain);
            let mut row = json!({"eps": eps, "max_gain": json_num(gain)});
            let mut line = format!("{} {}", sig6(eps), sig6(gain));
            if let Some(r) = &reference {
                let m = evaluate(&apply_correction(&y, &hs)?, r, border)?;
                line.push_str(&format!(" {} {}", sig6(m.psnr), sig6(m.ssim)));
                row["psnr"] = json_num(m.psnr);
                row["ssim"] = json_num(m.ssim);
            }
            text.push(line);
            rows.push(row);
        }
        // |h| = |Fn| |Fd| / (|Fd|^2 + eps) shrinks as eps grows at every frequency
        let monotone = gains.windows(2).all(|w| w[1] <= w[0]);
        text.push(format!("gain non-increasing in eps: {}", if monotone { "yes" } else { "no" }));
        js["sweep"] = Value::Array(rows);
        js["gain_monotone"] = json!(monotone);
    }
    Ok(Report { text, json: js })
}

fn estimate(a: EstimateArgs) -> Result<Report> {
    let y = load_image(&a.input)?;
    let hyper = Hyper {
        lr: a.lr,
        beta1: a.beta1,
        beta2: a.beta2,
        adam_eps: a.adam_eps,
        iterations: a.iters,
        huber_delta: a.huber_delta,
        lambda_cen: a.lambda_cen,
        lambda_sparse: a.lambda_sparse,
        filter_eps: a.eps,
    };
    let est = estimate_correction(&y, a.scale, hyper)?;
    write_kernel(&a.kernel_out, &est.kernel)?;
    write_filter(&a.filter_out, &est.filter)?;
    let f = File::create(&a.report_out).map_err(|e| io_err(&a.report_out, e))?;
    est.write_report(BufWriter::new(f)).map_err(|e| io_err(&a.report_out, e))?;

    let last = est.trace.last();
    let loss = last.map_or(f64::NAN, |t| t.total);
    let mass = est.kernel.sum();
    Ok(Report {
        text: vec![format!("iterations {} final loss {} kernel mass {}", est.trace.len(), sig6(loss), sig6(mass))],
        json: json!({
            "iterations": est.trace.len(),
            "final_loss": json_num(loss),
            "kernel_mass": json_num(mass),
            "eps": est.hyper.filter_eps,
            "lr": est.hyper.lr,
            "kernel": a.kernel_out,
            "filter": a.filter_out,
            "report": a.report_out,
        }),
    })
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source: e }
}

fn upscale(a: UpscaleArgs) -> Result<Report> {
    let y = load_image(&a.input)?;
    let h = match (&a.filter, &a.kernel) {
        (Some(p), _) => read_filter(p)?,
        (None, Some(p)) => correction_filter(&read_kernel(p)?, a.scale, y.dim(), a.eps)?,
        (None, None) => CorrectionFilter::identity(y.dim()),
    };
    let spec = match a.resolver {
        ResolverKind::Builtin => ResolverSpec::BuiltinLinear,
        ResolverKind::External => {
            if !(a.timeout > 0.0 && a.timeout.is_finite()) {
                return Err(Error::InvalidParameter("--timeout must be positive".into()));
            }
            let cmd = a.command.clone().unwrap_or_default();
            ResolverSpec::external(cmd, Duration::from_secs_f64(a.timeout))?
        }
    };
    let x = super_resolve(&y, &h, a.scale, &spec)?;
    save_image(&x, &a.out)?;
    Ok(Report {
        text: vec![format!("{} -> {}", dims(&y), dims(&x))],
        json: json!({"input": dims(&y), "output": dims(&x), "path": a.out}),
    })
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<Report> {
    let x = load_image(&a.a)?;
    let y = load_image(&a.b)?;
    let border = a.border.or(a.scale).unwrap_or(0);
    let m = evaluate(&x, &y, border)?;
    Ok(Report {
        text: vec![format!("{} {}", sig6(m.psnr), sig6(m.ssim))],
        json: json!({"psnr": json_num(m.psnr), "ssim": json_num(m.ssim), "border_shaved": m.border_shaved}),
    })
}

fn diagnose(a: DiagnoseArgs) -> Result<(Report, bool)> {
    let k: Kernel = read_kernel(&a.kernel)?;
    let d = invertibility_diagnostic(&k, a.scale, a.grid, a.threshold)?;
    let verdict = if d.pass { "pass" } else { "fail" };
    Ok((
        Report {
            text: vec![format!(
                "min modulus {} at ({}, {}), threshold {}: {verdict}",
                sig6(d.min_modulus),
                d.argmin.0,
                d.argmin.1,
                sig6(d.threshold)
            )],
            json: json!({
                "min_modulus": json_num(d.min_modulus),
                "argmin": d.argmin,
                "threshold": d.threshold,
                "pass": d.pass,
            }),
        },
        d.pass,
    ))
}
