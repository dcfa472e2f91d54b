mod args;
mod config;
mod svg;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{CommandFactory, FromArgMatches};
use hfseg_core::denoise::bilateral_filter;
use hfseg_core::image::{
    cirrus_voxel_dims_mm, load_bscan, load_cube, save_cube, save_overlay, BScan, Cube, CubeDims,
    CubeLayout, Mask, CIRRUS_HEIGHT,
};
use hfseg_core::metrics::{bland_altman, dice, icc2k, paired_t_test, pearson, PairedSeries};
use hfseg_core::mser::{build_component_tree, estimate_foci, stability, tree_dump};
use hfseg_core::phantom::{synth_phantom, PhantomSpec, CIRRUS_LIKE_BAND};
use hfseg_core::pipeline::{prepare, quantify, segment_cube, PipelineConfig};
use hfseg_core::roi::generate_roi;
use hfseg_core::study;

use args::{
    Cli, Command, DenoiseArgs, EvalArgs, PhantomArgs, SegmentArgs, SegmentCubeArgs, StageArgs,
    SweepArgs, TreeDumpArgs,
};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HFSEG_LOG", "warn"))
        .format_timestamp(None)
        .init();
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let cause = cause.to_string();
                if !msg.contains(&cause) {
                    msg = format!("{msg}: {cause}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn parse(args: Vec<OsString>) -> Result<Cli> {
    let command = Cli::command().mut_subcommands(|c| c.args_override_self(true));
    let names: Vec<String> = command
        .get_subcommands()
        .map(|c| c.get_name().to_string())
        .collect();
    let args = config::expand_args(args, &names)?;
    let matches = command.get_matches_from(args);
    Ok(Cli::from_arg_matches(&matches)?)
}

fn run(args: Vec<OsString>) -> Result<()> {
    let cli = parse(args)?;
    match cli.command {
        Command::Denoise(a) => denoise(&a),
        Command::Roi(a) => roi(&a),
        Command::Mser(a) => mser(&a),
        Command::Segment(a) => segment(&a),
        Command::SegmentCube(a) => segment_cube_cmd(&a),
        Command::Phantom(a) => phantom(&a),
        Command::Eval(a) => eval(&a),
        Command::Sweep(a) => sweep(&a),
        Command::TreeDump(a) => dump_tree(&a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn denoise(a: &DenoiseArgs) -> Result<()> {
    let img = load_bscan(&a.input)?;
    let out = bilateral_filter(&img, &a.bilateral.params())?;
    out.save(&a.out)?;
    Ok(())
}

fn roi(a: &StageArgs) -> Result<()> {
    let cfg = a.pipeline.config();
    cfg.validate()?;
    let img = load_bscan(&a.input)?;
    let outcome = generate_roi(&prepare(&img, &cfg)?, &cfg.roi)?;
    for w in &outcome.warnings {
        log::warn!("{w}");
    }
    create_dir(&a.out)?;
    outcome.mask.save(a.out.join("roi.png"))?;
    outcome.reconstructed.save(a.out.join("reconstructed.png"))?;
    let mut centroids = String::from("cluster,centroid\n");
    for (k, c) in outcome.fcm.centroids.iter().enumerate() {
        let _ = writeln!(centroids, "{k},{c}");
    }
    write_text(&a.out.join("centroids.csv"), &centroids)
}

fn mser(a: &StageArgs) -> Result<()> {
    let cfg = a.pipeline.config();
    cfg.validate()?;
    let img = load_bscan(&a.input)?;
    let (mask, regions) = estimate_foci(&prepare(&img, &cfg)?, &cfg.mser)?;
    create_dir(&a.out)?;
    mask.save(a.out.join("candidates.png"))?;
    let mut csv = String::from("node,level,area,stability,mu_row,mu_col\n");
    for r in &regions {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.node, r.level, r.area, r.stability, r.centroid[0], r.centroid[1]
        );
    }
    write_text(&a.out.join("regions.csv"), &csv)
}

fn mask_name(index: usize) -> String {
    format!("mask_{index:03}.png")
}

/// Segments `cube` and writes the report, one mask per B-scan and
/// optionally overlays.
fn write_cube_outputs(
    cube: &Cube,
    cfg: &PipelineConfig,
    jobs: usize,
    out: &Path,
    overlays: bool,
) -> Result<()> {
    let seg = segment_cube(cube, cfg, jobs)?;
    create_dir(out)?;
    for (i, mask) in seg.masks.iter().enumerate() {
        mask.save(out.join(mask_name(i)))?;
    }
    if overlays {
        let dir = out.join("overlays");
        create_dir(&dir)?;
        for (i, (img, mask)) in cube.bscans().iter().zip(&seg.masks).enumerate() {
            save_overlay(img, mask, dir.join(format!("overlay_{i:03}.png")))?;
        }
    }
    for b in &seg.report.bscans {
        if let Some(e) = &b.error {
            log::error!("b-scan {} failed: {e}", b.index);
        }
    }
    write_text(&out.join("report.json"), &seg.report.to_json())?;
    log::info!(
        "{} foci, {} voxels, {:.6} mm3",
        seg.report.focus_count,
        seg.report.voxel_count,
        seg.report.volume_mm3
    );
    Ok(())
}

fn segment(a: &SegmentArgs) -> Result<()> {
    let cfg = a.pipeline.config();
    cfg.validate()?;
    match (&a.input, &a.cube.cube) {
        (Some(input), _) => {
            let img = load_bscan(input)?;
            let cube = Cube::new(vec![img], cirrus_voxel_dims_mm())?;
            write_cube_outputs(&cube, &cfg, 1, &a.out, true)
        }
        (None, Some(path)) => {
            let cube = load_cube(path, a.cube.dims(), CubeLayout::BscanMajorU8)?;
            write_cube_outputs(&cube, &cfg, a.jobs, &a.out, a.overlays)
        }
        (None, None) => bail!("either --input or --cube is required"),
    }
}

fn segment_cube_cmd(a: &SegmentCubeArgs) -> Result<()> {
    let cfg = a.pipeline.config();
    cfg.validate()?;
    let dims = CubeDims {
        width: a.cube_width,
        height: a.cube_height,
        bscans: a.cube_bscans,
    };
    let cube = load_cube(&a.cube, dims, CubeLayout::BscanMajorU8)?;
    write_cube_outputs(&cube, &cfg, a.jobs, &a.out, a.overlays)
}

fn phantom_spec(a: &PhantomArgs, seed: u64) -> Result<PhantomSpec> {
    let scale = |row: usize| row * a.height / CIRRUS_HEIGHT;
    let band = (
        a.band_top.unwrap_or_else(|| scale(CIRRUS_LIKE_BAND.0)),
        a.band_bottom.unwrap_or_else(|| scale(CIRRUS_LIKE_BAND.1)),
    );
    let foci = a.foci.unwrap_or(6 + (seed % 7) as usize);
    Ok(PhantomSpec::random((a.width, a.height), band, foci, a.speckle, seed)?)
}

fn phantom(a: &PhantomArgs) -> Result<()> {
    if a.count == 0 {
        bail!("--count must be at least 1");
    }
    let specs = (0..a.count as u64)
        .map(|i| phantom_spec(a, a.seed + i))
        .collect::<Result<Vec<_>>>()?;
    let gt_dir = a.out.join("gt");
    create_dir(&gt_dir)?;
    let mut bscans = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let (img, gt) = synth_phantom(spec)?;
        img.save(a.out.join(format!("bscan_{i:03}.png")))?;
        gt.save(gt_dir.join(mask_name(i)))?;
        if a.cube {
            bscans.push(img);
        }
    }
    let specs_json = serde_json::to_string_pretty(&specs)?;
    write_text(&a.out.join("phantoms.json"), &specs_json)?;
    if a.cube {
        let cube = Cube::new(bscans, cirrus_voxel_dims_mm())?;
        save_cube(&cube, a.out.join("cube.raw"), CubeLayout::BscanMajorU8)?;
    }
    Ok(())
}

fn is_image(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "pgm"))
}

fn image_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if is_image(&path) {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                out.insert(name.to_string(), path.clone());
            }
        }
    }
    Ok(out)
}

/// File names present in both directories; any name present in only one is
/// an error.
fn paired_files(a: &Path, b: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let left = image_files(a)?;
    let right = image_files(b)?;
    if left.is_empty() && right.is_empty() {
        bail!("no PNG or PGM images in {} or {}", a.display(), b.display());
    }
    let only_left: Vec<&str> = left.keys().filter(|k| !right.contains_key(*k)).map(|s| s.as_str()).collect();
    let only_right: Vec<&str> = right.keys().filter(|k| !left.contains_key(*k)).map(|s| s.as_str()).collect();
    if !only_left.is_empty() || !only_right.is_empty() {
        bail!(
            "unmatched files: only in {}: [{}]; only in {}: [{}]",
            a.display(),
            only_left.join(", "),
            b.display(),
            only_right.join(", ")
        );
    }
    Ok(left
        .into_iter()
        .map(|(name, p)| {
            let q = right[&name].clone();
            (name, p, q)
        })
        .collect())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let pairs = paired_files(&a.pred, &a.gt)?;
    let dims = cirrus_voxel_dims_mm();
    let mut csv = String::from("metric,group,value,note\n");
    let mut dices = Vec::with_capacity(pairs.len());
    let (mut gt_vol, mut pred_vol) = (Vec::new(), Vec::new());
    for (name, p, g) in &pairs {
        let pred = Mask::load(p)?;
        let gt = Mask::load(g)?;
        let d = dice(&pred, &gt).with_context(|| format!("comparing {name}"))?;
        let note = if d.vacuous { "both empty" } else { "" };
        let _ = writeln!(csv, "dice,{name},{},{note}", d.value);
        dices.push(d.value);
        pred_vol.push(quantify(pred.count() as u64, dims));
        gt_vol.push(quantify(gt.count() as u64, dims));
    }
    let mean_dice = dices.iter().sum::<f64>() / dices.len() as f64;
    let _ = writeln!(csv, "dice_mean,all,{mean_dice},");

    let series = PairedSeries::new(gt_vol.clone(), pred_vol.clone())?;
    let undefined = |csv: &mut String, metric: &str, e: &dyn std::fmt::Display| {
        let _ = writeln!(csv, "{metric},volume,,undefined: {}", e.to_string().replace(',', ";"));
    };
    match pearson(&series) {
        Ok(r) => {
            let _ = writeln!(csv, "pearson_r,volume,{r},");
        }
        Err(e) => undefined(&mut csv, "pearson_r", &e),
    }
    match paired_t_test(&series) {
        Ok(t) => {
            let note = if t.degenerate { "zero spread" } else { "" };
            let _ = writeln!(csv, "t_statistic,volume,{},{note}", t.t);
            let _ = writeln!(csv, "t_df,volume,{},", t.df);
            let _ = writeln!(csv, "t_p,volume,{},{note}", t.p);
        }
        Err(e) => undefined(&mut csv, "t_test", &e),
    }
    match bland_altman(&series) {
        Ok(ba) => {
            let _ = writeln!(csv, "ba_bias,volume,{},", ba.bias);
            let _ = writeln!(csv, "ba_lower,volume,{},", ba.lower);
            let _ = writeln!(csv, "ba_upper,volume,{},", ba.upper);
        }
        Err(e) => undefined(&mut csv, "bland_altman", &e),
    }
    let ratings: Vec<Vec<f64>> = gt_vol.iter().zip(&pred_vol).map(|(&g, &p)| vec![g, p]).collect();
    match icc2k(&ratings) {
        Ok(icc) => {
            let _ = writeln!(csv, "icc2k,volume,{},", icc.icc);
            let _ = writeln!(csv, "icc2k_ci_low,volume,{},", icc.ci_low);
            let _ = writeln!(csv, "icc2k_ci_high,volume,{},", icc.ci_high);
        }
        Err(e) => undefined(&mut csv, "icc2k", &e),
    }
    write_or_print(a.out.as_deref(), &csv)
}

fn load_cases(a: &SweepArgs) -> Result<Vec<(BScan, Mask)>> {
    match (&a.images, &a.gt_dir) {
        (Some(images), Some(gt)) => paired_files(images, gt)?
            .into_iter()
            .map(|(_, i, g)| Ok((load_bscan(i)?, Mask::load(g)?)))
            .collect(),
        _ => {
            if a.phantoms == 0 {
                bail!("--phantoms must be at least 1");
            }
            (0..a.phantoms as u64)
                .map(|i| {
                    let spec = PhantomSpec::cirrus_like(a.pipeline.seed + i)?;
                    Ok(synth_phantom(&spec)?)
                })
                .collect()
        }
    }
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let base = a.pipeline.config();
    let axis = a.axis.study_axis();
    for &v in &a.values {
        axis.apply(&base, v)
            .with_context(|| format!("sweep value {v} for {}", axis.name()))?;
    }
    let cases = load_cases(a)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()?;
    let points = pool.install(|| study::sweep(&cases, &base, axis, &a.values))?;

    create_dir(&a.out)?;
    let mut csv = String::from("value,dsc\n");
    for p in &points {
        let _ = writeln!(csv, "{},{}", p.value, p.dice);
    }
    write_text(&a.out.join("sweep.csv"), &csv)?;
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.value, p.dice)).collect();
    let plot = svg::line_plot(
        &format!("Dice vs {}", axis.name()),
        axis.name(),
        "mean Dice (%)",
        &xy,
    );
    write_text(&a.out.join("sweep.svg"), &plot)
}

fn dump_tree(a: &TreeDumpArgs) -> Result<()> {
    let params = a.mser.params();
    params.validate()?;
    let img = load_bscan(&a.input)?;
    let img = if a.denoise {
        bilateral_filter(&img, &a.bilateral.params())?.quantized()
    } else {
        img.quantized()
    };
    let tree = build_component_tree(&img)?;
    let psi = stability(&tree, params.delta_gray())?;
    write_or_print(a.out.as_deref(), &tree_dump(&tree, &psi))
}
